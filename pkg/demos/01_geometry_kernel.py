"""Tour of the geometry kernel: profiles, sweeps, booleans, membership.

Solids are boolean expression trees over two sweep primitives.  Nothing
is ever trimmed explicitly; membership of any point is evaluated on
demand, which is all the rest of the stack needs.

Run:  python demos/01_geometry_kernel.py
"""

import math

import numpy as np

from cadgym import (ArcSegment, Extrude, LineSegment, Plane, Profile,
                    Revolve, Solid, circle, rectangle)

# -- a cube is a square profile swept along its plane normal ---------------

xy = Plane((0, 0, 0), (1, 0, 0), (0, 1, 0))
cube = Solid.from_primitive(Extrude(rectangle(xy, 0, 0, 1, 1), 1.0))
print("cube volume at 64^3 voxels:", round(cube.estimate_volume(64), 4))
print("center is", cube.classify_point((0.5, 0.5, 0.5)).name)
print("top-face point is", cube.classify_point((0.5, 0.5, 1.0)).name)

# -- a torus is an off-axis circle revolved about z -------------------------

rz = Plane((0, 0, 0), (1, 0, 0), (0, 0, 1))   # (radius, height) half-plane
torus = Solid.from_primitive(
    Revolve(circle(rz, 1.0, 0.0, 0.25), (0, 0, 0), (0, 0, 1), 2 * math.pi))
pappus = 2 * math.pi ** 2 * 1.0 * 0.25 ** 2
print(f"torus volume {torus.estimate_volume(64):.4f} vs Pappus {pappus:.4f}")

# -- a sphere: semicircular arc closed by a diameter on the axis -------------

arc = ArcSegment((0.0, 0.0), 0.8, -math.pi / 2, math.pi / 2, True)
semi = Profile(rz, [arc, LineSegment(tuple(arc.end()), tuple(arc.start()))])
sphere = Solid.from_primitive(Revolve(semi, (0, 0, 0), (0, 0, 1), 2 * math.pi))
print(f"sphere volume {sphere.estimate_volume(64):.4f} "
      f"vs analytic {4 / 3 * math.pi * 0.8 ** 3:.4f}")

# -- booleans compose trees; evaluation combines leaf memberships -----------

drilled = cube.subtract(
    Solid.from_primitive(
        Extrude(circle(Plane((0, 0, -0.5), (1, 0, 0), (0, 1, 0)),
                       0.5, 0.5, 0.2), 2.0)))
print(f"cube minus drilled hole: {drilled.estimate_volume(64):.4f} "
      f"vs {1 - math.pi * 0.04:.4f}")

# membership of many points at once is the kernel's workhorse
rng = np.random.default_rng(0)
pts = rng.uniform(-0.2, 1.2, size=(100000, 3))
codes = drilled.classify_many(pts)
print("random points inside/boundary/outside:",
      int((codes == 1).sum()), int((codes == 0).sum()),
      int((codes == -1).sum()))
