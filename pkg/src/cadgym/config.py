"""Global tolerances and dimensioning constants.

All solids are expected to live in a normalized model box around the
origin, so absolute tolerances are meaningful; boundary tolerances are
scale-relative (fractions of the bounding-box diagonal).
"""

# Absolute geometric tolerance, model units (profile closure, degeneracy).
TOL_GEOM = 1e-6

# Boundary-band width and side-probe offset, as fractions of the root
# solid's bounding-box diagonal.
TOL_ON_REL = 1e-4
BOUNDARY_EPS_REL = 1e-4

# Lower clamp for the feature-normalization extent.
DELTA_FLOOR = 1e-2

# UV sampling grid per face (10x10 = 100 samples).
UV_GRID = 10

# Fine grid used when polygonizing a trimmed planar region.
TRIM_GRID = 64

# Surface-type one-hot vocabulary (fixed width 8).
SURFACE_TYPES = (
    "plane",
    "cylinder",
    "cone",
    "sphere",
    "torus",
    "bezier",
    "bspline",
    "other",
)
SURFACE_TYPE_INDEX = {name: i for i, name in enumerate(SURFACE_TYPES)}

FEATURE_WIDTH = 8 + 300 + 300 + 100  # = 708

BOOL_OPS = ("newbody", "intersection", "union", "subtraction")
