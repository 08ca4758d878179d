"""Canonical solids used by demos, the CLI, and tests."""

from __future__ import annotations

import math

from .geometry.plane import Plane
from .geometry.primitive import Extrude, Revolve
from .geometry.profile import (ArcSegment, LineSegment, Profile, circle,
                               rectangle)
from .geometry.solid import Solid

TWO_PI = 2.0 * math.pi


def xy_plane(origin=(0, 0, 0)):
    return Plane(origin, (1, 0, 0), (0, 1, 0))


def rz_plane(origin=(0, 0, 0), axis=(0, 0, 1), radial=(1, 0, 0)):
    return Plane(origin, radial, axis)


def unit_cube():
    return Solid.from_primitive(Extrude(rectangle(xy_plane(), 0, 0, 1, 1), 1.0))


def box(x0, y0, z0, x1, y1, z1):
    prof = rectangle(xy_plane((0, 0, z0)), x0, y0, x1, y1)
    return Solid.from_primitive(Extrude(prof, z1 - z0))


def full_cylinder(radius=1.0, height=2.0):
    prof = Profile(rz_plane(), [
        LineSegment((0, 0), (radius, 0)),
        LineSegment((radius, 0), (radius, height)),
        LineSegment((radius, height), (0, height)),
        LineSegment((0, height), (0, 0)),
    ])
    return Solid.from_primitive(Revolve(prof, (0, 0, 0), (0, 0, 1), TWO_PI))


def full_sphere(radius=1.0):
    arc = ArcSegment((0.0, 0.0), radius, -math.pi / 2, math.pi / 2, True)
    prof = Profile(rz_plane(), [arc, LineSegment(tuple(arc.end()),
                                                 tuple(arc.start()))])
    return Solid.from_primitive(Revolve(prof, (0, 0, 0), (0, 0, 1), TWO_PI))


def ring_torus(major=1.0, minor=0.25):
    prof = circle(rz_plane(), major, 0.0, minor)
    return Solid.from_primitive(Revolve(prof, (0, 0, 0), (0, 0, 1), TWO_PI))


def cube_with_pocket():
    """Unit cube with a blind square pocket cut into the top."""
    cutter = Extrude(rectangle(xy_plane((0, 0, 0.5)), 0.3, 0.3, 0.7, 0.7), 0.8)
    return unit_cube().subtract(Solid.from_primitive(cutter))


def cube_with_boss():
    """Unit cube with a smaller block protruding through the top."""
    boss = Extrude(rectangle(xy_plane((0, 0, 1.0)), 0.35, 0.35, 0.65, 0.65), 0.4)
    return unit_cube().union(Solid.from_primitive(boss))


FIXTURES = {
    "cube": unit_cube,
    "cylinder": full_cylinder,
    "sphere": full_sphere,
    "torus": ring_torus,
    "pocket": cube_with_pocket,
    "boss": cube_with_boss,
}


def fixture(name):
    if name not in FIXTURES:
        raise KeyError(f"unknown fixture {name!r}; have {sorted(FIXTURES)}")
    return FIXTURES[name]()
