"""Swept-profile primitives: extrusions and revolutions.

Classification is three-valued: -1 outside, 0 within the boundary band,
+1 inside.  Both primitives reduce membership to a 2D profile query plus
one extra coordinate (slab position for extrudes, sweep angle for
revolves).
"""

from __future__ import annotations

import math

import numpy as np

from ..config import TOL_GEOM
from ..errors import GeometryError
from .plane import Plane, unit
from .profile import Profile

TWO_PI = 2.0 * math.pi

OUTSIDE = np.int8(-1)
ON_BOUNDARY = np.int8(0)
INSIDE = np.int8(1)


class Extrude:
    """``profile`` swept along its plane normal by ``distance``."""

    kind = "extrude"

    def __init__(self, profile: Profile, distance: float):
        if distance <= TOL_GEOM:
            raise GeometryError("extrude distance must exceed the geometric tolerance")
        self.profile = profile
        self.distance = float(distance)
        self.direction = profile.plane.normal
        self._bbox = self.bbox()

    def classify(self, points, tol):
        return _with_bbox_prefilter(self, points, tol)

    def _classify_inner(self, points, tol):
        local = self.profile.plane.to_local(points)
        w = local[:, 2]
        axial = np.full(len(w), OUTSIDE, dtype=np.int8)
        axial[(w > tol) & (w < self.distance - tol)] = INSIDE
        axial[(np.abs(w) <= tol) | (np.abs(w - self.distance) <= tol)] = ON_BOUNDARY
        out = np.full(len(w), OUTSIDE, dtype=np.int8)
        in_slab = axial >= ON_BOUNDARY
        if in_slab.any():
            lateral = self.profile.classify2d(local[in_slab, :2], tol)
            out[in_slab] = np.minimum(lateral, axial[in_slab])
        return out

    def bbox(self):
        x0, y0, x1, y1 = self.profile.bbox2d
        corners = self.profile.plane.to_world(
            [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]
        )
        pts = np.vstack([corners, corners + self.distance * self.direction])
        return np.min(pts, axis=0), np.max(pts, axis=0)

    def transformed(self, scale, offset):
        plane = Plane(self.profile.plane.origin * scale + offset,
                      self.profile.plane.u, self.profile.plane.v)
        return Extrude(self.profile.scaled(scale, plane), self.distance * scale)

    def signature(self):
        return ("extrude", round(self.distance, 9),
                _plane_sig(self.profile.plane), _profile_sig(self.profile))


class Revolve:
    """``profile`` in the (radius, height) half-plane swept about an axis.

    The profile plane is spanned by ``radial_ref`` (the 2D x axis, radial
    distance from the axis) and ``axis_dir`` (the 2D y axis).  The sweep
    runs from the profile plane toward ``axis_dir x radial_ref``... i.e.
    right-handed about the axis, through ``angle`` radians.
    """

    kind = "revolve"

    def __init__(self, profile: Profile, axis_origin, axis_dir, angle: float):
        if not (TOL_GEOM < angle <= TWO_PI + 1e-9):
            raise GeometryError("revolve angle must lie in (0, 2*pi]")
        self.angle = min(float(angle), TWO_PI)
        self.axis_origin = np.asarray(axis_origin, dtype=float)
        self.axis_dir = unit(axis_dir)
        plane = profile.plane
        if abs(float(np.dot(plane.v, self.axis_dir)) - 1.0) > 1e-9:
            raise GeometryError("revolve profile plane v-axis must equal the axis direction")
        if abs(float(np.dot(plane.u, self.axis_dir))) > 1e-9:
            raise GeometryError("revolve profile u-axis must be radial")
        off = plane.origin - self.axis_origin
        radial_off = off - np.dot(off, self.axis_dir) * self.axis_dir
        if np.linalg.norm(radial_off) > 1e-9:
            raise GeometryError("revolve profile plane origin must lie on the axis")
        xmin = profile.bbox2d[0]
        if xmin < -TOL_GEOM:
            raise GeometryError("revolve profile crosses the axis")
        self.profile = profile
        self.radial_ref = plane.u
        self.tangent_ref = np.cross(self.axis_dir, self.radial_ref)
        self._bbox = self.bbox()

    @property
    def full(self):
        return self.angle >= TWO_PI - 1e-9

    def _cylindrical(self, points):
        rel = np.atleast_2d(np.asarray(points, dtype=float)) - self.axis_origin
        z = rel @ self.axis_dir
        radial = rel - np.outer(z, self.axis_dir)
        r = np.linalg.norm(radial, axis=1)
        theta = np.arctan2(radial @ self.tangent_ref, radial @ self.radial_ref)
        theta = np.mod(theta, TWO_PI)
        return r, z, theta

    def classify(self, points, tol):
        return _with_bbox_prefilter(self, points, tol)

    def _classify_inner(self, points, tol):
        r, z, theta = self._cylindrical(points)
        lateral = self.profile.classify2d(np.stack((r, z), axis=1), tol)
        if self.full:
            return lateral
        ang = np.full(len(r), OUTSIDE, dtype=np.int8)
        margin = tol / np.maximum(r, max(tol, 1e-12))
        ang[(theta > margin) & (theta < self.angle - margin)] = INSIDE
        near_seam = (theta <= margin) | (theta >= TWO_PI - margin)
        near_end = np.abs(theta - self.angle) <= margin
        ang[near_seam | near_end] = ON_BOUNDARY
        ang[r <= tol] = ON_BOUNDARY
        return np.minimum(lateral, ang)

    def bbox(self):
        x0, y0, x1, y1 = self.profile.bbox2d
        rmax = max(x1, 0.0)
        d = self.axis_dir
        s = np.sqrt(np.maximum(1.0 - d * d, 0.0))
        zs = np.array([y0, y1])
        lo = self.axis_origin + np.minimum(zs[0] * d, zs[1] * d) - rmax * s
        hi = self.axis_origin + np.maximum(zs[0] * d, zs[1] * d) + rmax * s
        return lo, hi

    def transformed(self, scale, offset):
        origin = self.axis_origin * scale + offset
        plane = Plane(origin, self.radial_ref, self.axis_dir)
        return Revolve(self.profile.scaled(scale, plane), origin, self.axis_dir,
                       self.angle)

    def signature(self):
        return ("revolve", round(self.angle, 9),
                tuple(np.round(self.axis_origin, 9)),
                tuple(np.round(self.axis_dir, 9)),
                tuple(np.round(self.radial_ref, 9)),
                _profile_sig(self.profile))


def _with_bbox_prefilter(prim, points, tol):
    """Points outside the primitive's box are outside; skip the exact test."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    lo, hi = prim._bbox
    near = np.all((points >= lo - tol) & (points <= hi + tol), axis=1)
    out = np.full(len(points), OUTSIDE, dtype=np.int8)
    if near.any():
        out[near] = prim._classify_inner(points[near], tol)
    return out


def _plane_sig(plane):
    return (tuple(np.round(plane.origin, 9)), tuple(np.round(plane.u, 9)),
            tuple(np.round(plane.v, 9)))


def _profile_sig(profile):
    out = []
    for seg in profile.segments:
        d = seg.__class__.__name__
        if d == "LineSegment":
            out.append(("L", round(seg.p0[0], 9), round(seg.p0[1], 9),
                        round(seg.p1[0], 9), round(seg.p1[1], 9)))
        else:
            out.append(("A", round(seg.center[0], 9), round(seg.center[1], 9),
                        round(seg.radius, 9), round(seg.start_angle, 9),
                        round(seg.end_angle, 9), seg.ccw))
    return tuple(out)
