"""Analytic host surfaces for boundary faces.

Parameterization conventions: surfaces of revolution use u = angle about
the axis and v = generatrix parameter (axial coordinate for cylinders,
arclength for cones, colatitude from the +axis pole for spheres, minor
angle for tori).  Planes use Cartesian (u, v) in the plane frame.

Normals returned by ``evaluate`` follow the host primitive's outward
side via ``sign``; the composite solid may flip them per sample.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import OutOfDomain
from .plane import unit

TWO_PI = 2.0 * math.pi
_DOMAIN_SLACK = 1e-9


class _SurfaceBase:
    def _check_domain(self, u, v):
        u0, u1, v0, v1 = self.domain
        slack_u = _DOMAIN_SLACK * (1.0 + abs(u1 - u0))
        slack_v = _DOMAIN_SLACK * (1.0 + abs(v1 - v0))
        if np.any(u < u0 - slack_u) or np.any(u > u1 + slack_u) \
                or np.any(v < v0 - slack_v) or np.any(v > v1 + slack_v):
            raise OutOfDomain(
                f"(u, v) outside domain {self.domain} for {type(self).__name__}")

    def evaluate(self, u, v):
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        self._check_domain(u, v)
        return self._eval(np.atleast_1d(u), np.atleast_1d(v))

    def grid(self, n):
        """Midpoint-uniform n*n parameter grid over the domain."""
        u0, u1, v0, v1 = self.domain
        us = u0 + (u1 - u0) * (np.arange(n) + 0.5) / n
        vs = v0 + (v1 - v0) * (np.arange(n) + 0.5) / n
        uu, vv = np.meshgrid(us, vs, indexing="ij")
        return uu.ravel(), vv.ravel()

    def sample_spacing(self, n):
        """Largest 3D step between adjacent grid samples (adjacency radius)."""
        u, v = self.grid(n)
        pts, _ = self.evaluate(u, v)
        pts = pts.reshape(n, n, 3)
        du = np.linalg.norm(np.diff(pts, axis=0), axis=2)
        dv = np.linalg.norm(np.diff(pts, axis=1), axis=2)
        return float(max(du.max(initial=0.0), dv.max(initial=0.0)))


class PlaneSurface(_SurfaceBase):
    surface_type = "plane"

    def __init__(self, frame, domain, sign=1.0, host_profile=None):
        self.frame = frame
        self.domain = tuple(map(float, domain))
        self.sign = float(sign)
        # exact region bounded by this face when it is a full sweep cap
        self.host_profile = host_profile

    def _eval(self, u, v):
        pts = self.frame.to_world(np.stack((u, v), axis=1))
        nrm = np.broadcast_to(self.sign * self.frame.normal, pts.shape).copy()
        return pts, nrm

    def area_element(self, u, v):
        return np.ones_like(np.asarray(u, dtype=float))

    @property
    def plane_normal(self):
        return self.sign * self.frame.normal

    def plane_offset(self):
        return float(np.dot(self.frame.origin, self.frame.normal))


class _RevolvedBase(_SurfaceBase):
    def __init__(self, axis_origin, axis_dir, radial_ref, domain, sign=1.0):
        self.axis_origin = np.asarray(axis_origin, dtype=float)
        self.axis_dir = unit(axis_dir)
        self.radial_ref = unit(radial_ref)
        self.tangent_ref = np.cross(self.axis_dir, self.radial_ref)
        self.domain = tuple(map(float, domain))
        self.sign = float(sign)

    def _radial(self, u):
        return (np.outer(np.cos(u), self.radial_ref)
                + np.outer(np.sin(u), self.tangent_ref))


class CylinderSurface(_RevolvedBase):
    surface_type = "cylinder"

    def __init__(self, axis_origin, axis_dir, radial_ref, radius, domain, sign=1.0):
        super().__init__(axis_origin, axis_dir, radial_ref, domain, sign)
        self.radius = float(radius)

    def _eval(self, u, v):
        rad = self._radial(u)
        pts = self.axis_origin + self.radius * rad + np.outer(v, self.axis_dir)
        return pts, self.sign * rad

    def area_element(self, u, v):
        return np.full_like(np.asarray(u, dtype=float), self.radius)


class ConeSurface(_RevolvedBase):
    """Generatrix from (r0, z0) to (r1, z1) in the (radius, height) plane."""

    surface_type = "cone"

    def __init__(self, axis_origin, axis_dir, radial_ref, rz0, rz1, u_range, sign=1.0):
        self.rz0 = tuple(map(float, rz0))
        self.rz1 = tuple(map(float, rz1))
        self.length = math.hypot(self.rz1[0] - self.rz0[0], self.rz1[1] - self.rz0[1])
        domain = (u_range[0], u_range[1], 0.0, self.length)
        super().__init__(axis_origin, axis_dir, radial_ref, domain, sign)
        dr = (self.rz1[0] - self.rz0[0]) / self.length
        dz = (self.rz1[1] - self.rz0[1]) / self.length
        self._dir_rz = (dr, dz)
        self._out_rz = (dz, -dr)

    def _rz(self, v):
        dr, dz = self._dir_rz
        return self.rz0[0] + v * dr, self.rz0[1] + v * dz

    def _eval(self, u, v):
        r, z = self._rz(v)
        rad = self._radial(u)
        pts = self.axis_origin + r[:, None] * rad + np.outer(z, self.axis_dir)
        orr, orz = self._out_rz
        nrm = orr * rad + orz * self.axis_dir
        return pts, self.sign * nrm

    def area_element(self, u, v):
        r, _ = self._rz(np.asarray(v, dtype=float))
        return np.abs(r)


class SphereSurface(_RevolvedBase):
    """Zone of a sphere; v is colatitude measured from the +axis pole."""

    surface_type = "sphere"

    def __init__(self, center, axis_dir, radial_ref, radius, u_range, v_range,
                 sign=1.0):
        domain = (u_range[0], u_range[1], v_range[0], v_range[1])
        super().__init__(center, axis_dir, radial_ref, domain, sign)
        self.center = self.axis_origin
        self.radius = float(radius)

    def _eval(self, u, v):
        rad = self._radial(u)
        nrm = np.sin(v)[:, None] * rad + np.outer(np.cos(v), self.axis_dir)
        pts = self.center + self.radius * nrm
        return pts, self.sign * nrm

    def area_element(self, u, v):
        return self.radius**2 * np.abs(np.sin(np.asarray(v, dtype=float)))


class TorusSurface(_RevolvedBase):
    """Patch of a torus; v is the angle around the minor circle."""

    surface_type = "torus"

    def __init__(self, axis_origin, axis_dir, radial_ref, major, minor,
                 u_range, v_range, sign=1.0, center_z=0.0):
        domain = (u_range[0], u_range[1], v_range[0], v_range[1])
        super().__init__(axis_origin, axis_dir, radial_ref, domain, sign)
        self.major = float(major)
        self.minor = float(minor)
        self.center_z = float(center_z)

    def _eval(self, u, v):
        rad = self._radial(u)
        r = self.major + self.minor * np.cos(v)
        z = self.center_z + self.minor * np.sin(v)
        pts = self.axis_origin + r[:, None] * rad + np.outer(z, self.axis_dir)
        nrm = np.cos(v)[:, None] * rad + np.outer(np.sin(v), self.axis_dir)
        return pts, self.sign * nrm

    def area_element(self, u, v):
        v = np.asarray(v, dtype=float)
        return self.minor * np.abs(self.major + self.minor * np.cos(v))


def eval_surface(surface, u, v):
    """Single-point convenience wrapper: returns (point, unit normal)."""
    pts, nrm = surface.evaluate(np.asarray([u], dtype=float),
                                np.asarray([v], dtype=float))
    n = nrm[0]
    return pts[0], n / np.linalg.norm(n)
