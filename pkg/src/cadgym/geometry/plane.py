"""Oriented planes with an orthonormal (u, v, normal) frame."""

from __future__ import annotations

import numpy as np

from ..errors import GeometryError


def unit(v):
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if n < 1e-12:
        raise GeometryError("cannot normalize near-zero vector")
    return v / n


def any_perpendicular(n):
    """Some unit vector perpendicular to unit vector ``n`` (deterministic)."""
    n = np.asarray(n, dtype=float)
    # pick the world axis least aligned with n
    k = int(np.argmin(np.abs(n)))
    e = np.zeros(3)
    e[k] = 1.0
    return unit(np.cross(n, e))


class Plane:
    """A plane through ``origin`` with right-handed frame (u, v, normal)."""

    __slots__ = ("origin", "u", "v", "normal")

    def __init__(self, origin, u, v):
        self.origin = np.asarray(origin, dtype=float)
        self.u = unit(u)
        self.v = unit(v)
        if abs(float(np.dot(self.u, self.v))) > 1e-9:
            raise GeometryError("plane frame axes not orthogonal")
        self.normal = unit(np.cross(self.u, self.v))

    @classmethod
    def from_normal(cls, origin, normal, u_hint=None):
        n = unit(normal)
        if u_hint is not None:
            u = np.asarray(u_hint, dtype=float)
            u = u - np.dot(u, n) * n
            if np.linalg.norm(u) < 1e-9:
                u = any_perpendicular(n)
            else:
                u = unit(u)
        else:
            u = any_perpendicular(n)
        v = np.cross(n, u)
        return cls(origin, u, v)

    def to_local(self, points):
        """World points -> (n,3) local coords [u, v, w] with w along normal."""
        p = np.atleast_2d(np.asarray(points, dtype=float)) - self.origin
        return np.stack((p @ self.u, p @ self.v, p @ self.normal), axis=1)

    def to_world(self, uv, w=0.0):
        uv = np.atleast_2d(np.asarray(uv, dtype=float))
        w = np.broadcast_to(np.asarray(w, dtype=float), uv.shape[:1])
        return (
            self.origin
            + np.outer(uv[:, 0], self.u)
            + np.outer(uv[:, 1], self.v)
            + np.outer(w, self.normal)
        )

    def point_world(self, u, v, w=0.0):
        return self.origin + u * self.u + v * self.v + w * self.normal

    def translated(self, offset):
        return Plane(self.origin + np.asarray(offset, dtype=float), self.u, self.v)

    def __repr__(self):
        return f"Plane(origin={self.origin.tolist()}, n={self.normal.tolist()})"
