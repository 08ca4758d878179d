"""CSG solids: boolean expression trees over swept primitives.

Booleans never trim geometry; membership of the composite is evaluated
pointwise from the leaves using three-valued min/max tables (union = max,
intersection = min, subtraction = min with the right operand inverted).
Solids are immutable; every edit produces a new tree.
"""

from __future__ import annotations

import enum
import hashlib
import weakref

import numpy as np

from ..config import BOUNDARY_EPS_REL, TOL_ON_REL
from ..errors import GeometryError
from .primitive import INSIDE, ON_BOUNDARY, OUTSIDE, Extrude, Revolve


class Classification(enum.Enum):
    OUTSIDE = -1
    ON_BOUNDARY = 0
    INSIDE = 1


_UNION = "union"
_INTERSECTION = "intersection"
_SUBTRACTION = "subtraction"
_LEAF = "leaf"
_EMPTY = "empty"

# live-instance registry; the environment's resource tests watch its size
_LIVE_SOLIDS = weakref.WeakSet()


class Solid:
    """Immutable CSG node.  Use the classmethods to build trees."""

    __slots__ = ("node", "prim", "left", "right", "revision", "_bbox", "_hash",
                 "__weakref__")

    def __init__(self, node, prim=None, left=None, right=None, revision=0):
        self.node = node
        self.prim = prim
        self.left = left
        self.right = right
        self.revision = revision
        self._bbox = self._compute_bbox()
        self._hash = None
        _LIVE_SOLIDS.add(self)

    # -- constructors ---------------------------------------------------

    @classmethod
    def empty(cls):
        return cls(_EMPTY)

    @classmethod
    def from_primitive(cls, prim):
        return cls(_LEAF, prim=prim, revision=1)

    def union(self, other):
        return self._combine(_UNION, other)

    def intersection(self, other):
        return self._combine(_INTERSECTION, other)

    def subtract(self, other):
        return self._combine(_SUBTRACTION, other)

    def _combine(self, node, other):
        if self.is_empty or other.is_empty:
            raise GeometryError("boolean operands must be non-empty")
        return Solid(node, left=self, right=other,
                     revision=max(self.revision, other.revision) + 1)

    # -- basic queries -----------------------------------------------------

    @property
    def is_empty(self):
        return self.node == _EMPTY

    def _compute_bbox(self):
        if self.node == _EMPTY:
            return None
        if self.node == _LEAF:
            return self.prim.bbox()
        llo, lhi = self.left._bbox
        rlo, rhi = self.right._bbox
        return np.minimum(llo, rlo), np.maximum(lhi, rhi)

    @property
    def bbox(self):
        """(lo, hi) corners, or None for the empty solid."""
        return self._bbox

    @property
    def bbox_diagonal(self):
        if self._bbox is None:
            return 0.0
        lo, hi = self._bbox
        return float(np.linalg.norm(hi - lo))

    def leaves(self):
        """Leaf primitives in construction order."""
        if self.node == _EMPTY:
            return []
        if self.node == _LEAF:
            return [self.prim]
        return self.left.leaves() + self.right.leaves()

    @staticmethod
    def live_count():
        return len(_LIVE_SOLIDS)

    # -- membership ----------------------------------------------------------

    def default_tol(self):
        return TOL_ON_REL * self.bbox_diagonal if not self.is_empty else 0.0

    def boundary_eps(self):
        return BOUNDARY_EPS_REL * self.bbox_diagonal if not self.is_empty else 0.0

    def classify_many(self, points, tol=None):
        """Vectorized membership: int8 array of -1 / 0 / +1."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if self.is_empty:
            return np.full(len(points), OUTSIDE, dtype=np.int8)
        if tol is None:
            tol = self.default_tol()
        return self._classify(points, tol)

    def _classify(self, points, tol):
        if self.node == _LEAF:
            return self.prim.classify(points, tol)
        a = self.left._classify(points, tol)
        # the right operand only matters where the left side is undecided
        if self.node == _UNION:
            need = a < INSIDE
        else:
            need = a > OUTSIDE
        if not need.any():
            return a
        b = self.right._classify(points[need], tol)
        if self.node == _UNION:
            a[need] = np.maximum(a[need], b)
        elif self.node == _INTERSECTION:
            a[need] = np.minimum(a[need], b)
        else:
            a[need] = np.minimum(a[need], -b)
        return a

    def classify_point(self, p, tol=None):
        code = int(self.classify_many(np.asarray(p, dtype=float)[None, :], tol)[0])
        return Classification(code)

    def contains(self, points, tol=None):
        return self.classify_many(points, tol) == INSIDE

    # -- derived measurements -----------------------------------------------

    def estimate_volume(self, resolution=64):
        """Voxel-count volume on a bbox-aligned resolution^3 grid."""
        if self.is_empty:
            return 0.0
        if resolution < 8:
            raise ValueError("resolution must be >= 8")
        lo, hi = self.bbox
        centers, cell_vol = _grid_centers(lo, hi, resolution)
        codes = self.classify_many(centers)
        inside = np.count_nonzero(codes == INSIDE)
        boundary = np.count_nonzero(codes == ON_BOUNDARY)
        return (inside + 0.5 * boundary) * cell_vol

    def boundary_side_test(self, p, n, eps=None):
        """True iff p sits on the composite boundary along direction n."""
        side, _ = self.boundary_side_many(np.asarray(p, float)[None, :],
                                          np.asarray(n, float)[None, :], eps)
        return bool(side[0])

    def boundary_side_many(self, points, normals, eps=None):
        """Vectorized boundary test.

        Returns (on_boundary, outward_sign) where outward_sign is +1 when
        ``normals`` already points out of the material, -1 when it points
        inward, and 0 where the test failed.
        """
        if self.is_empty:
            n = len(np.atleast_2d(points))
            return np.zeros(n, dtype=bool), np.zeros(n, dtype=np.int8)
        if eps is None:
            eps = self.boundary_eps()
        points = np.atleast_2d(np.asarray(points, dtype=float))
        normals = np.atleast_2d(np.asarray(normals, dtype=float))
        # probe band smaller than the offset keeps the probes off the fence
        probe_tol = eps / 4.0
        pos = self.classify_many(points + eps * normals, tol=probe_tol)
        neg = self.classify_many(points - eps * normals, tol=probe_tol)
        one_inside = (pos == INSIDE) ^ (neg == INSIDE)
        on_boundary = (pos != neg) & one_inside
        sign = np.zeros(len(points), dtype=np.int8)
        sign[on_boundary & (neg == INSIDE)] = 1
        sign[on_boundary & (pos == INSIDE)] = -1
        return on_boundary, sign

    # -- identity --------------------------------------------------------

    def structural_hash(self):
        """Content hash of the tree; commutative children are ordered."""
        if self._hash is None:
            self._hash = hashlib.sha256(repr(self._canonical()).encode()).hexdigest()
        return self._hash

    def _canonical(self):
        if self.node == _EMPTY:
            return ("empty",)
        if self.node == _LEAF:
            return self.prim.signature()
        a, b = self.left._canonical(), self.right._canonical()
        if self.node in (_UNION, _INTERSECTION) and repr(b) < repr(a):
            a, b = b, a
        return (self.node, a, b)

    def transformed(self, scale, offset):
        """Uniform scale then translate, applied to every leaf."""
        if self.node == _EMPTY:
            return self
        if self.node == _LEAF:
            return Solid(_LEAF, prim=self.prim.transformed(scale, offset),
                         revision=self.revision)
        return Solid(self.node,
                     left=self.left.transformed(scale, offset),
                     right=self.right.transformed(scale, offset),
                     revision=self.revision)

    def __repr__(self):
        if self.node == _EMPTY:
            return "Solid<empty>"
        if self.node == _LEAF:
            return f"Solid<{self.prim.kind}>"
        return f"Solid<{self.node}({self.left!r}, {self.right!r})>"


def _grid_centers(lo, hi, n):
    span = np.maximum(hi - lo, 1e-12)
    axes = [lo[k] + span[k] * (np.arange(n) + 0.5) / n for k in range(3)]
    gx, gy, gz = np.meshgrid(*axes, indexing="ij")
    centers = np.stack((gx.ravel(), gy.ravel(), gz.ravel()), axis=1)
    cell_vol = float(np.prod(span / n))
    return centers, cell_vol


def occupancy_grid(solid, lo, hi, n, include_boundary=False):
    """Boolean occupancy of a solid on an arbitrary shared grid."""
    centers, _ = _grid_centers(np.asarray(lo, float), np.asarray(hi, float), n)
    codes = solid.classify_many(centers)
    if include_boundary:
        return codes >= ON_BOUNDARY
    return codes == INSIDE


__all__ = ["Classification", "Solid", "occupancy_grid", "Extrude", "Revolve",
           "INSIDE", "ON_BOUNDARY", "OUTSIDE"]
