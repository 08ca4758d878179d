"""Closed planar profiles made of line and circular-arc segments.

A profile is a single counterclockwise loop in a plane's 2D frame.
Containment queries use exact even-odd ray casting: arcs are split into
y-monotone pieces so each piece crosses a horizontal ray at most once,
which gives the same shared-endpoint robustness as the classic half-open
polygon rule.  Distance queries are exact per segment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..config import TOL_GEOM
from ..errors import GeometryError

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class LineSegment:
    p0: tuple
    p1: tuple

    def start(self):
        return np.array(self.p0, dtype=float)

    def end(self):
        return np.array(self.p1, dtype=float)

    def reversed(self):
        return LineSegment(self.p1, self.p0)

    def mirrored_v(self):
        return LineSegment((self.p0[0], -self.p0[1]), (self.p1[0], -self.p1[1]))

    def scaled(self, s):
        return LineSegment(
            (self.p0[0] * s, self.p0[1] * s), (self.p1[0] * s, self.p1[1] * s)
        )


@dataclass(frozen=True)
class ArcSegment:
    """Circular arc from ``start_angle`` to ``end_angle`` around ``center``.

    ``ccw`` gives the traversal direction; angles are radians.  A full
    circle is expressed as |end - start| = 2*pi.
    """

    center: tuple
    radius: float
    start_angle: float
    end_angle: float
    ccw: bool = True

    def __post_init__(self):
        if self.radius <= TOL_GEOM:
            raise GeometryError("arc radius must be positive")
        if abs(self.sweep) < 1e-12 or abs(self.sweep) > TWO_PI + 1e-9:
            raise GeometryError("arc sweep must lie in (0, 2*pi]")

    @property
    def sweep(self):
        """Signed sweep angle (positive ccw)."""
        d = self.end_angle - self.start_angle
        if self.ccw:
            if d <= 0:
                d += TWO_PI
            return min(d, TWO_PI)
        if d >= 0:
            d -= TWO_PI
        return max(d, -TWO_PI)

    def point_at(self, theta):
        return np.array(
            (
                self.center[0] + self.radius * math.cos(theta),
                self.center[1] + self.radius * math.sin(theta),
            )
        )

    def start(self):
        return self.point_at(self.start_angle)

    def end(self):
        return self.point_at(self.start_angle + self.sweep)

    def is_full_circle(self):
        return abs(abs(self.sweep) - TWO_PI) < 1e-9

    def reversed(self):
        return ArcSegment(
            self.center,
            self.radius,
            self.start_angle + self.sweep,
            self.start_angle,
            not self.ccw,
        )

    def mirrored_v(self):
        return ArcSegment(
            (self.center[0], -self.center[1]),
            self.radius,
            -self.start_angle,
            -(self.start_angle + self.sweep),
            not self.ccw,
        )

    def scaled(self, s):
        return ArcSegment(
            (self.center[0] * s, self.center[1] * s),
            self.radius * s,
            self.start_angle,
            self.end_angle,
            self.ccw,
        )

    def angle_span(self):
        """(low, sweep_abs): arc covers angles low..low+sweep_abs going ccw."""
        if self.ccw:
            return self.start_angle, self.sweep
        return self.start_angle + self.sweep, -self.sweep


def _arc_monotone_pieces(arc):
    """Split an arc into y-monotone pieces.

    Each piece lies entirely on one side of the vertical line x = cx, so a
    horizontal ray meets it at a single analytic crossing.  Returns tuples
    (cx, cy, R, side, y_lo_angle, y_hi_angle) as (y0, y1) endpoint heights
    plus the side sign of sqrt.
    """
    lo, span = arc.angle_span()
    # breakpoints at angles where cos == 0 (y-extremes): pi/2 + k*pi
    k0 = math.ceil((lo - math.pi / 2) / math.pi)
    cuts = [lo]
    a = math.pi / 2 + k0 * math.pi
    while a < lo + span - 1e-12:
        if a > lo + 1e-12:
            cuts.append(a)
        a += math.pi
    cuts.append(lo + span)
    cx, cy = arc.center
    pieces = []
    for a0, a1 in zip(cuts[:-1], cuts[1:]):
        mid = 0.5 * (a0 + a1)
        side = 1.0 if math.cos(mid) >= 0.0 else -1.0
        y0 = cy + arc.radius * math.sin(a0)
        y1 = cy + arc.radius * math.sin(a1)
        pieces.append((cx, cy, arc.radius, side, y0, y1))
    return pieces


class Profile:
    """A closed, counterclockwise loop of segments in a plane frame."""

    def __init__(self, plane, segments, validate=True):
        self.plane = plane
        self.segments = list(segments)
        if not self.segments:
            raise GeometryError("profile needs at least one segment")
        if validate:
            self._check_closed()
        self._area = self._signed_area()
        if validate and self._area <= TOL_GEOM**2:
            raise GeometryError(f"profile signed area must be positive, got {self._area}")
        self._build_caches()

    # -- construction checks -------------------------------------------------

    def _check_closed(self):
        n = len(self.segments)
        for i, seg in enumerate(self.segments):
            nxt = self.segments[(i + 1) % n]
            gap = np.linalg.norm(seg.end() - nxt.start())
            if isinstance(seg, ArcSegment) and seg.is_full_circle() and n == 1:
                return
            if gap > 1e-5:
                raise GeometryError(f"profile loop not closed at segment {i} (gap {gap:.2e})")

    def _signed_area(self):
        total = 0.0
        for seg in self.segments:
            x0, y0 = seg.start()
            x1, y1 = seg.end()
            total += 0.5 * (x0 * y1 - x1 * y0)
            if isinstance(seg, ArcSegment):
                s = seg.sweep
                total += 0.5 * seg.radius**2 * (s - math.sin(s))
        return total

    def _build_caches(self):
        lines = []
        arc_pieces = []
        xs, ys = [], []
        for seg in self.segments:
            p0, p1 = seg.start(), seg.end()
            xs += [p0[0], p1[0]]
            ys += [p0[1], p1[1]]
            if isinstance(seg, LineSegment):
                lines.append((p0[0], p0[1], p1[0], p1[1]))
            else:
                arc_pieces.extend(_arc_monotone_pieces(seg))
                lo, span = seg.angle_span()
                # axis-extreme points inside the angular span widen the bbox
                for k in range(-4, 6):
                    ang = k * math.pi / 2
                    if lo - 1e-12 <= ang <= lo + span + 1e-12:
                        p = seg.point_at(ang)
                        xs.append(p[0])
                        ys.append(p[1])
        self._lines = np.array(lines, dtype=float).reshape(-1, 4)
        self._arc_pieces = np.array(arc_pieces, dtype=float).reshape(-1, 6)
        self._bbox2d = (min(xs), min(ys), max(xs), max(ys))

    # -- queries -------------------------------------------------------------

    @property
    def area(self):
        return self._area

    @property
    def bbox2d(self):
        """(xmin, ymin, xmax, ymax) exact including arc extremes."""
        return self._bbox2d

    def contains(self, pts):
        """Even-odd containment of 2D points; boundary points unspecified."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        n_elem = len(self._lines) + len(self._arc_pieces)
        out = np.zeros(len(pts), dtype=bool)
        block = max(1, (1 << 21) // max(n_elem, 1))
        for s in range(0, len(pts), block):
            chunk = pts[s:s + block]
            px, py = chunk[:, 0][None, :], chunk[:, 1][None, :]
            crossings = np.zeros(chunk.shape[0], dtype=np.int64)
            if len(self._lines):
                x0, y0, x1, y1 = (self._lines[:, k][:, None] for k in range(4))
                straddle = (y0 > py) != (y1 > py)
                with np.errstate(divide="ignore", invalid="ignore"):
                    xc = x0 + (py - y0) * (x1 - x0) / (y1 - y0)
                crossings += np.count_nonzero(straddle & (xc > px), axis=0)
            if len(self._arc_pieces):
                cx, cy, r, side, y0, y1 = (self._arc_pieces[:, k][:, None]
                                           for k in range(6))
                straddle = (y0 > py) != (y1 > py)
                xc = cx + side * np.sqrt(np.maximum(r * r - (py - cy) ** 2, 0.0))
                crossings += np.count_nonzero(straddle & (xc > px), axis=0)
            out[s:s + block] = (crossings % 2).astype(bool)
        return out

    def boundary_distance(self, pts):
        """Exact unsigned distance from 2D points to the loop boundary."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        best = np.full(len(pts), np.inf)
        block = max(1, (1 << 21) // max(len(self._lines), 1))
        if len(self._lines):
            a = self._lines[:, 0:2]
            b = self._lines[:, 2:4]
            ab = b - a
            denom = np.maximum(np.sum(ab * ab, axis=1), 1e-30)
            for s in range(0, len(pts), block):
                chunk = pts[s:s + block]              # (P, 2)
                rel = chunk[None, :, :] - a[:, None, :]
                t = np.clip(np.einsum("epk,ek->ep", rel, ab) / denom[:, None],
                            0.0, 1.0)
                proj = a[:, None, :] + t[..., None] * ab[:, None, :]
                d = np.linalg.norm(chunk[None, :, :] - proj, axis=2)
                best[s:s + block] = np.minimum(best[s:s + block], d.min(axis=0))
        for seg in self.segments:
            if isinstance(seg, LineSegment):
                continue
            c = np.array(seg.center, dtype=float)
            rel = pts - c
            rho = np.linalg.norm(rel, axis=1)
            theta = np.arctan2(rel[:, 1], rel[:, 0])
            lo, span = seg.angle_span()
            in_span = ((theta - lo) % TWO_PI) <= span + 1e-12
            if seg.is_full_circle():
                in_span = np.ones(len(pts), dtype=bool)
            d_circle = np.abs(rho - seg.radius)
            d0 = np.linalg.norm(pts - seg.start(), axis=1)
            d1 = np.linalg.norm(pts - seg.end(), axis=1)
            d = np.where(in_span, d_circle, np.minimum(d0, d1))
            best = np.minimum(best, d)
        return best

    def _within_band(self, pts, tol):
        """Squared-math test: within ``tol`` of the boundary, per point."""
        px, py = pts[:, 0], pts[:, 1]
        band = np.zeros(len(pts), dtype=bool)
        tol2 = tol * tol
        if len(self._lines):
            ax, ay = self._lines[:, 0], self._lines[:, 1]
            abx, aby = self._lines[:, 2] - ax, self._lines[:, 3] - ay
            ll = np.maximum(abx * abx + aby * aby, 1e-30)
            block = max(1, (1 << 21) // len(self._lines))
            for s in range(0, len(pts), block):
                rx = px[None, s:s + block] - ax[:, None]
                ry = py[None, s:s + block] - ay[:, None]
                t = np.clip((rx * abx[:, None] + ry * aby[:, None])
                            / ll[:, None], 0.0, 1.0)
                dx = rx - t * abx[:, None]
                dy = ry - t * aby[:, None]
                d2 = (dx * dx + dy * dy).min(axis=0)
                band[s:s + block] |= d2 <= tol2
        for seg in self.segments:
            if isinstance(seg, LineSegment):
                continue
            cx, cy = seg.center
            rx, ry = px - cx, py - cy
            rho = np.sqrt(rx * rx + ry * ry)
            near_circle = np.abs(rho - seg.radius) <= tol
            if near_circle.any() and not seg.is_full_circle():
                theta = np.arctan2(ry[near_circle], rx[near_circle])
                lo, span = seg.angle_span()
                in_span = ((theta - lo) % TWO_PI) <= span + 1e-12
                hit = np.zeros(len(pts), dtype=bool)
                hit[np.flatnonzero(near_circle)[in_span]] = True
                near_circle = hit
            band |= near_circle
            for endpoint in (seg.start(), seg.end()):
                ex, ey = px - endpoint[0], py - endpoint[1]
                band |= (ex * ex + ey * ey) <= tol2
        return band

    def classify2d(self, pts, tol):
        """-1 outside / 0 within tol of boundary / +1 inside, vectorized.

        ``tol <= 0`` skips the boundary band entirely (pure containment).
        """
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        out = np.full(len(pts), -1, dtype=np.int8)
        x0, y0, x1, y1 = self._bbox2d
        near = ((pts[:, 0] >= x0 - tol) & (pts[:, 0] <= x1 + tol)
                & (pts[:, 1] >= y0 - tol) & (pts[:, 1] <= y1 + tol))
        if not near.any():
            return out
        sub = pts[near]
        res = np.where(self.contains(sub), 1, -1).astype(np.int8)
        if tol > 0.0:
            res[self._within_band(sub, tol)] = 0
        out[near] = res
        return out

    # -- derived profiles ----------------------------------------------------

    def reversed(self):
        segs = [s.reversed() for s in reversed(self.segments)]
        return Profile(self.plane, segs, validate=False)

    def mirrored_v(self, plane):
        """Mirror 2D v-coordinates (for frames with flipped v axis)."""
        segs = [s.mirrored_v() for s in self.segments]
        p = Profile(plane, segs, validate=False)
        if p.area < 0:
            p = p.reversed()
        return p

    def with_plane(self, plane):
        return Profile(plane, self.segments, validate=False)

    def scaled(self, s, plane):
        return Profile(plane, [seg.scaled(s) for seg in self.segments], validate=False)

    def polyline(self, arc_chord_tol=1e-3):
        """Tessellated closed polyline (for export and rough checks)."""
        pts = []
        for seg in self.segments:
            if isinstance(seg, LineSegment):
                pts.append(seg.start())
            else:
                span = abs(seg.sweep)
                step = max(2.0 * math.sqrt(2.0 * arc_chord_tol / seg.radius), 1e-3)
                n = max(2, int(math.ceil(span / step)))
                for t in range(n):
                    pts.append(seg.point_at(seg.start_angle + seg.sweep * t / n))
        return np.array(pts, dtype=float)

    def to_dict(self):
        segs = []
        for s in self.segments:
            if isinstance(s, LineSegment):
                segs.append({"kind": "line", "p0": list(map(float, s.p0)),
                             "p1": list(map(float, s.p1))})
            else:
                segs.append({"kind": "arc", "center": list(map(float, s.center)),
                             "radius": float(s.radius),
                             "start_angle": float(s.start_angle),
                             "end_angle": float(s.end_angle), "ccw": bool(s.ccw)})
        return segs

    @staticmethod
    def segments_from_dict(segs):
        out = []
        for s in segs:
            if s["kind"] == "line":
                out.append(LineSegment(tuple(s["p0"]), tuple(s["p1"])))
            else:
                out.append(ArcSegment(tuple(s["center"]), s["radius"],
                                      s["start_angle"], s["end_angle"], s["ccw"]))
        return out


# -- stock constructors -----------------------------------------------------


def rectangle(plane, x0, y0, x1, y1):
    if x1 <= x0 or y1 <= y0:
        raise GeometryError("rectangle needs x1 > x0 and y1 > y0")
    segs = [
        LineSegment((x0, y0), (x1, y0)),
        LineSegment((x1, y0), (x1, y1)),
        LineSegment((x1, y1), (x0, y1)),
        LineSegment((x0, y1), (x0, y0)),
    ]
    return Profile(plane, segs)


def circle(plane, cx, cy, radius):
    return Profile(plane, [ArcSegment((cx, cy), radius, 0.0, TWO_PI, True)])


def regular_polygon(plane, cx, cy, radius, sides, phase=0.0):
    if sides < 3:
        raise GeometryError("polygon needs >= 3 sides")
    ang = phase + TWO_PI * np.arange(sides + 1) / sides
    pts = np.stack((cx + radius * np.cos(ang), cy + radius * np.sin(ang)), axis=1)
    segs = [LineSegment(tuple(pts[i]), tuple(pts[i + 1])) for i in range(sides)]
    return Profile(plane, segs)


def polygon(plane, points):
    """Simple polygon from a CCW point list."""
    pts = [tuple(map(float, p)) for p in points]
    segs = [LineSegment(pts[i], pts[(i + 1) % len(pts)]) for i in range(len(pts))]
    return Profile(plane, segs)
