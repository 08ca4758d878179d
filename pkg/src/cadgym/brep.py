"""Boundary view of a CSG solid: trimmed faces and the face-adjacency graph.

Candidate faces are enumerated analytically from each leaf primitive
(caps plus one lateral face per profile segment); a face survives when at
least one of its 100 UV samples lies on the composite boundary.  Node
features follow the 708-wide layout [type(8) | points(300) | normals(300)
| mask(100)] and the adjacency is row-normalized with self-loops.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import (DELTA_FLOOR, FEATURE_WIDTH, SURFACE_TYPE_INDEX, TOL_GEOM,
                     UV_GRID)
from .geometry.plane import Plane
from .geometry.primitive import Extrude, Revolve
from .geometry.profile import LineSegment, circle, rectangle
from .geometry.surface import (ConeSurface, CylinderSurface, PlaneSurface,
                               SphereSurface, TorusSurface)

TWO_PI = 2.0 * math.pi


@dataclass
class FaceView:
    """One candidate boundary face with its 10x10 sample grid."""

    face_id: int
    leaf_index: int
    local_index: int
    surface: object
    surface_type: str
    points: np.ndarray      # (100, 3)
    normals: np.ndarray     # (100, 3), oriented out of the solid where valid
    valid: np.ndarray       # (100,) bool
    spacing: float
    area_weights: np.ndarray = field(repr=False, default=None)
    solid: object = field(repr=False, default=None)

    @property
    def type_index(self):
        return SURFACE_TYPE_INDEX[self.surface_type]

    @property
    def is_planar(self):
        return self.surface_type == "plane"

    def valid_points(self):
        return self.points[self.valid]

    def bbox(self):
        pts = self.valid_points()
        return pts.min(axis=0), pts.max(axis=0)


@dataclass
class FaceGraph:
    node_features: np.ndarray   # (|V|, 708)
    adj_normalized: np.ndarray  # (|V|, |V|) row-stochastic
    face_ids: list
    bbox_delta: float
    faces: list = field(repr=False, default_factory=list)

    @property
    def num_nodes(self):
        return len(self.face_ids)

    def to_payload(self):
        """Serialized form: dense features plus COO triplets of the adjacency."""
        rows, cols = np.nonzero(self.adj_normalized)
        return {
            "nodes": [[float(x) for x in row] for row in self.node_features],
            "adj": {
                "row": [int(r) for r in rows],
                "col": [int(c) for c in cols],
                "val": [float(self.adj_normalized[r, c]) for r, c in zip(rows, cols)],
            },
        }


# ---------------------------------------------------------------------------
# candidate surface enumeration per primitive
# ---------------------------------------------------------------------------

def _extrude_candidates(prim: Extrude):
    """[(local_index, surface, neighbor spec)] for an extrusion."""
    plane = prim.profile.plane
    x0, y0, x1, y1 = prim.profile.bbox2d
    dom = (x0, x1, y0, y1)
    out = [
        (0, PlaneSurface(plane, dom, sign=-1.0, host_profile=prim.profile)),
        (1, PlaneSurface(plane.translated(prim.distance * plane.normal), dom,
                         sign=1.0,
                         host_profile=prim.profile.with_plane(
                             plane.translated(prim.distance * plane.normal)))),
    ]
    for i, seg in enumerate(prim.profile.segments):
        if isinstance(seg, LineSegment):
            p0, p1 = seg.start(), seg.end()
            chord = p1 - p0
            length = float(np.linalg.norm(chord))
            if length <= TOL_GEOM:
                continue
            dir2d = chord / length
            origin = plane.point_world(p0[0], p0[1])
            u3 = dir2d[0] * plane.u + dir2d[1] * plane.v
            frame = Plane(origin, u3, plane.normal)
            outward2d = np.array([dir2d[1], -dir2d[0]])
            outward3 = outward2d[0] * plane.u + outward2d[1] * plane.v
            sign = 1.0 if float(np.dot(outward3, frame.normal)) > 0 else -1.0
            host = rectangle(frame, 0.0, 0.0, length, prim.distance)
            out.append((2 + i, PlaneSurface(frame, (0.0, length, 0.0, prim.distance),
                                            sign=sign, host_profile=host)))
        else:
            lo, span = seg.angle_span()
            axis_origin = plane.point_world(seg.center[0], seg.center[1])
            sign = 1.0 if seg.ccw else -1.0
            out.append((2 + i, CylinderSurface(
                axis_origin, plane.normal, plane.u, seg.radius,
                (lo, lo + span, 0.0, prim.distance), sign=sign)))
    return out


def _revolve_candidates(prim: Revolve):
    plane = prim.profile.plane
    d = prim.axis_dir
    e1 = prim.radial_ref
    e2 = prim.tangent_ref
    out = []
    if not prim.full:
        x0, y0, x1, y1 = prim.profile.bbox2d
        dom = (x0, x1, y0, y1)
        out.append((0, PlaneSurface(plane, dom, sign=1.0,
                                    host_profile=prim.profile)))
        ca, sa = math.cos(prim.angle), math.sin(prim.angle)
        u_rot = ca * e1 + sa * e2
        end_frame = Plane(prim.axis_origin, u_rot, d)
        host = prim.profile.with_plane(end_frame)
        out.append((1, PlaneSurface(end_frame, dom, sign=-1.0, host_profile=host)))
    for i, seg in enumerate(prim.profile.segments):
        local = 2 + i
        if isinstance(seg, LineSegment):
            r0, z0 = seg.p0
            r1, z1 = seg.p1
            dr, dz = r1 - r0, z1 - z0
            length = math.hypot(dr, dz)
            if length <= TOL_GEOM:
                continue
            if abs(dr) <= 1e-9:
                if max(r0, r1) <= TOL_GEOM:
                    continue  # degenerate sweep of an on-axis segment
                sign = 1.0 if dz > 0 else -1.0
                out.append((local, CylinderSurface(
                    prim.axis_origin, d, e1, r0,
                    (0.0, prim.angle, min(z0, z1), max(z0, z1)), sign=sign)))
            elif abs(dz) <= 1e-9:
                rM = max(abs(r0), abs(r1))
                frame = Plane(prim.axis_origin + z0 * d, e1, e2)
                sign = -1.0 if dr > 0 else 1.0
                host = None
                if min(abs(r0), abs(r1)) <= TOL_GEOM and prim.full:
                    host = circle(frame, 0.0, 0.0, rM)
                out.append((local, PlaneSurface(frame, (-rM, rM, -rM, rM),
                                                sign=sign, host_profile=host)))
            else:
                out.append((local, ConeSurface(prim.axis_origin, d, e1,
                                               (r0, z0), (r1, z1),
                                               (0.0, prim.angle), sign=1.0)))
        else:
            cr, cz = seg.center
            lo, span = seg.angle_span()
            sign = 1.0 if seg.ccw else -1.0
            if abs(cr) <= TOL_GEOM:
                v_range = (math.pi / 2 - (lo + span), math.pi / 2 - lo)
                out.append((local, SphereSurface(
                    prim.axis_origin + cz * d, d, e1, seg.radius,
                    (0.0, prim.angle), v_range, sign=sign)))
            else:
                out.append((local, TorusSurface(
                    prim.axis_origin, d, e1, cr, seg.radius,
                    (0.0, prim.angle), (lo, lo + span), sign=sign,
                    center_z=cz)))
    return out


def _structural_edges(prim, locals_present):
    """Pairs of local indices sharing a profile-segment edge."""
    n = len(prim.profile.segments)
    pairs = set()
    if isinstance(prim, Extrude):
        caps = [0, 1]
    else:
        caps = [0, 1] if not prim.full else []
    for i in range(n):
        side = 2 + i
        if side not in locals_present:
            continue
        for cap in caps:
            if cap in locals_present:
                pairs.add((cap, side))
        nxt = 2 + (i + 1) % n
        if n > 1 and nxt in locals_present and nxt != side:
            pairs.add((min(side, nxt), max(side, nxt)))
    return pairs


# ---------------------------------------------------------------------------
# extraction
# ---------------------------------------------------------------------------

def extract_faces(solid):
    """Enumerate surviving boundary faces of a solid with UV samples."""
    if solid.is_empty:
        return []
    eps = solid.boundary_eps()
    candidates = []
    for leaf_idx, prim in enumerate(solid.leaves()):
        gen = _extrude_candidates(prim) if isinstance(prim, Extrude) \
            else _revolve_candidates(prim)
        for local, surf in gen:
            candidates.append((leaf_idx, local, surf))

    all_pts, all_nrm, all_area = [], [], []
    for _, _, surf in candidates:
        u, v = surf.grid(UV_GRID)
        pts, nrm = surf.evaluate(u, v)
        nrm = nrm / np.linalg.norm(nrm, axis=1, keepdims=True)
        all_pts.append(pts)
        all_nrm.append(nrm)
        all_area.append(surf.area_element(u, v))
    if not candidates:
        return []
    pts = np.concatenate(all_pts)
    nrm = np.concatenate(all_nrm)
    on_bnd, sign = solid.boundary_side_many(pts, nrm, eps=eps)

    faces = []
    k = UV_GRID * UV_GRID
    for idx, (leaf_idx, local, surf) in enumerate(candidates):
        sl = slice(idx * k, (idx + 1) * k)
        valid = on_bnd[sl]
        if not valid.any():
            continue
        normals = nrm[sl].copy()
        flip = sign[sl] == -1
        normals[flip] = -normals[flip]
        faces.append(FaceView(
            face_id=len(faces),
            leaf_index=leaf_idx,
            local_index=local,
            surface=surf,
            surface_type=surf.surface_type,
            points=pts[sl].copy(),
            normals=normals,
            valid=valid.copy(),
            spacing=surf.sample_spacing(UV_GRID),
            area_weights=all_area[idx],
            solid=solid,
        ))
    return faces


def build_graph(faces, solid=None):
    """Assemble the attributed face-adjacency graph from extracted faces."""
    n = len(faces)
    if n == 0:
        return FaceGraph(np.zeros((0, FEATURE_WIDTH)), np.zeros((0, 0)), [],
                         DELTA_FLOOR, [])
    valid_pts = np.concatenate([f.valid_points() for f in faces])
    extent = valid_pts.max(axis=0) - valid_pts.min(axis=0)
    delta = max(float(extent.max()), DELTA_FLOOR)

    feats = np.zeros((n, FEATURE_WIDTH))
    for i, f in enumerate(faces):
        feats[i, f.type_index] = 1.0
        feats[i, 8:308] = (f.points / delta).ravel()
        feats[i, 308:608] = f.normals.ravel()
        feats[i, 608:708] = f.valid.astype(float)

    adj = np.zeros((n, n))
    by_leaf = {}
    for i, f in enumerate(faces):
        by_leaf.setdefault(f.leaf_index, {})[f.local_index] = i
    if solid is not None and not solid.is_empty:
        leaves = solid.leaves()
        for leaf_idx, table in by_leaf.items():
            for a, b in _structural_edges(leaves[leaf_idx], set(table)):
                adj[table[a], table[b]] = 1.0
                adj[table[b], table[a]] = 1.0

    boxes = [f.bbox() for f in faces]
    for i in range(n):
        pi = faces[i].valid_points()
        for j in range(i + 1, n):
            if adj[i, j]:
                continue
            tau = 2.0 * max(faces[i].spacing, faces[j].spacing)
            gap = np.maximum(boxes[i][0] - boxes[j][1], boxes[j][0] - boxes[i][1])
            if float(np.linalg.norm(np.maximum(gap, 0.0))) >= tau:
                continue
            pj = faces[j].valid_points()
            d2 = np.sum((pi[:, None, :] - pj[None, :, :]) ** 2, axis=2)
            if float(d2.min()) < tau * tau:
                adj[i, j] = adj[j, i] = 1.0

    adj = np.maximum(adj, adj.T)
    deg = adj.sum(axis=1) + 1.0
    a_hat = (adj + np.eye(n)) / deg[:, None]
    return FaceGraph(feats, a_hat, [f.face_id for f in faces], delta, list(faces))


def face_graph(solid):
    faces = extract_faces(solid)
    return build_graph(faces, solid)
