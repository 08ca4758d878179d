"""Executable modeling operations: inverse parameter extraction and apply.

Extrusion parameters are read from a pair of parallel planar faces (the
start face supplies the sketch, the end face only the distance); revolve
parameters are reconstructed from a single revolution-surface face by
projecting its parametric extremes onto the rotation axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from skimage.measure import find_contours

from .config import TOL_GEOM, TRIM_GRID
from .errors import (Coplanar, GeometryError, InvalidOpForState, NotParallel,
                     NotPlanar, UnsupportedSurface)
from .geometry.plane import Plane
from .geometry.primitive import Extrude, Revolve
from .geometry.profile import ArcSegment, LineSegment, Profile

TWO_PI = 2.0 * math.pi
PARALLEL_TOL_RAD = 1e-6


@dataclass
class ExtrudeSpec:
    profile: Profile
    distance: float
    direction: np.ndarray
    op: str


@dataclass
class RevolveSpec:
    profile: Profile
    axis_origin: np.ndarray
    axis_dir: np.ndarray
    angle: float
    op: str


# ---------------------------------------------------------------------------
# extrusion extraction
# ---------------------------------------------------------------------------

def _angle_between_lines(n1, n2):
    c = abs(float(np.dot(n1, n2)))
    s = float(np.linalg.norm(np.cross(n1, n2)))
    return math.atan2(s, c)


def extract_extrude_params(start, end, op):
    """Extrusion spec between two parallel planar faces.

    The profile is the start face's trimmed region: the exact host
    profile when the trimming mask matches host membership on a fine
    grid, otherwise a marching-squares polygonization of the mask.
    """
    if not start.is_planar or not end.is_planar:
        raise NotPlanar("extrusion faces must both be planar")
    fs, fe = start.surface, end.surface
    if _angle_between_lines(fs.frame.normal, fe.frame.normal) > PARALLEL_TOL_RAD:
        raise NotParallel("start and end faces are not parallel")
    n = fs.frame.normal
    signed = float(np.dot(fe.frame.origin - fs.frame.origin, n))
    if abs(signed) <= TOL_GEOM:
        raise Coplanar("start and end faces lie in the same plane")
    direction = n if signed > 0 else -n
    distance = abs(signed)
    profile = _trimmed_region(start, direction)
    return ExtrudeSpec(profile=profile, distance=distance, direction=direction,
                       op=op)


def _trim_field(face):
    """Fine-grid trimming data for a planar face (cached on the face)."""
    cached = getattr(face, "_trim_field", None)
    if cached is not None:
        return cached
    surf = face.surface
    frame = surf.frame
    u0, u1, v0, v1 = surf.domain
    g = TRIM_GRID
    us = u0 + (u1 - u0) * (np.arange(g) + 0.5) / g
    vs = v0 + (v1 - v0) * (np.arange(g) + 0.5) / g
    uu, vv = np.meshgrid(us, vs, indexing="ij")
    uv = np.stack((uu.ravel(), vv.ravel()), axis=1)
    pts = frame.to_world(uv)
    normals = np.broadcast_to(frame.normal, pts.shape)
    on_bnd, _ = face.solid.boundary_side_many(pts, normals)

    host = surf.host_profile
    untrimmed = False
    if host is not None:
        in_host = host.contains(uv)
        # samples near the host boundary are fenced; ignore them in the match
        cell = math.hypot((u1 - u0) / g, (v1 - v0) / g)
        margin = max(cell, 2.0 * face.solid.default_tol())
        clear = host.boundary_distance(uv) > margin
        untrimmed = bool(np.array_equal(on_bnd[clear], in_host[clear])
                         and in_host.any())
        field = (on_bnd & in_host).astype(float).reshape(g, g)
    else:
        field = on_bnd.astype(float).reshape(g, g)
    face._trim_field = (untrimmed, field)
    return face._trim_field


def _trimmed_region(face, direction):
    surf = face.surface
    frame = surf.frame
    flipped = float(np.dot(direction, frame.normal)) < 0
    cache = getattr(face, "_trim_profiles", None)
    if cache is None:
        cache = {}
        face._trim_profiles = cache
    if flipped in cache:
        return cache[flipped]
    untrimmed, field = _trim_field(face)
    if untrimmed:
        profile = _host_profile_in_direction(surf.host_profile, frame, direction)
    else:
        if field.sum() == 0:
            raise GeometryError("start face has no valid trimmed region")
        u0, u1, v0, v1 = surf.domain
        g = TRIM_GRID
        poly = _largest_contour(field, (u0, v0),
                                ((u1 - u0) / g, (v1 - v0) / g))
        profile = _polygon_profile_in_direction(poly, frame, direction)
    cache[flipped] = profile
    return profile


def _largest_contour(field, origin, cell):
    padded = np.zeros((field.shape[0] + 2, field.shape[1] + 2))
    padded[1:-1, 1:-1] = field
    contours = find_contours(padded, 0.5)
    if not contours:
        raise GeometryError("no contour found in trimming field")
    best, best_area = None, 0.0
    for c in contours:
        uvs = np.stack((origin[0] + (c[:, 0] - 1.0 + 0.5) * cell[0],
                        origin[1] + (c[:, 1] - 1.0 + 0.5) * cell[1]), axis=1)
        a = _poly_area(uvs)
        if abs(a) > abs(best_area):
            best, best_area = uvs, a
    if best_area < 0:
        best = best[::-1]
    return _simplify(best, tol=0.35 * min(abs(cell[0]), abs(cell[1])))


def _poly_area(pts):
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _simplify(pts, tol):
    """Douglas-Peucker on a closed loop (split at the two extreme points)."""
    if len(pts) <= 4:
        return pts
    i0 = int(np.argmin(pts[:, 0] + pts[:, 1]))
    pts = np.roll(pts, -i0, axis=0)
    i1 = int(np.argmax(np.linalg.norm(pts - pts[0], axis=1)))
    a = _dp(pts[:i1 + 1], tol)
    b = _dp(np.vstack([pts[i1:], pts[:1]]), tol)
    return np.vstack([a[:-1], b[:-1]])


def _dp(pts, tol):
    if len(pts) <= 2:
        return pts
    a, b = pts[0], pts[-1]
    ab = b - a
    L = np.linalg.norm(ab)
    if L < 1e-12:
        d = np.linalg.norm(pts - a, axis=1)
    else:
        rel = pts - a
        d = np.abs(ab[0] * rel[:, 1] - ab[1] * rel[:, 0]) / L
    i = int(np.argmax(d))
    if d[i] <= tol:
        return np.vstack([a, b])
    left = _dp(pts[:i + 1], tol)
    right = _dp(pts[i:], tol)
    return np.vstack([left[:-1], right])


def _direction_frame(frame, direction):
    """Frame with normal equal to ``direction``; True when v flips."""
    if float(np.dot(direction, frame.normal)) > 0:
        return frame, False
    return Plane(frame.origin, frame.u, -frame.v), True


def _host_profile_in_direction(host, frame, direction):
    plane, flipped = _direction_frame(frame, direction)
    if not flipped:
        return host.with_plane(plane) if host.plane is not plane else host
    return host.mirrored_v(plane)


def _polygon_profile_in_direction(poly, frame, direction):
    plane, flipped = _direction_frame(frame, direction)
    pts = poly.copy()
    if flipped:
        pts[:, 1] = -pts[:, 1]
        if _poly_area(pts) < 0:
            pts = pts[::-1]
    segs = [LineSegment(tuple(pts[i]), tuple(pts[(i + 1) % len(pts)]))
            for i in range(len(pts))
            if np.linalg.norm(pts[(i + 1) % len(pts)] - pts[i]) > 1e-9]
    return Profile(plane, segs, validate=False)


# ---------------------------------------------------------------------------
# revolution extraction
# ---------------------------------------------------------------------------

def extract_revolve_params(face, op):
    """Revolve spec reconstructed from a revolution-surface face."""
    kind = face.surface_type
    if kind not in ("cylinder", "cone", "sphere", "torus"):
        raise UnsupportedSurface(f"cannot revolve a {kind} face")
    surf = face.surface
    u0, u1, v0, v1 = surf.domain
    angle = u1 - u0
    radial0 = (math.cos(u0) * surf.radial_ref + math.sin(u0) * surf.tangent_ref)
    axis_origin = surf.axis_origin
    plane = Plane(axis_origin, radial0, surf.axis_dir)

    if kind == "cylinder":
        r = surf.radius
        pts = [(r, v0), (r, v1), (0.0, v1), (0.0, v0)]
        segs = [LineSegment(pts[i], pts[(i + 1) % 4]) for i in range(4)]
        profile = Profile(plane, segs)
    elif kind == "cone":
        r0, z0 = surf.rz0
        r1, z1 = surf.rz1
        loop = [(r0, z0), (r1, z1), (0.0, z1), (0.0, z0)]
        if _poly_area(np.array(loop)) < 0:
            loop = loop[::-1]
        segs = [LineSegment(loop[i], loop[(i + 1) % 4]) for i in range(4)
                if math.hypot(loop[(i + 1) % 4][0] - loop[i][0],
                              loop[(i + 1) % 4][1] - loop[i][1]) > TOL_GEOM]
        profile = Profile(plane, segs)
    elif kind == "sphere":
        r = surf.radius
        psi_lo, psi_hi = math.pi / 2 - v1, math.pi / 2 - v0
        arc = ArcSegment((0.0, 0.0), r, psi_lo, psi_hi, True)
        p_lo, p_hi = arc.start(), arc.end()
        segs = [arc]
        if abs(p_hi[0]) <= 1e-9 and abs(p_lo[0]) <= 1e-9:
            segs.append(LineSegment(tuple(p_hi), tuple(p_lo)))
        else:
            segs.append(LineSegment(tuple(p_hi), (0.0, 0.0)))
            segs.append(LineSegment((0.0, 0.0), tuple(p_lo)))
        profile = Profile(plane, segs)
    else:  # torus
        c = (surf.major, surf.center_z)
        r = surf.minor
        if v1 - v0 >= TWO_PI - 1e-9:
            profile = Profile(plane, [ArcSegment(c, r, 0.0, TWO_PI, True)])
        else:
            arc = ArcSegment(c, r, v0, v1, True)
            segs = [arc,
                    LineSegment(tuple(arc.end()), c),
                    LineSegment(c, tuple(arc.start()))]
            profile = Profile(plane, segs)
    return RevolveSpec(profile=profile, axis_origin=axis_origin,
                       axis_dir=surf.axis_dir, angle=angle, op=op)


# ---------------------------------------------------------------------------
# apply + feasibility
# ---------------------------------------------------------------------------

def build_primitive(spec):
    if isinstance(spec, ExtrudeSpec):
        return Extrude(spec.profile, spec.distance)
    return Revolve(spec.profile, spec.axis_origin, spec.axis_dir, spec.angle)


def apply(solid, spec):
    """Compose a spec with a solid; returns a new solid, input untouched."""
    if spec.op == "newbody":
        if not solid.is_empty:
            raise InvalidOpForState("newbody requires an empty solid")
        return type(solid).from_primitive(build_primitive(spec))
    if solid.is_empty:
        raise InvalidOpForState(f"{spec.op} requires a non-empty solid")
    prim = type(solid).from_primitive(build_primitive(spec))
    if spec.op == "union":
        return solid.union(prim)
    if spec.op == "intersection":
        return solid.intersection(prim)
    if spec.op == "subtraction":
        return solid.subtract(prim)
    raise InvalidOpForState(f"unknown boolean op {spec.op!r}")


def extract_action_spec(target_faces, action):
    """Parameter extraction for an action against target faces by id."""
    if action.a_t == "revolve":
        return extract_revolve_params(target_faces[action.f_s], action.o_t)
    return extract_extrude_params(target_faces[action.f_s],
                                  target_faces[action.f_e], action.o_t)


def check_feasible(solid, target_faces, action, spec=None):
    """True iff the action's parameters extract and apply on a scratch copy."""
    try:
        if spec is None:
            spec = extract_action_spec(target_faces, action)
        else:
            spec = type(spec)(**{**spec.__dict__, "op": action.o_t})
        apply(solid, spec)
        return True
    except Exception:
        return False
