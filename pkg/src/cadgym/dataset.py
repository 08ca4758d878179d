"""Procedural corpus of (target solid, ground-truth command sequence) pairs.

A candidate is built constructively (seed primitive plus boolean attach,
pocket, and slab steps), normalized into the model box, then mapped back
onto the faces of its own final solid: each constructive step must be
expressible as a face-indexed command that replays to the same geometry.
Candidates whose replay misses the IoU bar, or that duplicate an earlier
record by sequence hash or voxel signature, are discarded.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass

import numpy as np

from .brep import extract_faces
from .dsl import AddExtrude, AddRevolve, CommandAst, print_ast
from .errors import CorruptRecord, QuotaUnreachable
from .geometry.plane import Plane
from .geometry.primitive import Extrude, Revolve
from .geometry.profile import (ArcSegment, LineSegment, Profile, circle,
                               polygon, rectangle, regular_polygon)
from .geometry.solid import Solid
from .ops import apply, extract_extrude_params, extract_revolve_params

TWO_PI = 2.0 * math.pi
REVOLVE_KINDS = ("cylinder", "cone", "sphere", "torus")
BINS = ("simple", "medium", "complex")
MODEL_SPAN = 1.8          # normalized solids span at most this per axis
REPLAY_IOU_BAR = 0.995    # stricter than the acceptance threshold

_AXES = [np.array(v, dtype=float) for v in
         [(1, 0, 0), (0, 1, 0), (0, 0, 1), (-1, 0, 0), (0, -1, 0), (0, 0, -1)]]


def bin_of(face_count):
    if face_count < 10:
        return "simple"
    if face_count <= 20:
        return "medium"
    return "complex"


@dataclass
class DatasetRecord:
    id: str
    dsl: str
    profiles: list           # constructive step table (dicts)
    face_count: int
    bin: str
    bbox: list

    def to_json(self):
        return json.dumps({
            "id": self.id, "dsl": self.dsl, "profiles": self.profiles,
            "face_count": self.face_count, "bin": self.bin, "bbox": self.bbox,
        })

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        return cls(id=d["id"], dsl=d["dsl"], profiles=d["profiles"],
                   face_count=int(d["face_count"]), bin=d["bin"],
                   bbox=d["bbox"])


# ---------------------------------------------------------------------------
# constructive steps <-> primitives
# ---------------------------------------------------------------------------

def step_to_primitive(step):
    segs = Profile.segments_from_dict(step["segments"])
    if step["kind"] == "extrude":
        plane = Plane(step["plane"]["origin"], step["plane"]["u"],
                      step["plane"]["v"])
        return Extrude(Profile(plane, segs, validate=False), step["distance"])
    origin = np.array(step["axis_origin"], dtype=float)
    plane = Plane(origin, step["radial_ref"], step["axis_dir"])
    return Revolve(Profile(plane, segs, validate=False), origin,
                   step["axis_dir"], step["angle"])


def primitive_to_step(prim, op):
    if isinstance(prim, Extrude):
        pl = prim.profile.plane
        return {"kind": "extrude", "op": op,
                "plane": {"origin": pl.origin.tolist(), "u": pl.u.tolist(),
                          "v": pl.v.tolist()},
                "segments": prim.profile.to_dict(),
                "distance": float(prim.distance)}
    return {"kind": "revolve", "op": op,
            "axis_origin": prim.axis_origin.tolist(),
            "axis_dir": prim.axis_dir.tolist(),
            "radial_ref": prim.radial_ref.tolist(),
            "segments": prim.profile.to_dict(),
            "angle": float(prim.angle)}


def build_solid(steps):
    """Replay a constructive step table into a solid."""
    solid = Solid.empty()
    for step in steps:
        prim = step_to_primitive(step)
        op = step["op"]
        if op == "newbody":
            solid = Solid.from_primitive(prim)
        elif op == "union":
            solid = solid.union(Solid.from_primitive(prim))
        elif op == "intersection":
            solid = solid.intersection(Solid.from_primitive(prim))
        else:
            solid = solid.subtract(Solid.from_primitive(prim))
    return solid


def record_solid(record):
    return build_solid(record.profiles)


# ---------------------------------------------------------------------------
# random construction
# ---------------------------------------------------------------------------

def _random_profile_2d(rng, plane, cx, cy, scale, complex_hint):
    kind = rng.choice(["rect", "circle", "ngon"],
                      p=[0.4, 0.25, 0.35] if complex_hint else [0.5, 0.3, 0.2])
    if kind == "rect":
        w = scale * rng.uniform(0.5, 1.0)
        h = scale * rng.uniform(0.5, 1.0)
        return rectangle(plane, cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2)
    if kind == "circle":
        return circle(plane, cx, cy, scale * rng.uniform(0.3, 0.55))
    sides = int(rng.choice([6, 8] if complex_hint else [3, 5, 6]))
    return regular_polygon(plane, cx, cy, scale * rng.uniform(0.35, 0.6),
                           sides, phase=rng.uniform(0, TWO_PI))


def _random_frame(rng, origin):
    n = _AXES[rng.integers(0, 6)]
    return Plane.from_normal(origin, n)


def _random_revolve(rng, center, scale):
    """A revolution primitive whose side faces replay it exactly."""
    d = _AXES[rng.integers(0, 6)]
    e1 = Plane.from_normal(center, d).u
    plane = Plane(np.asarray(center, dtype=float), e1, d)
    kind = rng.choice(["cylinder", "cone", "sphere", "torus"],
                      p=[0.35, 0.25, 0.2, 0.2])
    z0 = -scale * rng.uniform(0.3, 0.6)
    z1 = scale * rng.uniform(0.3, 0.6)
    if kind == "cylinder":
        r = scale * rng.uniform(0.3, 0.7)
        prof = polygon(plane, [(0, z0), (r, z0), (r, z1), (0, z1)])
    elif kind == "cone":
        r0 = scale * rng.uniform(0.4, 0.8)
        r1 = scale * rng.uniform(0.1, 0.9) * r0
        prof = polygon(plane, [(0, z0), (r0, z0), (r1, z1), (0, z1)])
    elif kind == "sphere":
        r = scale * rng.uniform(0.4, 0.7)
        if rng.random() < 0.7:
            arc = ArcSegment((0.0, 0.0), r, -math.pi / 2, math.pi / 2, True)
            prof = Profile(plane, [arc, LineSegment(tuple(arc.end()),
                                                    tuple(arc.start()))])
        else:
            p0 = rng.uniform(-1.1, -0.2)
            p1 = rng.uniform(0.2, 1.1)
            arc = ArcSegment((0.0, 0.0), r, p0, p1, True)
            prof = Profile(plane, [arc, LineSegment(tuple(arc.end()), (0.0, 0.0)),
                                   LineSegment((0.0, 0.0), tuple(arc.start()))])
    else:
        minor = scale * rng.uniform(0.12, 0.25)
        major = minor + scale * rng.uniform(0.15, 0.45)
        prof = circle(plane, major, 0.0, minor)
    angle = TWO_PI if rng.random() < 0.7 else rng.uniform(math.pi / 2,
                                                          0.95 * TWO_PI)
    return Revolve(prof, plane.origin, d, angle)


def _attach_faces(solid):
    faces = extract_faces(solid)
    planar = [f for f in faces if f.is_planar and f.valid.sum() >= 8]
    return faces, planar


def _boss_or_pocket(rng, solid, planar_faces, op):
    """Extrude attached to an existing planar face (outward or carving in)."""
    f = planar_faces[rng.integers(0, len(planar_faces))]
    surf = f.surface
    outward = surf.sign * surf.frame.normal
    valid_pts = f.points[f.valid]
    local = surf.frame.to_local(valid_pts)
    u_lo, v_lo = local[:, 0].min(), local[:, 1].min()
    u_hi, v_hi = local[:, 0].max(), local[:, 1].max()
    extent = min(u_hi - u_lo, v_hi - v_lo)
    if extent < 0.1:
        return None
    k = rng.integers(0, len(local))
    cx = float(np.clip(local[k, 0], u_lo + 0.3 * extent, u_hi - 0.3 * extent))
    cy = float(np.clip(local[k, 1], v_lo + 0.3 * extent, v_hi - 0.3 * extent))
    scale = extent * rng.uniform(0.35, 0.6)
    span = float(np.max(solid.bbox[1] - solid.bbox[0]))
    if op == "subtraction":
        depth = span * rng.uniform(0.1, 0.3)
        base = Plane(surf.frame.origin - depth * outward,
                     surf.frame.u, surf.frame.v)
        plane = Plane.from_normal(base.origin, outward, u_hint=base.u)
        prof = _random_profile_2d(rng, plane, cx, cy, scale, False)
        prof = _reframe_profile(prof, surf.frame, plane)
        return Extrude(prof, depth + 0.2 * span)
    height = span * rng.uniform(0.15, 0.45)
    plane = Plane.from_normal(surf.frame.origin, outward, u_hint=surf.frame.u)
    prof = _random_profile_2d(rng, plane, cx, cy, scale, rng.random() < 0.5)
    prof = _reframe_profile(prof, surf.frame, plane)
    return Extrude(prof, height)


def _reframe_profile(prof, src_frame, dst_plane):
    """Re-express a profile drawn in src (u,v) coords in the dst frame."""
    same_u = abs(float(np.dot(src_frame.u, dst_plane.u)) - 1.0) < 1e-9
    same_v = abs(float(np.dot(src_frame.v, dst_plane.v)) - 1.0) < 1e-9
    if same_u and same_v:
        return prof.with_plane(dst_plane)
    return prof.mirrored_v(dst_plane)


def _slab(rng, solid):
    """A big prism clipping the solid to a band along one axis."""
    lo, hi = solid.bbox
    axis = int(rng.integers(0, 3))
    extent = hi[axis] - lo[axis]
    if extent < 0.2:
        return None
    z0 = lo[axis] + extent * rng.uniform(0.05, 0.3)
    z1 = hi[axis] - extent * rng.uniform(0.05, 0.3)
    if z1 - z0 < 0.25 * extent:
        return None
    n = np.zeros(3)
    n[axis] = 1.0
    origin = np.array([(lo[k] + hi[k]) / 2 for k in range(3)])
    origin[axis] = z0
    plane = Plane.from_normal(origin, n)
    others = [k for k in range(3) if k != axis]
    half = [0.75 * (hi[k] - lo[k]) for k in others]
    prof = rectangle(plane, -half[0], -half[1], half[0], half[1])
    return Extrude(prof, z1 - z0)


def _build_candidate(rng, hint):
    """(primitives, ops) or None; geometry only, mapping comes later."""
    if hint == "simple":
        n_cmds = int(rng.integers(1, 3))
    elif hint == "medium":
        n_cmds = int(rng.integers(2, 5))
    else:
        n_cmds = int(rng.integers(4, 8))
    complex_hint = hint == "complex"
    revolve_p = 0.4 if hint != "complex" else 0.25
    op_weights = [0.5, 0.3, 0.2] if not complex_hint else [0.65, 0.25, 0.1]

    prims, ops = [], []
    center = rng.uniform(-0.3, 0.3, size=3)
    if rng.random() < revolve_p:
        prims.append(_random_revolve(rng, center, rng.uniform(0.5, 1.0)))
    else:
        frame = _random_frame(rng, center)
        prof = _random_profile_2d(rng, frame, 0.0, 0.0, rng.uniform(0.5, 1.1),
                                  complex_hint)
        prims.append(Extrude(prof, rng.uniform(0.35, 1.0)))
    ops.append("newbody")
    solid = Solid.from_primitive(prims[0])

    for _ in range(n_cmds - 1):
        op = rng.choice(["union", "subtraction", "intersection"],
                        p=op_weights)
        prim = None
        if op == "intersection":
            prim = _slab(rng, solid)
            if prim is None:
                op = "union"
        if prim is None and rng.random() < revolve_p:
            lo, hi = solid.bbox
            c = np.array([rng.uniform(lo[k], hi[k]) for k in range(3)])
            span = float(np.max(hi - lo))
            prim = _random_revolve(rng, c, span * rng.uniform(0.25, 0.5))
            if op == "intersection":
                op = "union"
        if prim is None:
            _, planar = _attach_faces(solid)
            if not planar:
                return None
            prim = _boss_or_pocket(rng, solid, planar, op)
            if prim is None:
                return None
        try:
            nxt = {"union": solid.union, "subtraction": solid.subtract,
                   "intersection": solid.intersection}[op](
                       Solid.from_primitive(prim))
        except Exception:
            return None
        prims.append(prim)
        ops.append(op)
        solid = nxt
    return prims, ops


def _normalize(prims, ops):
    solid = build_solid([primitive_to_step(p, o) for p, o in zip(prims, ops)])
    lo, hi = solid.bbox
    extent = float(np.max(hi - lo))
    if extent < 1e-6:
        return None
    scale = MODEL_SPAN / extent
    center = (lo + hi) / 2.0
    offset = -center * scale
    prims_n = [p.transformed(scale, offset) for p in prims]
    steps = [primitive_to_step(p, o) for p, o in zip(prims_n, ops)]
    return steps, build_solid(steps)


# ---------------------------------------------------------------------------
# mapping constructive steps to target-face commands
# ---------------------------------------------------------------------------

def _face_on_plane(planar_faces, point, normal, exclude_id=None):
    for g in planar_faces:
        n_g = g.surface.frame.normal
        if float(np.linalg.norm(np.cross(n_g, normal))) > 1e-6:
            continue
        off = abs(float(np.dot(g.surface.frame.origin - point, normal)))
        if off <= 1e-6:
            if exclude_id is not None and g.face_id == exclude_id:
                continue
            return g
    return None


def _map_to_commands(solid, faces, prims, ops):
    """Face-indexed commands replaying each constructive step, or None."""
    from .ops import _trim_field
    planar = [f for f in faces if f.is_planar]
    commands = []
    for k, (prim, op) in enumerate(zip(prims, ops)):
        leaf_faces = [f for f in faces if f.leaf_index == k]
        if isinstance(prim, Revolve):
            cands = [f for f in leaf_faces if f.surface_type in REVOLVE_KINDS]
            if not cands:
                return None
            face = max(cands, key=lambda f: int(f.valid.sum()))
            commands.append(AddRevolve(face.face_id, op))
            continue
        caps = {f.local_index: f for f in leaf_faces if f.local_index in (0, 1)}
        plane0 = prim.profile.plane
        n = plane0.normal
        cap_planes = {0: plane0.origin, 1: plane0.origin + prim.distance * n}
        order = sorted(caps, key=lambda li: not _trim_field(caps[li])[0])
        chosen = None
        for li in order:
            start = caps[li]
            end_pt = cap_planes[1 - li]
            end = _face_on_plane(planar, end_pt, n, exclude_id=start.face_id)
            if end is not None:
                chosen = AddExtrude(start.face_id, end.face_id, op)
                break
        if chosen is None:
            return None
        commands.append(chosen)
    return commands


def _light_replay(solid, faces, commands):
    """Replay commands from face specs and return (reached, terminal iou64)."""
    from .rewards import iou as iou_fn, _occupancy
    by_id = {f.face_id: f for f in faces}
    occ_cache = {}

    def shared_iou(current, res):
        lo = np.minimum(current.bbox[0], solid.bbox[0])
        hi = np.maximum(current.bbox[1], solid.bbox[1])
        key = (res, tuple(np.round(lo, 9)), tuple(np.round(hi, 9)))
        if key not in occ_cache:
            occ_cache[key] = _occupancy(solid, lo, hi, res)
        return iou_fn(current, solid, res, target_occupancy=occ_cache[key])

    current = Solid.empty()
    for cmd in commands:
        if isinstance(cmd, AddExtrude):
            spec = extract_extrude_params(by_id[cmd.f_start], by_id[cmd.f_end],
                                          cmd.op)
        else:
            spec = extract_revolve_params(by_id[cmd.face], cmd.op)
        current = apply(current, spec)
        if shared_iou(current, 32) >= 0.93:
            i64 = shared_iou(current, 64)
            if i64 >= 0.98:
                return True, i64
    return False, 0.0


def _voxel_signature(solid, resolution=32):
    lo = np.array([-1.0, -1.0, -1.0])
    hi = np.array([1.0, 1.0, 1.0])
    from .rewards import _occupancy
    occ = _occupancy(solid, lo, hi, resolution)
    return hashlib.sha256(np.packbits(occ).tobytes()).hexdigest()


# ---------------------------------------------------------------------------
# the generator
# ---------------------------------------------------------------------------

def _quotas(count, fractions):
    fr = {b: float(fractions.get(b, 0.0)) for b in BINS}
    total = sum(fr.values())
    if abs(total - 1.0) > 1e-9:
        raise ValueError("bin fractions must sum to 1")
    base = {b: int(math.floor(fr[b] * count)) for b in BINS}
    rem = count - sum(base.values())
    order = sorted(BINS, key=lambda b: -(fr[b] * count - base[b]))
    for b in order[:rem]:
        base[b] += 1
    return base


def try_make_record(seed_tuple, hint):
    """One candidate attempt; returns (record, voxel_sig) or None."""
    rng = np.random.default_rng(seed_tuple)
    built = _build_candidate(rng, hint)
    if built is None:
        return None
    prims, ops = built
    normalized = _normalize(prims, ops)
    if normalized is None:
        return None
    steps, solid = normalized
    if solid.estimate_volume(32) <= 1e-4:
        return None
    try:
        faces = extract_faces(solid)
    except Exception:
        return None
    if not faces:
        return None
    prims_n = solid.leaves()
    commands = _map_to_commands(solid, faces, prims_n, ops)
    if commands is None:
        return None
    try:
        reached, terminal = _light_replay(solid, faces, commands)
    except Exception:
        return None
    if not reached or terminal < REPLAY_IOU_BAR:
        return None
    dsl_text = print_ast(CommandAst(tuple(commands)))
    rec_id = hashlib.sha256(
        (dsl_text + json.dumps(steps, sort_keys=True)).encode()).hexdigest()[:16]
    lo, hi = solid.bbox
    record = DatasetRecord(
        id=rec_id, dsl=dsl_text, profiles=steps, face_count=len(faces),
        bin=bin_of(len(faces)), bbox=[lo.tolist(), hi.tolist()])
    return record, _voxel_signature(solid)


_WAVE = 16  # attempts per scheduling wave, worker-count independent


def _attempt_stream(seed, hint, start, stop, workers):
    """Yield (attempt, result) in attempt order, optionally in parallel."""
    args = [((seed, i), hint) for i in range(start, stop)]
    if workers <= 1:
        for i, a in enumerate(args, start=start):
            yield i, try_make_record(*a)
        return
    import multiprocessing as mp
    with mp.get_context("fork").Pool(workers) as pool:
        for i, res in enumerate(pool.starmap(try_make_record, args,
                                             chunksize=2), start=start):
            yield i, res


def generate(count, bin_fractions=None, seed=0, max_attempts=None,
             workers=1, progress=None):
    """Deterministic stratified corpus; raises QuotaUnreachable on budget.

    Candidates are pure functions of (seed, attempt index, hint); the hint
    for a wave of attempts is the most-deficient bin at the wave start, so
    the result is identical for any worker count.
    """
    fractions = bin_fractions or {"simple": 0.33, "medium": 0.32,
                                  "complex": 0.35}
    quotas = _quotas(count, fractions)
    max_attempts = max_attempts or max(200, count * 120)
    got = {b: [] for b in BINS}
    seq_hashes, voxel_sigs = set(), set()
    attempt = 0
    while any(len(got[b]) < quotas[b] for b in BINS):
        if attempt >= max_attempts:
            raise QuotaUnreachable(
                f"bin quotas unmet after {attempt} attempts: "
                f"{ {b: len(got[b]) for b in BINS} } vs {quotas}")
        hint = min(BINS, key=lambda b: (len(got[b]) - quotas[b], BINS.index(b)))
        stop = min(attempt + _WAVE, max_attempts)
        for idx, made in _attempt_stream(seed, hint, attempt, stop, workers):
            if made is None:
                continue
            record, sig = made
            if record.id in seq_hashes or sig in voxel_sigs:
                continue
            if len(got[record.bin]) >= quotas[record.bin]:
                continue
            got[record.bin].append(record)
            seq_hashes.add(record.id)
            voxel_sigs.add(sig)
            if progress:
                progress(sum(len(v) for v in got.values()), count)
        attempt = stop
    out = []
    for b in BINS:
        out.extend(got[b])
    return out


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

def save(records, path):
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(rec.to_json() + "\n")


def load(path, validate=True):
    """Load a corpus; each record is re-validated by reconstruction."""
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = DatasetRecord.from_json(line)
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                raise CorruptRecord(f"unparseable record: {exc}", line=lineno)
            if validate:
                try:
                    solid = record_solid(rec)
                    faces = extract_faces(solid)
                except Exception as exc:
                    raise CorruptRecord(f"rebuild failed: {exc}", line=lineno)
                if len(faces) != rec.face_count:
                    raise CorruptRecord(
                        f"face count {len(faces)} != recorded {rec.face_count}",
                        line=lineno)
                if bin_of(rec.face_count) != rec.bin:
                    raise CorruptRecord(
                        f"bin {rec.bin!r} inconsistent with face count",
                        line=lineno)
            records.append(rec)
    return records
