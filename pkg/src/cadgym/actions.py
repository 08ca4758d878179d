"""Discrete action space enumerated from a target solid's faces.

Planar faces are grouped by parallel normals; every ordered non-coplanar
pair within a group is an extrusion candidate, and every supported
revolution surface is a revolve candidate.  Each geometric candidate is
validated by executing it from the empty state, then crossed with the
four boolean ops to form the index-mapped action table.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import BOOL_OPS
from .errors import EmptyTarget
from .ops import apply, extract_extrude_params, extract_revolve_params

PARALLEL_GROUP_TOL = 1e-6


@dataclass(frozen=True)
class Action:
    f_s: int
    f_e: int
    o_t: str
    a_t: str

    def __post_init__(self):
        if self.a_t == "revolve" and self.f_s != self.f_e:
            raise ValueError("revolve actions must have f_s == f_e")
        if self.a_t == "extrude" and self.f_s == self.f_e:
            raise ValueError("extrude actions must have f_s != f_e")


class ActionTable:
    """Ordered action list with an inverse index and cached specs."""

    def __init__(self, actions, specs):
        self.actions = list(actions)
        self._specs = list(specs)
        self.index_of = {a: i for i, a in enumerate(self.actions)}
        if len(self.index_of) != len(self.actions):
            raise ValueError("duplicate actions in table")

    def __len__(self):
        return len(self.actions)

    def __getitem__(self, i):
        return self.actions[i]

    def spec(self, i):
        """Extraction result for action i, with the action's own op."""
        base = self._specs[i]
        return type(base)(**{**base.__dict__, "op": self.actions[i].o_t})

    def index(self, action):
        return self.index_of[action]


def _parallel_groups(planar_faces):
    groups = []
    for f in planar_faces:
        n = f.surface.frame.normal
        for g in groups:
            ref = g[0].surface.frame.normal
            s = float(np.linalg.norm(np.cross(n, ref)))
            c = abs(float(np.dot(n, ref)))
            if math.atan2(s, c) < PARALLEL_GROUP_TOL:
                g.append(f)
                break
        else:
            groups.append([f])
    return groups


def enumerate_valid_actions(target_solid, target_faces):
    """Build the action table for a target (faces from ``extract_faces``)."""
    if target_solid.is_empty or not target_faces:
        raise EmptyTarget("cannot enumerate actions for an empty target")
    planar = [f for f in target_faces if f.is_planar]
    nonplanar = [f for f in target_faces if not f.is_planar]
    empty = type(target_solid).empty()

    geometric = []          # (f_s, f_e, a_t, spec-with-newbody)
    for group in _parallel_groups(planar):
        for a in group:
            for b in group:
                if a.face_id == b.face_id:
                    continue
                try:
                    spec = extract_extrude_params(a, b, "newbody")
                    apply(empty, spec)
                except Exception:
                    continue
                geometric.append((a.face_id, b.face_id, "extrude", spec))
    for f in nonplanar:
        try:
            spec = extract_revolve_params(f, "newbody")
            apply(empty, spec)
        except Exception:
            continue
        geometric.append((f.face_id, f.face_id, "revolve", spec))

    actions, specs = [], []
    for f_s, f_e, a_t, spec in geometric:
        for op in BOOL_OPS:
            actions.append(Action(f_s, f_e, op, a_t))
            specs.append(spec)
    return ActionTable(actions, specs)


def dynamic_mask(table, current_solid):
    """Per-step validity bits: newbody iff empty, and the spec still applies.

    Every table entry's extraction already succeeded at enumeration time,
    and apply() on a cached spec can only fail on an op/state mismatch, so
    the bit reduces to that compatibility check.
    """
    newbody = np.array([a.o_t == "newbody" for a in table.actions])
    if current_solid.is_empty:
        return newbody.astype(np.int8)
    return (~newbody).astype(np.int8)
