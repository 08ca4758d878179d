import numpy as np
import pytest

from cadgym import Solid
from cadgym.actions import Action, dynamic_mask, enumerate_valid_actions
from cadgym.brep import extract_faces
from cadgym.config import BOOL_OPS
from cadgym.errors import EmptyTarget
from cadgym.fixtures import full_cylinder, full_sphere, unit_cube
from cadgym.ops import apply, extract_extrude_params, extract_revolve_params


def brute_force_actions(solid, faces):
    """Independent oracle: try every (f_s, f_e, o_t, a_t) tuple."""
    empty = Solid.empty()
    out = set()
    for a in faces:
        for b in faces:
            if a.face_id == b.face_id:
                continue
            if not (a.is_planar and b.is_planar):
                continue
            try:
                spec = extract_extrude_params(a, b, "newbody")
                apply(empty, spec)
            except Exception:
                continue
            for op in BOOL_OPS:
                out.add((a.face_id, b.face_id, op, "extrude"))
    for f in faces:
        if f.is_planar:
            continue
        try:
            spec = extract_revolve_params(f, "newbody")
            apply(empty, spec)
        except Exception:
            continue
        for op in BOOL_OPS:
            out.add((f.face_id, f.face_id, op, "revolve"))
    return out


class TestEnumeration:
    def test_cube_24_actions(self, cube_ctx):
        assert len(cube_ctx.table) == 24
        extrudes = [a for a in cube_ctx.table.actions if a.a_t == "extrude"]
        assert len(extrudes) == 24

    def test_cylinder_12_actions(self, cylinder_ctx):
        t = cylinder_ctx.table
        assert len(t) == 12
        assert sum(a.a_t == "revolve" for a in t.actions) == 4
        assert sum(a.a_t == "extrude" for a in t.actions) == 8

    def test_sphere_revolve_only(self):
        solid = full_sphere()
        table = enumerate_valid_actions(solid, extract_faces(solid))
        assert len(table) == 4
        assert all(a.a_t == "revolve" for a in table.actions)

    def test_empty_target_rejected(self):
        with pytest.raises(EmptyTarget):
            enumerate_valid_actions(Solid.empty(), [])

    @pytest.mark.parametrize("make", [unit_cube, full_cylinder, full_sphere])
    def test_matches_brute_force(self, make):
        solid = make()
        faces = extract_faces(solid)
        table = enumerate_valid_actions(solid, faces)
        got = {(a.f_s, a.f_e, a.o_t, a.a_t) for a in table.actions}
        assert got == brute_force_actions(solid, faces)

    def test_ordered_pair_symmetry(self, cube_ctx):
        pairs = {(a.f_s, a.f_e) for a in cube_ctx.table.actions
                 if a.a_t == "extrude"}
        for fs, fe in pairs:
            assert (fe, fs) in pairs

    def test_index_bijection(self, cube_ctx):
        t = cube_ctx.table
        for i, a in enumerate(t.actions):
            assert t.index(a) == i
        assert len({id(a) for a in t.actions}) == len(t)

    def test_op_crossing_complete(self, cube_ctx):
        geo = {(a.f_s, a.f_e, a.a_t) for a in cube_ctx.table.actions}
        for key in geo:
            ops = {a.o_t for a in cube_ctx.table.actions
                   if (a.f_s, a.f_e, a.a_t) == key}
            assert ops == set(BOOL_OPS)


class TestActionInvariants:
    def test_revolve_requires_equal_faces(self):
        with pytest.raises(ValueError):
            Action(1, 2, "union", "revolve")

    def test_extrude_requires_distinct_faces(self):
        with pytest.raises(ValueError):
            Action(1, 1, "union", "extrude")


class TestDynamicMask:
    def test_empty_state_newbody_only(self, cube_ctx):
        mask = dynamic_mask(cube_ctx.table, Solid.empty())
        on = [cube_ctx.table[i] for i in np.flatnonzero(mask)]
        assert on and all(a.o_t == "newbody" for a in on)

    def test_nonempty_state_masks_newbody(self, cube_ctx, cube_solid):
        mask = dynamic_mask(cube_ctx.table, cube_solid)
        on = [cube_ctx.table[i] for i in np.flatnonzero(mask)]
        assert on and all(a.o_t != "newbody" for a in on)

    def test_never_all_masked_for_live_states(self, cube_ctx, cube_solid):
        assert dynamic_mask(cube_ctx.table, Solid.empty()).sum() > 0
        assert dynamic_mask(cube_ctx.table, cube_solid).sum() > 0
