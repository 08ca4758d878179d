import math

import numpy as np
import pytest

from cadgym import ArcSegment, LineSegment, Profile, Revolve, Solid, circle
from cadgym.brep import extract_faces
from cadgym.errors import (Coplanar, GeometryError, InvalidOpForState,
                           NotParallel, NotPlanar, UnsupportedSurface)
from cadgym.fixtures import (full_cylinder, full_sphere, ring_torus, rz_plane,
                             unit_cube, cube_with_pocket)
from cadgym.ops import (ExtrudeSpec, apply, extract_extrude_params,
                        extract_revolve_params)
from cadgym.rewards import iou

TWO_PI = 2 * math.pi


def faces_by_local(solid):
    return {(f.leaf_index, f.local_index): f for f in extract_faces(solid)}


class TestExtractExtrude:
    def test_cube_bottom_to_top(self):
        fl = faces_by_local(unit_cube())
        spec = extract_extrude_params(fl[(0, 0)], fl[(0, 1)], "newbody")
        assert spec.distance == pytest.approx(1.0)
        assert spec.direction == pytest.approx([0, 0, 1])
        assert spec.profile.area == pytest.approx(1.0, rel=1e-6)

    def test_reversed_pair_flips_direction(self):
        fl = faces_by_local(unit_cube())
        spec = extract_extrude_params(fl[(0, 1)], fl[(0, 0)], "newbody")
        assert spec.distance == pytest.approx(1.0)
        assert spec.direction == pytest.approx([0, 0, -1])
        assert spec.profile.area == pytest.approx(1.0, rel=1e-6)

    def test_coplanar_rejected(self):
        fl = faces_by_local(unit_cube())
        with pytest.raises(Coplanar):
            extract_extrude_params(fl[(0, 0)], fl[(0, 0)], "newbody")

    def test_nonplanar_rejected(self):
        faces = extract_faces(full_cylinder())
        side = [f for f in faces if f.surface_type == "cylinder"][0]
        cap = [f for f in faces if f.surface_type == "plane"][0]
        with pytest.raises(NotPlanar):
            extract_extrude_params(cap, side, "newbody")

    def test_perpendicular_rejected(self):
        fl = faces_by_local(unit_cube())
        with pytest.raises(NotParallel):
            extract_extrude_params(fl[(0, 0)], fl[(0, 2)], "newbody")

    def test_trimmed_region_from_pocket_floor(self):
        """The pocket floor (a clean subtracted cap) extracts exactly."""
        solid = cube_with_pocket()
        fl = faces_by_local(solid)
        floor = fl[(1, 0)]
        top_ring = fl[(0, 1)]
        spec = extract_extrude_params(floor, top_ring, "subtraction")
        assert spec.profile.area == pytest.approx(0.16, rel=1e-6)
        assert spec.distance == pytest.approx(0.5)

    def test_trimmed_region_polygonized(self):
        """A partially-trimmed cap falls back to marching squares."""
        solid = cube_with_pocket()
        fl = faces_by_local(solid)
        top_ring = fl[(0, 1)]       # top face with the pocket mouth hole
        bottom = fl[(0, 0)]
        spec = extract_extrude_params(top_ring, bottom, "newbody")
        # largest contour is the outer square (the hole is dropped)
        assert spec.profile.area == pytest.approx(1.0, rel=0.08)


class TestExtractRevolve:
    def test_cylinder_side_quad(self):
        faces = extract_faces(full_cylinder(1.0, 2.0))
        side = [f for f in faces if f.surface_type == "cylinder"][0]
        spec = extract_revolve_params(side, "newbody")
        assert spec.angle == pytest.approx(TWO_PI, abs=1e-9)
        verts = [s.p0 for s in spec.profile.segments]
        assert np.allclose(verts, [(1, 0), (1, 2), (0, 2), (0, 0)], atol=1e-6)

    def test_sphere_semicircle_plus_diameter(self):
        faces = extract_faces(full_sphere(1.0))
        spec = extract_revolve_params(faces[0], "newbody")
        assert spec.angle == pytest.approx(TWO_PI, abs=1e-9)
        kinds = [type(s).__name__ for s in spec.profile.segments]
        assert kinds == ["ArcSegment", "LineSegment"]
        seg = spec.profile.segments[1]
        # the closing segment runs through the sphere center along the axis
        assert abs(seg.p0[0]) < 1e-9 and abs(seg.p1[0]) < 1e-9

    def test_quarter_torus_patch(self):
        prof = circle(rz_plane(), 1.0, 0.0, 0.25)
        quarter = Solid.from_primitive(
            Revolve(prof, (0, 0, 0), (0, 0, 1), math.pi / 2))
        faces = extract_faces(quarter)
        tor = [f for f in faces if f.surface_type == "torus"][0]
        spec = extract_revolve_params(tor, "newbody")
        assert spec.angle == pytest.approx(math.pi / 2, abs=1e-9)
        kinds = [type(s).__name__ for s in spec.profile.segments]
        assert kinds == ["ArcSegment"]  # full minor circle stays a circle

    def test_partial_minor_arc_closes_to_center(self):
        arc = ArcSegment((1.0, 0.0), 0.25, -math.pi / 2, math.pi / 2, True)
        prof = Profile(rz_plane(), [
            arc, LineSegment(tuple(arc.end()), (1.0, 0.0)),
            LineSegment((1.0, 0.0), tuple(arc.start()))])
        solid = Solid.from_primitive(Revolve(prof, (0, 0, 0), (0, 0, 1), TWO_PI))
        tor = [f for f in extract_faces(solid) if f.surface_type == "torus"][0]
        spec = extract_revolve_params(tor, "newbody")
        kinds = [type(s).__name__ for s in spec.profile.segments]
        assert kinds == ["ArcSegment", "LineSegment", "LineSegment"]

    def test_planar_face_unsupported(self):
        fl = faces_by_local(unit_cube())
        with pytest.raises(UnsupportedSurface):
            extract_revolve_params(fl[(0, 0)], "newbody")


class TestApply:
    def test_newbody_from_empty(self):
        fl = faces_by_local(unit_cube())
        spec = extract_extrude_params(fl[(0, 0)], fl[(0, 1)], "newbody")
        s = apply(Solid.empty(), spec)
        assert s.estimate_volume(64) == pytest.approx(1.0, rel=0.02)

    def test_self_subtraction_empties(self):
        cube = unit_cube()
        fl = faces_by_local(cube)
        spec = extract_extrude_params(fl[(0, 0)], fl[(0, 1)], "subtraction")
        s = apply(cube, spec)
        assert s.estimate_volume(48) == pytest.approx(0.0, abs=1e-6)

    def test_union_on_empty_rejected(self):
        fl = faces_by_local(unit_cube())
        spec = extract_extrude_params(fl[(0, 0)], fl[(0, 1)], "union")
        with pytest.raises(InvalidOpForState):
            apply(Solid.empty(), spec)

    def test_newbody_on_nonempty_rejected(self):
        cube = unit_cube()
        fl = faces_by_local(cube)
        spec = extract_extrude_params(fl[(0, 0)], fl[(0, 1)], "newbody")
        with pytest.raises(InvalidOpForState):
            apply(cube, spec)

    def test_apply_is_pure(self):
        cube = unit_cube()
        rev = cube.revision
        tree_hash = cube.structural_hash()
        fl = faces_by_local(cube)
        spec = extract_extrude_params(fl[(0, 0)], fl[(0, 1)], "union")
        apply(cube, spec)
        assert cube.revision == rev
        assert cube.structural_hash() == tree_hash

    def test_union_commutative_and_idempotent_in_volume(self):
        a = unit_cube()
        b = full_sphere(0.6)
        vol_ab = a.union(b).estimate_volume(48)
        vol_ba = b.union(a).estimate_volume(48)
        assert vol_ab == pytest.approx(vol_ba, rel=0.02)
        assert a.union(a).estimate_volume(48) == pytest.approx(
            a.estimate_volume(48), rel=0.02)


class TestRoundTrips:
    @pytest.mark.parametrize("make", [
        lambda: full_cylinder(0.8, 1.4),
        lambda: full_sphere(0.9),
        lambda: ring_torus(0.9, 0.3),
    ])
    def test_revolve_round_trip(self, make):
        solid = make()
        side = [f for f in extract_faces(solid)
                if f.surface_type in ("cylinder", "cone", "sphere", "torus")][0]
        spec = extract_revolve_params(side, "newbody")
        rebuilt = apply(Solid.empty(), spec)
        assert iou(rebuilt, solid, 64) >= 0.99

    def test_extrude_round_trip(self):
        solid = unit_cube()
        fl = faces_by_local(solid)
        spec = extract_extrude_params(fl[(0, 0)], fl[(0, 1)], "newbody")
        rebuilt = apply(Solid.empty(), spec)
        assert iou(rebuilt, solid, 64) >= 0.99
