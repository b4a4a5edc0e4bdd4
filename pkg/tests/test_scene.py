import math

import pytest
from hypothesis import given, strategies as st

from scenegame.scene import (
    COORD_HI,
    COORD_LO,
    DEFAULT_GRID,
    Displacement,
    GridSpec,
    MAX_OBJECTS,
    OBJECT_TOKENS,
    PAD,
    QUESTION_TOKENS,
    SceneGraph,
    SceneObject,
    apply_displacement,
    bin_center,
    compute_relation,
    discretize,
    scene_from_record,
    scene_to_record,
    tokenize,
)
from scene_helpers import make_scene


class TestGridSpec:
    def test_default_width(self):
        assert DEFAULT_GRID.width == pytest.approx(6.0 / 7.0)

    def test_max_offset(self):
        assert DEFAULT_GRID.max_offset == 3

    def test_rejects_degenerate(self):
        with pytest.raises(ValueError):
            GridSpec(bins_per_axis=1)
        with pytest.raises(ValueError):
            GridSpec(lo=1.0, hi=1.0)


class TestDiscretize:
    def test_edges(self):
        assert discretize(COORD_LO) == 0
        assert discretize(COORD_HI) == 6
        assert discretize(0.0) == 3

    def test_clamps_out_of_range(self):
        assert discretize(-100.0) == 0
        assert discretize(100.0) == 6

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            discretize(float("nan"))
        with pytest.raises(ValueError):
            discretize(float("inf"))

    @given(st.integers(min_value=0, max_value=6))
    def test_bin_center_roundtrip(self, b):
        # discretize after bin_center is the identity on bin indices
        assert discretize(bin_center(b)) == b

    @given(
        st.floats(min_value=COORD_LO, max_value=COORD_HI, allow_nan=False),
        st.integers(min_value=2, max_value=15),
    )
    def test_in_range_for_any_grid(self, x, n):
        grid = GridSpec(bins_per_axis=n)
        assert 0 <= discretize(x, grid) < n


class TestDisplacement:
    def test_needs_ten_entries(self):
        with pytest.raises(ValueError):
            Displacement(((0, 0),) * 9)

    def test_zero(self):
        d = Displacement.zero(3)
        assert d.moves[:3] == ((0, 0),) * 3
        assert d.moves[3:] == (None,) * 7

    def test_apply_shifts_by_bin_width(self, three_scene):
        d = Displacement.from_pairs([(1, 0), (0, -2), (0, 0)])
        out = apply_displacement(three_scene, d)
        w = DEFAULT_GRID.width
        assert out.objects[0].x == pytest.approx(three_scene.objects[0].x + w)
        assert out.objects[1].y == pytest.approx(three_scene.objects[1].y - 2 * w)
        assert out.objects[2].position() == three_scene.objects[2].position()

    def test_apply_does_not_clamp(self):
        scene = make_scene([(2.9, 0.0), (0.0, 0.0), (-2.0, 0.0)])
        d = Displacement.from_pairs([(3, 0), (0, 0), (0, 0)])
        out = apply_displacement(scene, d)
        assert out.objects[0].x > COORD_HI

    def test_attributes_preserved(self, three_scene):
        out = apply_displacement(three_scene, Displacement.zero(3))
        for a, b in zip(out.objects, three_scene.objects):
            assert (a.shape, a.color, a.size, a.material) == (
                b.shape, b.color, b.size, b.material)


class TestSceneGraph:
    def test_ids_must_be_dense(self):
        obj = SceneObject(id=1, shape=0, color=0, size=0, material=0, x=0, y=0)
        with pytest.raises(ValueError):
            SceneGraph(objects=(obj,))

    def test_missing_direction_rejected(self, three_scene):
        with pytest.raises(ValueError):
            SceneGraph(objects=three_scene.objects, directions={"right": (1, 0)})


class TestRelations:
    def test_right_of(self, three_scene):
        # anchor at x=-2; both others are to its right
        assert compute_relation(three_scene, "right", 0) == {1, 2}
        assert compute_relation(three_scene, "left", 0) == set()

    def test_anchor_excluded(self, three_scene):
        for d in ("left", "right", "front", "behind"):
            assert 1 not in compute_relation(three_scene, d, 1)

    def test_tie_on_neither_side(self):
        scene = make_scene([(0.0, 0.0), (0.0, 1.0), (1.0, 0.0)])
        assert 1 not in compute_relation(scene, "right", 0)
        assert 1 not in compute_relation(scene, "left", 0)

    def test_left_right_partition(self, three_scene):
        left = compute_relation(three_scene, "left", 1)
        right = compute_relation(three_scene, "right", 1)
        assert left | right <= {0, 2}
        assert not left & right


class TestTokenize:
    def test_layout(self, three_scene):
        seq = tokenize(three_scene, (4, 7, 2))
        assert len(seq.object_tokens) == OBJECT_TOKENS
        assert len(seq.question_tokens) == QUESTION_TOKENS
        assert len(seq) == 110

    def test_padding(self, three_scene):
        seq = tokenize(three_scene, (4,))
        assert all(t == PAD for t in seq.object_tokens[18:])
        assert all(t == PAD for t in seq.question_tokens[1:])
        assert seq.question_tokens[0] == 4

    def test_object_slot_contents(self, three_scene):
        seq = tokenize(three_scene, ())
        o = three_scene.objects[1]
        slot = seq.object_tokens[6:12]
        assert slot == (discretize(o.x), discretize(o.y), o.shape, o.color,
                        o.size, o.material)

    def test_question_overflow_rejected(self, three_scene):
        with pytest.raises(ValueError):
            tokenize(three_scene, tuple(range(51)))


class TestSceneIO:
    def test_roundtrip(self, three_scene):
        rec = scene_to_record(three_scene)
        back = scene_from_record(rec)
        assert back == three_scene

    def test_z_coordinate_ignored(self, three_scene):
        rec = scene_to_record(three_scene)
        for o in rec["objects"]:
            o["3d_coords"][2] = 1.5
        assert scene_from_record(rec) == three_scene

    def test_directions_normalized(self, three_scene):
        rec = scene_to_record(three_scene)
        rec["directions"]["right"] = [2.0, 0.0]
        back = scene_from_record(rec)
        assert back.direction("right") == (1.0, 0.0)
