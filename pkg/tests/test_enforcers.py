import math

import numpy as np
import pytest

from scenegame.enforcers import (
    DEFAULT_CONSTRAINTS,
    LARGE_RADIUS,
    SMALL_RADIUS,
    SceneConstraintConfig,
    UNCONSTRAINED,
    _disc_overlap_fraction,
    check_question_relevance,
    check_scene,
    scene_is_valid,
    visibility_proxy,
)
from scenegame.programs import Answer, FunctionalProgram, ProgramNode, execute
from scenegame.scene import SceneObject, SceneGraph
from scene_helpers import make_scene

NO_MARGIN = SceneConstraintConfig(direction_margin=0.0, min_visibility=0.0)


def pair_scene(d, y=0.0):
    return make_scene([(-d / 2, 0.0), (d / 2, y), (0.0, 2.5)])


class TestDistance:
    def test_threshold(self):
        # B-style threshold at 0.25 center distance
        bad = check_scene(pair_scene(0.24), NO_MARGIN)
        assert any(v.kind == "distance" for v in bad)
        assert scene_is_valid(pair_scene(0.26), NO_MARGIN)

    def test_violation_reports_pair(self):
        v = [x for x in check_scene(pair_scene(0.1), NO_MARGIN) if x.kind == "distance"]
        assert v and v[0].objects == (0, 1)
        assert v[0].measured == pytest.approx(0.1)


class TestBounds:
    def test_out_of_bounds_rejected(self):
        scene = make_scene([(-3.2, 0.0), (0.0, 1.0), (2.0, -1.0)])
        assert any(v.kind == "bounds" for v in check_scene(scene, NO_MARGIN))

    def test_boundary_inclusive(self):
        scene = make_scene([(-3.0, -3.0), (3.0, 3.0), (0.0, 0.5)])
        assert not any(v.kind == "bounds" for v in check_scene(scene, NO_MARGIN))

    def test_stretching_mode(self):
        # enforce_bounds off admits out-of-range placements
        scene = make_scene([(-5.0, 0.0), (0.0, 1.0), (5.0, -1.0)])
        cfg = SceneConstraintConfig(
            enforce_bounds=False, direction_margin=0.0, min_visibility=0.0
        )
        assert scene_is_valid(scene, cfg)


class TestMargin:
    def test_ambiguous_pair_rejected(self):
        # 0.3 apart on x, 0.2 on y: below margin 0.4 on both axes
        scene = make_scene([(0.0, 0.0), (0.3, 0.2), (0.0, 2.5)])
        cfg = SceneConstraintConfig(min_center_dist=0.0, min_visibility=0.0)
        assert any(v.kind == "margin" for v in check_scene(scene, cfg))

    def test_clear_on_one_axis_accepted(self):
        # x separation 1.0 disambiguates left/right; y stays ambiguous
        scene = make_scene([(-0.5, 0.0), (0.5, 0.1), (0.0, 2.5)])
        cfg = SceneConstraintConfig(min_visibility=0.0)
        assert not any(v.kind == "margin" for v in check_scene(scene, cfg))

    def test_strict_mode_rejects_single_axis_ambiguity(self):
        scene = make_scene([(-0.5, 0.0), (0.5, 0.1), (0.0, 2.5)])
        cfg = SceneConstraintConfig(min_visibility=0.0, strict_margin=True)
        assert any(v.kind == "margin" for v in check_scene(scene, cfg))


class TestCount:
    def test_too_few(self):
        scene = make_scene([(-1.0, 0.0), (1.0, 0.0)])
        assert any(v.kind == "count" for v in check_scene(scene, NO_MARGIN))

    def test_relaxed_floor(self):
        scene = make_scene([(-1.0, 0.0), (1.0, 0.0)])
        cfg = SceneConstraintConfig(
            min_objects=2, direction_margin=0.0, min_visibility=0.0
        )
        assert scene_is_valid(scene, cfg)


class TestVisibility:
    def test_clear_object(self):
        scene = make_scene([(-2.5, 0.0), (2.5, 0.0), (0.0, 2.5)])
        for i in range(3):
            assert visibility_proxy(scene, i, NO_MARGIN) == 1.0

    def test_identical_radius_same_spot_fully_occluded(self):
        # equal-size object directly in front at distance 0
        objs = tuple(
            SceneObject(id=i, shape=0, color=i, size=1, material=0, x=x, y=y)
            for i, (x, y) in enumerate([(0.0, 0.0), (0.0, 0.0), (2.0, 2.0)])
        )
        scene = SceneGraph(objects=objs)
        assert visibility_proxy(scene, 0, NO_MARGIN) == pytest.approx(0.0)

    def test_occluder_must_be_in_front(self):
        # other object is behind the target (larger y): no occlusion
        scene = make_scene([(0.0, -1.0), (0.0, 0.0), (2.5, 2.0)], size=1)
        assert visibility_proxy(scene, 0, NO_MARGIN) == 1.0
        assert visibility_proxy(scene, 1, NO_MARGIN) < 1.0

    def test_small_behind_large_rejected(self):
        objs = tuple(
            SceneObject(id=i, shape=0, color=i, size=s, material=0, x=x, y=y)
            for i, (x, y, s) in enumerate(
                [(0.0, 0.3, 0), (0.0, 0.0, 1), (2.5, -2.0, 0)]
            )
        )
        scene = SceneGraph(objects=objs)
        cfg = SceneConstraintConfig(direction_margin=0.0, min_center_dist=0.0)
        assert any(v.kind == "visibility" for v in check_scene(scene, cfg))


class TestDiscOverlapOracle:
    """The lens-area formula against Monte Carlo integration."""

    @pytest.mark.parametrize(
        "r1,r2,d",
        [
            (LARGE_RADIUS, LARGE_RADIUS, 0.5),
            (LARGE_RADIUS, SMALL_RADIUS, 0.4),
            (SMALL_RADIUS, LARGE_RADIUS, 0.3),
            (LARGE_RADIUS, LARGE_RADIUS, 1.3),
            (SMALL_RADIUS, SMALL_RADIUS, 0.1),
        ],
    )
    def test_against_monte_carlo(self, r1, r2, d):
        rng = np.random.default_rng(42)
        pts = rng.uniform(-r1, r1, size=(100_000, 2))
        inside = (pts ** 2).sum(axis=1) <= r1 * r1
        covered = ((pts[:, 0] - d) ** 2 + pts[:, 1] ** 2) <= r2 * r2
        estimate = (inside & covered).sum() / inside.sum()
        exact = _disc_overlap_fraction(r1, r2, d)
        assert exact == pytest.approx(estimate, abs=0.01)

    def test_disjoint(self):
        assert _disc_overlap_fraction(1.0, 1.0, 2.5) == 0.0

    def test_contained(self):
        assert _disc_overlap_fraction(0.5, 1.0, 0.1) == 1.0
        assert _disc_overlap_fraction(1.0, 0.5, 0.1) == pytest.approx(0.25)


class TestRelevance:
    def setup_method(self):
        self.program = FunctionalProgram((
            ProgramNode("scene", (), ()),
            ProgramNode("filter_shape", (0,), ("cube",)),
            ProgramNode("count", (1,), ()),
        ))

    def test_preserved(self, three_scene):
        gt = execute(self.program, three_scene)
        moved = make_scene([(-1.0, -2.0), (0.0, 0.5), (2.0, 1.5)])
        assert check_question_relevance(self.program, moved, gt)

    def test_changed_gt_rejected(self, three_scene):
        wrong = Answer("int", 5)
        assert not check_question_relevance(self.program, three_scene, wrong)

    def test_undetermined_rejected(self, three_scene):
        program = FunctionalProgram((
            ProgramNode("scene", (), ()),
            ProgramNode("filter_size", (0,), ("small",)),
            ProgramNode("unique", (1,), ()),
            ProgramNode("query_color", (2,), ()),
        ))
        gt = Answer("attr", "gray")
        # two small objects: unique is ambiguous on any scene
        assert not check_question_relevance(program, three_scene, gt)


def test_unconstrained_accepts_almost_anything():
    scene = make_scene([(-9.0, 0.0), (-9.0, 0.0)])
    assert scene_is_valid(scene, UNCONSTRAINED)
