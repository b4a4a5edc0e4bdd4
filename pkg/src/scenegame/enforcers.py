"""The two environment gates: scene validity (in-distribution) and question
relevance (consistency).

Scene validity mirrors the CLEVR generator's placement rules: coordinate
bounds, a minimum distance of 0.25 between object centers, a 0.4 margin
along the cardinal directions, an occlusion proxy, and a 3..10 object count.
A pair trips the margin rule only when its separation is below the margin on
*every* cardinal axis (``strict_margin`` flips this to per-axis rejection).
Disabling ``enforce_bounds`` reproduces the scene-stretching escape hatch as
a controlled mode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .scene import (
    COORD_HI,
    COORD_LO,
    MAX_OBJECTS,
    MIN_OBJECTS,
    SceneGraph,
)
from .programs import (
    Answer,
    FunctionalProgram,
    UNDETERMINED,
    answer_equal,
    execute,
)

# Effective 2-D disc radii standing in for rendered object footprints;
# small objects are ~40% of the large size.
LARGE_RADIUS = 0.7
SMALL_RADIUS = 0.4 * LARGE_RADIUS


@dataclass(frozen=True)
class SceneConstraintConfig:
    min_center_dist: float = 0.25
    direction_margin: float = 0.4
    min_visibility: float = 0.2
    bound_lo: float = COORD_LO
    bound_hi: float = COORD_HI
    min_objects: int = MIN_OBJECTS
    max_objects: int = MAX_OBJECTS
    enforce_bounds: bool = True
    strict_margin: bool = False
    large_radius: float = LARGE_RADIUS
    small_radius: float = SMALL_RADIUS

    def __post_init__(self) -> None:
        for name in ("min_center_dist", "direction_margin", "min_visibility"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")


DEFAULT_CONSTRAINTS = SceneConstraintConfig()
UNCONSTRAINED = SceneConstraintConfig(
    min_center_dist=0.0,
    direction_margin=0.0,
    min_visibility=0.0,
    min_objects=0,
    enforce_bounds=False,
)


@dataclass(frozen=True)
class Violation:
    kind: str  # bounds | distance | margin | visibility | count
    objects: tuple[int, ...]
    measured: float


def _radius(scene: SceneGraph, obj_id: int, cfg: SceneConstraintConfig) -> float:
    # size index 1 is "large" under the default vocabulary ordering
    obj = scene.objects[obj_id]
    return cfg.large_radius if obj.size == 1 else cfg.small_radius


def visibility_proxy(
    scene: SceneGraph, obj_id: int, cfg: SceneConstraintConfig = DEFAULT_CONSTRAINTS
) -> float:
    """Fraction of the object's disc left uncovered by discs of objects in
    front of it (smaller y under the default front direction). 1.0 when clear.

    Overlap from several occluders is combined as if independent; good enough
    for a rejection threshold without a renderer.
    """
    if not 0 <= obj_id < len(scene):
        raise ValueError(f"object {obj_id} not in scene")
    target = scene.objects[obj_id]
    fx, fy = scene.direction("front")
    r = _radius(scene, obj_id, cfg)
    visible = 1.0
    for other in scene.objects:
        if other.id == obj_id:
            continue
        # occluders are at least as close to the camera along the front vector
        depth = (other.x - target.x) * fx + (other.y - target.y) * fy
        if depth < 0:
            continue
        d = math.hypot(other.x - target.x, other.y - target.y)
        visible *= 1.0 - _disc_overlap_fraction(r, _radius(scene, other.id, cfg), d)
    return visible


def _disc_overlap_fraction(r_target: float, r_occluder: float, d: float) -> float:
    """Fraction of the target disc's area covered by the occluder disc."""
    if d >= r_target + r_occluder:
        return 0.0
    if d <= abs(r_occluder - r_target):
        if r_occluder >= r_target:
            return 1.0
        return (r_occluder / r_target) ** 2
    # lens area of two intersecting circles
    r1, r2 = r_target, r_occluder
    a1 = r1 * r1 * math.acos((d * d + r1 * r1 - r2 * r2) / (2 * d * r1))
    a2 = r2 * r2 * math.acos((d * d + r2 * r2 - r1 * r1) / (2 * d * r2))
    tri = 0.5 * math.sqrt(
        max(0.0, (-d + r1 + r2) * (d + r1 - r2) * (d - r1 + r2) * (d + r1 + r2))
    )
    return (a1 + a2 - tri) / (math.pi * r1 * r1)


def check_scene(
    scene: SceneGraph, cfg: SceneConstraintConfig = DEFAULT_CONSTRAINTS
) -> list[Violation]:
    """Run every constraint and report all violations (empty list = valid)."""
    violations: list[Violation] = []
    n = len(scene)
    if not cfg.min_objects <= n <= cfg.max_objects:
        violations.append(Violation("count", tuple(range(n)), float(n)))
    if cfg.enforce_bounds:
        for obj in scene.objects:
            for coord in (obj.x, obj.y):
                if not cfg.bound_lo <= coord <= cfg.bound_hi:
                    violations.append(Violation("bounds", (obj.id,), coord))
    axes = [scene.direction("right"), scene.direction("behind")]
    for i in range(n):
        oi = scene.objects[i]
        for j in range(i + 1, n):
            oj = scene.objects[j]
            dx, dy = oj.x - oi.x, oj.y - oi.y
            dist = math.hypot(dx, dy)
            if cfg.min_center_dist > 0 and dist < cfg.min_center_dist:
                violations.append(Violation("distance", (i, j), dist))
            if cfg.direction_margin > 0:
                seps = [abs(dx * ax + dy * ay) for ax, ay in axes]
                if cfg.strict_margin:
                    bad = min(seps) < cfg.direction_margin
                else:
                    bad = max(seps) < cfg.direction_margin
                if bad:
                    violations.append(Violation("margin", (i, j), max(seps)))
    if cfg.min_visibility > 0:
        for obj in scene.objects:
            score = visibility_proxy(scene, obj.id, cfg)
            if score < cfg.min_visibility:
                violations.append(Violation("visibility", (obj.id,), score))
    return violations


def scene_is_valid(
    scene: SceneGraph, cfg: SceneConstraintConfig = DEFAULT_CONSTRAINTS
) -> bool:
    return not check_scene(scene, cfg)


def check_question_relevance(
    program: FunctionalProgram, new_scene: SceneGraph, gt: Answer
) -> bool:
    """True iff the program still evaluates to the original ground truth.
    An Undetermined result on the new scene is a rejection."""
    result = execute(program, new_scene)
    if result is UNDETERMINED:
        return False
    return answer_equal(result, gt)
