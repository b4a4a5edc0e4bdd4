"""Scene-graph data model: attribute vocabularies, coordinates, displacement,
spatial relations and the token encoding consumed by the policy network.

Scenes live on a 2-D plane with coordinates confined to [-3, 3] on both axes.
Positions are continuous; the manipulation grid discretizes each axis into
``bins_per_axis`` equal bins (7 by default).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

COORD_LO = -3.0
COORD_HI = 3.0
MAX_OBJECTS = 10
MIN_OBJECTS = 3
OBJECT_SLOTS = 6          # x-bin, y-bin, shape, color, size, material
OBJECT_TOKENS = MAX_OBJECTS * OBJECT_SLOTS
QUESTION_TOKENS = 50
PAD = -1                  # the ∅ token

DIRECTION_NAMES = ("left", "right", "front", "behind")

CLEVR_COLORS = ("gray", "red", "blue", "green", "brown", "purple", "cyan", "yellow")


@dataclass(frozen=True)
class AttributeVocab:
    shapes: tuple[str, ...] = ("cube", "sphere", "cylinder")
    colors: tuple[str, ...] = CLEVR_COLORS
    sizes: tuple[str, ...] = ("small", "large")
    materials: tuple[str, ...] = ("rubber", "metal")

    def __post_init__(self) -> None:
        for names in (self.shapes, self.colors, self.sizes, self.materials):
            if len(set(names)) != len(names):
                raise ValueError(f"duplicate vocabulary names: {names}")

    def by_kind(self, kind: str) -> tuple[str, ...]:
        return {
            "shape": self.shapes,
            "color": self.colors,
            "size": self.sizes,
            "material": self.materials,
        }[kind]


DEFAULT_VOCAB = AttributeVocab()


@dataclass(frozen=True)
class SceneObject:
    id: int
    shape: int
    color: int
    size: int
    material: int
    x: float
    y: float
    rotation: float = 0.0

    def position(self) -> tuple[float, float]:
        return (self.x, self.y)


def _unit(v: tuple[float, float]) -> tuple[float, float]:
    n = math.hypot(*v)
    if n == 0:
        raise ValueError("direction vector must be nonzero")
    return (v[0] / n, v[1] / n)


DEFAULT_DIRECTIONS: dict[str, tuple[float, float]] = {
    "right": (1.0, 0.0),
    "left": (-1.0, 0.0),
    "behind": (0.0, 1.0),
    "front": (0.0, -1.0),
}


@dataclass(frozen=True)
class SceneGraph:
    objects: tuple[SceneObject, ...]
    directions: dict[str, tuple[float, float]] = field(
        default_factory=lambda: dict(DEFAULT_DIRECTIONS)
    )

    def __post_init__(self) -> None:
        for i, obj in enumerate(self.objects):
            if obj.id != i:
                raise ValueError(f"object ids must be 0..n-1, got {obj.id} at slot {i}")
        missing = set(DIRECTION_NAMES) - set(self.directions)
        if missing:
            raise ValueError(f"missing directions: {sorted(missing)}")

    def __len__(self) -> int:
        return len(self.objects)

    def direction(self, name: str) -> tuple[float, float]:
        try:
            return self.directions[name]
        except KeyError:
            raise ValueError(f"unknown direction {name!r}") from None


@dataclass(frozen=True)
class GridSpec:
    bins_per_axis: int = 7
    lo: float = COORD_LO
    hi: float = COORD_HI

    def __post_init__(self) -> None:
        if self.bins_per_axis < 2:
            raise ValueError("bins_per_axis must be >= 2")
        if not self.hi > self.lo:
            raise ValueError("hi must exceed lo")

    @property
    def width(self) -> float:
        return (self.hi - self.lo) / self.bins_per_axis

    @property
    def max_offset(self) -> int:
        # symmetric signed bin offsets: {-(N//2), ..., +(N//2)} for odd N
        return self.bins_per_axis // 2


DEFAULT_GRID = GridSpec()


@dataclass(frozen=True)
class Displacement:
    """One (dx_bin, dy_bin) pair per policy head; ``None`` marks an ∅ slot."""

    moves: tuple[tuple[int, int] | None, ...]

    def __post_init__(self) -> None:
        if len(self.moves) != MAX_OBJECTS:
            raise ValueError(f"displacement needs {MAX_OBJECTS} entries, got {len(self.moves)}")

    @staticmethod
    def zero(n_objects: int = MAX_OBJECTS) -> "Displacement":
        moves: list[tuple[int, int] | None] = [(0, 0)] * n_objects
        moves += [None] * (MAX_OBJECTS - n_objects)
        return Displacement(tuple(moves))

    @staticmethod
    def from_pairs(pairs: Sequence[tuple[int, int]]) -> "Displacement":
        moves: list[tuple[int, int] | None] = list(pairs)
        moves += [None] * (MAX_OBJECTS - len(pairs))
        return Displacement(tuple(moves))


@dataclass(frozen=True)
class TokenSequence:
    """Pre-embedding indices: 60 object slots + 50 question slots, ∅-padded."""

    object_tokens: tuple[int, ...]
    question_tokens: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.object_tokens) != OBJECT_TOKENS:
            raise ValueError("object token block must have length 60")
        if len(self.question_tokens) != QUESTION_TOKENS:
            raise ValueError("question token block must have length 50")

    def __len__(self) -> int:
        return OBJECT_TOKENS + QUESTION_TOKENS


def discretize(coord: float, grid: GridSpec = DEFAULT_GRID) -> int:
    """Map a continuous coordinate to its grid bin, clamped into range."""
    if not math.isfinite(coord):
        raise ValueError(f"non-finite coordinate: {coord}")
    raw = math.floor((coord - grid.lo) / grid.width)
    return min(max(raw, 0), grid.bins_per_axis - 1)


def bin_center(bin_index: int, grid: GridSpec = DEFAULT_GRID) -> float:
    if not 0 <= bin_index < grid.bins_per_axis:
        raise ValueError(f"bin {bin_index} out of range [0, {grid.bins_per_axis})")
    return grid.lo + (bin_index + 0.5) * grid.width


def apply_displacement(
    scene: SceneGraph, d: Displacement, grid: GridSpec = DEFAULT_GRID
) -> SceneGraph:
    """Shift each object by its head's bin offsets. Head i drives object id i;
    entries beyond the scene's object count are ignored. Positions are not
    clamped here -- out-of-bounds results are the enforcer's call to reject.
    """
    w = grid.width
    moved = []
    for obj in scene.objects:
        move = d.moves[obj.id]
        if move is None:
            moved.append(obj)
            continue
        dx_bin, dy_bin = move
        moved.append(replace(obj, x=obj.x + dx_bin * w, y=obj.y + dy_bin * w))
    return SceneGraph(objects=tuple(moved), directions=dict(scene.directions))


def compute_relation(scene: SceneGraph, direction: str, anchor: int) -> set[int]:
    """Ids of objects strictly on the ``direction`` side of the anchor.

    Membership is the sign of the dot product between the positional offset
    and the direction vector; exact ties fall on neither side.
    """
    if not 0 <= anchor < len(scene):
        raise ValueError(f"anchor {anchor} not in scene")
    dx_dir, dy_dir = scene.direction(direction)
    ax, ay = scene.objects[anchor].position()
    out = set()
    for obj in scene.objects:
        if obj.id == anchor:
            continue
        if (obj.x - ax) * dx_dir + (obj.y - ay) * dy_dir > 0:
            out.add(obj.id)
    return out


def tokenize(
    scene: SceneGraph,
    question: Sequence[int],
    grid: GridSpec = DEFAULT_GRID,
) -> TokenSequence:
    """Encode a scene and a question-id list into the fixed 110-token layout."""
    if len(question) > QUESTION_TOKENS:
        raise ValueError(f"question has {len(question)} tokens, max {QUESTION_TOKENS}")
    obj_tokens: list[int] = []
    for obj in scene.objects:
        obj_tokens += [
            discretize(obj.x, grid),
            discretize(obj.y, grid),
            obj.shape,
            obj.color,
            obj.size,
            obj.material,
        ]
    obj_tokens += [PAD] * (OBJECT_TOKENS - len(obj_tokens))
    q_tokens = list(question) + [PAD] * (QUESTION_TOKENS - len(question))
    return TokenSequence(tuple(obj_tokens), tuple(q_tokens))


# ---------------------------------------------------------------------------
# Scene file format (CLEVR-compatible JSON records; z is accepted and ignored)
# ---------------------------------------------------------------------------

def scene_to_record(scene: SceneGraph, vocab: AttributeVocab = DEFAULT_VOCAB) -> dict:
    return {
        "objects": [
            {
                "shape": vocab.shapes[o.shape],
                "size": vocab.sizes[o.size],
                "color": vocab.colors[o.color],
                "material": vocab.materials[o.material],
                "3d_coords": [o.x, o.y, 0.0],
                "rotation": o.rotation,
            }
            for o in scene.objects
        ],
        "directions": {name: list(vec) for name, vec in scene.directions.items()},
    }


def scene_from_record(record: dict, vocab: AttributeVocab = DEFAULT_VOCAB) -> SceneGraph:
    objects = []
    for i, rec in enumerate(record["objects"]):
        coords = rec["3d_coords"]
        objects.append(
            SceneObject(
                id=i,
                shape=vocab.shapes.index(rec["shape"]),
                color=vocab.colors.index(rec["color"]),
                size=vocab.sizes.index(rec["size"]),
                material=vocab.materials.index(rec["material"]),
                x=float(coords[0]),
                y=float(coords[1]),
                rotation=float(rec.get("rotation", 0.0)) % 360.0,
            )
        )
    directions = dict(DEFAULT_DIRECTIONS)
    for name, vec in record.get("directions", {}).items():
        if name in DIRECTION_NAMES:
            directions[name] = _unit((float(vec[0]), float(vec[1])))
    return SceneGraph(objects=tuple(objects), directions=directions)


def save_scenes(
    scenes: Iterable[SceneGraph], path: str | Path, vocab: AttributeVocab = DEFAULT_VOCAB
) -> None:
    payload = {"scenes": [scene_to_record(s, vocab) for s in scenes]}
    Path(path).write_text(json.dumps(payload, indent=1))


def load_scenes(path: str | Path, vocab: AttributeVocab = DEFAULT_VOCAB) -> list[SceneGraph]:
    payload = json.loads(Path(path).read_text())
    return [scene_from_record(rec, vocab) for rec in payload["scenes"]]
