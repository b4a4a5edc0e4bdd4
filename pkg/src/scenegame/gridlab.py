"""Exhaustive grid datasets for data-driven generalization experiments.

Scenes live on the manipulation grid itself: each object sits at a bin
center, configurations enumerate every cell assignment of the movable
objects, and Onehop/Twohop question families probe one or two chained
spatial-relation steps. Splits carve the enumerated set into train/test
fractions per trial seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .scene import (
    AttributeVocab,
    DEFAULT_GRID,
    DEFAULT_VOCAB,
    GridSpec,
    SceneGraph,
    SceneObject,
    bin_center,
)
from .programs import (
    FunctionalProgram,
    ProgramNode,
    QuestionRecord,
    Undetermined,
    execute,
)
from .enforcers import SceneConstraintConfig, check_scene
from .generator import REL_PHRASES

TEMPLATE_VERSION = 1

FAMILIES = ("Onehop", "Twohop", "Mixhop")

# grid scenes get a relaxed count floor: two-object scenes are the point
GRID_CONSTRAINTS = SceneConstraintConfig(min_objects=2, min_visibility=0.0)


@dataclass(frozen=True)
class GridDatasetSpec:
    n_objects: int
    family: str = "Onehop"
    split_percent: float = 50.0
    trials: int = 10
    seed: int = 0
    stationary: bool = False
    stationary_cell: int | None = None  # defaults to the center cell
    grid: GridSpec = DEFAULT_GRID
    vocab: AttributeVocab = DEFAULT_VOCAB
    constraints: SceneConstraintConfig = GRID_CONSTRAINTS

    def __post_init__(self) -> None:
        if self.n_objects not in (2, 3, 4):
            raise ValueError("n_objects must be 2, 3 or 4")
        if self.n_objects == 4 and not self.stationary:
            raise ValueError("4-object datasets require a stationary object")
        if self.family not in FAMILIES:
            raise ValueError(f"family must be one of {FAMILIES}")
        if not 0 < self.split_percent < 100:
            raise ValueError("split_percent must lie strictly between 0 and 100")

    @property
    def n_movable(self) -> int:
        return self.n_objects - 1 if self.stationary else self.n_objects

    @property
    def cells_per_object(self) -> int:
        return self.grid.bins_per_axis ** 2

    @property
    def raw_configs(self) -> int:
        return self.cells_per_object ** self.n_movable


@dataclass(frozen=True)
class GridItem:
    config_id: int
    scene: SceneGraph
    valid: bool
    invalid_reasons: tuple[str, ...] = ()
    questions: tuple[QuestionRecord, ...] = ()


# ---------------------------------------------------------------------------
# Configuration-id codec: mixed radix over movable-object cell indices
# ---------------------------------------------------------------------------

def encode_config(cells: Sequence[int], cells_per_object: int) -> int:
    """cells[i] is movable object i's cell index; little-endian mixed radix."""
    out = 0
    for i, cell in enumerate(cells):
        if not 0 <= cell < cells_per_object:
            raise ValueError(f"cell {cell} out of range")
        out += cell * cells_per_object ** i
    return out


def decode_config(config_id: int, n_movable: int, cells_per_object: int) -> tuple[int, ...]:
    if not 0 <= config_id < cells_per_object ** n_movable:
        raise ValueError(f"config id {config_id} out of range")
    cells = []
    for _ in range(n_movable):
        config_id, cell = divmod(config_id, cells_per_object)
        cells.append(cell)
    return tuple(cells)


def cell_to_bins(cell: int, grid: GridSpec = DEFAULT_GRID) -> tuple[int, int]:
    return divmod(cell, grid.bins_per_axis)


# ---------------------------------------------------------------------------
# Fixed object identities: distinct colors so every object is a unique anchor
# ---------------------------------------------------------------------------

def dataset_identities(spec: GridDatasetSpec) -> list[dict]:
    rng = np.random.default_rng(spec.seed)
    v = spec.vocab
    colors = rng.choice(len(v.colors), size=spec.n_objects, replace=False)
    return [
        {
            "shape": int(rng.integers(len(v.shapes))),
            "color": int(colors[i]),
            "size": int(rng.integers(len(v.sizes))),
            "material": int(rng.integers(len(v.materials))),
        }
        for i in range(spec.n_objects)
    ]


def item_for_config(
    spec: GridDatasetSpec, config_id: int, identities: Sequence[dict] | None = None
) -> GridItem:
    if identities is None:
        identities = dataset_identities(spec)
    cells = list(decode_config(config_id, spec.n_movable, spec.cells_per_object))
    if spec.stationary:
        pinned = (
            spec.stationary_cell
            if spec.stationary_cell is not None
            else (spec.cells_per_object - 1) // 2
        )
        cells.append(pinned)  # the stationary object is the last id
    objects = []
    for obj_id, (ident, cell) in enumerate(zip(identities, cells)):
        bx, by = cell_to_bins(cell, spec.grid)
        objects.append(
            SceneObject(
                id=obj_id,
                x=bin_center(bx, spec.grid),
                y=bin_center(by, spec.grid),
                **ident,
            )
        )
    scene = SceneGraph(objects=tuple(objects))
    reasons: list[str] = []
    if len(set(cells)) != len(cells):
        reasons.append("cell-collision")
    reasons += sorted({v.kind for v in check_scene(scene, spec.constraints)})
    return GridItem(
        config_id=config_id,
        scene=scene,
        valid=not reasons,
        invalid_reasons=tuple(reasons),
    )


def enumerate_configs(
    spec: GridDatasetSpec, start: int = 0, stop: int | None = None
) -> Iterator[GridItem]:
    """Every configuration in [start, stop) as a restartable stream; invalid
    placements are yielded flagged, never dropped."""
    identities = dataset_identities(spec)
    if stop is None:
        stop = spec.raw_configs
    for config_id in range(start, stop):
        yield item_for_config(spec, config_id, identities)


# ---------------------------------------------------------------------------
# Question families
# ---------------------------------------------------------------------------

def _anchor_prefix(color: str) -> list[ProgramNode]:
    return [
        ProgramNode("scene", (), ()),
        ProgramNode("filter_color", (0,), (color,)),
        ProgramNode("unique", (1,), ()),
    ]


def _hop_program(color: str, relations: Sequence[str], query_kind: str) -> FunctionalProgram:
    nodes = _anchor_prefix(color)
    for rel in relations:
        nodes.append(ProgramNode("relate", (len(nodes) - 1,), (rel,)))
        nodes.append(ProgramNode("unique", (len(nodes) - 1,), ()))
    nodes.append(ProgramNode(f"query_{query_kind}", (len(nodes) - 1,), ()))
    return FunctionalProgram(tuple(nodes))


def _hop_words(color: str, relations: Sequence[str], query_kind: str) -> tuple[str, ...]:
    words = ["what", query_kind, "is", "the", "thing"]
    for rel in reversed(relations):
        words += list(REL_PHRASES[rel]) + ["the", "thing"]
    words[-1] = color  # innermost anchor is named by color, not "thing"
    return tuple(words)


def make_questions(
    item: GridItem,
    family: str,
    rng: np.random.Generator,
    vocab: AttributeVocab = DEFAULT_VOCAB,
    image_index: int | None = None,
) -> list[QuestionRecord]:
    """All determinate questions of the family for one grid item.

    Onehop asks for an attribute of the unique thing one relation away from a
    color-named anchor; Twohop chains two relations; Mixhop draws each item's
    family 50/50 from the rng.
    """
    if family == "Mixhop":
        family = "Onehop" if rng.random() < 0.5 else "Twohop"
    hops = 1 if family == "Onehop" else 2
    relations = tuple(REL_PHRASES)
    query_kinds = ("shape", "size", "material")
    out: list[QuestionRecord] = []
    idx = item.config_id if image_index is None else image_index
    for obj in item.scene.objects:
        color = vocab.colors[obj.color]
        for combo in _rel_combos(relations, hops):
            program = _hop_program(color, combo, "shape")
            if isinstance(execute(program, item.scene, vocab), Undetermined):
                continue
            kind = query_kinds[int(rng.integers(len(query_kinds)))]
            program = _hop_program(color, combo, kind)
            answer = execute(program, item.scene, vocab)
            out.append(
                QuestionRecord(
                    question=_hop_words(color, combo, kind),
                    program=program,
                    answer=str(answer),
                    image_index=idx,
                )
            )
    return out


def _rel_combos(relations: tuple[str, ...], hops: int):
    if hops == 1:
        return [(r,) for r in relations]
    return [(a, b) for a in relations for b in relations]


def with_questions(item: GridItem, spec: GridDatasetSpec, rng: np.random.Generator) -> GridItem:
    if not item.valid:
        return item
    qs = make_questions(item, spec.family, rng, spec.vocab)
    return replace(item, questions=tuple(qs))


# ---------------------------------------------------------------------------
# Train/test splits
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Split:
    trial: int
    train_ids: tuple[int, ...]
    test_ids: tuple[int, ...]


def split(ids: Sequence[int], split_percent: float, seed: int, trials: int = 10) -> list[Split]:
    """Per-trial uniform partitions; train size is round(X% of n), so both
    sides land within one item of the exact percentage."""
    if not 0 < split_percent < 100:
        raise ValueError("split_percent must lie strictly between 0 and 100")
    ids = np.asarray(sorted(ids))
    n_train = int(round(len(ids) * split_percent / 100.0))
    n_train = min(max(n_train, 1), len(ids) - 1)
    out = []
    for trial in range(trials):
        rng = np.random.default_rng((seed, trial))
        perm = rng.permutation(len(ids))
        train = tuple(int(i) for i in np.sort(ids[perm[:n_train]]))
        test = tuple(int(i) for i in np.sort(ids[perm[n_train:]]))
        out.append(Split(trial=trial, train_ids=train, test_ids=test))
    return out


# ---------------------------------------------------------------------------
# Dataset files
# ---------------------------------------------------------------------------

def dataset_manifest(spec: GridDatasetSpec, items: Sequence[GridItem]) -> dict:
    return {
        "template_version": TEMPLATE_VERSION,
        "n_objects": spec.n_objects,
        "family": spec.family,
        "split_percent": spec.split_percent,
        "trials": spec.trials,
        "seed": spec.seed,
        "stationary": spec.stationary,
        "raw_configs": spec.raw_configs,
        "emitted": len(items),
        "valid": sum(i.valid for i in items),
        "questions": sum(len(i.questions) for i in items),
    }


def save_dataset(
    spec: GridDatasetSpec,
    items: Sequence[GridItem],
    splits: Sequence[Split],
    out_dir: str | Path,
) -> None:
    from .scene import save_scenes
    from .programs import save_questions

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    valid_items = [i for i in items if i.valid]
    save_scenes((i.scene for i in valid_items), out / "scenes.json", spec.vocab)
    questions = []
    for pos, item in enumerate(valid_items):
        for q in item.questions:
            questions.append(replace(q, image_index=pos))
    save_questions(questions, out / "questions.json")
    manifest = dataset_manifest(spec, items)
    manifest["invalid_ids"] = [i.config_id for i in items if not i.valid]
    manifest["config_ids"] = [i.config_id for i in valid_items]
    manifest["splits"] = [
        {"trial": s.trial, "train_ids": list(s.train_ids), "test_ids": list(s.test_ids)}
        for s in splits
    ]
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1))
