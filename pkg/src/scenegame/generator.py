"""Deterministic corpus generation: rejection-sampled valid scenes and
templated spatial-reasoning questions with executable programs.

Question text is rendered from the program, so identical texts always carry
identical programs; players may key their lookup tables on the words alone.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .scene import (
    AttributeVocab,
    DEFAULT_VOCAB,
    MAX_OBJECTS,
    MIN_OBJECTS,
    SceneGraph,
    SceneObject,
)
from .programs import (
    Answer,
    FunctionalProgram,
    ProgramNode,
    QuestionRecord,
    Undetermined,
    execute,
)
from .enforcers import DEFAULT_CONSTRAINTS, SceneConstraintConfig, check_scene

REL_PHRASES = {
    "left": ("left", "of"),
    "right": ("right", "of"),
    "front": ("in", "front", "of"),
    "behind": ("behind",),
}

ATTR_ORDER = ("size", "color", "material", "shape")


def generate_scene(
    rng: np.random.Generator,
    n_objects: int | None = None,
    vocab: AttributeVocab = DEFAULT_VOCAB,
    cfg: SceneConstraintConfig = DEFAULT_CONSTRAINTS,
    max_attempts: int = 10_000,
) -> SceneGraph:
    """One valid scene by rejection sampling; raises after ``max_attempts``."""
    for _ in range(max_attempts):
        n = (
            n_objects
            if n_objects is not None
            else int(rng.integers(cfg.min_objects, cfg.max_objects + 1))
        )
        objects = tuple(
            SceneObject(
                id=i,
                shape=int(rng.integers(len(vocab.shapes))),
                color=int(rng.integers(len(vocab.colors))),
                size=int(rng.integers(len(vocab.sizes))),
                material=int(rng.integers(len(vocab.materials))),
                x=float(rng.uniform(cfg.bound_lo, cfg.bound_hi)),
                y=float(rng.uniform(cfg.bound_lo, cfg.bound_hi)),
                rotation=float(rng.uniform(0.0, 360.0)),
            )
            for i in range(n)
        )
        scene = SceneGraph(objects=objects)
        if not check_scene(scene, cfg):
            return scene
    raise RuntimeError(f"no valid scene found in {max_attempts} attempts")


def generate_scenes(
    count: int,
    seed: int = 0,
    n_objects: int | None = None,
    vocab: AttributeVocab = DEFAULT_VOCAB,
    cfg: SceneConstraintConfig = DEFAULT_CONSTRAINTS,
) -> list[SceneGraph]:
    rng = np.random.default_rng(seed)
    return [generate_scene(rng, n_objects, vocab, cfg) for _ in range(count)]


def _describe(obj: SceneObject, vocab: AttributeVocab) -> dict[str, str]:
    return {
        "size": vocab.sizes[obj.size],
        "color": vocab.colors[obj.color],
        "material": vocab.materials[obj.material],
        "shape": vocab.shapes[obj.shape],
    }


def _anchor_filters(
    scene: SceneGraph, anchor: SceneObject, vocab: AttributeVocab
) -> dict[str, str] | None:
    """Smallest prefix of size/color/material/shape attributes that singles
    the anchor out, or None when even the full description is ambiguous."""
    desc = _describe(anchor, vocab)
    for cut in range(1, len(ATTR_ORDER) + 1):
        kinds = ATTR_ORDER[:cut]
        matches = [
            o
            for o in scene.objects
            if all(_describe(o, vocab)[k] == desc[k] for k in kinds)
        ]
        if len(matches) == 1:
            return {k: desc[k] for k in kinds}
    return None


def _anchor_nodes(filters: dict[str, str]) -> list[ProgramNode]:
    nodes = [ProgramNode("scene", (), ())]
    prev = 0
    for kind, value in filters.items():
        nodes.append(ProgramNode(f"filter_{kind}", (prev,), (value,)))
        prev = len(nodes) - 1
    nodes.append(ProgramNode("unique", (prev,), ()))
    return nodes


def _desc_words(filters: dict[str, str]) -> list[str]:
    return [filters[k] for k in ATTR_ORDER if k in filters]


def _count_relate(
    filters: dict[str, str], relation: str
) -> tuple[FunctionalProgram, list[str]]:
    nodes = _anchor_nodes(filters)
    nodes.append(ProgramNode("relate", (len(nodes) - 1,), (relation,)))
    nodes.append(ProgramNode("count", (len(nodes) - 1,), ()))
    words = (
        ["how", "many", "things", "are"]
        + list(REL_PHRASES[relation])
        + ["the"]
        + _desc_words(filters)
    )
    return FunctionalProgram(tuple(nodes)), words


def _exist_relate(
    filters: dict[str, str], relation: str, kind: str, value: str
) -> tuple[FunctionalProgram, list[str]]:
    nodes = _anchor_nodes(filters)
    nodes.append(ProgramNode("relate", (len(nodes) - 1,), (relation,)))
    nodes.append(ProgramNode(f"filter_{kind}", (len(nodes) - 1,), (value,)))
    nodes.append(ProgramNode("exist", (len(nodes) - 1,), ()))
    words = (
        ["is", "there", "a", value, "thing"]
        + list(REL_PHRASES[relation])
        + ["the"]
        + _desc_words(filters)
    )
    return FunctionalProgram(tuple(nodes)), words


def _query_relate(
    filters: dict[str, str], relation: str, query_kind: str
) -> tuple[FunctionalProgram, list[str]]:
    nodes = _anchor_nodes(filters)
    nodes.append(ProgramNode("relate", (len(nodes) - 1,), (relation,)))
    nodes.append(ProgramNode("unique", (len(nodes) - 1,), ()))
    nodes.append(ProgramNode(f"query_{query_kind}", (len(nodes) - 1,), ()))
    words = (
        ["what", query_kind, "is", "the", "thing"]
        + list(REL_PHRASES[relation])
        + ["the"]
        + _desc_words(filters)
    )
    return FunctionalProgram(tuple(nodes)), words


def generate_questions(
    scenes: Sequence[SceneGraph],
    per_scene: int = 4,
    seed: int = 0,
    vocab: AttributeVocab = DEFAULT_VOCAB,
    max_attempts_per_question: int = 50,
) -> list[QuestionRecord]:
    """Templated count/exist/query questions about spatial relations, keeping
    only programs that evaluate to a determinate answer on their scene."""
    rng = np.random.default_rng(seed)
    relations = tuple(REL_PHRASES)
    out: list[QuestionRecord] = []
    seen_text: dict[tuple[str, ...], FunctionalProgram] = {}
    for image_index, scene in enumerate(scenes):
        made = 0
        attempts = 0
        scene_texts: set[tuple[str, ...]] = set()
        while made < per_scene and attempts < per_scene * max_attempts_per_question:
            attempts += 1
            anchor = scene.objects[int(rng.integers(len(scene)))]
            filters = _anchor_filters(scene, anchor, vocab)
            if filters is None:
                continue
            relation = relations[int(rng.integers(len(relations)))]
            template = int(rng.integers(3))
            if template == 0:
                program, words = _count_relate(filters, relation)
            elif template == 1:
                kind = ATTR_ORDER[int(rng.integers(len(ATTR_ORDER)))]
                values = vocab.by_kind(kind)
                value = values[int(rng.integers(len(values)))]
                program, words = _exist_relate(filters, relation, kind, value)
            else:
                kind = ATTR_ORDER[int(rng.integers(len(ATTR_ORDER)))]
                program, words = _query_relate(filters, relation, kind)
            answer = execute(program, scene, vocab)
            if isinstance(answer, Undetermined):
                continue
            text = tuple(words)
            if text in scene_texts:
                continue
            known = seen_text.get(text)
            if known is not None and known != program:  # pragma: no cover
                continue
            seen_text[text] = program
            scene_texts.add(text)
            out.append(
                QuestionRecord(
                    question=text,
                    program=program,
                    answer=str(answer),
                    image_index=image_index,
                )
            )
            made += 1
    return out


def question_vocabulary(questions: Sequence[QuestionRecord]) -> tuple[str, ...]:
    """Sorted word list covering a question corpus, for the policy encoder."""
    words = set()
    for q in questions:
        words.update(q.question)
    return tuple(sorted(words))
