"""Functional-program DSL over scene graphs.

Programs are DAGs of typed nodes in topological order; node values are
object-id sets, single objects, integers, booleans or attribute names.
``unique`` over a non-singleton set yields the Undetermined sentinel, which
marks the scene as ambiguous for the question.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .scene import AttributeVocab, DEFAULT_VOCAB, DIRECTION_NAMES, SceneGraph, compute_relation

MAX_COUNT = 10

ATTR_KINDS = ("size", "color", "material", "shape")

# Node value / result types
T_OBJSET = "objset"
T_OBJECT = "object"
T_INT = "int"
T_BOOL = "bool"
T_ATTR = "attr"


class Undetermined:
    """Ambiguity sentinel; compares equal to nothing, including itself."""

    _instance: "Undetermined | None" = None

    def __new__(cls) -> "Undetermined":
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "Undetermined"


UNDETERMINED = Undetermined()


@dataclass(frozen=True)
class Answer:
    """One of yes/no, an integer in 0..10, or an attribute name."""

    kind: str  # "bool" | "int" | "attr"
    value: object

    def __post_init__(self) -> None:
        if self.kind == "bool":
            if self.value not in ("yes", "no"):
                raise ValueError(f"bool answer must be yes/no, got {self.value!r}")
        elif self.kind == "int":
            if not isinstance(self.value, int) or not 0 <= self.value <= MAX_COUNT:
                raise ValueError(f"integer answer out of range: {self.value!r}")
        elif self.kind == "attr":
            if not isinstance(self.value, str):
                raise ValueError("attribute answer must be a string")
        else:
            raise ValueError(f"unknown answer kind {self.kind!r}")

    def __str__(self) -> str:
        return str(self.value)

    @staticmethod
    def yes_no(flag: bool) -> "Answer":
        return Answer("bool", "yes" if flag else "no")

    @staticmethod
    def parse(text: str, vocab: AttributeVocab = DEFAULT_VOCAB) -> "Answer":
        """Parse an answer string against the answer grammar (case-insensitive)."""
        word = text.strip().lower()
        if word in ("yes", "no"):
            return Answer("bool", word)
        if word.lstrip("+-").isdigit():
            value = int(word)
            if 0 <= value <= MAX_COUNT:
                return Answer("int", value)
            raise ValueError(f"integer answer out of range: {text!r}")
        for kind in ATTR_KINDS:
            if word in vocab.by_kind(kind):
                return Answer("attr", word)
        raise ValueError(f"answer {text!r} not in the answer grammar")


def answer_equal(a: object, b: object) -> bool:
    """Equality on answers; Undetermined equals nothing, including itself."""
    if isinstance(a, Undetermined) or isinstance(b, Undetermined):
        return False
    if not (isinstance(a, Answer) and isinstance(b, Answer)):
        return False
    return a.kind == b.kind and a.value == b.value


@dataclass(frozen=True)
class ProgramNode:
    function: str
    inputs: tuple[int, ...] = ()
    value_inputs: tuple[str, ...] = ()


@dataclass(frozen=True)
class FunctionalProgram:
    nodes: tuple[ProgramNode, ...]
    output: int = -1

    def __post_init__(self) -> None:
        if not self.nodes:
            raise ValueError("program must have at least one node")
        if self.output == -1:
            object.__setattr__(self, "output", len(self.nodes) - 1)


@dataclass(frozen=True)
class CatalogEntry:
    input_types: tuple[str, ...]
    value_kinds: tuple[str, ...]  # "size"|"color"|"material"|"shape"|"relation"
    output_type: str


def _catalog() -> dict[str, CatalogEntry]:
    cat: dict[str, CatalogEntry] = {"scene": CatalogEntry((), (), T_OBJSET)}
    for kind in ATTR_KINDS:
        cat[f"filter_{kind}"] = CatalogEntry((T_OBJSET,), (kind,), T_OBJSET)
        cat[f"same_{kind}"] = CatalogEntry((T_OBJECT,), (), T_OBJSET)
        cat[f"query_{kind}"] = CatalogEntry((T_OBJECT,), (), T_ATTR)
        cat[f"equal_{kind}"] = CatalogEntry((T_ATTR, T_ATTR), (), T_BOOL)
    cat["unique"] = CatalogEntry((T_OBJSET,), (), T_OBJECT)
    cat["relate"] = CatalogEntry((T_OBJECT,), ("relation",), T_OBJSET)
    cat["count"] = CatalogEntry((T_OBJSET,), (), T_INT)
    cat["exist"] = CatalogEntry((T_OBJSET,), (), T_BOOL)
    cat["equal_integer"] = CatalogEntry((T_INT, T_INT), (), T_BOOL)
    cat["less_than"] = CatalogEntry((T_INT, T_INT), (), T_BOOL)
    cat["greater_than"] = CatalogEntry((T_INT, T_INT), (), T_BOOL)
    cat["union"] = CatalogEntry((T_OBJSET, T_OBJSET), (), T_OBJSET)
    cat["intersect"] = CatalogEntry((T_OBJSET, T_OBJSET), (), T_OBJSET)
    return cat


FUNCTION_CATALOG = _catalog()

ANSWER_TYPES = (T_BOOL, T_INT, T_ATTR)


def validate(
    program: FunctionalProgram, vocab: AttributeVocab = DEFAULT_VOCAB
) -> list[str]:
    """Structural checks; returns a list of error strings (empty when ok)."""
    errors: list[str] = []
    types: list[str | None] = []
    if program.nodes and program.nodes[0].function != "scene":
        errors.append("node 0 must be `scene`")
    for i, node in enumerate(program.nodes):
        entry = FUNCTION_CATALOG.get(node.function)
        if entry is None:
            errors.append(f"node {i}: unknown function {node.function!r}")
            types.append(None)
            continue
        if len(node.inputs) != len(entry.input_types):
            errors.append(
                f"node {i} ({node.function}): expects {len(entry.input_types)} "
                f"inputs, got {len(node.inputs)}"
            )
        if len(node.value_inputs) != len(entry.value_kinds):
            errors.append(
                f"node {i} ({node.function}): expects {len(entry.value_kinds)} "
                f"value inputs, got {len(node.value_inputs)}"
            )
        for j, src in enumerate(node.inputs):
            if not 0 <= src < i:
                errors.append(f"node {i}: input {src} is not an earlier node")
            elif j < len(entry.input_types) and types[src] is not None:
                if types[src] != entry.input_types[j]:
                    errors.append(
                        f"node {i} ({node.function}): input {src} has type "
                        f"{types[src]}, expected {entry.input_types[j]}"
                    )
        for kind, value in zip(entry.value_kinds, node.value_inputs):
            if kind == "relation":
                if value not in DIRECTION_NAMES:
                    errors.append(f"node {i}: unknown relation {value!r}")
            elif value not in vocab.by_kind(kind):
                errors.append(f"node {i}: {value!r} not in the {kind} vocabulary")
        types.append(entry.output_type)
    if not 0 <= program.output < len(program.nodes):
        errors.append(f"output index {program.output} out of range")
    elif types[program.output] not in ANSWER_TYPES:
        errors.append(
            f"output node has type {types[program.output]}, not an answer type"
        )
    return errors


class _Executor:
    """Shared node semantics; relation judgments go through ``relate_set`` so
    subclasses (flawed players) can override perception without re-implementing
    the DSL."""

    def __init__(self, vocab: AttributeVocab = DEFAULT_VOCAB) -> None:
        self.vocab = vocab

    def perceived(self, scene: SceneGraph) -> SceneGraph:
        return scene

    def universe(self, scene: SceneGraph) -> set[int]:
        """Object ids visible to the executor (the `scene` node's value)."""
        return {o.id for o in scene.objects}

    def relate_set(self, scene: SceneGraph, direction: str, anchor: int) -> set[int]:
        return compute_relation(scene, direction, anchor)

    def attribute(self, scene: SceneGraph, obj_id: int, kind: str) -> str:
        obj = scene.objects[obj_id]
        index = {"shape": obj.shape, "color": obj.color, "size": obj.size,
                 "material": obj.material}[kind]
        return self.vocab.by_kind(kind)[index]

    def run(self, program: FunctionalProgram, scene: SceneGraph):
        scene = self.perceived(scene)
        visible = self.universe(scene)
        values: list[object] = []
        for node in program.nodes:
            fn = node.function
            args = [values[i] for i in node.inputs]
            if any(isinstance(a, Undetermined) for a in args):
                values.append(UNDETERMINED)
                continue
            if fn == "scene":
                result: object = set(visible)
            elif fn.startswith("filter_"):
                kind = fn.removeprefix("filter_")
                want = node.value_inputs[0]
                result = {i for i in args[0] if self.attribute(scene, i, kind) == want}
            elif fn == "unique":
                result = next(iter(args[0])) if len(args[0]) == 1 else UNDETERMINED
            elif fn == "relate":
                result = self.relate_set(scene, node.value_inputs[0], args[0]) & visible
            elif fn.startswith("same_"):
                kind = fn.removeprefix("same_")
                anchor = args[0]
                want = self.attribute(scene, anchor, kind)
                result = {
                    i
                    for i in visible
                    if i != anchor and self.attribute(scene, i, kind) == want
                }
            elif fn == "count":
                result = len(args[0])
            elif fn == "exist":
                result = bool(args[0])
            elif fn.startswith("query_"):
                result = self.attribute(scene, args[0], fn.removeprefix("query_"))
            elif fn == "equal_integer":
                result = args[0] == args[1]
            elif fn == "less_than":
                result = args[0] < args[1]
            elif fn == "greater_than":
                result = args[0] > args[1]
            elif fn.startswith("equal_"):
                result = args[0] == args[1]
            elif fn == "union":
                result = args[0] | args[1]
            elif fn == "intersect":
                result = args[0] & args[1]
            else:  # pragma: no cover - validate() rejects unknown functions
                raise RuntimeError(f"unknown function {fn!r}")
            values.append(result)
        out = values[program.output]
        if isinstance(out, Undetermined):
            return UNDETERMINED
        entry = FUNCTION_CATALOG[program.nodes[program.output].function]
        if entry.output_type == T_BOOL:
            return Answer.yes_no(out)  # type: ignore[arg-type]
        if entry.output_type == T_INT:
            return Answer("int", min(int(out), MAX_COUNT))  # type: ignore[arg-type]
        return Answer("attr", out)  # type: ignore[arg-type]


_DEFAULT_EXECUTOR: dict[AttributeVocab, _Executor] = {}


def execute(
    program: FunctionalProgram,
    scene: SceneGraph,
    vocab: AttributeVocab = DEFAULT_VOCAB,
) -> Answer | Undetermined:
    """Ground-truth evaluation of a program on a scene."""
    executor = _DEFAULT_EXECUTOR.get(vocab)
    if executor is None:
        executor = _DEFAULT_EXECUTOR[vocab] = _Executor(vocab)
    return executor.run(program, scene)


# ---------------------------------------------------------------------------
# Question file format (CLEVR-compatible records)
# ---------------------------------------------------------------------------

def program_to_records(program: FunctionalProgram) -> list[dict]:
    return [
        {
            "function": n.function,
            "inputs": list(n.inputs),
            "value_inputs": list(n.value_inputs),
        }
        for n in program.nodes
    ]


def program_from_records(records: Sequence[dict]) -> FunctionalProgram:
    nodes = tuple(
        ProgramNode(
            function=rec["function"],
            inputs=tuple(rec.get("inputs", ())),
            value_inputs=tuple(rec.get("value_inputs", ())),
        )
        for rec in records
    )
    return FunctionalProgram(nodes=nodes)


@dataclass(frozen=True)
class QuestionRecord:
    question: tuple[str, ...]      # word tokens
    program: FunctionalProgram
    answer: str
    image_index: int


def save_questions(questions: Iterable[QuestionRecord], path: str | Path) -> None:
    payload = {
        "questions": [
            {
                "question": list(q.question),
                "program": program_to_records(q.program),
                "answer": q.answer,
                "image_index": q.image_index,
            }
            for q in questions
        ]
    }
    Path(path).write_text(json.dumps(payload, indent=1))


def load_questions(path: str | Path) -> list[QuestionRecord]:
    payload = json.loads(Path(path).read_text())
    out = []
    for rec in payload["questions"]:
        question = rec["question"]
        if isinstance(question, str):
            question = question.rstrip("?").split()
        out.append(
            QuestionRecord(
                question=tuple(question),
                program=program_from_records(rec["program"]),
                answer=rec["answer"],
                image_index=int(rec["image_index"]),
            )
        )
    return out
