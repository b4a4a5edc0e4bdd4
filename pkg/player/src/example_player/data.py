"""Dataset loading and featurization.

The player only ever touches the harness's published file formats: scene files
(CLEVR-style records), question files (word tokens, answer string, scene
index) and the dataset manifest. Question entries may carry extra fields
(e.g. executable forms used by the harness); everything except the words, the
answer and the scene index is ignored.

Input layout mirrors the harness's token scheme: up to 10 objects with 6
tokens each (shape, color, size, material, x-bin, y-bin) followed by up to 50
question word tokens, 110 slots total. Empty slots hold the pad id 0.
"""

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAX_OBJECTS = 10
OBJECT_FIELDS = ("shape", "color", "size", "material")
QUESTION_SLOTS = 50
COORD_LO = -3.0
COORD_HI = 3.0
BINS = 7

PAD = 0
UNK = 1  # words only


@dataclass(frozen=True)
class Vocab:
    """String-to-id tables discovered from a training dataset."""

    fields: dict  # field name -> tuple of attribute strings
    words: tuple
    answers: tuple

    def to_json(self) -> dict:
        return {
            "fields": {k: list(v) for k, v in self.fields.items()},
            "words": list(self.words),
            "answers": list(self.answers),
        }

    @classmethod
    def from_json(cls, payload: dict) -> "Vocab":
        return cls(
            fields={k: tuple(v) for k, v in payload["fields"].items()},
            words=tuple(payload["words"]),
            answers=tuple(payload["answers"]),
        )


@dataclass(frozen=True)
class Example:
    scene: dict       # raw scene record
    question: tuple   # word strings
    answer: str
    scene_index: int


def load_dataset(dataset_dir) -> tuple[list[Example], dict]:
    root = Path(dataset_dir)
    scenes = json.loads((root / "scenes.json").read_text())["scenes"]
    questions = json.loads((root / "questions.json").read_text())["questions"]
    manifest = {}
    if (root / "manifest.json").exists():
        manifest = json.loads((root / "manifest.json").read_text())
    examples = []
    for q in questions:
        words = q["question"]
        if isinstance(words, str):
            words = words.split()
        idx = int(q["image_index"])
        examples.append(
            Example(
                scene=scenes[idx],
                question=tuple(words),
                answer=str(q["answer"]),
                scene_index=idx,
            )
        )
    if not examples:
        raise ValueError(f"dataset at {root} contains no questions")
    return examples, manifest


def build_vocab(examples) -> Vocab:
    fields = {f: set() for f in OBJECT_FIELDS}
    words = set()
    answers = set()
    for ex in examples:
        for obj in ex.scene["objects"]:
            for f in OBJECT_FIELDS:
                fields[f].add(str(obj[f]))
        words.update(ex.question)
        answers.add(ex.answer)
    return Vocab(
        fields={f: tuple(sorted(v)) for f, v in fields.items()},
        words=tuple(sorted(words)),
        answers=tuple(sorted(answers)),
    )


def coord_bin(value: float) -> int:
    width = (COORD_HI - COORD_LO) / BINS
    return int(np.clip(np.floor((value - COORD_LO) / width), 0, BINS - 1))


def encode_scene(scene: dict, vocab: Vocab) -> np.ndarray:
    """(MAX_OBJECTS, 6) int array; row = shape,color,size,material,xbin,ybin.

    Attribute ids are offset by 1 so 0 stays the pad id; unknown attribute
    strings also map to pad rather than failing, keeping inference total.
    """
    out = np.zeros((MAX_OBJECTS, 6), dtype=np.int64)
    for i, obj in enumerate(scene.get("objects", ())[:MAX_OBJECTS]):
        for j, f in enumerate(OBJECT_FIELDS):
            table = vocab.fields[f]
            val = str(obj.get(f, ""))
            out[i, j] = table.index(val) + 1 if val in table else PAD
        coords = obj.get("3d_coords", (0.0, 0.0))
        out[i, 4] = coord_bin(float(coords[0])) + 1
        out[i, 5] = coord_bin(float(coords[1])) + 1
    return out


def encode_question(words, vocab: Vocab) -> np.ndarray:
    word_ids = {w: i + 2 for i, w in enumerate(vocab.words)}  # 0 pad, 1 unk
    out = np.zeros(QUESTION_SLOTS, dtype=np.int64)
    for i, w in enumerate(tuple(words)[:QUESTION_SLOTS]):
        out[i] = word_ids.get(str(w), UNK)
    return out


def encode_example(scene: dict, question, vocab: Vocab):
    return encode_scene(scene, vocab), encode_question(question, vocab)
