"""The black-box boundary.

Every answer request -- even to an in-process player -- is serialized to the
wire record first and logged to the handle's transcript, so the redaction
audit ("the player never sees programs, ground truth or rewards") is a check
on actual bytes rather than on trust.

Wire protocol: newline-delimited JSON records, one request / one response,
synchronous per connection.

  request:  {"round_id": int, "question": [words...], "scene": {...},
             "image_path": optional string}
  response: {"round_id": int, "answer": "yes"|"no"|"0".."10"|attribute}
"""

from __future__ import annotations

import json
import math
import socket
import subprocess
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .scene import (
    AttributeVocab,
    DEFAULT_VOCAB,
    SceneGraph,
    scene_from_record,
    scene_to_record,
)
from .programs import (
    Answer,
    FunctionalProgram,
    QuestionRecord,
    T_ATTR,
    T_BOOL,
    T_INT,
    FUNCTION_CATALOG,
    UNDETERMINED,
    Undetermined,
    _Executor,
)


class PlayerError(Exception):
    """Base class for player-side failures."""


class TransportError(PlayerError):
    """Timeout or broken connection; the round is aborted, not rewarded."""


class ProtocolError(PlayerError):
    """Malformed response; the offending bytes are preserved."""

    def __init__(self, message: str, raw: bytes = b"") -> None:
        super().__init__(message)
        self.raw = raw


def _fallback_answer(program: FunctionalProgram, vocab: AttributeVocab) -> Answer:
    """Deterministic answer when a player's flawed execution is ambiguous."""
    fn = program.nodes[program.output].function
    out_type = FUNCTION_CATALOG[fn].output_type
    if out_type == T_BOOL:
        return Answer("bool", "no")
    if out_type == T_INT:
        return Answer("int", 0)
    kind = fn.removeprefix("query_")
    return Answer("attr", vocab.by_kind(kind)[0])


class QuestionIndex:
    """Private question-text -> program lookup for the built-in players."""

    def __init__(self, questions: Sequence[QuestionRecord]) -> None:
        self._programs: dict[tuple[str, ...], FunctionalProgram] = {}
        for q in questions:
            self._programs[tuple(q.question)] = q.program

    def program_for(self, words: Sequence[str]) -> FunctionalProgram:
        try:
            return self._programs[tuple(words)]
        except KeyError:
            raise PlayerError(f"unknown question: {' '.join(words)!r}") from None


class OraclePlayer:
    """Negative control: answers straight from the ground-truth executor."""

    def __init__(
        self, questions: Sequence[QuestionRecord], vocab: AttributeVocab = DEFAULT_VOCAB
    ) -> None:
        self.index = QuestionIndex(questions)
        self.vocab = vocab
        self.executor = _Executor(vocab)

    def answer(self, scene: SceneGraph, words: Sequence[str]) -> Answer:
        program = self.index.program_for(words)
        result = self.executor.run(program, scene)
        if isinstance(result, Undetermined):
            return _fallback_answer(program, self.vocab)
        return result


@dataclass(frozen=True)
class FlawSpec:
    """Synthetic perception defect; each neutral setting reduces to the oracle.

    relation_margin: relate judgments with |dot| below tau come out inverted.
    nearest_k: only the K objects nearest the scene centroid are visible.
    quantized_cells: positions snap to a coarse grid of that many cells per
    axis before execution.
    """

    kind: str  # "relation-margin" | "nearest-k" | "quantized-perception"
    tau: float = 0.6
    k: int = 10
    cells: int = 3

    def __post_init__(self) -> None:
        if self.kind not in ("relation-margin", "nearest-k", "quantized-perception"):
            raise ValueError(f"unknown flaw kind {self.kind!r}")


class _FlawedExecutor(_Executor):
    def __init__(self, spec: FlawSpec, vocab: AttributeVocab) -> None:
        super().__init__(vocab)
        self.spec = spec

    def perceived(self, scene: SceneGraph) -> SceneGraph:
        if self.spec.kind != "quantized-perception" or self.spec.cells <= 0:
            return scene
        from dataclasses import replace
        from .scene import COORD_HI, COORD_LO

        width = (COORD_HI - COORD_LO) / self.spec.cells

        def snap(coord: float) -> float:
            cell = min(
                max(int(math.floor((coord - COORD_LO) / width)), 0), self.spec.cells - 1
            )
            return COORD_LO + (cell + 0.5) * width

        objects = tuple(replace(o, x=snap(o.x), y=snap(o.y)) for o in scene.objects)
        return SceneGraph(objects=objects, directions=dict(scene.directions))

    def universe(self, scene: SceneGraph) -> set[int]:
        if self.spec.kind != "nearest-k" or self.spec.k >= len(scene):
            return super().universe(scene)
        cx = sum(o.x for o in scene.objects) / len(scene)
        cy = sum(o.y for o in scene.objects) / len(scene)
        ranked = sorted(
            scene.objects, key=lambda o: (math.hypot(o.x - cx, o.y - cy), o.id)
        )
        return {o.id for o in ranked[: self.spec.k]}

    def relate_set(self, scene: SceneGraph, direction: str, anchor: int) -> set[int]:
        base = super().relate_set(scene, direction, anchor)
        if self.spec.kind != "relation-margin":
            return base
        dx_dir, dy_dir = scene.direction(direction)
        ax, ay = scene.objects[anchor].position()
        out = set()
        for obj in scene.objects:
            if obj.id == anchor:
                continue
            dot = (obj.x - ax) * dx_dir + (obj.y - ay) * dy_dir
            member = obj.id in base
            if abs(dot) < self.spec.tau:
                member = not member   # the wrong-biased call inside the margin
            if member:
                out.add(obj.id)
        return out


class FlawedPlayer:
    """Oracle with a known, deterministic perception defect."""

    def __init__(
        self,
        questions: Sequence[QuestionRecord],
        spec: FlawSpec,
        vocab: AttributeVocab = DEFAULT_VOCAB,
    ) -> None:
        self.index = QuestionIndex(questions)
        self.spec = spec
        self.vocab = vocab
        self.executor = _FlawedExecutor(spec, vocab)

    def answer(self, scene: SceneGraph, words: Sequence[str]) -> Answer:
        program = self.index.program_for(words)
        result = self.executor.run(program, scene)
        if isinstance(result, Undetermined):
            return _fallback_answer(program, self.vocab)
        return result


class ConstantPlayer:
    """Answers the same thing to everything; useful in protocol tests."""

    def __init__(self, answer: Answer) -> None:
        self._answer = answer

    def answer(self, scene: SceneGraph, words: Sequence[str]) -> Answer:
        return self._answer


class PlayerHandle:
    """Uniform front door for any player; owns serialization and transcripts.

    ``transcript`` accumulates the exact request bytes sent to the player,
    whatever the transport, so black-box discipline can be audited.
    """

    def __init__(
        self,
        backend,
        vocab: AttributeVocab = DEFAULT_VOCAB,
        transcript: list[bytes] | None = None,
    ) -> None:
        self.backend = backend
        self.vocab = vocab
        self.transcript: list[bytes] = transcript if transcript is not None else []
        self._round = 0

    def answer(
        self,
        scene: SceneGraph,
        words: Sequence[str],
        round_id: int | None = None,
        image_path: str | None = None,
    ) -> Answer:
        if round_id is None:
            round_id = self._round
        self._round = round_id + 1
        request = {
            "round_id": round_id,
            "question": list(words),
            "scene": scene_to_record(scene, self.vocab),
        }
        if image_path is not None:
            request["image_path"] = image_path
        raw = (json.dumps(request, separators=(",", ":")) + "\n").encode()
        self.transcript.append(raw)
        return self._dispatch(raw, request, round_id)

    def _dispatch(self, raw: bytes, request: dict, round_id: int) -> Answer:
        # in-process players re-parse the wire record: same information
        # boundary as a remote player
        scene = scene_from_record(request["scene"], self.vocab)
        return self.backend.answer(scene, request["question"])


class ExternalPlayerHandle(PlayerHandle):
    """Speaks the wire protocol to a child process or TCP endpoint."""

    def __init__(
        self,
        command: Sequence[str] | None = None,
        address: tuple[str, int] | None = None,
        vocab: AttributeVocab = DEFAULT_VOCAB,
        timeout: float = 30.0,
        transcript: list[bytes] | None = None,
    ) -> None:
        super().__init__(backend=None, vocab=vocab, transcript=transcript)
        if (command is None) == (address is None):
            raise ValueError("exactly one of command/address is required")
        self.timeout = timeout
        self._proc: subprocess.Popen | None = None
        self._sock_file = None
        if command is not None:
            self._proc = subprocess.Popen(
                list(command),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=False,
            )
        else:
            sock = socket.create_connection(address, timeout=timeout)
            sock.settimeout(timeout)
            self._sock_file = sock.makefile("rwb")

    def _dispatch(self, raw: bytes, request: dict, round_id: int) -> Answer:
        try:
            if self._proc is not None:
                assert self._proc.stdin and self._proc.stdout
                self._proc.stdin.write(raw)
                self._proc.stdin.flush()
                line = self._proc.stdout.readline()
            else:
                assert self._sock_file is not None
                self._sock_file.write(raw)
                self._sock_file.flush()
                line = self._sock_file.readline()
        except (BrokenPipeError, OSError) as exc:
            raise TransportError(f"player transport failed: {exc}") from exc
        if not line:
            raise TransportError("player closed the stream")
        try:
            response = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"unparseable response: {exc}", raw=line)
        if not isinstance(response, dict) or "answer" not in response:
            raise ProtocolError("response missing `answer`", raw=line)
        if response.get("round_id") != round_id:
            raise ProtocolError(
                f"round_id mismatch: sent {round_id}, got {response.get('round_id')}",
                raw=line,
            )
        try:
            return Answer.parse(str(response["answer"]), self.vocab)
        except ValueError as exc:
            raise ProtocolError(str(exc), raw=line)

    def close(self) -> None:
        if self._proc is not None:
            if self._proc.stdin:
                self._proc.stdin.close()
            self._proc.wait(timeout=self.timeout)
        if self._sock_file is not None:
            self._sock_file.close()

    def __enter__(self) -> "ExternalPlayerHandle":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


FORBIDDEN_WIRE_FIELDS = (b'"program"', b'"gt_answer"', b'"ground_truth"', b'"reward"')


def audit_transcript(transcript: Sequence[bytes]) -> list[int]:
    """Indices of player-bound messages leaking redacted fields (empty = clean)."""
    bad = []
    for i, raw in enumerate(transcript):
        if any(field in raw for field in FORBIDDEN_WIRE_FIELDS):
            bad.append(i)
    return bad
