"""Rewards, the single-round game loop, policy training, and the search
baselines (uniform random search and exhaustive grid enumeration).
"""

from __future__ import annotations

import itertools
import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .scene import (
    Displacement,
    GridSpec,
    DEFAULT_GRID,
    MAX_OBJECTS,
    SceneGraph,
    apply_displacement,
    discretize,
    tokenize,
)
from .programs import Answer, FunctionalProgram, QuestionRecord, answer_equal, execute
from .enforcers import (
    DEFAULT_CONSTRAINTS,
    SceneConstraintConfig,
    check_question_relevance,
    check_scene,
)
from .players import PlayerHandle, TransportError
from .policy import (
    ActionSample,
    PolicyParameters,
    backward_and_step,
    forward,
    sample,
)


@dataclass(frozen=True)
class RewardConfig:
    dr: float = 1.0    # accuracy-drop: flipped a correct answer
    cr: float = 0.1    # consistency-drop: flipped an already-wrong answer
    fr: float = -0.1   # fail: answer unchanged
    isr: float = -0.8  # invalid scene

    def __post_init__(self) -> None:
        if not self.dr > self.cr > 0 > self.fr > self.isr:
            raise ValueError("reward ordering must satisfy dr > cr > 0 > fr > isr")


DEFAULT_REWARDS = RewardConfig()


def calc_reward(
    new: Answer | None,
    old: Answer,
    gt: Answer,
    cfg: RewardConfig = DEFAULT_REWARDS,
) -> float:
    """The four-branch reward rule; ``new=None`` marks an invalid scene."""
    if new is None:
        return cfg.isr
    if answer_equal(new, old):
        return cfg.fr
    if answer_equal(old, gt):
        return cfg.dr
    return cfg.cr


@dataclass(frozen=True)
class GameItem:
    scene: SceneGraph
    question: tuple[str, ...]
    program: FunctionalProgram
    gt: Answer


@dataclass(frozen=True)
class MiniGame:
    id: str
    items: tuple[GameItem, ...]
    seed: int = 0


def make_item(scene: SceneGraph, record: QuestionRecord) -> GameItem:
    gt = execute(record.program, scene)
    if not isinstance(gt, Answer):
        raise ValueError("item's program is ambiguous on its scene")
    if str(gt) != record.answer:
        raise ValueError(
            f"stored answer {record.answer!r} disagrees with executor ({gt})"
        )
    return GameItem(scene, tuple(record.question), record.program, gt)


def build_minigames(
    scenes: Sequence[SceneGraph],
    questions: Sequence[QuestionRecord],
    size: int,
    count: int,
    seed: int = 0,
) -> list[MiniGame]:
    """Mutually exclusive mini-games sampled from a (scene, question) pool."""
    pool = [make_item(scenes[q.image_index], q) for q in questions]
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(pool))
    if size * count > len(pool):
        raise ValueError(
            f"pool of {len(pool)} items cannot supply {count} mini-games of size {size}"
        )
    games = []
    for g in range(count):
        picked = tuple(pool[i] for i in order[g * size : (g + 1) * size])
        games.append(MiniGame(id=f"mg{g:03d}", items=picked, seed=seed + g))
    return games


@dataclass(frozen=True)
class RoundRecord:
    item_index: int
    old_answer: str
    new_answer: str | None          # None = invalid scene, player not queried
    invalid_kinds: tuple[str, ...]  # enforcer rejection reasons, if any
    gt_answer: str
    reward: float
    log_prob: float
    state_value: float
    displacement: tuple[tuple[int, int] | None, ...]

    @property
    def valid(self) -> bool:
        return self.new_answer is not None

    @property
    def changed(self) -> bool:
        return self.valid and self.new_answer != self.old_answer

    @property
    def dropped(self) -> bool:
        return self.changed and self.old_answer == self.gt_answer


def _evaluate_manipulation(
    item: GameItem,
    displacement: Displacement,
    player: PlayerHandle,
    reward_cfg: RewardConfig,
    scene_cfg: SceneConstraintConfig,
    grid: GridSpec,
    old: Answer,
) -> tuple[Answer | None, tuple[str, ...], float]:
    new_scene = apply_displacement(item.scene, displacement, grid)
    violations = check_scene(new_scene, scene_cfg)
    if violations:
        return None, tuple(sorted({v.kind for v in violations})), reward_cfg.isr
    if not check_question_relevance(item.program, new_scene, item.gt):
        return None, ("relevance",), reward_cfg.isr
    new = player.answer(new_scene, item.question)
    return new, (), calc_reward(new, old, item.gt, reward_cfg)


def play_round(
    item: GameItem,
    params: PolicyParameters,
    player: PlayerHandle,
    rng: np.random.Generator,
    reward_cfg: RewardConfig = DEFAULT_REWARDS,
    scene_cfg: SceneConstraintConfig = DEFAULT_CONSTRAINTS,
    grid: GridSpec = DEFAULT_GRID,
    item_index: int = 0,
    forced: Displacement | None = None,
):
    """One full round: query old answer, act, gate, maybe query new answer.

    Returns (RoundRecord, forward cache, action sample); the latter two feed
    the training step. ``forced`` replays a fixed displacement (log_prob 0)
    instead of sampling, used by the search replays.
    """
    old = player.answer(item.scene, item.question)
    cache = forward(params, tokenize(item.scene, params.config.encode_question(item.question), grid))
    if forced is None:
        action = sample(cache, rng, grid, n_active=len(item.scene))
    else:
        offset = grid.bins_per_axis // 2
        choices = tuple(
            (m[0] + offset, m[1] + offset) if m is not None else None
            for m in forced.moves
        )
        action = ActionSample(forced, choices, 0.0)
    new, invalid_kinds, reward = _evaluate_manipulation(
        item, action.displacement, player, reward_cfg, scene_cfg, grid, old
    )
    record = RoundRecord(
        item_index=item_index,
        old_answer=str(old),
        new_answer=None if new is None else str(new),
        invalid_kinds=invalid_kinds,
        gt_answer=str(item.gt),
        reward=reward,
        log_prob=action.log_prob,
        state_value=cache.state_value,
        displacement=action.displacement.moves,
    )
    return record, cache, action


@dataclass(frozen=True)
class TrainConfig:
    episodes: int = 400
    batch_size: int = 32
    learning_rate: float = 1e-3
    entropy_coef: float = 0.01
    detach_critic_trunk: bool = False
    seed: int = 0


@dataclass
class EpisodeStats:
    episode: int
    mean_reward: float
    consistency: float
    drop: float
    invalid_rate: float


def train(
    minigame: MiniGame,
    params: PolicyParameters,
    player: PlayerHandle,
    cfg: TrainConfig = TrainConfig(),
    reward_cfg: RewardConfig = DEFAULT_REWARDS,
    scene_cfg: SceneConstraintConfig = DEFAULT_CONSTRAINTS,
    grid: GridSpec = DEFAULT_GRID,
    transcript: "TranscriptWriter | None" = None,
) -> tuple[PolicyParameters, list[EpisodeStats]]:
    """Algorithm-2 style training: batches of single-step rounds, advantage
    actor-critic updates. Deterministic for a fixed seed and player."""
    if not minigame.items:
        raise ValueError("mini-game has no items")
    rng = np.random.default_rng(cfg.seed)
    n_items = len(minigame.items)
    batch_size = min(cfg.batch_size, n_items)
    trace: list[EpisodeStats] = []
    for episode in range(cfg.episodes):
        if batch_size == n_items:
            indices = range(n_items)
        else:
            indices = rng.choice(n_items, size=batch_size, replace=False)
        records = []
        step_records = []
        for idx in indices:
            record, cache, action = play_round(
                minigame.items[idx], params, player, rng,
                reward_cfg, scene_cfg, grid, item_index=int(idx),
            )
            records.append(record)
            step_records.append((cache, action, record.reward))
            if transcript is not None:
                transcript.write(minigame.id, episode, record)
        backward_and_step(
            params, step_records, cfg.learning_rate,
            entropy_coef=cfg.entropy_coef,
            detach_critic_trunk=cfg.detach_critic_trunk,
        )
        n = len(records)
        trace.append(
            EpisodeStats(
                episode=episode,
                mean_reward=sum(r.reward for r in records) / n,
                consistency=sum(r.changed for r in records) / n,
                drop=sum(r.dropped for r in records) / n,
                invalid_rate=sum(not r.valid for r in records) / n,
            )
        )
    return params, trace


def evaluate(
    minigame: MiniGame,
    params: PolicyParameters,
    player: PlayerHandle,
    rounds_per_item: int = 1,
    seed: int = 0,
    reward_cfg: RewardConfig = DEFAULT_REWARDS,
    scene_cfg: SceneConstraintConfig = DEFAULT_CONSTRAINTS,
    grid: GridSpec = DEFAULT_GRID,
    transcript: "TranscriptWriter | None" = None,
) -> list[RoundRecord]:
    """Roll the fixed policy over every item; no parameter updates."""
    rng = np.random.default_rng(seed)
    records = []
    for _ in range(rounds_per_item):
        for idx, item in enumerate(minigame.items):
            record, _, _ = play_round(
                item, params, player, rng, reward_cfg, scene_cfg, grid, item_index=idx
            )
            records.append(record)
            if transcript is not None:
                transcript.write(minigame.id, -1, record)
    return records


@dataclass(frozen=True)
class SearchItemResult:
    item_index: int
    success: bool
    queries_used: int
    displacement: tuple[tuple[int, int] | None, ...] | None


def random_search(
    minigame: MiniGame,
    player: PlayerHandle,
    budget: int = 5000,
    seed: int = 0,
    reward_cfg: RewardConfig = DEFAULT_REWARDS,
    scene_cfg: SceneConstraintConfig = DEFAULT_CONSTRAINTS,
    grid: GridSpec = DEFAULT_GRID,
    count_rejected: bool = False,
    max_rejections: int = 200_000,
) -> tuple[list[RoundRecord], list[SearchItemResult]]:
    """Uniform random-displacement baseline with a per-item query budget.

    Only player queries consume budget by default (enforcer-rejected samples
    are free); ``count_rejected`` switches to the stricter reading. Stops per
    item at the first answer flip.
    """
    rng = np.random.default_rng(seed)
    offset = grid.max_offset
    records: list[RoundRecord] = []
    summaries: list[SearchItemResult] = []
    for idx, item in enumerate(minigame.items):
        old = player.answer(item.scene, item.question)
        n = len(item.scene)
        used = 0
        rejected = 0
        success = False
        found = None
        while used < budget:
            pairs = [
                (int(rng.integers(-offset, offset + 1)), int(rng.integers(-offset, offset + 1)))
                for _ in range(n)
            ]
            d = Displacement.from_pairs(pairs)
            new, invalid_kinds, reward = _evaluate_manipulation(
                item, d, player, reward_cfg, scene_cfg, grid, old
            )
            if new is None:
                rejected += 1
                if count_rejected:
                    used += 1
                if rejected > max_rejections:
                    break
                continue
            used += 1
            records.append(
                RoundRecord(
                    item_index=idx,
                    old_answer=str(old),
                    new_answer=str(new),
                    invalid_kinds=(),
                    gt_answer=str(item.gt),
                    reward=reward,
                    log_prob=0.0,
                    state_value=0.0,
                    displacement=d.moves,
                )
            )
            if str(new) != str(old):
                success = True
                found = d.moves
                break
        summaries.append(SearchItemResult(idx, success, used, found))
    return records, summaries


@dataclass(frozen=True)
class ExhaustiveResult:
    fooling: tuple[tuple[tuple[int, int] | None, ...], ...]  # displacement moves
    total_enumerated: int
    total_valid: int
    rarity: float
    complete: bool


def exhaustive_search(
    item: GameItem,
    player: PlayerHandle,
    movable: Sequence[int],
    grid: GridSpec = DEFAULT_GRID,
    reward_cfg: RewardConfig = DEFAULT_REWARDS,
    scene_cfg: SceneConstraintConfig = DEFAULT_CONSTRAINTS,
) -> ExhaustiveResult:
    """Enumerate every grid placement of the movable objects, query the player
    on each valid scene, and return all fooling displacements.

    rarity = |fooling| / (N^2)^|movable|.
    """
    movable = sorted(set(movable))
    if not 1 <= len(movable) <= 3:
        raise ValueError("movable set must have 1..3 objects")
    for obj_id in movable:
        if not 0 <= obj_id < len(item.scene):
            raise ValueError(f"movable object {obj_id} not in scene")
    n_bins = grid.bins_per_axis
    old = player.answer(item.scene, item.question)
    current_bins = {
        obj_id: (
            discretize(item.scene.objects[obj_id].x, grid),
            discretize(item.scene.objects[obj_id].y, grid),
        )
        for obj_id in movable
    }
    fooling: list[tuple[tuple[int, int] | None, ...]] = []
    total = 0
    valid = 0
    complete = True
    cells = list(itertools.product(range(n_bins), repeat=2))
    try:
        for placement in itertools.product(cells, repeat=len(movable)):
            total += 1
            moves: list[tuple[int, int] | None] = [
                (0, 0) if i < len(item.scene) else None for i in range(MAX_OBJECTS)
            ]
            for obj_id, (tx, ty) in zip(movable, placement):
                cx, cy = current_bins[obj_id]
                moves[obj_id] = (tx - cx, ty - cy)
            d = Displacement(tuple(moves))
            new, _, _ = _evaluate_manipulation(
                item, d, player, reward_cfg, scene_cfg, grid, old
            )
            if new is None:
                continue
            valid += 1
            if str(new) != str(old):
                fooling.append(d.moves)
    except TransportError:
        complete = False
    denom = (n_bins ** 2) ** len(movable)
    return ExhaustiveResult(
        fooling=tuple(fooling),
        total_enumerated=total,
        total_valid=valid,
        rarity=len(fooling) / denom,
        complete=complete,
    )


class TranscriptWriter:
    """Append-only JSONL log of round records, replayable for audit."""

    def __init__(self, path: str | Path) -> None:
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = self.path.open("a")

    def write(self, minigame_id: str, episode: int, record: RoundRecord) -> None:
        payload = {
            "minigame": minigame_id,
            "episode": episode,
            "time": time.time(),
            "item_index": record.item_index,
            "old_answer": record.old_answer,
            "new_answer": record.new_answer,
            "invalid_kinds": list(record.invalid_kinds),
            "gt_answer": record.gt_answer,
            "reward": record.reward,
            "log_prob": record.log_prob,
            "state_value": record.state_value,
            "displacement": [list(m) if m else None for m in record.displacement],
        }
        self._fh.write(json.dumps(payload) + "\n")
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()


def load_transcript(path: str | Path) -> list[RoundRecord]:
    records = []
    for line in Path(path).read_text().splitlines():
        if not line.strip():
            continue
        rec = json.loads(line)
        records.append(
            RoundRecord(
                item_index=rec["item_index"],
                old_answer=rec["old_answer"],
                new_answer=rec["new_answer"],
                invalid_kinds=tuple(rec["invalid_kinds"]),
                gt_answer=rec["gt_answer"],
                reward=rec["reward"],
                log_prob=rec["log_prob"],
                state_value=rec["state_value"],
                displacement=tuple(
                    tuple(m) if m is not None else None for m in rec["displacement"]
                ),
            )
        )
    return records
