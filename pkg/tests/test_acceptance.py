"""Acceptance suite: one test per shipped guarantee, one PASS/FAIL line each.

Criteria 1-10 exercise the harness alone; 11-12 need the example player
package (skipped cleanly when it is not installed). The adversary-vs-random-
search comparison (5) runs once in a session fixture; the transcript audit
(10) inspects the bytes of that same run.
"""

import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

from scenegame.enforcers import (
    DEFAULT_CONSTRAINTS,
    SceneConstraintConfig,
    check_question_relevance,
    check_scene,
)
from scenegame.game import (
    DEFAULT_REWARDS,
    MiniGame,
    RewardConfig,
    TrainConfig,
    build_minigames,
    calc_reward,
    evaluate,
    exhaustive_search,
    make_item,
    play_round,
    random_search,
    train,
)
from scenegame.generator import question_vocabulary
from scenegame.gridlab import GridDatasetSpec, decode_config, encode_config, enumerate_configs
from scenegame.metrics import consistency_and_drop, one_sample_t_test, relative_drop
from scenegame.players import (
    ExternalPlayerHandle,
    FlawSpec,
    FlawedPlayer,
    OraclePlayer,
    PlayerHandle,
    audit_transcript,
)
from scenegame.policy import (
    PolicyConfig,
    batch_gradients,
    forward,
    init_policy,
    sample,
)
from scenegame.programs import Answer, answer_equal, execute, load_questions
from scenegame.scene import (
    DEFAULT_GRID,
    Displacement,
    apply_displacement,
    load_scenes,
    scene_from_record,
    scene_to_record,
    tokenize,
)
from scene_helpers import make_scene

REPO = Path(__file__).resolve().parent.parent
CORPUS = REPO / "data" / "corpus"
VERSUS = REPO / "data" / "adversary-vs-rsg"
GRID = REPO / "data" / "grid-onehop-2obj"


def verdict(num, ok, detail):
    line = f"[acceptance {num:02d}] {'PASS' if ok else 'FAIL'}: {detail}"
    print(line)
    assert ok, line


def load_corpus(root):
    return load_scenes(root / "scenes.json"), load_questions(root / "questions.json")


# ---------------------------------------------------------------- criterion 1

class TestRewardTruthTable:
    def test_01_reward_truth_table(self):
        t0 = time.time()
        yes, no, maybe = Answer.parse("yes"), Answer.parse("no"), Answer.parse("2")
        cases = [
            (None, yes, yes, -0.8),     # invalid scene
            (yes, yes, yes, -0.1),      # unchanged
            (no, yes, yes, 1.0),        # flipped a correct answer
            (maybe, yes, no, 0.1),      # flipped an already wrong answer
        ]
        ok = all(calc_reward(new, old, gt, DEFAULT_REWARDS) == want
                 for new, old, gt, want in cases)
        # every branch, with every distinct answer kind
        for old in (yes, no, maybe):
            for gt in (yes, no, maybe):
                assert calc_reward(None, old, gt, DEFAULT_REWARDS) == -0.8
                assert calc_reward(old, old, gt, DEFAULT_REWARDS) == -0.1
                for new in (yes, no, maybe):
                    if answer_equal(new, old):
                        continue
                    want = 1.0 if answer_equal(old, gt) else 0.1
                    ok = ok and calc_reward(new, old, gt, DEFAULT_REWARDS) == want
        elapsed = time.time() - t0
        verdict(1, ok and elapsed < 1.0,
                f"reward truth table exact over all branches ({elapsed:.2f}s)")


# ---------------------------------------------------------------- criterion 2

class TestAcceptedManipulationsPreserveTruth:
    def test_02_accepted_manipulations_preserve_ground_truth(self):
        t0 = time.time()
        scenes, questions = load_corpus(CORPUS)
        items = [make_item(scenes[q.image_index], q) for q in questions]
        rng = np.random.default_rng(0)
        accepted = 0
        mismatches = 0
        while accepted < 1000:
            item = items[int(rng.integers(len(items)))]
            pairs = [tuple(int(v) for v in rng.integers(-3, 4, size=2))
                     for _ in range(len(item.scene))]
            new_scene = apply_displacement(item.scene, Displacement.from_pairs(pairs), DEFAULT_GRID)
            if check_scene(new_scene, DEFAULT_CONSTRAINTS):
                continue
            if not check_question_relevance(item.program, new_scene, item.gt):
                continue
            accepted += 1
            # independent re-execution through a file-format round trip
            replayed = scene_from_record(scene_to_record(new_scene))
            if not answer_equal(execute(item.program, replayed), item.gt):
                mismatches += 1
        elapsed = time.time() - t0
        verdict(2, mismatches == 0 and elapsed < 30.0,
                f"{accepted} accepted manipulations, {mismatches} ground-truth "
                f"changes ({elapsed:.1f}s)")


# ---------------------------------------------------------------- criterion 3

class TestOracleControl:
    def test_03_oracle_game_never_flips(self):
        t0 = time.time()
        scenes, questions = load_corpus(CORPUS)
        minigame = build_minigames(scenes, questions, size=10, count=1, seed=3)[0]
        player = PlayerHandle(OraclePlayer(questions))
        params = init_policy(PolicyConfig(question_vocab=question_vocabulary(questions)), seed=0)
        records = evaluate(minigame, params, player, rounds_per_item=100, seed=3)
        m = consistency_and_drop(records)
        elapsed = time.time() - t0
        verdict(3, m.rounds == 1000 and m.drop == 0.0 and m.consistency == 0.0
                and elapsed < 60.0,
                f"1000 oracle rounds: drop={m.drop} consistency={m.consistency} "
                f"({elapsed:.1f}s)")


# ---------------------------------------------------------------- criterion 4

class TestGradientCorrectness:
    EPS = 1e-5
    TOL = 1e-4

    def _objective(self, params, batch, base_adv, entropy_coef, n):
        total = 0.0
        for (tokens, action, reward), adv in zip(batch, base_adv):
            cache = forward(params, tokens)
            lp, ent = 0.0, 0.0
            for head, choice in enumerate(action.choices):
                if choice is None:
                    continue
                for axis, c in zip((0, 1), choice):
                    p = cache.dists[head, axis]
                    lp += math.log(p[c])
                    ent += -float(p @ np.log(p))
            total += -lp * adv
            total += (cache.state_value - reward) ** 2 / len(batch)
            total += -entropy_coef * ent
        return total

    def test_04_analytic_gradients_match_finite_differences(self):
        t0 = time.time()
        rng = np.random.default_rng(7)
        cfg = PolicyConfig(embed_dim=6, trunk_hidden=8, actor_hidden=8,
                           critic_hidden=8,
                           question_vocab=("how", "many", "red", "cubes"))
        params = init_policy(cfg, seed=7)
        params.tensors["heads_w"] += rng.normal(0, 0.05, params.tensors["heads_w"].shape)
        params.tensors["heads_b"] += rng.normal(0, 0.05, params.tensors["heads_b"].shape)
        scene = make_scene([(-2.0, -1.0), (0.0, 0.3), (1.5, 1.0)])
        tokens = tokenize(scene, cfg.encode_question(("how", "many", "red", "cubes")))
        batch = []
        for reward in (1.0, -0.8, -0.1, 0.1):
            action = sample(forward(params, tokens), rng, n_active=3)
            batch.append((tokens, action, reward))
        records = [(forward(params, t), a, r) for t, a, r in batch]
        base_adv = [r - c.state_value for c, _, r in records]
        grads, _ = batch_gradients(params, records, entropy_coef=0.01)

        worst = 0.0
        for name, tensor in params.tensors.items():
            fd = np.zeros_like(tensor)
            it = np.nditer(tensor, flags=["multi_index"])
            for _ in it:
                idx = it.multi_index
                orig = tensor[idx]
                tensor[idx] = orig + self.EPS
                up = self._objective(params, batch, base_adv, 0.01, 3)
                tensor[idx] = orig - self.EPS
                down = self._objective(params, batch, base_adv, 0.01, 3)
                tensor[idx] = orig
                fd[idx] = (up - down) / (2 * self.EPS)
            scale = max(np.abs(grads[name]).max(), np.abs(fd).max(), 1e-8)
            worst = max(worst, float(np.abs(grads[name] - fd).max() / scale))
        elapsed = time.time() - t0
        verdict(4, worst <= self.TOL and elapsed < 60.0,
                f"max relative gradient error {worst:.2e} over every tensor "
                f"({elapsed:.1f}s)")


# ------------------------------------------------------- criteria 5 and 10

TAU = 0.15
TRAIN_STAGES = ((3000, 3e-2, 0.05), (1000, 3e-2, 0.0))


@pytest.fixture(scope="session")
def versus_run():
    """Trains the adversary on every curated mini-game and runs the
    random-search baseline, collecting all records and wire bytes."""
    if not (VERSUS / "minigames.json").exists():
        pytest.fail(f"curated fixture set missing at {VERSUS}")
    t0 = time.time()
    scenes, questions = load_corpus(VERSUS)
    payload = json.loads((VERSUS / "minigames.json").read_text())
    transcript = []
    player = PlayerHandle(
        FlawedPlayer(questions, FlawSpec("relation-margin", tau=TAU)),
        transcript=transcript,
    )
    items = [make_item(scenes[q.image_index], q) for q in questions]
    unfoolable = [
        i for i, item in enumerate(items)
        if not exhaustive_search(item, player, movable=[0, 1]).fooling
    ]
    cfg = PolicyConfig(question_vocab=question_vocabulary(questions))
    adv_records, rsg_records, adv_drops = [], [], []
    for g in payload["minigames"]:
        mg = MiniGame(id=g["id"], items=tuple(items[i] for i in g["items"]))
        params = init_policy(cfg, seed=g["seed"])
        for episodes, lr, entropy in TRAIN_STAGES:
            params, _ = train(
                mg, params, player,
                TrainConfig(episodes=episodes, batch_size=10, learning_rate=lr,
                            entropy_coef=entropy, seed=g["seed"]),
            )
        ev = evaluate(mg, params, player, rounds_per_item=10, seed=1000 + g["seed"])
        adv_records.extend(ev)
        adv_drops.append(consistency_and_drop(ev).drop)
        recs, _ = random_search(mg, player, budget=5000, seed=2000 + g["seed"])
        rsg_records.extend(recs)
    return {
        "unfoolable": unfoolable,
        "adv_drops": adv_drops,
        "adv": consistency_and_drop(adv_records),
        "rsg": consistency_and_drop(rsg_records),
        "transcript": transcript,
        "elapsed": time.time() - t0,
    }


class TestAdversaryBeatsRandomSearch:
    def test_05_trained_adversary_beats_random_search(self, versus_run):
        r = versus_run
        adv, rsg = r["adv"].drop, r["rsg"].drop
        t = one_sample_t_test(r["adv_drops"])
        ok = (
            not r["unfoolable"]
            and rsg > 0.0
            and adv >= 3.0 * rsg
            and t.p_value < 0.01
            and r["elapsed"] <= 1800.0
        )
        verdict(5, ok,
                f"adversary drop {adv:.3f} vs random-search drop {rsg:.4f} "
                f"(x{adv / max(rsg, 1e-12):.1f}, need x3; p={t.p_value:.1e}, "
                f"need <0.01; all {len(r['adv_drops'])} games foolable; "
                f"{r['elapsed']:.0f}s)")


# ---------------------------------------------------------------- criterion 6

class TestExhaustiveOracleAgreement:
    def test_06_fooling_replays_and_rarity_recount(self):
        t0 = time.time()
        scenes, questions = load_corpus(VERSUS)
        player = PlayerHandle(FlawedPlayer(questions, FlawSpec("relation-margin", tau=TAU)))
        q = questions[0]
        item = make_item(scenes[q.image_index], q)
        result = exhaustive_search(item, player, movable=[0, 1])
        params = init_policy(
            PolicyConfig(question_vocab=question_vocabulary(questions)), seed=0
        )
        rng = np.random.default_rng(0)
        bad = 0
        for moves in result.fooling:
            record, _, _ = play_round(
                item, params, player, rng, forced=Displacement(moves=moves)
            )
            if record.reward not in (1.0, 0.1):
                bad += 1
        recount = len(result.fooling) / float(49 ** 2)
        ok = (result.fooling
              and bad == 0
              and result.rarity == recount
              and result.complete)
        elapsed = time.time() - t0
        verdict(6, bool(ok) and elapsed <= 600.0,
                f"{len(result.fooling)} fooling placements all replay to "
                f"reward 1.0/0.1; rarity {result.rarity:.6f} == recount "
                f"({elapsed:.1f}s)")


# ---------------------------------------------------------------- criterion 7

class TestGridCardinalities:
    def test_07_cardinalities_and_codec(self):
        t0 = time.time()
        n2 = sum(1 for _ in enumerate_configs(GridDatasetSpec(n_objects=2)))
        spec3 = GridDatasetSpec(n_objects=3)
        n3 = spec3.raw_configs
        # full n=3 enumeration is the slow half; count in slices
        n3_enumerated = sum(1 for _ in enumerate_configs(spec3))
        rng = np.random.default_rng(0)
        codec_ok = all(
            encode_config(decode_config(int(i), 3, 49), 49) == int(i)
            for i in rng.integers(0, 117_649, size=10_000)
        )
        elapsed = time.time() - t0
        verdict(7, n2 == 2401 and n3 == 117_649 and n3_enumerated == 117_649
                and codec_ok and elapsed < 120.0,
                f"2401 (n=2) and 117649 (n=3) configurations; codec round-trips "
                f"10^4 ids ({elapsed:.1f}s)")


# ---------------------------------------------------------------- criterion 8

class TestStatisticsReferences:
    def test_08_reference_arithmetic(self):
        t0 = time.time()
        t = one_sample_t_test([1, 2, 3, 4, 5])
        ok = (
            relative_drop(72.1, 61.8) == 14.2
            and relative_drop(80.0, 28.0) == 65.0
            and abs(t.p_value - 0.0066) <= 2e-4
            and one_sample_t_test([0.0, 0.0, 0.0, 0.0]).p_value == 1.0
        )
        elapsed = time.time() - t0
        verdict(8, ok and elapsed < 1.0,
                f"relative drops 14.2/65.0, t-test p={t.p_value:.4f}, "
                f"all-zero p=1.000 ({elapsed:.2f}s)")


# ---------------------------------------------------------------- criterion 9

class TestEnforcerThresholds:
    def test_09_distance_bounds_and_stretching(self):
        t0 = time.time()
        no_margin = SceneConstraintConfig(direction_margin=0.0, min_objects=2,
                                          min_visibility=0.0)
        near = make_scene([(0.0, 0.0), (0.24, 0.0)])
        far = make_scene([(0.0, 0.0), (0.26, 0.0)])
        rejected = any(v.kind == "distance" for v in check_scene(near, no_margin))
        accepted = check_scene(far, no_margin) == []
        out = make_scene([(0.0, 0.0), (3.4, 0.0)])
        bounded = any(v.kind == "bounds" for v in check_scene(out, no_margin))
        stretching = SceneConstraintConfig(direction_margin=0.0, min_objects=2,
                                           min_visibility=0.0, enforce_bounds=False)
        admitted = not any(v.kind == "bounds" for v in check_scene(out, stretching))
        elapsed = time.time() - t0
        verdict(9, rejected and accepted and bounded and admitted and elapsed < 1.0,
                f"0.24 rejected / 0.26 accepted; bounds +/-3 enforced and "
                f"switchable off ({elapsed:.2f}s)")


# --------------------------------------------------------------- criterion 10

class TestBlackBoxRedaction:
    def test_10_no_hidden_fields_cross_the_wire(self, versus_run):
        transcript = versus_run["transcript"]
        problems = audit_transcript(transcript)
        verdict(10, len(transcript) > 0 and problems == [],
                f"{len(transcript)} player-bound messages, "
                f"{len(problems)} leaked fields")


# --------------------------------------------------------------- criterion 11

class TestExternalPlayerIntegration:
    def test_11_protocol_game_and_fuzzing(self, tmp_path):
        example_player = pytest.importorskip("example_player")
        import subprocess
        import sys

        t0 = time.time()
        result = example_player.train_tiny(GRID, split_percent=90, epochs=2, seed=0)
        ckpt = tmp_path / "player.npz"
        result.model.save(ckpt)
        command = [sys.executable, "-m", "example_player.cli", "serve",
                   "--checkpoint", str(ckpt)]

        scenes, questions = load_corpus(GRID)
        transcript = []
        handle = ExternalPlayerHandle(command=command, transcript=transcript)
        answered = 0
        for q in questions[:100]:
            handle.answer(scenes[q.image_index], q.question)
            answered += 1
        game_ok = answered == 100 and audit_transcript(transcript) == []

        # malformed-request fuzzing: mutate a valid request 100 ways
        base = transcript[0]
        rng = np.random.default_rng(0)
        proc = subprocess.Popen(command, stdin=subprocess.PIPE,
                                stdout=subprocess.PIPE)
        responses = 0
        for i in range(100):
            raw = bytearray(base)
            kind = i % 4
            if kind == 0:
                raw[int(rng.integers(len(raw) - 1))] = int(rng.integers(256))
            elif kind == 1:
                raw = raw[: int(rng.integers(1, len(raw)))] + b"\n"
            elif kind == 2:
                rec = json.loads(base)
                rec.pop(list(rec)[int(rng.integers(len(rec)))])
                raw = (json.dumps(rec) + "\n").encode()
            else:
                raw = rng.integers(0, 256, size=40, dtype=np.uint8).tobytes().replace(b"\n", b" ") + b"\n"
            if not raw.endswith(b"\n"):
                raw += b"\n"
            proc.stdin.write(bytes(raw))
            proc.stdin.flush()
            if proc.stdout.readline():
                responses += 1
        proc.stdin.close()
        fuzz_ok = responses == 100 and proc.wait(timeout=30) == 0
        elapsed = time.time() - t0
        verdict(11, game_ok and fuzz_ok and elapsed < 300.0,
                f"100-round game clean, 100/100 fuzzed requests answered, "
                f"server exited 0 ({elapsed:.1f}s)")


# --------------------------------------------------------------- criterion 12

class TestGeneralizationTrend:
    def test_12_held_out_accuracy_trend(self):
        example_player = pytest.importorskip("example_player")
        t0 = time.time()
        means = []
        baseline = None
        for pct in (25, 50, 75, 90):
            results = [
                example_player.train_tiny(GRID, split_percent=pct, trial=t, seed=0)
                for t in range(10)
            ]
            means.append(float(np.mean([r.test_accuracy for r in results])))
            if pct == 90:
                baseline = float(np.mean([r.majority_baseline for r in results]))
        monotone = all(b >= a for a, b in zip(means, means[1:]))
        beats_majority = means[-1] > baseline
        elapsed = time.time() - t0
        verdict(12, monotone and beats_majority and elapsed <= 1200.0,
                f"mean held-out accuracy {['%.3f' % m for m in means]} "
                f"monotone; X=90 beats majority {baseline:.3f} ({elapsed:.0f}s)")
