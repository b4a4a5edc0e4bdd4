"""Build the curated mini-game fixture set for the adversary-vs-random-search
comparison.

Scans seeded scene/question pools for items that are droppable (the flawed
player initially answers correctly) and verifiably foolable (exhaustive search
over two movable objects finds at least one answer-flipping placement). Items
are then sorted into two difficulty classes by probing uniform random search:

  easy  -- dense fooling set, random search flips the answer within a few
           queries; these are the items a trained adversary can learn.
  slow  -- sparse fooling set, random search needs many queries (or never
           flips within the probe budget); these make random search spend
           most of its budget on non-fooling rounds.

Each mini-game mixes both classes so the comparison covers both regimes.
The output directory is consumable by the CLI (train/play/rsg) and by the
acceptance tests.
"""

import argparse
import dataclasses
import json
import time
from pathlib import Path

from scenegame.game import MiniGame, exhaustive_search, make_item, random_search
from scenegame.generator import generate_scenes, generate_questions
from scenegame.players import FlawSpec, FlawedPlayer, PlayerHandle
from scenegame.programs import save_questions
from scenegame.scene import save_scenes

TAU = 0.15
EASY_MIN_FOOLING = 150
EASY_MAX_QUERIES = 10
SLOW_MIN_QUERIES = 20
PROBE_BUDGET = 600
PROBE_SEEDS = (7, 8)


def probe(item, player, seed):
    mg = MiniGame(id="probe", items=(item,))
    _, summaries = random_search(mg, player, budget=PROBE_BUDGET, seed=seed)
    s = summaries[0]
    return s.queries_used if s.success else PROBE_BUDGET + 1


def scan_pool(pool_seed, easy, slow, stats):
    scenes = generate_scenes(60, seed=pool_seed, n_objects=3)
    questions = generate_questions(scenes, per_scene=3, seed=pool_seed)
    player = PlayerHandle(FlawedPlayer(questions, FlawSpec("relation-margin", tau=TAU)))
    for q in questions:
        item = make_item(scenes[q.image_index], q)
        if player.answer(item.scene, item.question) != item.gt:
            continue
        fooling = len(exhaustive_search(item, player, movable=[0, 1]).fooling)
        if fooling == 0:
            continue
        used = [probe(item, player, s) for s in PROBE_SEEDS]
        entry = (scenes[q.image_index], q, fooling, used)
        if fooling >= EASY_MIN_FOOLING and used[0] <= EASY_MAX_QUERIES:
            easy.append(entry)
        elif min(used) >= SLOW_MIN_QUERIES:
            slow.append(entry)
        stats["scanned"] += 1


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--games", type=int, default=20)
    ap.add_argument("--easy-per-game", type=int, default=8)
    ap.add_argument("--slow-per-game", type=int, default=2)
    ap.add_argument("--first-pool-seed", type=int, default=21)
    ap.add_argument("--max-pools", type=int, default=40)
    ap.add_argument("--out-dir", default="data/adversary-vs-rsg")
    args = ap.parse_args()

    need_easy = args.games * args.easy_per_game
    need_slow = args.games * args.slow_per_game
    easy, slow, stats = [], [], {"scanned": 0}
    pools = []
    t0 = time.time()
    for pool_seed in range(args.first_pool_seed, args.first_pool_seed + args.max_pools):
        pools.append(pool_seed)
        scan_pool(pool_seed, easy, slow, stats)
        print(
            f"pool {pool_seed}: easy {len(easy)}/{need_easy} "
            f"slow {len(slow)}/{need_slow} ({time.time() - t0:.0f}s)",
            flush=True,
        )
        if len(easy) >= need_easy and len(slow) >= need_slow:
            break
    else:
        raise SystemExit("pool budget exhausted before quotas were met")

    chosen = easy[:need_easy] + slow[:need_slow]
    # dedupe scenes (several questions can share one)
    scene_index = {}
    out_scenes = []
    out_questions = []
    for scene, q, _, _ in chosen:
        key = id(scene)
        if key not in scene_index:
            scene_index[key] = len(out_scenes)
            out_scenes.append(scene)
        out_questions.append(dataclasses.replace(q, image_index=scene_index[key]))

    games = []
    for g in range(args.games):
        e0 = g * args.easy_per_game
        s0 = need_easy + g * args.slow_per_game
        games.append(
            {
                "id": f"mg{g:03d}",
                "seed": g,
                "items": list(range(e0, e0 + args.easy_per_game))
                + list(range(s0, s0 + args.slow_per_game)),
            }
        )

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_scenes(out_scenes, out / "scenes.json")
    save_questions(out_questions, out / "questions.json")
    (out / "minigames.json").write_text(
        json.dumps(
            {"scenes": "scenes.json", "questions": "questions.json", "minigames": games},
            indent=1,
        )
    )
    item_stats = [
        {"fooling_count": f, "probe_queries": u, "class": "easy" if i < need_easy else "slow"}
        for i, (_, _, f, u) in enumerate(chosen)
    ]
    (out / "manifest.json").write_text(
        json.dumps(
            {
                "tau": TAU,
                "flaw": "relation-margin",
                "pool_seeds": pools,
                "scanned_droppable_foolable": stats["scanned"],
                "easy_min_fooling": EASY_MIN_FOOLING,
                "easy_max_queries": EASY_MAX_QUERIES,
                "slow_min_queries": SLOW_MIN_QUERIES,
                "probe_budget": PROBE_BUDGET,
                "probe_seeds": list(PROBE_SEEDS),
                "items": item_stats,
            },
            indent=1,
        )
    )
    print(f"wrote {len(games)} mini-games ({len(out_questions)} items) to {out}")


if __name__ == "__main__":
    main()
