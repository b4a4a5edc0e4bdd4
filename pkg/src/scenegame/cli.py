"""Command-line front end.

One subcommand per pipeline stage: corpus generation, grid datasets,
mini-game assembly, adversary training, policy evaluation, the search
baselines, report aggregation and figure rendering. Every run writes a
manifest with the fully resolved configuration so artifacts are
reproducible from disk.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import gridlab
from .enforcers import DEFAULT_CONSTRAINTS, SceneConstraintConfig
from .game import (
    MiniGame,
    TrainConfig,
    TranscriptWriter,
    build_minigames,
    evaluate,
    exhaustive_search,
    load_transcript,
    make_item,
    random_search,
    train,
)
from .generator import generate_questions, generate_scenes, question_vocabulary
from .metrics import (
    aggregate,
    consistency_and_drop,
    metrics_to_row,
    relative_drop,
    write_report_csv,
    write_report_json,
)
from .players import (
    ConstantPlayer,
    ExternalPlayerHandle,
    FlawedPlayer,
    FlawSpec,
    OraclePlayer,
    PlayerHandle,
)
from .policy import PolicyConfig, init_policy, load_checkpoint, save_checkpoint
from .programs import Answer, load_questions, save_questions
from .scene import DEFAULT_VOCAB, load_scenes, save_scenes
from .viz import Series, render_chart, render_topdown

CONFIG_ENV = "SCENEGAME_CONFIG"

ERR_USAGE = 2
ERR_CONFIG = 3
ERR_IO = 4
ERR_RUNTIME = 5


class CliError(Exception):
    def __init__(self, error_class: str, problems: list[str], exit_code: int = ERR_CONFIG):
        super().__init__("; ".join(problems))
        self.error_class = error_class
        self.problems = problems
        self.exit_code = exit_code


def _fail(error_class: str, problems: list[str], exit_code: int = ERR_CONFIG):
    raise CliError(error_class, problems, exit_code)


def _write_manifest(out_dir: Path, args: argparse.Namespace) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    resolved = {
        k: (str(v) if isinstance(v, Path) else v)
        for k, v in vars(args).items()
        if k != "func"
    }
    resolved["time"] = time.time()
    resolved["argv"] = sys.argv[1:]
    (out_dir / "manifest.json").write_text(json.dumps(resolved, indent=1, sort_keys=True))


def _make_player(spec: str, questions) -> PlayerHandle:
    """Player launch spec grammar:

    oracle | constant:<answer> | flaw:<kind>[:param=value,...] |
    cmd:<shell words ...> | tcp:<host>:<port>
    """
    if spec == "oracle":
        return PlayerHandle(OraclePlayer(questions))
    if spec.startswith("constant:"):
        return PlayerHandle(ConstantPlayer(Answer.parse(spec.split(":", 1)[1])))
    if spec.startswith("flaw:"):
        parts = spec.split(":")
        kwargs = {}
        for part in parts[2:]:
            key, _, value = part.partition("=")
            kwargs[key] = float(value) if key == "tau" else int(value)
        return PlayerHandle(FlawedPlayer(questions, FlawSpec(kind=parts[1], **kwargs)))
    if spec.startswith("cmd:"):
        return ExternalPlayerHandle(command=spec.split(":", 1)[1].split())
    if spec.startswith("tcp:"):
        _, host, port = spec.split(":")
        return ExternalPlayerHandle(address=(host, int(port)))
    _fail("bad-player-spec", [f"unrecognized player spec {spec!r}"])


def _load_corpus(scenes_path: str, questions_path: str):
    problems = []
    for label, p in (("scenes", scenes_path), ("questions", questions_path)):
        if not Path(p).exists():
            problems.append(f"{label} file not found: {p}")
    if problems:
        _fail("missing-input", problems, ERR_IO)
    return load_scenes(scenes_path), load_questions(questions_path)


def _load_minigames(path: str) -> tuple[dict, list[dict]]:
    if not Path(path).exists():
        _fail("missing-input", [f"mini-game file not found: {path}"], ERR_IO)
    payload = json.loads(Path(path).read_text())
    return payload, payload["minigames"]


def _rebuild_minigame(payload: dict, entry: dict) -> MiniGame:
    scenes, questions = _load_corpus(payload["scenes"], payload["questions"])
    items = tuple(
        make_item(scenes[questions[qi].image_index], questions[qi])
        for qi in entry["items"]
    )
    return MiniGame(id=entry["id"], items=items, seed=entry["seed"])


def _policy_config(questions) -> PolicyConfig:
    return PolicyConfig(question_vocab=question_vocabulary(questions))


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_gen_scenes(args) -> int:
    out = Path(args.out_dir)
    _write_manifest(out, args)
    scenes = generate_scenes(args.count, seed=args.seed, n_objects=args.objects)
    qs = generate_questions(scenes, per_scene=args.per_scene, seed=args.seed)
    save_scenes(scenes, out / "scenes.json")
    save_questions(qs, out / "questions.json")
    print(f"wrote {len(scenes)} scenes, {len(qs)} questions to {out}")
    return 0


def cmd_gen_grid(args) -> int:
    out = Path(args.out_dir)
    _write_manifest(out, args)
    spec = gridlab.GridDatasetSpec(
        n_objects=args.objects,
        family=args.family,
        split_percent=args.split,
        trials=args.trials,
        seed=args.seed,
        stationary=args.stationary or args.objects == 4,
    )
    rng = np.random.default_rng(spec.seed)
    stop = args.limit if args.limit else spec.raw_configs
    items = [
        gridlab.with_questions(item, spec, rng)
        for item in gridlab.enumerate_configs(spec, 0, stop)
    ]
    valid_ids = [i.config_id for i in items if i.valid]
    splits = gridlab.split(valid_ids, spec.split_percent, spec.seed, spec.trials)
    gridlab.save_dataset(spec, items, splits, out)
    print(
        f"grid dataset: {len(items)} configs ({len(valid_ids)} valid), "
        f"{sum(len(i.questions) for i in items)} questions -> {out}"
    )
    return 0


def cmd_minigame(args) -> int:
    scenes, questions = _load_corpus(args.scenes, args.questions)
    games = build_minigames(scenes, questions, args.size, args.count, seed=args.seed)
    # persist as question-file indices; the sampling permutation is the same
    # one build_minigames drew, so items are recomputable from the corpus
    order = np.random.default_rng(args.seed).permutation(len(questions))
    payload = {
        "scenes": args.scenes,
        "questions": args.questions,
        "minigames": [
            {
                "id": g.id,
                "seed": g.seed,
                "items": [int(order[gi * args.size + k]) for k in range(args.size)],
            }
            for gi, g in enumerate(games)
        ],
    }
    out = Path(args.out_dir)
    _write_manifest(out, args)
    (out / "minigames.json").write_text(json.dumps(payload, indent=1))
    print(f"wrote {len(games)} mini-games of size {args.size} to {out}")
    return 0


def cmd_train(args) -> int:
    payload, entries = _load_minigames(args.minigames)
    _, questions = _load_corpus(payload["scenes"], payload["questions"])
    out = Path(args.out_dir)
    _write_manifest(out, args)
    cfg = TrainConfig(
        episodes=args.episodes,
        batch_size=args.batch_size,
        learning_rate=args.learning_rate,
        entropy_coef=args.entropy,
        seed=args.seed,
    )
    selected = entries if args.game is None else [entries[args.game]]
    for entry in selected:
        mg = _rebuild_minigame(payload, entry)
        player = _make_player(args.player, questions)
        if args.resume:
            params = load_checkpoint(args.resume)
        else:
            params = init_policy(_policy_config(questions), seed=args.seed)
        writer = TranscriptWriter(out / f"{mg.id}.train.jsonl")
        params, trace = train(mg, params, player, cfg, transcript=writer)
        writer.close()
        save_checkpoint(params, out / f"{mg.id}.ckpt.npz")
        trace_rows = [
            {
                "episode": t.episode,
                "mean_reward": t.mean_reward,
                "consistency": t.consistency,
                "drop": t.drop,
                "invalid_rate": t.invalid_rate,
            }
            for t in trace
        ]
        (out / f"{mg.id}.trace.json").write_text(json.dumps(trace_rows, indent=1))
        print(
            f"{mg.id}: trained {cfg.episodes} episodes, "
            f"final drop {trace[-1].drop:.3f}, reward {trace[-1].mean_reward:.3f}"
        )
    return 0


def cmd_play(args) -> int:
    payload, entries = _load_minigames(args.minigames)
    _, questions = _load_corpus(payload["scenes"], payload["questions"])
    out = Path(args.out_dir)
    _write_manifest(out, args)
    for entry in entries if args.game is None else [entries[args.game]]:
        mg = _rebuild_minigame(payload, entry)
        player = _make_player(args.player, questions)
        params = load_checkpoint(args.checkpoint)
        writer = TranscriptWriter(out / f"{mg.id}.play.jsonl")
        records = evaluate(
            mg, params, player, rounds_per_item=args.rounds, seed=args.seed,
            transcript=writer,
        )
        writer.close()
        m = consistency_and_drop(records)
        print(
            f"{mg.id}: consistency {m.consistency:.3f}, drop {m.drop:.3f}, "
            f"accuracy {m.accuracy_before:.3f} -> {m.accuracy_after:.3f}"
        )
    return 0


def cmd_rsg(args) -> int:
    payload, entries = _load_minigames(args.minigames)
    _, questions = _load_corpus(payload["scenes"], payload["questions"])
    out = Path(args.out_dir)
    _write_manifest(out, args)
    selected = entries if args.game is None else [entries[args.game]]

    def run(entry):
        mg = _rebuild_minigame(payload, entry)
        player = _make_player(args.player, questions)
        records, summaries = random_search(
            mg, player, budget=args.budget, seed=args.seed
        )
        return mg, records, summaries

    with ThreadPoolExecutor(max_workers=max(args.jobs, 1)) as pool:
        results = list(pool.map(run, selected))
    for mg, records, summaries in results:
        writer = TranscriptWriter(out / f"{mg.id}.rsg.jsonl")
        for rec in records:
            writer.write(mg.id, -1, rec)
        writer.close()
        succ = sum(s.success for s in summaries)
        (out / f"{mg.id}.rsg.json").write_text(
            json.dumps(
                [
                    {
                        "item_index": s.item_index,
                        "success": s.success,
                        "queries_used": s.queries_used,
                        "displacement": s.displacement,
                    }
                    for s in summaries
                ],
                indent=1,
            )
        )
        print(f"{mg.id}: random search fooled {succ}/{len(summaries)} items")
    return 0


def cmd_exhaustive(args) -> int:
    scenes, questions = _load_corpus(args.scenes, args.questions)
    out = Path(args.out_dir)
    _write_manifest(out, args)
    q = questions[args.question]
    item = make_item(scenes[q.image_index], q)
    player = _make_player(args.player, questions)
    result = exhaustive_search(item, player, movable=args.movable)
    (out / f"exhaustive-{args.question}.json").write_text(
        json.dumps(
            {
                "question_index": args.question,
                "movable": args.movable,
                "fooling_count": len(result.fooling),
                "total_enumerated": result.total_enumerated,
                "total_valid": result.total_valid,
                "rarity": result.rarity,
                "complete": result.complete,
                "fooling": [list(map(list, filter(None, f))) for f in result.fooling[:1000]],
            },
            indent=1,
        )
    )
    print(
        f"question {args.question}: {len(result.fooling)} fooling configs "
        f"of {result.total_valid} valid ({result.rarity:.6f} rarity)"
    )
    return 0


def cmd_report(args) -> int:
    transcript_dir = Path(args.transcripts)
    paths = sorted(transcript_dir.glob("*.jsonl")) if transcript_dir.is_dir() else []
    if not paths:
        _fail("no-transcripts", [f"no transcript files under {transcript_dir}"], ERR_IO)
    out = Path(args.out_dir)
    _write_manifest(out, args)
    rows = []
    per_file = {}
    for path in paths:
        records = load_transcript(path)
        if not records:
            continue
        m = consistency_and_drop(records)
        rows.append(metrics_to_row(path.stem, m))
        per_file[path.stem] = m
    if not rows:
        _fail("no-transcripts", ["all transcript files were empty"], ERR_IO)
    agg = aggregate(list(per_file.values()))
    text = write_report_csv(rows, out / "report.csv")
    write_report_json(
        {
            "files": {k: metrics_to_row(k, v) for k, v in per_file.items()},
            "aggregate": {
                "trials": agg.trials,
                "average_accuracy_before": agg.average_accuracy_before,
                "average_accuracy_after": agg.average_accuracy_after,
                "maximal_accuracy_after": agg.maximal_accuracy_after,
                "average_consistency": agg.average_consistency,
                "average_drop": agg.average_drop,
                "relative_drop_average": agg.relative_drop_average,
                "relative_drop_maximal": agg.relative_drop_maximal,
                "p_value_drop": agg.p_value_drop,
            },
        },
        out / "report.json",
    )
    print(text)
    return 0


def cmd_render(args) -> int:
    out = Path(args.out_dir)
    _write_manifest(out, args)
    if args.scene is not None:
        scenes = load_scenes(args.scenes)
        svg = render_topdown(scenes[args.scene])
        path = out / f"scene-{args.scene}.svg"
    else:
        trace = json.loads(Path(args.trace).read_text())
        series = [
            Series(
                label=key,
                xs=tuple(float(r["episode"]) for r in trace),
                ys=tuple(float(r[key]) for r in trace),
            )
            for key in ("mean_reward", "drop")
        ]
        svg = render_chart(series, kind="line")
        path = out / "trace.svg"
    path.write_text(svg)
    print(f"wrote {path}")
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scenegame",
        description="Adversarial scene-manipulation games against black-box "
        "visual question answering players.",
    )
    parser.add_argument(
        "--config",
        default=os.environ.get(CONFIG_ENV),
        help=f"JSON config file of flag defaults (env: {CONFIG_ENV})",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, **kwargs):
        p = sub.add_parser(name, **kwargs)
        p.set_defaults(func=fn)
        p.add_argument("--out-dir", default=f"runs/{name}", help="output directory")
        p.add_argument("--seed", type=int, default=0)
        return p

    p = add("gen-scenes", cmd_gen_scenes, help="generate a scene/question corpus")
    p.add_argument("--count", type=int, default=50)
    p.add_argument("--objects", type=int, default=None, help="fixed object count")
    p.add_argument("--per-scene", type=int, default=4, help="questions per scene")

    p = add("gen-grid", cmd_gen_grid, help="generate an exhaustive grid dataset")
    p.add_argument("--objects", type=int, default=2, choices=(2, 3, 4))
    p.add_argument("--family", default="Onehop", choices=gridlab.FAMILIES)
    p.add_argument("--split", type=float, default=50.0)
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--stationary", action="store_true")
    p.add_argument("--limit", type=int, default=0, help="stop after this many configs")

    p = add("minigame", cmd_minigame, help="assemble mutually exclusive mini-games")
    p.add_argument("--scenes", required=True)
    p.add_argument("--questions", required=True)
    p.add_argument("--size", type=int, default=10, help="items per mini-game")
    p.add_argument("--count", type=int, default=1, help="number of mini-games")

    p = add("train", cmd_train, help="train the adversary on mini-games")
    p.add_argument("--minigames", required=True)
    p.add_argument("--game", type=int, default=None, help="single mini-game index")
    p.add_argument("--player", default="oracle")
    p.add_argument("--episodes", type=int, default=400)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--learning-rate", type=float, default=1e-3)
    p.add_argument("--entropy", type=float, default=0.01)
    p.add_argument("--resume", default=None, help="checkpoint to continue from")

    p = add("play", cmd_play, help="evaluate a trained policy")
    p.add_argument("--minigames", required=True)
    p.add_argument("--game", type=int, default=None)
    p.add_argument("--player", default="oracle")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--rounds", type=int, default=1, help="rounds per item")

    p = add("rsg", cmd_rsg, help="random-search baseline")
    p.add_argument("--minigames", required=True)
    p.add_argument("--game", type=int, default=None)
    p.add_argument("--player", default="oracle")
    p.add_argument("--budget", type=int, default=5000, help="player queries per item")
    p.add_argument("--jobs", type=int, default=1, help="parallel mini-games")

    p = add("exhaustive", cmd_exhaustive, help="enumerate all displacements of an item")
    p.add_argument("--scenes", required=True)
    p.add_argument("--questions", required=True)
    p.add_argument("--question", type=int, required=True, help="question index")
    p.add_argument("--movable", type=int, nargs="+", required=True)
    p.add_argument("--player", default="oracle")

    p = add("report", cmd_report, help="aggregate transcripts into a report")
    p.add_argument("--transcripts", required=True, help="directory of .jsonl files")

    p = add("render", cmd_render, help="render a scene or training trace to SVG")
    p.add_argument("--scenes", default=None)
    p.add_argument("--scene", type=int, default=None, help="scene index to draw")
    p.add_argument("--trace", default=None, help="training trace JSON to chart")

    return parser


def _apply_config_file(parser: argparse.ArgumentParser, argv: list[str]) -> list[str]:
    """Pull --config out of argv and fold its values in as parser defaults
    (flag > file > built-in default)."""
    config_path = os.environ.get(CONFIG_ENV)
    rest = list(argv)
    if "--config" in rest:
        i = rest.index("--config")
        if i + 1 >= len(rest):
            _fail("bad-config", ["--config needs a path"], ERR_USAGE)
        config_path = rest[i + 1]
        del rest[i : i + 2]
    if config_path:
        if not Path(config_path).exists():
            _fail("bad-config", [f"config file not found: {config_path}"], ERR_IO)
        try:
            values = json.loads(Path(config_path).read_text())
        except json.JSONDecodeError as exc:
            _fail("bad-config", [f"config file is not valid JSON: {exc}"], ERR_CONFIG)
        problems = [
            f"config key {k!r} has non-scalar value" for k, v in values.items()
            if isinstance(v, (dict,))
        ]
        if problems:
            _fail("bad-config", problems, ERR_CONFIG)
        for action in parser._subparsers._group_actions[0].choices.values():  # type: ignore[union-attr]
            action.set_defaults(
                **{k.replace("-", "_"): v for k, v in values.items()
                   if any(k.replace("-", "_") == a.dest for a in action._actions)}
            )
    return rest


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _apply_config_file(parser, argv)
        args = parser.parse_args(argv)
        if args.command == "render" and args.scene is None and args.trace is None:
            _fail("bad-config", ["render needs --scene (with --scenes) or --trace"])
        if args.command == "render" and args.scene is not None and not args.scenes:
            _fail("bad-config", ["--scene requires --scenes"])
        return args.func(args)
    except CliError as exc:
        json.dump(
            {"error": exc.error_class, "problems": exc.problems}, sys.stderr
        )
        sys.stderr.write("\n")
        return exc.exit_code
    except (OSError, json.JSONDecodeError) as exc:
        json.dump({"error": "io-error", "problems": [str(exc)]}, sys.stderr)
        sys.stderr.write("\n")
        return ERR_IO


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
