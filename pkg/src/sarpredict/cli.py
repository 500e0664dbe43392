"""Command-line pipeline: corpus generation through live serving.

Every command accepts --seed and --config. A config file is flat TOML
key/value (optionally with per-command sections); explicit flags win over
the file, which wins over built-in defaults. The last stdout line of a
successful command is `RESULT\t<path>` naming its primary output; logs go
to stderr. Exit codes: 0 ok, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

try:
    import tomllib  # Python >= 3.11
except ModuleNotFoundError:
    import tomli as tomllib

from . import bundled_map_names, bundled_map_path
from .world import SimConfig, load_map, read_log, replay


def log(msg: str) -> None:
    print(msg, file=sys.stderr)


def result(path) -> None:
    print(f"RESULT\t{path}")


def write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def resolve_map_source(ref: str) -> tuple[str, str]:
    """A map reference is a bundled name or a file path; returns (tag, path)."""
    if ref in bundled_map_names():
        return ref, str(bundled_map_path(ref))
    path = Path(ref)
    if not path.exists():
        raise FileNotFoundError(f"map {ref!r}: not a bundled map name or an existing file")
    return path.stem, str(path)


def parse_mix(text: str) -> dict[str, float]:
    mix = {}
    for part in text.split(","):
        name, _, value = part.partition("=")
        mix[name.strip()] = float(value)
    return mix


# -- option plumbing ----------------------------------------------------------------

def load_config(path: str | None) -> dict:
    if not path:
        return {}
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def resolve(args: argparse.Namespace, config: dict, command: str, defaults: dict) -> argparse.Namespace:
    """Fill unset options from the config file, then from defaults."""
    section = config.get(command, {}) if isinstance(config.get(command), dict) else {}
    for key, default in defaults.items():
        if getattr(args, key, None) is None:
            if key in section:
                setattr(args, key, section[key])
            elif key in config and not isinstance(config[key], dict):
                setattr(args, key, config[key])
            else:
                setattr(args, key, default)
    return args


# -- commands -------------------------------------------------------------------------

def cmd_gen_corpus(args, config) -> int:
    from .agents import generate_corpus

    defaults = {"n": 66, "noise": 0.1, "mix": "", "maps": ["easy"], "seed": 0, "out": "corpus"}
    args = resolve(args, config, "gen-corpus", defaults)
    map_paths = dict(resolve_map_source(ref) for ref in args.maps)
    mix = parse_mix(args.mix) if args.mix else None
    log(f"generating {args.n} trials on {sorted(map_paths)} (noise={args.noise}, seed={args.seed})")
    generate_corpus(map_paths, args.out, n_trials=int(args.n), mix=mix,
                    noise_eps=float(args.noise), seed=int(args.seed))
    result(args.out)
    return 0


def cmd_label(args, config) -> int:
    from .datapipe import label_corpus, load_corpus, write_frames

    defaults = {"m": 6, "out": None, "difficulty": None, "seed": 0}
    args = resolve(args, config, "label", defaults)
    corpus = load_corpus(args.corpus)
    frames_by_trial = label_corpus(corpus, m=int(args.m), difficulty=args.difficulty)
    frames = [f for tid in sorted(frames_by_trial) for f in frames_by_trial[tid]]
    out = Path(args.out or (Path(args.corpus) / f"frames_m{args.m}.ndjson"))
    write_frames(frames, out)
    log(f"labeled {len(frames_by_trial)} trials -> {len(frames)} frames")
    result(out)
    return 0


def _corpus_difficulty(corpus, requested: str | None) -> str:
    tags = corpus.difficulties()
    if requested:
        if requested not in tags:
            raise ValueError(f"difficulty {requested!r} not in corpus {tags}")
        return requested
    if len(tags) != 1:
        raise ValueError(f"corpus has difficulties {tags}; pick one with --difficulty")
    return tags[0]


def cmd_train(args, config) -> int:
    from . import neural
    from .datapipe import label_corpus, load_corpus
    from .neural import TrainConfig, frames_to_dataset, save_model, write_history_csv

    defaults = {"variant": "multires", "m": 6, "epochs": 100, "difficulty": None,
                "seed": 0, "out": "model.bin", "history": None, "depth": 1}
    args = resolve(args, config, "train", defaults)
    corpus = load_corpus(args.corpus)
    difficulty = _corpus_difficulty(corpus, args.difficulty)
    gmap = corpus.maps[difficulty]
    frames_by_trial = label_corpus(corpus, m=int(args.m), difficulty=difficulty)
    frames = [f for tid in sorted(frames_by_trial) for f in frames_by_trial[tid]]
    manifest = neural.new_manifest_for(args.variant, n_areas=len(gmap.areas),
                                       area_order=gmap.area_ids(), m=int(args.m),
                                       seed=int(args.seed), map_id=gmap.map_id,
                                       depth=int(args.depth))
    data = frames_to_dataset(frames, args.variant, gmap.area_ids())
    log(f"training {args.variant} on {len(frames)} frames ({args.epochs} epochs)")
    params, history = neural.train(data, manifest,
                                   TrainConfig(epochs=int(args.epochs), seed=int(args.seed)))
    save_model(params, args.out)
    if args.history:
        write_history_csv(history, args.history)
        log(f"history -> {args.history}")
    log(f"final epoch: {history[-1]}")
    result(args.out)
    return 0


def cmd_eval(args, config) -> int:
    from .datapipe import evaluate, label_corpus, load_corpus
    from .neural import load_model

    defaults = {"difficulty": None, "out": None, "seed": 0}
    args = resolve(args, config, "eval", defaults)
    params = load_model(args.model)
    corpus = load_corpus(args.corpus)
    difficulty = _corpus_difficulty(corpus, args.difficulty)
    frames_by_trial = label_corpus(corpus, m=params.manifest["m"], difficulty=difficulty)
    frames = [f for tid in sorted(frames_by_trial) for f in frames_by_trial[tid]]
    acc = evaluate(params, frames)
    report = {"model": str(args.model), "difficulty": difficulty,
              "goal_acc": acc.goal, "vic_acc": acc.victim,
              "n_goal": acc.goal_total, "n_vic": acc.vic_total}
    out = Path(args.out or (Path(args.model).with_suffix(".eval.json")))
    write_text(out, json.dumps(report, indent=1, sort_keys=True) + "\n")
    log(f"goal_acc={acc.goal:.4f} vic_acc={acc.victim:.4f}")
    result(out)
    return 0


def cmd_xval(args, config) -> int:
    from .datapipe import ExperimentConfig, format_report, load_corpus, run_experiment, write_report_csv
    from .neural import TrainConfig

    defaults = {"variants": "all", "m": "6", "epochs": 30, "folds": 6, "seed": 0, "out": None}
    args = resolve(args, config, "xval", defaults)
    corpus = load_corpus(args.corpus)
    variants = ("locations", "dmd_area", "multires") if args.variants == "all" \
        else tuple(v.strip() for v in str(args.variants).split(","))
    m_values = tuple(int(x) for x in str(args.m).split(","))
    cfg = ExperimentConfig(variants=variants, m_values=m_values, k_folds=int(args.folds),
                           seed=int(args.seed), epochs=int(args.epochs),
                           train=TrainConfig(seed=int(args.seed)))
    log(f"cross-validating {variants} at m={m_values} ({args.epochs} epochs, {args.folds} folds)")
    rows = run_experiment(corpus, cfg)
    out = Path(args.out or (Path(args.corpus) / "xval_report.csv"))
    write_report_csv(rows, out)
    log("\n" + format_report(rows))
    result(out)
    return 0


def cmd_replay(args, config) -> int:
    defaults = {"out": None, "seed": 0}
    args = resolve(args, config, "replay", defaults)
    _, map_path = resolve_map_source(args.map)
    gmap = load_map(map_path)
    events = read_log(args.log)
    sim = replay(events, gmap)
    summary = {
        "log": str(args.log), "map": gmap.map_id, "t": sim.t, "score": sim.score,
        "agent": list(sim.agent), "victims": sim.status_counts(),
    }
    out = Path(args.out or (Path(args.log).with_suffix(".replay.json")))
    write_text(out, json.dumps(summary, indent=1, sort_keys=True) + "\n")
    log(f"replayed {len(events)} records: score={sim.score} t={sim.t}")
    result(out)
    return 0


def cmd_predict(args, config) -> int:
    from .datapipe import stream_predictions
    from .neural import load_model

    defaults = {"map": None, "out": None, "seed": 0}
    args = resolve(args, config, "predict", defaults)
    params = load_model(args.model)
    map_ref = args.map or params.manifest.get("map_id")
    if not map_ref:
        raise ValueError("model manifest names no map; pass --map")
    _, map_path = resolve_map_source(map_ref)
    gmap = load_map(map_path)
    events = read_log(args.log)
    out = Path(args.out or (Path(args.log).with_suffix(".predictions.csv")))
    k_max = params.manifest["k_max"]
    header = "t," + ",".join(f"p{i}" for i in range(k_max)) + ",p_yellow"
    lines = [header]
    for rec in stream_predictions(events, gmap, params):
        if rec["goal_probs"] is None:
            continue
        lines.append(f"{rec['t']!r}," + ",".join(repr(p) for p in rec["goal_probs"])
                     + f",{rec['p_yellow']!r}")
    write_text(out, "\n".join(lines) + "\n")
    for line in lines:
        print(line)
    result(out)
    return 0


def cmd_serve(args, config) -> int:
    import uvicorn

    from .server import create_app

    defaults = {"host": "127.0.0.1", "port": 8000, "maps_dir": None, "models_dir": None,
                "session_dir": "sessions", "seed": 0}
    args = resolve(args, config, "serve", defaults)
    app = create_app(maps_dir=args.maps_dir, models_dir=args.models_dir,
                     session_dir=args.session_dir)
    result(f"http://{args.host}:{args.port}/")
    uvicorn.run(app, host=args.host, port=int(args.port), log_level="warning")
    return 0


# -- parser ------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sarpredict",
        description="Gridworld search-and-rescue: simulate, train, predict, serve.")
    sub = parser.add_subparsers(dest="command")

    def common(p):
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--config", default=None, help="TOML config file mirroring the flags")

    p = sub.add_parser("gen-corpus", help="generate a synthetic scripted-agent corpus")
    p.add_argument("--map", dest="maps", action="append",
                   help="bundled map name or path (repeatable)")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--noise", type=float, default=None)
    p.add_argument("--mix", default=None, help="e.g. yellow_first=0.4,sweeper=0.6")
    p.add_argument("--out", default=None)
    common(p)

    p = sub.add_parser("label", help="replay a corpus into labeled feature frames")
    p.add_argument("--corpus", required=True)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--difficulty", default=None)
    p.add_argument("--out", default=None)
    common(p)

    p = sub.add_parser("train", help="train one model variant on a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--variant", choices=["multires", "dmd_area", "locations"], default=None)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--depth", type=int, default=None)
    p.add_argument("--difficulty", default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--history", default=None, help="write per-epoch loss CSV here")
    common(p)

    p = sub.add_parser("eval", help="evaluate a trained model on a corpus")
    p.add_argument("--model", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--difficulty", default=None)
    p.add_argument("--out", default=None)
    common(p)

    p = sub.add_parser("xval", help="cross-validated variant/m grid (the comparison tables)")
    p.add_argument("--corpus", required=True)
    p.add_argument("--variants", default=None, help="'all' or comma list")
    p.add_argument("--m", default=None, help="comma list of window sizes")
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--folds", type=int, default=None)
    p.add_argument("--out", default=None)
    common(p)

    p = sub.add_parser("replay", help="deterministically re-run a trajectory log")
    p.add_argument("--log", required=True)
    p.add_argument("--map", required=True)
    p.add_argument("--out", default=None)
    common(p)

    p = sub.add_parser("predict", help="stream per-action predictions for a recorded log")
    p.add_argument("--log", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--map", default=None)
    p.add_argument("--out", default=None)
    common(p)

    p = sub.add_parser("serve", help="serve live play + prediction over HTTP/WebSocket")
    p.add_argument("--host", default=None)
    p.add_argument("--port", type=int, default=None)
    p.add_argument("--maps-dir", dest="maps_dir", default=None)
    p.add_argument("--models-dir", dest="models_dir", default=None)
    p.add_argument("--session-dir", dest="session_dir", default=None)
    common(p)

    return parser


COMMANDS = {
    "gen-corpus": cmd_gen_corpus,
    "label": cmd_label,
    "train": cmd_train,
    "eval": cmd_eval,
    "xval": cmd_xval,
    "replay": cmd_replay,
    "predict": cmd_predict,
    "serve": cmd_serve,
}


def dispatch(argv: list[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    if not args.command:
        parser.print_usage(sys.stderr)
        return 2
    try:
        config = load_config(args.config)
        return COMMANDS[args.command](args, config)
    except (OSError, ValueError, KeyError) as exc:
        log(f"error: {exc}")
        return 1


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
