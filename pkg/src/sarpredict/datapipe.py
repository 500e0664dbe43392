"""Trajectory labeling, cross-validation folds, and evaluation reports.

Ground-truth goals are behavioral: a sample's goal label is the first of its
candidate goals the agent subsequently reaches, where reaching a victim means
starting its triage and reaching a portal means exiting the area through it.
The next-victim label is the color of the next triage completed anywhere.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import neural
from .areagraph import fold_events, init_graph
from .features import DEFAULT_M, FeatureFrame, MoveWindow, build_frame, enumerate_goals
from .neural import TrainConfig, frames_to_dataset
from .world import GridMap, MissionSim, SimConfig, SimEvent, YELLOW, load_map, read_log


@dataclass
class TrialRecord:
    trial_id: str
    map_id: str
    difficulty: str
    policy: str
    seed: int
    log: str


@dataclass
class Corpus:
    root: Path
    manifest: dict
    maps: dict[str, GridMap]          # difficulty tag -> map
    trials: list[TrialRecord]

    def events(self, trial: TrialRecord) -> list[SimEvent]:
        return read_log(self.root / trial.log)

    def map_for(self, trial: TrialRecord) -> GridMap:
        return self.maps[trial.difficulty]

    def difficulties(self) -> list[str]:
        return sorted(self.maps)


def load_corpus(root: str | Path) -> Corpus:
    root = Path(root)
    manifest = json.loads((root / "manifest.json").read_text(encoding="utf-8"))
    maps = {tag: load_map(str(root / rel)) for tag, rel in manifest["maps"].items()}
    trials = [TrialRecord(t["trial_id"], t["map_id"], t["difficulty"],
                          t.get("policy", "?"), t.get("seed", 0), t["log"])
              for t in manifest["trials"]]
    return Corpus(root, manifest, maps, trials)


# -- labeling -------------------------------------------------------------------

def label_trajectory(events: list[SimEvent], gmap: GridMap, m: int = DEFAULT_M,
                     trial_id: str = "", sim_config: SimConfig = SimConfig()) -> list[FeatureFrame]:
    """Replay a log and emit labeled feature frames.

    One frame per move action once the window holds m moves. Frames in areas
    with a single candidate carry no goal label; frames whose goal or victim
    future never resolves are dropped when both labels are missing.
    """
    sim = MissionSim(gmap, sim_config)
    graph = init_graph(gmap)
    window = MoveWindow(m, start=sim.agent)

    pending: list[tuple[int, FeatureFrame]] = []  # (action index, frame)
    reaches: list[tuple[int, str, int, int]] = []  # (action idx, kind, ref_id, area)
    completes: list[tuple[int, str]] = []          # (action idx, color)

    action_idx = 0
    i = 0
    while i < len(events):
        ev = events[i]
        if ev.kind == "meta":
            i += 1
            continue
        drv = i
        while drv < len(events) and events[drv].kind == "expiry":
            drv += 1
        driver = events[drv]
        if driver.kind == "move":
            out = sim.step_move(driver.payload["dir"])
        elif driver.kind == "triage_start":
            out = sim.step_triage()
        else:
            raise ValueError(f"unreplayable log: unexpected {driver.kind} at {drv}")
        graph = fold_events(graph, out)

        for ev2 in out:
            if ev2.kind == "area_enter":
                reaches.append((action_idx, "portal", ev2.payload["portal"], ev2.payload["from_area"]))
            elif ev2.kind == "triage_start":
                reaches.append((action_idx, "victim", ev2.payload["victim"], ev2.payload["area"]))
            elif ev2.kind == "triage_complete":
                completes.append((action_idx, ev2.payload["color"]))

        if driver.kind == "move":
            window.push(sim.agent)
            if window.full and sim.current_area is not None:
                frame = build_frame(gmap, graph, window, sim.current_area,
                                    sim.victim_status, t=sim.t, trial_id=trial_id)
                pending.append((action_idx, frame))
        action_idx += 1
        i += len(out)

    # Resolve labels against the future of each sample.
    frames: list[FeatureFrame] = []
    for idx, frame in pending:
        if frame.n_active() >= 2:
            frame.goal_label = _resolve_goal(idx, frame, reaches)
        frame.victim_label = _resolve_victim(idx, completes)
        if frame.goal_label is not None or frame.victim_label is not None:
            frames.append(frame)
    return frames


def _resolve_goal(idx: int, frame: FeatureFrame, reaches) -> int | None:
    by_ref = {(c.kind, c.ref_id): c.slot for c in frame.candidates}
    for at, kind, ref_id, area in reaches:
        if at <= idx or area != frame.area_id:
            continue
        slot = by_ref.get((kind, ref_id))
        if slot is None:
            raise ValueError(f"reached {kind} {ref_id} is not a candidate of area {frame.area_id}")
        return slot
    return None


def _resolve_victim(idx: int, completes) -> int | None:
    for at, color in completes:
        if at > idx:
            return 1 if color == YELLOW else 0
    return None


def label_corpus(corpus: Corpus, m: int = DEFAULT_M,
                 difficulty: str | None = None) -> dict[str, list[FeatureFrame]]:
    """Label every trial (optionally one difficulty); returns trial_id -> frames."""
    out = {}
    for trial in corpus.trials:
        if difficulty is not None and trial.difficulty != difficulty:
            continue
        frames = label_trajectory(corpus.events(trial), corpus.map_for(trial), m,
                                  trial_id=trial.trial_id)
        out[trial.trial_id] = frames
    return out


def write_frames(frames: list[FeatureFrame], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for frame in frames:
            fh.write(frame.to_json() + "\n")


def read_frames(path) -> list[FeatureFrame]:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                out.append(FeatureFrame.from_json(line))
    return out


# -- folds ------------------------------------------------------------------------

def make_folds(trial_ids: list[str], k: int = 6, seed: int = 0) -> list[list[str]]:
    """Seeded shuffle + round-robin: k disjoint trial sets, sizes within 1."""
    if len(trial_ids) < k:
        raise ValueError(f"{len(trial_ids)} trials cannot fill {k} folds")
    rng = np.random.default_rng(seed)
    order = sorted(trial_ids)
    rng.shuffle(order)
    folds = [order[i::k] for i in range(k)]
    return folds


def assert_fold_hygiene(folds: list[list[str]], all_ids: list[str]) -> None:
    seen = [tid for fold in folds for tid in fold]
    if len(seen) != len(set(seen)):
        raise AssertionError("folds overlap")
    if set(seen) != set(all_ids):
        raise AssertionError("folds do not cover the corpus")
    sizes = sorted(len(f) for f in folds)
    if sizes[-1] - sizes[0] > 1:
        raise AssertionError(f"fold sizes unbalanced: {sizes}")


# -- evaluation ----------------------------------------------------------------------

@dataclass
class Accuracy:
    goal_hits: int = 0
    goal_total: int = 0
    vic_hits: int = 0
    vic_total: int = 0

    @property
    def goal(self) -> float:
        return self.goal_hits / self.goal_total if self.goal_total else float("nan")

    @property
    def victim(self) -> float:
        return self.vic_hits / self.vic_total if self.vic_total else float("nan")

    def add(self, other: "Accuracy") -> None:
        self.goal_hits += other.goal_hits
        self.goal_total += other.goal_total
        self.vic_hits += other.vic_hits
        self.vic_total += other.vic_total


def evaluate(params: neural.ModelParams, frames: list[FeatureFrame],
             batch: int = 512) -> Accuracy:
    """Goal accuracy (argmax over active slots) and first-5-minute victim accuracy."""
    manifest = params.manifest
    data = frames_to_dataset(frames, manifest["variant"], manifest["area_order"])
    neural.check_dataset(params, data)
    acc = Accuracy()
    for start in range(0, len(data), batch):
        idx = np.arange(start, min(start + batch, len(data)))
        sub = data.take(idx)
        pred, _ = neural.forward(params, sub.hr, sub.lr, sub.mask, mode="infer")
        gsel = sub.goal_labels >= 0
        if gsel.any():
            picks = neural.decode_goal(pred.goal_probs, sub.mask)
            acc.goal_hits += int((picks[gsel] == sub.goal_labels[gsel]).sum())
            acc.goal_total += int(gsel.sum())
        vsel = (sub.victim_labels >= 0) & (sub.t < 300.0)
        if vsel.any():
            acc.vic_hits += int(((pred.p_yellow[vsel] > 0.5).astype(int)
                                 == sub.victim_labels[vsel]).sum())
            acc.vic_total += int(vsel.sum())
    return acc


# -- offline prediction streaming ---------------------------------------------------

def stream_predictions(events: list[SimEvent], gmap: GridMap, params: neural.ModelParams,
                       sim_config: SimConfig = SimConfig()):
    """Replay a log through a trained model, one record per primitive action.

    This is the offline twin of the live session loop: predictions appear
    exactly when the move window is full and the area offers at least two
    candidates, and are computed from the post-action state. Records carry
    goal_probs (full K-width list) or None while the window is filling.
    """
    manifest = params.manifest
    if manifest["n_areas"] != len(gmap.areas):
        raise ValueError(f"model expects {manifest['n_areas']} areas, map {gmap.map_id} "
                         f"has {len(gmap.areas)}")
    area_order = manifest["area_order"]
    m = manifest["m"]
    sim = MissionSim(gmap, sim_config)
    graph = init_graph(gmap)
    window = MoveWindow(m, start=sim.agent)

    i = 0
    while i < len(events):
        ev = events[i]
        if ev.kind == "meta":
            i += 1
            continue
        drv = i
        while drv < len(events) and events[drv].kind == "expiry":
            drv += 1
        driver = events[drv]
        if driver.kind == "move":
            out = sim.step_move(driver.payload["dir"])
            window.push(sim.agent)
        elif driver.kind == "triage_start":
            out = sim.step_triage()
        else:
            raise ValueError(f"unreplayable log: unexpected {driver.kind} at {drv}")
        graph = fold_events(graph, out)
        i += len(out)

        record = {
            "action": driver.payload["dir"] if driver.kind == "move" else "triage",
            "t": sim.t, "score": sim.score, "window_fill": window.fill,
            "goal_probs": None, "p_yellow": None, "candidates": None,
        }
        if window.full and sim.current_area is not None:
            candidates = enumerate_goals(gmap, sim.current_area, sim.victim_status)
            if len(candidates) >= 2:
                frame = build_frame(gmap, graph, window, sim.current_area,
                                    sim.victim_status, t=sim.t)
                data = frames_to_dataset([frame], manifest["variant"], area_order)
                pred, _ = neural.forward(params, data.hr, data.lr, data.mask, mode="infer")
                record["goal_probs"] = pred.goal_probs[0].tolist()
                record["p_yellow"] = float(pred.p_yellow[0])
                record["candidates"] = [
                    {"slot": c.slot, "kind": c.kind, "ref_id": c.ref_id,
                     "cell": list(c.cell), "prob": float(pred.goal_probs[0][c.slot])}
                    for c in candidates
                ]
        yield record


# -- cross-validated experiments --------------------------------------------------------

@dataclass
class ExperimentConfig:
    variants: tuple[str, ...] = ("locations", "dmd_area", "multires")
    m_values: tuple[int, ...] = (DEFAULT_M,)
    k_folds: int = 6
    seed: int = 0
    epochs: int = 30
    train: TrainConfig = field(default_factory=TrainConfig)


@dataclass
class ExperimentRow:
    variant: str
    m: int
    difficulty: str
    goal_acc: float
    vic_acc: float
    n_goal: int
    n_vic: int
    fold_goal: list[float]
    fold_vic: list[float]


def run_experiment(corpus: Corpus, config: ExperimentConfig) -> list[ExperimentRow]:
    """Train and cross-validate every (variant, m) cell, per difficulty."""
    rows = []
    for difficulty in corpus.difficulties():
        trials = [t for t in corpus.trials if t.difficulty == difficulty]
        if not trials:
            continue
        gmap = corpus.maps[difficulty]
        area_order = gmap.area_ids()
        ids = [t.trial_id for t in trials]
        folds = make_folds(ids, k=config.k_folds, seed=config.seed)
        assert_fold_hygiene(folds, ids)
        for m in config.m_values:
            frames_by_trial = label_corpus(corpus, m=m, difficulty=difficulty)
            for variant in config.variants:
                total = Accuracy()
                fold_goal, fold_vic = [], []
                for held_out in folds:
                    train_ids = [tid for tid in ids if tid not in held_out]
                    assert not set(train_ids) & set(held_out)
                    train_frames = [f for tid in train_ids for f in frames_by_trial[tid]]
                    test_frames = [f for tid in held_out for f in frames_by_trial[tid]]
                    manifest = neural.new_manifest_for(
                        variant, n_areas=len(area_order), area_order=area_order,
                        m=m, seed=config.train.seed, map_id=gmap.map_id)
                    tcfg = TrainConfig(**{**config.train.__dict__, "epochs": config.epochs})
                    data = frames_to_dataset(train_frames, variant, area_order)
                    params, _ = neural.train(data, manifest, tcfg)
                    acc = evaluate(params, test_frames)
                    total.add(acc)
                    fold_goal.append(acc.goal)
                    fold_vic.append(acc.victim)
                rows.append(ExperimentRow(
                    variant=variant, m=m, difficulty=difficulty,
                    goal_acc=total.goal, vic_acc=total.victim,
                    n_goal=total.goal_total, n_vic=total.vic_total,
                    fold_goal=fold_goal, fold_vic=fold_vic,
                ))
    return rows


def write_report_csv(rows: list[ExperimentRow], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["variant", "m", "difficulty", "goal_acc", "vic_acc",
                         "n_goal", "n_vic", "fold_goal", "fold_vic"])
        for r in rows:
            writer.writerow([r.variant, r.m, r.difficulty,
                             f"{r.goal_acc:.4f}", f"{r.vic_acc:.4f}", r.n_goal, r.n_vic,
                             "|".join(f"{x:.4f}" for x in r.fold_goal),
                             "|".join(f"{x:.4f}" for x in r.fold_vic)])


def format_report(rows: list[ExperimentRow]) -> str:
    """Fixed-width table, one row per (variant, m), difficulty columns paired."""
    difficulties = sorted({r.difficulty for r in rows})
    out = io.StringIO()
    header = f"{'variant':<12} {'m':>3}"
    for d in difficulties:
        header += f" {d + ' goal':>12} {d + ' vic':>12}"
    print(header, file=out)
    print("-" * len(header), file=out)
    keys = sorted({(r.variant, r.m) for r in rows}, key=lambda x: (x[1], x[0]))
    for variant, m in keys:
        line = f"{variant:<12} {m:>3}"
        for d in difficulties:
            cell = next((r for r in rows if r.variant == variant and r.m == m
                         and r.difficulty == d), None)
            if cell is None:
                line += f" {'-':>12} {'-':>12}"
            else:
                line += f" {cell.goal_acc:>12.4f} {cell.vic_acc:>12.4f}"
        print(line, file=out)
    return out.getvalue()
