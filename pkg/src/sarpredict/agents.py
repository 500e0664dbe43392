"""Scripted stochastic rescuers that stand in for human players.

Three long-term strategies generate distinguishable corpora: yellow_first
clears critical victims before any green, opportunistic always walks to the
nearest waiting victim, and sweeper clears areas in a fixed depth-first
order. Short-term noise substitutes a random open move with probability
noise_eps, leaving the long-horizon strategy intact.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .world import (DIRECTIONS, DIR_DELTA, GREEN, WAITING, YELLOW, Cell, GridMap,
                    MissionSim, SimConfig, SimEvent, write_log)

POLICY_KINDS = ("yellow_first", "opportunistic", "sweeper")


class PathError(ValueError):
    pass


def shortest_path(gmap: GridMap, frm: Cell, to: Cell) -> list[Cell]:
    """Breadth-first shortest path on the 4-connected walkable grid.

    Ties break deterministically by direction order (up, down, left, right).
    Returns the full cell sequence including both endpoints.
    """
    if not gmap.is_walkable_base(frm):
        raise PathError(f"start {frm} is not walkable")
    if not gmap.is_walkable_base(to):
        raise PathError(f"target {to} is not walkable")
    if frm == to:
        return [frm]
    parent: dict[Cell, Cell] = {frm: frm}
    queue = deque([frm])
    while queue:
        cell = queue.popleft()
        for d in DIRECTIONS:
            dr, dc = DIR_DELTA[d]
            nxt = (cell[0] + dr, cell[1] + dc)
            if nxt not in parent and gmap.is_walkable_base(nxt):
                parent[nxt] = cell
                if nxt == to:
                    path = [nxt]
                    while path[-1] != frm:
                        path.append(parent[path[-1]])
                    path.reverse()
                    return path
                queue.append(nxt)
    raise PathError(f"no path from {frm} to {to}")


def bfs_distances(gmap: GridMap, frm: Cell) -> dict[Cell, int]:
    """Walkable-grid distance map from one cell (flood fill)."""
    dist = {frm: 0}
    queue = deque([frm])
    while queue:
        cell = queue.popleft()
        for d in DIRECTIONS:
            dr, dc = DIR_DELTA[d]
            nxt = (cell[0] + dr, cell[1] + dc)
            if nxt not in dist and gmap.is_walkable_base(nxt):
                dist[nxt] = dist[cell] + 1
                queue.append(nxt)
    return dist


def dfs_area_order(gmap: GridMap) -> list[int]:
    """Fixed depth-first area order from the spawn area, neighbors ascending."""
    adjacency: dict[int, set[int]] = {a.id: set() for a in gmap.areas}
    for p in gmap.portals:
        a, b = p.areas
        adjacency[a].add(b)
        adjacency[b].add(a)
    start = gmap.area_of(gmap.spawn)
    order, seen = [], set()
    stack = [start]
    while stack:
        area = stack.pop()
        if area in seen:
            continue
        seen.add(area)
        order.append(area)
        for nb in sorted(adjacency[area], reverse=True):
            if nb not in seen:
                stack.append(nb)
    order += [a.id for a in gmap.areas if a.id not in seen]
    return order


@dataclass
class PolicyConfig:
    kind: str
    noise_eps: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise ValueError(f"unknown policy kind {self.kind!r}")
        if not (0.0 <= self.noise_eps < 0.5):
            raise ValueError(f"noise_eps must be in [0, 0.5), got {self.noise_eps}")


class ScriptedPolicy:
    """Plan-and-follow policy: pick a target victim, walk the BFS path."""

    def __init__(self, gmap: GridMap, config: PolicyConfig):
        self.map = gmap
        self.config = config
        self.rng = np.random.default_rng(config.seed)
        self.path: list[Cell] = []
        self.target_vid: int | None = None
        self.area_order = dfs_area_order(gmap) if config.kind == "sweeper" else []

    # -- target selection per strategy --------------------------------------

    def _waiting(self, sim: MissionSim) -> list:
        return [v for v in self.map.victims if sim.victim_status[v.id] == WAITING]

    def _pick_target(self, sim: MissionSim):
        """Nearest waiting victim from the first non-empty preference tier."""
        kind = self.config.kind
        waiting = self._waiting(sim)
        if not waiting:
            return None
        if kind == "yellow_first":
            yellows = [v for v in waiting if v.color == YELLOW]
            greens = [v for v in waiting if v.color == GREEN]
            tiers = [yellows, greens] if sim.t < sim.config.expiry_time else [greens]
        elif kind == "opportunistic":
            tiers = [waiting]
        else:  # sweeper: areas in the fixed depth-first order
            tiers = [[v for v in waiting if self.map.area_of(v.cell) == area]
                     for area in self.area_order]
        dist = bfs_distances(self.map, sim.agent)
        for pool in tiers:
            reachable = [v for v in pool if v.cell in dist]
            if reachable:
                return min(reachable, key=lambda v: (dist[v.cell], v.id))
        return None

    def _may_triage(self, sim: MissionSim) -> bool:
        victim = sim.victim_at(sim.agent)
        if victim is None or sim.victim_status[victim.id] != WAITING:
            return False
        if self.config.kind == "yellow_first":
            # Stay on strategy: no green detours while viable yellows remain.
            yellows_pending = any(
                v.color == YELLOW and sim.victim_status[v.id] == WAITING
                for v in self.map.victims
            ) and sim.t < sim.config.expiry_time
            return victim.color == YELLOW or not yellows_pending
        return True

    # -- stepping -------------------------------------------------------------

    def next_action(self, sim: MissionSim):
        """One decision: ("triage", None), ("move", dir), or None when done."""
        if self._may_triage(sim):
            self.path = []
            self.target_vid = None
            return ("triage", None)

        target_gone = (self.target_vid is None
                       or sim.victim_status[self.target_vid] != WAITING)
        off_path = not self.path or self.path[0] != sim.agent
        if target_gone or off_path:
            target = self._pick_target(sim)
            if target is None:
                return None
            self.target_vid = target.id
            self.path = shortest_path(self.map, sim.agent, target.cell)
        if len(self.path) < 2:
            # On the target cell but not allowed to triage it (strategy rule):
            # re-target next decision.
            self.target_vid = None
            self.path = []
            open_dirs = self._open_dirs(sim)
            return ("move", open_dirs[int(self.rng.integers(len(open_dirs)))])

        if self.config.noise_eps > 0 and self.rng.random() < self.config.noise_eps:
            open_dirs = self._open_dirs(sim)
            direction = open_dirs[int(self.rng.integers(len(open_dirs)))]
            self.path = []  # deviation: re-plan next step
            return ("move", direction)

        nxt = self.path[1]
        self.path = self.path[1:]
        delta = (nxt[0] - sim.agent[0], nxt[1] - sim.agent[1])
        for d, dd in DIR_DELTA.items():
            if dd == delta:
                return ("move", d)
        raise PathError(f"non-adjacent plan step {sim.agent} -> {nxt}")

    def _open_dirs(self, sim: MissionSim) -> list[str]:
        out = [d for d in DIRECTIONS
               if sim.is_walkable((sim.agent[0] + DIR_DELTA[d][0], sim.agent[1] + DIR_DELTA[d][1]))]
        return out or list(DIRECTIONS)


def run_trial(gmap: GridMap, policy: ScriptedPolicy,
              sim_config: SimConfig = SimConfig()) -> list[SimEvent]:
    """Run one mission to completion (victims exhausted or clock out)."""
    sim = MissionSim(gmap, sim_config)
    events: list[SimEvent] = []
    while not sim.mission_over:
        action = policy.next_action(sim)
        if action is None:
            break
        if action[0] == "triage":
            events += sim.step_triage()
        else:
            events += sim.step_move(action[1])
    return events


def _policy_schedule(mix: dict[str, float], n: int) -> list[str]:
    """Deterministic interleaved assignment of policy kinds by weight."""
    kinds = [k for k in POLICY_KINDS if mix.get(k, 0) > 0]
    if not kinds:
        raise ValueError("policy mix is empty")
    weights = np.array([mix[k] for k in kinds], dtype=float)
    weights /= weights.sum()
    counts = np.floor(weights * n).astype(int)
    # Distribute the remainder by largest fractional part, ties by kind order.
    fractions = weights * n - counts
    for i in np.argsort(-fractions, kind="stable")[: n - counts.sum()]:
        counts[i] += 1
    schedule = []
    remaining = counts.copy()
    while len(schedule) < n:
        for i, k in enumerate(kinds):
            if remaining[i] > 0:
                schedule.append(k)
                remaining[i] -= 1
    return schedule[:n]


def generate_corpus(map_paths: dict[str, str | Path], out_dir: str | Path, *,
                    n_trials: int, mix: dict[str, float] | None = None,
                    noise_eps: float = 0.1, seed: int = 0,
                    sim_config: SimConfig = SimConfig()) -> dict:
    """Generate n seeded trials across the given maps; returns the manifest.

    map_paths maps a difficulty tag to a map document path. Trials cycle
    through the maps; policy kinds follow the mix (default one-third each).
    """
    from .world import load_map

    if n_trials < 6:
        raise ValueError("need at least 6 trials (one per cross-validation fold)")
    mix = mix or {k: 1 / 3 for k in POLICY_KINDS}
    out = Path(out_dir)
    (out / "logs").mkdir(parents=True, exist_ok=True)
    (out / "maps").mkdir(exist_ok=True)

    maps = {}
    for tag, path in map_paths.items():
        gmap = load_map(str(path))
        maps[tag] = gmap
        (out / "maps" / f"{gmap.map_id}.map").write_text(
            Path(path).read_text(encoding="utf-8"), encoding="utf-8")

    schedule = _policy_schedule(mix, n_trials)
    seeds = np.random.SeedSequence(seed).spawn(n_trials)
    tags = sorted(maps)
    trials = []
    for i in range(n_trials):
        tag = tags[i % len(tags)]
        gmap = maps[tag]
        trial_seed = int(seeds[i].generate_state(1)[0])
        config = PolicyConfig(kind=schedule[i], noise_eps=noise_eps, seed=trial_seed)
        events = run_trial(gmap, ScriptedPolicy(gmap, config), sim_config)
        trial_id = f"trial_{i:03d}"
        meta = SimEvent("meta", 0.0, {
            "trial_id": trial_id, "map_id": gmap.map_id, "difficulty": tag,
            "policy": config.kind, "noise_eps": noise_eps, "seed": trial_seed,
        })
        log_rel = f"logs/{trial_id}.ndjson"
        write_log([meta] + events, out / log_rel)
        trials.append({
            "trial_id": trial_id, "map_id": gmap.map_id, "difficulty": tag,
            "policy": config.kind, "seed": trial_seed, "log": log_rel,
        })

    manifest = {
        "version": 1, "seed": seed, "noise_eps": noise_eps, "mix": mix,
        "maps": {tag: f"maps/{maps[tag].map_id}.map" for tag in tags},
        "trials": trials,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n",
                                       encoding="utf-8")
    return manifest
