"""Candidate goals, the Manhattan-distance-difference window, and model inputs.

The short-horizon signal for each candidate goal g is
``D(start, g) - D(end, g)`` over the last m move actions (Manhattan D):
positive means net approach. Frames pad candidates to K_MAX slots with an
activity mask so one fixed-width network serves every area.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .world import GREEN, YELLOW, WAITING, Cell, GridMap, K_MAX
from .areagraph import AreaGraph, snapshot_matrix

DEFAULT_M = 6

# Input scaling applied before the network (recorded in the model manifest):
# dmd by 1/m, victim counts by 0.1, visited status one-hot.
COUNT_SCALE = 0.1
N_STATUS = 4
LOWRES_PER_AREA = 2 + N_STATUS


class WindowError(ValueError):
    """Raised when an operation needs more moves than the window holds."""


def manhattan(a: Cell, b: Cell) -> int:
    return abs(a[0] - b[0]) + abs(a[1] - b[1])


class MoveWindow:
    """Ring buffer of the last m+1 agent cells bracketing the last m moves.

    Only move actions append (a blocked move re-appends the unchanged cell);
    triage actions leave the window alone. The window may span area
    transitions.
    """

    def __init__(self, m: int = DEFAULT_M, start: Cell | None = None):
        if m < 1:
            raise ValueError(f"window size must be >= 1, got {m}")
        self.m = m
        self._cells: deque[Cell] = deque(maxlen=m + 1)
        if start is not None:
            self._cells.append(tuple(start))

    def push(self, cell: Cell) -> None:
        self._cells.append(tuple(cell))

    @property
    def full(self) -> bool:
        return len(self._cells) == self.m + 1

    @property
    def fill(self) -> int:
        """Number of moves currently held (at most m)."""
        return max(0, len(self._cells) - 1)

    @property
    def initial(self) -> Cell:
        self._require_full()
        return self._cells[0]

    @property
    def final(self) -> Cell:
        self._require_full()
        return self._cells[-1]

    def destinations(self) -> list[Cell]:
        """Destination cells of the last m moves, oldest first."""
        self._require_full()
        return list(self._cells)[1:]

    def _require_full(self):
        if not self.full:
            raise WindowError(f"window holds {max(0, len(self._cells) - 1)} moves, needs {self.m}")


@dataclass(frozen=True)
class GoalCandidate:
    slot: int
    kind: str  # portal | victim
    ref_id: int
    cell: Cell


def delta_md(window: MoveWindow, goal: GoalCandidate) -> int:
    """Net Manhattan approach toward the goal over the window; range [-m, m]."""
    return manhattan(window.initial, goal.cell) - manhattan(window.final, goal.cell)


def enumerate_goals(gmap: GridMap, area_id: int, victim_status: Mapping[int, str]) -> list[GoalCandidate]:
    """Candidate goals of an area: its portals, then its waiting victims.

    Slot order is canonical and stable within a visit: portals by ascending
    portal id, then victims by row-major cell order. Triaged/expired victims
    are excluded.
    """
    candidates = []
    for portal in sorted(gmap.portals_of_area(area_id), key=lambda p: p.id):
        candidates.append(GoalCandidate(len(candidates), "portal", portal.id, portal.cell))
    waiting = [v for v in gmap.victims_in_area(area_id) if victim_status[v.id] == WAITING]
    for victim in sorted(waiting, key=lambda v: v.cell):
        candidates.append(GoalCandidate(len(candidates), "victim", victim.id, victim.cell))
    if len(candidates) > K_MAX:
        raise ValueError(f"area {area_id} has {len(candidates)} candidates; limit {K_MAX}")
    return candidates


@dataclass
class FeatureFrame:
    """One training/inference sample.

    dmd: K_MAX vector of delta_md/m, zero in padded slots.
    mask: K_MAX 0/1 vector of active slots.
    lowres: |areas| * 6 vector, per area (yellow*0.1, green*0.1, status one-hot).
    locations: 2m vector of the window's move destinations scaled by map size
    (the input of the locations-only variant).
    Labels are unset until ground-truth resolution.
    """

    dmd: np.ndarray
    mask: np.ndarray
    lowres: np.ndarray
    locations: np.ndarray
    t: float
    area_id: int
    trial_id: str = ""
    goal_label: int | None = None
    victim_label: int | None = None  # yellow=1 green=0
    candidates: tuple[GoalCandidate, ...] = field(default=(), repr=False)

    def n_active(self) -> int:
        return int(self.mask.sum())

    def to_json(self) -> str:
        # Floats serialize via repr and round-trip exactly.
        return json.dumps({
            "dmd": self.dmd.tolist(),
            "mask": self.mask.astype(int).tolist(),
            "lowres": self.lowres.tolist(),
            "locations": self.locations.tolist(),
            "t": self.t,
            "area_id": self.area_id,
            "trial_id": self.trial_id,
            "goal_label": self.goal_label,
            "victim_label": self.victim_label,
        }, sort_keys=True)

    @staticmethod
    def from_json(line: str) -> "FeatureFrame":
        rec = json.loads(line)
        return FeatureFrame(
            dmd=np.asarray(rec["dmd"], dtype=np.float64),
            mask=np.asarray(rec["mask"], dtype=np.int8),
            lowres=np.asarray(rec["lowres"], dtype=np.float64),
            locations=np.asarray(rec["locations"], dtype=np.float64),
            t=rec["t"],
            area_id=rec["area_id"],
            trial_id=rec.get("trial_id", ""),
            goal_label=rec["goal_label"],
            victim_label=rec["victim_label"],
        )


def lowres_vector(graph: AreaGraph) -> np.ndarray:
    """Flatten the memory matrix into the network's low-resolution input."""
    matrix = snapshot_matrix(graph)
    out = np.zeros(matrix.shape[0] * LOWRES_PER_AREA, dtype=np.float64)
    for i, (yellow, green, status) in enumerate(matrix):
        base = i * LOWRES_PER_AREA
        out[base] = yellow * COUNT_SCALE
        out[base + 1] = green * COUNT_SCALE
        out[base + 2 + int(status)] = 1.0
    return out


def build_frame(gmap: GridMap, graph: AreaGraph, window: MoveWindow, area_id: int,
                victim_status: Mapping[int, str], t: float = 0.0,
                trial_id: str = "") -> FeatureFrame:
    """Assemble the padded model inputs for the agent's current area."""
    candidates = enumerate_goals(gmap, area_id, victim_status)
    dmd = np.zeros(K_MAX, dtype=np.float64)
    mask = np.zeros(K_MAX, dtype=np.int8)
    for cand in candidates:
        dmd[cand.slot] = delta_md(window, cand) / window.m
        mask[cand.slot] = 1
    return FeatureFrame(
        dmd=dmd,
        mask=mask,
        lowres=lowres_vector(graph),
        locations=build_baseline_locations(window, gmap.height, gmap.width),
        t=t,
        area_id=area_id,
        trial_id=trial_id,
        candidates=tuple(candidates),
    )


def build_baseline_locations(window: MoveWindow, height: int, width: int) -> np.ndarray:
    """Destination (row, col) of the last m moves, scaled by the map size."""
    out = np.empty(2 * window.m, dtype=np.float64)
    for i, (r, c) in enumerate(window.destinations()):
        out[2 * i] = r / height
        out[2 * i + 1] = c / width
    return out


def build_baseline_dmd_area(frame: FeatureFrame, area_order: Sequence[int]) -> np.ndarray:
    """dmd vector plus one scalar encoding the current area's canonical index."""
    idx = list(area_order).index(frame.area_id)
    return np.concatenate([frame.dmd, [idx / len(area_order)]])
