"""High-resolution gridworld mission simulator.

The world is an integer-coded grid: walls and obstacles are static, victims
flip to "unavailable" once triaged or expired, and the agent occupies exactly
one cell. A mission runs on a real-valued clock with a hard 10-minute limit;
critically injured (yellow) victims expire at the 5-minute mark.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

# Grid cell encodings.
AGENT = 0
EMPTY = 1
WALL = 4
VICTIM_YELLOW = 81
VICTIM_GREEN = 82
VICTIM_UNAVAILABLE = 83
OBSTACLE = 255

CELL_CODES = frozenset({AGENT, EMPTY, WALL, VICTIM_YELLOW, VICTIM_GREEN, VICTIM_UNAVAILABLE, OBSTACLE})

YELLOW = "yellow"
GREEN = "green"

WAITING = "waiting"
TRIAGED = "triaged"
EXPIRED = "expired"

# Move directions in canonical order (also the BFS tie-break order).
DIRECTIONS = ("up", "down", "left", "right")
DIR_DELTA = {"up": (-1, 0), "down": (1, 0), "left": (0, -1), "right": (0, 1)}

# Candidate-goal cap per area (portals + victims), enforced at load.
K_MAX = 16

Cell = tuple[int, int]


class MapError(ValueError):
    """Raised when a map document violates the format or its invariants."""


class SimError(ValueError):
    """Raised when an action violates mission rules."""


class ReplayDivergence(ValueError):
    """Raised when a trajectory log is inconsistent with the map it replays on."""

    def __init__(self, index: int, message: str):
        super().__init__(f"event {index}: {message}")
        self.index = index


@dataclass(frozen=True)
class Victim:
    id: int
    cell: Cell
    color: str  # yellow | green


@dataclass(frozen=True)
class Area:
    id: int
    name: str
    cells: frozenset[Cell]


@dataclass(frozen=True)
class Portal:
    id: int
    cell: Cell
    areas: tuple[int, int]


@dataclass(frozen=True)
class SimConfig:
    """Mission timing/scoring knobs; defaults follow the domain rules."""

    move_duration: float = 0.25
    triage_yellow: float = 15.0
    triage_green: float = 7.5
    points_yellow: int = 30
    points_green: int = 10
    time_limit: float = 600.0
    expiry_time: float = 300.0


@dataclass(frozen=True)
class GridMap:
    """Static mission map: geometry, victims, areas, portals, spawn."""

    map_id: str
    height: int
    width: int
    base: tuple[tuple[int, ...], ...]  # EMPTY/WALL/OBSTACLE only
    victims: tuple[Victim, ...]
    areas: tuple[Area, ...]  # canonical order: ascending area id
    portals: tuple[Portal, ...]
    spawn: Cell
    area_by_cell: Mapping[Cell, int] = field(repr=False, default_factory=dict)

    def in_bounds(self, cell: Cell) -> bool:
        r, c = cell
        return 0 <= r < self.height and 0 <= c < self.width

    def base_at(self, cell: Cell) -> int:
        return self.base[cell[0]][cell[1]]

    def is_walkable_base(self, cell: Cell) -> bool:
        return self.in_bounds(cell) and self.base_at(cell) == EMPTY

    def area_of(self, cell: Cell) -> int | None:
        return self.area_by_cell.get(cell)

    def area_ids(self) -> list[int]:
        return [a.id for a in self.areas]

    def victims_in_area(self, area_id: int) -> list[Victim]:
        return [v for v in self.victims if self.area_of(v.cell) == area_id]

    def portals_of_area(self, area_id: int) -> list[Portal]:
        return [p for p in self.portals if area_id in p.areas]

    def census(self) -> tuple[int, int]:
        """(yellow, green) counts over all victims."""
        y = sum(1 for v in self.victims if v.color == YELLOW)
        return y, len(self.victims) - y


@dataclass(frozen=True)
class SimEvent:
    kind: str  # move | triage_start | triage_complete | area_enter | expiry
    t: float
    payload: dict

    def to_json(self) -> str:
        return json.dumps({"kind": self.kind, "t": self.t, "payload": self.payload}, sort_keys=True)

    @staticmethod
    def from_json(line: str) -> "SimEvent":
        rec = json.loads(line)
        return SimEvent(rec["kind"], rec["t"], rec["payload"])


def _parse_cell(obj, where: str) -> Cell:
    if (not isinstance(obj, (list, tuple))) or len(obj) != 2 or not all(isinstance(x, int) for x in obj):
        raise MapError(f"{where}: expected [row, col], got {obj!r}")
    return (obj[0], obj[1])


def load_map(source) -> GridMap:
    """Load and validate a map document (path, JSON text, or parsed dict)."""
    if isinstance(source, (str, Path)) and not (isinstance(source, str) and source.lstrip().startswith("{")):
        path = Path(source)
        doc = json.loads(path.read_text(encoding="utf-8"))
        map_id = path.stem
    elif isinstance(source, str):
        doc = json.loads(source)
        map_id = doc.get("map_id", "inline")
    else:
        doc = source
        map_id = doc.get("map_id", "inline")

    for key in ("height", "width", "walls", "obstacles", "victims", "areas", "portals", "spawn"):
        if key not in doc:
            raise MapError(f"missing key {key!r}")
    height, width = doc["height"], doc["width"]
    if not (isinstance(height, int) and isinstance(width, int) and height > 0 and width > 0):
        raise MapError(f"bad dimensions {height!r}x{width!r}")

    base = [[EMPTY] * width for _ in range(height)]

    def put(cell: Cell, code: int, where: str):
        r, c = cell
        if not (0 <= r < height and 0 <= c < width):
            raise MapError(f"{where}: cell {cell} out of bounds")
        base[r][c] = code

    for i, w in enumerate(doc["walls"]):
        put(_parse_cell(w, f"walls[{i}]"), WALL, f"walls[{i}]")
    for i, o in enumerate(doc["obstacles"]):
        put(_parse_cell(o, f"obstacles[{i}]"), OBSTACLE, f"obstacles[{i}]")

    # Areas: non-overlapping cell sets, declared as explicit cells and/or rects.
    area_by_cell: dict[Cell, int] = {}
    areas = []
    seen_area_ids = set()
    for i, a in enumerate(doc["areas"]):
        where = f"areas[{i}]"
        if "id" not in a:
            raise MapError(f"{where}: missing id")
        aid = a["id"]
        if aid in seen_area_ids:
            raise MapError(f"{where}: duplicate area id {aid}")
        seen_area_ids.add(aid)
        cells: set[Cell] = set()
        for j, cl in enumerate(a.get("cells", [])):
            cells.add(_parse_cell(cl, f"{where}.cells[{j}]"))
        for j, rect in enumerate(a.get("rects", [])):
            if len(rect) != 4:
                raise MapError(f"{where}.rects[{j}]: expected [r0,c0,r1,c1]")
            r0, c0, r1, c1 = rect
            cells.update((r, c) for r in range(r0, r1 + 1) for c in range(c0, c1 + 1))
        if not cells:
            raise MapError(f"{where}: area {aid} has no cells")
        for cell in cells:
            if not (0 <= cell[0] < height and 0 <= cell[1] < width):
                raise MapError(f"{where}: cell {cell} out of bounds")
            if cell in area_by_cell:
                raise MapError(f"{where}: cell {cell} already belongs to area {area_by_cell[cell]}")
            area_by_cell[cell] = aid
        areas.append(Area(aid, a.get("name", f"area-{aid}"), frozenset(cells)))
    areas.sort(key=lambda a: a.id)

    victims = []
    seen_vids = set()
    seen_vcells = set()
    for i, v in enumerate(doc["victims"]):
        where = f"victims[{i}]"
        try:
            vid, row, col, color = v["id"], v["row"], v["col"], v["color"]
        except (KeyError, TypeError) as exc:
            raise MapError(f"{where}: malformed victim record ({exc})") from None
        if color not in (YELLOW, GREEN):
            raise MapError(f"{where}: unknown color {color!r}")
        if vid in seen_vids:
            raise MapError(f"{where}: duplicate victim id {vid}")
        cell = (row, col)
        if cell in seen_vcells:
            raise MapError(f"{where}: second victim on cell {cell}")
        if not (0 <= row < height and 0 <= col < width) or base[row][col] != EMPTY:
            raise MapError(f"{where}: victim at {cell} is not on a walkable cell")
        if cell not in area_by_cell:
            raise MapError(f"{where}: victim at {cell} lies outside every area")
        seen_vids.add(vid)
        seen_vcells.add(cell)
        victims.append(Victim(vid, cell, color))

    portals = []
    seen_pids = set()
    for i, p in enumerate(doc["portals"]):
        where = f"portals[{i}]"
        try:
            pid, row, col, pair = p["id"], p["row"], p["col"], p["areas"]
        except (KeyError, TypeError) as exc:
            raise MapError(f"{where}: malformed portal record ({exc})") from None
        if pid in seen_pids:
            raise MapError(f"{where}: duplicate portal id {pid}")
        seen_pids.add(pid)
        if len(pair) != 2 or pair[0] == pair[1]:
            raise MapError(f"{where}: portal must join two distinct areas")
        if not all(a in seen_area_ids for a in pair):
            raise MapError(f"{where}: unknown area in {pair}")
        cell = (row, col)
        if not (0 <= row < height and 0 <= col < width) or base[row][col] != EMPTY:
            raise MapError(f"{where}: portal cell {cell} is not walkable")
        # Boundary check: the portal cell must touch both areas it joins
        # (own-area membership or a 4-neighbour in the area).
        touching = set()
        own = area_by_cell.get(cell)
        if own is not None:
            touching.add(own)
        for dr, dc in DIR_DELTA.values():
            n = area_by_cell.get((row + dr, col + dc))
            if n is not None:
                touching.add(n)
        if not set(pair) <= touching:
            raise MapError(f"{where}: portal at {cell} is not on the {pair[0]}/{pair[1]} boundary")
        portals.append(Portal(pid, cell, (pair[0], pair[1])))
    portals.sort(key=lambda p: p.id)

    spawn = _parse_cell(doc["spawn"], "spawn")
    if not (0 <= spawn[0] < height and 0 <= spawn[1] < width) or base[spawn[0]][spawn[1]] != EMPTY:
        raise MapError(f"spawn {spawn} is not walkable")
    if spawn not in area_by_cell:
        raise MapError(f"spawn {spawn} lies outside every area")

    gmap = GridMap(
        map_id=map_id,
        height=height,
        width=width,
        base=tuple(tuple(row) for row in base),
        victims=tuple(victims),
        areas=tuple(areas),
        portals=tuple(portals),
        spawn=spawn,
        area_by_cell=area_by_cell,
    )

    for area in gmap.areas:
        n_goals = len(gmap.portals_of_area(area.id)) + len(gmap.victims_in_area(area.id))
        if n_goals > K_MAX:
            raise MapError(f"area {area.id} ({area.name}) has {n_goals} candidate goals; limit {K_MAX}")
    return gmap


class MissionSim:
    """Mutable mission state driven by a single action stream.

    Distinct simulations are independent; snapshots handed out (cells(),
    victim_status copies) are fresh objects.
    """

    def __init__(self, gmap: GridMap, config: SimConfig = SimConfig()):
        self.map = gmap
        self.config = config
        self.t = 0.0
        self.score = 0
        self.agent = gmap.spawn
        self.victim_status: dict[int, str] = {v.id: WAITING for v in gmap.victims}
        self.current_area = gmap.area_of(gmap.spawn)
        self._victim_by_cell = {v.cell: v for v in gmap.victims}
        self._victim_by_id = {v.id: v for v in gmap.victims}

    # -- inspection -------------------------------------------------------

    @property
    def mission_over(self) -> bool:
        return self.t >= self.config.time_limit

    def victim_at(self, cell: Cell) -> Victim | None:
        return self._victim_by_cell.get(cell)

    def victim(self, vid: int) -> Victim:
        return self._victim_by_id[vid]

    def is_walkable(self, cell: Cell) -> bool:
        # Walls/obstacles block; empty and victim cells walk.
        return self.map.is_walkable_base(cell)

    def cells(self) -> list[list[int]]:
        """Render the full integer grid from static map + statuses + agent."""
        grid = [list(row) for row in self.map.base]
        for v in self.map.victims:
            status = self.victim_status[v.id]
            if status == WAITING:
                grid[v.cell[0]][v.cell[1]] = VICTIM_YELLOW if v.color == YELLOW else VICTIM_GREEN
            else:
                grid[v.cell[0]][v.cell[1]] = VICTIM_UNAVAILABLE
        grid[self.agent[0]][self.agent[1]] = AGENT
        return grid

    def status_counts(self) -> dict[str, int]:
        counts = {WAITING: 0, TRIAGED: 0, EXPIRED: 0}
        for s in self.victim_status.values():
            counts[s] += 1
        return counts

    # -- actions ----------------------------------------------------------

    def _advance_clock(self, duration: float) -> list[SimEvent]:
        """Advance time; emit expiry events when crossing the 5-minute mark."""
        t_pre = self.t
        self.t = t_pre + duration
        events = []
        if t_pre < self.config.expiry_time <= self.t:
            for v in self.map.victims:
                if v.color == YELLOW and self.victim_status[v.id] == WAITING:
                    self.victim_status[v.id] = EXPIRED
                    events.append(SimEvent("expiry", self.config.expiry_time,
                                           {"victim": v.id, "cell": list(v.cell)}))
        return events

    def step_move(self, direction: str) -> list[SimEvent]:
        if direction not in DIR_DELTA:
            raise SimError(f"unknown direction {direction!r}")
        if self.mission_over:
            raise SimError("mission over: no actions accepted")
        dr, dc = DIR_DELTA[direction]
        target = (self.agent[0] + dr, self.agent[1] + dc)
        blocked = not self.is_walkable(target)
        src = self.agent
        if not blocked:
            self.agent = target
        # A wall bump is still an elapsed decision: the clock advances either way.
        expiries = self._advance_clock(self.config.move_duration)
        events = expiries + [SimEvent("move", self.t, {
            "dir": direction, "from": list(src), "to": list(self.agent), "blocked": blocked,
        })]
        if not blocked:
            dest_area = self.map.area_of(self.agent)
            if dest_area is not None and dest_area != self.current_area:
                # Any A->B transition passes through a portal cell; identify it
                # by the cell stepped from (doorway) or stepped onto.
                portal = self._portal_for_transition(self.current_area, dest_area, src, self.agent)
                events.append(SimEvent("area_enter", self.t, {
                    "from_area": self.current_area, "to_area": dest_area,
                    "portal": portal.id if portal else None,
                }))
                self.current_area = dest_area
        return events

    def _portal_for_transition(self, from_area, to_area, src: Cell, dst: Cell) -> Portal | None:
        joining = [p for p in self.map.portals if set(p.areas) == {from_area, to_area}]
        for p in joining:
            if p.cell == src or p.cell == dst:
                return p
        return joining[0] if joining else None

    def step_triage(self) -> list[SimEvent]:
        if self.mission_over:
            raise SimError("mission over: no actions accepted")
        victim = self.victim_at(self.agent)
        if victim is None:
            raise SimError(f"no victim at agent cell {self.agent}")
        status = self.victim_status[victim.id]
        if status == EXPIRED:
            raise SimError(f"victim {victim.id} has expired")
        if status == TRIAGED:
            raise SimError(f"victim {victim.id} was already triaged")
        t_start = self.t
        duration = self.config.triage_yellow if victim.color == YELLOW else self.config.triage_green
        # Triage is atomic: commit the status up front so a yellow triage that
        # straddles the expiry mark is not expired out from under the agent.
        self.victim_status[victim.id] = TRIAGED
        self.score += self.config.points_yellow if victim.color == YELLOW else self.config.points_green
        area = self.map.area_of(victim.cell)
        start = SimEvent("triage_start", t_start, {
            "victim": victim.id, "color": victim.color, "cell": list(victim.cell), "area": area})
        expiries = self._advance_clock(duration)
        complete = SimEvent("triage_complete", self.t, {
            "victim": victim.id, "color": victim.color, "cell": list(victim.cell),
            "area": area, "score": self.score})
        return [start] + expiries + [complete]


def score_of(sim: MissionSim) -> int:
    """Score identity: 30 per triaged yellow, 10 per triaged green."""
    total = 0
    for v in sim.map.victims:
        if sim.victim_status[v.id] == TRIAGED:
            total += sim.config.points_yellow if v.color == YELLOW else sim.config.points_green
    return total


def actions_of(events: Iterable[SimEvent]):
    """Group an event stream into the primitive actions that produced it.

    Yields ("move", dir) and ("triage", None) in log order; consequence
    records (area_enter, expiry, meta) attach to the action that caused them.
    """
    for ev in events:
        if ev.kind == "move":
            yield ("move", ev.payload["dir"])
        elif ev.kind == "triage_start":
            yield ("triage", None)


def replay(events: list[SimEvent], gmap: GridMap, config: SimConfig = SimConfig()) -> MissionSim:
    """Re-run a trajectory log on its map, verifying every event matches."""
    sim = MissionSim(gmap, config)
    idx = 0

    def check(expected: list[SimEvent], base_idx: int):
        for k, ev in enumerate(expected):
            if base_idx + k >= len(events):
                raise ReplayDivergence(base_idx + k, "log ends before expected event")
            logged = events[base_idx + k]
            if (logged.kind, logged.t, logged.payload) != (ev.kind, ev.t, ev.payload):
                raise ReplayDivergence(base_idx + k, f"expected {ev.kind}@{ev.t} {ev.payload}, "
                                                     f"log has {logged.kind}@{logged.t} {logged.payload}")

    while idx < len(events):
        if events[idx].kind == "meta":
            idx += 1
            continue
        # An action slice may open with the expiry records it triggered
        # (moves log expiries first); find the driving record behind them.
        drv = idx
        while drv < len(events) and events[drv].kind == "expiry":
            drv += 1
        if drv >= len(events):
            raise ReplayDivergence(idx, "expiry records with no driving action")
        driver = events[drv]
        try:
            if driver.kind == "move":
                out = sim.step_move(driver.payload["dir"])
            elif driver.kind == "triage_start":
                if drv != idx:
                    raise ReplayDivergence(idx, "expiry records cannot precede triage_start")
                out = sim.step_triage()
            else:
                raise ReplayDivergence(drv, f"unexpected {driver.kind} record")
        except SimError as exc:
            raise ReplayDivergence(drv, str(exc)) from None
        check(out, idx)
        idx += len(out)
    return sim


def write_log(events: Iterable[SimEvent], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for ev in events:
            fh.write(ev.to_json() + "\n")


def read_log(path) -> list[SimEvent]:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(SimEvent.from_json(line))
    return out
