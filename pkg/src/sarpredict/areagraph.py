"""Low-resolution area graph and its historical memory matrix.

Each area node carries (yellow count, green count, visited status). Visited
status: 0 never visited, 1 visited, 2 current area, 3 previous area; when two
apply the higher value wins, so returning to a known room shows 2 again.
Counts drop only on triage; expiry leaves them untouched (they track
presence, not viability).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .world import GREEN, GridMap, YELLOW

UNVISITED = 0
VISITED = 1
CURRENT = 2
PREVIOUS = 3


class GraphError(ValueError):
    """Raised when an update contradicts the simulator's event stream."""


@dataclass(frozen=True)
class AreaNode:
    area_id: int
    yellow: int
    green: int
    status: int


@dataclass(frozen=True)
class AreaGraph:
    nodes: tuple[AreaNode, ...]  # canonical order: ascending area id
    edges: frozenset[frozenset]  # unordered area-id pairs, one per portal connection

    def node(self, area_id: int) -> AreaNode:
        for n in self.nodes:
            if n.area_id == area_id:
                return n
        raise GraphError(f"unknown area {area_id}")

    def adjacent(self, a: int, b: int) -> bool:
        return frozenset((a, b)) in self.edges

    def current_area(self) -> int:
        for n in self.nodes:
            if n.status == CURRENT:
                return n.area_id
        raise GraphError("no current area")


def init_graph(gmap: GridMap) -> AreaGraph:
    """Build the mission-start graph: per-area census, spawn area current."""
    spawn_area = gmap.area_of(gmap.spawn)
    nodes = []
    for area in gmap.areas:
        victims = gmap.victims_in_area(area.id)
        nodes.append(AreaNode(
            area_id=area.id,
            yellow=sum(1 for v in victims if v.color == YELLOW),
            green=sum(1 for v in victims if v.color == GREEN),
            status=CURRENT if area.id == spawn_area else UNVISITED,
        ))
    edges = frozenset(frozenset(p.areas) for p in gmap.portals)
    return AreaGraph(tuple(nodes), edges)


def on_area_enter(graph: AreaGraph, from_area: int, to_area: int) -> AreaGraph:
    """Apply an area transition: to->current, from->previous, old previous->visited."""
    if from_area == to_area:
        raise GraphError(f"degenerate transition {from_area}->{to_area}")
    if not graph.adjacent(from_area, to_area):
        raise GraphError(f"areas {from_area} and {to_area} are not connected")
    if graph.node(from_area).status != CURRENT:
        raise GraphError(f"transition out of {from_area}, which is not the current area")
    nodes = []
    for n in graph.nodes:
        if n.area_id == to_area:
            nodes.append(replace(n, status=CURRENT))
        elif n.area_id == from_area:
            nodes.append(replace(n, status=PREVIOUS))
        elif n.status in (PREVIOUS, CURRENT):
            nodes.append(replace(n, status=VISITED))
        else:
            nodes.append(n)
    return AreaGraph(tuple(nodes), graph.edges)


def on_triage_complete(graph: AreaGraph, area_id: int, color: str) -> AreaGraph:
    """One victim of the given color in the area was triaged; decrement it."""
    node = graph.node(area_id)
    count = node.yellow if color == YELLOW else node.green
    if count < 1:
        raise GraphError(f"area {area_id} has no {color} victims left to decrement")
    nodes = tuple(
        replace(n, **{("yellow" if color == YELLOW else "green"): count - 1})
        if n.area_id == area_id else n
        for n in graph.nodes
    )
    return AreaGraph(nodes, graph.edges)


def snapshot_matrix(graph: AreaGraph) -> np.ndarray:
    """|areas| x 3 matrix, row i = (yellow, green, status) in canonical order."""
    return np.array([[n.yellow, n.green, n.status] for n in graph.nodes], dtype=np.int64)


def fold_events(graph: AreaGraph, events) -> AreaGraph:
    """Fold a trajectory log's graph-relevant events into an updated graph."""
    for ev in events:
        if ev.kind == "area_enter":
            graph = on_area_enter(graph, ev.payload["from_area"], ev.payload["to_area"])
        elif ev.kind == "triage_complete":
            graph = on_triage_complete(graph, ev.payload["area"], ev.payload["color"])
    return graph
