from collections import deque

import numpy as np
import pytest

from sarpredict import world
from sarpredict.agents import (PathError, PolicyConfig, ScriptedPolicy, bfs_distances,
                               dfs_area_order, generate_corpus, run_trial, shortest_path,
                               _policy_schedule)
from sarpredict.world import MissionSim, load_map, replay

from conftest import doc_variant


def corridor_map():
    # 3 x 8 corridor: one row of floor.
    walls = [[0, c] for c in range(8)] + [[2, c] for c in range(8)] + [[1, 0], [1, 7]]
    return load_map({
        "map_id": "corridor", "height": 3, "width": 8,
        "walls": walls, "obstacles": [], "victims": [],
        "areas": [{"id": 0, "name": "hall", "rects": [[1, 1, 1, 6]]}],
        "portals": [], "spawn": [1, 1],
    })


def test_shortest_path_straight_corridor():
    gmap = corridor_map()
    path = shortest_path(gmap, (1, 1), (1, 6))
    assert path == [(1, c) for c in range(1, 7)]
    assert len(path) == 6  # corridor length 5 -> 6 cells


def test_shortest_path_same_cell():
    gmap = corridor_map()
    assert shortest_path(gmap, (1, 3), (1, 3)) == [(1, 3)]


def test_shortest_path_unreachable():
    doc = doc_variant(portals=[], victims=[])
    doc["walls"].append([3, 5])  # close the doorway
    gmap = load_map(doc)
    with pytest.raises(PathError, match="no path"):
        shortest_path(gmap, (3, 2), (3, 8))


def test_shortest_path_tie_break_prefers_direction_order():
    gmap = load_map({
        "map_id": "open", "height": 4, "width": 4,
        "walls": [], "obstacles": [], "victims": [],
        "areas": [{"id": 0, "name": "all", "rects": [[0, 0, 3, 3]]}],
        "portals": [], "spawn": [1, 1],
    })
    # (1,1) -> (2,2): down-then-right beats right-then-down (down explored first).
    assert shortest_path(gmap, (1, 1), (2, 2)) == [(1, 1), (2, 1), (2, 2)]


def test_shortest_path_matches_flood_fill_on_maze(maze_map):
    # Independent oracle: plain flood fill, no parents, no tie-breaking.
    def flood(frm):
        dist = {frm: 0}
        queue = deque([frm])
        while queue:
            cell = queue.popleft()
            for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1)):
                nxt = (cell[0] + dr, cell[1] + dc)
                if nxt not in dist and maze_map.is_walkable_base(nxt):
                    dist[nxt] = dist[cell] + 1
                    queue.append(nxt)
        return dist

    oracle = flood((1, 1))
    for target, d in oracle.items():
        path = shortest_path(maze_map, (1, 1), target)
        assert len(path) == d + 1
        for a, b in zip(path, path[1:]):  # pairwise-adjacent and walkable
            assert abs(a[0] - b[0]) + abs(a[1] - b[1]) == 1
            assert maze_map.is_walkable_base(b)
    assert bfs_distances(maze_map, (1, 1)) == oracle


def yellow_green_map():
    """Corridor with a green 2 cells right of spawn, a yellow 10 cells right."""
    walls = [[0, c] for c in range(14)] + [[2, c] for c in range(14)] + [[1, 0], [1, 13]]
    return load_map({
        "map_id": "line", "height": 3, "width": 14,
        "walls": walls, "obstacles": [],
        "victims": [
            {"id": 0, "row": 1, "col": 3, "color": "green"},
            {"id": 1, "row": 1, "col": 11, "color": "yellow"},
        ],
        "areas": [{"id": 0, "name": "hall", "rects": [[1, 1, 1, 12]]}],
        "portals": [], "spawn": [1, 1],
    })


def test_yellow_first_walks_past_near_green():
    gmap = yellow_green_map()
    sim = MissionSim(gmap)
    policy = ScriptedPolicy(gmap, PolicyConfig("yellow_first", 0.0, 0))
    for _ in range(10):
        act = policy.next_action(sim)
        assert act == ("move", "right")  # straight to the yellow, no green stop
        sim.step_move(act[1])
    assert sim.agent == (1, 11) == gmap.victims[1].cell
    assert policy.next_action(sim) == ("triage", None)


def test_yellow_first_switches_to_greens_after_expiry():
    gmap = yellow_green_map()
    sim = MissionSim(gmap)
    sim.t = 301.0
    sim.victim_status[1] = world.EXPIRED
    policy = ScriptedPolicy(gmap, PolicyConfig("yellow_first", 0.0, 0))
    act = policy.next_action(sim)
    assert act == ("move", "right")
    sim.step_move("right")
    assert policy.next_action(sim) == ("move", "right")
    sim.step_move("right")
    assert sim.agent == (1, 3)
    assert policy.next_action(sim) == ("triage", None)  # the green


def test_opportunistic_goes_to_nearest_any_color():
    gmap = yellow_green_map()
    sim = MissionSim(gmap)
    policy = ScriptedPolicy(gmap, PolicyConfig("opportunistic", 0.0, 0))
    sim.step_move(policy.next_action(sim)[1])
    sim.step_move(policy.next_action(sim)[1])
    assert sim.agent == (1, 3)
    assert policy.next_action(sim) == ("triage", None)


def test_dfs_area_order_fixed_and_complete(easy_map):
    order = dfs_area_order(easy_map)
    assert order[0] == easy_map.area_of(easy_map.spawn)
    assert sorted(order) == easy_map.area_ids()
    assert order == dfs_area_order(easy_map)


def test_sweeper_clears_first_area_before_moving_on(easy_map):
    policy = ScriptedPolicy(easy_map, PolicyConfig("sweeper", 0.0, 7))
    events = run_trial(easy_map, policy)
    order = dfs_area_order(easy_map)
    first_room = order[1]  # spawn hallway has no victims
    room_victims = {v.id for v in easy_map.victims_in_area(first_room)}
    started = [e.payload["victim"] for e in events if e.kind == "triage_start"]
    assert set(started[: len(room_victims)]) == room_victims


def test_noiseless_same_seed_reproduces_trajectory(easy_map):
    def run(seed):
        policy = ScriptedPolicy(easy_map, PolicyConfig("yellow_first", 0.0, seed))
        return "\n".join(e.to_json() for e in run_trial(easy_map, policy))

    assert run(3) == run(3)


def test_noisy_same_seed_reproduces_trajectory(easy_map):
    def run():
        policy = ScriptedPolicy(easy_map, PolicyConfig("opportunistic", 0.2, 11))
        return "\n".join(e.to_json() for e in run_trial(easy_map, policy))

    assert run() == run()


def test_yellow_first_separability_on_easy_map(easy_map):
    policy = ScriptedPolicy(easy_map, PolicyConfig("yellow_first", 0.1, 5))
    events = run_trial(easy_map, policy)
    colors = [e.payload["color"] for e in events if e.kind == "triage_start"]
    first_green = colors.index("green")
    assert colors[:first_green].count("yellow") == 10


def test_policy_schedule_counts_and_determinism():
    sched = _policy_schedule({"yellow_first": 1 / 3, "opportunistic": 1 / 3, "sweeper": 1 / 3}, 66)
    assert len(sched) == 66
    assert sched.count("yellow_first") == sched.count("opportunistic") == sched.count("sweeper") == 22
    assert _policy_schedule({"yellow_first": 1.0}, 5) == ["yellow_first"] * 5


def test_policy_config_validation():
    with pytest.raises(ValueError, match="noise_eps"):
        PolicyConfig("sweeper", 0.5, 0)
    with pytest.raises(ValueError, match="unknown policy"):
        PolicyConfig("psychic", 0.1, 0)


def test_generate_corpus_replayable_and_tagged(tmp_path):
    from sarpredict import bundled_map_path
    manifest = generate_corpus({"easy": str(bundled_map_path("easy"))}, tmp_path / "c",
                               n_trials=6, mix={"yellow_first": 1.0}, noise_eps=0.0, seed=1)
    assert len(manifest["trials"]) == 6
    assert all(t["policy"] == "yellow_first" for t in manifest["trials"])
    from sarpredict.datapipe import load_corpus
    corpus = load_corpus(tmp_path / "c")
    for trial in corpus.trials:
        events = corpus.events(trial)
        assert events[0].kind == "meta"
        assert events[0].payload["policy"] == "yellow_first"
        replay(events, corpus.map_for(trial))  # no divergence


def test_generate_corpus_minimum_size(tmp_path):
    from sarpredict import bundled_map_path
    with pytest.raises(ValueError, match="at least 6"):
        generate_corpus({"easy": str(bundled_map_path("easy"))}, tmp_path / "c", n_trials=3)
