import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sarpredict import world
from sarpredict.areagraph import init_graph, fold_events
from sarpredict.features import (DEFAULT_M, GoalCandidate, K_MAX, MoveWindow, WindowError,
                                 build_baseline_dmd_area, build_baseline_locations,
                                 build_frame, delta_md, enumerate_goals, lowres_vector,
                                 manhattan)


def window_from(path, m=None):
    w = MoveWindow(m or (len(path) - 1), start=path[0])
    for cell in path[1:]:
        w.push(cell)
    return w


# -- delta_md ----------------------------------------------------------------

def test_closed_loop_gives_zero():
    path = [(5, 5), (5, 6), (4, 6), (4, 5), (3, 5), (4, 5), (5, 5)]
    goal = GoalCandidate(0, "victim", 0, (0, 0))
    assert delta_md(window_from(path), goal) == 0


def test_straight_approach_counts_moves():
    path = [(0, c) for c in range(7)]  # 6 moves right
    goal = GoalCandidate(0, "victim", 0, (0, 10))
    assert delta_md(window_from(path), goal) == 10 - 4 == 6


def test_hand_traced_wandering_path():
    path = [(5, 5), (5, 4), (4, 4), (4, 3), (4, 4), (3, 4), (3, 3)]
    goal = GoalCandidate(0, "portal", 0, (0, 0))
    assert manhattan(path[0], (0, 0)) == 10
    assert manhattan(path[-1], (0, 0)) == 6
    assert delta_md(window_from(path), goal) == 4


def test_underfilled_window_rejected():
    w = MoveWindow(6, start=(0, 0))
    w.push((0, 1))
    with pytest.raises(WindowError, match="needs 6"):
        delta_md(w, GoalCandidate(0, "victim", 0, (3, 3)))


@settings(max_examples=200, deadline=None)
@given(st.lists(st.sampled_from(["up", "down", "left", "right"]), min_size=6, max_size=6),
       st.tuples(st.integers(0, 50), st.integers(0, 50)),
       st.tuples(st.integers(0, 50), st.integers(0, 50)))
def test_delta_md_bounded_and_translation_invariant(dirs, start, goal_cell):
    cells = [start]
    for d in dirs:
        dr, dc = world.DIR_DELTA[d]
        cells.append((cells[-1][0] + dr, cells[-1][1] + dc))
    goal = GoalCandidate(0, "victim", 0, goal_cell)
    value = delta_md(window_from(cells), goal)
    assert -6 <= value <= 6
    shifted = [(r + 13, c + 7) for r, c in cells]
    sgoal = GoalCandidate(0, "victim", 0, (goal_cell[0] + 13, goal_cell[1] + 7))
    assert delta_md(window_from(shifted), sgoal) == value


def test_incremental_window_matches_bruteforce_recomputation(mini_map):
    rng = np.random.default_rng(11)
    sim = world.MissionSim(mini_map)
    window = MoveWindow(DEFAULT_M, start=sim.agent)
    positions = [sim.agent]
    goal = GoalCandidate(0, "victim", 0, (1, 1))
    for _ in range(200):
        sim.step_move(str(rng.choice(world.DIRECTIONS)))
        window.push(sim.agent)
        positions.append(sim.agent)
        if window.full:
            brute = manhattan(positions[-7], goal.cell) - manhattan(positions[-1], goal.cell)
            assert delta_md(window, goal) == brute


# -- goal enumeration ----------------------------------------------------------

def test_enumerate_goals_portals_then_victims(mini_map):
    sim = world.MissionSim(mini_map)
    cands = enumerate_goals(mini_map, 0, sim.victim_status)
    assert [(c.kind, c.ref_id) for c in cands] == [("portal", 0), ("victim", 0), ("victim", 1)]
    assert [c.slot for c in cands] == [0, 1, 2]
    # victims in row-major order of their cells
    assert cands[1].cell == (1, 1) and cands[2].cell == (5, 3)


def test_enumerate_goals_excludes_unavailable(mini_map):
    sim = world.MissionSim(mini_map)
    sim.agent = (1, 1)
    sim.step_triage()
    cands = enumerate_goals(mini_map, 0, sim.victim_status)
    assert [(c.kind, c.ref_id) for c in cands] == [("portal", 0), ("victim", 1)]
    sim.t = 299.9
    sim.step_move("down")
    cands = enumerate_goals(mini_map, 0, sim.victim_status)  # no yellows left anyway
    assert all(c.kind == "portal" or sim.victim_status[c.ref_id] == world.WAITING for c in cands)


def test_area_with_single_portal_only(mini_map):
    sim = world.MissionSim(mini_map)
    for vid in (0, 1):  # clear left-room victims
        sim.agent = sim.victim(vid).cell
        sim.step_triage()
    cands = enumerate_goals(mini_map, 0, sim.victim_status)
    assert len(cands) == 1 and cands[0].kind == "portal"


# -- frames --------------------------------------------------------------------

def test_build_frame_normalization_and_padding(mini_map):
    sim = world.MissionSim(mini_map)
    graph = init_graph(mini_map)
    window = MoveWindow(DEFAULT_M, start=sim.agent)
    for d in ["right", "right", "left", "left", "right", "right"]:
        sim.step_move(d)
        window.push(sim.agent)
    frame = build_frame(mini_map, graph, window, 0, sim.victim_status, t=sim.t)
    assert frame.dmd.shape == (K_MAX,)
    assert frame.mask.sum() == 3
    cands = enumerate_goals(mini_map, 0, sim.victim_status)
    for cand in cands:
        assert frame.dmd[cand.slot] == delta_md(window, cand) / 6
        assert -1.0 <= frame.dmd[cand.slot] <= 1.0
    assert np.all(frame.dmd[3:] == 0.0)
    assert np.all(frame.mask[3:] == 0)


def test_lowres_slice_counts_scaled_and_status_one_hot():
    from sarpredict.areagraph import AreaGraph, AreaNode
    graph = AreaGraph((AreaNode(0, 1, 0, 0), AreaNode(1, 0, 2, 2)), frozenset())
    vec = lowres_vector(graph)
    assert vec.shape == (12,)
    assert vec[:6].tolist() == [0.1, 0.0, 1, 0, 0, 0]
    assert vec[6:].tolist() == [0.0, 0.2, 0, 0, 1, 0]


def test_frame_json_round_trip(mini_map):
    sim = world.MissionSim(mini_map)
    graph = init_graph(mini_map)
    window = MoveWindow(2, start=sim.agent)
    sim.step_move("right"); window.push(sim.agent)
    sim.step_move("right"); window.push(sim.agent)
    frame = build_frame(mini_map, graph, window, 0, sim.victim_status, t=sim.t, trial_id="t0")
    frame.goal_label = 1
    frame.victim_label = 0
    from sarpredict.features import FeatureFrame
    back = FeatureFrame.from_json(frame.to_json())
    assert np.array_equal(back.dmd, frame.dmd)
    assert np.array_equal(back.mask, frame.mask)
    assert np.array_equal(back.lowres, frame.lowres)
    assert np.array_equal(back.locations, frame.locations)
    assert (back.goal_label, back.victim_label, back.t, back.area_id, back.trial_id) == \
           (1, 0, frame.t, 0, "t0")


# -- baseline encodings ----------------------------------------------------------

def test_baseline_locations_straight_walk():
    path = [(3, c) for c in range(2, 9)]
    vec = build_baseline_locations(window_from(path), 10, 20)
    assert vec.shape == (12,)
    assert vec.tolist() == [x for c in range(3, 9) for x in (3 / 10, c / 20)]


def test_baseline_locations_stationary_bumping():
    path = [(1, 1)] * 7  # six blocked moves re-append the same cell
    vec = build_baseline_locations(window_from(path), 7, 11)
    assert vec.tolist() == [1 / 7, 1 / 11] * 6


def test_baseline_dmd_area_appends_scalar(mini_map):
    frame_dmd = np.zeros(K_MAX)
    from sarpredict.features import FeatureFrame
    frame = FeatureFrame(dmd=frame_dmd, mask=np.zeros(K_MAX, dtype=np.int8),
                         lowres=np.zeros(12), locations=np.zeros(12), t=0.0, area_id=3)
    vec = build_baseline_dmd_area(frame, list(range(12)))
    assert vec.shape == (K_MAX + 1,)
    assert vec[-1] == 0.25
    frame.area_id = 0
    assert build_baseline_dmd_area(frame, list(range(12)))[-1] == 0.0
