"""Multi-resolution features, step by step.

Walks an agent around the easy map and prints the two inputs the predictor
sees: the per-candidate Manhattan-distance-difference table for the last six
moves (short-term heading) and the per-area memory matrix (long-term
history: yellow count, green count, visited status).

    python demos/02_features_walkthrough.py
"""

from sarpredict import bundled_map_path, world
from sarpredict.agents import PolicyConfig, ScriptedPolicy
from sarpredict.areagraph import fold_events, init_graph, snapshot_matrix
from sarpredict.features import MoveWindow, delta_md, enumerate_goals

STATUS = {0: "unvisited", 1: "visited", 2: "current", 3: "previous"}


def print_matrix(gmap, graph):
    print("  memory matrix (yellow, green, status):")
    for area, row in zip(gmap.areas, snapshot_matrix(graph)):
        print(f"    {area.name:<10} {row[0]:>2} {row[1]:>2}  {STATUS[row[2]]}")


def print_candidates(gmap, sim, window):
    cands = enumerate_goals(gmap, sim.current_area, sim.victim_status)
    print(f"  candidate goals in area {sim.current_area} "
          f"({next(a.name for a in gmap.areas if a.id == sim.current_area)}):")
    for c in cands:
        name = f"{c.kind} {c.ref_id}"
        print(f"    slot {c.slot}: {name:<10} at {c.cell}  dMD={delta_md(window, c):+d}")


def main():
    gmap = world.load_map(str(bundled_map_path("easy")))
    sim = world.MissionSim(gmap)
    graph = init_graph(gmap)
    window = MoveWindow(6, start=sim.agent)
    policy = ScriptedPolicy(gmap, PolicyConfig("yellow_first", noise_eps=0.0, seed=0))

    checkpoints = {8, 20, 40}
    step = 0
    while step < 60:
        action = policy.next_action(sim)
        if action is None:
            break
        if action[0] == "triage":
            events = sim.step_triage()
            print(f"step {step}: triage at {sim.agent} "
                  f"(t={sim.t:.2f}s, score={sim.score})")
        else:
            events = sim.step_move(action[1])
            window.push(sim.agent)
        graph = fold_events(graph, events)
        for ev in events:
            if ev.kind == "area_enter":
                print(f"step {step}: entered area {ev.payload['to_area']} "
                      f"through portal {ev.payload['portal']}")
        if step in checkpoints and window.full:
            print(f"\n-- step {step}, agent at {sim.agent}, t={sim.t:.2f}s --")
            print_candidates(gmap, sim, window)
            print_matrix(gmap, graph)
            print()
        step += 1


if __name__ == "__main__":
    main()
