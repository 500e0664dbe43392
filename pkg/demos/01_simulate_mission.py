"""Run one scripted rescue mission on the bundled easy map and watch it unfold.

The agent follows the yellow-first strategy: clear every critically injured
(yellow) victim before the five-minute expiry, then sweep the greens.

    python demos/01_simulate_mission.py
"""

from sarpredict import bundled_map_path, world
from sarpredict.agents import PolicyConfig, ScriptedPolicy, run_trial

CHARS = {0: "@", 1: ".", 4: "#", 81: "Y", 82: "g", 83: "+", 255: "%"}


def render(sim):
    return "\n".join("".join(CHARS[c] for c in row) for row in sim.cells())


def main():
    gmap = world.load_map(str(bundled_map_path("easy")))
    yellow, green = gmap.census()
    print(f"easy map: {gmap.height}x{gmap.width}, {len(gmap.victims)} victims "
          f"({yellow} yellow, {green} green), {len(gmap.areas)} areas\n")

    policy = ScriptedPolicy(gmap, PolicyConfig("yellow_first", noise_eps=0.1, seed=7))
    events = run_trial(gmap, policy)

    sim = world.replay(events, gmap)
    print(render(sim))
    print()

    moves = sum(1 for e in events if e.kind == "move")
    triages = [(e.t, e.payload["color"]) for e in events if e.kind == "triage_complete"]
    print(f"{moves} moves, {len(triages)} triages, final score {sim.score} "
          f"(clock {sim.t:.2f}s of {sim.config.time_limit:.0f}s)")
    print("\nfirst ten triages:")
    for t, color in triages[:10]:
        print(f"  t={t:7.2f}s  {color}")
    yellow_done = max(t for t, c in triages if c == "yellow")
    print(f"\nlast yellow rescued at t={yellow_done:.2f}s "
          f"(expiry at {sim.config.expiry_time:.0f}s)")


if __name__ == "__main__":
    main()
