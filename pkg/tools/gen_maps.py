"""Regenerate the bundled desk-scale map documents.

Each map follows the standard mission census (34 victims: 10 yellow + 24
green) on a rooms-off-a-hallway floor plan. Run from the repo root:

    python tools/gen_maps.py
"""

import json
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "src" / "sarpredict" / "maps"


def border_walls(h, w):
    cells = []
    for c in range(w):
        cells += [[0, c], [h - 1, c]]
    for r in range(1, h - 1):
        cells += [[r, 0], [r, w - 1]]
    return cells


def hline(r, c0, c1, skip=()):
    return [[r, c] for c in range(c0, c1 + 1) if c not in skip]


def vline(c, r0, r1, skip=()):
    return [[r, c] for r in range(r0, r1 + 1) if r not in skip]


def easy_map():
    h, w = 21, 35
    walls = border_walls(h, w)
    walls += hline(8, 1, 33, skip={5, 16, 28})    # upper room fronts, 3 doors
    walls += hline(12, 1, 33, skip={7, 18, 26})   # lower room fronts, 3 doors
    walls += vline(11, 1, 7) + vline(22, 1, 7)    # upper dividers
    walls += vline(11, 13, 19) + vline(22, 13, 19)  # lower dividers
    obstacles = [[4, 7], [3, 14], [4, 30], [16, 4], [16, 17], [16, 30], [10, 10], [10, 24]]
    areas = [
        {"id": 0, "name": "Hallway", "rects": [[9, 1, 11, 33]]},
        {"id": 1, "name": "Room A", "rects": [[1, 1, 7, 10]]},
        {"id": 2, "name": "Room B", "rects": [[1, 12, 7, 21]]},
        {"id": 3, "name": "Room C", "rects": [[1, 23, 7, 33]]},
        {"id": 4, "name": "Room D", "rects": [[13, 1, 19, 10]]},
        {"id": 5, "name": "Room E", "rects": [[13, 12, 19, 21]]},
        {"id": 6, "name": "Room F", "rects": [[13, 23, 19, 33]]},
    ]
    portals = [
        {"id": 0, "row": 8, "col": 5, "areas": [1, 0]},
        {"id": 1, "row": 8, "col": 16, "areas": [2, 0]},
        {"id": 2, "row": 8, "col": 28, "areas": [3, 0]},
        {"id": 3, "row": 12, "col": 7, "areas": [4, 0]},
        {"id": 4, "row": 12, "col": 18, "areas": [5, 0]},
        {"id": 5, "row": 12, "col": 26, "areas": [6, 0]},
    ]
    yellows = [(2, 2), (6, 9), (1, 20), (5, 13), (14, 9), (18, 2), (16, 20), (19, 13), (13, 32), (17, 25)]
    greens = [(1, 6), (4, 4), (5, 1), (7, 6),            # Room A
              (2, 16), (4, 19), (6, 16), (7, 12),        # Room B
              (1, 25), (2, 31), (4, 27), (5, 33), (7, 24), (7, 30),  # Room C (green only)
              (13, 4), (16, 6), (17, 1), (19, 8),        # Room D
              (13, 17), (15, 14), (18, 18),              # Room E
              (15, 29), (19, 31), (14, 24)]              # Room F
    victims = [{"id": i, "row": r, "col": c, "color": "yellow"} for i, (r, c) in enumerate(yellows)]
    victims += [{"id": len(yellows) + i, "row": r, "col": c, "color": "green"}
                for i, (r, c) in enumerate(greens)]
    return {
        "map_id": "easy", "height": h, "width": w,
        "walls": walls, "obstacles": obstacles, "victims": victims,
        "areas": areas, "portals": portals, "spawn": [10, 17],
    }


def medium_map():
    h, w = 23, 39
    walls = border_walls(h, w)
    walls += hline(9, 1, 37, skip={4, 14, 23, 33})
    walls += hline(13, 1, 37, skip={6, 13, 25, 32})
    walls += vline(9, 1, 8) + vline(18, 1, 8) + vline(28, 1, 8)
    walls += vline(9, 14, 21) + vline(18, 14, 21) + vline(28, 14, 21)
    obstacles = [[4, 5], [5, 22], [17, 5], [18, 23], [11, 12], [11, 27], [3, 33], [19, 33]]
    areas = [
        {"id": 0, "name": "Hallway", "rects": [[10, 1, 12, 37]]},
        {"id": 1, "name": "Room A", "rects": [[1, 1, 8, 8]]},
        {"id": 2, "name": "Room B", "rects": [[1, 10, 8, 17]]},
        {"id": 3, "name": "Room C", "rects": [[1, 19, 8, 27]]},
        {"id": 4, "name": "Room D", "rects": [[1, 29, 8, 37]]},
        {"id": 5, "name": "Room E", "rects": [[14, 1, 21, 8]]},
        {"id": 6, "name": "Room F", "rects": [[14, 10, 21, 17]]},
        {"id": 7, "name": "Room G", "rects": [[14, 19, 21, 27]]},
        {"id": 8, "name": "Room H", "rects": [[14, 29, 21, 37]]},
    ]
    portals = [
        {"id": 0, "row": 9, "col": 4, "areas": [1, 0]},
        {"id": 1, "row": 9, "col": 14, "areas": [2, 0]},
        {"id": 2, "row": 9, "col": 23, "areas": [3, 0]},
        {"id": 3, "row": 9, "col": 33, "areas": [4, 0]},
        {"id": 4, "row": 13, "col": 6, "areas": [5, 0]},
        {"id": 5, "row": 13, "col": 13, "areas": [6, 0]},
        {"id": 6, "row": 13, "col": 25, "areas": [7, 0]},
        {"id": 7, "row": 13, "col": 32, "areas": [8, 0]},
    ]
    yellows = [(2, 2), (7, 16), (1, 26), (6, 36), (2, 30), (20, 2), (15, 16), (21, 26), (14, 36), (20, 20)]
    greens = [(5, 7), (3, 4), (1, 12), (4, 15), (6, 11), (2, 21), (5, 25), (7, 20),
              (3, 36), (7, 31), (15, 3), (18, 7), (21, 5), (16, 12), (19, 15), (21, 11),
              (14, 21), (17, 26), (20, 24), (16, 31), (19, 36), (21, 34), (15, 34), (17, 21)]
    victims = [{"id": i, "row": r, "col": c, "color": "yellow"} for i, (r, c) in enumerate(yellows)]
    victims += [{"id": len(yellows) + i, "row": r, "col": c, "color": "green"}
                for i, (r, c) in enumerate(greens)]
    return {
        "map_id": "medium", "height": h, "width": w,
        "walls": walls, "obstacles": obstacles, "victims": victims,
        "areas": areas, "portals": portals, "spawn": [11, 19],
    }


def hard_map():
    h, w = 25, 43
    walls = border_walls(h, w)
    # Two hallway wings joined by a single junction door.
    walls += hline(10, 1, 41, skip={5, 15, 26, 36})
    walls += hline(14, 1, 41, skip={4, 16, 27, 37})
    walls += vline(21, 11, 13, skip={12})
    walls += vline(10, 1, 9) + vline(21, 1, 9) + vline(32, 1, 9)
    walls += vline(10, 15, 23) + vline(21, 15, 23) + vline(32, 15, 23)
    obstacles = [[5, 5], [4, 26], [6, 37], [19, 6], [18, 26], [20, 38],
                 [12, 7], [12, 30], [2, 16], [21, 16], [8, 30], [16, 12]]
    areas = [
        {"id": 0, "name": "West Hall", "rects": [[11, 1, 13, 20]]},
        {"id": 1, "name": "East Hall", "rects": [[11, 22, 13, 41]]},
        {"id": 2, "name": "Room A", "rects": [[1, 1, 9, 9]]},
        {"id": 3, "name": "Room B", "rects": [[1, 11, 9, 20]]},
        {"id": 4, "name": "Room C", "rects": [[1, 22, 9, 31]]},
        {"id": 5, "name": "Room D", "rects": [[1, 33, 9, 41]]},
        {"id": 6, "name": "Room E", "rects": [[15, 1, 23, 9]]},
        {"id": 7, "name": "Room F", "rects": [[15, 11, 23, 20]]},
        {"id": 8, "name": "Room G", "rects": [[15, 22, 23, 31]]},
        {"id": 9, "name": "Room H", "rects": [[15, 33, 23, 41]]},
    ]
    portals = [
        {"id": 0, "row": 10, "col": 5, "areas": [2, 0]},
        {"id": 1, "row": 10, "col": 15, "areas": [3, 0]},
        {"id": 2, "row": 10, "col": 26, "areas": [4, 1]},
        {"id": 3, "row": 10, "col": 36, "areas": [5, 1]},
        {"id": 4, "row": 14, "col": 4, "areas": [6, 0]},
        {"id": 5, "row": 14, "col": 16, "areas": [7, 0]},
        {"id": 6, "row": 14, "col": 27, "areas": [8, 1]},
        {"id": 7, "row": 14, "col": 37, "areas": [9, 1]},
        {"id": 8, "row": 12, "col": 21, "areas": [0, 1]},
    ]
    yellows = [(1, 1), (8, 8), (2, 19), (1, 30), (8, 41), (22, 1), (15, 8), (23, 19), (15, 30), (23, 41)]
    greens = [(4, 3), (7, 2), (3, 8), (1, 13), (6, 18), (8, 12), (3, 27), (7, 24),
              (5, 30), (2, 34), (5, 41), (8, 36), (17, 2), (21, 8), (16, 5), (18, 13),
              (22, 18), (16, 19), (19, 24), (22, 30), (17, 28), (18, 35), (21, 41), (16, 38)]
    victims = [{"id": i, "row": r, "col": c, "color": "yellow"} for i, (r, c) in enumerate(yellows)]
    victims += [{"id": len(yellows) + i, "row": r, "col": c, "color": "green"}
                for i, (r, c) in enumerate(greens)]
    return {
        "map_id": "hard", "height": h, "width": w,
        "walls": walls, "obstacles": obstacles, "victims": victims,
        "areas": areas, "portals": portals, "spawn": [12, 10],
    }


def maze_map():
    rows = [
        "###########",
        "#...#.....#",
        "#.#.#.###.#",
        "#.#...#...#",
        "#.#####.#.#",
        "#.......#.#",
        "###.#####.#",
        "#...#...#.#",
        "#.###.#.#.#",
        "#.....#...#",
        "###########",
    ]
    walls = [[r, c] for r, line in enumerate(rows) for c, ch in enumerate(line) if ch == "#"]
    open_cells = [[r, c] for r, line in enumerate(rows) for c, ch in enumerate(line) if ch == "."]
    return {
        "map_id": "maze", "height": 11, "width": 11,
        "walls": walls, "obstacles": [], "victims": [],
        "areas": [{"id": 0, "name": "Maze", "cells": open_cells}],
        "portals": [], "spawn": [1, 1],
    }


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for build in (easy_map, medium_map, hard_map, maze_map):
        doc = build()
        path = OUT / f"{doc['map_id']}.map"
        path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n", encoding="utf-8")
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
