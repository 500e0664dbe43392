import copy

import pytest

from sarpredict import bundled_map_path, world


def mini_doc() -> dict:
    """Two rooms joined by one doorway; 1 yellow + 2 green victims.

    Layout (7x11, # wall, . floor, D doorway, y/g victims, S spawn):

        ###########
        #y...#....#
        #....#..g.#
        #.S..D....#
        #....#....#
        #..g.#....#
        ###########
    """
    walls = []
    for c in range(11):
        walls += [[0, c], [6, c]]
    for r in range(1, 6):
        walls += [[r, 0], [r, 10]]
    walls += [[r, 5] for r in (1, 2, 4, 5)]
    return {
        "map_id": "mini",
        "height": 7,
        "width": 11,
        "walls": walls,
        "obstacles": [],
        "victims": [
            {"id": 0, "row": 1, "col": 1, "color": "yellow"},
            {"id": 1, "row": 5, "col": 3, "color": "green"},
            {"id": 2, "row": 2, "col": 8, "color": "green"},
        ],
        "areas": [
            {"id": 0, "name": "Left", "rects": [[1, 1, 5, 4]]},
            {"id": 1, "name": "Right", "rects": [[1, 6, 5, 9]]},
        ],
        "portals": [{"id": 0, "row": 3, "col": 5, "areas": [0, 1]}],
        "spawn": [3, 2],
    }


@pytest.fixture
def mini_map():
    return world.load_map(mini_doc())


@pytest.fixture
def mini_sim(mini_map):
    return world.MissionSim(mini_map)


@pytest.fixture(scope="session")
def easy_map():
    return world.load_map(str(bundled_map_path("easy")))


@pytest.fixture(scope="session")
def maze_map():
    return world.load_map(str(bundled_map_path("maze")))


def doc_variant(**overrides) -> dict:
    doc = copy.deepcopy(mini_doc())
    doc.update(overrides)
    return doc
