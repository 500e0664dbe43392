"""Real-time goal and next-victim prediction for gridworld search-and-rescue.

Subsystems: `world` (mission simulator), `areagraph` (low-resolution memory
matrix), `features` (candidate goals and move-window inputs), `neural`
(from-scratch network + training), `agents` (scripted corpus generators),
`datapipe` (labeling, folds, evaluation), `server` (live play + prediction),
`cli` (the command-line pipeline).
"""

from importlib import resources

__version__ = "0.1.0"


def bundled_map_path(name: str):
    """Path to a bundled map document (easy, medium, hard, maze)."""
    ref = resources.files("sarpredict").joinpath("maps", f"{name}.map")
    if not ref.is_file():
        raise FileNotFoundError(f"no bundled map named {name!r}")
    return ref


def bundled_map_names() -> list[str]:
    out = []
    for entry in resources.files("sarpredict").joinpath("maps").iterdir():
        if entry.name.endswith(".map"):
            out.append(entry.name[: -len(".map")])
    return sorted(out)
