"""Small end-to-end run: corpus -> training -> live-style prediction table.

Generates a compact mixed-strategy corpus, trains the multi-resolution
model, then replays one held-out trial printing the goal-likelihood table
the way the live UI shows it. Takes around a minute on a laptop CPU.

    python demos/03_train_and_predict.py
"""

import tempfile
from pathlib import Path

from sarpredict import bundled_map_path, neural, world
from sarpredict.agents import generate_corpus
from sarpredict.datapipe import label_corpus, load_corpus, stream_predictions
from sarpredict.neural import TrainConfig, frames_to_dataset


def main():
    workdir = Path(tempfile.mkdtemp(prefix="sarpredict_demo_"))
    print(f"working in {workdir}")

    generate_corpus({"easy": str(bundled_map_path("easy"))}, workdir / "corpus",
                    n_trials=12, noise_eps=0.1, seed=4)
    corpus = load_corpus(workdir / "corpus")
    gmap = corpus.maps["easy"]

    frames_by_trial = label_corpus(corpus, m=6)
    held_out = corpus.trials[-1]
    train_frames = [f for tid, frames in frames_by_trial.items()
                    if tid != held_out.trial_id for f in frames]
    print(f"training on {len(train_frames)} frames from {len(corpus.trials) - 1} trials "
          f"(held out: {held_out.trial_id}, policy {held_out.policy})")

    manifest = neural.new_manifest_for("multires", n_areas=len(gmap.areas),
                                       area_order=gmap.area_ids(), m=6, seed=0,
                                       map_id="easy")
    params, history = neural.train(frames_to_dataset(train_frames, "multires", gmap.area_ids()),
                                   manifest, TrainConfig(epochs=10, seed=0))
    print(f"final training epoch: goal_acc={history[-1]['goal_acc']:.3f} "
          f"vic_acc={history[-1]['vic_acc']:.3f}\n")

    events = corpus.events(held_out)
    shown = 0
    for i, rec in enumerate(stream_predictions(events, gmap, params)):
        if rec["goal_probs"] is None or i % 40 != 0:
            continue
        print(f"t={rec['t']:7.2f}s  after `{rec['action']}`  score={rec['score']}")
        print(f"  {'goal':<12} {'cell':<10} likelihood")
        for c in sorted(rec["candidates"], key=lambda c: -c["prob"]):
            label = f"{c['kind']} {c['ref_id']}"
            print(f"  {label:<12} {str(tuple(c['cell'])):<10} {c['prob']:.4f}")
        print(f"  next victim is yellow: p={rec['p_yellow']:.4f}\n")
        shown += 1
        if shown >= 4:
            break


if __name__ == "__main__":
    main()
