"""Mini-batch supervised training for the behavior-prediction network."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from ..features import FeatureFrame
from .net import (AdamState, ModelParams, adam_step, backward, build_manifest,
                  decode_goal, forward, commit_running_stats, init_params, loss)


@dataclass
class TrainConfig:
    epochs: int = 100
    batch_size: int = 16
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    victim_loss_weight: float = 0.3
    seed: int = 0


@dataclass
class Dataset:
    """Frames flattened into contiguous arrays for one model variant."""

    hr: np.ndarray
    lr: np.ndarray | None
    mask: np.ndarray
    goal_labels: np.ndarray    # -1 where unset
    victim_labels: np.ndarray  # -1 where unset
    t: np.ndarray
    trial_ids: list = field(repr=False, default_factory=list)
    m: int = 0  # window size the frames were built with (0 = unknown)

    def __len__(self) -> int:
        return self.hr.shape[0]

    def take(self, idx: np.ndarray) -> "Dataset":
        return Dataset(
            hr=self.hr[idx],
            lr=None if self.lr is None else self.lr[idx],
            mask=self.mask[idx],
            goal_labels=self.goal_labels[idx],
            victim_labels=self.victim_labels[idx],
            t=self.t[idx],
            trial_ids=[self.trial_ids[i] for i in idx] if self.trial_ids else [],
            m=self.m,
        )


def frames_to_dataset(frames: list[FeatureFrame], variant: str, area_order) -> Dataset:
    """Assemble per-variant network inputs from labeled frames."""
    from ..features import build_baseline_dmd_area

    if variant == "multires":
        hr = np.stack([f.dmd for f in frames])
        lr = np.stack([f.lowres for f in frames])
    elif variant == "dmd_area":
        hr = np.stack([build_baseline_dmd_area(f, area_order) for f in frames])
        lr = None
    elif variant == "locations":
        hr = np.stack([f.locations for f in frames])
        lr = None
    else:
        raise ValueError(f"unknown variant {variant!r}")
    return Dataset(
        hr=hr,
        lr=lr,
        mask=np.stack([f.mask for f in frames]).astype(bool),
        goal_labels=np.array([-1 if f.goal_label is None else f.goal_label for f in frames], dtype=np.int64),
        victim_labels=np.array([-1 if f.victim_label is None else f.victim_label for f in frames], dtype=np.int64),
        t=np.array([f.t for f in frames], dtype=np.float64),
        trial_ids=[f.trial_id for f in frames],
        m=frames[0].locations.shape[0] // 2 if frames else 0,
    )


def check_dataset(params: ModelParams, data: Dataset) -> None:
    """Reject corpora whose layout disagrees with the model manifest."""
    dims = params.manifest["dims"]
    if data.m and data.m != params.manifest["m"]:
        raise ValueError(f"corpus window m={data.m} != manifest m={params.manifest['m']}")
    if data.hr.shape[1] != dims["hr_in"]:
        raise ValueError(f"corpus hr width {data.hr.shape[1]} != manifest {dims['hr_in']} "
                         f"(m or K mismatch?)")
    if params.lr and (data.lr is None or data.lr.shape[1] != dims["lr_in"]):
        got = None if data.lr is None else data.lr.shape[1]
        raise ValueError(f"corpus lowres width {got} != manifest {dims['lr_in']}")
    if data.mask.shape[1] != params.manifest["k_max"]:
        raise ValueError(f"corpus mask width {data.mask.shape[1]} != K_max {params.manifest['k_max']}")


def train(data: Dataset, manifest: dict, config: TrainConfig = TrainConfig()):
    """Train from scratch; returns (params, history).

    Deterministic for a fixed (data, manifest, config): initialization and
    batch order come from seeded generators only.
    """
    if len(data) == 0:
        raise ValueError("empty training corpus")
    params = init_params(manifest)
    check_dataset(params, data)
    state = AdamState(lr=config.lr, beta1=config.beta1, beta2=config.beta2, eps=config.adam_eps)
    rng = np.random.default_rng(config.seed)
    history = []
    for epoch in range(config.epochs):
        order = rng.permutation(len(data))
        tot = {"l_total": 0.0, "l_gp": 0.0, "l_vp": 0.0, "n": 0,
               "goal_hit": 0, "goal_n": 0, "vic_hit": 0, "vic_n": 0}
        for start in range(0, len(order), config.batch_size):
            idx = order[start: start + config.batch_size]
            if len(idx) < 2:
                continue  # train-mode batch norm needs >= 2 samples
            batch = data.take(idx)
            pred, cache = forward(params, batch.hr, batch.lr, batch.mask, mode="train")
            l_total, l_gp, l_vp = loss(pred, batch.goal_labels, batch.victim_labels,
                                       batch.t, batch.mask, config.victim_loss_weight)
            grads = backward(params, cache, batch.goal_labels, batch.victim_labels,
                             batch.t, config.victim_loss_weight)
            adam_step(params, grads, state)
            commit_running_stats(params, cache)

            n = len(idx)
            tot["l_total"] += l_total * n
            tot["l_gp"] += l_gp * n
            tot["l_vp"] += l_vp * n
            tot["n"] += n
            gsel = batch.goal_labels >= 0
            if gsel.any():
                picks = decode_goal(pred.goal_probs, batch.mask)
                tot["goal_hit"] += int((picks[gsel] == batch.goal_labels[gsel]).sum())
                tot["goal_n"] += int(gsel.sum())
            vsel = (batch.victim_labels >= 0) & (batch.t < 300.0)
            if vsel.any():
                tot["vic_hit"] += int(((pred.p_yellow[vsel] > 0.5).astype(int)
                                       == batch.victim_labels[vsel]).sum())
                tot["vic_n"] += int(vsel.sum())
        history.append({
            "epoch": epoch,
            "L_total": tot["l_total"] / max(tot["n"], 1),
            "L_gp": tot["l_gp"] / max(tot["n"], 1),
            "L_vp": tot["l_vp"] / max(tot["n"], 1),
            "goal_acc": tot["goal_hit"] / tot["goal_n"] if tot["goal_n"] else float("nan"),
            "vic_acc": tot["vic_hit"] / tot["vic_n"] if tot["vic_n"] else float("nan"),
        })
    return params, history


def write_history_csv(history: list[dict], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=["epoch", "L_total", "L_gp", "L_vp", "goal_acc", "vic_acc"])
        writer.writeheader()
        writer.writerows(history)


def new_manifest_for(variant: str, *, n_areas: int, area_order, m: int, k_max: int = 16,
                     seed: int = 0, map_id: str = "", depth: int = 1) -> dict:
    return build_manifest(variant, k_max=k_max, m=m, n_areas=n_areas,
                          area_order=area_order, seed=seed, map_id=map_id, depth=depth)
