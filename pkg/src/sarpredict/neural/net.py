"""Hand-rolled dense network with batch normalization and exact gradients.

Architecture: a high-resolution extractor and (for the multi-resolution
variant) a low-resolution extractor, concatenated into a prediction trunk
with two heads: a masked softmax over candidate-goal slots and a sigmoid for
"next triaged victim is yellow". Every stage is FC + batch norm + ReLU.

All arithmetic is float64; the backward pass is written out by hand and is
checked against central finite differences in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

BN_EPS = 1e-5
BN_MOMENTUM = 0.9  # new_running = momentum * old + (1 - momentum) * batch

VARIANTS = ("multires", "dmd_area", "locations")


@dataclass
class DenseBNBlock:
    W: np.ndarray  # out x in
    b: np.ndarray
    gamma: np.ndarray
    beta: np.ndarray
    run_mean: np.ndarray
    run_var: np.ndarray

    @property
    def n_in(self) -> int:
        return self.W.shape[1]

    @property
    def n_out(self) -> int:
        return self.W.shape[0]


def init_block(rng: np.random.Generator, n_in: int, n_out: int) -> DenseBNBlock:
    # He-uniform fan-in for the weights; identity batch-norm affine.
    limit = np.sqrt(6.0 / n_in)
    return DenseBNBlock(
        W=rng.uniform(-limit, limit, size=(n_out, n_in)),
        b=np.zeros(n_out),
        gamma=np.ones(n_out),
        beta=np.zeros(n_out),
        run_mean=np.zeros(n_out),
        run_var=np.ones(n_out),
    )


@dataclass
class ModelParams:
    """All weights, biases, and batch-norm state, plus the build manifest."""

    hr: list[DenseBNBlock]
    lr: list[DenseBNBlock]  # empty for the high-resolution-only variants
    trunk: list[DenseBNBlock]
    goal_W: np.ndarray
    goal_b: np.ndarray
    victim_W: np.ndarray
    victim_b: np.ndarray
    manifest: dict = field(default_factory=dict)

    def stages(self):
        yield "hr", self.hr
        yield "lr", self.lr
        yield "trunk", self.trunk

    def named_parameters(self) -> list[tuple[str, np.ndarray]]:
        """Trainable tensors in declared (serialization/update) order."""
        out = []
        for stage, blocks in self.stages():
            for i, blk in enumerate(blocks):
                for attr in ("W", "b", "gamma", "beta"):
                    out.append((f"{stage}{i}.{attr}", getattr(blk, attr)))
        out += [("goal.W", self.goal_W), ("goal.b", self.goal_b),
                ("victim.W", self.victim_W), ("victim.b", self.victim_b)]
        return out

    def named_state(self) -> list[tuple[str, np.ndarray]]:
        """Trainable tensors plus batch-norm running statistics."""
        out = []
        for stage, blocks in self.stages():
            for i, blk in enumerate(blocks):
                for attr in ("W", "b", "gamma", "beta", "run_mean", "run_var"):
                    out.append((f"{stage}{i}.{attr}", getattr(blk, attr)))
        out += [("goal.W", self.goal_W), ("goal.b", self.goal_b),
                ("victim.W", self.victim_W), ("victim.b", self.victim_b)]
        return out

    def tensor(self, name: str) -> np.ndarray:
        for n, arr in self.named_state():
            if n == name:
                return arr
        raise KeyError(name)


def build_manifest(variant: str, *, k_max: int, m: int, n_areas: int, area_order,
                   e_hr: int = 4, e_lr: int = 64, hidden: int = 64,
                   depth: int = 1, seed: int = 0, map_id: str = "") -> dict:
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    hr_in = {"multires": k_max, "dmd_area": k_max + 1, "locations": 2 * m}[variant]
    lr_in = n_areas * 6 if variant == "multires" else 0
    return {
        "format_version": 1,
        "variant": variant,
        "k_max": k_max,
        "m": m,
        "n_areas": n_areas,
        "area_order": list(area_order),
        "map_id": map_id,
        "dims": {"hr_in": hr_in, "e_hr": e_hr, "lr_in": lr_in, "e_lr": e_lr, "hidden": hidden},
        "depth": depth,
        "activation": "relu",
        "bn": {"eps": BN_EPS, "momentum": BN_MOMENTUM},
        "normalization": {"dmd_scale": f"1/{m}", "count_scale": 0.1, "status": "one-hot",
                          "locations_scale": "1/map-dims", "area_scalar": "index/n_areas"},
        "seed": seed,
    }


def init_params(manifest: dict) -> ModelParams:
    rng = np.random.default_rng(manifest["seed"])
    dims = manifest["dims"]
    depth = manifest.get("depth", 1)

    def stage(n_in, n_out):
        blocks = [init_block(rng, n_in, n_out)]
        for _ in range(depth - 1):
            blocks.append(init_block(rng, n_out, n_out))
        return blocks

    hr = stage(dims["hr_in"], dims["e_hr"])
    lr = stage(dims["lr_in"], dims["e_lr"]) if manifest["variant"] == "multires" else []
    trunk_in = dims["e_hr"] + (dims["e_lr"] if lr else 0)
    trunk = stage(trunk_in, dims["hidden"])
    k_max = manifest["k_max"]
    lim_g = np.sqrt(6.0 / dims["hidden"])
    return ModelParams(
        hr=hr, lr=lr, trunk=trunk,
        goal_W=rng.uniform(-lim_g, lim_g, size=(k_max, dims["hidden"])),
        goal_b=np.zeros(k_max),
        victim_W=rng.uniform(-lim_g, lim_g, size=(1, dims["hidden"])),
        victim_b=np.zeros(1),
        manifest=manifest,
    )


@dataclass
class Prediction:
    goal_probs: np.ndarray   # B x K, padded slots exactly 0
    p_yellow: np.ndarray     # B
    goal_logits: np.ndarray  # B x K, masked with -inf
    victim_logit: np.ndarray  # B


def masked_softmax(logits: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Softmax over active slots only; padded slots are exactly zero."""
    if not mask.any(axis=1).all():
        raise ValueError("every sample needs at least one active slot")
    shifted = np.where(mask, logits, -np.inf)
    shifted = shifted - shifted.max(axis=1, keepdims=True)
    num = np.exp(shifted)  # exp(-inf) == 0 exactly on padded slots
    return num / num.sum(axis=1, keepdims=True)


def _block_forward(blk: DenseBNBlock, x: np.ndarray, mode: str, eps: float):
    z = x @ blk.W.T + blk.b
    if mode == "train":
        if z.shape[0] < 2:
            raise ValueError("train-mode batch norm needs batch size >= 2")
        mu = z.mean(axis=0)
        d = z - mu
        var = np.mean(d * d, axis=0)  # biased, matching the backward pass
    else:
        mu, var = blk.run_mean, blk.run_var
        d = z - mu
    inv = 1.0 / np.sqrt(var + eps)
    zhat = d * inv
    y = blk.gamma * zhat + blk.beta
    a = np.maximum(y, 0.0)
    return a, {"x": x, "mu": mu, "var": var, "inv": inv, "zhat": zhat, "y": y}


def _stage_forward(blocks, x, mode, eps):
    caches = []
    for blk in blocks:
        x, c = _block_forward(blk, x, mode, eps)
        caches.append(c)
    return x, caches


def forward(params: ModelParams, hr_x: np.ndarray, lr_x: np.ndarray | None,
            mask: np.ndarray, mode: str = "infer", track_running: bool = True):
    """Run the network; returns (Prediction, cache).

    Train mode uses batch statistics and stashes candidate running-stat
    updates in the cache (committed separately by the train loop, so the
    call itself leaves the parameters untouched). Infer mode uses running
    statistics and accepts batches of one. track_running=False skips the
    running-average bookkeeping (useful for pure loss probes).
    """
    if mode not in ("train", "infer"):
        raise ValueError(f"unknown mode {mode!r}")
    dims = params.manifest["dims"]
    if hr_x.ndim != 2 or hr_x.shape[1] != dims["hr_in"]:
        raise ValueError(f"hr input has shape {hr_x.shape}, manifest expects (*, {dims['hr_in']})")
    eps = params.manifest["bn"]["eps"]
    mask = np.asarray(mask, dtype=bool)

    e_hr, hr_caches = _stage_forward(params.hr, hr_x, mode, eps)
    if params.lr:
        if lr_x is None or lr_x.shape[1] != dims["lr_in"]:
            got = None if lr_x is None else lr_x.shape
            raise ValueError(f"lr input has shape {got}, manifest expects (*, {dims['lr_in']})")
        e_lr, lr_caches = _stage_forward(params.lr, lr_x, mode, eps)
        concat = np.concatenate([e_hr, e_lr], axis=1)
    else:
        e_lr, lr_caches = None, []
        concat = e_hr
    h, trunk_caches = _stage_forward(params.trunk, concat, mode, eps)

    if not mask.any(axis=1).all():
        raise ValueError("every sample needs at least one active slot")
    goal_logits = h @ params.goal_W.T + params.goal_b
    goal_logits = np.where(mask, goal_logits, -np.inf)
    # Softmax over the pre-masked logits: exp(-inf) pads with exact zeros.
    shifted = goal_logits - goal_logits.max(axis=1, keepdims=True)
    num = np.exp(shifted)
    goal_probs = num / num.sum(axis=1, keepdims=True)
    victim_logit = (h @ params.victim_W.T + params.victim_b)[:, 0]
    p_yellow = 1.0 / (1.0 + np.exp(-victim_logit))

    pred = Prediction(goal_probs, p_yellow, goal_logits, victim_logit)
    cache = {
        "mode": mode, "mask": mask, "h": h, "pred": pred,
        "stage_caches": {"hr": hr_caches, "lr": lr_caches, "trunk": trunk_caches},
        "e_hr_width": e_hr.shape[1],
    }
    if mode == "train" and track_running:
        updates = {}
        mom = params.manifest["bn"]["momentum"]
        for stage, blocks in params.stages():
            for i, (blk, c) in enumerate(zip(blocks, cache["stage_caches"][stage])):
                updates[f"{stage}{i}"] = (mom * blk.run_mean + (1 - mom) * c["mu"],
                                          mom * blk.run_var + (1 - mom) * c["var"])
        cache["running_updates"] = updates
    return pred, cache


def commit_running_stats(params: ModelParams, cache: dict) -> None:
    for stage, blocks in params.stages():
        for i, blk in enumerate(blocks):
            mean, var = cache["running_updates"][f"{stage}{i}"]
            blk.run_mean = mean
            blk.run_var = var


def loss(pred: Prediction, goal_labels: np.ndarray, victim_labels: np.ndarray,
         t: np.ndarray, mask: np.ndarray, victim_weight: float = 0.3,
         victim_t_cutoff: float = 300.0):
    """Total loss: mean goal cross-entropy plus weighted mean victim BCE.

    goal_labels / victim_labels use -1 for "no label". Victim terms are
    restricted to samples inside the first five minutes (yellows cannot be
    triaged afterwards, so later labels are degenerate).
    """
    goal_sel = goal_labels >= 0
    vic_sel = (victim_labels >= 0) & (t < victim_t_cutoff)
    if not goal_sel.any() and not vic_sel.any():
        raise ValueError("batch has no labeled samples")

    l_gp = 0.0
    if goal_sel.any():
        rows = np.flatnonzero(goal_sel)
        # Probabilities come from a max-shifted softmax; the labeled slot
        # cannot underflow at trainable logit scales.
        l_gp = float(-np.log(pred.goal_probs[rows, goal_labels[rows]]).mean())

    l_vp = 0.0
    if vic_sel.any():
        v = pred.victim_logit[vic_sel]
        y = victim_labels[vic_sel].astype(np.float64)
        # Stable BCE from the logit: softplus(v) - y*v.
        l_vp = float((np.logaddexp(0.0, v) - y * v).mean())

    return l_gp + victim_weight * l_vp, l_gp, l_vp


def backward(params: ModelParams, cache: dict, goal_labels: np.ndarray,
             victim_labels: np.ndarray, t: np.ndarray,
             victim_weight: float = 0.3, victim_t_cutoff: float = 300.0) -> dict:
    """Exact gradients of the total loss for every trainable tensor."""
    if cache["mode"] != "train":
        raise ValueError("backward needs a train-mode cache")
    pred: Prediction = cache["pred"]
    mask = cache["mask"]
    h = cache["h"]
    B = h.shape[0]

    goal_sel = goal_labels >= 0
    vic_sel = (victim_labels >= 0) & (t < victim_t_cutoff)

    dlogits = np.zeros_like(pred.goal_probs)
    if goal_sel.any():
        n_g = int(goal_sel.sum())
        rows = np.flatnonzero(goal_sel)
        dlogits[rows] = pred.goal_probs[rows]
        dlogits[rows, goal_labels[rows]] -= 1.0
        dlogits[rows] /= n_g
        # Padded slots carry probability exactly 0, so their gradient is 0.

    dv = np.zeros(B)
    if vic_sel.any():
        n_v = int(vic_sel.sum())
        y = victim_labels[vic_sel].astype(np.float64)
        dv[vic_sel] = victim_weight * (pred.p_yellow[vic_sel] - y) / n_v

    grads = {
        "goal.W": dlogits.T @ h,
        "goal.b": dlogits.sum(axis=0),
        "victim.W": dv[None, :] @ h,
        "victim.b": np.array([dv.sum()]),
    }
    dh = dlogits @ params.goal_W + dv[:, None] @ params.victim_W

    def stage_backward(stage: str, blocks, caches, dout):
        for i in reversed(range(len(blocks))):
            blk, c = blocks[i], caches[i]
            dy = dout * (c["y"] > 0)
            grads[f"{stage}{i}.gamma"] = (dy * c["zhat"]).sum(axis=0)
            grads[f"{stage}{i}.beta"] = dy.sum(axis=0)
            dzhat = dy * blk.gamma
            # Batch-norm backward through the batch statistics.
            dz = c["inv"] * (dzhat - dzhat.mean(axis=0)
                             - c["zhat"] * (dzhat * c["zhat"]).mean(axis=0))
            grads[f"{stage}{i}.W"] = dz.T @ c["x"]
            grads[f"{stage}{i}.b"] = dz.sum(axis=0)
            dout = dz @ blk.W
        return dout

    dconcat = stage_backward("trunk", params.trunk, cache["stage_caches"]["trunk"], dh)
    w_hr = cache["e_hr_width"]
    d_ehr, d_elr = dconcat[:, :w_hr], dconcat[:, w_hr:]
    stage_backward("hr", params.hr, cache["stage_caches"]["hr"], d_ehr)
    if params.lr:
        stage_backward("lr", params.lr, cache["stage_caches"]["lr"], d_elr)
    return grads


@dataclass
class AdamState:
    step: int = 0
    m1: dict = field(default_factory=dict)
    m2: dict = field(default_factory=dict)
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def adam_step(params: ModelParams, grads: dict, state: AdamState) -> None:
    """One in-place Adam update with bias correction."""
    for name, g in grads.items():
        if not np.isfinite(g).all():
            raise FloatingPointError(f"non-finite gradient in {name}")
    state.step += 1
    t = state.step
    b1, b2 = state.beta1, state.beta2
    for name, p in params.named_parameters():
        g = grads[name]
        m1 = state.m1.get(name)
        if m1 is None:
            m1 = state.m1[name] = np.zeros_like(p)
        m2 = state.m2.get(name)
        if m2 is None:
            m2 = state.m2[name] = np.zeros_like(p)
        m1 *= b1
        m1 += (1 - b1) * g
        m2 *= b2
        m2 += (1 - b2) * g * g
        mhat = m1 / (1 - b1 ** t)
        vhat = m2 / (1 - b2 ** t)
        p -= state.lr * mhat / (np.sqrt(vhat) + state.eps)


def decode_goal(goal_probs: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Argmax over active slots; ties break toward the lowest slot index."""
    masked = np.where(np.asarray(mask, dtype=bool), goal_probs, -1.0)
    return masked.argmax(axis=1)
