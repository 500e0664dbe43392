"""Versioned binary model container.

Layout: magic bytes, u32 manifest length, manifest JSON (UTF-8), then every
tensor named in the manifest as raw little-endian float64 in declared order.
The round trip is bitwise lossless, running statistics included.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .net import DenseBNBlock, ModelParams

MAGIC = b"SARPMDL1"


class ModelIOError(ValueError):
    pass


def save_model(params: ModelParams, path) -> None:
    manifest = dict(params.manifest)
    manifest["tensors"] = [[name, list(arr.shape)] for name, arr in params.named_state()]
    blob = json.dumps(manifest, sort_keys=True).encode("utf-8")
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for _, arr in params.named_state():
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_model(path) -> ModelParams:
    data = Path(path).read_bytes()
    if len(data) < len(MAGIC) + 4 or data[: len(MAGIC)] != MAGIC:
        raise ModelIOError(f"{path}: not a model file (bad magic)")
    off = len(MAGIC)
    (mlen,) = struct.unpack_from("<I", data, off)
    off += 4
    if off + mlen > len(data):
        raise ModelIOError(f"{path}: truncated manifest")
    manifest = json.loads(data[off: off + mlen].decode("utf-8"))
    off += mlen
    if manifest.get("format_version") != 1:
        raise ModelIOError(f"{path}: unsupported format version {manifest.get('format_version')}")

    tensors = {}
    for name, shape in manifest["tensors"]:
        n = int(np.prod(shape)) if shape else 1
        nbytes = 8 * n
        if off + nbytes > len(data):
            raise ModelIOError(f"{path}: truncated at tensor {name}")
        tensors[name] = np.frombuffer(data[off: off + nbytes], dtype="<f8").astype(np.float64).reshape(shape)
        off += nbytes
    if off != len(data):
        raise ModelIOError(f"{path}: {len(data) - off} trailing bytes")

    def stage_blocks(stage: str) -> list[DenseBNBlock]:
        blocks = []
        i = 0
        while f"{stage}{i}.W" in tensors:
            blocks.append(DenseBNBlock(
                W=tensors[f"{stage}{i}.W"], b=tensors[f"{stage}{i}.b"],
                gamma=tensors[f"{stage}{i}.gamma"], beta=tensors[f"{stage}{i}.beta"],
                run_mean=tensors[f"{stage}{i}.run_mean"], run_var=tensors[f"{stage}{i}.run_var"],
            ))
            i += 1
        return blocks

    manifest_no_tensors = {k: v for k, v in manifest.items() if k != "tensors"}
    params = ModelParams(
        hr=stage_blocks("hr"), lr=stage_blocks("lr"), trunk=stage_blocks("trunk"),
        goal_W=tensors["goal.W"], goal_b=tensors["goal.b"],
        victim_W=tensors["victim.W"], victim_b=tensors["victim.b"],
        manifest=manifest_no_tensors,
    )
    dims = manifest["dims"]
    if params.hr[0].n_in != dims["hr_in"] or params.goal_W.shape[0] != manifest["k_max"]:
        raise ModelIOError(f"{path}: tensor shapes disagree with manifest dims")
    return params
