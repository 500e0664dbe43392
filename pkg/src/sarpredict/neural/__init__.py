"""From-scratch neural model: extractors, prediction trunk, losses, Adam."""

from .net import (AdamState, DenseBNBlock, ModelParams, Prediction, VARIANTS,
                  adam_step, backward, build_manifest, commit_running_stats,
                  decode_goal, forward, init_params, loss, masked_softmax)
from .train import (Dataset, TrainConfig, check_dataset, frames_to_dataset,
                    new_manifest_for, train, write_history_csv)
from .io import ModelIOError, load_model, save_model

__all__ = [
    "AdamState", "DenseBNBlock", "ModelParams", "Prediction", "VARIANTS",
    "adam_step", "backward", "build_manifest", "commit_running_stats",
    "decode_goal", "forward", "init_params", "loss", "masked_softmax",
    "Dataset", "TrainConfig", "check_dataset", "frames_to_dataset",
    "new_manifest_for", "train", "write_history_csv",
    "ModelIOError", "load_model", "save_model",
]
