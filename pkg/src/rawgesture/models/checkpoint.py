"""Checkpoint IO: binary tensor container plus a JSON header."""

import json
from dataclasses import dataclass
from pathlib import Path

import torch

from .nets import ModelSpec, build_model


@dataclass
class Checkpoint:
    spec: ModelSpec
    state: dict
    seed: int = 0
    config_digest: str = ""
    best_val_accuracy: float | None = None
    best_epoch: int | None = None

    def build(self) -> torch.nn.Module:
        model = build_model(self.spec)
        model.load_state_dict(self.state)
        return model


def save_checkpoint(path: str | Path, ckpt: Checkpoint) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    torch.save({"state": ckpt.state}, path)
    header = {
        "model_kind": ckpt.spec.kind,
        "spec": ckpt.spec.to_dict(),
        "seed": ckpt.seed,
        "config_digest": ckpt.config_digest,
        "best_val_accuracy": ckpt.best_val_accuracy,
        "best_epoch": ckpt.best_epoch,
    }
    path.with_suffix(".json").write_text(json.dumps(header, indent=2, sort_keys=True))
    return path


def load_checkpoint(path: str | Path) -> Checkpoint:
    path = Path(path)
    header_path = path.with_suffix(".json")
    if not path.exists() or not header_path.exists():
        raise FileNotFoundError(f"checkpoint needs both {path.name} and {header_path.name}")
    header = json.loads(header_path.read_text())
    payload = torch.load(path, map_location="cpu", weights_only=True)
    return Checkpoint(
        spec=ModelSpec.from_dict(header["spec"]),
        state=payload["state"],
        seed=header.get("seed", 0),
        config_digest=header.get("config_digest", ""),
        best_val_accuracy=header.get("best_val_accuracy"),
        best_epoch=header.get("best_epoch"),
    )
