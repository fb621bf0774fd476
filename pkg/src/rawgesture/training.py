"""Training, evaluation, and experiment grids.

Classifiers train with Adam (decoupled weight decay, BN parameters and
biases exempt), cross-entropy loss, and a per-step linear learning-rate
ramp from ``lr_start`` to ``lr_end``. Validation runs at epoch end; the
best-validation state is retained (earliest epoch on ties). Raw
measurements are min-max normalized to [0, 1] using statistics from the
train split only.

The grid runner materializes the comparison datasets (original /
lensless / ADMM-reconstructed / U-Net-reconstructed, each optionally
down-sampled) from one scene corpus and trains/evaluates a classifier
per cell, mirroring the accuracy tables of the study this toolkit
reproduces at desk scale.
"""

import copy
import csv
import hashlib
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from .clips import VideoClip
from .models import Checkpoint, ModelSpec, build_model
from .optics import NoiseSpec, PointSpreadFunction, SensorGeometry, simulate_video
from .recon import AdmmParams, reconstruct_clip
from .sampling import SampleSpec, downsample_clip, make_mask
from .seeding import derive_seed, rng_for


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    batch_size: int = 12
    beta1: float = 0.9
    beta2: float = 0.99
    weight_decay: float = 0.001
    lr_start: float = 1e-3
    lr_end: float = 1e-5
    schedule: str = "linear"
    loss: str = "cross-entropy"
    seed: int = 0

    def __post_init__(self):
        if not self.lr_start >= self.lr_end > 0:
            raise ValueError("need lr_start >= lr_end > 0")
        if self.batch_size < 1 or self.epochs < 1:
            raise ValueError("batch_size and epochs must be >= 1")
        if self.schedule != "linear":
            raise ValueError(f"unknown schedule {self.schedule!r}")
        if self.loss != "cross-entropy":
            raise ValueError(f"unknown loss {self.loss!r}")

    def to_dict(self) -> dict:
        return {
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "weight_decay": self.weight_decay,
            "lr_start": self.lr_start,
            "lr_end": self.lr_end,
            "schedule": self.schedule,
            "loss": self.loss,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        return cls(**{k: d[k] for k in cls().to_dict() if k in d})

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()[:16]


def lr_at(step: int, total_steps: int, config: TrainConfig) -> float:
    """Linear ramp: lr_start at step 0, lr_end at step == total_steps."""
    if total_steps < 1:
        raise ValueError("total_steps must be >= 1")
    if not 0 <= step <= total_steps:
        raise ValueError(f"step {step} outside [0, {total_steps}]")
    frac = step / total_steps
    # convex combination is exact at both endpoints
    return config.lr_start * (1.0 - frac) + config.lr_end * frac


@dataclass
class TrainHistory:
    train_loss: list = field(default_factory=list)
    train_accuracy: list = field(default_factory=list)
    val_accuracy: list = field(default_factory=list)
    learning_rate: list = field(default_factory=list)
    best_epoch: int = 0
    wall_time_s: float = 0.0

    def to_csv(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["epoch", "train_loss", "train_accuracy", "val_accuracy", "learning_rate"])
            for i in range(len(self.train_loss)):
                writer.writerow(
                    [i, self.train_loss[i], self.train_accuracy[i], self.val_accuracy[i], self.learning_rate[i]]
                )
        return path


@dataclass
class ConfusionMatrix:
    counts: np.ndarray

    @classmethod
    def empty(cls, num_classes: int = 9) -> "ConfusionMatrix":
        return cls(counts=np.zeros((num_classes, num_classes), dtype=np.int64))

    def add(self, true: int, pred: int, n: int = 1):
        self.counts[true, pred] += n

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def accuracy(self) -> float:
        total = self.total
        return float(np.trace(self.counts)) / total if total else 0.0

    def row_sums(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    def to_list(self) -> list:
        return self.counts.tolist()


@dataclass
class EvalResult:
    accuracy: float
    confusion: ConfusionMatrix
    per_illumination: dict


def predicted_classes(logits: torch.Tensor) -> np.ndarray:
    """Lowest-index argmax (numpy semantics pin the tie-break)."""
    return np.argmax(logits.detach().cpu().numpy(), axis=1)


def clips_to_tensors(clips: list[VideoClip]) -> tuple[torch.Tensor, torch.Tensor, np.ndarray]:
    if not clips:
        raise TrainingError("empty clip stream")
    shapes = {c.frames.shape for c in clips}
    if len(shapes) != 1:
        raise TrainingError(f"clip geometry mismatch across stream: {sorted(shapes)}")
    if any(c.label is None for c in clips):
        raise TrainingError("stream contains unlabeled clips")
    x = torch.from_numpy(np.stack([c.frames for c in clips])).unsqueeze(1)
    y = torch.tensor([c.label for c in clips], dtype=torch.long)
    illum = np.array([-1 if c.illumination is None else c.illumination for c in clips])
    return x, y, illum


def minmax_normalize(train_clips: list[VideoClip], *other_sets: list[VideoClip]):
    """Scale raw values into [0, 1] with train-split statistics only.

    Non-train splits are clamped after scaling (their range may exceed the
    train extremes). Returns the rescaled sets plus the (lo, hi) stats.
    """
    lo = min(float(c.frames.min()) for c in train_clips)
    hi = max(float(c.frames.max()) for c in train_clips)
    span = max(hi - lo, 1e-12)

    def rescale(clips):
        return [
            c.with_frames(np.clip((c.frames - lo) / span, 0.0, 1.0).astype(np.float32))
            for c in clips
        ]

    out = [rescale(train_clips)] + [rescale(s) for s in other_sets]
    return (*out, (lo, hi))


def _param_groups(model: nn.Module, weight_decay: float):
    decay, no_decay = [], []
    for module in model.modules():
        for name, param in module.named_parameters(recurse=False):
            if isinstance(module, (nn.BatchNorm2d, nn.BatchNorm3d)) or name == "bias":
                no_decay.append(param)
            else:
                decay.append(param)
    return [
        {"params": decay, "weight_decay": weight_decay},
        {"params": no_decay, "weight_decay": 0.0},
    ]


def train_model(
    spec: ModelSpec,
    train_clips: list[VideoClip],
    val_clips: list[VideoClip],
    config: TrainConfig = TrainConfig(),
    max_steps: int | None = None,
) -> tuple[Checkpoint, TrainHistory]:
    """Train a classifier; returns the best-validation checkpoint and history.

    ``max_steps`` optionally caps total optimizer steps (smoke tests); the
    learning-rate ramp always spans the full planned budget.
    """
    x_train, y_train, _ = clips_to_tensors(train_clips)
    x_val, _, _ = clips_to_tensors(val_clips)
    if x_train.shape[2:] != x_val.shape[2:]:
        raise TrainingError(f"train/val geometry mismatch: {x_train.shape} vs {x_val.shape}")
    if (spec.clip_len, spec.height, spec.width) != tuple(x_train.shape[2:]):
        raise TrainingError(
            f"model spec geometry {spec.input_shape()} does not match clips {tuple(x_train.shape[1:])}"
        )

    torch.manual_seed(derive_seed(config.seed, "train", spec.kind))
    model = build_model(spec)
    optimizer = torch.optim.AdamW(
        _param_groups(model, config.weight_decay),
        lr=config.lr_start,
        betas=(config.beta1, config.beta2),
    )

    n = x_train.shape[0]
    steps_per_epoch = (n + config.batch_size - 1) // config.batch_size
    total_steps = config.epochs * steps_per_epoch
    history = TrainHistory()
    best_acc = -1.0
    best_state = None
    global_step = 0
    start = time.time()

    for epoch in range(config.epochs):
        model.train()
        perm = rng_for(config.seed, "epoch", epoch).permutation(n)
        epoch_loss = 0.0
        epoch_correct = 0
        last_lr = lr_at(min(global_step, total_steps), total_steps, config)
        for b in range(steps_per_epoch):
            idx = perm[b * config.batch_size : (b + 1) * config.batch_size]
            xb = x_train[idx]
            yb = y_train[idx]
            last_lr = lr_at(global_step, total_steps, config)
            for group in optimizer.param_groups:
                group["lr"] = last_lr
            optimizer.zero_grad()
            logits = model(xb)
            loss = F.cross_entropy(logits, yb)
            if not torch.isfinite(loss):
                raise TrainingError(
                    f"non-finite loss at epoch {epoch} step {global_step}: {float(loss)!r}"
                )
            loss.backward()
            optimizer.step()
            epoch_loss += float(loss.detach()) * len(idx)
            epoch_correct += int((predicted_classes(logits) == yb.numpy()).sum())
            global_step += 1
            if max_steps is not None and global_step >= max_steps:
                break

        val_result = evaluate_model(model, val_clips, num_classes=spec.num_classes)
        history.train_loss.append(epoch_loss / n)
        history.train_accuracy.append(epoch_correct / n)
        history.val_accuracy.append(val_result.accuracy)
        history.learning_rate.append(last_lr)
        if val_result.accuracy > best_acc:
            best_acc = val_result.accuracy
            best_state = copy.deepcopy(model.state_dict())
            history.best_epoch = epoch
        if max_steps is not None and global_step >= max_steps:
            break

    history.wall_time_s = time.time() - start
    checkpoint = Checkpoint(
        spec=spec,
        state=best_state,
        seed=config.seed,
        config_digest=config.digest(),
        best_val_accuracy=best_acc,
        best_epoch=history.best_epoch,
    )
    return checkpoint, history


def evaluate_model(
    model_or_checkpoint,
    clips: list[VideoClip],
    batch_size: int = 16,
    num_classes: int = 9,
) -> EvalResult:
    """Accuracy, confusion matrix and per-illumination accuracies."""
    if isinstance(model_or_checkpoint, Checkpoint):
        model = model_or_checkpoint.build()
        num_classes = model_or_checkpoint.spec.num_classes
    else:
        model = model_or_checkpoint
    x, y, illum = clips_to_tensors(clips)
    model.eval()
    preds = np.empty(len(clips), dtype=np.int64)
    with torch.no_grad():
        for start in range(0, len(clips), batch_size):
            logits = model(x[start : start + batch_size])
            preds[start : start + batch_size] = predicted_classes(logits)
    confusion = ConfusionMatrix.empty(num_classes)
    for t, p in zip(y.numpy(), preds):
        confusion.add(int(t), int(p))
    per_illum = {}
    for level in sorted(set(illum.tolist())):
        if level < 0:
            continue
        mask = illum == level
        per_illum[int(level)] = float(np.mean(preds[mask] == y.numpy()[mask]))
    return EvalResult(accuracy=confusion.accuracy(), confusion=confusion, per_illumination=per_illum)


# ---------------------------------------------------------------------------
# experiment grid


VARIANTS = ("original", "lensless", "admm", "unet")


@dataclass(frozen=True)
class GridCell:
    name: str
    variant: str
    model_kind: str = "raw3dnet"
    sampling: SampleSpec | None = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.model_kind not in ("resnet3d", "raw3dnet"):
            raise ValueError(f"grid cells train resnet3d or raw3dnet, got {self.model_kind!r}")


@dataclass
class ExperimentReport:
    rows: list[dict]
    meta: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps({"meta": self.meta, "rows": self.rows}, indent=2, sort_keys=True)

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_json())
        return path

    def to_csv(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        fields = ["name", "variant", "model", "sampling", "valid_pixels", "accuracy", "seed"]
        with path.open("w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=fields, extrasaction="ignore")
            writer.writeheader()
            for row in self.rows:
                writer.writerow(row)
        return path


def materialize_variant(
    scene_sets: dict[str, list[VideoClip]],
    variant: str,
    psf: PointSpreadFunction | None = None,
    noise: NoiseSpec = NoiseSpec(),
    geometry: SensorGeometry | None = None,
    admm_params: AdmmParams = AdmmParams(),
    restorer_spec: ModelSpec | None = None,
    restorer_steps: int = 300,
    seed: int = 0,
) -> dict[str, list[VideoClip]]:
    """Build one comparison dataset from scene clips.

    ``scene_sets`` maps split name -> scene clips. Lensless rendering uses
    the camera simulator; raw values are min-max normalized from the train
    split. The U-Net variant trains the restorer on train-split pairs.
    """
    if variant == "original":
        return scene_sets
    if psf is None:
        raise TrainingError(f"variant {variant!r} needs a PSF")

    raw_sets = {
        split: [simulate_video(c, psf, noise, geometry) for c in clips]
        for split, clips in scene_sets.items()
    }
    if variant == "admm":
        return {
            split: [reconstruct_clip(c, psf, admm_params, geometry) for c in clips]
            for split, clips in raw_sets.items()
        }

    ordered = sorted(raw_sets)
    normalized = minmax_normalize(raw_sets["train"], *[raw_sets[s] for s in ordered if s != "train"])
    norm_sets = {"train": normalized[0]}
    norm_sets.update({s: normalized[1 + i] for i, s in enumerate(s for s in ordered if s != "train")})

    if variant == "lensless":
        return norm_sets

    # unet: restore each normalized raw frame with a train-split-fitted net
    sample = scene_sets["train"][0]
    h, w = sample.frame_shape
    if restorer_spec is None:
        restorer_spec = ModelSpec(kind="unet_restorer", height=h, width=w, unet_width=16, seed=seed)
    restorer = train_restorer(
        norm_sets["train"], scene_sets["train"], restorer_spec, steps=restorer_steps, seed=seed
    )
    return {
        split: [restore_clip(restorer, c) for c in clips] for split, clips in norm_sets.items()
    }


def train_restorer(
    raw_clips: list[VideoClip],
    scene_clips: list[VideoClip],
    spec: ModelSpec,
    steps: int = 300,
    batch_size: int = 16,
    lr: float = 2e-3,
    seed: int = 0,
) -> nn.Module:
    """Fit the U-Net restorer with per-pixel MSE on (raw, scene) frame pairs."""
    raw = torch.from_numpy(np.concatenate([c.frames for c in raw_clips])).unsqueeze(1)
    scene = torch.from_numpy(np.concatenate([c.frames for c in scene_clips])).unsqueeze(1)
    if raw.shape != scene.shape:
        raise TrainingError(f"raw/scene pair shapes differ: {raw.shape} vs {scene.shape}")
    torch.manual_seed(derive_seed(seed, "restorer"))
    model = build_model(spec)
    optimizer = torch.optim.Adam(model.parameters(), lr=lr)
    n = raw.shape[0]
    rng = rng_for(seed, "restorer-batches")
    model.train()
    for _ in range(steps):
        idx = rng.integers(0, n, size=min(batch_size, n))
        optimizer.zero_grad()
        loss = F.mse_loss(model(raw[idx]), scene[idx])
        if not torch.isfinite(loss):
            raise TrainingError("non-finite restorer loss")
        loss.backward()
        optimizer.step()
    model.eval()
    return model


def restore_clip(restorer: nn.Module, clip: VideoClip) -> VideoClip:
    with torch.no_grad():
        frames = restorer(torch.from_numpy(clip.frames).unsqueeze(1)).squeeze(1).numpy()
    return VideoClip(
        frames=frames.astype(np.float32),
        kind="reconstructed",
        label=clip.label,
        parent_id=clip.parent_id,
        illumination=clip.illumination,
    )


def _run_grid_cell(
    cell: GridCell,
    variant_sets: dict[str, dict[str, list[VideoClip]]],
    model_template: ModelSpec,
    train_config: TrainConfig,
    max_steps: int | None,
) -> dict:
    if cell.variant not in variant_sets:
        raise TrainingError(f"cell {cell.name!r}: variant {cell.variant!r} not materialized")
    sets = variant_sets[cell.variant]
    if cell.sampling is not None and cell.sampling.method != "none":
        h, w = sets["train"][0].frame_shape
        mask = make_mask(cell.sampling, (w, h))
        sets = {
            split: [downsample_clip(c, cell.sampling, mask) for c in clips]
            for split, clips in sets.items()
        }
    length, h, w = sets["train"][0].frames.shape
    spec = ModelSpec(
        kind=cell.model_kind,
        height=h,
        width=w,
        clip_len=length,
        num_classes=model_template.num_classes,
        sfe_width=model_template.sfe_width,
        resnet_widths=model_template.resnet_widths,
        seed=model_template.seed,
    )
    checkpoint, history = train_model(spec, sets["train"], sets["val"], train_config, max_steps=max_steps)
    result = evaluate_model(checkpoint, sets["test"])
    budget = cell.sampling.valid_pixels() if cell.sampling and cell.sampling.method != "none" else h * w
    return {
        "name": cell.name,
        "variant": cell.variant,
        "model": cell.model_kind,
        "sampling": cell.sampling.to_dict() if cell.sampling else None,
        "valid_pixels": budget,
        "accuracy": result.accuracy,
        "confusion": result.confusion.to_list(),
        "per_illumination": result.per_illumination,
        "best_val_accuracy": checkpoint.best_val_accuracy,
        "best_epoch": checkpoint.best_epoch,
        "seed": train_config.seed,
    }


def run_experiment_grid(
    cells: list[GridCell],
    variant_sets: dict[str, dict[str, list[VideoClip]]],
    model_template: ModelSpec,
    train_config: TrainConfig,
    max_steps: int | None = None,
    parallel: int = 1,
) -> ExperimentReport:
    """Train and evaluate one classifier per cell over prebuilt variants.

    Cells share no mutable state; ``parallel`` > 1 runs them concurrently
    with row order preserved. Results do not depend on scheduling.
    """
    if parallel > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=parallel) as pool:
            rows = list(
                pool.map(
                    lambda cell: _run_grid_cell(cell, variant_sets, model_template, train_config, max_steps),
                    cells,
                )
            )
    else:
        rows = [_run_grid_cell(cell, variant_sets, model_template, train_config, max_steps) for cell in cells]
    return ExperimentReport(rows=rows, meta={"config_digest": train_config.digest()})
