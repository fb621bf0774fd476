"""Experiment configuration: schema-versioned, strict, YAML-backed.

One document drives every pipeline stage. Unknown keys are rejected,
``--set section.key=value`` overrides are applied before validation, and
a single top-level seed fans out to every stochastic component through
labeled hashing.
"""

from pathlib import Path

import yaml
from pydantic import BaseModel, ConfigDict, Field, field_validator

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    pass


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SyntheticSection(_Section):
    classes: int = 9
    sequences_per_class: int = 5
    n_frames: int = 56
    frame_h: int = 48
    frame_w: int = 64
    illuminations: int = 5


class DatasetSection(_Section):
    root: str | None = None
    layout: str = "cambridge"
    synthetic: SyntheticSection | None = None
    test_fraction: float = 0.20
    val_fraction_of_train: float = 0.15
    clip_len: int = 8
    max_subvideos_per_sequence: int = 4
    scene_h: int = 240
    scene_w: int = 320
    color_policy: str = "luma"

    @field_validator("layout")
    @classmethod
    def _layout(cls, v):
        if v not in ("cambridge", "generic"):
            raise ValueError(f"layout must be cambridge or generic, got {v!r}")
        return v

    @field_validator("color_policy")
    @classmethod
    def _color(cls, v):
        if v not in ("luma", "first-channel"):
            raise ValueError(f"color_policy must be luma or first-channel, got {v!r}")
        return v


class PsfSyntheticSection(_Section):
    density: float = 0.01
    blur_sigma: float = 1.5
    seed: int | None = None


class NoiseSection(_Section):
    model: str = "none"
    sigma: float = 0.0
    seed: int | None = None


class OpticsSection(_Section):
    psf_path: str | None = None
    psf_synthetic: PsfSyntheticSection = Field(default_factory=PsfSyntheticSection)
    psf_h: int | None = None
    psf_w: int | None = None
    sensor_h: int | None = None
    sensor_w: int | None = None
    pad_h: int | None = None
    pad_w: int | None = None
    noise: NoiseSection = Field(default_factory=NoiseSection)


class SamplingSection(_Section):
    method: str = "none"
    target_w: int = 100
    target_h: int = 75
    keep_fraction: float = 0.25
    seed: int | None = None
    input_dir: str | None = None


class ModelSection(_Section):
    kind: str = "raw3dnet"
    num_classes: int = 9
    sfe_width: int = 16
    resnet_widths: list[int] = Field(default_factory=lambda: [64, 128, 256])
    unet_width: int = 32
    unet_depth: int = 3
    seed: int | None = None

    @field_validator("resnet_widths")
    @classmethod
    def _widths(cls, v):
        if len(v) != 3 or any(w < 1 for w in v):
            raise ValueError("resnet_widths must be three positive integers")
        return v


class GridCellSection(_Section):
    name: str
    variant: str
    model: str = "raw3dnet"
    sampling: SamplingSection | None = None


class TrainingSection(_Section):
    epochs: int = 100
    batch_size: int = 12
    beta1: float = 0.9
    beta2: float = 0.99
    weight_decay: float = 0.001
    lr_start: float = 1e-3
    lr_end: float = 1e-5
    schedule: str = "linear"
    loss: str = "cross-entropy"
    seed: int | None = None
    max_steps: int | None = None
    data_dir: str | None = None
    checkpoint_path: str | None = None
    grid: list[GridCellSection] = Field(default_factory=list)
    parallel_cells: int = 1
    restorer_steps: int = 300


class ReconSection(_Section):
    rho_data: float = 1.0
    rho_tv: float = 1.0
    rho_nonneg: float = 1.0
    tv_weight: float = 1e-3
    max_iters: int = 200
    primal_tol: float = 1e-3
    dual_tol: float = 1e-3
    adaptive_rho: bool = False
    input_dir: str | None = None
    emit_residuals: bool = False


class AnalysisSection(_Section):
    frame_index: int = 0
    embeddings_path: str | None = None
    checkpoint_path: str | None = None
    input_dir: str | None = None
    split: str | None = None
    confusion_path: str | None = None
    evaluated_classes: list[int] | None = None
    candidate_classes: list[int] | None = None


class OutputSection(_Section):
    dir: str = "out"
    force: bool = False
    emit_panels: bool = False


class ExperimentConfig(_Section):
    schema_version: int = SCHEMA_VERSION
    seed: int = 0
    dataset: DatasetSection = Field(default_factory=DatasetSection)
    optics: OpticsSection = Field(default_factory=OpticsSection)
    sampling: SamplingSection = Field(default_factory=SamplingSection)
    model: ModelSection = Field(default_factory=ModelSection)
    training: TrainingSection = Field(default_factory=TrainingSection)
    recon: ReconSection = Field(default_factory=ReconSection)
    analysis: AnalysisSection = Field(default_factory=AnalysisSection)
    output: OutputSection = Field(default_factory=OutputSection)

    @field_validator("schema_version")
    @classmethod
    def _version(cls, v):
        if v != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema_version {v}; this build reads {SCHEMA_VERSION}")
        return v

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.model_dump(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        try:
            return cls.model_validate(data)
        except Exception as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_yaml(cls, text: str) -> "ExperimentConfig":
        data = yaml.safe_load(text) or {}
        if not isinstance(data, dict):
            raise ConfigError("config document must be a mapping")
        return cls.from_dict(data)

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        return cls.from_yaml(path.read_text())

    def check_paths(self, require_dataset: bool = False) -> list[str]:
        """Return messages for unresolvable input paths."""
        problems = []
        if self.dataset.root is not None and not Path(self.dataset.root).is_dir():
            problems.append(f"dataset.root does not exist: {self.dataset.root}")
        if require_dataset and self.dataset.root is None and self.dataset.synthetic is None:
            problems.append("dataset.root is unset and no dataset.synthetic block is given")
        if self.optics.psf_path is not None and not Path(self.optics.psf_path).exists():
            problems.append(f"optics.psf_path does not exist: {self.optics.psf_path}")
        for name, value in (
            ("sampling.input_dir", self.sampling.input_dir),
            ("recon.input_dir", self.recon.input_dir),
            ("training.data_dir", self.training.data_dir),
            ("analysis.input_dir", self.analysis.input_dir),
        ):
            if value is not None and not Path(value).is_dir():
                problems.append(f"{name} does not exist: {value}")
        for name, value in (
            ("training.checkpoint_path", self.training.checkpoint_path),
            ("analysis.embeddings_path", self.analysis.embeddings_path),
            ("analysis.checkpoint_path", self.analysis.checkpoint_path),
            ("analysis.confusion_path", self.analysis.confusion_path),
        ):
            if value is not None and not Path(value).exists():
                problems.append(f"{name} does not exist: {value}")
        return problems


def parse_override(expr: str) -> tuple[list[str], object]:
    """Parse one ``section.key=value`` override; values are YAML-typed."""
    if "=" not in expr:
        raise ConfigError(f"override must look like section.key=value, got {expr!r}")
    dotted, raw = expr.split("=", 1)
    keys = [k for k in dotted.strip().split(".") if k]
    if not keys:
        raise ConfigError(f"empty key path in override {expr!r}")
    value = yaml.safe_load(raw)
    if isinstance(value, str):
        # YAML 1.1 leaves "1e-4" a string; numbers on the CLI should be numbers
        try:
            value = int(value)
        except ValueError:
            try:
                value = float(value)
            except ValueError:
                pass
    return keys, value


def apply_overrides(data: dict, overrides: list[str] | dict | None) -> dict:
    """Apply dotted-path overrides onto a raw config mapping."""
    if not overrides:
        return data
    if isinstance(overrides, dict):
        items = [(k.split("."), v) for k, v in overrides.items()]
    else:
        items = [parse_override(o) for o in overrides]
    for keys, value in items:
        node = data
        for key in keys[:-1]:
            nxt = node.get(key)
            if nxt is None:
                nxt = node[key] = {}
            elif not isinstance(nxt, dict):
                raise ConfigError(f"cannot override through non-mapping key {key!r}")
            node = nxt
        node[keys[-1]] = value
    return data
