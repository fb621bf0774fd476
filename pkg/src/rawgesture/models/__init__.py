"""Network definitions: per-frame spatial feature extractor, 3-D residual
video classifier, their end-to-end composition, and the U-Net restorer
baseline, plus seeded construction, shape tables, and checkpoint IO."""

from .nets import (
    ModelSpec,
    ModelSpecError,
    Raw3dNet,
    ResNet3d,
    SpatialFeatureExtractor,
    UNetRestorer,
    build_model,
    init_parameters,
    parameter_count,
)
from .describe import describe_model, format_shape, render_shape_table
from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint

__all__ = [
    "Checkpoint",
    "ModelSpec",
    "ModelSpecError",
    "Raw3dNet",
    "ResNet3d",
    "SpatialFeatureExtractor",
    "UNetRestorer",
    "build_model",
    "describe_model",
    "format_shape",
    "init_parameters",
    "load_checkpoint",
    "parameter_count",
    "render_shape_table",
    "save_checkpoint",
]
