"""Reconstruction-free gesture recognition on raw lensless video.

Subpackages cover the full pipeline: `optics` (camera simulator),
`dataset` (gesture-video ingest and splits), `sampling` (raw-measurement
down-sampling codecs), `models` (SFE / 3D-ResNet / Raw3dNet / U-Net
restorer), `recon` (ADMM reconstruction baseline), `training`
(train/eval/experiment grids), `analysis` (embedding clustering and
error attribution), `service` (HTTP API) and `cli` (thin client).
"""

__version__ = "0.1.0"
