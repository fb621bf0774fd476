"""Raw-measurement down-sampling codecs.

Four schemes reduce the pixel count of each raw frame while keeping the
frame count fixed:

* ``resize``  - bilinear interpolation to the target size
* ``uniform`` - center-crop to stride x target, then strided gather
* ``random``  - seeded gather of target-many distinct source pixels,
  rearranged by a seeded permutation into the target grid
* ``erase``   - bilinear resize to the target, then zero all but a seeded
  ``keep_fraction`` of positions (survivors keep position and value)

A mask is built once per experiment seed and applied identically to every
frame of every clip, so the retained-pixel pattern is stable across time.
Bilinear convention: half-pixel centers, align-corners false (OpenCV).
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

import cv2
import numpy as np

from .clips import VideoClip
from .seeding import derive_seed

METHODS = ("none", "resize", "uniform", "random", "erase")


class SamplingError(ValueError):
    pass


@dataclass(frozen=True)
class SampleSpec:
    """Down-sampling scheme; targets follow the (width, height) convention."""

    method: str = "none"
    target_w: int = 100
    target_h: int = 75
    keep_fraction: float = 0.25
    seed: int = 0

    def __post_init__(self):
        if self.method not in METHODS:
            raise SamplingError(f"unknown sampling method {self.method!r}")
        if self.method != "none" and (self.target_w <= 0 or self.target_h <= 0):
            raise SamplingError("target must be positive")
        if self.method == "erase" and not 0.0 < self.keep_fraction <= 1.0:
            raise SamplingError("keep_fraction must be in (0, 1]")

    @property
    def target(self) -> tuple[int, int]:
        return self.target_w, self.target_h

    def valid_pixels(self) -> int:
        """Number of values the scheme retains per frame."""
        if self.method == "erase":
            return int(round(self.keep_fraction * self.target_w * self.target_h))
        return self.target_w * self.target_h

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "target_w": self.target_w,
            "target_h": self.target_h,
            "keep_fraction": self.keep_fraction,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SampleSpec":
        return cls(
            method=d.get("method", "none"),
            target_w=int(d.get("target_w", 100)),
            target_h=int(d.get("target_h", 75)),
            keep_fraction=float(d.get("keep_fraction", 0.25)),
            seed=int(d.get("seed", 0)),
        )


@dataclass(frozen=True)
class SamplingMask:
    """Frozen per-experiment index map; identical for every frame.

    ``rows``/``cols`` list source coordinates in destination raster order
    (uniform, random); ``keep`` flags retained positions on the resized
    grid (erase). ``resize`` and ``none`` carry no index map.
    """

    method: str
    source_w: int
    source_h: int
    target_w: int
    target_h: int
    seed: int
    rows: np.ndarray | None = None
    cols: np.ndarray | None = None
    keep: np.ndarray | None = None
    stride: int | None = None
    keep_fraction: float = field(default=0.25)

    def to_json(self) -> str:
        payload = {
            "method": self.method,
            "source_w": self.source_w,
            "source_h": self.source_h,
            "target_w": self.target_w,
            "target_h": self.target_h,
            "seed": self.seed,
            "stride": self.stride,
            "keep_fraction": self.keep_fraction,
            "rows": None if self.rows is None else self.rows.tolist(),
            "cols": None if self.cols is None else self.cols.tolist(),
            "keep": None if self.keep is None else self.keep.astype(int).tolist(),
        }
        return json.dumps(payload)

    @classmethod
    def from_json(cls, text: str) -> "SamplingMask":
        d = json.loads(text)
        return cls(
            method=d["method"],
            source_w=d["source_w"],
            source_h=d["source_h"],
            target_w=d["target_w"],
            target_h=d["target_h"],
            seed=d["seed"],
            stride=d["stride"],
            keep_fraction=d["keep_fraction"],
            rows=None if d["rows"] is None else np.asarray(d["rows"], dtype=np.int64),
            cols=None if d["cols"] is None else np.asarray(d["cols"], dtype=np.int64),
            keep=None if d["keep"] is None else np.asarray(d["keep"], dtype=bool),
        )

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        path.write_text(self.to_json())
        return path


def _bilinear(frame: np.ndarray, target_w: int, target_h: int) -> np.ndarray:
    return cv2.resize(frame.astype(np.float32), (target_w, target_h), interpolation=cv2.INTER_LINEAR)


def make_mask(spec: SampleSpec, source: tuple[int, int] = (320, 240)) -> SamplingMask:
    """Build the per-experiment mask for a (source_w, source_h) frame geometry."""
    src_w, src_h = source
    base = dict(
        method=spec.method,
        source_w=src_w,
        source_h=src_h,
        target_w=spec.target_w,
        target_h=spec.target_h,
        seed=spec.seed,
        keep_fraction=spec.keep_fraction,
    )

    if spec.method in ("none", "resize", "erase"):
        if spec.method != "none" and (spec.target_w > src_w or spec.target_h > src_h):
            raise SamplingError(f"target {spec.target} larger than source {source}")
        if spec.method == "erase":
            n_keep = int(round(spec.keep_fraction * spec.target_w * spec.target_h))
            rng = np.random.default_rng(derive_seed(spec.seed, "erase", src_w, src_h))
            flat = rng.choice(spec.target_w * spec.target_h, size=n_keep, replace=False)
            keep = np.zeros(spec.target_h * spec.target_w, dtype=bool)
            keep[flat] = True
            return SamplingMask(**base, keep=keep.reshape(spec.target_h, spec.target_w))
        return SamplingMask(**base)

    if spec.method == "uniform":
        stride = min(src_w // spec.target_w, src_h // spec.target_h)
        if stride < 1:
            raise SamplingError(f"target {spec.target} larger than source {source}")
        win_w, win_h = stride * spec.target_w, stride * spec.target_h
        top, left = (src_h - win_h) // 2, (src_w - win_w) // 2
        r = top + stride * np.arange(spec.target_h)
        c = left + stride * np.arange(spec.target_w)
        rows, cols = np.meshgrid(r, c, indexing="ij")
        return SamplingMask(**base, rows=rows.ravel(), cols=cols.ravel(), stride=stride)

    # random: distinct source pixels, then a seeded destination arrangement
    n = spec.target_w * spec.target_h
    if n > src_w * src_h:
        raise SamplingError(f"target {spec.target} larger than source {source}")
    rng = np.random.default_rng(derive_seed(spec.seed, "random", src_w, src_h))
    flat = rng.choice(src_w * src_h, size=n, replace=False)
    flat = flat[rng.permutation(n)]
    return SamplingMask(**base, rows=flat // src_w, cols=flat % src_w)


def downsample_frame(frame: np.ndarray, mask_or_spec: SamplingMask | SampleSpec) -> np.ndarray:
    """Reduce one raw frame; accepts a prebuilt mask or builds one from a spec."""
    frame = np.asarray(frame)
    if frame.ndim != 2:
        raise SamplingError(f"frame must be 2-D, got {frame.shape}")
    src_h, src_w = frame.shape
    mask = mask_or_spec if isinstance(mask_or_spec, SamplingMask) else make_mask(mask_or_spec, (src_w, src_h))
    if (mask.source_w, mask.source_h) != (src_w, src_h):
        raise SamplingError(
            f"frame {frame.shape} does not match mask source ({mask.source_h}, {mask.source_w})"
        )

    if mask.method == "none":
        return frame.copy()
    if mask.method == "resize":
        return _bilinear(frame, mask.target_w, mask.target_h)
    if mask.method == "erase":
        resized = _bilinear(frame, mask.target_w, mask.target_h)
        return np.where(mask.keep, resized, 0.0).astype(resized.dtype)
    gathered = frame[mask.rows, mask.cols]
    return gathered.reshape(mask.target_h, mask.target_w)


def downsample_clip(clip: VideoClip, spec: SampleSpec, mask: SamplingMask | None = None) -> VideoClip:
    """Apply one experiment mask to every frame of a clip."""
    h, w = clip.frame_shape
    if mask is None:
        mask = make_mask(spec, (w, h))
    frames = np.stack([downsample_frame(clip.frames[i], mask) for i in range(clip.length)])
    return clip.with_frames(frames.astype(np.float32))
