"""Synthetic gesture fixtures: learnable stand-ins for the real dataset.

Renders sequences of a bright hand-like blob (3 silhouettes x 3 motions,
mirroring the shape x motion class grid) on a dark ground under 5
illumination prototypes, written in the standard on-disk layout so the
ingest path is exercised end to end. Desk-scale tests and the demo
configs rely on these; counts and labels are fully deterministic.
"""

from pathlib import Path

import numpy as np
from PIL import Image

from .seeding import derive_seed, rng_for

SHAPE_NAMES = ("flat", "spread", "v")
MOTION_NAMES = ("leftward", "rightward", "contract")

# one light source per illumination prototype: right-top, left-top,
# left-bottom, right-bottom, center (as (row, col) fractions)
ILLUMINATION_ANCHORS = ((0.25, 0.75), (0.25, 0.25), (0.75, 0.25), (0.75, 0.75), (0.5, 0.5))


def illumination_field(illumination_id: int, frame_shape: tuple[int, int]) -> np.ndarray:
    """Spatially uneven lighting: a soft spotlight at the prototype anchor."""
    h, w = frame_shape
    r0, c0 = ILLUMINATION_ANCHORS[illumination_id]
    y, x = np.mgrid[0:h, 0:w]
    d2 = (y / h - r0) ** 2 + (x / w - c0) ** 2
    return 0.3 + 0.7 * np.exp(-d2 / (2.0 * 0.28**2))


def _silhouette(shape_id: int, size: int) -> np.ndarray:
    """Unit-intensity silhouette on a size x size patch."""
    y, x = np.mgrid[0:size, 0:size]
    cy = cx = (size - 1) / 2.0
    r = size / 2.2
    if shape_id == 0:  # flat: wide ellipse
        mask = ((y - cy) / (0.45 * r)) ** 2 + ((x - cx) / r) ** 2 <= 1.0
    elif shape_id == 1:  # spread: disk with radial fingers
        disk = (y - cy) ** 2 + (x - cx) ** 2 <= (0.55 * r) ** 2
        ang = np.arctan2(y - cy, x - cx)
        fingers = ((y - cy) ** 2 + (x - cx) ** 2 <= r**2) & (np.cos(5 * ang) > 0.35)
        mask = disk | fingers
    else:  # v: two diverging bars
        d1 = np.abs((x - cx) - 0.9 * (y - cy))
        d2 = np.abs((x - cx) + 0.9 * (y - cy))
        mask = ((d1 < 0.22 * r) | (d2 < 0.22 * r)) & (np.abs(y - cy) <= r)
    return mask.astype(np.float64)


def render_frame(
    shape_id: int,
    motion_id: int,
    t: float,
    frame_shape: tuple[int, int],
    illumination_id: int = 0,
    background: float = 0.05,
) -> np.ndarray:
    """Render phase t in [0, 1] of a gesture; values in [0, 1]."""
    h, w = frame_shape
    size = int(0.5 * min(h, w))
    scale = 1.0
    span = 0.30 * w
    if motion_id == 0:
        dx, dy = -span * (t - 0.5) * 2, 0.0
    elif motion_id == 1:
        dx, dy = span * (t - 0.5) * 2, 0.0
    else:
        dx = dy = 0.0
        scale = 1.0 - 0.55 * t
    patch_size = max(4, int(round(size * scale)))
    patch = _silhouette(shape_id, patch_size)
    frame = np.full((h, w), background)
    top = int(round((h - patch_size) / 2 + dy))
    left = int(round((w - patch_size) / 2 + dx))
    t0, l0 = max(top, 0), max(left, 0)
    t1, l1 = min(top + patch_size, h), min(left + patch_size, w)
    if t1 > t0 and l1 > l0:
        frame[t0:t1, l0:l1] = np.maximum(
            frame[t0:t1, l0:l1], patch[t0 - top : t1 - top, l0 - left : l1 - left]
        )
    return np.clip(frame * illumination_field(illumination_id, frame_shape), 0.0, 1.0)


def render_sequence(
    shape_id: int,
    motion_id: int,
    n_frames: int,
    frame_shape: tuple[int, int],
    illumination_id: int = 0,
    seed: int = 0,
) -> np.ndarray:
    """(N, H, W) gesture sequence with a small seeded brightness wobble."""
    rng = rng_for(seed, "sequence", shape_id, motion_id, illumination_id)
    wobble = 1.0 + 0.03 * rng.standard_normal(n_frames)
    frames = [
        np.clip(
            render_frame(shape_id, motion_id, t / max(n_frames - 1, 1), frame_shape, illumination_id)
            * wobble[t],
            0.0,
            1.0,
        )
        for t in range(n_frames)
    ]
    return np.stack(frames)


def write_synthetic_dataset(
    root: str | Path,
    classes: int = 9,
    sequences_per_class: int = 5,
    n_frames: int = 56,
    frame_shape: tuple[int, int] = (48, 64),
    illuminations: int = 5,
    seed: int = 0,
) -> Path:
    """Write a Cambridge-layout fixture tree of PNG frame folders."""
    if not 1 <= classes <= 9:
        raise ValueError("classes must be in 1..9")
    root = Path(root)
    for class_id in range(classes):
        shape_id, motion_id = class_id // 3, class_id % 3
        class_dir = root / f"{SHAPE_NAMES[shape_id]}_{MOTION_NAMES[motion_id]}"
        for k in range(sequences_per_class):
            illum = k % illuminations
            seq_dir = class_dir / f"seq{k:03d}_Set{illum + 1}"
            seq_dir.mkdir(parents=True, exist_ok=True)
            frames = render_sequence(
                shape_id, motion_id, n_frames, frame_shape, illum,
                seed=derive_seed(seed, "fixture", class_id, k),
            )
            for t in range(n_frames):
                img = Image.fromarray((frames[t] * 255).round().astype(np.uint8))
                img.save(seq_dir / f"frame_{t:04d}.png")
    return root
