"""Video clips: the unit of classification, plus on-disk clip stores.

A clip is a fixed-length stack of single-channel frames in [0, 1]. Clip
stores are directories of one ``.npz`` per clip plus an ``index.json``
listing ids, labels, illumination and provenance; every pipeline stage
(simulate, downsample, reconstruct, train, eval) reads and writes them.
"""

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

DEFAULT_CLIP_LEN = 8

CLIP_KINDS = ("scene", "raw", "reconstructed")


@dataclass
class VideoClip:
    """L frames of H x W grayscale data, values in [0, 1]."""

    frames: np.ndarray
    kind: str = "scene"
    label: int | None = None
    parent_id: str | None = None
    illumination: int | None = None

    def __post_init__(self):
        self.frames = np.asarray(self.frames, dtype=np.float32)
        if self.frames.ndim != 3:
            raise ValueError(f"clip frames must be (L, H, W), got {self.frames.shape}")
        if self.kind not in CLIP_KINDS:
            raise ValueError(f"unknown clip kind {self.kind!r}")
        lo = float(self.frames.min(initial=0.0))
        hi = float(self.frames.max(initial=0.0))
        if lo < -1e-6:
            raise ValueError(f"clip values below 0: min {lo}")
        # raw measurements may exceed 1 before dataset-level normalization
        # (clamped sensor noise); scene/reconstructed clips must not.
        if self.kind != "raw" and hi > 1.0 + 1e-6:
            raise ValueError(f"clip values above 1: max {hi}")

    @property
    def length(self) -> int:
        return self.frames.shape[0]

    @property
    def frame_shape(self) -> tuple[int, int]:
        return self.frames.shape[1], self.frames.shape[2]

    def with_frames(self, frames: np.ndarray, kind: str | None = None) -> "VideoClip":
        return replace(self, frames=frames, kind=kind or self.kind)


@dataclass
class ClipStore:
    """In-memory view of a clip directory: ids in index order."""

    root: Path
    ids: list[str]
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.ids)

    def load(self, clip_id: str) -> VideoClip:
        with np.load(self.root / f"{clip_id}.npz") as data:
            label = int(data["label"]) if int(data["label"]) >= 0 else None
            illum = int(data["illumination"]) if int(data["illumination"]) >= 0 else None
            return VideoClip(
                frames=data["frames"],
                kind=str(data["kind"]),
                label=label,
                parent_id=str(data["parent_id"]) or None,
                illumination=illum,
            )

    def __iter__(self):
        for clip_id in self.ids:
            yield clip_id, self.load(clip_id)


def save_clip(directory: Path, clip_id: str, clip: VideoClip) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / f"{clip_id}.npz"
    np.savez(
        path,
        frames=clip.frames.astype(np.float32),
        kind=clip.kind,
        label=-1 if clip.label is None else int(clip.label),
        parent_id=clip.parent_id or "",
        illumination=-1 if clip.illumination is None else int(clip.illumination),
    )
    return path


def write_clip_store(directory: Path, clips: dict[str, VideoClip], meta: dict | None = None) -> ClipStore:
    """Write clips plus an index; ids are stored sorted for determinism."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    ids = sorted(clips)
    for clip_id in ids:
        save_clip(directory, clip_id, clips[clip_id])
    index = {
        "ids": ids,
        "meta": meta or {},
        "entries": {
            cid: {
                "kind": clips[cid].kind,
                "label": clips[cid].label,
                "parent_id": clips[cid].parent_id,
                "illumination": clips[cid].illumination,
                "shape": list(clips[cid].frames.shape),
            }
            for cid in ids
        },
    }
    (directory / "index.json").write_text(json.dumps(index, indent=2, sort_keys=True))
    return ClipStore(root=directory, ids=ids, meta=index["meta"])


def open_clip_store(directory: Path) -> ClipStore:
    directory = Path(directory)
    index_path = directory / "index.json"
    if not index_path.exists():
        raise FileNotFoundError(f"not a clip store (missing index.json): {directory}")
    index = json.loads(index_path.read_text())
    return ClipStore(root=directory, ids=list(index["ids"]), meta=index.get("meta", {}))
