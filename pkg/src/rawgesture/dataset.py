"""Gesture-video dataset ingest, splits, and sub-video extraction.

Expected layout: ``root/<class_dir>/<sequence_dir>/<frames...>``. Class
directories encode the gesture as 3 hand shapes x 3 motions
(class_id = 3 * shape + motion, row-major); sequence directory names may
carry an illumination tag. Long sequences are cut into fixed-length
sub-videos by a deterministic strided scheme with seeded jitter, and
splits are stratified by class so every gesture appears in every split.
"""

import json
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

import cv2
import numpy as np
from PIL import Image

from .clips import DEFAULT_CLIP_LEN, VideoClip
from .seeding import derive_seed, rng_for

FRAME_EXTENSIONS = (".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff")

SHAPE_TOKENS = {"flat": 0, "spread": 1, "v": 2, "vshape": 2, "v-shape": 2}
MOTION_TOKENS = {"leftward": 0, "left": 0, "rightward": 1, "right": 1, "contract": 2}

_ILLUM_RE = re.compile(r"(?:set|illum|light)[\s_-]*(\d+)", re.IGNORECASE)


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class GestureSequence:
    id: str
    frame_paths: tuple[str, ...]
    class_id: int
    shape_id: int
    motion_id: int
    illumination_id: int

    def __post_init__(self):
        if self.class_id != 3 * self.shape_id + self.motion_id:
            raise DatasetError(
                f"{self.id}: class_id {self.class_id} != 3*shape({self.shape_id}) + motion({self.motion_id})"
            )
        if not 0 <= self.illumination_id <= 4:
            raise DatasetError(f"{self.id}: illumination_id {self.illumination_id} outside 0..4")

    @property
    def n_frames(self) -> int:
        return len(self.frame_paths)


@dataclass
class DatasetManifest:
    sequences: list[GestureSequence]
    split_assignment: dict[str, str] = field(default_factory=dict)
    seed: int = 0

    def by_split(self, split: str) -> list[GestureSequence]:
        return [s for s in self.sequences if self.split_assignment.get(s.id) == split]

    def classes(self) -> list[int]:
        return sorted({s.class_id for s in self.sequences})

    def illuminations(self) -> list[int]:
        return sorted({s.illumination_id for s in self.sequences})

    def get(self, seq_id: str) -> GestureSequence:
        for s in self.sequences:
            if s.id == seq_id:
                return s
        raise KeyError(seq_id)

    def to_json(self) -> str:
        return json.dumps(
            {
                "seed": self.seed,
                "sequences": [
                    {
                        "id": s.id,
                        "class": s.class_id,
                        "shape": s.shape_id,
                        "motion": s.motion_id,
                        "illumination": s.illumination_id,
                        "n_frames": s.n_frames,
                        "split": self.split_assignment.get(s.id),
                        "frame_paths": list(s.frame_paths),
                    }
                    for s in self.sequences
                ],
            },
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "DatasetManifest":
        d = json.loads(text)
        sequences = [
            GestureSequence(
                id=e["id"],
                frame_paths=tuple(e["frame_paths"]),
                class_id=e["class"],
                shape_id=e["shape"],
                motion_id=e["motion"],
                illumination_id=e["illumination"],
            )
            for e in d["sequences"]
        ]
        assignment = {e["id"]: e["split"] for e in d["sequences"] if e.get("split")}
        return cls(sequences=sequences, split_assignment=assignment, seed=d.get("seed", 0))

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        path.write_text(self.to_json())
        return path

    @classmethod
    def load(cls, path: str | Path) -> "DatasetManifest":
        return cls.from_json(Path(path).read_text())


@dataclass(frozen=True)
class SubVideo:
    parent_id: str
    frame_indices: tuple[int, ...]
    label: int

    def __post_init__(self):
        idx = self.frame_indices
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise DatasetError(f"{self.parent_id}: frame indices not strictly increasing: {idx}")
        if idx and idx[0] < 0:
            raise DatasetError(f"{self.parent_id}: negative frame index")


def _parse_class_dir(name: str, layout: str, position: int) -> tuple[int, int]:
    """Return (shape_id, motion_id) for a class directory."""
    lowered = name.lower()
    if layout == "cambridge":
        tokens = re.split(r"[\s_\-.]+", lowered)
        shape = next((SHAPE_TOKENS[t] for t in tokens if t in SHAPE_TOKENS), None)
        motion = next((MOTION_TOKENS[t] for t in tokens if t in MOTION_TOKENS), None)
        if shape is not None and motion is not None:
            return shape, motion
        digits = re.sub(r"\D", "", name)
        if digits:
            # 0-based ids 0..8; a bare "9" is read as 1-based class 9
            cid = int(digits)
            if cid == 9:
                cid = 8
            if 0 <= cid <= 8:
                return cid // 3, cid % 3
        raise DatasetError(f"unparseable Cambridge class directory {name!r}")
    # generic: class id by lexicographic position
    return position // 3, position % 3


def _parse_illumination(name: str) -> int:
    m = _ILLUM_RE.search(name)
    if not m:
        return 0
    value = int(m.group(1))
    if 1 <= value <= 5:
        return value - 1
    if 0 <= value <= 4:
        return value
    return 0


def _list_frames(seq_dir: Path) -> list[str]:
    frames = sorted(
        str(p) for p in seq_dir.iterdir() if p.is_file() and p.suffix.lower() in FRAME_EXTENSIONS
    )
    return frames


def scan_dataset(root: str | Path, layout: str = "cambridge", min_length: int = DEFAULT_CLIP_LEN) -> DatasetManifest:
    """Enumerate sequences under root; ordering is lexicographic by id."""
    if layout not in ("cambridge", "generic"):
        raise DatasetError(f"unknown layout {layout!r}")
    root = Path(root)
    if not root.is_dir():
        raise DatasetError(f"dataset root not found: {root}")
    class_dirs = sorted(d for d in root.iterdir() if d.is_dir())
    sequences = []
    for pos, class_dir in enumerate(class_dirs):
        shape_id, motion_id = _parse_class_dir(class_dir.name, layout, pos)
        for seq_dir in sorted(d for d in class_dir.iterdir() if d.is_dir()):
            frames = _list_frames(seq_dir)
            if not frames:
                continue
            if len(frames) < min_length:
                raise DatasetError(
                    f"sequence {class_dir.name}/{seq_dir.name} has {len(frames)} frames (< {min_length})"
                )
            sequences.append(
                GestureSequence(
                    id=f"{class_dir.name}/{seq_dir.name}",
                    frame_paths=tuple(frames),
                    class_id=3 * shape_id + motion_id,
                    shape_id=shape_id,
                    motion_id=motion_id,
                    illumination_id=_parse_illumination(seq_dir.name),
                )
            )
    if not sequences:
        raise DatasetError(f"no sequences found under {root}")
    sequences.sort(key=lambda s: s.id)
    return DatasetManifest(sequences=sequences)


def split_dataset(
    manifest: DatasetManifest,
    test_fraction: float = 0.20,
    val_fraction_of_train: float = 0.15,
    seed: int = 0,
) -> DatasetManifest:
    """Deterministic class-stratified train/val/test assignment."""
    for name, frac in (("test_fraction", test_fraction), ("val_fraction_of_train", val_fraction_of_train)):
        if not 0.0 < frac < 1.0:
            raise DatasetError(f"{name} must be in (0, 1), got {frac}")
    assignment: dict[str, str] = {}
    by_class: dict[int, list[str]] = {}
    for s in manifest.sequences:
        by_class.setdefault(s.class_id, []).append(s.id)
    for class_id, ids in sorted(by_class.items()):
        ids = sorted(ids)
        n = len(ids)
        n_test = int(np.floor(test_fraction * n + 0.5))
        n_test = max(n_test, 1)
        n_val = int(np.floor(val_fraction_of_train * (n - n_test) + 0.5))
        if n_val == 0 and n - n_test >= 2:
            n_val = 1  # keep every class usable for model selection
        if n - n_test - n_val < 1:
            raise DatasetError(
                f"class {class_id} has only {n} sequences; cannot fill train/val/test"
            )
        order = rng_for(seed, "split", class_id).permutation(n)
        shuffled = [ids[i] for i in order]
        for sid in shuffled[:n_test]:
            assignment[sid] = "test"
        for sid in shuffled[n_test : n_test + n_val]:
            assignment[sid] = "val"
        for sid in shuffled[n_test + n_val :]:
            assignment[sid] = "train"
    return replace(manifest, split_assignment=assignment, seed=seed)


def extract_subvideos(
    seq: GestureSequence,
    clip_len: int = DEFAULT_CLIP_LEN,
    max_per_sequence: int = 4,
    seed: int = 0,
) -> list[SubVideo]:
    """Strided sub-videos with seeded jitter.

    For stride s = floor(N / L), sub-video j (j < min(s, max_per_sequence))
    takes indices j + s*t + jitter with jitter drawn per element from
    [0, s-1]; the last index is clamped to N-1. Jitter never breaks strict
    monotonicity because consecutive base indices differ by exactly s.
    """
    n = seq.n_frames
    if n < clip_len:
        raise DatasetError(f"{seq.id}: {n} frames < clip length {clip_len}")
    stride = n // clip_len
    count = min(stride, max_per_sequence)
    subs = []
    for j in range(count):
        jitter = rng_for(seed, "subvideo", seq.id, j).integers(0, stride, size=clip_len)
        indices = [min(j + stride * t + int(jitter[t]), n - 1) for t in range(clip_len)]
        subs.append(SubVideo(parent_id=seq.id, frame_indices=tuple(indices), label=seq.class_id))
    return subs


def _load_frame_gray(path: str, color_policy: str) -> np.ndarray:
    try:
        with Image.open(path) as img:
            if color_policy == "luma":
                arr = np.asarray(img.convert("RGB"), dtype=np.float64)
                gray = 0.299 * arr[..., 0] + 0.587 * arr[..., 1] + 0.114 * arr[..., 2]
            elif color_policy == "first-channel":
                arr = np.asarray(img, dtype=np.float64)
                gray = arr[..., 0] if arr.ndim == 3 else arr
            else:
                raise DatasetError(f"unknown color policy {color_policy!r}")
    except DatasetError:
        raise
    except Exception as exc:
        raise DatasetError(f"cannot decode frame {path}: {exc}") from exc
    return gray / 255.0


def to_clip(
    sub: SubVideo,
    seq: GestureSequence,
    color_policy: str = "luma",
    scene_shape: tuple[int, int] = (240, 320),
) -> VideoClip:
    """Decode a sub-video into a normalized single-channel clip."""
    if sub.parent_id != seq.id:
        raise DatasetError(f"sub-video parent {sub.parent_id} does not match sequence {seq.id}")
    if max(sub.frame_indices) >= seq.n_frames:
        raise DatasetError(f"{seq.id}: frame index out of range")
    frames = []
    source_shape = None
    for idx in sub.frame_indices:
        gray = _load_frame_gray(seq.frame_paths[idx], color_policy)
        if source_shape is None:
            source_shape = gray.shape
        elif gray.shape != source_shape:
            raise DatasetError(f"{seq.id}: frame resolution changes mid-sequence")
        if gray.shape != scene_shape:
            gray = cv2.resize(
                gray.astype(np.float32), (scene_shape[1], scene_shape[0]), interpolation=cv2.INTER_LINEAR
            )
        frames.append(np.clip(gray, 0.0, 1.0))
    return VideoClip(
        frames=np.stack(frames).astype(np.float32),
        kind="scene",
        label=sub.label,
        parent_id=seq.id,
        illumination=seq.illumination_id,
    )


def manifest_subvideos(
    manifest: DatasetManifest,
    split: str,
    clip_len: int = DEFAULT_CLIP_LEN,
    max_per_sequence: int = 4,
    seed: int = 0,
) -> list[SubVideo]:
    """All sub-videos for one split; seeds fan out from the manifest seed."""
    subs: list[SubVideo] = []
    for seq in manifest.by_split(split):
        subs.extend(extract_subvideos(seq, clip_len, max_per_sequence, derive_seed(seed, "extract", split)))
    return subs
