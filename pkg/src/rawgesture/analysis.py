"""Embedding-space clustering analysis and error attribution.

The clustering check assigns each image of an evaluated class to the
candidate class with the highest average cosine similarity of embedding
vectors (leave-one-out within the image's own class); well-clustered
data lands on the diagonal of the resulting count table. Error
attribution decomposes classifier confusion into shape-only,
motion-only, and both-wrong mistakes using class_id = 3 * shape + motion.

Embedding backends are pluggable: load per-image vectors from CSV/JSON
files, or pool feature maps from a trained extractor/restorer checkpoint.
"""

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from .models import Checkpoint
from .models.nets import Raw3dNet, SpatialFeatureExtractor, UNetRestorer
from .training import ConfusionMatrix


class AnalysisError(ValueError):
    pass


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    """<a, b> / (||a|| ||b||); rejects zero vectors."""
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise AnalysisError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise AnalysisError("cosine similarity undefined for zero vectors")
    return float(np.dot(a, b) / (na * nb))


@dataclass
class PertinenceTable:
    """Counts of most-correlated candidate class, one row per evaluated class."""

    candidate_classes: list[int]
    rows: dict[int, list[int]]

    def to_csv(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["evaluated_class"] + [f"class_{c}" for c in self.candidate_classes])
            for cls in sorted(self.rows):
                writer.writerow([cls] + list(self.rows[cls]))
        return path


def pertinence_counts(
    vectors_by_class: dict[int, list[np.ndarray]],
    evaluated_class: int,
    candidate_classes: list[int] | None = None,
) -> list[int]:
    """Most-pertinent-category counts for one evaluated class.

    For every image of the evaluated class, the average cosine similarity
    to each candidate class is computed (leave-one-out within its own
    class) and the image counts toward the argmax class, lowest class id
    winning ties. Counts sum to the evaluated class's image count.
    """
    if candidate_classes is None:
        candidate_classes = sorted(vectors_by_class)
    if evaluated_class not in vectors_by_class:
        raise AnalysisError(f"no vectors for evaluated class {evaluated_class}")
    for cls in candidate_classes:
        if cls not in vectors_by_class or not len(vectors_by_class[cls]):
            raise AnalysisError(f"candidate class {cls} has no vectors")
    own = vectors_by_class[evaluated_class]
    if len(own) < 2:
        raise AnalysisError(f"evaluated class {evaluated_class} needs >= 2 images for leave-one-out")

    counts = [0] * len(candidate_classes)
    for i, query in enumerate(own):
        averages = []
        for cls in candidate_classes:
            if cls == evaluated_class:
                pool = [v for j, v in enumerate(own) if j != i]
            else:
                pool = vectors_by_class[cls]
            averages.append(np.mean([cosine_similarity(query, v) for v in pool]))
        counts[int(np.argmax(averages))] += 1
    return counts


def pertinence_table(
    vectors_by_class: dict[int, list[np.ndarray]],
    evaluated_classes: list[int] | None = None,
    candidate_classes: list[int] | None = None,
) -> PertinenceTable:
    if candidate_classes is None:
        candidate_classes = sorted(vectors_by_class)
    if evaluated_classes is None:
        evaluated_classes = candidate_classes
    rows = {
        cls: pertinence_counts(vectors_by_class, cls, candidate_classes) for cls in evaluated_classes
    }
    return PertinenceTable(candidate_classes=candidate_classes, rows=rows)


def error_attribution(confusion: ConfusionMatrix | np.ndarray) -> tuple[int, int, int]:
    """Split off-diagonal confusion mass into (shape, motion, both} errors."""
    counts = confusion.counts if isinstance(confusion, ConfusionMatrix) else np.asarray(confusion)
    if counts.shape != (9, 9):
        raise AnalysisError(f"error attribution needs a 9x9 matrix, got {counts.shape}")
    shape_err = motion_err = both_err = 0
    for true in range(9):
        for pred in range(9):
            if true == pred:
                continue
            n = int(counts[true, pred])
            same_shape = true // 3 == pred // 3
            same_motion = true % 3 == pred % 3
            if same_motion and not same_shape:
                shape_err += n
            elif same_shape and not same_motion:
                motion_err += n
            else:
                both_err += n
    return shape_err, motion_err, both_err


# ---------------------------------------------------------------------------
# embedding backends


class FileEmbeddingBackend:
    """Per-image vectors from a CSV (id, v0, v1, ...) or JSON {id: [..]} file."""

    def __init__(self, path: str | Path, name: str | None = None):
        path = Path(path)
        if not path.exists():
            raise AnalysisError(f"embedding file not found: {path}")
        if path.suffix.lower() == ".json":
            data = json.loads(path.read_text())
            self.vectors = {k: np.asarray(v, dtype=np.float64) for k, v in data.items()}
        else:
            self.vectors = {}
            with path.open() as fh:
                for row in csv.reader(fh):
                    if not row:
                        continue
                    self.vectors[row[0]] = np.asarray([float(v) for v in row[1:]], dtype=np.float64)
        dims = {v.size for v in self.vectors.values()}
        if len(dims) != 1:
            raise AnalysisError(f"inconsistent embedding dimensions: {sorted(dims)}")
        self.dim = dims.pop()
        self.name = name or path.stem

    def embed(self, image_id: str) -> np.ndarray:
        try:
            return self.vectors[image_id]
        except KeyError:
            raise AnalysisError(f"no embedding for id {image_id!r}") from None


class PooledFeatureBackend:
    """Deterministic image -> vector map pooled from a trained checkpoint.

    Global average and max pooling of the deepest encoder feature map of
    an SFE (or restorer) checkpoint; the dimension is fixed by the
    checkpoint's channel widths.
    """

    def __init__(self, checkpoint: Checkpoint, name: str | None = None):
        model = checkpoint.build().eval()
        if isinstance(model, Raw3dNet):
            model = model.sfe
        if not isinstance(model, (SpatialFeatureExtractor, UNetRestorer)):
            raise AnalysisError(f"cannot pool features from a {checkpoint.spec.kind} checkpoint")
        self.model = model
        self.name = name or f"pooled-{checkpoint.spec.kind}"
        self.dim = None

    def _feature_map(self, x: torch.Tensor) -> torch.Tensor:
        model = self.model
        if isinstance(model, SpatialFeatureExtractor):
            return model.encoder2(model.pool(model.encoder1(model.stem(x))))
        h = model.stem(x)
        for down in model.downs:
            h = down(model.pool(h))
        return h

    def embed(self, image: np.ndarray) -> np.ndarray:
        x = torch.from_numpy(np.asarray(image, dtype=np.float32)).reshape(1, 1, *image.shape)
        with torch.no_grad():
            feats = self._feature_map(x)
        vec = torch.cat([feats.mean(dim=(2, 3)), feats.amax(dim=(2, 3))], dim=1).squeeze(0).numpy()
        if self.dim is None:
            self.dim = vec.size
        return vec.astype(np.float64)


def embed_images_by_class(
    backend, images_by_class: dict[int, list], frame_index: int = 0
) -> dict[int, list[np.ndarray]]:
    """Map class -> clip/image list to class -> embedding vectors.

    Items may be VideoClips (the configured frame index is embedded),
    raw 2-D arrays, or ids (file backend).
    """
    out: dict[int, list[np.ndarray]] = {}
    for cls, items in images_by_class.items():
        vectors = []
        for item in items:
            if hasattr(item, "frames"):
                vectors.append(backend.embed(item.frames[frame_index]))
            else:
                vectors.append(backend.embed(item))
        out[cls] = vectors
    return out
