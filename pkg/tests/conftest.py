import numpy as np
import pytest

from rawgesture.clips import VideoClip
from rawgesture.synthetic import render_sequence


def gesture_clips(n, frame_shape=(24, 32), classes=(0, 1, 2), seed=0):
    """Learnable labeled clips rendered from the synthetic gesture model."""
    clips = []
    for i in range(n):
        class_id = classes[i % len(classes)]
        shape_id, motion_id = class_id // 3, class_id % 3
        illum = i % 5
        frames = render_sequence(shape_id, motion_id, 8, frame_shape, illum, seed=seed + i)
        clips.append(
            VideoClip(
                frames=frames.astype(np.float32),
                kind="scene",
                label=class_id,
                parent_id=f"fixture-{i}",
                illumination=illum,
            )
        )
    return clips


@pytest.fixture
def small_scene_clips():
    return gesture_clips(12, frame_shape=(16, 16), classes=(0, 1))
