"""Mask-based lensless camera simulator.

Forward model: the sensor sees a crop of the linear 2-D convolution of the
scene with the camera point spread function,

    b = crop(h * x)

realized as a circular convolution on a plane zero-padded to
(Hs + Hp - 1, Ws + Wp - 1) with the crop window centered, so the linear
result is reproduced without wraparound. The adjoint (zero-pad then
correlate) is exposed for iterative reconstruction.

Conventions: scene and PSF are embedded at the top-left of the padded
plane; all FFT work is double precision, and magnitudes below the FFT
roundoff floor are flushed to zero so that exactly-zero scene regions
yield exactly-zero measurements.
"""

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image
from scipy import fft as spfft
from scipy.ndimage import gaussian_filter

from .clips import VideoClip
from .seeding import derive_seed

DEFAULT_SCENE_SHAPE = (240, 320)

# |values| below this are FFT noise on [0,1]-normalized data
_FFT_FLOOR = 1e-12


class GeometryError(ValueError):
    """Scene, PSF and sensor dimensions do not describe one camera."""


class PsfError(ValueError):
    """PSF file missing, corrupt, or non-physical."""


@dataclass(frozen=True)
class SensorGeometry:
    """Padded convolution plane and the sensor crop window inside it."""

    sensor_h: int
    sensor_w: int
    pad_h: int
    pad_w: int
    crop_top: int
    crop_left: int

    def __post_init__(self):
        if min(self.sensor_h, self.sensor_w, self.pad_h, self.pad_w) <= 0:
            raise GeometryError("geometry dimensions must be positive")
        if self.crop_top < 0 or self.crop_left < 0:
            raise GeometryError("crop offsets must be non-negative")
        if self.crop_top + self.sensor_h > self.pad_h or self.crop_left + self.sensor_w > self.pad_w:
            raise GeometryError("crop window must lie inside the padded plane")

    @classmethod
    def for_scene_psf(
        cls,
        scene_shape: tuple[int, int],
        psf_shape: tuple[int, int],
        sensor_shape: tuple[int, int] | None = None,
    ) -> "SensorGeometry":
        """Centered-crop geometry for a scene/PSF pair (sensor defaults to scene size)."""
        hs, ws = scene_shape
        hp, wp = psf_shape
        hm, wm = sensor_shape or scene_shape
        pad_h, pad_w = hs + hp - 1, ws + wp - 1
        if hm > pad_h or wm > pad_w:
            raise GeometryError("sensor larger than the padded plane")
        return cls(
            sensor_h=hm,
            sensor_w=wm,
            pad_h=pad_h,
            pad_w=pad_w,
            crop_top=(pad_h - hm) // 2,
            crop_left=(pad_w - wm) // 2,
        )

    @property
    def plane_shape(self) -> tuple[int, int]:
        return self.pad_h, self.pad_w

    @property
    def sensor_shape(self) -> tuple[int, int]:
        return self.sensor_h, self.sensor_w

    @property
    def crop_slices(self) -> tuple[slice, slice]:
        return (
            slice(self.crop_top, self.crop_top + self.sensor_h),
            slice(self.crop_left, self.crop_left + self.sensor_w),
        )

    def scene_shape(self, psf_shape: tuple[int, int]) -> tuple[int, int]:
        """Scene plane implied by this geometry and a PSF size."""
        hs = self.pad_h - psf_shape[0] + 1
        ws = self.pad_w - psf_shape[1] + 1
        if hs <= 0 or ws <= 0:
            raise GeometryError("PSF larger than the padded plane")
        return hs, ws

    def to_dict(self) -> dict:
        return {
            "sensor_h": self.sensor_h,
            "sensor_w": self.sensor_w,
            "pad_h": self.pad_h,
            "pad_w": self.pad_w,
            "crop_top": self.crop_top,
            "crop_left": self.crop_left,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SensorGeometry":
        return cls(**{k: int(d[k]) for k in ("sensor_h", "sensor_w", "pad_h", "pad_w", "crop_top", "crop_left")})


@dataclass(frozen=True)
class PointSpreadFunction:
    """Non-negative 2-D kernel, normalized to unit sum."""

    grid: np.ndarray
    name: str = "psf"

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=np.float64)
        object.__setattr__(self, "grid", grid)
        if grid.ndim != 2:
            raise PsfError(f"PSF must be 2-D, got shape {grid.shape}")
        if np.any(grid < 0):
            raise PsfError("non-physical PSF: negative entries")
        total = float(grid.sum())
        if abs(total - 1.0) > 1e-6:
            raise PsfError(f"PSF not normalized: sum={total!r}")

    @property
    def shape(self) -> tuple[int, int]:
        return self.grid.shape


@dataclass(frozen=True)
class SceneFrame:
    """Single grayscale scene frame, values in [0, 1]."""

    pixels: np.ndarray

    def __post_init__(self):
        pixels = np.asarray(self.pixels, dtype=np.float64)
        object.__setattr__(self, "pixels", pixels)
        if pixels.ndim != 2:
            raise ValueError(f"scene frame must be 2-D, got {pixels.shape}")
        if pixels.size and (pixels.min() < -1e-9 or pixels.max() > 1.0 + 1e-9):
            raise ValueError("scene values outside [0, 1]")

    @property
    def shape(self) -> tuple[int, int]:
        return self.pixels.shape


@dataclass(frozen=True)
class SensorMeasurement:
    """Raw sensor frame: non-negative, sensor-sized."""

    pixels: np.ndarray
    noise_applied: bool = False

    def __post_init__(self):
        pixels = np.asarray(self.pixels, dtype=np.float64)
        object.__setattr__(self, "pixels", pixels)
        if pixels.ndim != 2:
            raise ValueError(f"measurement must be 2-D, got {pixels.shape}")
        if pixels.size and pixels.min() < 0:
            raise ValueError("measurement has negative entries")

    @property
    def shape(self) -> tuple[int, int]:
        return self.pixels.shape


@dataclass(frozen=True)
class NoiseSpec:
    """Optional additive sensor noise; `sigma == 0` iff model is "none"."""

    model: str = "none"
    sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.model not in ("none", "additive-gaussian"):
            raise ValueError(f"unknown noise model {self.model!r}")
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")
        if (self.sigma == 0) != (self.model == "none"):
            raise ValueError("sigma == 0 exactly when model is 'none'")


NO_NOISE = NoiseSpec()


def normalize_psf(grid: np.ndarray, name: str = "psf") -> PointSpreadFunction:
    """Validate and L1-normalize a raw kernel."""
    grid = np.asarray(grid, dtype=np.float64)
    if grid.ndim != 2:
        raise PsfError(f"PSF must be 2-D, got shape {grid.shape}")
    if np.any(grid < 0):
        raise PsfError("non-physical PSF: negative entries")
    total = float(np.sum(grid, dtype=np.longdouble))
    if total <= 0:
        raise PsfError("cannot normalize an all-zero PSF")
    return PointSpreadFunction(grid=grid / total, name=name)


def load_psf(path: str | Path, geometry: SensorGeometry | None = None) -> PointSpreadFunction:
    """Load a PSF from a single-channel image file (float TIFF or 8/16-bit PNG).

    A JSON sidecar `<stem>.json` may carry {"name": ..., "geometry": {...}};
    when a geometry is known (argument or sidecar) the kernel must fit its
    sensor dimensions.
    """
    path = Path(path)
    if not path.exists():
        raise PsfError(f"PSF file not found: {path}")
    try:
        with Image.open(path) as img:
            if img.mode not in ("F", "I", "I;16", "L"):
                if len(img.getbands()) != 1:
                    raise PsfError(f"PSF image must be single-channel, got mode {img.mode!r}")
                img = img.convert("F")
            grid = np.asarray(img, dtype=np.float64)
    except PsfError:
        raise
    except Exception as exc:
        raise PsfError(f"cannot decode PSF file {path}: {exc}") from exc

    name = path.stem
    sidecar = path.with_suffix(".json")
    if sidecar.exists():
        side = json.loads(sidecar.read_text())
        name = side.get("name", name)
        if geometry is None and "geometry" in side:
            geometry = SensorGeometry.from_dict(side["geometry"])

    psf = normalize_psf(grid, name=name)
    if geometry is not None:
        hp, wp = psf.shape
        if hp > geometry.sensor_h or wp > geometry.sensor_w:
            raise GeometryError(
                f"PSF {psf.shape} exceeds sensor {geometry.sensor_shape}"
            )
    return psf


def save_psf(path: str | Path, psf: PointSpreadFunction, geometry: SensorGeometry | None = None) -> Path:
    """Write a PSF as 32-bit float TIFF plus its JSON sidecar."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(psf.grid.astype(np.float32), mode="F").save(path)
    side = {"name": psf.name}
    if geometry is not None:
        side["geometry"] = geometry.to_dict()
    path.with_suffix(".json").write_text(json.dumps(side, indent=2))
    return path


def delta_psf(shape: tuple[int, int] = (3, 3)) -> PointSpreadFunction:
    """Centered unit impulse (odd dimensions center exactly)."""
    grid = np.zeros(shape)
    grid[shape[0] // 2, shape[1] // 2] = 1.0
    return PointSpreadFunction(grid=grid, name="delta")


def synthesize_caustic_psf(
    shape: tuple[int, int] = DEFAULT_SCENE_SHAPE,
    density: float = 0.01,
    blur_sigma: float = 1.5,
    seed: int = 0,
) -> PointSpreadFunction:
    """Seeded stand-in for a diffuser calibration: blurred sparse point field."""
    if not 0 < density <= 1:
        raise ValueError("density must be in (0, 1]")
    rng = np.random.default_rng(derive_seed(seed, "caustic"))
    n_points = max(1, int(round(density * shape[0] * shape[1])))
    grid = np.zeros(shape)
    rows = rng.integers(0, shape[0], size=n_points)
    cols = rng.integers(0, shape[1], size=n_points)
    np.add.at(grid, (rows, cols), rng.uniform(0.5, 1.0, size=n_points))
    grid = gaussian_filter(grid, sigma=blur_sigma, mode="constant")
    grid = np.clip(grid, 0.0, None)
    return normalize_psf(grid, name=f"caustic-{seed}")


def gaussian_psf(shape: tuple[int, int], sigma: float) -> PointSpreadFunction:
    """Centered normalized Gaussian kernel."""
    rows = np.arange(shape[0]) - (shape[0] - 1) / 2.0
    cols = np.arange(shape[1]) - (shape[1] - 1) / 2.0
    grid = np.exp(-(rows[:, None] ** 2 + cols[None, :] ** 2) / (2.0 * sigma**2))
    return normalize_psf(grid, name=f"gaussian-{sigma}")


# ---------------------------------------------------------------------------
# plane embedding / crop primitives (shared with the ADMM solver)


def embed_psf(psf: PointSpreadFunction, geometry: SensorGeometry) -> np.ndarray:
    plane = np.zeros(geometry.plane_shape)
    hp, wp = psf.shape
    if hp > geometry.pad_h or wp > geometry.pad_w:
        raise GeometryError(f"PSF {psf.shape} larger than plane {geometry.plane_shape}")
    plane[:hp, :wp] = psf.grid
    return plane


def psf_otf(psf: PointSpreadFunction, geometry: SensorGeometry) -> np.ndarray:
    """Transfer function of the PSF on the padded plane."""
    return spfft.fft2(embed_psf(psf, geometry))


def pad_scene(scene: np.ndarray, geometry: SensorGeometry) -> np.ndarray:
    plane = np.zeros(geometry.plane_shape)
    hs, ws = scene.shape
    if hs > geometry.pad_h or ws > geometry.pad_w:
        raise GeometryError(f"scene {scene.shape} larger than plane {geometry.plane_shape}")
    plane[:hs, :ws] = scene
    return plane


def crop_to_sensor(plane: np.ndarray, geometry: SensorGeometry) -> np.ndarray:
    if plane.shape != geometry.plane_shape:
        raise GeometryError(f"plane {plane.shape} does not match geometry {geometry.plane_shape}")
    ys, xs = geometry.crop_slices
    return plane[ys, xs]


def pad_to_plane(measurement: np.ndarray, geometry: SensorGeometry) -> np.ndarray:
    """Adjoint of the crop: embed a sensor frame at the crop window."""
    if measurement.shape != geometry.sensor_shape:
        raise GeometryError(f"measurement {measurement.shape} does not match sensor {geometry.sensor_shape}")
    plane = np.zeros(geometry.plane_shape)
    ys, xs = geometry.crop_slices
    plane[ys, xs] = measurement
    return plane


def _flush_floor(values: np.ndarray) -> np.ndarray:
    values[np.abs(values) < _FFT_FLOOR] = 0.0
    return values


def convolve_on_plane(scene: np.ndarray, otf: np.ndarray, geometry: SensorGeometry) -> np.ndarray:
    """h * x on the padded plane (linear convolution by construction)."""
    plane = pad_scene(scene, geometry)
    out = spfft.ifft2(spfft.fft2(plane) * otf).real
    return _flush_floor(out)


def correlate_on_plane(plane: np.ndarray, otf: np.ndarray) -> np.ndarray:
    """Adjoint of `convolve_on_plane` on an already-padded input."""
    out = spfft.ifft2(spfft.fft2(plane) * np.conj(otf)).real
    return _flush_floor(out)


# ---------------------------------------------------------------------------
# public operations


def forward_measure(
    scene: SceneFrame,
    psf: PointSpreadFunction,
    noise: NoiseSpec = NO_NOISE,
    geometry: SensorGeometry | None = None,
    _otf: np.ndarray | None = None,
    _noise_seed: int | None = None,
) -> SensorMeasurement:
    """Simulate one sensor exposure: crop(h * x) plus optional clamped noise."""
    if geometry is None:
        geometry = SensorGeometry.for_scene_psf(scene.shape, psf.shape)
    expected_scene = geometry.scene_shape(psf.shape)
    if scene.shape != expected_scene:
        raise GeometryError(f"scene {scene.shape} does not match geometry scene plane {expected_scene}")
    otf = psf_otf(psf, geometry) if _otf is None else _otf
    measurement = crop_to_sensor(convolve_on_plane(scene.pixels, otf, geometry), geometry)
    noisy = False
    if noise.model == "additive-gaussian":
        seed = noise.seed if _noise_seed is None else _noise_seed
        rng = np.random.default_rng(seed)
        measurement = measurement + rng.normal(0.0, noise.sigma, size=measurement.shape)
        noisy = True
    measurement = np.clip(measurement, 0.0, None)
    return SensorMeasurement(pixels=measurement, noise_applied=noisy)


def adjoint_apply(
    measurement: SensorMeasurement,
    psf: PointSpreadFunction,
    geometry: SensorGeometry | None = None,
    _otf: np.ndarray | None = None,
) -> np.ndarray:
    """Apply the forward model's adjoint: zero-pad, correlate, restrict to the scene plane."""
    if geometry is None:
        geometry = SensorGeometry.for_scene_psf(measurement.shape, psf.shape)
    if measurement.shape != geometry.sensor_shape:
        raise GeometryError(f"measurement {measurement.shape} does not match sensor {geometry.sensor_shape}")
    otf = psf_otf(psf, geometry) if _otf is None else _otf
    plane = correlate_on_plane(pad_to_plane(measurement.pixels, geometry), otf)
    hs, ws = geometry.scene_shape(psf.shape)
    return plane[:hs, :ws]


def simulate_video(
    clip: VideoClip,
    psf: PointSpreadFunction,
    noise: NoiseSpec = NO_NOISE,
    geometry: SensorGeometry | None = None,
) -> VideoClip:
    """Record a clip frame by frame; per-frame noise seeds derive from the frame index.

    Raw measurements are returned unnormalized (float32, >= 0); dataset-level
    scaling to [0, 1] is a training-pipeline concern.
    """
    if clip.length < 1:
        raise ValueError("clip must have at least one frame")
    frame_shape = clip.frame_shape
    if geometry is None:
        geometry = SensorGeometry.for_scene_psf(frame_shape, psf.shape)
    otf = psf_otf(psf, geometry)
    out = np.empty((clip.length, geometry.sensor_h, geometry.sensor_w), dtype=np.float32)
    for i in range(clip.length):
        m = forward_measure(
            SceneFrame(pixels=clip.frames[i].astype(np.float64)),
            psf,
            noise,
            geometry,
            _otf=otf,
            _noise_seed=derive_seed(noise.seed, "frame", i),
        )
        out[i] = m.pixels.astype(np.float32)
    return VideoClip(
        frames=out,
        kind="raw",
        label=clip.label,
        parent_id=clip.parent_id,
        illumination=clip.illumination,
    )
