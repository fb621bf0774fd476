"""Pipeline jobs behind the service endpoints and CLI subcommands.

Each job reads an ExperimentConfig, produces artifacts under
``output.dir``, and writes a provenance manifest (resolved config, seeds,
input and output digests) sufficient to re-run the command bit-identically.
Partial-output directories are refused unless ``output.force`` is set.
"""

import hashlib
import json
import os
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from . import __version__
from .clips import VideoClip, open_clip_store, write_clip_store
from .config import ExperimentConfig
from .dataset import (
    DatasetManifest,
    extract_subvideos,
    scan_dataset,
    split_dataset,
    to_clip,
)
from .models import ModelSpec, describe_model, load_checkpoint, render_shape_table, save_checkpoint
from .optics import (
    NoiseSpec,
    PointSpreadFunction,
    SensorGeometry,
    load_psf,
    save_psf,
    simulate_video,
    synthesize_caustic_psf,
)
from .recon import AdmmParams, admm_reconstruct, history_to_csv, reconstruct_clip
from .sampling import SampleSpec, downsample_clip, make_mask
from .seeding import derive_seed
from .synthetic import write_synthetic_dataset
from .training import (
    GridCell,
    TrainConfig,
    evaluate_model,
    materialize_variant,
    run_experiment_grid,
    train_model,
)

SPLITS = ("train", "val", "test")


class JobError(RuntimeError):
    pass


@dataclass
class JobResult:
    command: str
    out_dir: str
    manifest_path: str
    summary: dict


def sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def prepare_output_dir(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.output.dir)
    if out.exists() and any(out.iterdir()) and not cfg.output.force:
        raise JobError(f"output directory {out} is not empty; pass force to overwrite")
    out.mkdir(parents=True, exist_ok=True)
    return out


def write_manifest(out: Path, command: str, cfg: ExperimentConfig, inputs: list[Path], summary: dict) -> Path:
    outputs = {}
    for path in sorted(out.rglob("*")):
        if path.is_file() and path.name != "manifest.json":
            outputs[str(path.relative_to(out))] = sha256_file(path)
    manifest = {
        "command": command,
        "package_version": __version__,
        "schema_version": cfg.schema_version,
        "seed": cfg.seed,
        "config": cfg.model_dump(),
        "inputs": {str(p): sha256_file(Path(p)) for p in inputs if Path(p).is_file()},
        "outputs": outputs,
        "summary": summary,
        "finished_at": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return path


def _finish(command: str, cfg: ExperimentConfig, out: Path, inputs: list[Path], summary: dict) -> JobResult:
    manifest_path = write_manifest(out, command, cfg, inputs, summary)
    return JobResult(command=command, out_dir=str(out), manifest_path=str(manifest_path), summary=summary)


# ---------------------------------------------------------------------------
# config resolution helpers


def section_seed(cfg: ExperimentConfig, label: str, explicit: int | None) -> int:
    return explicit if explicit is not None else derive_seed(cfg.seed, label)


def resolve_psf(cfg: ExperimentConfig, scene_shape: tuple[int, int]) -> PointSpreadFunction:
    if cfg.optics.psf_path is not None:
        return load_psf(cfg.optics.psf_path)
    shape = (cfg.optics.psf_h or scene_shape[0], cfg.optics.psf_w or scene_shape[1])
    synth = cfg.optics.psf_synthetic
    return synthesize_caustic_psf(
        shape=shape,
        density=synth.density,
        blur_sigma=synth.blur_sigma,
        seed=section_seed(cfg, "psf", synth.seed),
    )


def resolve_geometry(cfg: ExperimentConfig, scene_shape: tuple[int, int], psf_shape: tuple[int, int]) -> SensorGeometry:
    o = cfg.optics
    sensor = (o.sensor_h or scene_shape[0], o.sensor_w or scene_shape[1])
    geom = SensorGeometry.for_scene_psf(scene_shape, psf_shape, sensor)
    if o.pad_h or o.pad_w:
        pad = (o.pad_h or geom.pad_h, o.pad_w or geom.pad_w)
        geom = SensorGeometry(
            sensor_h=sensor[0],
            sensor_w=sensor[1],
            pad_h=pad[0],
            pad_w=pad[1],
            crop_top=(pad[0] - sensor[0]) // 2,
            crop_left=(pad[1] - sensor[1]) // 2,
        )
    return geom


def resolve_noise(cfg: ExperimentConfig) -> NoiseSpec:
    n = cfg.optics.noise
    return NoiseSpec(model=n.model, sigma=n.sigma, seed=section_seed(cfg, "noise", n.seed))


def resolve_sampling(cfg: ExperimentConfig, section=None) -> SampleSpec:
    s = section or cfg.sampling
    return SampleSpec(
        method=s.method,
        target_w=s.target_w,
        target_h=s.target_h,
        keep_fraction=s.keep_fraction,
        seed=section_seed(cfg, "sampling", s.seed),
    )


def resolve_train_config(cfg: ExperimentConfig) -> TrainConfig:
    t = cfg.training
    return TrainConfig(
        epochs=t.epochs,
        batch_size=t.batch_size,
        beta1=t.beta1,
        beta2=t.beta2,
        weight_decay=t.weight_decay,
        lr_start=t.lr_start,
        lr_end=t.lr_end,
        schedule=t.schedule,
        loss=t.loss,
        seed=section_seed(cfg, "training", t.seed),
    )


def resolve_admm_params(cfg: ExperimentConfig) -> AdmmParams:
    r = cfg.recon
    return AdmmParams(
        rho_data=r.rho_data,
        rho_tv=r.rho_tv,
        rho_nonneg=r.rho_nonneg,
        tv_weight=r.tv_weight,
        max_iters=r.max_iters,
        primal_tol=r.primal_tol,
        dual_tol=r.dual_tol,
        adaptive_rho=r.adaptive_rho,
    )


def resolve_model_spec(cfg: ExperimentConfig, kind=None, height=None, width=None, clip_len=None) -> ModelSpec:
    m = cfg.model
    return ModelSpec(
        kind=kind or m.kind,
        height=height or cfg.dataset.scene_h,
        width=width or cfg.dataset.scene_w,
        clip_len=clip_len or cfg.dataset.clip_len,
        num_classes=m.num_classes,
        sfe_width=m.sfe_width,
        resnet_widths=tuple(m.resnet_widths),
        unet_width=m.unet_width,
        unet_depth=m.unet_depth,
        seed=section_seed(cfg, "model", m.seed),
    )


def prepare_dataset(cfg: ExperimentConfig, workdir: Path) -> tuple[DatasetManifest, list[Path]]:
    """Scan the configured root, or render the synthetic fixture into workdir."""
    inputs: list[Path] = []
    if cfg.dataset.root is not None:
        root = Path(cfg.dataset.root)
        manifest = scan_dataset(root, layout=cfg.dataset.layout, min_length=cfg.dataset.clip_len)
    elif cfg.dataset.synthetic is not None:
        s = cfg.dataset.synthetic
        # RAWGESTURE_CACHE_DIR lets repeated runs share one rendered fixture
        cache_root = os.environ.get("RAWGESTURE_CACHE_DIR")
        fixture_seed = derive_seed(cfg.seed, "fixture")
        if cache_root:
            key = hashlib.sha256(
                json.dumps([s.model_dump(), fixture_seed], sort_keys=True).encode()
            ).hexdigest()[:16]
            root = Path(cache_root) / f"synthetic-{key}"
        else:
            root = workdir / "synthetic_dataset"
        if not root.exists():
            write_synthetic_dataset(
                root,
                classes=s.classes,
                sequences_per_class=s.sequences_per_class,
                n_frames=s.n_frames,
                frame_shape=(s.frame_h, s.frame_w),
                illuminations=s.illuminations,
                seed=fixture_seed,
            )
        manifest = scan_dataset(root, layout="cambridge", min_length=cfg.dataset.clip_len)
    else:
        raise JobError("dataset.root is unset and no dataset.synthetic block is given")
    manifest = split_dataset(
        manifest,
        test_fraction=cfg.dataset.test_fraction,
        val_fraction_of_train=cfg.dataset.val_fraction_of_train,
        seed=derive_seed(cfg.seed, "split"),
    )
    return manifest, inputs


def scene_clips_by_split(cfg: ExperimentConfig, manifest: DatasetManifest) -> dict[str, list[VideoClip]]:
    scene_shape = (cfg.dataset.scene_h, cfg.dataset.scene_w)
    out: dict[str, list[VideoClip]] = {}
    for split in SPLITS:
        clips = []
        for seq in manifest.by_split(split):
            subs = extract_subvideos(
                seq,
                clip_len=cfg.dataset.clip_len,
                max_per_sequence=cfg.dataset.max_subvideos_per_sequence,
                seed=derive_seed(cfg.seed, "extract", split),
            )
            for sub in subs:
                clips.append(to_clip(sub, seq, color_policy=cfg.dataset.color_policy, scene_shape=scene_shape))
        out[split] = clips
    return out


def _store_clips(directory: Path, clips: list[VideoClip], meta: dict):
    names = {}
    counters: dict[str, int] = {}
    for clip in clips:
        base = (clip.parent_id or "clip").replace("/", "_")
        counters[base] = counters.get(base, 0)
        names[f"{base}__{counters[base]:03d}"] = clip
        counters[base] += 1
    return write_clip_store(directory, names, meta=meta)


def _open_store_tree(root: Path) -> dict[str, Path]:
    """Map split name -> store dir; a bare store maps to {"all": root}."""
    root = Path(root)
    if (root / "index.json").exists():
        return {"all": root}
    found = {}
    for split in SPLITS + ("all",):
        if (root / split / "index.json").exists():
            found[split] = root / split
    if not found:
        raise JobError(f"{root} contains no clip stores (index.json not found)")
    return found


# ---------------------------------------------------------------------------
# jobs


def job_simulate(cfg: ExperimentConfig) -> JobResult:
    out = prepare_output_dir(cfg)
    manifest, inputs = prepare_dataset(cfg, out)
    scene_sets = scene_clips_by_split(cfg, manifest)
    scene_shape = (cfg.dataset.scene_h, cfg.dataset.scene_w)
    psf = resolve_psf(cfg, scene_shape)
    geometry = resolve_geometry(cfg, scene_shape, psf.shape)
    noise = resolve_noise(cfg)
    save_psf(out / "psf.tif", psf, geometry)
    manifest.save(out / "dataset_manifest.json")

    raw_sets = {
        split: [simulate_video(c, psf, noise, geometry) for c in clips]
        for split, clips in scene_sets.items()
    }
    lo = min((float(c.frames.min()) for c in raw_sets["train"]), default=0.0)
    hi = max((float(c.frames.max()) for c in raw_sets["train"]), default=1.0)
    counts = {}
    for split in SPLITS:
        meta = {"kind": "scene", "geometry": geometry.to_dict(), "split": split}
        _store_clips(out / "scene" / split, scene_sets[split], meta)
        meta_raw = {
            "kind": "raw",
            "geometry": geometry.to_dict(),
            "split": split,
            "raw_stats": {"lo": lo, "hi": hi},
            "psf": "psf.tif",
            "noise": {"model": noise.model, "sigma": noise.sigma, "seed": noise.seed},
        }
        _store_clips(out / "raw" / split, raw_sets[split], meta_raw)
        counts[split] = len(raw_sets[split])
    summary = {
        "sequences": len(manifest.sequences),
        "clips": counts,
        "geometry": geometry.to_dict(),
        "raw_stats": {"lo": lo, "hi": hi},
    }
    if cfg.optics.psf_path:
        inputs.append(Path(cfg.optics.psf_path))
    return _finish("simulate", cfg, out, inputs, summary)


def job_downsample(cfg: ExperimentConfig) -> JobResult:
    if cfg.sampling.input_dir is None:
        raise JobError("sampling.input_dir must point at a clip store (or store tree)")
    if cfg.sampling.method == "none":
        raise JobError("sampling.method is 'none'; nothing to do")
    out = prepare_output_dir(cfg)
    spec = resolve_sampling(cfg)
    tree = _open_store_tree(Path(cfg.sampling.input_dir))
    mask = None
    total = 0
    for split, store_dir in sorted(tree.items()):
        store = open_clip_store(store_dir)
        clips = {}
        for clip_id, clip in store:
            h, w = clip.frame_shape
            if mask is None:
                mask = make_mask(spec, (w, h))
                mask.save(out / "mask.json")
            clips[clip_id] = downsample_clip(clip, spec, mask)
        meta = dict(store.meta)
        meta["sampling"] = spec.to_dict()
        meta["valid_pixels"] = spec.valid_pixels()
        target = out / split if split != "all" else out / "all"
        write_clip_store(target, clips, meta=meta)
        total += len(clips)
    summary = {"clips": total, "sampling": spec.to_dict(), "valid_pixels": spec.valid_pixels()}
    return _finish("downsample", cfg, out, [], summary)


def job_reconstruct(cfg: ExperimentConfig) -> JobResult:
    if cfg.recon.input_dir is None:
        raise JobError("recon.input_dir must point at a raw clip store (or store tree)")
    out = prepare_output_dir(cfg)
    params = resolve_admm_params(cfg)
    tree = _open_store_tree(Path(cfg.recon.input_dir))
    inputs: list[Path] = []

    first = open_clip_store(next(iter(sorted(tree.values()))))
    sample = first.load(first.ids[0])
    psf = resolve_psf(cfg, sample.frame_shape)
    geometry = None
    if "geometry" in first.meta:
        geometry = SensorGeometry.from_dict(first.meta["geometry"])
    else:
        geometry = resolve_geometry(cfg, sample.frame_shape, psf.shape)
    if cfg.optics.psf_path:
        inputs.append(Path(cfg.optics.psf_path))

    total = 0
    residuals_written = False
    for split, store_dir in sorted(tree.items()):
        store = open_clip_store(store_dir)
        clips = {}
        for clip_id, clip in store:
            clips[clip_id] = reconstruct_clip(clip, psf, params, geometry)
            if cfg.recon.emit_residuals or not residuals_written:
                from .optics import SensorMeasurement

                _, state = admm_reconstruct(
                    SensorMeasurement(clip.frames[0].astype(np.float64)), psf, params, geometry
                )
                history_to_csv(state, out / "residuals" / f"{clip_id}_frame0.csv")
                residuals_written = True
        meta = dict(store.meta)
        meta["kind"] = "reconstructed"
        meta["admm"] = params.to_dict()
        target = out / split if split != "all" else out / "all"
        write_clip_store(target, clips, meta=meta)
        total += len(clips)
    summary = {"clips": total, "admm": params.to_dict(), "geometry": geometry.to_dict()}
    return _finish("reconstruct", cfg, out, inputs, summary)


def _load_labeled_sets(data_dir: Path, wanted: tuple[str, ...]) -> dict[str, list[VideoClip]]:
    tree = _open_store_tree(data_dir)
    sets = {}
    stats = None
    for split in wanted:
        if split not in tree:
            raise JobError(f"{data_dir} has no '{split}' clip store")
        store = open_clip_store(tree[split])
        clips = [clip for _, clip in store]
        if store.meta.get("kind") == "raw" and "raw_stats" in store.meta:
            stats = (store.meta["raw_stats"]["lo"], store.meta["raw_stats"]["hi"])
            lo, hi = stats
            span = max(hi - lo, 1e-12)
            clips = [
                c.with_frames(np.clip((c.frames - lo) / span, 0.0, 1.0).astype(np.float32))
                for c in clips
            ]
        sets[split] = clips
    return sets


def job_train(cfg: ExperimentConfig) -> JobResult:
    if cfg.training.data_dir is None:
        raise JobError("training.data_dir must point at a store tree with train/ and val/")
    out = prepare_output_dir(cfg)
    sets = _load_labeled_sets(Path(cfg.training.data_dir), ("train", "val"))
    length, h, w = sets["train"][0].frames.shape
    spec = resolve_model_spec(cfg, height=h, width=w, clip_len=length)
    train_config = resolve_train_config(cfg)
    checkpoint, history = train_model(
        spec, sets["train"], sets["val"], train_config, max_steps=cfg.training.max_steps
    )
    save_checkpoint(out / "checkpoint.pt", checkpoint)
    history.to_csv(out / "history.csv")
    summary = {
        "model": spec.kind,
        "best_val_accuracy": checkpoint.best_val_accuracy,
        "best_epoch": checkpoint.best_epoch,
        "epochs_run": len(history.val_accuracy),
        "train_clips": len(sets["train"]),
        "val_clips": len(sets["val"]),
    }
    return _finish("train", cfg, out, [], summary)


def _emit_panels(out: Path, clips: list[VideoClip], preds: list[int] | None, max_clips: int = 16):
    """Tile first frames of up to max_clips clips into one PNG grid."""
    chosen = clips[:max_clips]
    if not chosen:
        return
    h, w = chosen[0].frame_shape
    cols = int(np.ceil(np.sqrt(len(chosen))))
    rows = int(np.ceil(len(chosen) / cols))
    canvas = np.zeros((rows * h, cols * w), dtype=np.float32)
    for i, clip in enumerate(chosen):
        r, c = divmod(i, cols)
        frame = clip.frames[0]
        peak = max(float(frame.max()), 1e-6)
        canvas[r * h : (r + 1) * h, c * w : (c + 1) * w] = frame / peak
    Image.fromarray((canvas * 255).round().astype(np.uint8)).save(out / "panels.png")


def job_eval(cfg: ExperimentConfig) -> JobResult:
    if cfg.training.checkpoint_path is None:
        raise JobError("training.checkpoint_path must point at a trained checkpoint")
    if cfg.training.data_dir is None:
        raise JobError("training.data_dir must point at a store tree with test/ (or a bare store)")
    out = prepare_output_dir(cfg)
    checkpoint = load_checkpoint(cfg.training.checkpoint_path)
    tree = _open_store_tree(Path(cfg.training.data_dir))
    split = "test" if "test" in tree else "all"
    sets = _load_labeled_sets(Path(cfg.training.data_dir), (split,))
    clips = sets[split]
    result = evaluate_model(checkpoint, clips)
    correct = int(np.trace(np.asarray(result.confusion.counts)))
    report = {
        "accuracy": result.accuracy,
        "correct": correct,
        "n_clips": len(clips),
        "confusion": result.confusion.to_list(),
        "per_illumination": result.per_illumination,
        "checkpoint": str(cfg.training.checkpoint_path),
        "model": checkpoint.spec.kind,
    }
    (out / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True))
    with (out / "confusion.csv").open("w") as fh:
        k = len(result.confusion.counts)
        fh.write("true\\pred," + ",".join(str(j) for j in range(k)) + "\n")
        for i, row in enumerate(result.confusion.counts):
            fh.write(f"{i}," + ",".join(str(int(v)) for v in row) + "\n")
    if cfg.output.emit_panels:
        _emit_panels(out, clips, None)
    inputs = [Path(cfg.training.checkpoint_path)]
    return _finish("eval", cfg, out, inputs, dict(report, confusion="report.json"))


def job_grid(cfg: ExperimentConfig) -> JobResult:
    if not cfg.training.grid:
        raise JobError("training.grid lists no cells")
    out = prepare_output_dir(cfg)
    manifest, inputs = prepare_dataset(cfg, out)
    scene_sets = scene_clips_by_split(cfg, manifest)
    scene_shape = (cfg.dataset.scene_h, cfg.dataset.scene_w)
    psf = resolve_psf(cfg, scene_shape)
    geometry = resolve_geometry(cfg, scene_shape, psf.shape)
    noise = resolve_noise(cfg)

    cells = []
    for c in cfg.training.grid:
        sampling = None
        if c.sampling is not None and c.sampling.method != "none":
            sampling = resolve_sampling(cfg, c.sampling)
        cells.append(GridCell(name=c.name, variant=c.variant, model_kind=c.model, sampling=sampling))

    needed = {cell.variant for cell in cells}
    restorer_spec = None
    if "unet" in needed:
        restorer_spec = resolve_model_spec(cfg, kind="unet_restorer", height=scene_shape[0], width=scene_shape[1])
    variant_sets = {
        variant: materialize_variant(
            scene_sets,
            variant,
            psf=psf,
            noise=noise,
            geometry=geometry,
            admm_params=resolve_admm_params(cfg),
            restorer_spec=restorer_spec,
            restorer_steps=cfg.training.restorer_steps,
            seed=derive_seed(cfg.seed, "grid", variant),
        )
        for variant in sorted(needed)
    }
    template = resolve_model_spec(cfg)
    report = run_experiment_grid(
        cells,
        variant_sets,
        template,
        resolve_train_config(cfg),
        max_steps=cfg.training.max_steps,
        parallel=cfg.training.parallel_cells,
    )
    report.meta["seed"] = cfg.seed
    report.save(out / "report.json")
    report.to_csv(out / "report.csv")
    summary = {
        "cells": [{"name": r["name"], "accuracy": r["accuracy"], "valid_pixels": r["valid_pixels"]} for r in report.rows]
    }
    return _finish("grid", cfg, out, inputs, summary)


def job_analyze(cfg: ExperimentConfig) -> JobResult:
    from .analysis import (
        FileEmbeddingBackend,
        PooledFeatureBackend,
        embed_images_by_class,
        error_attribution,
        pertinence_table,
    )

    out = prepare_output_dir(cfg)
    summary = {}
    inputs: list[Path] = []
    did_anything = False

    if cfg.analysis.embeddings_path or (cfg.analysis.checkpoint_path and cfg.analysis.input_dir):
        if cfg.analysis.embeddings_path:
            backend = FileEmbeddingBackend(cfg.analysis.embeddings_path)
            inputs.append(Path(cfg.analysis.embeddings_path))
            vectors_by_class: dict[int, list] = {}
            for image_id, vector in backend.vectors.items():
                cls = int(str(image_id).split("/", 1)[0])
                vectors_by_class.setdefault(cls, []).append(vector)
        else:
            checkpoint = load_checkpoint(cfg.analysis.checkpoint_path)
            backend = PooledFeatureBackend(checkpoint)
            inputs.append(Path(cfg.analysis.checkpoint_path))
            tree = _open_store_tree(Path(cfg.analysis.input_dir))
            split = cfg.analysis.split or ("test" if "test" in tree else sorted(tree)[0])
            if split not in tree:
                raise JobError(f"analysis.split {split!r} not found under {cfg.analysis.input_dir}")
            store = open_clip_store(tree[split])
            by_class: dict[int, list] = {}
            for _, clip in store:
                by_class.setdefault(int(clip.label), []).append(clip)
            vectors_by_class = embed_images_by_class(backend, by_class, frame_index=cfg.analysis.frame_index)
        table = pertinence_table(
            vectors_by_class,
            evaluated_classes=cfg.analysis.evaluated_classes,
            candidate_classes=cfg.analysis.candidate_classes,
        )
        table.to_csv(out / "pertinence.csv")
        summary["pertinence"] = {str(k): v for k, v in table.rows.items()}
        did_anything = True

    if cfg.analysis.confusion_path:
        data = json.loads(Path(cfg.analysis.confusion_path).read_text())
        counts = np.asarray(data["confusion"] if isinstance(data, dict) else data, dtype=np.int64)
        shape_err, motion_err, both_err = error_attribution(counts)
        attribution = {
            "shape_errors": shape_err,
            "motion_errors": motion_err,
            "both_errors": both_err,
            "total_errors": shape_err + motion_err + both_err,
        }
        (out / "attribution.json").write_text(json.dumps(attribution, indent=2))
        (out / "attribution.csv").write_text(
            "shape_errors,motion_errors,both_errors,total_errors\n"
            f"{shape_err},{motion_err},{both_err},{shape_err + motion_err + both_err}\n"
        )
        summary["attribution"] = attribution
        inputs.append(Path(cfg.analysis.confusion_path))
        did_anything = True

    if not did_anything:
        raise JobError(
            "analysis needs embeddings_path, checkpoint_path+input_dir, or confusion_path"
        )
    return _finish("analyze", cfg, out, inputs, summary)


def job_describe(cfg: ExperimentConfig, kind: str | None = None) -> dict:
    """Shape table for the configured (or given) model kind; no artifacts."""
    spec = resolve_model_spec(cfg, kind=kind)
    rows = describe_model(spec)
    return {"kind": spec.kind, "rows": rows, "text": render_shape_table(rows), "spec": spec.to_dict()}


JOBS = {
    "simulate": job_simulate,
    "downsample": job_downsample,
    "reconstruct": job_reconstruct,
    "train": job_train,
    "eval": job_eval,
    "grid": job_grid,
    "analyze": job_analyze,
}
