"""Acceptance suite: one test per release criterion, one PASS line each.

Run `pytest tests/test_acceptance.py -v -s` for the per-criterion lines.
Criteria 10 and 11 are long experiments, deselected by default; enable
with `-m optional_long` (11 additionally needs the real gesture dataset
via RAWGESTURE_CAMBRIDGE_ROOT and a serious training budget).
"""

import math
import os
import time

import numpy as np
import pytest
import torch

from rawgesture.analysis import error_attribution, pertinence_counts, pertinence_table
from rawgesture.clips import VideoClip
from rawgesture.dataset import DatasetManifest, GestureSequence, manifest_subvideos, scan_dataset, split_dataset
from rawgesture.models import ModelSpec, build_model, describe_model
from rawgesture.optics import (
    SceneFrame,
    SensorGeometry,
    forward_measure,
    gaussian_psf,
    normalize_psf,
    synthesize_caustic_psf,
)
from rawgesture.recon import AdmmParams, PlaneOperators, admm_reconstruct, grad_forward
from rawgesture.sampling import SampleSpec, downsample_clip, downsample_frame, make_mask
from rawgesture.training import (
    GridCell,
    TrainConfig,
    materialize_variant,
    run_experiment_grid,
    train_model,
)

from conftest import gesture_clips
from oracles import (
    attribution_oracle,
    conv_crop_oracle,
    finite_difference_gradients,
    gradient_relative_errors,
    psnr,
    sample_parameter_picks,
)

CAMBRIDGE_ROOT = os.environ.get("RAWGESTURE_CAMBRIDGE_ROOT", "")


def report(criterion: str, detail: str, ok: bool = True):
    print(f"\n[{criterion}] {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, f"{criterion}: {detail}"


class TestCriterion1ForwardOracle:
    def test_fft_matches_bruteforce_200_instances(self):
        rng = np.random.default_rng(2024)
        worst = 0.0
        for _ in range(200):
            hs, ws = rng.integers(2, 17, size=2)
            hp = int(rng.integers(1, min(6, hs + 1)))
            wp = int(rng.integers(1, min(6, ws + 1)))
            scene = rng.uniform(size=(hs, ws))
            psf = normalize_psf(rng.uniform(0.0, 1.0, size=(hp, wp)) + 1e-3)
            geom = SensorGeometry.for_scene_psf((hs, ws), (hp, wp))
            got = forward_measure(SceneFrame(scene), psf, geometry=geom).pixels
            want = conv_crop_oracle(scene, psf.grid, geom)
            worst = max(worst, float(np.max(np.abs(got - want))))
        report("criterion 1", f"FFT vs brute-force max abs error {worst:.2e} <= 1e-6 over 200 instances", worst <= 1e-6)


class TestCriterion2AdjointIdentity:
    def test_adjoint_dot_product_100_pairs_default_geometry(self):
        from rawgesture.optics import convolve_on_plane, correlate_on_plane, crop_to_sensor, pad_to_plane, psf_otf

        rng = np.random.default_rng(7)
        psf = synthesize_caustic_psf(shape=(240, 320), seed=0)
        geom = SensorGeometry.for_scene_psf((240, 320), psf.shape)
        otf = psf_otf(psf, geom)
        hs, ws = geom.scene_shape(psf.shape)
        worst = 0.0
        for _ in range(100):
            x = rng.standard_normal((hs, ws))
            y = rng.standard_normal(geom.sensor_shape)
            ax = crop_to_sensor(convolve_on_plane(x, otf, geom), geom)
            aty = correlate_on_plane(pad_to_plane(y, geom), otf)[:hs, :ws]
            err = abs(np.vdot(ax, y) - np.vdot(x, aty)) / max(np.linalg.norm(ax) * np.linalg.norm(y), 1e-30)
            worst = max(worst, float(err))
        report("criterion 2", f"adjoint identity max rel error {worst:.2e} <= 1e-6 over 100 pairs", worst <= 1e-6)


class TestCriterion3ShapeConformance:
    def test_describe_reproduces_reference_rows(self):
        sfe_rows = describe_model(ModelSpec(kind="sfe"))
        res_rows = describe_model(ModelSpec(kind="resnet3d"))
        cells = [row["input"] for row in sfe_rows + res_rows] + [row["output"] for row in sfe_rows + res_rows]
        required = [
            "1×240×320",
            "16×240×320",
            "16×120×160",
            "32×120×160",
            "32×240×320",
            "1×8×240×320",
            "64×8×120×160",
            "64×4×60×80",
            "128×2×30×40",
            "256×1×15×20",
            "256",
            "9",
        ]
        missing = [shape for shape in required if shape not in cells]
        report("criterion 3", f"shape table carries all reference rows (missing: {missing})", not missing)


class TestCriterion4GradientCheck:
    def test_raw3dnet_finite_difference(self):
        start = time.time()
        torch.manual_seed(0)
        spec = ModelSpec(kind="raw3dnet", height=24, width=32, sfe_width=4, resnet_widths=(8, 16, 32), seed=3)
        model = build_model(spec)
        x = torch.rand(1, 1, 8, 24, 32, dtype=torch.float64)
        picks = sample_parameter_picks(model, 25, seed=1, prefix="sfe.") + sample_parameter_picks(
            model, 25, seed=2, prefix="resnet."
        )
        pairs = finite_difference_gradients(model, x, torch.tensor([2]), picks)
        worst = max(gradient_relative_errors(pairs))
        elapsed = time.time() - start
        report(
            "criterion 4",
            f"gradient check max rel error {worst:.2e} <= 1e-3 on 50 params in {elapsed:.0f}s (< 300s)",
            worst <= 1e-3 and elapsed < 300,
        )


class TestCriterion5OverfitSmoke:
    def test_uniform_cross_entropy(self):
        loss = float(torch.nn.functional.cross_entropy(torch.zeros(4, 9), torch.tensor([0, 3, 5, 8])))
        report("criterion 5a", f"uniform-logit cross-entropy {loss:.7f} = ln 9 +- 1e-6", abs(loss - math.log(9)) <= 1e-6)

    def test_memorize_20_clips_within_200_steps(self):
        clips = gesture_clips(20, frame_shape=(48, 64), classes=tuple(range(9)), seed=7)
        spec = ModelSpec(kind="raw3dnet", height=48, width=64, sfe_width=4, resnet_widths=(8, 16, 32), seed=2)
        config = TrainConfig(epochs=100, batch_size=12, seed=5)
        ckpt, history = train_model(spec, clips, clips, config, max_steps=200)
        best = max(history.train_accuracy + [ckpt.best_val_accuracy])
        report("criterion 5b", f"overfit smoke reached accuracy {best:.3f} within 200 steps", best == 1.0)


class TestCriterion6AdmmBenchmark:
    def test_benchmark_and_dense_oracle(self):
        start = time.time()
        y, x = np.mgrid[0:64, 0:64]
        scene = 0.05 + 0.9 * np.exp(-(((y - 30) ** 2 + (x - 36) ** 2) / (2 * 8.0**2)))
        scene += 0.4 * np.exp(-(((y - 14) ** 2 + (x - 16) ** 2) / (2 * 4.0**2)))
        scene = np.clip(scene, 0.0, 1.0)
        psf = gaussian_psf((9, 9), sigma=1.5)
        geom = SensorGeometry.for_scene_psf((64, 64), (9, 9))
        b = forward_measure(SceneFrame(scene), psf, geometry=geom)
        est, state = admm_reconstruct(b, psf, AdmmParams(), geom)
        quality = psnr(est.pixels, scene)
        ok_bench = (
            quality >= 30.0
            and state.iteration <= 200
            and state.primal_history[-1] < 1e-3
            and state.dual_history[-1] < 1e-3
        )

        # x-update vs dense normal equations on a 12x12 scene
        rng = np.random.default_rng(1)
        psf_small = normalize_psf(rng.uniform(0.1, 1.0, size=(5, 5)))
        geom_small = SensorGeometry.for_scene_psf((12, 12), (5, 5))
        ops = PlaneOperators(psf_small, geom_small)
        ph, pw = geom_small.plane_shape
        n = ph * pw
        params = AdmmParams(rho_data=1.1, rho_tv=0.6, rho_nonneg=0.3)
        H = np.zeros((n, n))
        Dx = np.zeros((n, n))
        Dy = np.zeros((n, n))
        for k in range(n):
            e = np.zeros(n)
            e[k] = 1.0
            plane = e.reshape(ph, pw)
            H[:, k] = ops.convolve(plane).ravel()
            g = grad_forward(plane)
            Dx[:, k] = g[0].ravel()
            Dy[:, k] = g[1].ravel()
        nu_t = rng.standard_normal((ph, pw))
        u_t = rng.standard_normal((2, ph, pw))
        w_t = rng.standard_normal((ph, pw))
        lhs = params.rho_data * H.T @ H + params.rho_tv * (Dx.T @ Dx + Dy.T @ Dy) + params.rho_nonneg * np.eye(n)
        rhs = (
            params.rho_data * H.T @ nu_t.ravel()
            + params.rho_tv * (Dx.T @ u_t[0].ravel() + Dy.T @ u_t[1].ravel())
            + params.rho_nonneg * w_t.ravel()
        )
        dense = np.linalg.solve(lhs, rhs).reshape(ph, pw)
        fast = ops.solve_x(nu_t, u_t, w_t, params)
        oracle_err = float(np.max(np.abs(dense - fast)))
        elapsed = time.time() - start
        report(
            "criterion 6",
            f"ADMM benchmark PSNR {quality:.1f} dB (>=30), residuals "
            f"({state.primal_history[-1]:.1e}, {state.dual_history[-1]:.1e}) < 1e-3 in "
            f"{state.iteration} iters; dense-solve error {oracle_err:.2e} <= 1e-6; {elapsed:.0f}s < 120s",
            ok_bench and oracle_err <= 1e-6 and elapsed < 120,
        )


class TestCriterion7SamplingBudgets:
    def test_budgets_and_mask_stability(self):
        source = (320, 240)
        budgets = {
            "resize": SampleSpec(method="resize", target_w=100, target_h=75).valid_pixels(),
            "uniform": SampleSpec(method="uniform", target_w=100, target_h=75).valid_pixels(),
            "random": SampleSpec(method="random", target_w=100, target_h=75, seed=1).valid_pixels(),
            "erase": SampleSpec(method="erase", target_w=200, target_h=150, keep_fraction=0.25, seed=1).valid_pixels(),
        }
        resize_small = SampleSpec(method="resize", target_w=50, target_h=37).valid_pixels()

        # realized budgets, not just declared ones
        frame = np.random.default_rng(0).uniform(size=(240, 320)).astype(np.float32)
        assert downsample_frame(frame, SampleSpec(method="resize", target_w=100, target_h=75)).size == 7500
        assert downsample_frame(frame, SampleSpec(method="uniform", target_w=100, target_h=75)).size == 7500
        assert downsample_frame(frame, SampleSpec(method="random", target_w=100, target_h=75, seed=1)).size == 7500
        erase_mask = make_mask(SampleSpec(method="erase", target_w=200, target_h=150, keep_fraction=0.25, seed=1), source)
        assert int(erase_mask.keep.sum()) == 7500
        assert downsample_frame(frame, SampleSpec(method="resize", target_w=50, target_h=37)).size == 1850

        clip = VideoClip(np.random.default_rng(1).uniform(size=(8, 240, 320)).astype(np.float32), kind="raw")
        spec = SampleSpec(method="random", target_w=100, target_h=75, seed=9)
        mask = make_mask(spec, source)
        out = downsample_clip(clip, spec)
        frames_equal = all(
            np.array_equal(out.frames[i], downsample_frame(clip.frames[i], mask)) for i in range(8)
        )
        ok = (
            budgets == {"resize": 7500, "uniform": 7500, "random": 7500, "erase": 7500}
            and resize_small == 1850
            and frames_equal
        )
        report(
            "criterion 7",
            f"budgets {budgets}, (50,37) resize {resize_small}=1850, one mask across all 8 frames",
            ok,
        )


class TestCriterion8DatasetAccounting:
    def test_counting_formulas(self, tmp_path):
        if CAMBRIDGE_ROOT:
            manifest = scan_dataset(CAMBRIDGE_ROOT, layout="cambridge")
            n_seq = len(manifest.sequences)
            n_classes = len(manifest.classes())
            n_illum = len(manifest.illuminations())
            split = split_dataset(manifest, seed=0)
            n_test = len(split.by_split("test"))
            n_train_pool = n_seq - n_test
            total = sum(len(manifest_subvideos(split, s, seed=0)) for s in ("train", "val", "test"))
            ok = (
                n_seq == 900
                and n_classes == 9
                and n_illum == 5
                and (n_train_pool, n_test) == (720, 180)
                and abs(total - 3612) / 3612 <= 0.10
            )
            report(
                "criterion 8",
                f"real dataset: {n_seq} seq / {n_classes} classes / {n_illum} illuminations; "
                f"{n_train_pool}/{n_test} split; {total} sub-videos (within 10% of 3612)",
                ok,
            )
            return

        # synthetic manifest with the real dataset's shape: 9 classes x 100
        rng = np.random.default_rng(0)
        sequences = [
            GestureSequence(
                id=f"c{c}/s{i:03d}",
                frame_paths=tuple(f"f{j}" for j in range(int(rng.integers(50, 71)))),
                class_id=c,
                shape_id=c // 3,
                motion_id=c % 3,
                illumination_id=i % 5,
            )
            for c in range(9)
            for i in range(100)
        ]
        manifest = DatasetManifest(sequences=sequences)
        split = split_dataset(manifest, test_fraction=0.20, val_fraction_of_train=0.15, seed=4)
        n_test = len(split.by_split("test"))
        n_train_pool = len(split.by_split("train")) + len(split.by_split("val"))
        total = sum(len(manifest_subvideos(split, s, seed=0)) for s in ("train", "val", "test"))
        illum = len(manifest.illuminations())

        # plus a real directory scan of a fixture with known counts
        from rawgesture.synthetic import write_synthetic_dataset

        root = tmp_path / "fixture"
        write_synthetic_dataset(root, classes=9, sequences_per_class=3, n_frames=10, frame_shape=(8, 8))
        scanned = scan_dataset(root)
        ok = (
            (n_train_pool, n_test) == (720, 180)
            and illum == 5
            and abs(total - 3612) / 3612 <= 0.10
            and len(scanned.sequences) == 27
            and len(scanned.classes()) == 9
        )
        report(
            "criterion 8",
            f"synthetic: 900 seqs -> {n_train_pool}/{n_test} split, {total} sub-videos "
            f"(|{total}-3612|/3612 = {abs(total-3612)/3612:.3f} <= 0.10), fixture scan 27 seqs / 9 classes",
            ok,
        )


class TestCriterion9AnalysisProtocol:
    def test_pertinence_and_attribution(self):
        rng = np.random.default_rng(0)
        vectors = {}
        for cls in range(3):
            center = np.zeros(16)
            center[cls] = 1.0
            vectors[cls] = [center + 0.05 * rng.standard_normal(16) for _ in range(9)]
        table = pertinence_table(vectors)
        diagonal = all(row[table.candidate_classes.index(cls)] == 9 for cls, row in table.rows.items())
        sums = all(sum(pertinence_counts(vectors, cls)) == 9 for cls in range(3))

        matches = True
        for _ in range(100):
            counts = rng.integers(0, 25, size=(9, 9))
            if error_attribution(counts) != attribution_oracle(counts):
                matches = False
                break
        report(
            "criterion 9",
            f"separable fixture diagonal={diagonal}, counts sum to class size={sums}, "
            f"attribution matches oracle on 100 random matrices={matches}",
            diagonal and sums and matches,
        )


@pytest.mark.optional_long
class TestCriterion10OrderingProperty:
    def test_raw3dnet_beats_resnet_and_resize_beats_random(self):
        """Scaled experiment (~30-60 min CPU): direction properties only."""
        start = time.time()
        from rawgesture.dataset import extract_subvideos, to_clip
        from rawgesture.synthetic import write_synthetic_dataset
        import tempfile

        with tempfile.TemporaryDirectory() as tmp:
            root = write_synthetic_dataset(
                f"{tmp}/fixture", classes=6, sequences_per_class=5, n_frames=24, frame_shape=(48, 64), seed=3
            )
            manifest = split_dataset(scan_dataset(root), seed=1)
            sets = {}
            for split in ("train", "val", "test"):
                clips = []
                for seq in manifest.by_split(split):
                    for sub in extract_subvideos(seq, seed=1):
                        clips.append(to_clip(sub, seq, scene_shape=(48, 64)))
                sets[split] = clips

        psf = synthesize_caustic_psf(shape=(48, 64), density=0.02, blur_sigma=2.0, seed=0)
        geometry = SensorGeometry.for_scene_psf((48, 64), psf.shape)
        lensless = materialize_variant(sets, "lensless", psf=psf, geometry=geometry)

        template = ModelSpec(kind="raw3dnet", height=48, width=64, sfe_width=4, resnet_widths=(8, 16, 32), seed=0)
        config = TrainConfig(epochs=30, batch_size=12, lr_start=2e-3, lr_end=1e-5, seed=11)
        cells = [
            GridCell(name="lensless-raw3dnet", variant="lensless", model_kind="raw3dnet"),
            GridCell(name="lensless-resnet3d", variant="lensless", model_kind="resnet3d"),
            GridCell(
                name="resize",
                variant="lensless",
                model_kind="raw3dnet",
                sampling=SampleSpec(method="resize", target_w=32, target_h=24, seed=1),
            ),
            GridCell(
                name="random",
                variant="lensless",
                model_kind="raw3dnet",
                sampling=SampleSpec(method="random", target_w=32, target_h=24, seed=1),
            ),
        ]
        grid_report = run_experiment_grid(cells, {"lensless": lensless}, template, config)
        acc = {row["name"]: row["accuracy"] for row in grid_report.rows}
        elapsed = time.time() - start
        ok = acc["lensless-raw3dnet"] > acc["lensless-resnet3d"] and acc["resize"] >= acc["random"]
        report(
            "criterion 10",
            f"raw3dnet {acc['lensless-raw3dnet']:.3f} > resnet3d {acc['lensless-resnet3d']:.3f}; "
            f"resize {acc['resize']:.3f} >= random {acc['random']:.3f} ({elapsed:.0f}s)",
            ok,
        )


@pytest.mark.optional_long
@pytest.mark.skipif(not CAMBRIDGE_ROOT, reason="full reproduction needs the real dataset (RAWGESTURE_CAMBRIDGE_ROOT)")
class TestCriterion11FullReproduction:
    def test_table3_exp1_exp4_exp5(self):
        """Best-effort full-scale reproduction; hours of accelerator time."""
        manifest = split_dataset(scan_dataset(CAMBRIDGE_ROOT), seed=0)
        from rawgesture.dataset import extract_subvideos, to_clip

        sets = {}
        for split in ("train", "val", "test"):
            clips = []
            for seq in manifest.by_split(split):
                for sub in extract_subvideos(seq, seed=0):
                    clips.append(to_clip(sub, seq, scene_shape=(240, 320)))
            sets[split] = clips
        psf = synthesize_caustic_psf(shape=(240, 320), seed=0)
        geometry = SensorGeometry.for_scene_psf((240, 320), psf.shape)
        variants = {
            "original": materialize_variant(sets, "original"),
            "lensless": materialize_variant(sets, "lensless", psf=psf, geometry=geometry),
        }
        template = ModelSpec(kind="raw3dnet", seed=0)
        config = TrainConfig()
        cells = [
            GridCell(name="exp1", variant="original", model_kind="resnet3d"),
            GridCell(name="exp4", variant="lensless", model_kind="resnet3d"),
            GridCell(name="exp5", variant="lensless", model_kind="raw3dnet"),
        ]
        grid_report = run_experiment_grid(cells, variants, template, config)
        acc = {row["name"]: 100 * row["accuracy"] for row in grid_report.rows}
        targets = {"exp1": 99.36, "exp4": 78.97, "exp5": 98.59}
        deltas = {k: abs(acc[k] - targets[k]) for k in targets}
        ok = all(d <= 2.0 for d in deltas.values())
        report("criterion 11", f"full-scale accuracies {acc} vs targets {targets} (deltas {deltas})", ok)
