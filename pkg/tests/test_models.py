"""Architecture shape tables, composition, init determinism, gradients."""

import math

import numpy as np
import pytest
import torch
import torch.nn.functional as F

from rawgesture.models import (
    Checkpoint,
    ModelSpec,
    ModelSpecError,
    build_model,
    describe_model,
    load_checkpoint,
    parameter_count,
    render_shape_table,
    save_checkpoint,
)
from oracles import finite_difference_gradients, gradient_relative_errors, sample_parameter_picks

SMALL_RAW3D = ModelSpec(kind="raw3dnet", height=24, width=32, sfe_width=4, resnet_widths=(8, 16, 32), seed=3)


def rows_by_layer(rows):
    return {row["layer"]: row for row in rows}


class TestSfe:
    def test_default_shape_table(self):
        rows = rows_by_layer(describe_model(ModelSpec(kind="sfe")))
        assert rows["input"]["input"] == "1×240×320"
        assert rows["input"]["output"] == "16×240×320"
        assert rows["maxpool"]["output"] == "16×120×160"
        assert rows["encoder2"]["output"] == "32×120×160"
        assert rows["upsample"]["output"] == "16×240×320"
        assert rows["concat"]["output"] == "32×240×320"
        assert rows["decoder"]["output"] == "16×240×320"
        assert rows["output"]["output"] == "1×240×320"

    def test_desk_scale_preserves_size(self):
        model = build_model(ModelSpec(kind="sfe", height=24, width=32, sfe_width=4))
        out = model(torch.zeros(2, 1, 24, 32))
        assert out.shape == (2, 1, 24, 32)

    def test_odd_geometry_rejected(self):
        with pytest.raises(ModelSpecError):
            ModelSpec(kind="sfe", height=25, width=32)
        model = build_model(ModelSpec(kind="sfe", height=24, width=32))
        with pytest.raises(ModelSpecError):
            model(torch.zeros(1, 1, 25, 32))

    def test_no_output_activation(self):
        # negative outputs must be possible (bare conv head)
        model = build_model(ModelSpec(kind="sfe", height=16, width=16, sfe_width=4, seed=1))
        out = model(torch.randn(4, 1, 16, 16))
        assert float(out.min()) < 0.0


class TestResNet3d:
    def test_default_shape_table_matches_contract(self):
        rows = rows_by_layer(describe_model(ModelSpec(kind="resnet3d")))
        assert rows["conv1"]["input"] == "1×8×240×320"
        assert rows["conv1"]["output"] == "64×8×120×160"
        assert rows["maxpool"]["output"] == "64×4×60×80"
        assert rows["stage1"]["output"] == "64×4×60×80"
        assert rows["stage2"]["output"] == "128×2×30×40"
        assert rows["stage3"]["output"] == "256×1×15×20"
        assert rows["flatten"]["output"] == "256"
        assert rows["fc"]["output"] == "9"

    def test_desk_scale_stage_shapes(self):
        rows = rows_by_layer(describe_model(ModelSpec(kind="resnet3d", height=48, width=64)))
        assert rows["maxpool"]["output"] == "64×4×12×16"
        assert rows["stage2"]["output"] == "128×2×6×8"
        assert rows["stage3"]["output"] == "256×1×3×4"

    def test_batch_passthrough(self):
        model = build_model(ModelSpec(kind="resnet3d", height=32, width=32, resnet_widths=(8, 16, 32)))
        out = model(torch.zeros(2, 1, 8, 32, 32))
        assert out.shape == (2, 9)

    def test_wrong_clip_length_rejected(self):
        model = build_model(ModelSpec(kind="resnet3d", height=32, width=32, resnet_widths=(8, 16, 32)))
        with pytest.raises(ModelSpecError):
            model(torch.zeros(1, 1, 7, 32, 32))

    def test_logit_shift_invariance_and_tie_breaking(self):
        logits = np.array([[0.5, 0.5, 0.1, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0]])
        assert int(np.argmax(logits[0])) == 0
        shifted = logits + 100.0
        assert int(np.argmax(shifted[0])) == 0


class TestRaw3dNet:
    def test_composition_identity(self):
        model = build_model(SMALL_RAW3D).eval()
        x = torch.rand(2, 1, 8, 24, 32)
        with torch.no_grad():
            direct = model(x)
            feats = model.extract_features(x)
            manual = model.resnet(feats)
        assert torch.equal(direct, manual)

    def test_shared_sfe_weights_touch_every_frame(self):
        model = build_model(SMALL_RAW3D).eval()
        x = torch.rand(1, 1, 8, 24, 32)
        with torch.no_grad():
            before = model.extract_features(x).clone()
            model.sfe.head.bias.add_(0.5)
            after = model.extract_features(x)
        diff = (after - before).abs().amax(dim=(0, 1, 3, 4))
        assert bool((diff > 1e-6).all()), "every frame must respond to an SFE weight change"

    def test_gradients_flow_into_both_parts(self):
        model = build_model(SMALL_RAW3D)
        out = model(torch.rand(1, 1, 8, 24, 32))
        loss = F.cross_entropy(out, torch.tensor([4]))
        loss.backward()
        sfe_norm = sum(p.grad.abs().sum() for p in model.sfe.parameters())
        res_norm = sum(p.grad.abs().sum() for p in model.resnet.parameters())
        assert float(sfe_norm) > 0 and float(res_norm) > 0

    def test_finite_difference_gradient_check(self):
        torch.manual_seed(0)
        model = build_model(SMALL_RAW3D)
        x = torch.rand(1, 1, 8, 24, 32, dtype=torch.float64)
        label = torch.tensor([2])
        picks = sample_parameter_picks(model, 25, seed=1, prefix="sfe.") + sample_parameter_picks(
            model, 25, seed=2, prefix="resnet."
        )
        pairs = finite_difference_gradients(model, x, label, picks)
        errors = gradient_relative_errors(pairs)
        assert max(errors) <= 1e-3

    def test_describe_includes_both_parts(self):
        rows = describe_model(SMALL_RAW3D)
        layers = [row["layer"] for row in rows]
        assert "sfe.input" in layers and "resnet.fc" in layers and "stack" in layers
        table = render_shape_table(rows)
        assert "stack" in table


class TestUNetRestorer:
    def test_shape_and_range(self):
        spec = ModelSpec(kind="unet_restorer", height=24, width=32, unet_width=8)
        model = build_model(spec).eval()
        out = model(torch.rand(2, 1, 24, 32) * 5 - 2)
        assert out.shape == (2, 1, 24, 32)
        assert float(out.min()) >= 0.0 and float(out.max()) <= 1.0

    def test_zero_head_gives_constant_output(self):
        spec = ModelSpec(kind="unet_restorer", height=16, width=16, unet_width=4)
        model = build_model(spec).eval()
        with torch.no_grad():
            model.head.weight.zero_()
            model.head.bias.zero_()
            out = model(torch.zeros(1, 1, 16, 16))
        assert torch.equal(out, torch.zeros_like(out))

    def test_geometry_divisibility(self):
        with pytest.raises(ModelSpecError):
            ModelSpec(kind="unet_restorer", height=20, width=32)

    def test_identity_channel_training(self):
        # delta-PSF pairs: raw == scene, restorer must memorize identity
        torch.manual_seed(0)
        spec = ModelSpec(kind="unet_restorer", height=16, width=16, unet_width=8, seed=5)
        model = build_model(spec)
        scenes = torch.rand(50, 1, 16, 16)
        opt = torch.optim.Adam(model.parameters(), lr=3e-3)
        model.train()
        for _ in range(700):
            opt.zero_grad()
            loss = F.mse_loss(model(scenes), scenes)
            loss.backward()
            opt.step()
        model.eval()
        with torch.no_grad():
            mse = float(F.mse_loss(model(scenes), scenes))
        assert mse < 1e-3


class TestBuildAndCheckpoint:
    def test_seeded_init_is_deterministic(self):
        spec = ModelSpec(kind="resnet3d", height=32, width=32, resnet_widths=(8, 16, 32), seed=11)
        a = build_model(spec)
        b = build_model(spec)
        for (na, pa), (nb, pb) in zip(a.named_parameters(), b.named_parameters()):
            assert na == nb
            assert torch.equal(pa, pb)
        c = build_model(ModelSpec(kind="resnet3d", height=32, width=32, resnet_widths=(8, 16, 32), seed=12))
        assert any(not torch.equal(pa, pc) for pa, pc in zip(a.parameters(), c.parameters()))

    def test_forward_deterministic(self):
        spec = SMALL_RAW3D
        x = torch.rand(1, 1, 8, 24, 32)
        ya = build_model(spec).eval()(x)
        yb = build_model(spec).eval()(x)
        assert torch.equal(ya, yb)

    def test_parameter_names_and_count_from_spec(self):
        spec = SMALL_RAW3D
        a, b = build_model(spec), build_model(spec)
        assert [n for n, _ in a.named_parameters()] == [n for n, _ in b.named_parameters()]
        assert parameter_count(a) == parameter_count(b) > 0

    def test_checkpoint_roundtrip(self, tmp_path):
        spec = ModelSpec(kind="sfe", height=16, width=16, sfe_width=4, seed=2)
        model = build_model(spec)
        ckpt = Checkpoint(spec=spec, state=model.state_dict(), seed=2, config_digest="abc", best_val_accuracy=0.5, best_epoch=3)
        path = save_checkpoint(tmp_path / "sfe.pt", ckpt)
        back = load_checkpoint(path)
        assert back.spec == spec
        assert back.best_val_accuracy == 0.5
        rebuilt = back.build().eval()
        x = torch.rand(1, 1, 16, 16)
        assert torch.equal(rebuilt(x), model.eval()(x))

    def test_he_uniform_bounds(self):
        model = build_model(ModelSpec(kind="sfe", height=16, width=16, sfe_width=8, seed=0))
        conv = model.stem[0]
        fan_in = conv.weight.shape[1] * conv.weight.shape[2] * conv.weight.shape[3]
        assert float(conv.weight.abs().max()) <= math.sqrt(6.0 / fan_in)
        assert float(conv.bias.abs().max()) <= 1.0 / math.sqrt(fan_in)
        bn = model.stem[1]
        assert torch.equal(bn.weight, torch.ones_like(bn.weight))
        assert torch.equal(bn.bias, torch.zeros_like(bn.bias))
