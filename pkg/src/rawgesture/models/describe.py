"""Layer/shape tables for diffing a built model against its contract.

Shapes are traced from a real forward pass with hooks (never recomputed by
hand), formatted without the batch dimension, e.g. "64×4×60×80".
"""

import torch

from .nets import ModelSpec, Raw3dNet, ResNet3d, SpatialFeatureExtractor, UNetRestorer, build_model


def format_shape(shape: tuple[int, ...]) -> str:
    return "×".join(str(s) for s in shape[1:])


def _trace(model, x, names):
    records = {}
    handles = []
    modules = dict(model.named_modules())

    def make_hook(name):
        def hook(_mod, inp, out):
            records[name] = (tuple(inp[0].shape), tuple(out.shape))

        return hook

    for name in names:
        handles.append(modules[name].register_forward_hook(make_hook(name)))
    model.eval()
    with torch.no_grad():
        model(x)
    for h in handles:
        h.remove()
    return records


def _sfe_rows(records, width, prefix=""):
    r = lambda name: records[prefix + name]
    w = width
    rows = [
        {"layer": "input", "type": f"Conv3×3, {w}, stride 1 | BN | ReLU"},
        {"layer": "encoder1", "type": f"2×[Conv3×3, {w}, stride 1 | BN | ReLU]"},
        {"layer": "maxpool", "type": "MaxPool 2×2"},
        {"layer": "encoder2", "type": f"2×[Conv3×3, {2*w}, stride 1 | BN | ReLU]"},
        {"layer": "upsample", "type": f"Upsample 2×2 | Conv3×3, {w}, stride 1 | BN | ReLU"},
        {"layer": "concat", "type": "Concatenate"},
        {"layer": "decoder", "type": f"2×[Conv3×3, {w}, stride 1 | BN | ReLU]"},
        {"layer": "output", "type": "Conv3×3, 1, stride 1"},
    ]
    shapes = {
        "input": r("stem"),
        "encoder1": r("encoder1"),
        "maxpool": r("pool"),
        "encoder2": r("encoder2"),
        "upsample": r("upsample"),
        "decoder": r("decoder"),
        "output": r("head"),
    }
    skip = format_shape(shapes["encoder1"][1])
    up = format_shape(shapes["upsample"][1])
    for row in rows:
        if row["layer"] == "concat":
            row["input"] = f"{skip} {up}"
            row["output"] = format_shape(shapes["decoder"][0])
        else:
            inp, out = shapes[row["layer"]]
            row["input"] = format_shape(inp)
            row["output"] = format_shape(out)
    return rows


def _resnet_rows(records, widths, num_classes, prefix=""):
    r = lambda name: records[prefix + name]
    w1, w2, w3 = widths
    named = [
        ("conv1", f"Conv7×7×7, {w1}, stride (1,2,2) | BN | ReLU", "conv1"),
        ("maxpool", "MaxPool 3×3×3, stride 2", "maxpool"),
        ("stage1", f"[3×3×3, {w1}, stride 1 | 3×3×3, {w1}]", "layer1"),
        ("stage2", f"[3×3×3, {w2}, stride 2 | 3×3×3, {w2}]", "layer2"),
        ("stage3", f"[3×3×3, {w3}, stride 2 | 3×3×3, {w3}]", "layer3"),
        ("avgpool", "global average pool", "avgpool"),
    ]
    rows = []
    for layer, type_str, module in named:
        inp, out = r(module)
        rows.append({"layer": layer, "type": type_str, "input": format_shape(inp), "output": format_shape(out)})
    pooled = r("avgpool")[1]
    flat = pooled[1]
    fc_in, fc_out = r("fc")
    rows.append({"layer": "flatten", "type": "view", "input": format_shape(pooled), "output": str(flat)})
    rows.append(
        {
            "layer": "fc",
            "type": f"{num_classes}d-fc",
            "input": str(fc_in[1]),
            "output": str(fc_out[1]),
        }
    )
    return rows


def _unet_rows(records, model: UNetRestorer):
    rows = []
    inp, out = records["stem"]
    rows.append({"layer": "stem", "type": "2×[Conv3×3 | BN | ReLU]", "input": format_shape(inp), "output": format_shape(out)})
    for i in range(model.depth):
        inp, out = records[f"downs.{i}"]
        rows.append(
            {"layer": f"down{i+1}", "type": "MaxPool 2×2 | 2×[Conv3×3 | BN | ReLU]", "input": format_shape(inp), "output": format_shape(out)}
        )
    for i in range(model.depth):
        uin, uout = records[f"ups.{i}"]
        din, dout = records[f"decoders.{i}"]
        rows.append(
            {"layer": f"up{i+1}", "type": "Upsample 2×2 | Conv3×3 | concat | 2×[Conv3×3 | BN | ReLU]", "input": format_shape(uin), "output": format_shape(dout)}
        )
    inp, out = records["head"]
    rows.append({"layer": "output", "type": "Conv3×3, 1 | clamp [0,1]", "input": format_shape(inp), "output": format_shape(out)})
    return rows


def describe_model(spec: ModelSpec) -> list[dict]:
    """Build the model and trace its layer table on a dummy input."""
    model = build_model(spec)
    x = torch.zeros((1, *spec.input_shape()))
    if isinstance(model, SpatialFeatureExtractor):
        names = ["stem", "encoder1", "pool", "encoder2", "upsample", "decoder", "head"]
        return _sfe_rows(_trace(model, x, names), spec.sfe_width)
    if isinstance(model, ResNet3d):
        names = ["conv1", "maxpool", "layer1", "layer2", "layer3", "avgpool", "fc"]
        return _resnet_rows(_trace(model, x, names), spec.resnet_widths, spec.num_classes)
    if isinstance(model, Raw3dNet):
        sfe_names = [f"sfe.{n}" for n in ("stem", "encoder1", "pool", "encoder2", "upsample", "decoder", "head")]
        res_names = [f"resnet.{n}" for n in ("conv1", "maxpool", "layer1", "layer2", "layer3", "avgpool", "fc")]
        records = _trace(model, x, sfe_names + res_names)
        rows = _sfe_rows(records, spec.sfe_width, prefix="sfe.")
        for row in rows:
            row["layer"] = f"sfe.{row['layer']}"
        stack_in = format_shape(records["sfe.head"][1])
        stack_out = format_shape(records["resnet.conv1"][0])
        rows.append({"layer": "stack", "type": f"stack {spec.clip_len} feature frames", "input": stack_in, "output": stack_out})
        res_rows = _resnet_rows(records, spec.resnet_widths, spec.num_classes, prefix="resnet.")
        for row in res_rows:
            row["layer"] = f"resnet.{row['layer']}"
        return rows + res_rows
    names = ["stem"] + [f"downs.{i}" for i in range(model.depth)] + [
        f"ups.{i}" for i in range(model.depth)
    ] + [f"decoders.{i}" for i in range(model.depth)] + ["head"]
    return _unet_rows(_trace(model, x, names), model)


def render_shape_table(rows: list[dict]) -> str:
    widths = {
        key: max(len(key), max(len(str(row[key])) for row in rows)) for key in ("layer", "type", "input", "output")
    }
    lines = ["  ".join(key.ljust(widths[key]) for key in ("layer", "type", "input", "output"))]
    lines.append("  ".join("-" * widths[key] for key in ("layer", "type", "input", "output")))
    for row in rows:
        lines.append("  ".join(str(row[key]).ljust(widths[key]) for key in ("layer", "type", "input", "output")))
    return "\n".join(lines)
