"""Command-line client for the pipeline service.

Every subcommand posts the config (file plus ``--set`` overrides) to the
corresponding service endpoint. Without ``--server`` the app runs
in-process over an ASGI transport, so single-machine use needs no daemon;
with ``--server URL`` the same requests go to a remote instance.
"""

import asyncio
import json
import sys
from pathlib import Path

import click
import httpx
import yaml


def _load_config_data(config_path: str | None) -> dict:
    if config_path is None:
        return {}
    path = Path(config_path)
    if not path.exists():
        raise click.ClickException(f"config file not found: {path}")
    data = yaml.safe_load(path.read_text()) or {}
    if not isinstance(data, dict):
        raise click.ClickException("config document must be a mapping")
    return data


def _overrides_dict(sets: tuple[str, ...], extra: dict) -> dict:
    from .config import ConfigError, parse_override

    out = {}
    for expr in sets:
        try:
            keys, value = parse_override(expr)
        except ConfigError as exc:
            raise click.ClickException(str(exc))
        out[".".join(keys)] = value
    for key, value in extra.items():
        if value is not None:
            out[key] = value
    return out


async def _request(server: str | None, method: str, path: str, payload: dict | None):
    if server:
        async with httpx.AsyncClient(base_url=server, timeout=None) as client:
            return await (client.post(path, json=payload) if method == "POST" else client.get(path, params=payload))
    from .service import create_app

    transport = httpx.ASGITransport(app=create_app())
    async with httpx.AsyncClient(transport=transport, base_url="http://rawgesture.internal", timeout=None) as client:
        return await (client.post(path, json=payload) if method == "POST" else client.get(path, params=payload))


def call_service(server: str | None, method: str, path: str, payload: dict | None = None) -> dict:
    try:
        response = asyncio.run(_request(server, method, path, payload))
    except httpx.HTTPError as exc:
        raise click.ClickException(f"cannot reach service: {exc}")
    if response.status_code >= 400:
        try:
            detail = response.json().get("detail", response.text)
        except Exception:
            detail = response.text
        raise click.ClickException(f"{path} failed ({response.status_code}): {detail}")
    return response.json()


def run_job(command: str, config: str | None, sets: tuple[str, ...], server: str | None, **flag_overrides):
    payload = {
        "config": _load_config_data(config),
        "overrides": _overrides_dict(sets, flag_overrides),
    }
    result = call_service(server, "POST", f"/{command}", payload)
    click.echo(json.dumps(result["summary"], indent=2, sort_keys=True))
    click.echo(f"artifacts: {result['out_dir']}")
    click.echo(f"manifest:  {result['manifest']}")


config_option = click.option("--config", "-c", type=str, default=None, help="YAML experiment config.")
set_option = click.option("--set", "-s", "sets", multiple=True, help="Override: section.key=value.")
server_option = click.option("--server", type=str, default=None, help="Remote service URL (default: in-process).")
force_option = click.option("--force", is_flag=True, help="Overwrite a non-empty output directory.")
out_option = click.option("--out", type=str, default=None, help="Output directory (output.dir).")


@click.group()
def main():
    """Gesture recognition on raw lensless video: simulate, train, evaluate."""


@main.command()
@config_option
@set_option
@server_option
@force_option
@out_option
@click.option("--dataset-root", type=str, default=None, help="Gesture dataset root (dataset.root).")
def simulate(config, sets, server, force, out, dataset_root):
    """Render scene clips and record them through the simulated camera."""
    run_job(
        "simulate", config, sets, server,
        **{"output.dir": out, "output.force": force or None, "dataset.root": dataset_root},
    )


@main.command()
@config_option
@set_option
@server_option
@force_option
@out_option
@click.option("--in", "input_dir", type=str, default=None, help="Raw clip store (sampling.input_dir).")
@click.option("--method", type=str, default=None, help="resize | uniform | random | erase.")
def downsample(config, sets, server, force, out, input_dir, method):
    """Reduce raw frames with one of the down-sampling codecs."""
    run_job(
        "downsample", config, sets, server,
        **{
            "output.dir": out,
            "output.force": force or None,
            "sampling.input_dir": input_dir,
            "sampling.method": method,
        },
    )


@main.command()
@config_option
@set_option
@server_option
@force_option
@out_option
@click.option("--psf", type=str, default=None, help="PSF image file (optics.psf_path).")
@click.option("--in", "input_dir", type=str, default=None, help="Raw clip store (recon.input_dir).")
@click.option("--iters", type=int, default=None, help="ADMM iteration cap (recon.max_iters).")
@click.option("--tv", type=float, default=None, help="TV weight (recon.tv_weight).")
def reconstruct(config, sets, server, force, out, psf, input_dir, iters, tv):
    """ADMM-reconstruct scene frames from raw measurements."""
    run_job(
        "reconstruct", config, sets, server,
        **{
            "output.dir": out,
            "output.force": force or None,
            "optics.psf_path": psf,
            "recon.input_dir": input_dir,
            "recon.max_iters": iters,
            "recon.tv_weight": tv,
        },
    )


@main.command()
@config_option
@set_option
@server_option
@force_option
@out_option
@click.option("--data", type=str, default=None, help="Store tree with train/ and val/ (training.data_dir).")
def train(config, sets, server, force, out, data):
    """Train a classifier and keep the best-validation checkpoint."""
    run_job(
        "train", config, sets, server,
        **{"output.dir": out, "output.force": force or None, "training.data_dir": data},
    )


@main.command(name="eval")
@config_option
@set_option
@server_option
@force_option
@out_option
@click.option("--checkpoint", type=str, default=None, help="Trained checkpoint (training.checkpoint_path).")
@click.option("--data", type=str, default=None, help="Store tree with test/ (training.data_dir).")
@click.option("--emit-panels", is_flag=True, help="Write a PNG grid of sample frames.")
def eval_cmd(config, sets, server, force, out, checkpoint, data, emit_panels):
    """Evaluate a checkpoint: accuracy, confusion, per-illumination."""
    run_job(
        "eval", config, sets, server,
        **{
            "output.dir": out,
            "output.force": force or None,
            "training.checkpoint_path": checkpoint,
            "training.data_dir": data,
            "output.emit_panels": emit_panels or None,
        },
    )


@main.command()
@config_option
@set_option
@server_option
@force_option
@out_option
@click.option("--parallel", type=int, default=None, help="Concurrent cells (training.parallel_cells).")
def grid(config, sets, server, force, out, parallel):
    """Run the configured experiment grid (dataset variants x models)."""
    run_job(
        "grid", config, sets, server,
        **{"output.dir": out, "output.force": force or None, "training.parallel_cells": parallel},
    )


@main.command()
@config_option
@set_option
@server_option
@force_option
@out_option
@click.option("--embeddings", type=str, default=None, help="Embedding file (analysis.embeddings_path).")
@click.option("--checkpoint", type=str, default=None, help="Checkpoint to pool features from.")
@click.option("--in", "input_dir", type=str, default=None, help="Clip store for checkpoint embeddings.")
@click.option("--confusion", type=str, default=None, help="Eval report JSON for error attribution.")
def analyze(config, sets, server, force, out, embeddings, checkpoint, input_dir, confusion):
    """Clustering pertinence counts and/or confusion error attribution."""
    run_job(
        "analyze", config, sets, server,
        **{
            "output.dir": out,
            "output.force": force or None,
            "analysis.embeddings_path": embeddings,
            "analysis.checkpoint_path": checkpoint,
            "analysis.input_dir": input_dir,
            "analysis.confusion_path": confusion,
        },
    )


@main.command()
@click.argument("kind", type=click.Choice(["sfe", "resnet3d", "raw3dnet", "unet_restorer"]))
@click.option("--height", type=int, default=240, show_default=True)
@click.option("--width", type=int, default=320, show_default=True)
@server_option
def describe(kind, height, width, server):
    """Print the layer/shape table of a model."""
    result = call_service(server, "GET", f"/describe/{kind}", {"height": height, "width": width})
    click.echo(result["text"])


@main.command()
@config_option
@set_option
@server_option
def validate(config, sets, server):
    """Validate a config document against the schema and input paths."""
    payload = {"config": _load_config_data(config), "overrides": _overrides_dict(sets, {})}
    result = call_service(server, "POST", "/validate", payload)
    if result["valid"]:
        click.echo("config OK")
    else:
        for problem in result["errors"]:
            click.echo(f"error: {problem}", err=True)
        sys.exit(1)


@main.command()
@click.option("--host", type=str, default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(host, port):
    """Run the pipeline service."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=host, port=port)


if __name__ == "__main__":
    main()
