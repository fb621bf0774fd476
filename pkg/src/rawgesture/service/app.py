"""FastAPI app exposing each pipeline job as an endpoint.

Jobs run synchronously and write artifacts server-side; responses carry
the output directory, provenance manifest path, and a summary. The CLI
is a thin client of this app (in-process by default).
"""

from fastapi import FastAPI, HTTPException, Query

from .. import __version__
from ..config import ConfigError, ExperimentConfig, apply_overrides
from ..jobs import JOBS, JobError, job_describe
from ..models.nets import MODEL_KINDS
from .schemas import DescribeResponse, HealthResponse, JobRequest, JobResponse, ValidateResponse


def _resolve_config(request: JobRequest) -> ExperimentConfig:
    data = dict(request.config)
    if request.overrides:
        data = apply_overrides(data, request.overrides)
    return ExperimentConfig.from_dict(data)


def create_app() -> FastAPI:
    app = FastAPI(title="rawgesture pipeline", version=__version__)

    @app.get("/health", response_model=HealthResponse)
    def health():
        return HealthResponse(status="ok", version=__version__)

    @app.post("/validate", response_model=ValidateResponse)
    def validate(request: JobRequest):
        try:
            cfg = _resolve_config(request)
        except ConfigError as exc:
            return ValidateResponse(valid=False, errors=[str(exc)])
        problems = cfg.check_paths()
        return ValidateResponse(valid=not problems, errors=problems, config=cfg.model_dump())

    @app.get("/describe/{kind}", response_model=DescribeResponse)
    def describe(
        kind: str,
        height: int = Query(default=240),
        width: int = Query(default=320),
    ):
        if kind not in MODEL_KINDS:
            raise HTTPException(status_code=404, detail=f"unknown model kind {kind!r}")
        cfg = ExperimentConfig.from_dict({"dataset": {"scene_h": height, "scene_w": width}})
        try:
            return DescribeResponse(**job_describe(cfg, kind=kind))
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))

    def _run(command: str, request: JobRequest) -> JobResponse:
        try:
            cfg = _resolve_config(request)
        except ConfigError as exc:
            raise HTTPException(status_code=422, detail=f"invalid config: {exc}")
        try:
            result = JOBS[command](cfg)
        except (JobError, ConfigError, ValueError, FileNotFoundError) as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return JobResponse(
            status="ok",
            command=result.command,
            out_dir=result.out_dir,
            manifest=result.manifest_path,
            summary=result.summary,
        )

    for name in JOBS:
        # bind each job as POST /<name>
        def make_endpoint(command):
            def endpoint(request: JobRequest) -> JobResponse:
                return _run(command, request)

            endpoint.__name__ = f"run_{command}"
            return endpoint

        app.post(f"/{name}", response_model=JobResponse)(make_endpoint(name))

    return app
