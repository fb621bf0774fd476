"""Request/response models for the pipeline service."""

from pydantic import BaseModel, ConfigDict, Field


class JobRequest(BaseModel):
    """One pipeline command: a full config document plus optional overrides."""

    model_config = ConfigDict(extra="forbid")

    config: dict = Field(default_factory=dict)
    overrides: dict[str, object] | None = None


class JobResponse(BaseModel):
    status: str
    command: str
    out_dir: str
    manifest: str
    summary: dict


class ValidateResponse(BaseModel):
    valid: bool
    errors: list[str] = Field(default_factory=list)
    config: dict | None = None


class DescribeResponse(BaseModel):
    kind: str
    rows: list[dict]
    text: str
    spec: dict


class HealthResponse(BaseModel):
    status: str
    version: str
