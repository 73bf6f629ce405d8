"""Request and response models of the HTTP service."""

from __future__ import annotations

from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field


class ConfigInput(BaseModel):
    """A flat key = value config text plus typed or string overrides."""

    config_text: str = Field("", description="Contents of a key = value config file")
    overrides: Dict[str, Any] = Field(default_factory=dict, description="RunConfig keys replacing file values")


class RunRequest(ConfigInput):
    threads: int = Field(1, ge=1)
    snapshots: bool = Field(True, description="Record identity snapshots (mode runs)")


class RunResponse(BaseModel):
    kind: str
    config: Dict[str, Any]
    n_reports: int
    final: Dict[str, float]
    csv: str
    history_json: str
    elapsed_s: float


class AuditRequest(ConfigInput):
    history: str = Field(..., description="History in CSV or JSON form")
    format: Optional[str] = Field(None, pattern="^(csv|json)$")
    checks: List[str] = Field(default_factory=lambda: ["auto"])
    drift_tol: float = Field(1e-8, gt=0)
    seed: int = 0
    threads: int = Field(1, ge=1)


class AuditResponse(BaseModel):
    passed: bool
    reports: List[Dict[str, Any]]


class ConvergeRequest(ConfigInput):
    resolutions: List[int] = Field(default_factory=lambda: [1024, 2048, 4096])
    diagnostic: str = Field("drift", pattern="^(drift|probe|energy)$")
    threads: int = Field(1, ge=1)


class ConvergeResponse(BaseModel):
    passed: bool
    report: Dict[str, Any]


class CoulombResponse(BaseModel):
    passed: bool
    q_F: float
    t_final: float
    max_drift: float
    max_spin: float
    tolerance: float
    csv: str


class ValidateResponse(BaseModel):
    valid: bool
    config: Optional[Dict[str, Any]] = None
    serialized: Optional[str] = None
    error: Optional[Dict[str, Any]] = None


class HealthResponse(BaseModel):
    status: str
    version: str


class ErrorBody(BaseModel):
    kind: str
    message: str
    key: Optional[str] = None
    line: Optional[int] = None
    step: Optional[int] = None
    time: Optional[float] = None
