"""
Request handlers: pure functions from request models to response models.

The FastAPI app and the in-process CLI path both call these, so the two
transports produce identical outputs.
"""

from __future__ import annotations

import time

from .. import runner
from ..config import ConfigError, parse_config, serialize, with_overrides
from ..records import history_to_csv, history_to_json, load_history
from . import schemas


def resolve_config(req: schemas.ConfigInput):
    return with_overrides(parse_config(req.config_text), req.overrides)


def _final_row(history) -> dict:
    rep = history.reports[-1]
    return {k: float(v) for k, v in zip(("t", "E", "E_C", "E_l", "E_gamma", "constraint_l2"), rep.csv_row())}


def _run(kind: str, req: schemas.RunRequest) -> schemas.RunResponse:
    cfg = resolve_config(req)
    t0 = time.perf_counter()
    if kind == "mode":
        hist, _ = runner.run_mode(cfg, snapshots=req.snapshots)
    else:
        hist, _ = runner.run_coupled(cfg)
    return schemas.RunResponse(
        kind=kind, config=cfg.to_dict(), n_reports=len(hist.reports), final=_final_row(hist),
        csv=history_to_csv(hist), history_json=history_to_json(hist),
        elapsed_s=time.perf_counter() - t0,
    )


def run_mode(req: schemas.RunRequest) -> schemas.RunResponse:
    return _run("mode", req)


def run_coupled(req: schemas.RunRequest) -> schemas.RunResponse:
    return _run("coupled", req)


def audit(req: schemas.AuditRequest) -> schemas.AuditResponse:
    cfg = resolve_config(req)
    history = load_history(req.history, req.format)
    reports = runner.audit_history(history, req.checks, cfg=cfg, drift_tol=req.drift_tol,
                                   threads=req.threads, seed=req.seed)
    return schemas.AuditResponse(passed=all(r.passed for r in reports), reports=[r.to_dict() for r in reports])


def converge(req: schemas.ConvergeRequest) -> schemas.ConvergeResponse:
    cfg = resolve_config(req)
    rep = runner.converge(cfg, req.resolutions, req.diagnostic, threads=req.threads)
    return schemas.ConvergeResponse(passed=rep.passed, report=rep.to_dict())


def coulomb_check(req: schemas.ConfigInput) -> schemas.CoulombResponse:
    result, hist = runner.coulomb_check(resolve_config(req))
    return schemas.CoulombResponse(
        passed=bool(result["pass"]), q_F=result["q_F"], t_final=result["t_final"],
        max_drift=result["max_drift"], max_spin=result["max_spin"], tolerance=result["tolerance"],
        csv=history_to_csv(hist),
    )


def validate_config(req: schemas.ConfigInput) -> schemas.ValidateResponse:
    try:
        cfg = resolve_config(req)
    except ConfigError as exc:
        return schemas.ValidateResponse(valid=False, error={"message": exc.detail, "key": exc.key, "line": exc.line})
    return schemas.ValidateResponse(valid=True, config=cfg.to_dict(), serialized=serialize(cfg))
