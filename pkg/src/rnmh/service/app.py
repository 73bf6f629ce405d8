"""FastAPI wrapper around the simulator and audit harness."""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from ..config import ConfigError
from ..evolution import CFLViolation, NumericalFault
from . import handlers, schemas
from .. import __version__

app = FastAPI(title="rnmh", version=__version__)

# status codes the CLI client maps back to exit codes
CONFIG_STATUS = 400
FAULT_STATUS = 500


@app.exception_handler(ConfigError)
async def _config_error(request: Request, exc: ConfigError):
    body = schemas.ErrorBody(kind="config", message=exc.detail, key=exc.key, line=exc.line)
    return JSONResponse(status_code=CONFIG_STATUS, content=body.model_dump())


@app.exception_handler(NumericalFault)
async def _fault(request: Request, exc: NumericalFault):
    body = schemas.ErrorBody(kind="numerical_fault", message=str(exc), step=exc.step, time=exc.time)
    return JSONResponse(status_code=FAULT_STATUS, content=body.model_dump())


@app.exception_handler(CFLViolation)
async def _cfl(request: Request, exc: CFLViolation):
    body = schemas.ErrorBody(kind="config", message=str(exc), key="cfl")
    return JSONResponse(status_code=CONFIG_STATUS, content=body.model_dump())


@app.exception_handler(ValueError)
async def _value_error(request: Request, exc: ValueError):
    body = schemas.ErrorBody(kind="config", message=str(exc))
    return JSONResponse(status_code=CONFIG_STATUS, content=body.model_dump())


@app.get("/health", response_model=schemas.HealthResponse)
def health():
    return schemas.HealthResponse(status="ok", version=__version__)


@app.post("/config/validate", response_model=schemas.ValidateResponse)
def validate_config(req: schemas.ConfigInput):
    return handlers.validate_config(req)


@app.post("/runs/mode", response_model=schemas.RunResponse)
def run_mode(req: schemas.RunRequest):
    return handlers.run_mode(req)


@app.post("/runs/coupled", response_model=schemas.RunResponse)
def run_coupled(req: schemas.RunRequest):
    return handlers.run_coupled(req)


@app.post("/audit", response_model=schemas.AuditResponse)
def audit(req: schemas.AuditRequest):
    return handlers.audit(req)


@app.post("/converge", response_model=schemas.ConvergeResponse)
def converge(req: schemas.ConvergeRequest):
    return handlers.converge(req)


@app.post("/coulomb-check", response_model=schemas.CoulombResponse)
def coulomb_check(req: schemas.ConfigInput):
    return handlers.coulomb_check(req)
