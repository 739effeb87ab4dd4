"""FastAPI application exposing the analysis/design/region/simulate/oracle handlers."""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from . import api
from . import schemas as sc

app = FastAPI(title="delaystab", version=__version__)


@app.exception_handler(ValueError)
async def _validation_error(request: Request, exc: ValueError):
    return JSONResponse(status_code=422, content={"detail": str(exc)})


@app.exception_handler(RuntimeError)
async def _numerical_error(request: Request, exc: RuntimeError):
    return JSONResponse(status_code=500, content={"detail": str(exc)})


@app.get("/healthz", response_model=sc.HealthResponse)
def healthz():
    return sc.HealthResponse(status="ok", version=__version__)


@app.post("/analyze", response_model=sc.AnalyzeResponse)
def analyze(req: sc.AnalyzeRequest):
    return api.analyze(req)


@app.post("/design", response_model=sc.DesignResponse)
def design(req: sc.DesignRequest):
    return api.design(req)


@app.post("/region", response_model=sc.RegionResponse)
def region(req: sc.RegionRequest):
    return api.region(req)


@app.post("/simulate", response_model=sc.SimulateResponse)
def simulate(req: sc.RunConfigFile):
    return api.simulate(req)


@app.post("/oracle", response_model=sc.OracleResponse)
def oracle(req: sc.OracleRequest):
    return api.oracle(req)
