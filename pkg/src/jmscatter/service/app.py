"""FastAPI wiring: one POST route per task plus a health probe.

Run with `uvicorn jmscatter.service.app:app`.
"""

from __future__ import annotations

from fastapi import FastAPI
from fastapi.responses import JSONResponse

from ..errors import ConfigError, FitError, JmscatterError
from . import handlers, models


def create_app() -> FastAPI:
    app = FastAPI(title="jmscatter", description="separable-potential scattering service")

    @app.exception_handler(ConfigError)
    async def _config_error(request, exc):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.exception_handler(FitError)
    async def _fit_error(request, exc):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.exception_handler(ValueError)
    async def _value_error(request, exc):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.exception_handler(JmscatterError)
    async def _numerical_error(request, exc):
        return JSONResponse(status_code=500, content={"detail": str(exc)})

    @app.post("/v1/phase-shifts", response_model=models.PhaseShiftsResponse)
    async def phase_shifts(req: models.PhaseShiftsRequest):
        return handlers.phase_shifts(req)

    @app.post("/v1/beta-scan", response_model=models.BetaScanResponse)
    async def beta_scan(req: models.BetaScanRequest):
        return handlers.beta_scan(req)

    @app.post("/v1/poles", response_model=models.PolesResponse)
    async def poles(req: models.PolesRequest):
        return handlers.poles(req)

    @app.post("/v1/isolated", response_model=models.IsolatedResponse)
    async def isolated(req: models.IsolatedRequest):
        return handlers.isolated(req)

    @app.post("/v1/fit", response_model=models.FitResponse)
    async def fit(req: models.FitRequest):
        return handlers.fit(req)

    @app.post("/v1/verify", response_model=models.VerifyResponse)
    async def verify(req: models.VerifyRequest):
        return handlers.verify(req)

    @app.get("/v1/health", response_model=models.HealthResponse)
    async def health():
        return handlers.health()

    return app


app = create_app()
