"""FastAPI service exposing the analytic formulas and the simulator.

All endpoints live under /v1 and accept/return JSON. Domain errors map
to HTTP 400 with a body naming the error class, so thin clients can
translate them back into exit codes.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..errors import EdgeqError
from . import handlers
from .models import HealthResponse


def create_app() -> FastAPI:
    app = FastAPI(
        title="edgeq",
        version=__version__,
        description=(
            "Queueing analysis and discrete-event simulation for "
            "edge-vs-cloud latency comparison and capacity planning."
        ),
    )

    @app.exception_handler(EdgeqError)
    async def _domain_error(request: Request, exc: EdgeqError):
        return JSONResponse(
            status_code=400,
            content={"error": type(exc).__name__, "message": str(exc)},
        )

    @app.get("/v1/health", response_model=HealthResponse)
    def health():
        return HealthResponse(status="ok", version=__version__)

    for path, (model, handler) in handlers.ALL_ROUTES.items():
        _register(app, path, model, handler)
    return app


def _register(app: FastAPI, path: str, model, handler) -> None:
    async def endpoint(req):
        return handler(req)

    # a real class object here keeps the body model resolvable at runtime
    endpoint.__annotations__ = {"req": model}
    endpoint.__name__ = path.replace("/", "_").replace("-", "_")
    app.post(f"/v1/{path}")(endpoint)


app = create_app()
