import logging
import os
import sys

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

sys.path.append(os.path.dirname(os.path.dirname(__file__)))

from api.errors import STATUS_BY_CODE
from api.routes import analysis, generation
from config.settings import settings
from models.errors import PathwiseError
from models.schemas import HealthCheck

logger = logging.getLogger(__name__)

app = FastAPI(
    title="Pathwise API",
    description="Path-sensitive unit test generation for subject-language projects",
    version="1.0.0",
    docs_url="/docs",
    redoc_url="/redoc",
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=[origin.strip() for origin in settings.ALLOWED_ORIGINS.split(",")],
    allow_credentials=True,
    allow_methods=["GET", "POST"],
    allow_headers=["*"],
)

# analysis first so /api/paths and /api/distill show above /api/generate in the docs
for module in (analysis, generation):
    app.include_router(module.router)


@app.get("/api/health", response_model=HealthCheck)
async def api_health_check():
    """Which generator backends this server can run without extra request fields."""
    return HealthCheck(
        status="healthy",
        services={
            "brute-force": "available",
            "scripted": "per-request",
            "external": "configured" if settings.EXTERNAL_COMMAND else "not_configured",
            "openai": "configured" if settings.OPENAI_API_KEY else "not_configured",
        },
    )


@app.exception_handler(PathwiseError)
async def pathwise_error_handler(request: Request, exc: PathwiseError):
    logger.warning("%s %s -> %s: %s", request.method, request.url.path, exc.code, exc.message)
    return JSONResponse(status_code=STATUS_BY_CODE.get(exc.code, 400), content={"detail": exc.to_dict()})


@app.exception_handler(Exception)
async def unexpected_error_handler(request: Request, exc: Exception):
    logger.exception("Unhandled error on %s %s", request.method, request.url.path)
    detail = {"code": "INTERNAL_ERROR", "message": "An unexpected error occurred", "detail": type(exc).__name__}
    return JSONResponse(status_code=500, content={"detail": detail})
