import logging

from fastapi import APIRouter

from api.errors import http_error
from api.routes.analysis import load_model
from harness.pipeline import RunConfig, run
from models.errors import PathwiseError
from models.report import RunReport
from models.schemas import GenerateRequest

logger = logging.getLogger(__name__)

router = APIRouter(prefix="/api", tags=["generation"])

INLINE_PROJECT = "<inline>"


@router.post("/generate", response_model=RunReport)
async def generate(request: GenerateRequest):
    """
    Run the full pipeline; tests and reports are also written to the output directory
    """
    try:
        model = load_model(request)
        overrides = request.model_dump(exclude={"project_dir", "sources"}, exclude_none=True)
        if not overrides.get("methods"):
            overrides.pop("methods", None)
        elif "focal_filter" not in overrides:
            overrides["focal_filter"] = "explicit"
        config = RunConfig.load(project_dir=request.project_dir or INLINE_PROJECT, **overrides)
        return await run(config, model=model)
    except PathwiseError as e:
        logger.warning("generate failed: %s", e.message)
        raise http_error(e)
