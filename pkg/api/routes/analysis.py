from fastapi import APIRouter, HTTPException

from api.errors import http_error
from distill.context import distill, render_obligations
from knowledge.persistence import kb_to_document
from knowledge.store import build_kb
from models.context import DistilledContext
from models.errors import PathwiseError
from models.schemas import AnalyzeRequest, DistillRequest, PathListing, PathsRequest, PathsResponse, ProjectInput
from subjectlang.checker import SemanticModel
from subjectlang.project import compile_sources, load_project

router = APIRouter(prefix="/api", tags=["analysis"])


def load_model(request: ProjectInput) -> SemanticModel:
    if request.sources is not None:
        return compile_sources(request.sources)
    return load_project(request.project_dir)


@router.post("/analyze", response_model=dict)
def analyze(request: AnalyzeRequest):
    """
    Build the knowledge base of a project and return its JSON graph document
    """
    try:
        return kb_to_document(build_kb(load_model(request), request.path_cap))
    except PathwiseError as e:
        raise http_error(e)


@router.post("/paths", response_model=PathsResponse)
def list_paths(request: PathsRequest):
    try:
        kb = build_kb(load_model(request), request.path_cap)
        method = kb.method_of(request.method)
        cfg = kb.cfg_of(method.id)
        return PathsResponse(
            method=method.id,
            truncated=kb.is_truncated(method.id),
            paths=[
                PathListing(id=p.id, index=p.index, nodes=p.node_ids, obligations=render_obligations(cfg, p))
                for p in kb.paths_of(method.id)
            ],
        )
    except PathwiseError as e:
        raise http_error(e)


@router.post("/distill", response_model=DistilledContext)
def distill_path(request: DistillRequest):
    """
    Distilled context of one path of one focal method
    """
    try:
        kb = build_kb(load_model(request))
        method = kb.method_of(request.method)
        if method.is_abstract:
            raise HTTPException(status_code=422, detail={"code": "ABSTRACT_METHOD",
                                                         "message": f"{method.id} has no body"})
        return distill(method.id, kb.path(method.id, request.path), kb, request.depth)
    except PathwiseError as e:
        raise http_error(e)
