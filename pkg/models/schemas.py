from pydantic import BaseModel, Field, model_validator
from typing import Optional, List, Dict
from datetime import datetime

from models.session import PromptVariant

class ProjectInput(BaseModel):
    """A project given either as a directory on the server or as inline sources."""

    project_dir: Optional[str] = Field(None, description="Directory of .sj files")
    sources: Optional[Dict[str, str]] = Field(None, description="Map of relative path to source text")

    @model_validator(mode="after")
    def _one_source(self) -> "ProjectInput":
        if (self.project_dir is None) == (self.sources is None):
            raise ValueError("give exactly one of project_dir or sources")
        return self

class AnalyzeRequest(ProjectInput):
    path_cap: Optional[int] = Field(None, ge=1)

class PathsRequest(ProjectInput):
    method: str = Field(..., description="Method id, Owner.name or signature")
    path_cap: Optional[int] = Field(None, ge=1)

class DistillRequest(ProjectInput):
    method: str
    path: int = Field(..., ge=0, description="Path index")
    depth: Optional[int] = Field(None, ge=0, description="Recursion depth for dependent methods")

class GenerateRequest(ProjectInput):
    focal_filter: Optional[str] = None
    methods: List[str] = Field(default_factory=list)
    backend: str = Field("brute-force", description="brute-force, scripted, external or openai")
    script_file: Optional[str] = None
    command: Optional[str] = None
    max_rounds: Optional[int] = Field(None, ge=1)
    path_cap: Optional[int] = Field(None, ge=1)
    recursion_depth: Optional[int] = Field(None, ge=0)
    parallelism: Optional[int] = Field(None, ge=1)
    output_dir: Optional[str] = None
    prompt_variant: PromptVariant = PromptVariant.FULL
    refine: bool = True
    scope: Optional[str] = None

class PathListing(BaseModel):
    id: str
    index: int
    nodes: List[str] = Field(default_factory=list)
    obligations: List[str] = Field(default_factory=list)

class PathsResponse(BaseModel):
    method: str
    truncated: bool = False
    paths: List[PathListing] = Field(default_factory=list)

class ErrorResponse(BaseModel):
    code: str
    message: str
    detail: Optional[Dict] = None

class HealthCheck(BaseModel):
    status: str = "healthy"
    timestamp: datetime = Field(default_factory=datetime.now)
    version: str = "1.0.0"
    services: Dict[str, str] = Field(default_factory=dict)
