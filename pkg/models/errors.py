from typing import Any, Dict, List, Optional


class PathwiseError(Exception):
    """Base error for engine failures that callers are expected to handle."""

    code = "PATHWISE_ERROR"

    def __init__(self, message: str, detail: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.detail = detail or {}

    def to_dict(self) -> Dict[str, Any]:
        payload = {"code": self.code, "message": self.message}
        if self.detail:
            payload["detail"] = self.detail
        return payload


class NotFoundError(PathwiseError):
    code = "NOT_FOUND"


class VersionMismatchError(PathwiseError):
    code = "VERSION_MISMATCH"


class MalformedInputError(PathwiseError):
    code = "MALFORMED_INPUT"


class NoSuchMethodError(PathwiseError):
    code = "NO_SUCH_METHOD"


class NoConcreteReceiverError(PathwiseError):
    code = "NO_CONCRETE_RECEIVER"


class AbstractMethodError(PathwiseError):
    code = "ABSTRACT_METHOD"


class BackendFailure(PathwiseError):
    code = "BACKEND_FAILURE"


class InfeasibleContextError(PathwiseError):
    code = "INFEASIBLE_CONTEXT"


class ConfigError(PathwiseError):
    code = "CONFIG_ERROR"


class SourceSyntaxError(PathwiseError):
    """Raised by the parser; carries every syntax diagnostic found."""

    code = "SYNTAX_ERROR"

    def __init__(self, diagnostics: List[Any]):
        first = diagnostics[0] if diagnostics else None
        message = first.render() if first is not None else "syntax error"
        super().__init__(message)
        self.diagnostics = diagnostics


class ProjectCompileError(PathwiseError):
    code = "PROJECT_COMPILE_ERROR"

    def __init__(self, diagnostics: List[Any]):
        shown = "; ".join(d.render() for d in diagnostics[:3])
        super().__init__(
            f"project has {len(diagnostics)} error(s): {shown}",
            detail={"diagnostics": [d.model_dump(mode="json") for d in diagnostics]},
        )
        self.diagnostics = diagnostics


__all__ = [
    "PathwiseError",
    "NotFoundError",
    "VersionMismatchError",
    "MalformedInputError",
    "NoSuchMethodError",
    "NoConcreteReceiverError",
    "AbstractMethodError",
    "BackendFailure",
    "InfeasibleContextError",
    "ConfigError",
    "SourceSyntaxError",
    "ProjectCompileError",
]
