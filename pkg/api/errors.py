from fastapi import HTTPException

from models.errors import PathwiseError

STATUS_BY_CODE = {
    "NOT_FOUND": 404,
    "PROJECT_COMPILE_ERROR": 422,
    "SYNTAX_ERROR": 422,
    "MALFORMED_INPUT": 422,
    "CONFIG_ERROR": 422,
    "VERSION_MISMATCH": 422,
    "BACKEND_FAILURE": 502,
}


def http_error(exc: PathwiseError) -> HTTPException:
    return HTTPException(status_code=STATUS_BY_CODE.get(exc.code, 400), detail=exc.to_dict())
