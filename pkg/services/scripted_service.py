"""Backend that replays canned responses, keyed by path id.

Script files are JSON objects mapping a path id (``Owner#m/(int)/p:0``) to a
list of responses; the key ``"*"`` applies to every path without its own entry.
Each path keeps its own cursor and repeats its last response once exhausted.
"""

import json
import logging
import threading
from pathlib import Path
from typing import Dict, List, Union

from models.errors import BackendFailure, MalformedInputError, NotFoundError
from models.session import BackendCapability, GenerationRequest

logger = logging.getLogger(__name__)

FALLBACK_KEY = "*"


class ScriptedBackend:
    capability = BackendCapability(name="scripted", deterministic=True)

    def __init__(self, script: Dict[str, List[str]]):
        for key, responses in script.items():
            if not isinstance(responses, list) or not responses or not all(isinstance(r, str) for r in responses):
                raise MalformedInputError(
                    f"script entry {key!r} must be a non-empty list of strings", detail={"key": key},
                )
        self.script = script
        self._cursors: Dict[str, int] = {}
        self._lock = threading.Lock()

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "ScriptedBackend":
        path = Path(path)
        if not path.is_file():
            raise NotFoundError(f"script file {path} not found", detail={"path": str(path)})
        try:
            script = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise MalformedInputError(f"script file {path} is not JSON: {exc}", detail={"path": str(path)})
        if not isinstance(script, dict):
            raise MalformedInputError(f"script file {path} must hold a JSON object", detail={"path": str(path)})
        return cls(script)

    @classmethod
    def broken_then(cls, broken: int, fixed: str, broken_text: str = "class Test {") -> "ScriptedBackend":
        """``broken`` copies of an uncompilable response, then ``fixed`` for every path."""
        return cls({FALLBACK_KEY: [broken_text] * broken + [fixed]})

    def calls(self, path_id: str) -> int:
        return self._cursors.get(path_id, 0)

    async def produce(self, request: GenerationRequest) -> str:
        path_id = request.context.path.id
        responses = self.script.get(path_id, self.script.get(FALLBACK_KEY))
        if responses is None:
            raise BackendFailure(f"no scripted response for {path_id}", detail={"path": path_id})
        with self._lock:
            cursor = self._cursors.get(path_id, 0)
            self._cursors[path_id] = cursor + 1
        logger.debug("scripted response %d for %s", cursor, path_id)
        return responses[min(cursor, len(responses) - 1)]
