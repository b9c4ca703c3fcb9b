import asyncio
import json
import logging
import shlex
from typing import List, Optional, Union

from config.settings import settings
from models.errors import BackendFailure, ConfigError
from models.session import BackendCapability, GenerationRequest

logger = logging.getLogger(__name__)


class ExternalBackend:
    """Spawns the configured command once per request.

    The request goes to stdin as one JSON object; stdout is the candidate source.
    """

    capability = BackendCapability(name="external", deterministic=False)

    def __init__(self, command: Union[str, List[str], None] = None, timeout: Optional[float] = None):
        command = command if command is not None else settings.EXTERNAL_COMMAND
        argv = shlex.split(command) if isinstance(command, str) else list(command)
        if not argv:
            raise ConfigError("external backend needs a command (EXTERNAL_COMMAND or --command)")
        self.argv = argv
        self.timeout = timeout if timeout is not None else settings.BACKEND_TIMEOUT

    async def produce(self, request: GenerationRequest) -> str:
        payload = json.dumps(request.to_wire(), sort_keys=True).encode("utf-8")
        try:
            process = await asyncio.create_subprocess_exec(
                *self.argv,
                stdin=asyncio.subprocess.PIPE,
                stdout=asyncio.subprocess.PIPE,
                stderr=asyncio.subprocess.PIPE,
            )
        except OSError as exc:
            raise BackendFailure(f"cannot start {self.argv[0]}: {exc}", detail={"command": self.argv})

        try:
            stdout, stderr = await asyncio.wait_for(process.communicate(payload), timeout=self.timeout)
        except asyncio.TimeoutError:
            process.kill()
            await process.wait()
            raise BackendFailure(
                f"{self.argv[0]} timed out after {self.timeout:g}s", detail={"timeout": self.timeout},
            )

        if process.returncode != 0:
            tail = stderr.decode("utf-8", errors="replace").strip()[-500:]
            raise BackendFailure(
                f"{self.argv[0]} exited with status {process.returncode}",
                detail={"returncode": process.returncode, "stderr": tail},
            )
        try:
            text = stdout.decode("utf-8")
        except UnicodeDecodeError:
            raise BackendFailure(f"{self.argv[0]} wrote output that is not UTF-8")
        if not text.strip():
            raise BackendFailure(f"{self.argv[0]} produced no output")
        logger.debug("external backend returned %d byte(s)", len(stdout))
        return text
