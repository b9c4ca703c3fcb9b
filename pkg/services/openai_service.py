import logging
import re
from typing import Optional

import openai

from config.settings import settings
from models.errors import BackendFailure, ConfigError
from models.session import BackendCapability, GenerationRequest

logger = logging.getLogger(__name__)

CHARS_PER_TOKEN = 4
SYSTEM_MESSAGE = (
    "You write unit tests in a small Java-like language. Reply with the source of one class "
    "named Test and nothing else."
)
_FENCE = re.compile(r"```[A-Za-z0-9_-]*\n(.*?)```", re.DOTALL)


def strip_fences(text: str) -> str:
    """Body of the first fenced block, or the whole reply when there is none."""
    match = _FENCE.search(text)
    return (match.group(1) if match else text).strip() + "\n"


def truncate(text: str, max_tokens: int) -> str:
    limit = max_tokens * CHARS_PER_TOKEN
    if len(text) <= limit:
        return text
    logger.warning("prompt of %d chars truncated to %d", len(text), limit)
    return text[:limit]


class OpenAIService:
    """Generator backend backed by any OpenAI-compatible chat-completion endpoint."""

    capability = BackendCapability(name="openai", deterministic=False)

    def __init__(self, client: Optional[openai.AsyncOpenAI] = None, model: Optional[str] = None):
        if client is None:
            if not settings.OPENAI_API_KEY:
                raise ConfigError("OPENAI_API_KEY is not set")
            client = openai.AsyncOpenAI(
                api_key=settings.OPENAI_API_KEY,
                base_url=settings.OPENAI_BASE_URL or None,
                timeout=settings.BACKEND_TIMEOUT,
            )
        self.client = client
        self.model = model or settings.OPENAI_MODEL

    async def produce(self, request: GenerationRequest) -> str:
        prompt = truncate(request.render(), settings.OPENAI_MAX_INPUT_TOKENS)
        try:
            response = await self.client.chat.completions.create(
                model=self.model,
                messages=[
                    {"role": "system", "content": SYSTEM_MESSAGE},
                    {"role": "user", "content": prompt},
                ],
                max_tokens=settings.OPENAI_MAX_OUTPUT_TOKENS,
                temperature=0,
            )
        except openai.RateLimitError as e:
            raise BackendFailure(f"OpenAI API rate limit exceeded: {e}")
        except openai.APITimeoutError as e:
            raise BackendFailure(f"OpenAI API timed out: {e}")
        except openai.APIError as e:
            raise BackendFailure(f"OpenAI API error: {e}")

        content = response.choices[0].message.content if response.choices else None
        if not content or not content.strip():
            raise BackendFailure("OpenAI API returned an empty reply")
        return strip_fences(content)
