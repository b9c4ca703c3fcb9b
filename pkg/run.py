#!/usr/bin/env python3
"""Start the Pathwise HTTP API with uvicorn."""

import logging
import sys
from pathlib import Path

import uvicorn

sys.path.insert(0, str(Path(__file__).parent))

from config.settings import settings
from harness.cli import configure_logging

logger = logging.getLogger("pathwise.run")


def main():
    configure_logging(settings.DEBUG)
    logger.info("Serving on %s:%s (debug=%s), runs under %s",
                settings.HOST, settings.PORT, settings.DEBUG, settings.OUTPUT_DIR)
    if not settings.OPENAI_API_KEY:
        logger.warning("OPENAI_API_KEY is not set; requests asking for the openai backend will fail")
    if not settings.EXTERNAL_COMMAND:
        logger.warning("EXTERNAL_COMMAND is not set; the external backend needs a command in each request")
    logger.info("API documentation at http://%s:%s/docs", settings.HOST, settings.PORT)

    uvicorn.run(
        "app.main:app",
        host=settings.HOST,
        port=settings.PORT,
        reload=settings.DEBUG,
        log_level="info" if settings.DEBUG else "warning",
        access_log=settings.DEBUG,
    )


if __name__ == "__main__":
    main()
