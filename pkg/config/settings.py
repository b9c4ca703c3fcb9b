import os
from dotenv import load_dotenv
from pydantic_settings import BaseSettings, SettingsConfigDict

load_dotenv()

class Settings(BaseSettings):
    model_config = SettingsConfigDict(env_file=".env", extra="ignore")

    # Server Configuration
    HOST: str = os.getenv("HOST", "0.0.0.0")
    PORT: int = int(os.getenv("PORT", "8000"))
    DEBUG: bool = os.getenv("DEBUG", "False").lower() == "true"
    LOG_LEVEL: str = os.getenv("LOG_LEVEL", "INFO")
    ALLOWED_ORIGINS: str = os.getenv("ALLOWED_ORIGINS", "*")

    # Interpreter limits
    STEP_BUDGET: int = int(os.getenv("STEP_BUDGET", "100000"))
    CALL_DEPTH_LIMIT: int = int(os.getenv("CALL_DEPTH_LIMIT", "64"))

    # Analysis
    PATH_CAP: int = int(os.getenv("PATH_CAP", "256"))
    RECURSION_DEPTH: int = int(os.getenv("RECURSION_DEPTH", "3"))

    # Refinement loop
    MAX_ROUNDS: int = int(os.getenv("MAX_ROUNDS", "5"))
    PARALLELISM: int = int(os.getenv("PARALLELISM", "4"))
    BACKEND_TIMEOUT: float = float(os.getenv("BACKEND_TIMEOUT", "120"))
    EXTERNAL_COMMAND: str = os.getenv("EXTERNAL_COMMAND", "")

    # OpenAI-compatible generator backend
    OPENAI_API_KEY: str = os.getenv("OPENAI_API_KEY", "")
    OPENAI_MODEL: str = os.getenv("OPENAI_MODEL", "gpt-4o-mini")
    OPENAI_BASE_URL: str = os.getenv("OPENAI_BASE_URL", "")
    OPENAI_MAX_INPUT_TOKENS: int = int(os.getenv("OPENAI_MAX_INPUT_TOKENS", "8192"))
    OPENAI_MAX_OUTPUT_TOKENS: int = int(os.getenv("OPENAI_MAX_OUTPUT_TOKENS", "2048"))

    # Output
    OUTPUT_DIR: str = os.getenv("OUTPUT_DIR", "./pathwise-out")

settings = Settings()
