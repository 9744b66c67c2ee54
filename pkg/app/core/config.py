"""
Process configuration and environment variables.
"""
from functools import lru_cache

from dotenv import find_dotenv, load_dotenv
from pydantic_settings import BaseSettings


load_dotenv(find_dotenv())


class Settings(BaseSettings):
    """Engine settings loaded from environment variables."""

    # Parallelism
    ROMI_WORKERS: int = 1  # worker processes for replication parallelism

    # Logging settings
    ROMI_LOG_LEVEL: str = "INFO"
    ROMI_LOG_DIR: str = "logs"
    ROMI_JSON_LOGS: bool = True
    ROMI_FILE_LOGS: bool = True

    # Run defaults
    ROMI_DEFAULT_SEED: int = 20240601
    ROMI_OUTPUT_DIR: str = "results"
    ROMI_FIXTURES_DIR: str = "tests/fixtures/golden"
    ROMI_PROGRESS: bool = True

    @property
    def worker_count(self) -> int:
        return max(1, self.ROMI_WORKERS)

    class Config:
        env_file = ".env"
        case_sensitive = True
        extra = "allow"


@lru_cache()
def get_settings() -> Settings:
    """Get cached settings instance."""
    return Settings()
