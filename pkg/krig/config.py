import os
from typing import Optional

from dotenv import load_dotenv
from pydantic_settings import BaseSettings, SettingsConfigDict

# Load environment variables from .env file
load_dotenv()


class Settings(BaseSettings):
    model_config = SettingsConfigDict(
        env_prefix="KRIG_", env_file=".env", extra="ignore"
    )

    APP_NAME: str = "krig"

    # Worker pool - None means "use every available core"
    WORKERS: Optional[int] = None

    LOG_LEVEL: str = "INFO"
    OUTPUT_DIR: str = "results"

    # Finite-state solvers
    MAX_JOINT_STATES: int = 10**6
    QP_MAX_STATES: int = 4096

    # 17 significant digits round-trip a float64 exactly
    CSV_FLOAT_FORMAT: str = "%.17g"

    @property
    def workers(self) -> int:
        """Get the effective worker count."""
        if self.WORKERS is not None and self.WORKERS > 0:
            return self.WORKERS
        return os.cpu_count() or 1


settings = Settings()
