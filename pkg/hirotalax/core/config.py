from typing import Optional
from dotenv import load_dotenv

from pydantic_settings import BaseSettings, SettingsConfigDict

load_dotenv()


class Settings(BaseSettings):
    APP_ENV: str = "dev"
    CHECK_TOLERANCE: float = 1e-8
    DEFAULT_KMAX: int = 3
    DEFAULT_MODEL: str = "float"
    DEFAULT_SAMPLES: int = 20
    DEFAULT_SEED: int = 42
    DIAGONALIZATION_RETRIES: int = 5
    FLOAT_TOLERANCE: float = 1e-9
    IDENTITY_TRIALS: int = 200
    INTERPOLATION_RADIUS: float = 2.75
    INTERPOLATION_TOLERANCE: float = 1e-9
    LOG_LEVEL: str = "INFO"
    MAX_KMAX: int = 5
    MAX_SITES: int = 8
    NEWTON_MAX_ITER: int = 50
    REPORT_TIMING: bool = False
    SAMPLE_RADIUS_MAX: float = 3.0
    SAMPLE_RADIUS_MIN: float = 1.5
    SENTRY_DSN: Optional[str] = None

    model_config = SettingsConfigDict(
        env_file=".env", env_prefix="HIROTALAX_", extra="ignore"
    )


settings = Settings()
