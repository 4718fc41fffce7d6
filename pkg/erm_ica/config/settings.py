"""환경 변수 및 실행 설정."""
from functools import lru_cache

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """실행 설정 (env 로드, prefix ERM_ICA_)."""

    # App
    app_name: str = "erm-ica"
    debug: bool = False
    log_level: str = "INFO"

    # Harness
    output_dir: str = "runs"
    workers: int = 1
    progress: bool = False
    # wall_time_s 기록 시 results.csv가 실행마다 달라짐
    record_wall_time: bool = False

    # ICA solver
    ica_max_iter: int = 30000
    ica_tol: float = 1e-4

    # Data generation (rejection sampling)
    generator_cond_limit: float = 25.0
    generator_max_tries: int = 100
    generator_spectrum_fallback: bool = True
    task_cond_limit: float = 1e6
    task_max_tries: int = 100

    # Training
    log_every_epochs: int = 50

    model_config = SettingsConfigDict(env_prefix="ERM_ICA_", env_file=".env", extra="ignore")


@lru_cache
def get_settings() -> Settings:
    return Settings()


settings = get_settings()
