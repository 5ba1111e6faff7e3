from pydantic_settings import BaseSettings, SettingsConfigDict
from pydantic import field_validator


class Settings(BaseSettings):
    THREADS: int = 1

    EXACT_CAP: int = 64
    GRID_CAP: int = 2**20
    MATRIX_CAP: int = 4096
    APSP_CAP: int = 2000

    REL_TOL: float = 1e-9
    ABS_TOL: float = 1e-12
    SYMMETRY_TOL: float = 1e-12
    TREND_THRESHOLD: float = 0.1

    MIRANDA_RESOLUTION: int = 64
    MIRANDA_BOUNDARY_POINTS: int = 9
    MIRANDA_MAX_DEPTH: int = 60
    MIRANDA_POLISH_ITER: int = 400

    SEED: int = 0

    model_config = SettingsConfigDict(
        env_prefix="DOUBLEPROBE_",
        env_file=".envs/.env.local",
        env_ignore_empty=True,
        extra="ignore",
        case_sensitive=True
    )

    @field_validator('THREADS', 'EXACT_CAP', 'GRID_CAP', 'MATRIX_CAP', 'APSP_CAP',
                     'MIRANDA_RESOLUTION', 'MIRANDA_BOUNDARY_POINTS', 'MIRANDA_MAX_DEPTH',
                     'MIRANDA_POLISH_ITER')
    def validate_positive_count(cls, v):
        if v < 1:
            raise ValueError("caps, thread counts and iteration limits must be at least 1")
        return v

    @field_validator('REL_TOL', 'ABS_TOL', 'SYMMETRY_TOL', 'TREND_THRESHOLD')
    def validate_positive_tolerance(cls, v):
        if not v > 0:
            raise ValueError("tolerances must be strictly positive")
        return v

    @field_validator('MIRANDA_RESOLUTION')
    def validate_resolution(cls, v):
        if v < 2:
            raise ValueError("the cube discretization needs at least 2 points per axis")
        return v


settings = Settings()
