import os
import yaml
from pathlib import Path
from functools import lru_cache
from typing import Optional, Tuple, Type
from pydantic import BaseModel, Field, field_validator
from pydantic_settings import BaseSettings, PydanticBaseSettingsSource, SettingsConfigDict


class NumericsConfig(BaseModel):
    """Numerical defaults shared by the library and the experiment runner."""
    mollifier_quadrature_order: int = Field(default=12, ge=2, le=64)
    regularity_probes: int = Field(default=200, ge=1)
    lipschitz_ceiling: float = Field(default=1e6, gt=0.0)
    bisection_depth: int = Field(default=48, ge=1, le=200)
    rk4_steps: int = Field(default=10_000, ge=10)
    richardson_tolerance: float = Field(default=1e-8, gt=0.0)
    lamperti_half_width: float = Field(default=40.0, gt=0.0)
    lamperti_knots: int = Field(default=4001, ge=3)
    lamperti_quad_tol: float = Field(default=1e-12, gt=0.0)
    bel_epsilon: float = Field(default=0.5, gt=0.0)
    payoff_quad_points: int = Field(default=96, ge=32)
    fd_step: float = Field(default=1e-3, gt=0.0)


class RuntimeConfig(BaseModel):
    workers: int = Field(default=1, ge=1, le=256)
    log_level: str = Field(default="INFO")

    @field_validator('log_level')
    @classmethod
    def validate_level(cls, v: str) -> str:
        level = v.upper()
        if level not in {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}:
            raise ValueError(f"Invalid log level: {v}")
        return level


class Settings(BaseSettings):
    """YAML defaults for the environment, overridden by MFSDE_* variables.

    Nested fields use a double underscore, e.g. MFSDE_RUNTIME__WORKERS=4.
    """
    environment: str = Field(default="dev", pattern="^(dev|prod)$")
    output_dir: Optional[Path] = None
    numerics: NumericsConfig = Field(default_factory=NumericsConfig)
    runtime: RuntimeConfig = Field(default_factory=RuntimeConfig)

    model_config = SettingsConfigDict(
        env_prefix="MFSDE_", env_nested_delimiter="__", env_file=".env", env_ignore_empty=True, extra="ignore"
    )

    @classmethod
    def settings_customise_sources(
        cls,
        settings_cls: Type[BaseSettings],
        init_settings: PydanticBaseSettingsSource,
        env_settings: PydanticBaseSettingsSource,
        dotenv_settings: PydanticBaseSettingsSource,
        file_secret_settings: PydanticBaseSettingsSource,
    ) -> Tuple[PydanticBaseSettingsSource, ...]:
        # the YAML file arrives as init kwargs; the environment overrides it
        return env_settings, dotenv_settings, init_settings, file_secret_settings


@lru_cache()
def get_settings() -> Settings:
    """Load and cache settings from YAML + environment."""
    env = os.getenv("MFSDE_ENVIRONMENT", "dev")
    config_path = Path(__file__).parent / f"{env}.yaml"
    with open(config_path, encoding='utf-8') as f:
        config_data = yaml.safe_load(f) or {}
    return Settings(**config_data)
