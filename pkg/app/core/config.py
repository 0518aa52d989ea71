"""
Application configuration using Pydantic Settings
"""
from typing import Optional
from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Application settings"""

    model_config = SettingsConfigDict(env_file=".env", case_sensitive=True, extra="ignore")

    # App
    APP_NAME: str = "Residual Frame Runtime"
    DEBUG: bool = False
    ENVIRONMENT: str = "development"

    # Logging
    LOG_LEVEL: str = "INFO"
    LOGS_DIR: str = "logs"
    LOG_TO_FILE: bool = False

    # Inference defaults
    RRM_EPSILON: float = Field(default=1e-2, ge=0.0)  # truncation threshold
    RRM_ERROR_THRESHOLD: float = Field(default=5e-2, ge=0.0)  # AECS trigger on predicted error
    RRM_CHUNKS: int = Field(default=1, ge=1)
    RRM_INCLUDE_KEYFRAMES: bool = True  # keyframes count towards sequence eta
    RRM_ORACLE: bool = False
    RRM_FEATURE_TOLERANCE: float = 1e-4

    # Reports
    REPORT_SCHEMA_VERSION: int = 1

    # Monitoring & Error Tracking
    SENTRY_DSN: Optional[str] = None

    # HTTP surface
    PORT: int = 8000


settings = Settings()
