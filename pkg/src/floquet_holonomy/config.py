"""Конфигурация приложения, загружаемая из переменных окружения."""

import logging
import os
from typing import Literal

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from floquet_holonomy.models.propagation import IntegrationMethod

logger = logging.getLogger("floquet_holonomy.config")


class Settings(BaseSettings):
    """Конфигурация floquet_holonomy.

    Все значения задаются через переменные окружения с префиксом
    ``FLOQUET_HOLONOMY_`` или через файл ``.env`` в рабочей директории.
    """

    model_config = SettingsConfigDict(
        env_prefix="FLOQUET_HOLONOMY_",
        env_file=".env",
        env_file_encoding="utf-8",
    )

    threads: int = Field(
        default=0,
        ge=0,
        description=(
            "Потолок параллельных вычислений по подпространствам и калибровкам "
            "(FLOQUET_HOLONOMY_THREADS). 0 = по числу CPU."
        ),
    )
    log_level: str = Field(default="INFO", description="Уровень логирования")

    cluster_tol_rel: float = Field(
        default=1e-8,
        gt=0.0,
        le=1e-2,
        description="Относительный допуск кластеризации собственных значений: tol·max(1, ‖A‖_F)",
    )
    resonance_tol: float = Field(
        default=1e-6,
        gt=0.0,
        le=0.1,
        description="Запас (рад) до ±π, при котором логарифм U(T) считается неоднозначным",
    )

    default_steps: int = Field(
        default=512,
        ge=8,
        description="Число шагов сетки по умолчанию (степень двойки)",
    )
    default_method: IntegrationMethod = Field(
        default=IntegrationMethod.MAGNUS4,
        description="Интегратор по умолчанию: magnus2 или magnus4",
    )

    output_dir: str = Field(
        default="floquet-reports",
        description="Директория для JSON-отчётов и CSV-трасс",
    )
    report_format: Literal["json", "csv", "both"] = Field(
        default="json",
        description="Формат вывода трасс: json, csv или both (JSON пишется всегда)",
    )

    @field_validator("default_steps")
    @classmethod
    def _validate_steps(cls, v: int) -> int:
        if v & (v - 1):
            raise ValueError(
                f"FLOQUET_HOLONOMY_DEFAULT_STEPS должно быть степенью двойки, получено: {v}"
            )
        return v

    @field_validator("default_method", "report_format", mode="before")
    @classmethod
    def _normalize_choice(cls, v: object) -> object:
        if isinstance(v, str):
            return v.strip().lower()
        return v

    @property
    def effective_threads(self) -> int:
        """Фактический потолок параллелизма (0 разворачивается в число CPU)."""
        if self.threads > 0:
            return self.threads
        return os.cpu_count() or 1
