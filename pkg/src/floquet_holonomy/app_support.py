"""Вспомогательные функции для CLI: настройки, документ сценария, запись отчётов."""

import json
import logging
from pathlib import Path
from typing import TYPE_CHECKING, Any

from pydantic import ValidationError

from floquet_holonomy.exceptions import ConfigurationError, ScenarioValidationError
from floquet_holonomy.models.invariants import FrameGauge
from floquet_holonomy.models.propagation import IntegrationMethod
from floquet_holonomy.models.scenario import ScenarioConfig
from floquet_holonomy.services.propagator_service import export_trace_csv
from floquet_holonomy.services.scenario_service import DEFAULT_SCENARIO, get_builtin_scenario

if TYPE_CHECKING:
    from floquet_holonomy.config import Settings
    from floquet_holonomy.orchestrator import ScenarioRun

logger = logging.getLogger(__name__)


def format_configuration_error(exc: Exception) -> str:
    """Единообразное сообщение об ошибке конфигурации для CLI."""
    return (
        f"Ошибка конфигурации: {exc}\n\n"
        f"Переменные окружения читаются с префиксом FLOQUET_HOLONOMY_ "
        f"(THREADS, LOG_LEVEL, DEFAULT_STEPS, ...).\n"
        f"Подробности см. в README.md."
    )


def _describe_validation_error(exc: ValidationError) -> str:
    parts = []
    for error in exc.errors():
        location = ".".join(str(item) for item in error["loc"]) or "<документ>"
        parts.append(f"{location}: {error['msg']}")
    return "; ".join(parts)


def load_settings() -> "Settings":
    """Загружает настройки из окружения; ошибки валидации → ConfigurationError."""
    from floquet_holonomy.config import Settings

    try:
        return Settings()
    except ValidationError as exc:
        raise ConfigurationError(_describe_validation_error(exc)) from exc


def load_config(path: str | Path, settings: "Settings | None" = None) -> ScenarioConfig:
    """Прочитать JSON-документ сценария.

    Если в документе нет секции ``grid``, сетка берётся из настроек
    (``default_steps``, ``default_method``).
    """
    source = Path(path)
    try:
        raw = json.loads(source.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ScenarioValidationError(f"Файл сценария не найден: {source}") from exc
    except json.JSONDecodeError as exc:
        raise ScenarioValidationError(
            f"Некорректный JSON в {source}: строка {exc.lineno}, позиция {exc.colno}: {exc.msg}"
        ) from exc
    if not isinstance(raw, dict):
        raise ScenarioValidationError(f"Документ сценария {source} должен быть JSON-объектом")
    if settings is not None and "grid" not in raw:
        raw["grid"] = {"steps": settings.default_steps, "method": settings.default_method.value}
    config = validate_config(raw)
    logger.info("Сценарий %s загружен из %s", config.name, source)
    return config


def validate_config(raw: dict[str, Any]) -> ScenarioConfig:
    try:
        return ScenarioConfig.model_validate(raw)
    except ValidationError as exc:
        raise ScenarioValidationError(_describe_validation_error(exc)) from exc


def resolve_config(
    *,
    config_path: str | None,
    scenario: str | None,
    settings: "Settings | None" = None,
) -> ScenarioConfig:
    """Документ из файла или встроенный сценарий (по умолчанию spin1-precessing)."""
    if config_path is not None:
        return load_config(config_path, settings)
    return get_builtin_scenario(scenario or DEFAULT_SCENARIO)


def apply_overrides(
    config: ScenarioConfig,
    *,
    steps: int | None = None,
    order: int | None = None,
    gauges: list[str] | None = None,
    report_format: str | None = None,
    out: str | None = None,
) -> ScenarioConfig:
    """Применить флаги CLI поверх документа; результат валидируется заново."""
    raw = config.model_dump(mode="json")
    if steps is not None:
        raw["grid"]["steps"] = steps
    if order is not None:
        raw["grid"]["method"] = IntegrationMethod.from_order(order).value
    if gauges:
        raw["gauges"] = [FrameGauge(g).value for g in gauges]
    if report_format is not None:
        raw["output"]["format"] = report_format
    if out is not None:
        raw["output"]["directory"] = out
    return validate_config(raw)


def write_report(
    run: "ScenarioRun",
    config: ScenarioConfig,
    settings: "Settings",
) -> list[Path]:
    """Записать JSON-отчёт и, при формате csv/both, CSV-трассы. Возвращает пути."""
    directory = Path(config.output.directory or settings.output_dir)
    directory.mkdir(parents=True, exist_ok=True)
    basename = config.output.basename or config.name
    report_format = config.output.format

    written: list[Path] = []
    report_path = directory / f"{basename}.json"
    report_path.write_text(
        json.dumps(run.report.payload(), indent=2, sort_keys=True, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )
    written.append(report_path)

    if report_format in ("csv", "both"):
        for name, matrices in run.traces.items():
            written.append(
                export_trace_csv(directory / f"{basename}_{name}.csv", run.grid, matrices)
            )
    logger.info("Отчёт записан в %s (%d файлов)", directory, len(written))
    return written
