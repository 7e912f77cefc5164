"""Точка входа CLI floquet-holonomy."""

import argparse
import asyncio
import logging
import sys

from floquet_holonomy import __version__

logger = logging.getLogger(__name__)

LOG_LEVELS = ["DEBUG", "INFO", "WARNING", "ERROR"]


def build_parser() -> argparse.ArgumentParser:
    """Создать парсер для команды ``floquet-holonomy run``."""
    parser = argparse.ArgumentParser(
        prog="floquet-holonomy run",
        description=(
            "Разложение Флоке, периодический инвариант и неабелева геометрическая фаза "
            "для периодически управляемой спиновой системы"
        ),
    )
    source = parser.add_mutually_exclusive_group()
    source.add_argument(
        "--config",
        default=None,
        metavar="PATH",
        help="JSON-документ сценария",
    )
    source.add_argument(
        "--scenario",
        default=None,
        metavar="NAME",
        help="Встроенный сценарий (по умолчанию: spin1-precessing)",
    )
    parser.add_argument(
        "--out",
        default=None,
        metavar="DIR",
        help="Директория отчёта (переопределяет output.directory и FLOQUET_HOLONOMY_OUTPUT_DIR)",
    )
    parser.add_argument(
        "--steps",
        type=int,
        default=None,
        help="Число шагов сетки N, степень двойки (переопределяет grid.steps)",
    )
    parser.add_argument(
        "--order",
        type=int,
        choices=[2, 4],
        default=None,
        help="Порядок схемы Магнуса (переопределяет grid.method)",
    )
    parser.add_argument(
        "--gauge",
        action="append",
        choices=["floquet", "aligned"],
        default=None,
        help="Калибровка репера; можно указать несколько раз (переопределяет gauges)",
    )
    parser.add_argument(
        "--format",
        dest="report_format",
        choices=["json", "csv", "both"],
        default=None,
        help="Вывод трасс: json, csv или both; JSON-отчёт пишется всегда",
    )
    parser.add_argument(
        "--log-level",
        choices=LOG_LEVELS,
        default=None,
        help="Уровень логирования (переопределяет FLOQUET_HOLONOMY_LOG_LEVEL)",
    )
    parser.add_argument(
        "--version",
        action="version",
        version=f"floquet-holonomy {__version__}",
    )
    return parser


def build_check_parser() -> argparse.ArgumentParser:
    """Создать парсер для команды ``floquet-holonomy check``."""
    parser = argparse.ArgumentParser(
        prog="floquet-holonomy check",
        description="Самопроверка: критерии приёмки на модели прецессирующего поля",
    )
    parser.add_argument(
        "--steps",
        type=int,
        default=512,
        help="Число шагов сетки N для всех критериев, кроме порядка сходимости",
    )
    parser.add_argument(
        "--flip-transport-sign",
        action="store_true",
        help="Мутация: обратить знак генератора в i·du/dt = Δu (критерии должны упасть)",
    )
    parser.add_argument(
        "--log-level",
        choices=LOG_LEVELS,
        default=None,
        help="Уровень логирования (переопределяет FLOQUET_HOLONOMY_LOG_LEVEL)",
    )
    return parser


async def async_run(args: argparse.Namespace) -> int:
    """Прогнать сценарий и записать отчёт. Возвращает код выхода."""
    # Отложенные импорты: --help не тянет numpy и scipy
    from floquet_holonomy.app_support import (
        apply_overrides,
        format_configuration_error,
        load_settings,
        resolve_config,
        write_report,
    )
    from floquet_holonomy.cli_output import print_scenario_summary
    from floquet_holonomy.exceptions import (
        ConfigurationError,
        FloquetHolonomyError,
        ToleranceCheckFailed,
    )
    from floquet_holonomy.logging_config import setup_logging
    from floquet_holonomy.orchestrator import raise_on_failure, run_scenario

    # 1. Загрузка настроек
    try:
        settings = load_settings()
    except ConfigurationError as exc:
        print(format_configuration_error(exc), file=sys.stderr)
        return exc.exit_code

    # 2. Настройка логирования
    setup_logging(args.log_level or settings.log_level)

    # 3. Документ сценария и флаги
    try:
        config = resolve_config(
            config_path=args.config,
            scenario=args.scenario,
            settings=settings,
        )
        report_format = args.report_format
        if report_format is None and "format" not in config.output.model_fields_set:
            report_format = settings.report_format
        config = apply_overrides(
            config,
            steps=args.steps,
            order=args.order,
            gauges=args.gauge,
            report_format=report_format,
            out=args.out,
        )
    except ConfigurationError as exc:
        logger.error("Ошибка сценария: %s", exc)
        return exc.exit_code

    # 4. Прогон
    try:
        run = await run_scenario(config, settings)
    except FloquetHolonomyError as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        return exc.exit_code
    except KeyboardInterrupt:
        logger.info("Прервано пользователем")
        return 130

    # 5. Отчёт
    try:
        written = write_report(run, config, settings)
    except OSError as exc:
        logger.error("Не удалось записать отчёт: %s", exc)
        return 1
    print_scenario_summary(run.report, written)

    try:
        raise_on_failure(run.report)
    except ToleranceCheckFailed as exc:
        logger.error("%s", exc)
        return exc.exit_code
    return 0


async def async_check(args: argparse.Namespace) -> int:
    """Прогнать критерии приёмки. Возвращает код выхода."""
    from floquet_holonomy.app_support import format_configuration_error, load_settings
    from floquet_holonomy.cli_output import print_check_table
    from floquet_holonomy.exceptions import ConfigurationError, FloquetHolonomyError
    from floquet_holonomy.logging_config import setup_logging
    from floquet_holonomy.services.acceptance_service import self_check

    try:
        settings = load_settings()
    except ConfigurationError as exc:
        print(format_configuration_error(exc), file=sys.stderr)
        return exc.exit_code

    setup_logging(args.log_level or settings.log_level)

    if args.steps < 8 or args.steps & (args.steps - 1):
        logger.error("--steps должно быть степенью двойки ≥ 8, получено %d", args.steps)
        return 2

    sign = -1.0 if args.flip_transport_sign else 1.0
    try:
        report = await asyncio.to_thread(self_check, args.steps, generator_sign=sign)
    except FloquetHolonomyError as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        return exc.exit_code
    except KeyboardInterrupt:
        logger.info("Прервано пользователем")
        return 130

    print_check_table(report)
    if not report.passed:
        logger.error(
            "Не пройдено критериев: %d (%s)",
            len(report.failed),
            ", ".join(row.key for row in report.failed),
        )
        return 1
    return 0


def main() -> None:
    """Синхронная точка входа для CLI."""
    if len(sys.argv) > 1 and sys.argv[1] == "check":
        args = build_check_parser().parse_args(sys.argv[2:])
        exit_code = asyncio.run(async_check(args))
    else:
        argv = sys.argv[2:] if len(sys.argv) > 1 and sys.argv[1] == "run" else sys.argv[1:]
        args = build_parser().parse_args(argv)
        exit_code = asyncio.run(async_run(args))
    sys.exit(exit_code)


if __name__ == "__main__":
    main()
