"""Вспомогательные функции текстового вывода для floquet-holonomy CLI."""

import math
from pathlib import Path
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from floquet_holonomy.models.scenario import ScenarioReport
    from floquet_holonomy.services.acceptance_service import AcceptanceReport


def _format_phases(values: list[float]) -> str:
    """Фазы в долях π: 0.8π, 0, −0.4π."""
    parts = []
    for value in values:
        ratio = value / math.pi
        parts.append("0" if abs(ratio) < 5e-13 else f"{ratio:.6g}π")
    return "{" + ", ".join(parts) + "}"


def print_scenario_summary(report: "ScenarioReport", written: list[Path] | None = None) -> None:
    """Человекочитаемая сводка прогона сценария в stdout."""
    print()
    print(f"=== Сценарий {report.config.get('name', '?')} ===")
    print(
        f"Флоке: μ = {', '.join(f'{mu:.10g}' for mu in report.floquet.mu)}"
        f" | кратности: {report.floquet.multiplicity}"
    )
    for warning in report.floquet.warnings:
        print(f"  [WARN] {warning}")

    condition = report.nonabelian_condition
    print(
        f"Условие неабелевости: {'выполнено' if condition.satisfied else 'не выполнено'}"
        f" | ‖[I(0),M]‖ = {condition.commutator_residual:.3e}"
        f" | ‖[e^(iMT),I(0)]‖ = {condition.monodromy_commutator_residual:.3e}"
    )
    print()

    if report.states:
        print(f"Циклические состояния ({len(report.states)}):")
        for state in report.states:
            print(
                f"  μ = {state.mu:+.6g}  α = {state.alpha:+.6f}  δ = {state.delta:+.6f}"
                f"  γ = {state.gamma:+.6f}  замыкание = {state.closure:.2e}"
            )
        print()

    if report.subspaces:
        print("Голономия:")
        for sub in report.subspaces:
            label = "факторизация" if sub.factorized else ""
            print(
                f"  λ = {sub.eigenvalue:+.6g} [{sub.gauge}] l = {sub.multiplicity}: "
                f"{_format_phases(sub.holonomy_phases)} {label}".rstrip()
            )
        if len({sub.gauge for sub in report.subspaces}) > 1:
            print(f"  Расхождение между калибровками: {report.cross_gauge_distance:.3e}")
        print()

    print("Проверки:")
    for name in sorted(report.checks):
        status = "FAIL" if name in report.failed_checks else "ok"
        print(
            f"  [{status:>4}] {name:<28} {report.checks[name]:.3e}"
            f"  (допуск {report.bounds[name]:.1e})"
        )
    print()
    if written:
        print("Файлы:")
        for path in written:
            print(f"  {path}")
        print()
    verdict = "все проверки пройдены" if report.passed else (
        f"не пройдено: {', '.join(report.failed_checks)}"
    )
    print(f"Итог: {verdict}")
    print(f"Контрольная сумма: {report.checksum}")
    print()


def print_check_table(report: "AcceptanceReport") -> None:
    """Таблица самопроверки: критерий → измерено → граница → статус."""
    print()
    print(f"=== Самопроверка (N = {report.steps}) ===")
    if report.generator_sign != 1.0:
        print(f"[Мутация] знак генератора переноса: {report.generator_sign:+g}")
    print(f"{'Критерий':<12} {'Измерено':>12} {'Граница':>10}  Статус  Описание")
    for row in report.criteria:
        status = "PASS" if row.passed else "FAIL"
        print(
            f"{row.key:<12} {row.measured:>12.3e} {row.bound:>10.1e}  {status:<6}  {row.title}"
        )
        if row.note:
            print(f"{'':<12} {row.note}")
    print()
    passed = sum(1 for row in report.criteria if row.passed)
    print(
        f"Пройдено: {passed} из {len(report.criteria)}"
        f" | Время: {report.duration_seconds:.2f} с"
    )
    print()
