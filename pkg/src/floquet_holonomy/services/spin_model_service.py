"""Спиновые генераторы и периодические гамильтонианы модели магнитного диполя.

H(t) = b·R⃗(t)·J⃗. Для R⃗ ≠ 0 спектр H(t) невырожден и равен b|R⃗|k,
k = −j..j, поэтому обращение поля в ноль — это пересечение уровней и
отвергается на этапе построения модели.

Модель прецессирующего поля задаётся готовой парой Флоке
Z(t) = e^{iΩtJ1}, M = ωJ3, которой отвечает гамильтониан
H(t) = −[ΩJ1 + ω·sin(Ωt)·J2 + ω·cos(Ωt)·J3]. Общий знак «минус» хранится в
коэффициентах R⃗(t), а не в b.
"""

import logging
import math
from collections.abc import Callable, Sequence
from functools import lru_cache

import numpy as np
import numpy.typing as npt
from scipy.optimize import minimize_scalar

from floquet_holonomy.exceptions import (
    InputValidationError,
    LevelCrossingError,
    PeriodicityError,
)
from floquet_holonomy.models.operators import HermitianOperator, UnitaryOperator
from floquet_holonomy.models.spin import (
    FieldPath,
    PeriodicHamiltonian,
    PrecessingFieldParams,
    SpinGenerators,
)
from floquet_holonomy.utils.matrix_core import require_hermitian, unitary_exp

logger = logging.getLogger(__name__)

MAX_SPIN = 100.0
PERIODICITY_TOL = 1e-10
LEVEL_TOL = 1e-9
_SAMPLE_POINTS = 2048


# ---------------------------------------------------------------------------
# Генераторы
# ---------------------------------------------------------------------------

def _two_j(j: float) -> int:
    two_j = round(2 * float(j))
    if two_j < 1 or abs(2 * float(j) - two_j) > 1e-12:
        raise InputValidationError(f"j должно быть полуцелым ≥ 1/2, получено {j}")
    if two_j > 2 * MAX_SPIN:
        raise InputValidationError(
            f"j = {j} превышает предел {MAX_SPIN:g} (размерность ≤ {int(2 * MAX_SPIN) + 1})"
        )
    return two_j


@lru_cache(maxsize=32)
def _generators_cached(two_j: int) -> SpinGenerators:
    j = two_j / 2
    m = j - np.arange(two_j + 1)  # j, j−1, …, −j
    # (J+)_{m+1, m} = √(j(j+1) − m(m+1)); строки упорядочены по убыванию m
    raising = np.zeros((two_j + 1, two_j + 1), dtype=np.complex128)
    for col in range(1, two_j + 1):
        raising[col - 1, col] = math.sqrt(j * (j + 1) - m[col] * (m[col] + 1))
    lowering = raising.conj().T

    j1 = (raising + lowering) / 2
    j2 = (raising - lowering) / 2j
    j3 = np.diag(m).astype(np.complex128)
    for op in (j1, j2, j3):
        op.setflags(write=False)
    return SpinGenerators(j=j, J1=j1, J2=j2, J3=j3)


def spin_generators(j: float) -> SpinGenerators:
    """Стандартное представление спина j через лестничные операторы.

    Генераторы кэшируются по j; возвращаемые массивы только для чтения.
    """
    return _generators_cached(_two_j(j))


# ---------------------------------------------------------------------------
# Траектории поля
# ---------------------------------------------------------------------------

def fourier_path(
    period: float,
    constant: Sequence[float],
    cos_terms: Sequence[Sequence[float]] = (),
    sin_terms: Sequence[Sequence[float]] = (),
) -> FieldPath:
    """R⃗(t) = a₀ + Σ_k [a_k·cos(kΩt) + b_k·sin(kΩt)], Ω = 2π/T."""
    a0 = np.asarray(constant, dtype=np.float64)
    a = np.asarray(cos_terms, dtype=np.float64).reshape(-1, 3)
    b = np.asarray(sin_terms, dtype=np.float64).reshape(-1, 3)
    if a0.shape != (3,):
        raise InputValidationError(
            f"Постоянная часть поля должна быть 3-вектором, получено {a0.shape}"
        )
    big_omega = 2 * math.pi / period

    def path(t: float) -> tuple[float, float, float]:
        value = a0.copy()
        for k, coeff in enumerate(a, start=1):
            value += coeff * math.cos(k * big_omega * t)
        for k, coeff in enumerate(b, start=1):
            value += coeff * math.sin(k * big_omega * t)
        return float(value[0]), float(value[1]), float(value[2])

    return path


def tabulated_path(times: npt.ArrayLike, values: npt.ArrayLike) -> FieldPath:
    """Кусочно-линейная интерполяция табличного поля.

    Линейная интерполяция ограничивает порядок сходимости интегратора
    вторым: излом R⃗(t) в узлах таблицы виден интегратору четвёртого порядка.
    """
    grid = np.asarray(times, dtype=np.float64)
    table = np.asarray(values, dtype=np.float64)
    if grid.ndim != 1 or table.shape != (grid.size, 3) or grid.size < 2:
        raise InputValidationError(
            "Табличное поле: ожидались times (n,) и values (n, 3), "
            f"получено {grid.shape}, {table.shape}"
        )
    if np.any(np.diff(grid) <= 0):
        raise InputValidationError("Табличное поле: моменты времени должны строго возрастать")
    logger.warning(
        "Поле задано таблицей из %d точек: используется линейная интерполяция, "
        "порядок сходимости интегратора ограничен вторым",
        grid.size,
    )

    def path(t: float) -> tuple[float, float, float]:
        return (
            float(np.interp(t, grid, table[:, 0])),
            float(np.interp(t, grid, table[:, 1])),
            float(np.interp(t, grid, table[:, 2])),
        )

    return path


def _scan_for_zero_field(path: FieldPath, period: float) -> None:
    """Найти минимум |R⃗(t)| на пробной сетке и уточнить его ограниченной минимизацией."""
    samples = np.linspace(0.0, period, _SAMPLE_POINTS + 1)
    norms = np.array([np.linalg.norm(path(float(t))) for t in samples])
    scale = max(1.0, float(norms.max()))
    idx = int(np.argmin(norms))
    lo = float(samples[max(idx - 1, 0)])
    hi = float(samples[min(idx + 1, _SAMPLE_POINTS)])
    refined = minimize_scalar(
        lambda t: float(np.linalg.norm(path(t))),
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": 1e-12},
    )
    smallest = min(float(norms[idx]), float(refined.fun))
    if smallest <= LEVEL_TOL * scale:
        where = float(samples[idx]) if norms[idx] <= refined.fun else float(refined.x)
        raise LevelCrossingError(
            f"Поле обращается в ноль при t ≈ {where:.6g}: |R| = {smallest:.3e}, "
            "собственные значения b|R|k вырождаются (пересечение уровней)"
        )


# ---------------------------------------------------------------------------
# Гамильтонианы
# ---------------------------------------------------------------------------

def field_hamiltonian(
    b: float,
    path: FieldPath,
    gens: SpinGenerators,
    period: float,
) -> PeriodicHamiltonian:
    """H(t) = b·(R1·J1 + R2·J2 + R3·J3) для T-периодической траектории R⃗(t)."""
    if not period > 0 or not math.isfinite(period):
        raise InputValidationError(f"Период должен быть положительным, получено {period}")
    r0 = np.asarray(path(0.0), dtype=np.float64)
    r_end = np.asarray(path(period), dtype=np.float64)
    if r0.shape != (3,) or not np.all(np.isfinite(r0)):
        raise InputValidationError(f"R(0) должно быть конечным 3-вектором, получено {r0}")
    mismatch = float(np.linalg.norm(r0 - r_end))
    bound = PERIODICITY_TOL * max(1.0, float(np.linalg.norm(r0)))
    if mismatch > bound:
        raise PeriodicityError(mismatch, bound)
    _scan_for_zero_field(path, period)

    j1, j2, j3 = gens.as_tuple()

    def sampler(t: float) -> HermitianOperator:
        r = path(t)
        if math.hypot(*r) <= LEVEL_TOL:
            raise LevelCrossingError(f"Поле обращается в ноль при t = {t:.6g}")
        result: HermitianOperator = b * (r[0] * j1 + r[1] * j2 + r[2] * j3)
        return result

    logger.debug("Построен гамильтониан поля: dim=%d, T=%.6g, b=%.6g", gens.dim, period, b)
    return PeriodicHamiltonian(dim=gens.dim, period=period, sampler=sampler)


def constant_hamiltonian(h: npt.ArrayLike, period: float) -> PeriodicHamiltonian:
    """Автономная модель H(t) ≡ H, формально T-периодическая."""
    matrix = require_hermitian(h)
    matrix.setflags(write=False)
    return PeriodicHamiltonian(
        dim=int(matrix.shape[0]),
        period=period,
        sampler=lambda _t: matrix,
    )


def check_periodicity(hamiltonian: PeriodicHamiltonian) -> float:
    """‖H(0) − H(T)‖_F; при нарушении допуска — PeriodicityError."""
    h0 = hamiltonian.at(0.0)
    mismatch = float(np.linalg.norm(h0 - hamiltonian.at(hamiltonian.period)))
    bound = PERIODICITY_TOL * max(1.0, float(np.linalg.norm(h0)))
    if mismatch > bound:
        raise PeriodicityError(mismatch, bound)
    return mismatch


def field_spectrum(b: float, field_norm: float, j: float) -> list[float]:
    """Спектр b|R|k, k = −j..j, по убыванию при b > 0."""
    two_j = _two_j(j)
    return [b * field_norm * (two_j / 2 - n) for n in range(two_j + 1)]


def precessing_model(
    params: PrecessingFieldParams,
) -> tuple[PeriodicHamiltonian, Callable[[float], UnitaryOperator], HermitianOperator]:
    """Гамильтониан прецессирующего поля и его аналитическая пара Флоке (Z(t), M)."""
    gens = spin_generators(params.j)
    omega, big_omega = params.omega, params.Omega

    def path(t: float) -> tuple[float, float, float]:
        return (
            -big_omega,
            -omega * math.sin(big_omega * t),
            -omega * math.cos(big_omega * t),
        )

    hamiltonian = field_hamiltonian(1.0, path, gens, params.period)

    def z_analytic(t: float) -> UnitaryOperator:
        return unitary_exp(gens.J1, big_omega * t)

    m_analytic: HermitianOperator = omega * gens.J3
    logger.info(
        "Модель прецессирующего поля: j=%g, ω=%.6g, Ω=%.6g, T=%.6g",
        params.j,
        omega,
        big_omega,
        params.period,
    )
    return hamiltonian, z_analytic, m_analytic
