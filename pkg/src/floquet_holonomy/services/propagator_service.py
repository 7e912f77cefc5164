"""Интегрирование упорядоченной по времени эволюции и разложение Флоке.

Схемы шага (h — шаг сетки, решаем i·dV/dt = F(t)·V):
- magnus2: V_{k+1} = e^{−i·h·F(t_k + h/2)}·V_k;
- magnus4: два узла Гаусса–Лежандра c± = 1/2 ± √3/6 и коммутаторный член,
  Ω = −i·h/2·(F₁ + F₂) − (√3·h²/12)·[F₂, F₁].
После каждого шага произведение переунитаризуется полярным разложением.
"""

import csv
import logging
import math
from collections.abc import Callable, Sequence
from pathlib import Path

import numpy as np
import numpy.typing as npt
from scipy import linalg as sla

from floquet_holonomy.exceptions import (
    InputValidationError,
    UnitarityDriftError,
)
from floquet_holonomy.models.operators import ComplexMatrix, HermitianOperator
from floquet_holonomy.models.propagation import (
    CyclicState,
    FloquetDecomposition,
    IntegrationMethod,
    PropagatorTrace,
    TimeGrid,
)
from floquet_holonomy.models.spin import PeriodicHamiltonian
from floquet_holonomy.utils.matrix_core import (
    DEFAULT_CLUSTER_TOL_REL,
    DEFAULT_RESONANCE_TOL,
    default_cluster_tol,
    herm_eig,
    hermitian_asymmetry,
    is_hermitian,
    polar_unitary,
    unitarity_defect,
    unitary_exp,
    unitary_log,
)
from floquet_holonomy.utils.phase_math import circular_distance, wrap_phase

logger = logging.getLogger(__name__)

MIN_STEPS = 8
UNITARITY_DRIFT_TOL = 1e-8
DEGENERACY_WARNING_TOL = 1e-3

_GAUSS_OFFSET = math.sqrt(3) / 6
_COMMUTATOR_WEIGHT = math.sqrt(3) / 12

MatrixFunction = Callable[[float], npt.ArrayLike]


def _magnus_generator(
    sample: MatrixFunction,
    t: float,
    h: float,
    method: IntegrationMethod,
) -> ComplexMatrix:
    """Эффективный генератор G шага: V_{k+1} = e^{−iG}·V_k."""
    if method is IntegrationMethod.MAGNUS2:
        mid: ComplexMatrix = h * np.asarray(sample(t + h / 2), dtype=np.complex128)
        return mid
    f1 = np.asarray(sample(t + (0.5 - _GAUSS_OFFSET) * h), dtype=np.complex128)
    f2 = np.asarray(sample(t + (0.5 + _GAUSS_OFFSET) * h), dtype=np.complex128)
    # −iG = −i·h/2·(F₁+F₂) − c·h²·[F₂,F₁]  ⇒  G = h/2·(F₁+F₂) − i·c·h²·[F₂,F₁]
    generator: ComplexMatrix = h / 2 * (f1 + f2) - 1j * _COMMUTATOR_WEIGHT * h**2 * (
        f2 @ f1 - f1 @ f2
    )
    return generator


def _integrate(
    sample: MatrixFunction,
    dim: int,
    grid: TimeGrid,
    method: IntegrationMethod,
) -> tuple[npt.NDArray[np.complex128], npt.NDArray[np.complex128]]:
    """Пошаговая рекурсия; возвращает (V(t_k), множители шагов)."""
    h = grid.step
    nodes = grid.nodes
    values = np.empty((grid.steps + 1, dim, dim), dtype=np.complex128)
    factors = np.empty((grid.steps, dim, dim), dtype=np.complex128)
    values[0] = np.eye(dim, dtype=np.complex128)

    hermitian_generator = True
    for k in range(grid.steps):
        generator = _magnus_generator(sample, float(nodes[k]), h, method)
        if generator.shape != (dim, dim):
            raise InputValidationError(
                f"Генератор имеет форму {generator.shape}, ожидалась {(dim, dim)}"
            )
        if is_hermitian(generator):
            factor = unitary_exp(generator, -1.0)
            product = polar_unitary(factor @ values[k])
        else:
            if hermitian_generator:
                logger.warning(
                    "Генератор не эрмитов на шаге %d (‖G − G†‖ = %.3e): "
                    "решение не будет унитарным",
                    k,
                    hermitian_asymmetry(generator),
                )
            hermitian_generator = False
            factor = sla.expm(-1j * generator)
            product = factor @ values[k]
        factors[k] = factor
        values[k + 1] = product

    if not hermitian_generator:
        drift = max(unitarity_defect(v) for v in values)
        if drift > UNITARITY_DRIFT_TOL:
            raise UnitarityDriftError(
                "Неэрмитов генератор упорядоченной экспоненты",
                residual=drift,
                bound=UNITARITY_DRIFT_TOL,
            )
    return values, factors


def time_ordered_exp(
    generator: MatrixFunction,
    grid: TimeGrid,
    method: IntegrationMethod = IntegrationMethod.MAGNUS4,
    *,
    dim: int | None = None,
) -> npt.NDArray[np.complex128]:
    """V(t_k) = 𝒯e^{−i∫₀ᵗF}, решение i·dV/dt = F(t)·V, V(0) = 1."""
    size = dim if dim is not None else int(np.asarray(generator(0.0)).shape[0])
    values, _ = _integrate(generator, size, grid, method)
    return values


def propagate(
    hamiltonian: PeriodicHamiltonian,
    grid: TimeGrid,
    method: IntegrationMethod = IntegrationMethod.MAGNUS4,
) -> PropagatorTrace:
    """Оператор эволюции U(t_k) для i·dU/dt = H(t)·U, U(0) = 1."""
    if not math.isclose(grid.period, hamiltonian.period, rel_tol=1e-12):
        raise InputValidationError(
            f"Период сетки {grid.period} не совпадает с периодом гамильтониана {hamiltonian.period}"
        )
    if grid.steps < MIN_STEPS:
        raise InputValidationError(f"Нужно не меньше {MIN_STEPS} шагов, получено {grid.steps}")

    values, factors = _integrate(hamiltonian.sampler, hamiltonian.dim, grid, method)
    logger.info(
        "Пропагатор: dim=%d, N=%d, метод=%s, дефект унитарности U(T)=%.2e",
        hamiltonian.dim,
        grid.steps,
        method.value,
        unitarity_defect(values[-1]),
    )
    return PropagatorTrace(grid=grid, U=values, method=method, steps=factors)


def floquet_decompose(
    trace: PropagatorTrace,
    *,
    cluster_tol_rel: float = DEFAULT_CLUSTER_TOL_REL,
    resonance_tol: float = DEFAULT_RESONANCE_TOL,
) -> FloquetDecomposition:
    """M = K/T с главным логарифмом U(T) = e^{iK}; Z(t_k) = U(t_k)·e^{−iMt_k}."""
    period = trace.grid.period
    k_log = unitary_log(trace.monodromy, resonance_tol=resonance_tol)
    m_op: HermitianOperator = k_log / period
    spectrum = herm_eig(m_op, cluster_tol=default_cluster_tol(m_op, cluster_tol_rel))

    z = np.empty_like(trace.U)
    for k, t in enumerate(trace.grid.nodes):
        z[k] = trace.U[k] @ unitary_exp(m_op, -float(t))

    warnings: list[str] = []
    values = spectrum.values
    for a in range(len(values)):
        for b in range(a + 1, len(values)):
            # μ_n определены лишь по модулю 2π/T
            gap = circular_distance(values[a] * period, values[b] * period)
            if gap < DEGENERACY_WARNING_TOL:
                message = (
                    f"Почти совпадающие по модулю 2π/T собственные фазы "
                    f"μ={values[a]:.10g} и μ={values[b]:.10g} (зазор {gap:.2e} рад)"
                )
                logger.warning(message)
                warnings.append(message)

    logger.info(
        "Разложение Флоке: μ = %s, кратности = %s",
        ", ".join(f"{v:.10g}" for v in values),
        spectrum.multiplicities,
    )
    return FloquetDecomposition(
        M=m_op,
        spectrum=spectrum,
        Z=z,
        period=period,
        trace=trace,
        degeneracy_warnings=tuple(warnings),
    )


def cyclic_states(fd: FloquetDecomposition) -> list[CyclicState]:
    """Циклические состояния |μ_n, a⟩ с полной фазой α_n = μ_n·T."""
    states: list[CyclicState] = []
    for cluster in fd.spectrum.clusters:
        alpha = cluster.value * fd.period
        for a in range(cluster.multiplicity):
            states.append(
                CyclicState(
                    mu=cluster.value,
                    index=a,
                    vector=cluster.vectors[:, a].copy(),
                    alpha=alpha,
                    alpha_wrapped=wrap_phase(alpha),
                )
            )
    return states


def max_deviation(
    values: npt.NDArray[np.complex128],
    reference: Callable[[float], ComplexMatrix],
    grid: TimeGrid,
) -> float:
    """max_k ‖V(t_k) − V_ref(t_k)‖_F."""
    return max(
        float(np.linalg.norm(values[k] - reference(float(t))))
        for k, t in enumerate(grid.nodes)
    )


def floquet_reconstruction_residual(fd: FloquetDecomposition) -> float:
    """max_k ‖U(t_k) − Z(t_k)·e^{iMt_k}‖_F."""
    grid = fd.trace.grid
    return max(
        float(np.linalg.norm(fd.trace.U[k] - fd.Z[k] @ unitary_exp(fd.M, float(t))))
        for k, t in enumerate(grid.nodes)
    )


def convergence_order(steps: Sequence[int], errors: Sequence[float]) -> float:
    """Наклон log(ошибки) от log(h) методом наименьших квадратов."""
    if len(steps) != len(errors) or len(steps) < 2:
        raise InputValidationError("Для оценки порядка нужны хотя бы две пары (N, ошибка)")
    h = 1.0 / np.asarray(steps, dtype=np.float64)
    slope, _ = np.polyfit(np.log(h), np.log(np.asarray(errors, dtype=np.float64)), 1)
    return float(slope)


def export_trace_csv(
    path: str | Path,
    grid: TimeGrid,
    matrices: npt.NDArray[np.complex128],
) -> Path:
    """CSV-трасса: k, t, затем Re/Im каждого элемента построчно."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    rows, cols = matrices.shape[1], matrices.shape[2]
    header = ["k", "t"]
    for i in range(rows):
        for j in range(cols):
            header += [f"re_{i}{j}", f"im_{i}{j}"]
    with target.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for k, t in enumerate(grid.nodes):
            flat = matrices[k].ravel()
            row: list[str] = [str(k), repr(float(t))]
            for value in flat:
                row += [repr(float(value.real)), repr(float(value.imag))]
            writer.writerow(row)
    logger.debug("CSV-трасса записана: %s (%d узлов)", target, grid.steps + 1)
    return target
