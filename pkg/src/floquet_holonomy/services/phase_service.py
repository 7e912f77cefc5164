"""Абелевы и неабелевы фазы циклических эволюций.

Знаковое соглашение: перенос решает i·du/dt = Δ(t)·u, поэтому
u(T) = 𝒯e^{−i∫Δ}, а для одномерного подпространства u(T) = e^{i(δ+γ)}
с δ = −∫⟨ψ|H|ψ⟩dt и γ = i∫⟨φ|φ̇⟩dt. Все фазы в отчётах лежат в (−π, π].
"""

import logging
from collections.abc import Sequence
from itertools import combinations

import numpy as np
import numpy.typing as npt
from scipy.integrate import simpson
from scipy.interpolate import CubicSpline
from scipy.optimize import linear_sum_assignment

from floquet_holonomy.exceptions import (
    DimensionMismatchError,
    GridTooCoarseError,
    InputValidationError,
    NumericalToleranceError,
    UnitarityDriftError,
)
from floquet_holonomy.models.invariants import FrameTrace
from floquet_holonomy.models.operators import ComplexMatrix
from floquet_holonomy.models.phases import (
    ConnectionTrace,
    HolonomyReport,
    StatePhases,
    TransportResult,
)
from floquet_holonomy.models.propagation import (
    FloquetDecomposition,
    IntegrationMethod,
    PropagatorTrace,
    TimeGrid,
)
from floquet_holonomy.models.spin import PeriodicHamiltonian
from floquet_holonomy.services.propagator_service import time_ordered_exp
from floquet_holonomy.utils.matrix_core import commutator_norm, unitarity_defect, unitary_exp
from floquet_holonomy.utils.phase_math import circular_distance, wrap_phase

logger = logging.getLogger(__name__)

MIN_OVERLAP = 0.1
NORM_TOL = 1e-8
ASYMMETRY_LIMIT = 1e-4
TRANSPORT_DRIFT_TOL = 1e-6
EIGENVALUE_MODULUS_TOL = 1e-8
COMMUTE_SAMPLES = 65

# Центральные разностные шаблоны первой производной: смещения и веса (в единицах 1/h)
_STENCILS: dict[int, tuple[tuple[int, ...], tuple[float, ...]]] = {
    2: ((-1, 1), (-0.5, 0.5)),
    4: ((-2, -1, 1, 2), (1 / 12, -8 / 12, 8 / 12, -1 / 12)),
}


# ---------------------------------------------------------------------------
# Абелевы фазы
# ---------------------------------------------------------------------------

def evolve_state(trace: PropagatorTrace, psi0: npt.ArrayLike) -> npt.NDArray[np.complex128]:
    """|ψ(t_k)⟩ = U(t_k)|ψ(0)⟩, форма (N+1, dim)."""
    state = np.asarray(psi0, dtype=np.complex128).ravel()
    if state.shape[0] != trace.dim:
        raise DimensionMismatchError(state.shape, (trace.dim,))
    result: npt.NDArray[np.complex128] = trace.U @ state
    return result


def _require_unit_norm(states: npt.NDArray[np.complex128]) -> None:
    worst = float(np.max(np.abs(np.linalg.norm(states, axis=1) - 1.0)))
    if worst > NORM_TOL:
        raise InputValidationError(f"Состояние не нормировано: max|‖ψ‖ − 1| = {worst:.3e}")


def dynamical_phase(
    states: npt.ArrayLike,
    hamiltonian: PeriodicHamiltonian,
    grid: TimeGrid,
) -> float:
    """δ = −∫₀ᵀ⟨ψ|H|ψ⟩dt составной формулой Симпсона (N чётно)."""
    psi = np.asarray(states, dtype=np.complex128)
    if psi.ndim != 2 or psi.shape[0] != grid.steps + 1:
        raise InputValidationError(
            f"Ожидалась трасса формы (N+1, dim) с N = {grid.steps}, получено {psi.shape}"
        )
    if grid.steps % 2:
        raise InputValidationError(f"Формула Симпсона требует чётного N, получено {grid.steps}")
    _require_unit_norm(psi)
    nodes = grid.nodes
    integrand = np.array(
        [
            float(np.real(np.vdot(psi[k], hamiltonian.at(float(t)) @ psi[k])))
            for k, t in enumerate(nodes)
        ]
    )
    return -float(simpson(integrand, x=nodes))


def pancharatnam_sum(states: npt.ArrayLike) -> float:
    """−Σ_k arg⟨φ_k|φ_{k+1}⟩ по замкнутой цепочке без приведения по модулю 2π."""
    phi = np.asarray(states, dtype=np.complex128)
    if phi.ndim != 2 or phi.shape[0] < 2:
        raise InputValidationError(f"Ожидалась цепочка формы (N+1, dim), получено {phi.shape}")
    _require_unit_norm(phi)
    gap = float(np.linalg.norm(phi[-1] - phi[0]))
    if gap > NORM_TOL:
        raise InputValidationError(f"Цепочка не однозначна: ‖φ(T) − φ(0)‖ = {gap:.3e}")
    overlaps = np.einsum("ki,ki->k", phi[:-1].conj(), phi[1:])
    smallest = float(np.min(np.abs(overlaps)))
    if smallest < MIN_OVERLAP:
        raise GridTooCoarseError(
            "Перекрытие соседних состояний слишком мало",
            residual=smallest,
            bound=MIN_OVERLAP,
        )
    return -float(np.sum(np.angle(overlaps)))


def geometric_phase(states: npt.ArrayLike) -> float:
    """γ дискретной формулой Панчаратнама, в (−π, π]."""
    return wrap_phase(pancharatnam_sum(states))


def total_phase_check(fd: FloquetDecomposition, delta: float, gamma: float, index: int) -> float:
    """|μ_n·T − δ − γ| по модулю 2π."""
    alpha = fd.eigenphases[index] * fd.period
    return circular_distance(alpha, delta + gamma)


def cyclic_state_phases(
    fd: FloquetDecomposition,
    hamiltonian: PeriodicHamiltonian,
) -> list[StatePhases]:
    """α, δ, γ и невязка замыкания для каждого собственного вектора M.

    δ считается по |ψ(t)⟩ = U(t)|μ⟩, γ — по однозначной цепочке Z(t)|μ⟩.
    """
    grid = fd.trace.grid
    results: list[StatePhases] = []
    for index, cluster in enumerate(fd.spectrum.clusters):
        alpha = cluster.value * fd.period
        for a in range(cluster.multiplicity):
            vector = cluster.vectors[:, a]
            delta = dynamical_phase(evolve_state(fd.trace, vector), hamiltonian, grid)
            chain = fd.Z @ vector
            chain[-1] = vector
            gamma_raw = pancharatnam_sum(chain)
            gamma = wrap_phase(gamma_raw)
            results.append(
                StatePhases(
                    mu=cluster.value,
                    index=a,
                    alpha=wrap_phase(alpha),
                    delta=wrap_phase(delta),
                    gamma=gamma,
                    gamma_raw=gamma_raw,
                    closure=total_phase_check(fd, delta, gamma, index),
                )
            )
    return results


# ---------------------------------------------------------------------------
# Связности
# ---------------------------------------------------------------------------

def connection_matrices(
    frame: FrameTrace,
    hamiltonian: PeriodicHamiltonian,
    *,
    stencil_order: int = 4,
) -> ConnectionTrace:
    """E = F†HF, A = i·F†·dF/dt, Δ = E − A вдоль гладкой цепочки репера.

    Производная — центральная разность заданного порядка (по умолчанию 4-го) на
    периодически продолженной цепочке F(t_{k+N}) = F(t_k)·W, так что у концов
    отрезка шаблон остаётся центральным, а не переходит в односторонний.
    """
    if stencil_order not in _STENCILS:
        raise InputValidationError(
            f"Поддерживаются шаблоны порядка 2 и 4, получено {stencil_order}"
        )
    grid = frame.grid
    if not np.isclose(grid.period, hamiltonian.period, rtol=1e-12, atol=0.0):
        raise InputValidationError("Период сетки репера не совпадает с периодом гамильтониана")
    offsets, weights = _STENCILS[stencil_order]
    if grid.steps < 2 * max(offsets):
        raise InputValidationError(f"Слишком мало узлов для шаблона: N = {grid.steps}")

    h = grid.step
    nodes = grid.nodes
    size = frame.multiplicity
    e_trace = np.empty((grid.steps + 1, size, size), dtype=np.complex128)
    a_trace = np.empty_like(e_trace)
    asymmetry = 0.0
    for k in range(grid.steps + 1):
        node = frame.smooth_node(k)
        derivative = np.zeros_like(node)
        for shift, weight in zip(offsets, weights, strict=True):
            derivative += weight * frame.smooth_node(k + shift)
        derivative /= h
        e_k = node.conj().T @ hamiltonian.at(float(nodes[k])) @ node
        a_raw = 1j * node.conj().T @ derivative
        asymmetry = max(asymmetry, float(np.linalg.norm(a_raw - a_raw.conj().T)))
        e_trace[k] = (e_k + e_k.conj().T) / 2
        a_trace[k] = (a_raw + a_raw.conj().T) / 2

    if asymmetry > ASYMMETRY_LIMIT:
        raise GridTooCoarseError(
            "Связность A заметно неэрмитова: сетка слишком грубая",
            residual=asymmetry,
            bound=ASYMMETRY_LIMIT,
        )
    logger.debug(
        "Связности λ=%.6g (%s): ‖A − A†‖ ≤ %.3e, шаблон порядка %d",
        frame.eigenvalue,
        frame.gauge.value,
        asymmetry,
        stencil_order,
    )
    return ConnectionTrace(
        eigenvalue=frame.eigenvalue,
        gauge=frame.gauge,
        grid=grid,
        E=e_trace,
        A=a_trace,
        Delta=e_trace - a_trace,
        closure=frame.closure,
        asymmetry=asymmetry,
        stencil_order=stencil_order,
    )


def constant_connection_deviation(conn: ConnectionTrace) -> float:
    """max_k ‖Δ(t_k) − Δ(t_0)‖_F."""
    return float(np.max(np.linalg.norm(conn.Delta - conn.Delta[0], axis=(1, 2))))


# ---------------------------------------------------------------------------
# Перенос и голономия
# ---------------------------------------------------------------------------

class _SplineSampler:
    """Кубический сплайн матричной функции по узлам сетки (Re и Im раздельно)."""

    def __init__(self, grid: TimeGrid, samples: npt.NDArray[np.complex128], sign: float) -> None:
        nodes = grid.nodes
        self._real = CubicSpline(nodes, samples.real, axis=0)
        self._imag = CubicSpline(nodes, samples.imag, axis=0)
        self._sign = sign

    def __call__(self, t: float) -> ComplexMatrix:
        value: ComplexMatrix = self._sign * (self._real(t) + 1j * self._imag(t))
        return value


def _spectrum(holonomy: ComplexMatrix) -> tuple[npt.NDArray[np.complex128], tuple[float, ...]]:
    eigenvalues = np.linalg.eigvals(holonomy)
    moduli = np.abs(eigenvalues)
    worst = float(np.max(np.abs(moduli - 1.0)))
    if worst > EIGENVALUE_MODULUS_TOL:
        raise NumericalToleranceError(
            "Собственные значения голономии не лежат на единичной окружности",
            residual=worst,
            bound=EIGENVALUE_MODULUS_TOL,
        )
    phases = tuple(sorted(wrap_phase(float(np.angle(z))) for z in eigenvalues))
    return eigenvalues, phases


def _check_drift(values: npt.NDArray[np.complex128], context: str) -> None:
    drift = max(unitarity_defect(v) for v in values)
    if drift > TRANSPORT_DRIFT_TOL:
        raise UnitarityDriftError(context, residual=drift, bound=TRANSPORT_DRIFT_TOL)


def transport_unitary(
    conn: ConnectionTrace,
    method: IntegrationMethod = IntegrationMethod.MAGNUS4,
    *,
    generator_sign: float = 1.0,
    label: str | None = None,
) -> TransportResult:
    """u(t_k) = 𝒯e^{−i∫Δ} на гладкой цепочке; в узле N u(T) = W·ũ(T).

    ``generator_sign`` меняет знак генератора переноса; значение −1 нужно
    только для мутационной проверки самотеста.
    """
    sampler = _SplineSampler(conn.grid, conn.Delta, generator_sign)
    values = time_ordered_exp(sampler, conn.grid, method, dim=conn.multiplicity)
    values[-1] = conn.closure @ values[-1]
    _check_drift(values, "Дрейф унитарности переноса u(t)")
    eigenvalues, phases = _spectrum(values[-1])
    logger.info(
        "Голономия λ=%.6g (%s): фазы = %s",
        conn.eigenvalue,
        conn.gauge.value,
        ", ".join(f"{p:.10f}" for p in phases),
    )
    return TransportResult(
        eigenvalue=conn.eigenvalue,
        gauge=conn.gauge,
        grid=conn.grid,
        u=values,
        eigenvalues=eigenvalues,
        phases=phases,
        label=label if label is not None else conn.gauge.value,
    )


def _max_cross_commutator(
    e_trace: npt.NDArray[np.complex128],
    a_trace: npt.NDArray[np.complex128],
) -> float:
    count = e_trace.shape[0]
    picks = np.unique(np.linspace(0, count - 1, min(count, COMMUTE_SAMPLES)).round().astype(int))
    e_s, a_s = e_trace[picks], a_trace[picks]
    forward = np.einsum("aij,bjk->abik", e_s, a_s)
    backward = np.einsum("bij,ajk->abik", a_s, e_s)
    return float(np.max(np.linalg.norm(forward - backward, axis=(2, 3))))


def factorized_transport(
    conn: ConnectionTrace,
    commute_tol: float = 1e-8,
    method: IntegrationMethod = IntegrationMethod.MAGNUS4,
) -> TransportResult | None:
    """u(T) = 𝒯e^{−i∫E}·𝒯e^{i∫A}, если семейства E(t) и A(t') коммутируют.

    Некоммутирующие семейства — не ошибка: возвращается ``None``.
    Множитель замыкания W относится к геометрическому множителю.
    """
    worst = _max_cross_commutator(conn.E, conn.A)
    if worst > commute_tol:
        logger.warning(
            "Факторизация неприменима для λ=%.6g (%s): max‖[E(t), A(t')]‖ = %.3e > %.1e",
            conn.eigenvalue,
            conn.gauge.value,
            worst,
            commute_tol,
        )
        return None

    size = conn.multiplicity
    dynamical = time_ordered_exp(
        _SplineSampler(conn.grid, conn.E, 1.0), conn.grid, method, dim=size
    )
    # i·dV/dt = −A·V  ⇒  V = 𝒯e^{+i∫A}
    geometric = time_ordered_exp(
        _SplineSampler(conn.grid, conn.A, -1.0), conn.grid, method, dim=size
    )
    values = np.einsum("kij,kjl->kil", dynamical, geometric)
    values[-1] = conn.closure @ values[-1]
    _check_drift(values, "Дрейф унитарности факторизованного переноса")
    eigenvalues, phases = _spectrum(values[-1])
    return TransportResult(
        eigenvalue=conn.eigenvalue,
        gauge=conn.gauge,
        grid=conn.grid,
        u=values,
        eigenvalues=eigenvalues,
        phases=phases,
        label=f"{conn.gauge.value}-factorized",
        dynamical_factor=dynamical[-1],
        geometric_factor=conn.closure @ geometric[-1],
    )


def matching_distance(first: Sequence[float], second: Sequence[float]) -> float:
    """Максимум кругового расстояния при оптимальном сопоставлении двух мультимножеств фаз."""
    if len(first) != len(second):
        raise InputValidationError(
            f"Мультимножества фаз разного размера: {len(first)} и {len(second)}"
        )
    if not first:
        return 0.0
    cost = np.array([[circular_distance(a, b) for b in second] for a in first])
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].max())


def holonomy_invariants(results: Sequence[TransportResult]) -> HolonomyReport:
    """Собственные фазы u(T) по калибровкам и попарные расстояния между ними."""
    if not results:
        raise InputValidationError("Нужен хотя бы один результат переноса")
    phases = {r.label or r.gauge.value: list(r.phases) for r in results}
    distances = {
        f"{a}|{b}": matching_distance(phases[a], phases[b]) for a, b in combinations(phases, 2)
    }
    report = HolonomyReport(
        eigenvalue=results[0].eigenvalue,
        phases=phases,
        pairwise_distance=distances,
        max_distance=max(distances.values(), default=0.0),
    )
    logger.info(
        "Инварианты голономии λ=%.6g: max расхождение между калибровками %.3e",
        report.eigenvalue,
        report.max_distance,
    )
    return report


# ---------------------------------------------------------------------------
# Согласованность
# ---------------------------------------------------------------------------

def frame_reconstruction_check(
    frame: FrameTrace,
    transport: TransportResult,
    trace: PropagatorTrace,
) -> float:
    """max_k ‖U(t_k)·frame(0) − frame(t_k)·u(t_k)‖_F."""
    if transport.u.shape[0] != trace.U.shape[0] or frame.frames.shape[0] != trace.U.shape[0]:
        raise DimensionMismatchError(transport.u.shape, trace.U.shape)
    evolved = trace.U @ frame.initial
    transported = np.einsum("kia,kab->kib", frame.frames, transport.u)
    return float(np.max(np.linalg.norm(evolved - transported, axis=(1, 2))))


def abelian_consistency(transport: TransportResult, delta: float, gamma: float) -> float:
    """|arg u(T) − (δ + γ)| по модулю 2π для одномерного подпространства."""
    if transport.multiplicity != 1:
        raise InputValidationError(
            f"Абелева проверка применима только при l = 1, получено l = {transport.multiplicity}"
        )
    return circular_distance(float(np.angle(transport.holonomy[0, 0])), delta + gamma)


def determinant_check(transport: TransportResult, delta0: npt.ArrayLike, period: float) -> float:
    """|arg det u(T) + T·tr Δ| по модулю 2π (для постоянной Δ)."""
    trace_delta = float(np.real(np.trace(np.asarray(delta0, dtype=np.complex128))))
    det = complex(np.linalg.det(transport.holonomy))
    return circular_distance(float(np.angle(det)), -period * trace_delta)


def closed_form_holonomy_residual(conn: ConnectionTrace, transport: TransportResult) -> float:
    """‖u(T) − W·e^{−iTΔ(t_0)}‖_F — осмысленно, когда Δ(t) постоянна."""
    expected = conn.closure @ unitary_exp(conn.Delta[0], -conn.grid.period)
    return float(np.linalg.norm(transport.holonomy - expected))


def commuting_family_residual(conn: ConnectionTrace) -> float:
    """max_k ‖[E(t_k), A(t_k)]‖_F в совпадающие моменты."""
    return max(commutator_norm(e, a) for e, a in zip(conn.E, conn.A, strict=True))
