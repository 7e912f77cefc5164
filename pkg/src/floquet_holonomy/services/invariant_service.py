"""Периодические динамические инварианты и однозначные собственные реперы.

Инвариант всегда строится сопряжением I(t) = U(t)·I(0)·U†(t) либо
I(t) = Z(t)·M·Z†(t). Уравнение dI/dt = i[I, H] и соотношение Льюиса
проверяются разностными невязками второго порядка.

Реперы подпространства ℋ_λ(t) переносятся в одной из двух калибровок:
- floquet: frame(t) = Z(t)·frame(0), требует [I(0), M] = 0;
- aligned: на каждом шаге новый собственный базис I(t_{k+1}) поворачивается
  унитарным множителем полярного разложения перекрытия с предыдущим репером.
В обеих калибровках последний узел принудительно равен frame(0), а
замыкающая унитарная W запоминается в FrameTrace.closure.
"""

import logging
from collections.abc import Sequence

import numpy as np
import numpy.typing as npt

from floquet_holonomy.exceptions import (
    DimensionMismatchError,
    InputValidationError,
    LevelCrossingError,
)
from floquet_holonomy.models.invariants import (
    ORTHONORMAL_TOL,
    FrameGauge,
    FrameTrace,
    InvariantSpec,
    InvariantTrace,
    NonAbelianConditionReport,
    ProjectorCondition,
)
from floquet_holonomy.models.operators import (
    ComplexMatrix,
    HermitianOperator,
    SpectralDecomposition,
)
from floquet_holonomy.models.propagation import FloquetDecomposition, PropagatorTrace
from floquet_holonomy.models.spin import PeriodicHamiltonian
from floquet_holonomy.utils.matrix_core import (
    DEFAULT_CLUSTER_TOL_REL,
    commutator_norm,
    default_cluster_tol,
    herm_eig,
    hermitize,
    polar_unitary,
    require_hermitian,
    unitarity_defect,
    unitary_exp,
)

logger = logging.getLogger(__name__)

MIN_ODE_STEPS = 4
EIGENSPACE_TOL = 1e-8
CONDITION_TOL_PER_DIM = 1e-8


# ---------------------------------------------------------------------------
# Построение инварианта
# ---------------------------------------------------------------------------

def invariant_from_initial(
    spec: InvariantSpec,
    trace: PropagatorTrace,
    *,
    cluster_tol_rel: float = DEFAULT_CLUSTER_TOL_REL,
) -> InvariantTrace:
    """I(t_k) = U(t_k)·I(0)·U†(t_k); в t_0 возвращается сам I(0)."""
    initial = require_hermitian(spec.operator())
    if initial.shape[0] != trace.dim:
        raise DimensionMismatchError(initial.shape, trace.U.shape[1:])

    values = np.empty_like(trace.U)
    for k, u in enumerate(trace.U):
        values[k] = hermitize(u @ initial @ u.conj().T)
    values[0] = initial

    spectrum = herm_eig(initial, cluster_tol=default_cluster_tol(initial, cluster_tol_rel))
    logger.info(
        "Инвариант из I(0): λ = %s, кратности = %s",
        ", ".join(f"{v:.6g}" for v in spectrum.values),
        spectrum.multiplicities,
    )
    return InvariantTrace(grid=trace.grid, I=values, spectrum=spectrum)


def invariant_from_floquet(
    fd: FloquetDecomposition,
    *,
    cluster_tol_rel: float = DEFAULT_CLUSTER_TOL_REL,
) -> InvariantTrace:
    """I(t_k) = Z(t_k)·M·Z†(t_k); узлы 0 и N равны M точно."""
    values = np.empty_like(fd.Z)
    for k, z in enumerate(fd.Z):
        values[k] = hermitize(z @ fd.M @ z.conj().T)
    values[0] = fd.M
    values[-1] = fd.M
    spectrum = herm_eig(fd.M, cluster_tol=default_cluster_tol(fd.M, cluster_tol_rel))
    return InvariantTrace(grid=fd.trace.grid, I=values, spectrum=spectrum)


# ---------------------------------------------------------------------------
# Проверки инварианта
# ---------------------------------------------------------------------------

def _require_matching_period(inv: InvariantTrace, hamiltonian: PeriodicHamiltonian) -> None:
    if not np.isclose(inv.grid.period, hamiltonian.period, rtol=1e-12, atol=0.0):
        raise InputValidationError(
            f"Период сетки {inv.grid.period} не совпадает с периодом гамильтониана "
            f"{hamiltonian.period}"
        )
    if inv.dim != hamiltonian.dim:
        raise DimensionMismatchError((inv.dim, inv.dim), (hamiltonian.dim, hamiltonian.dim))


def check_invariant_ode(inv: InvariantTrace, hamiltonian: PeriodicHamiltonian) -> float:
    """max по внутренним узлам ‖(I_{k+1} − I_{k−1})/(2h) − i[I_k, H(t_k)]‖_F."""
    _require_matching_period(inv, hamiltonian)
    if inv.grid.steps < MIN_ODE_STEPS:
        raise InputValidationError(
            f"Для разностной проверки нужно N ≥ {MIN_ODE_STEPS}, получено {inv.grid.steps}"
        )
    h = inv.grid.step
    nodes = inv.grid.nodes
    residual = 0.0
    for k in range(1, inv.grid.steps):
        derivative = (inv.I[k + 1] - inv.I[k - 1]) / (2 * h)
        hk = hamiltonian.at(float(nodes[k]))
        rhs = 1j * (inv.I[k] @ hk - hk @ inv.I[k])
        residual = max(residual, float(np.linalg.norm(derivative - rhs)))
    logger.debug("Невязка dI/dt = i[I,H] при N=%d: %.3e", inv.grid.steps, residual)
    return residual


def invariant_periodicity(inv: InvariantTrace) -> float:
    """‖I(t_N) − I(t_0)‖_F."""
    return float(np.linalg.norm(inv.I[-1] - inv.I[0]))


def spectrum_constancy(inv: InvariantTrace) -> float:
    """max_k max_i |λ_i(t_k) − λ_i(0)| по упорядоченным спектрам."""
    reference = np.linalg.eigvalsh(inv.I[0])
    return max(
        float(np.max(np.abs(np.linalg.eigvalsh(hermitize(i_k)) - reference))) for i_k in inv.I
    )


def floquet_conjugation_residual(inv: InvariantTrace, fd: FloquetDecomposition) -> float:
    """max_k ‖I(t_k) − Z(t_k)·I(0)·Z†(t_k)‖_F."""
    if inv.I.shape != fd.Z.shape:
        raise DimensionMismatchError(inv.I.shape, fd.Z.shape)
    initial = inv.I[0]
    return max(
        float(np.linalg.norm(i_k - z @ initial @ z.conj().T))
        for i_k, z in zip(inv.I, fd.Z, strict=True)
    )


def commutation_check(initial: npt.ArrayLike, m_op: npt.ArrayLike) -> float:
    """‖[I(0), M]‖_F; сравнение с допуском — на стороне вызывающего."""
    return commutator_norm(initial, m_op)


def floquet_commutation_check(initial: npt.ArrayLike, fd: FloquetDecomposition) -> float:
    """‖[e^{iMT}, I(0)]‖_F — слабее, чем [M, I(0)] = 0, и сообщается отдельно."""
    return commutator_norm(unitary_exp(fd.M, fd.period), initial)


# ---------------------------------------------------------------------------
# Реперы
# ---------------------------------------------------------------------------

def _validate_initial_frame(frame: ComplexMatrix, projector: ComplexMatrix) -> None:
    gram = frame.conj().T @ frame
    defect = float(np.linalg.norm(gram - np.eye(frame.shape[1])))
    if defect > ORTHONORMAL_TOL:
        raise InputValidationError(f"Столбцы начального репера не ортонормированы: {defect:.3e}")
    leak = float(np.linalg.norm(projector @ frame - frame))
    if leak > EIGENSPACE_TOL:
        raise InputValidationError(
            f"Начальный репер не лежит в собственном подпространстве: ‖ΛF − F‖ = {leak:.3e}"
        )


def _locate_cluster(spectrum: SpectralDecomposition, value: float, scale: float) -> int:
    tol = max(spectrum.cluster_tol, EIGENSPACE_TOL * max(1.0, scale))
    index = spectrum.find_cluster(value, tol)
    if index is None:
        raise LevelCrossingError(
            f"Собственное значение λ = {value:.10g} не найдено в спектре "
            f"{[round(v, 10) for v in spectrum.values]}"
        )
    return index


def transport_eigenframes(
    inv: InvariantTrace,
    eigenvalue: float,
    gauge: FrameGauge | str = FrameGauge.FLOQUET,
    fd: FloquetDecomposition | None = None,
    *,
    initial_frame: npt.ArrayLike | None = None,
    commute_tol: float | None = None,
) -> FrameTrace:
    """Перенести однозначный репер ℋ_λ вдоль сетки в заданной калибровке.

    Без ``initial_frame`` берётся блок собственных векторов I(0) из
    спектрального разложения.
    """
    gauge = FrameGauge(gauge)
    initial_op = inv.I[0]
    scale = float(np.linalg.norm(initial_op))
    index = _locate_cluster(inv.spectrum, eigenvalue, scale)
    cluster = inv.spectrum.clusters[index]

    if initial_frame is None:
        frame0: ComplexMatrix = cluster.vectors.copy()
    else:
        frame0 = np.asarray(initial_frame, dtype=np.complex128).reshape(inv.dim, -1)
        if frame0.shape[1] != cluster.multiplicity:
            raise InputValidationError(
                f"Репер из {frame0.shape[1]} векторов, а кратность λ = {cluster.value:.6g} "
                f"равна {cluster.multiplicity}"
            )
    _validate_initial_frame(frame0, cluster.projector)

    if gauge is FrameGauge.FLOQUET:
        frames, closure = _floquet_frames(inv, frame0, fd, commute_tol)
    else:
        frames, closure = _aligned_frames(inv, frame0, cluster.value, scale)

    logger.info(
        "Репер λ=%.6g (l=%d) перенесён в калибровке %s: ‖W − 1‖_F = %.3e",
        cluster.value,
        cluster.multiplicity,
        gauge.value,
        float(np.linalg.norm(closure - np.eye(cluster.multiplicity))),
    )
    return FrameTrace(
        eigenvalue=cluster.value,
        gauge=gauge,
        grid=inv.grid,
        frames=frames,
        closure=closure,
    )


def _floquet_frames(
    inv: InvariantTrace,
    frame0: ComplexMatrix,
    fd: FloquetDecomposition | None,
    commute_tol: float | None,
) -> tuple[npt.NDArray[np.complex128], ComplexMatrix]:
    if fd is None:
        raise InputValidationError("Калибровка floquet требует разложения Флоке")
    if fd.Z.shape[0] != inv.grid.steps + 1:
        raise DimensionMismatchError(fd.Z.shape, inv.I.shape)
    tol = CONDITION_TOL_PER_DIM * inv.dim if commute_tol is None else commute_tol
    residual = commutation_check(inv.I[0], fd.M)
    if residual > tol:
        raise InputValidationError(
            f"Калибровка floquet требует [I(0), M] = 0: ‖[I(0), M]‖_F = {residual:.3e} > {tol:.3e}"
        )
    frames = np.einsum("kij,jl->kil", fd.Z, frame0)
    closure = polar_unitary(frame0.conj().T @ frames[-1])
    frames[-1] = frame0
    return frames, closure


def _aligned_frames(
    inv: InvariantTrace,
    frame0: ComplexMatrix,
    eigenvalue: float,
    scale: float,
) -> tuple[npt.NDArray[np.complex128], ComplexMatrix]:
    expected = inv.spectrum.multiplicities
    steps = inv.grid.steps
    frames = np.empty((steps + 1, inv.dim, frame0.shape[1]), dtype=np.complex128)
    frames[0] = frame0
    for k in range(steps):
        spectrum = herm_eig(inv.I[k + 1], cluster_tol=inv.spectrum.cluster_tol)
        if spectrum.multiplicities != expected:
            raise LevelCrossingError(
                f"Кратности спектра I(t) изменились в узле {k + 1}: "
                f"{spectrum.multiplicities} вместо {expected}"
            )
        block = spectrum.clusters[_locate_cluster(spectrum, eigenvalue, scale)].vectors
        frames[k + 1] = block @ polar_unitary(block.conj().T @ frames[k])
    closure = polar_unitary(frame0.conj().T @ frames[-1])
    frames[-1] = frame0
    return frames, closure


def rotate_frame(frame: FrameTrace, w: npt.ArrayLike) -> FrameTrace:
    """Правый унитарный поворот frame(t) → frame(t)·w; замыкание W → w†·W·w."""
    rotation = np.asarray(w, dtype=np.complex128)
    if rotation.shape != (frame.multiplicity, frame.multiplicity):
        raise DimensionMismatchError(rotation.shape, (frame.multiplicity, frame.multiplicity))
    defect = unitarity_defect(rotation)
    if defect > ORTHONORMAL_TOL * frame.multiplicity:
        raise InputValidationError(f"Поворот репера не унитарен: {defect:.3e}")
    return FrameTrace(
        eigenvalue=frame.eigenvalue,
        gauge=frame.gauge,
        grid=frame.grid,
        frames=frame.frames @ rotation,
        closure=rotation.conj().T @ frame.closure @ rotation,
    )


def gauge_relation_defect(first: FrameTrace, second: FrameTrace) -> float:
    """max_k ‖G_k†G_k − 1‖_F для перекрытия G_k = first(t_k)†·second(t_k)."""
    if first.frames.shape != second.frames.shape:
        raise DimensionMismatchError(first.frames.shape, second.frames.shape)
    return max(
        unitarity_defect(a.conj().T @ b)
        for a, b in zip(first.frames, second.frames, strict=True)
    )


def precessing_frame(xi: complex, zeta: complex, dim: int = 3) -> ComplexMatrix:
    """Начальный репер {ξ|+⟩ + ζ|0⟩, ζ*|+⟩ − ξ*|0⟩} в базисе собственных векторов J3.

    |+⟩ и |0⟩ — два первых базисных вектора (m = j и m = j − 1).
    """
    norm = abs(xi) ** 2 + abs(zeta) ** 2
    if abs(norm - 1.0) > ORTHONORMAL_TOL:
        raise InputValidationError(f"|ξ|² + |ζ|² = {norm:.12f}, требуется 1")
    if dim < 2:
        raise InputValidationError(f"Для двумерного репера нужна размерность ≥ 2, получено {dim}")
    frame = np.zeros((dim, 2), dtype=np.complex128)
    frame[0, 0], frame[1, 0] = xi, zeta
    frame[0, 1], frame[1, 1] = np.conj(zeta), -np.conj(xi)
    return frame


# ---------------------------------------------------------------------------
# Соотношение Льюиса и условие неабелевости
# ---------------------------------------------------------------------------

def check_lewis_relation(
    frames: Sequence[FrameTrace],
    hamiltonian: PeriodicHamiltonian,
) -> float:
    """max ‖F_m†·(H − i·dΛ_n/dt)·F_n‖_F по парам m ≠ n и внутренним узлам.

    Перекрёстный член ⟨λ_m|d/dt|λ_n⟩ при m ≠ n равен F_m†·(dΛ_n/dt)·F_n,
    поэтому производная берётся от проекторов: они гладкие и периодичны
    в любой калибровке, включая aligned со скачком замыкания.
    """
    if not frames:
        raise InputValidationError("Набор реперов пуст")
    grid = frames[0].grid
    dim = int(frames[0].frames.shape[1])
    if any(f.grid != grid for f in frames):
        raise InputValidationError("Реперы заданы на разных сетках")
    if sum(f.multiplicity for f in frames) != dim:
        raise InputValidationError(
            f"Набор реперов неполон: Σ l_n = {sum(f.multiplicity for f in frames)}, dim = {dim}"
        )
    values = sorted(f.eigenvalue for f in frames)
    if any(b - a <= EIGENSPACE_TOL for a, b in zip(values, values[1:])):
        raise InputValidationError("Набор реперов содержит повторяющиеся собственные значения")
    if not np.isclose(grid.period, hamiltonian.period, rtol=1e-12, atol=0.0):
        raise InputValidationError("Период сетки реперов не совпадает с периодом гамильтониана")
    if len(frames) == 1:
        return 0.0
    if grid.steps < MIN_ODE_STEPS:
        raise InputValidationError(f"Нужно N ≥ {MIN_ODE_STEPS}, получено {grid.steps}")

    projectors = [np.einsum("kia,kja->kij", f.frames, f.frames.conj()) for f in frames]
    h = grid.step
    nodes = grid.nodes
    residual = 0.0
    for k in range(1, grid.steps):
        hk = hamiltonian.at(float(nodes[k]))
        for n, frame_n in enumerate(frames):
            derivative = (projectors[n][k + 1] - projectors[n][k - 1]) / (2 * h)
            column = (hk - 1j * derivative) @ frame_n.frames[k]
            for m, frame_m in enumerate(frames):
                if m == n:
                    continue
                cross = frame_m.frames[k].conj().T @ column
                residual = max(residual, float(np.linalg.norm(cross)))
    logger.debug("Невязка соотношения Льюиса при N=%d: %.3e", grid.steps, residual)
    return residual


def nonabelian_condition(
    initial_spectrum: SpectralDecomposition,
    fd: FloquetDecomposition,
    tol: float | None = None,
) -> NonAbelianConditionReport:
    """Необходимое условие неабелевой фазы для I(0) и M.

    Условие выполнено, если [I(0), M] = 0 и хотя бы один вырожденный
    проектор Λ инварианта не является собственным проектором M.
    """
    if initial_spectrum.dim != fd.dim:
        raise DimensionMismatchError(
            (initial_spectrum.dim, initial_spectrum.dim), (fd.dim, fd.dim)
        )
    bound = CONDITION_TOL_PER_DIM * fd.dim if tol is None else tol
    initial: HermitianOperator = initial_spectrum.reconstruct()
    commutator = commutation_check(initial, fd.M)
    monodromy_commutator = floquet_commutation_check(initial, fd)
    commutes = commutator <= bound

    eye = np.eye(fd.dim, dtype=np.complex128)
    projectors: list[ProjectorCondition] = []
    for cluster in initial_spectrum.clusters:
        if cluster.multiplicity < 2:
            continue
        lam = cluster.projector
        invariance = float(np.linalg.norm(fd.M @ lam - lam @ fd.M @ lam))
        distances = [float(np.linalg.norm((fd.M - mu * eye) @ lam)) for mu in fd.eigenphases]
        best = int(np.argmin(distances))
        projectors.append(
            ProjectorCondition(
                eigenvalue=cluster.value,
                multiplicity=cluster.multiplicity,
                is_M_eigenprojector=distances[best] <= bound,
                invariance_residual=invariance,
                eigenprojector_residual=distances[best],
                closest_mu=fd.eigenphases[best],
            )
        )

    satisfied = commutes and any(not p.is_M_eigenprojector for p in projectors)
    logger.info(
        "Условие неабелевости: ‖[I(0),M]‖=%.3e, ‖[e^{iMT},I(0)]‖=%.3e, выполнено=%s",
        commutator,
        monodromy_commutator,
        satisfied,
    )
    return NonAbelianConditionReport(
        commutes_with_M=commutes,
        commutator_residual=commutator,
        monodromy_commutator_residual=monodromy_commutator,
        tolerance=bound,
        projectors=projectors,
        satisfied=satisfied,
    )
