"""Общая логика прогона сценария для команды run.

Цепочка: модель → пропагатор → Флоке → инвариант → реперы → связности →
перенос → голономия → фазы циклических состояний.
"""

import asyncio
import logging
import time
from collections.abc import Awaitable, Callable
from dataclasses import dataclass, field
from functools import partial
from typing import TypeVar

import numpy as np
import numpy.typing as npt

from floquet_holonomy import __version__
from floquet_holonomy.config import Settings
from floquet_holonomy.exceptions import ToleranceCheckFailed
from floquet_holonomy.models.invariants import FrameGauge, FrameTrace, InvariantTrace
from floquet_holonomy.models.phases import ConnectionTrace, TransportResult
from floquet_holonomy.models.propagation import FloquetDecomposition, PropagatorTrace, TimeGrid
from floquet_holonomy.models.scenario import (
    FloquetSummary,
    ScenarioConfig,
    ScenarioReport,
    SubspaceReport,
)
from floquet_holonomy.models.spin import PeriodicHamiltonian
from floquet_holonomy.services import invariant_service, phase_service, propagator_service
from floquet_holonomy.services.scenario_service import (
    FRAME_MATCH_TOL,
    ModelBundle,
    build_initial_frame,
    build_invariant_spec,
    build_model,
    resolve_frame_target,
)
from floquet_holonomy.utils.phase_math import wrap_phase
from floquet_holonomy.utils.serialization import checksum, encode_matrix

logger = logging.getLogger(__name__)

T = TypeVar("T")

CONVENTIONS = {
    "floquet": "U(t) = Z(t)·exp(iMt), μ ∈ (−π/T, π/T]",
    "phase_zone": "(−π, π]",
    "transport": "i·du/dt = Δ(t)·u, u(T) = exp(i(δ+γ)) при l = 1",
    "complex": "[re, im]",
    "norm": "Frobenius",
}


@dataclass
class SubspaceRun:
    """Артефакты одного подпространства в одной калибровке."""

    frame: FrameTrace
    connection: ConnectionTrace
    transport: TransportResult
    factorized: TransportResult | None
    frame_reconstruction: float


@dataclass
class ScenarioRun:
    """Полный результат прогона: отчёт и трассы для CSV."""

    report: ScenarioReport
    grid: TimeGrid
    traces: dict[str, npt.NDArray[np.complex128]] = field(default_factory=dict)


async def _bounded(semaphore: asyncio.Semaphore, func: Callable[[], T]) -> T:
    async with semaphore:
        return await asyncio.to_thread(func)


async def _timed(
    timings: dict[str, float],
    stage: str,
    coro: Awaitable[T],
) -> T:
    started = time.perf_counter()
    result = await coro
    timings[stage] = time.perf_counter() - started
    return result


async def run_scenario(config: ScenarioConfig, settings: Settings) -> ScenarioRun:
    """Прогнать сценарий целиком и собрать отчёт.

    Исключения пакета (ветвь логарифма, пересечение уровней, валидация)
    пробрасываются вызывающему; невязки сверх допусков попадают в
    ``report.failed_checks``.
    """
    timings: dict[str, float] = {}
    semaphore = asyncio.Semaphore(settings.effective_threads)
    tolerances = config.tolerances
    checks: dict[str, float] = {}
    bounds: dict[str, float] = {}

    def record(name: str, value: float, bound: float) -> None:
        checks[name] = float(value)
        bounds[name] = float(bound)

    started = time.perf_counter()
    bundle: ModelBundle = await _timed(timings, "model", asyncio.to_thread(build_model, config))
    hamiltonian = bundle.hamiltonian
    grid = TimeGrid(hamiltonian.period, config.grid.steps)

    trace = await _timed(
        timings,
        "propagate",
        asyncio.to_thread(propagator_service.propagate, hamiltonian, grid, config.grid.method),
    )
    fd = await _timed(
        timings,
        "floquet",
        asyncio.to_thread(
            partial(
                propagator_service.floquet_decompose,
                trace,
                cluster_tol_rel=settings.cluster_tol_rel,
                resonance_tol=settings.resonance_tol,
            )
        ),
    )
    if bundle.analytic_propagator is not None:
        record(
            "propagator_oracle",
            propagator_service.max_deviation(trace.U, bundle.analytic_propagator, grid),
            tolerances.propagator_oracle,
        )
    eye = np.eye(fd.dim)
    record(
        "floquet_reconstruction",
        propagator_service.floquet_reconstruction_residual(fd),
        tolerances.floquet_reconstruction,
    )
    record(
        "z_periodicity",
        max(float(np.linalg.norm(fd.Z[0] - eye)), float(np.linalg.norm(fd.Z[-1] - eye))),
        tolerances.z_periodicity,
    )

    inv = await _timed(
        timings, "invariant", asyncio.to_thread(_build_invariant, config, fd, settings)
    )
    commutator = invariant_service.commutation_check(inv.I[0], fd.M)
    record("commutation", commutator, tolerances.commutation)
    record("periodicity", invariant_service.invariant_periodicity(inv), tolerances.periodicity)
    record(
        "spectrum_constancy",
        invariant_service.spectrum_constancy(inv),
        tolerances.spectrum_constancy,
    )
    record(
        "ode_residual",
        invariant_service.check_invariant_ode(inv, hamiltonian),
        tolerances.ode_residual,
    )
    condition = invariant_service.nonabelian_condition(inv.spectrum, fd)

    gauges = list(config.gauges)
    if FrameGauge.FLOQUET in gauges and commutator > tolerances.commutation:
        logger.warning(
            "‖[I(0), M]‖ = %.3e > %.1e: калибровка floquet пропущена",
            commutator,
            tolerances.commutation,
        )
        gauges.remove(FrameGauge.FLOQUET)
        if not gauges:
            gauges = [FrameGauge.ALIGNED]

    frames = await _timed(
        timings,
        "frames",
        _transport_all_frames(config, inv, fd, gauges, tolerances.commutation, semaphore),
    )
    lewis_frames = [frames[(cluster.value, gauges[0])] for cluster in inv.spectrum.clusters]
    record(
        "lewis",
        invariant_service.check_lewis_relation(lewis_frames, hamiltonian),
        tolerances.lewis,
    )

    subspaces = await _timed(
        timings,
        "phases",
        _run_subspaces(frames, hamiltonian, trace, config, semaphore),
    )

    holonomy_reports = []
    for cluster in inv.spectrum.clusters:
        results = [subspaces[(cluster.value, gauge)].transport for gauge in gauges]
        holonomy_reports.append(phase_service.holonomy_invariants(results))
    cross_gauge = max((r.max_distance for r in holonomy_reports), default=0.0)
    if len(gauges) > 1:
        record("cross_gauge", cross_gauge, tolerances.cross_gauge)
    record(
        "frame_reconstruction",
        max(run.frame_reconstruction for run in subspaces.values()),
        tolerances.frame_reconstruction,
    )

    states = await _timed(
        timings,
        "states",
        asyncio.to_thread(phase_service.cyclic_state_phases, fd, hamiltonian),
    )
    record("closure", max(s.closure for s in states), tolerances.closure)

    failed = sorted(name for name, value in checks.items() if not value <= bounds[name])
    for name in failed:
        logger.error(
            "Проверка %s не пройдена: %.3e > %.3e",
            name,
            checks[name],
            bounds[name],
        )

    report = ScenarioReport(
        config=config.model_dump(mode="json"),
        floquet=FloquetSummary(
            mu=fd.eigenphases,
            multiplicity=fd.multiplicities,
            alpha=[wrap_phase(mu * fd.period) for mu in fd.eigenphases],
            warnings=list(fd.degeneracy_warnings),
        ),
        checks=checks,
        bounds=bounds,
        failed_checks=failed,
        nonabelian_condition=condition,
        states=states,
        subspaces=[_subspace_report(run) for run in subspaces.values()],
        holonomy=holonomy_reports,
        cross_gauge_distance=cross_gauge,
        version=__version__,
        conventions=dict(CONVENTIONS),
    )
    report.checksum = report_checksum(report)
    timings["total"] = time.perf_counter() - started
    report.timings = timings

    logger.info(
        "Сценарий %s: %d проверок, не пройдено %d, %.2f с",
        config.name,
        len(checks),
        len(failed),
        timings["total"],
    )
    traces = _collect_traces(trace.U, fd, inv, subspaces)
    return ScenarioRun(report=report, grid=grid, traces=traces)


def report_checksum(report: ScenarioReport) -> str:
    """SHA-256 отчёта без полей timings и checksum."""
    payload = report.payload()
    payload.pop("timings", None)
    payload.pop("checksum", None)
    return checksum(payload)


def raise_on_failure(report: ScenarioReport) -> None:
    """ToleranceCheckFailed для первой непройденной проверки."""
    if not report.failed_checks:
        return
    name = report.failed_checks[0]
    raise ToleranceCheckFailed(
        f"Проверка {name} не пройдена",
        residual=report.checks[name],
        bound=report.bounds[name],
    )


def _build_invariant(
    config: ScenarioConfig,
    fd: FloquetDecomposition,
    settings: Settings,
) -> InvariantTrace:
    spec = build_invariant_spec(config.invariant, fd.dim)
    if spec is None:
        return invariant_service.invariant_from_floquet(
            fd, cluster_tol_rel=settings.cluster_tol_rel
        )
    return invariant_service.invariant_from_initial(
        spec, fd.trace, cluster_tol_rel=settings.cluster_tol_rel
    )


async def _transport_all_frames(
    config: ScenarioConfig,
    inv: InvariantTrace,
    fd: FloquetDecomposition,
    gauges: list[FrameGauge],
    commute_tol: float,
    semaphore: asyncio.Semaphore,
) -> dict[tuple[float, FrameGauge], FrameTrace]:
    """Перенести реперы всех собственных значений во всех калибровках параллельно."""
    target = resolve_frame_target(config.frame, inv.spectrum)
    initial = build_initial_frame(config.frame, inv.dim) if config.frame is not None else None

    keys: list[tuple[float, FrameGauge]] = []
    jobs: list[Awaitable[FrameTrace]] = []
    for cluster in inv.spectrum.clusters:
        matches = target is not None and abs(cluster.value - target) <= FRAME_MATCH_TOL
        use_initial = initial if matches else None
        for gauge in gauges:
            keys.append((cluster.value, gauge))
            jobs.append(
                _bounded(
                    semaphore,
                    partial(
                        invariant_service.transport_eigenframes,
                        inv,
                        cluster.value,
                        gauge,
                        fd,
                        initial_frame=use_initial,
                        commute_tol=commute_tol,
                    ),
                )
            )
    results = await asyncio.gather(*jobs)
    return dict(zip(keys, results, strict=True))


def _phase_job(
    frame: FrameTrace,
    hamiltonian: PeriodicHamiltonian,
    trace: PropagatorTrace,
    config: ScenarioConfig,
) -> SubspaceRun:
    connection = phase_service.connection_matrices(frame, hamiltonian)
    transport = phase_service.transport_unitary(connection, config.grid.method)
    factorized = phase_service.factorized_transport(
        connection, config.tolerances.factorize_commute, config.grid.method
    )
    return SubspaceRun(
        frame=frame,
        connection=connection,
        transport=transport,
        factorized=factorized,
        frame_reconstruction=phase_service.frame_reconstruction_check(frame, transport, trace),
    )


async def _run_subspaces(
    frames: dict[tuple[float, FrameGauge], FrameTrace],
    hamiltonian: PeriodicHamiltonian,
    trace: PropagatorTrace,
    config: ScenarioConfig,
    semaphore: asyncio.Semaphore,
) -> dict[tuple[float, FrameGauge], SubspaceRun]:
    keys = list(frames)
    jobs = [
        _bounded(semaphore, partial(_phase_job, frames[key], hamiltonian, trace, config))
        for key in keys
    ]
    results = await asyncio.gather(*jobs)
    return dict(zip(keys, results, strict=True))


def _subspace_report(run: SubspaceRun) -> SubspaceReport:
    conn = run.connection
    factorized_distance = None
    if run.factorized is not None:
        factorized_distance = float(
            np.linalg.norm(run.factorized.holonomy - run.transport.holonomy)
        )
    return SubspaceReport(
        eigenvalue=conn.eigenvalue,
        gauge=conn.gauge.value,
        multiplicity=conn.multiplicity,
        E0=encode_matrix(conn.E[0]),
        A0=encode_matrix(conn.A[0]),
        Delta0=encode_matrix(conn.Delta[0]),
        closure=encode_matrix(conn.closure),
        uT=encode_matrix(run.transport.holonomy),
        holonomy_phases=list(run.transport.phases),
        connection_deviation=phase_service.constant_connection_deviation(conn),
        connection_asymmetry=conn.asymmetry,
        frame_reconstruction=run.frame_reconstruction,
        determinant_residual=phase_service.determinant_check(
            run.transport, conn.Delta[0], conn.grid.period
        ),
        factorized=run.factorized is not None,
        factorized_distance=factorized_distance,
    )


def _collect_traces(
    propagator: npt.NDArray[np.complex128],
    fd: FloquetDecomposition,
    inv: InvariantTrace,
    subspaces: dict[tuple[float, FrameGauge], SubspaceRun],
) -> dict[str, npt.NDArray[np.complex128]]:
    traces: dict[str, npt.NDArray[np.complex128]] = {"U": propagator, "Z": fd.Z, "I": inv.I}
    for (value, gauge), run in subspaces.items():
        suffix = f"lambda{value:+.6g}_{gauge.value}"
        traces[f"frame_{suffix}"] = run.frame.frames
        traces[f"u_{suffix}"] = run.transport.u
    return traces
