"""Тесты абелевых фаз, матриц связности и неабелевой голономии."""

import math

import numpy as np
import pytest

from floquet_holonomy.exceptions import GridTooCoarseError, InputValidationError
from floquet_holonomy.models.invariants import FrameGauge
from floquet_holonomy.models.phases import ConnectionTrace
from floquet_holonomy.models.propagation import TimeGrid
from floquet_holonomy.services import invariant_service, phase_service
from floquet_holonomy.services.acceptance_service import connection_oracle, projector_holonomy
from floquet_holonomy.utils.phase_math import circular_distance

from conftest import BIG_OMEGA, HALF, OMEGA, make_frame, make_lewis_spec

OMEGA_T = OMEGA * 2 * math.pi


@pytest.fixture(scope="module")
def mixed_connection(precessing_pipeline):
    hamiltonian, _, trace, fd = precessing_pipeline
    frame = make_frame(trace, fd)
    return frame, phase_service.connection_matrices(frame, hamiltonian)


# ---------------------------------------------------------------------------
# Абелевы фазы
# ---------------------------------------------------------------------------

def test_dynamical_phase_of_top_state(precessing_pipeline) -> None:
    """δ(|+⟩) = ωT: ⟨+|Z†HZ|+⟩ = −ω."""
    hamiltonian, _, trace, _ = precessing_pipeline
    states = phase_service.evolve_state(trace, [1.0, 0.0, 0.0])

    delta = phase_service.dynamical_phase(states, hamiltonian, trace.grid)

    assert delta == pytest.approx(OMEGA_T, abs=1e-8)


def test_dynamical_phase_requires_even_grid(precessing_pipeline) -> None:
    hamiltonian, _, _, _ = precessing_pipeline
    period = hamiltonian.period
    grid = TimeGrid(period, 9)
    states = np.tile(np.array([1.0, 0.0, 0.0], dtype=np.complex128), (10, 1))

    with pytest.raises(InputValidationError):
        phase_service.dynamical_phase(states, hamiltonian, grid)


def test_pancharatnam_sum_of_great_circle() -> None:
    """Цепочка (1, e^{iφ})/√2 по замкнутому циклу φ: 0 → 2π набирает −π по модулю 2π."""
    phi = np.linspace(0.0, 2 * math.pi, 65)
    chain = np.stack([np.full_like(phi, HALF), HALF * np.exp(1j * phi)], axis=1)
    chain[-1] = chain[0]

    gamma = phase_service.geometric_phase(chain)

    assert circular_distance(gamma, math.pi) <= 1e-2


def test_geometric_phase_of_precessing_superposition() -> None:
    """e^{iΩtJ3}(cosθ|+⟩ + sinθ|0⟩) за период набирает γ = −2π·cos²θ."""
    theta = 0.3
    t = np.linspace(0.0, 2 * math.pi / BIG_OMEGA, 1025)
    chain = np.zeros((t.size, 3), dtype=np.complex128)
    chain[:, 0] = math.cos(theta) * np.exp(1j * BIG_OMEGA * t)
    chain[:, 1] = math.sin(theta)
    chain[-1] = chain[0]

    gamma = phase_service.geometric_phase(chain)
    raw = phase_service.pancharatnam_sum(chain)

    expected = -2 * math.pi * math.cos(theta) ** 2
    assert circular_distance(gamma, expected) <= 1e-4
    assert raw == pytest.approx(expected, abs=1e-4)


def test_pancharatnam_rejects_open_chain_and_coarse_grid() -> None:
    open_chain = np.array([[1.0, 0.0], [0.0, 1.0]], dtype=np.complex128)
    with pytest.raises(InputValidationError):
        phase_service.pancharatnam_sum(open_chain)

    coarse = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 0.0]], dtype=np.complex128)
    with pytest.raises(GridTooCoarseError):
        phase_service.pancharatnam_sum(coarse)


def test_cyclic_state_phases_close(precessing_pipeline) -> None:
    hamiltonian, _, _, fd = precessing_pipeline

    phases = phase_service.cyclic_state_phases(fd, hamiltonian)

    assert len(phases) == 3
    for state in phases:
        assert abs(state.gamma) <= 1e-6
        assert state.closure <= 1e-6
    assert phases[0].delta == pytest.approx(0.8 * math.pi, abs=1e-6)


# ---------------------------------------------------------------------------
# Связности
# ---------------------------------------------------------------------------

def test_connection_matrices_match_closed_form(mixed_connection) -> None:
    _, conn = mixed_connection
    e_expected, a_expected, delta_expected = connection_oracle(HALF, HALF)

    assert np.max(np.abs(conn.E - e_expected)) <= 1e-6
    assert np.max(np.abs(conn.A - a_expected)) <= 1e-6
    assert np.max(np.abs(conn.Delta - delta_expected)) <= 1e-6
    assert phase_service.constant_connection_deviation(conn) <= 1e-6


def test_connection_matrices_for_diagonal_frame(precessing_pipeline) -> None:
    """ξ = 1, ζ = 0: A = (Ω/√2)·σx, Δ = −ω·diag(1, 0)."""
    hamiltonian, _, trace, fd = precessing_pipeline
    frame = make_frame(trace, fd, xi=1.0, zeta=0.0)

    conn = phase_service.connection_matrices(frame, hamiltonian)

    sigma_x = np.array([[0.0, 1.0], [1.0, 0.0]])
    assert np.allclose(conn.A[0], sigma_x / math.sqrt(2), atol=1e-6)
    assert np.allclose(conn.Delta[0], -OMEGA * np.diag([1.0, 0.0]), atol=1e-6)


def test_second_order_stencil_is_coarser(precessing_pipeline) -> None:
    hamiltonian, _, trace, fd = precessing_pipeline
    frame = make_frame(trace, fd)
    a_expected = connection_oracle(HALF, HALF)[1]

    second = phase_service.connection_matrices(frame, hamiltonian, stencil_order=2)
    fourth = phase_service.connection_matrices(frame, hamiltonian, stencil_order=4)

    error_second = np.max(np.abs(second.A - a_expected))
    error_fourth = np.max(np.abs(fourth.A - a_expected))
    assert error_fourth < error_second
    with pytest.raises(InputValidationError):
        phase_service.connection_matrices(frame, hamiltonian, stencil_order=3)


# ---------------------------------------------------------------------------
# Перенос и голономия
# ---------------------------------------------------------------------------

def test_transport_reproduces_projector_holonomy(mixed_connection) -> None:
    _, conn = mixed_connection

    result = phase_service.transport_unitary(conn)

    assert np.linalg.norm(result.holonomy - projector_holonomy(OMEGA_T)) <= 1e-6
    assert phase_service.matching_distance(result.phases, [OMEGA_T, 0.0]) <= 1e-6
    assert phase_service.closed_form_holonomy_residual(conn, result) <= 1e-6
    assert phase_service.determinant_check(result, conn.Delta[0], conn.grid.period) <= 1e-6


def test_frame_reconstruction_in_both_gauges(precessing_pipeline) -> None:
    hamiltonian, _, trace, fd = precessing_pipeline
    for gauge in (FrameGauge.FLOQUET, FrameGauge.ALIGNED):
        frame = make_frame(trace, fd, gauge=gauge)
        result = phase_service.transport_unitary(
            phase_service.connection_matrices(frame, hamiltonian)
        )

        assert phase_service.frame_reconstruction_check(frame, result, trace) <= 1e-6


def test_holonomy_phases_are_gauge_invariant(precessing_pipeline) -> None:
    hamiltonian, _, trace, fd = precessing_pipeline
    floquet = make_frame(trace, fd, gauge=FrameGauge.FLOQUET)
    aligned = make_frame(trace, fd, gauge=FrameGauge.ALIGNED)
    rotation = np.array([[math.cos(0.3), -math.sin(0.3)], [math.sin(0.3), math.cos(0.3)]]) @ (
        np.diag([1.0, np.exp(0.7j)])
    )
    rotated = invariant_service.rotate_frame(floquet, rotation)

    results = [
        phase_service.transport_unitary(
            phase_service.connection_matrices(frame, hamiltonian), label=label
        )
        for frame, label in ((floquet, "floquet"), (aligned, "aligned"), (rotated, "rotated"))
    ]
    report = phase_service.holonomy_invariants(results)

    assert set(report.phases) == {"floquet", "aligned", "rotated"}
    assert report.max_distance <= 1e-7
    expected = rotation.conj().T @ results[0].holonomy @ rotation
    assert np.linalg.norm(results[2].holonomy - expected) <= 1e-7


def test_abelian_consistency_for_one_dimensional_subspace(precessing_pipeline) -> None:
    """λ = −1 (|−⟩): arg u(T) = δ + γ = −ωT."""
    hamiltonian, _, trace, fd = precessing_pipeline
    inv = invariant_service.invariant_from_initial(make_lewis_spec(), trace)
    frame = invariant_service.transport_eigenframes(inv, -1.0, FrameGauge.FLOQUET, fd)
    conn = phase_service.connection_matrices(frame, hamiltonian)

    result = phase_service.transport_unitary(conn)
    flipped = phase_service.transport_unitary(conn, generator_sign=-1.0)

    assert phase_service.abelian_consistency(result, -OMEGA_T, 0.0) <= 1e-6
    assert phase_service.abelian_consistency(flipped, -OMEGA_T, 0.0) > 1.0


def test_abelian_consistency_rejects_degenerate_subspace(mixed_connection) -> None:
    _, conn = mixed_connection
    result = phase_service.transport_unitary(conn)

    with pytest.raises(InputValidationError):
        phase_service.abelian_consistency(result, 0.0, 0.0)


def test_factorized_transport_for_commuting_family() -> None:
    """E = f(t)·X, A = g(t)·X: 𝒯e^{−i∫E}·𝒯e^{i∫A} совпадает с прямым переносом."""
    grid = TimeGrid(2 * math.pi, 128)
    t = grid.nodes
    x = np.array([[0.3, 0.2 - 0.1j], [0.2 + 0.1j, -0.5]])
    e_trace = (1.0 + 0.5 * np.cos(t))[:, None, None] * x
    a_trace = (0.2 + 0.3 * np.sin(t))[:, None, None] * x
    conn = ConnectionTrace(
        eigenvalue=0.0,
        gauge=FrameGauge.FLOQUET,
        grid=grid,
        E=e_trace,
        A=a_trace,
        Delta=e_trace - a_trace,
        closure=np.eye(2, dtype=np.complex128),
        asymmetry=0.0,
        stencil_order=4,
    )

    direct = phase_service.transport_unitary(conn)
    factorized = phase_service.factorized_transport(conn)

    assert factorized is not None
    assert np.linalg.norm(factorized.holonomy - direct.holonomy) <= 1e-8
    assert np.allclose(
        factorized.dynamical_factor @ factorized.geometric_factor, factorized.holonomy
    )
    assert phase_service.commuting_family_residual(conn) <= 1e-14


def test_factorized_transport_not_applicable_for_precessing_frame(precessing_pipeline) -> None:
    hamiltonian, _, trace, fd = precessing_pipeline
    frame = make_frame(trace, fd, xi=1.0, zeta=0.0)
    conn = phase_service.connection_matrices(frame, hamiltonian)

    assert phase_service.factorized_transport(conn) is None


def test_matching_distance_pairs_wrapped_phases() -> None:
    assert phase_service.matching_distance([math.pi - 1e-9, 0.1], [0.1, -math.pi + 1e-9]) <= 3e-9
    with pytest.raises(InputValidationError):
        phase_service.matching_distance([0.0], [0.0, 1.0])
