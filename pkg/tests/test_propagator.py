"""Тесты пропагатора и разложения Флоке на модели прецессирующего поля."""

import math

import numpy as np
import pytest

from floquet_holonomy.exceptions import BranchBoundaryError, InputValidationError
from floquet_holonomy.models.propagation import IntegrationMethod, TimeGrid
from floquet_holonomy.services import propagator_service
from floquet_holonomy.services.spin_model_service import (
    constant_hamiltonian,
    precessing_model,
    spin_generators,
)
from floquet_holonomy.utils.matrix_core import unitary_exp

from conftest import BIG_OMEGA, OMEGA, make_precessing_params, make_precessing_pipeline


def test_propagator_matches_analytic_oracle(precessing_pipeline) -> None:
    _, analytic_u, trace, _ = precessing_pipeline

    deviation = propagator_service.max_deviation(trace.U, analytic_u, trace.grid)

    assert deviation <= 1e-8
    assert np.array_equal(trace.U[0], np.eye(3))


def test_propagator_steps_compose_to_trace(precessing_pipeline) -> None:
    _, _, trace, _ = precessing_pipeline

    for k in (0, 17, trace.grid.steps - 1):
        assert np.allclose(trace.steps[k] @ trace.U[k], trace.U[k + 1], atol=1e-13)


def test_constant_hamiltonian_propagator_is_exact() -> None:
    """Для постоянного H схема Магнуса точна: U(t) = e^{−iHt}."""
    h = np.array([[0.5, 0.1j], [-0.1j, -0.2]])
    hamiltonian = constant_hamiltonian(h, 2.0)
    grid = TimeGrid(2.0, 16)

    trace = propagator_service.propagate(hamiltonian, grid, IntegrationMethod.MAGNUS2)

    assert np.allclose(trace.monodromy, unitary_exp(h, -2.0), atol=1e-13)


@pytest.mark.parametrize("method", [IntegrationMethod.MAGNUS2, IntegrationMethod.MAGNUS4])
def test_convergence_order_matches_method(method: IntegrationMethod) -> None:
    steps = (64, 128, 256, 512)
    errors = []
    for n in steps:
        _, analytic_u, trace, _ = make_precessing_pipeline(n, method)
        errors.append(propagator_service.max_deviation(trace.U, analytic_u, trace.grid))

    slope = propagator_service.convergence_order(steps, errors)

    assert abs(slope - method.order) <= 0.3


def test_propagate_rejects_period_mismatch_and_coarse_grid() -> None:
    params = make_precessing_params()
    hamiltonian, _, _ = precessing_model(params)

    with pytest.raises(InputValidationError):
        propagator_service.propagate(hamiltonian, TimeGrid(1.0, 64))
    with pytest.raises(InputValidationError):
        propagator_service.propagate(hamiltonian, TimeGrid(params.period, 4))


def test_floquet_decompose_recovers_precessing_pair(precessing_pipeline) -> None:
    _, _, _, fd = precessing_pipeline

    assert fd.eigenphases == pytest.approx([OMEGA, 0.0, -OMEGA], abs=1e-8)
    assert fd.multiplicities == [1, 1, 1]
    assert np.allclose(fd.Z[0], np.eye(3), atol=1e-8)
    assert np.allclose(fd.Z[-1], np.eye(3), atol=1e-8)
    assert propagator_service.floquet_reconstruction_residual(fd) <= 1e-8
    assert not fd.degeneracy_warnings


def test_cyclic_states_carry_total_phase(precessing_pipeline) -> None:
    _, _, trace, fd = precessing_pipeline

    states = propagator_service.cyclic_states(fd)

    assert [s.mu for s in states] == pytest.approx([OMEGA, 0.0, -OMEGA], abs=1e-8)
    plus = states[0]
    assert plus.alpha == pytest.approx(OMEGA * 2 * math.pi, abs=1e-7)
    assert plus.alpha_wrapped == pytest.approx(0.8 * math.pi, abs=1e-7)
    # ⟨+|U(T)|+⟩ даёт ту же фазу, что и μ₊T
    direct = np.vdot(plus.vector, trace.monodromy @ plus.vector)
    assert abs(np.angle(direct) - plus.alpha_wrapped) <= 1e-8


def test_floquet_decompose_rejects_resonant_period() -> None:
    """ω = Ω/2: ωT = π, собственная фаза U(T) на границе ветви."""
    params = make_precessing_params(omega=0.5)
    hamiltonian, _, _ = precessing_model(params)
    trace = propagator_service.propagate(hamiltonian, TimeGrid(params.period, 256))

    with pytest.raises(BranchBoundaryError):
        propagator_service.floquet_decompose(trace)


def test_half_integer_spin_gives_negative_monodromy_of_z() -> None:
    """При полуцелом j Z(T) = e^{2πiJ1} = −1 и входит в M."""
    _, _, _, fd = make_precessing_pipeline(256, j=0.5, omega=0.3)

    # e^{iMT} = −e^{iωTJ3}: фазы сдвинуты на π
    expected = sorted([math.pi + 0.3 * math.pi, math.pi - 0.3 * math.pi])
    wrapped = sorted(
        float(np.angle(np.exp(1j * mu * fd.period))) % (2 * math.pi) for mu in fd.eigenphases
    )
    assert wrapped == pytest.approx(expected, abs=1e-7)


def test_export_trace_csv_writes_row_per_node(tmp_path, precessing_pipeline) -> None:
    _, _, trace, _ = precessing_pipeline

    path = propagator_service.export_trace_csv(tmp_path / "u.csv", trace.grid, trace.U)

    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0].startswith("k,t,re_00,im_00,re_01")
    assert len(lines) == trace.grid.steps + 2
    assert lines[1].split(",")[:3] == ["0", "0.0", "1.0"]


# ---------------------------------------------------------------------------
# Упорядоченная экспонента
# ---------------------------------------------------------------------------

def test_time_ordered_exp_of_zero_generator_is_identity() -> None:
    values = propagator_service.time_ordered_exp(
        lambda t: np.zeros((3, 3), dtype=np.complex128), TimeGrid(2.0, 32)
    )

    assert values.shape == (33, 3, 3)
    assert np.allclose(values, np.eye(3), atol=1e-14)


@pytest.mark.parametrize("method", [IntegrationMethod.MAGNUS2, IntegrationMethod.MAGNUS4])
def test_time_ordered_exp_of_constant_generator(method: IntegrationMethod) -> None:
    """Постоянный Δ: V(T) = e^{−iTΔ} при любом N."""
    delta = np.array([[0.3, 0.2 - 0.1j], [0.2 + 0.1j, -0.7]])

    values = propagator_service.time_ordered_exp(lambda t: delta, TimeGrid(3.0, 16), method)

    assert np.allclose(values[-1], unitary_exp(delta, -3.0), atol=1e-13)
    assert np.allclose(values[8], unitary_exp(delta, -1.5), atol=1e-13)


def test_time_ordered_exp_of_commuting_family_closes_over_period() -> None:
    """F(t) = sin(Ωt)·J1: ∫₀ᵀF = 0, семейство коммутирует, V(T) = 1."""
    j1 = spin_generators(1.0).J1
    period = 2 * math.pi / BIG_OMEGA

    values = propagator_service.time_ordered_exp(
        lambda t: math.sin(BIG_OMEGA * t) * j1, TimeGrid(period, 64)
    )

    assert np.allclose(values[-1], np.eye(3), atol=1e-10)
    quarter = unitary_exp(j1, -(1 - math.cos(BIG_OMEGA * period / 4)) / BIG_OMEGA)
    assert np.allclose(values[16], quarter, atol=1e-6)
