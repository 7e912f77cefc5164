"""Тесты спиновых генераторов и гамильтонианов поля."""

import math

import numpy as np
import pytest
from pydantic import ValidationError

from floquet_holonomy.exceptions import (
    InputValidationError,
    LevelCrossingError,
    NotHermitianError,
    PeriodicityError,
)
from floquet_holonomy.services.spin_model_service import (
    check_periodicity,
    constant_hamiltonian,
    field_hamiltonian,
    field_spectrum,
    fourier_path,
    precessing_model,
    spin_generators,
    tabulated_path,
)

from conftest import make_precessing_params


@pytest.mark.parametrize("j", [0.5, 1.0, 1.5, 3.0])
def test_spin_generators_satisfy_algebra(j: float) -> None:
    gens = spin_generators(j)
    j1, j2, j3 = gens.as_tuple()
    dim = gens.dim

    assert dim == int(round(2 * j)) + 1
    assert np.allclose(j1 @ j2 - j2 @ j1, 1j * j3, atol=1e-12)
    assert np.allclose(j2 @ j3 - j3 @ j2, 1j * j1, atol=1e-12)
    assert np.allclose(j3 @ j1 - j1 @ j3, 1j * j2, atol=1e-12)
    casimir = j1 @ j1 + j2 @ j2 + j3 @ j3
    assert np.allclose(casimir, j * (j + 1) * np.eye(dim), atol=1e-12)
    assert np.allclose(np.diag(j3).real, j - np.arange(dim))


def test_spin_generators_are_read_only() -> None:
    gens = spin_generators(1.0)

    with pytest.raises(ValueError):
        gens.J1[0, 0] = 1.0


@pytest.mark.parametrize("j", [0.0, 0.7, -1.0])
def test_spin_generators_reject_invalid_spin(j: float) -> None:
    with pytest.raises(InputValidationError):
        spin_generators(j)


def test_field_hamiltonian_spectrum_matches_field_norm() -> None:
    """Спектр H(t) = b·R⃗(t)·J⃗ равен b|R|k, k = −j..j."""
    period = 2 * math.pi
    path = fourier_path(period, (0.3, 0.0, 0.5), cos_terms=[(0.0, 0.2, 0.0)])
    hamiltonian = field_hamiltonian(1.5, path, spin_generators(1.0), period)

    t = 0.9
    norm = math.hypot(*path(t))
    spectrum = sorted(np.linalg.eigvalsh(hamiltonian.at(t)))

    assert spectrum == pytest.approx(sorted(field_spectrum(1.5, norm, 1.0)), abs=1e-12)


def test_field_hamiltonian_rejects_zero_field() -> None:
    """R⃗(t) = (0, 0, cos t) обращается в ноль при t = π/2."""
    period = 2 * math.pi
    path = fourier_path(period, (0.0, 0.0, 0.0), cos_terms=[(0.0, 0.0, 1.0)])

    with pytest.raises(LevelCrossingError) as exc_info:
        field_hamiltonian(1.0, path, spin_generators(1.0), period)

    assert exc_info.value.exit_code == 4


def test_field_hamiltonian_rejects_non_periodic_path() -> None:
    with pytest.raises(PeriodicityError):
        field_hamiltonian(1.0, lambda t: (1.0, 0.0, t), spin_generators(1.0), 2 * math.pi)


def test_tabulated_path_interpolates_and_validates(caplog) -> None:
    caplog.set_level("WARNING")
    path = tabulated_path([0.0, 1.0, 2.0], [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 0.0, 0.0]])

    assert path(0.5) == pytest.approx((0.5, 0.5, 0.0))
    assert "линейная интерполяция" in caplog.text
    with pytest.raises(InputValidationError):
        tabulated_path([0.0, 0.0], [[1.0, 0.0, 0.0], [1.0, 0.0, 0.0]])


def test_constant_hamiltonian_validates_and_is_periodic() -> None:
    hamiltonian = constant_hamiltonian(np.diag([1.0, -1.0]), 3.0)

    assert check_periodicity(hamiltonian) == 0.0
    with pytest.raises(NotHermitianError):
        constant_hamiltonian(np.array([[0.0, 1.0], [0.0, 0.0]]), 3.0)


def test_precessing_model_matches_floquet_pair() -> None:
    """H(t) = i·(dU/dt)·U† для U = e^{iΩtJ1}e^{iωtJ3}."""
    params = make_precessing_params()
    hamiltonian, z_analytic, m_analytic = precessing_model(params)
    gens = spin_generators(1.0)

    t, h = 1.3, 1e-5

    def u(s: float) -> np.ndarray:
        values, vectors = np.linalg.eigh(m_analytic)
        return z_analytic(s) @ (vectors * np.exp(1j * s * values)) @ vectors.conj().T

    derivative = (u(t + h) - u(t - h)) / (2 * h)
    recovered = 1j * derivative @ u(t).conj().T

    assert np.allclose(recovered, hamiltonian.at(t), atol=1e-8)
    assert np.allclose(m_analytic, 0.4 * gens.J3)
    assert np.allclose(z_analytic(params.period), np.eye(3), atol=1e-12)


def test_precessing_params_reject_non_finite_frequency() -> None:
    with pytest.raises(ValidationError):
        make_precessing_params(omega=math.inf)
    with pytest.raises(ValidationError):
        make_precessing_params(Omega=0.0)
