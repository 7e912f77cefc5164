"""Тесты матричного ядра: спектральное разложение, экспонента, логарифм, полярный множитель."""

import math

import numpy as np
import pytest

from floquet_holonomy.exceptions import (
    BranchBoundaryError,
    DimensionMismatchError,
    InputValidationError,
    NotHermitianError,
    NotUnitaryError,
    SingularMatrixError,
)
from floquet_holonomy.services.spin_model_service import spin_generators
from floquet_holonomy.utils.matrix_core import (
    commutator_norm,
    herm_eig,
    polar_unitary,
    unitary_exp,
    unitary_log,
)
from floquet_holonomy.utils.phase_math import circular_distance, wrap_phase


def test_herm_eig_clusters_degenerate_eigenvalues() -> None:
    """diag(1, 1, −1): два кластера, кратности 2 и 1, по убыванию λ."""
    decomposition = herm_eig(np.diag([1.0, -1.0, 1.0]))

    assert decomposition.values == pytest.approx([1.0, -1.0])
    assert decomposition.multiplicities == [2, 1]
    projector = decomposition.projector(0)
    assert np.allclose(projector, np.diag([1.0, 0.0, 1.0]), atol=1e-12)


def test_herm_eig_groups_values_within_tolerance() -> None:
    """Значения, отличающиеся меньше допуска, попадают в один кластер."""
    decomposition = herm_eig(np.diag([2.0, 2.0 + 1e-12, 0.5]))

    assert decomposition.multiplicities == [2, 1]
    assert decomposition.clusters[0].value == pytest.approx(2.0, abs=1e-11)


def test_herm_eig_reconstructs_operator_with_fixed_phases() -> None:
    rng = np.random.default_rng(7)
    z = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    a = z + z.conj().T

    decomposition = herm_eig(a)

    assert np.allclose(decomposition.reconstruct(), a, atol=1e-10)
    for cluster in decomposition.clusters:
        column = cluster.vectors[:, 0]
        pivot = column[int(np.argmax(np.abs(column)))]
        assert abs(pivot.imag) < 1e-12
        assert pivot.real > 0


def test_herm_eig_rejects_non_hermitian() -> None:
    with pytest.raises(NotHermitianError):
        herm_eig(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_as_matrix_rejects_non_square() -> None:
    with pytest.raises(InputValidationError):
        herm_eig(np.zeros((2, 3)))


def test_find_cluster_uses_tolerance() -> None:
    decomposition = herm_eig(np.diag([0.4, 0.0, -0.4]))

    assert decomposition.find_cluster(0.4 + 1e-10, 1e-8) == 0
    assert decomposition.find_cluster(0.2, 1e-8) is None


def test_unitary_log_inverts_unitary_exp() -> None:
    """log(e^{iK}) = K, если собственные фазы K внутри (−π, π)."""
    k = np.array([[0.3, 0.2 - 0.1j], [0.2 + 0.1j, -1.1]])

    recovered = unitary_log(unitary_exp(k))

    assert np.allclose(recovered, k, atol=1e-12)


def test_unitary_exp_exact_on_degenerate_spectrum() -> None:
    u = unitary_exp(np.eye(3), math.pi / 2)

    assert np.allclose(u, 1j * np.eye(3), atol=1e-14)


def test_unitary_log_rejects_branch_boundary() -> None:
    """Собственная фаза ровно π: ветвь логарифма не определена."""
    with pytest.raises(BranchBoundaryError) as exc_info:
        unitary_log(np.diag([-1.0, 1.0]).astype(np.complex128))

    assert exc_info.value.exit_code == 3
    assert abs(abs(exc_info.value.eigenphase) - math.pi) < 1e-6


def test_unitary_log_rejects_non_unitary() -> None:
    with pytest.raises(NotUnitaryError):
        unitary_log(np.diag([1.0, 2.0]))


def test_polar_unitary_is_closest_unitary() -> None:
    a = np.array([[2.0, 0.0], [0.0, 0.5]], dtype=np.complex128) @ unitary_exp(
        np.array([[0.0, 1.0], [1.0, 0.0]]), 0.7
    )

    w = polar_unitary(a)

    assert np.allclose(w.conj().T @ w, np.eye(2), atol=1e-12)
    assert np.allclose(w, unitary_exp(np.array([[0.0, 1.0], [1.0, 0.0]]), 0.7), atol=1e-12)


def test_polar_unitary_rejects_singular_input() -> None:
    with pytest.raises(SingularMatrixError):
        polar_unitary(np.array([[1.0, 1.0], [1.0, 1.0]]))


def test_commutator_norm_checks_shapes() -> None:
    assert commutator_norm(np.eye(2), np.diag([1.0, 2.0])) == 0.0
    with pytest.raises(DimensionMismatchError):
        commutator_norm(np.eye(2), np.eye(3))


def test_wrap_phase_maps_into_half_open_interval() -> None:
    assert wrap_phase(math.pi) == pytest.approx(math.pi)
    assert wrap_phase(-math.pi) == pytest.approx(math.pi)
    assert wrap_phase(3 * math.pi / 2) == pytest.approx(-math.pi / 2)
    assert circular_distance(0.1, 2 * math.pi - 0.1) == pytest.approx(0.2)


def _random_hermitian(dim: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return (a + a.conj().T) / 2


def test_unitary_exp_group_law() -> None:
    h = _random_hermitian(4, seed=7)

    product = unitary_exp(h, 0.3) @ unitary_exp(h, -1.1)

    assert np.allclose(product, unitary_exp(h, -0.8), atol=1e-12)
    assert np.allclose(unitary_exp(h, 0.0), np.eye(4), atol=1e-14)


def test_unitary_exp_of_integer_spin_rotation_by_two_pi() -> None:
    j1 = spin_generators(1.0).J1

    assert np.allclose(unitary_exp(j1, 2 * math.pi), np.eye(3), atol=1e-12)
    assert np.allclose(unitary_exp(spin_generators(0.5).J1, 2 * math.pi), -np.eye(2), atol=1e-12)


def test_polar_unitary_is_idempotent_on_unitaries() -> None:
    u = unitary_exp(_random_hermitian(3, seed=11))

    assert np.allclose(polar_unitary(u), u, atol=1e-12)
    assert np.allclose(polar_unitary(polar_unitary(u)), u, atol=1e-12)


def test_herm_eig_projectors_resolve_identity() -> None:
    """Λ_n² = Λ_n, Λ_nΛ_m = 0 при n ≠ m, ΣΛ_n = 1 для вырожденного спектра."""
    basis = unitary_exp(_random_hermitian(4, seed=3))
    a = basis @ np.diag([2.0, 2.0, -0.5, 1.0]) @ basis.conj().T

    decomposition = herm_eig(a)
    projectors = [cluster.projector for cluster in decomposition.clusters]

    assert decomposition.multiplicities == [2, 1, 1]
    for n, p in enumerate(projectors):
        assert np.allclose(p @ p, p, atol=1e-12)
        for m, q in enumerate(projectors):
            if m != n:
                assert np.allclose(p @ q, 0.0, atol=1e-12)
    assert np.allclose(sum(projectors), np.eye(4), atol=1e-12)


def test_herm_eig_of_zero_matrix_is_single_cluster() -> None:
    decomposition = herm_eig(np.zeros((2, 2)))

    assert len(decomposition.clusters) == 1
    assert decomposition.clusters[0].value == 0.0
    assert decomposition.clusters[0].multiplicity == 2


def test_herm_eig_of_j3_is_nondegenerate() -> None:
    decomposition = herm_eig(spin_generators(1.0).J3)

    assert decomposition.values == pytest.approx([1.0, 0.0, -1.0])
    assert decomposition.multiplicities == [1, 1, 1]
