"""Ядро плотной комплексной линейной алгебры.

Эрмитово собственное разложение с кластеризацией вырождений — основа для
экспоненты и логарифма унитарных операторов: для нормальных матриц это точно
и не требует scaling-and-squaring с его проблемами выбора ветви.
"""

import logging

import numpy as np
import numpy.typing as npt
from scipy import linalg as sla

from floquet_holonomy.exceptions import (
    BranchBoundaryError,
    DimensionMismatchError,
    InputValidationError,
    NotHermitianError,
    NotUnitaryError,
    NumericalToleranceError,
    SingularMatrixError,
)
from floquet_holonomy.models.operators import (
    HERMITIAN_RTOL,
    UNITARY_TOL_PER_DIM,
    ComplexMatrix,
    HermitianOperator,
    SpectralCluster,
    SpectralDecomposition,
    UnitaryOperator,
)

logger = logging.getLogger(__name__)

DEFAULT_CLUSTER_TOL_REL = 1e-8
DEFAULT_RESONANCE_TOL = 1e-6


# ---------------------------------------------------------------------------
# Валидация
# ---------------------------------------------------------------------------

def as_matrix(a: npt.ArrayLike) -> ComplexMatrix:
    """Привести вход к квадратной комплексной матрице с конечными элементами."""
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise InputValidationError(f"Ожидалась квадратная матрица, получена форма {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InputValidationError("Матрица содержит нечисловые элементы (nan/inf)")
    return m


def hermitian_asymmetry(a: ComplexMatrix) -> float:
    """‖A − A†‖_F."""
    return float(np.linalg.norm(a - a.conj().T))


def unitarity_defect(u: ComplexMatrix) -> float:
    """‖U†U − 1‖_F."""
    return float(np.linalg.norm(u.conj().T @ u - np.eye(u.shape[0])))


def hermitize(a: ComplexMatrix) -> ComplexMatrix:
    """Эрмитова часть (A + A†)/2."""
    return (a + a.conj().T) / 2


def is_hermitian(a: ComplexMatrix, rtol: float = HERMITIAN_RTOL) -> bool:
    return hermitian_asymmetry(a) <= rtol * max(1.0, float(np.linalg.norm(a)))


def require_hermitian(a: npt.ArrayLike) -> HermitianOperator:
    """Проверить эрмитовость и вернуть точно эрмитову матрицу."""
    m = as_matrix(a)
    bound = HERMITIAN_RTOL * max(1.0, float(np.linalg.norm(m)))
    asymmetry = hermitian_asymmetry(m)
    if asymmetry > bound:
        raise NotHermitianError(asymmetry, bound)
    return hermitize(m)


def require_unitary(u: npt.ArrayLike) -> UnitaryOperator:
    m = as_matrix(u)
    bound = UNITARY_TOL_PER_DIM * m.shape[0]
    defect = unitarity_defect(m)
    if defect > bound:
        raise NotUnitaryError(defect, bound)
    return m


def default_cluster_tol(a: ComplexMatrix, rel: float = DEFAULT_CLUSTER_TOL_REL) -> float:
    """Относительный допуск: спектры масштабированных операторов кластеризуются одинаково."""
    return rel * max(1.0, float(np.linalg.norm(a)))


# ---------------------------------------------------------------------------
# Собственное разложение
# ---------------------------------------------------------------------------

def _fix_column_phases(vectors: ComplexMatrix) -> ComplexMatrix:
    """Сделать наибольший по модулю элемент каждого столбца вещественным положительным."""
    fixed = vectors.copy()
    for col in range(fixed.shape[1]):
        pivot = fixed[int(np.argmax(np.abs(fixed[:, col]))), col]
        if abs(pivot) > 0:
            fixed[:, col] *= np.conj(pivot) / abs(pivot)
    return fixed


def herm_eig(a: npt.ArrayLike, cluster_tol: float | None = None) -> SpectralDecomposition:
    """Спектральное разложение эрмитова оператора с кластеризацией вырождений.

    Кластеры — по убыванию λ_n; внутри кластера столбцы упорядочены по
    убыванию исходного собственного значения, фаза каждого столбца
    фиксирована детерминированно.
    """
    m = require_hermitian(a)
    tol = default_cluster_tol(m) if cluster_tol is None else cluster_tol
    if tol <= 0:
        raise InputValidationError(f"cluster_tol должен быть > 0, получено {tol}")

    values, vectors = np.linalg.eigh(m)
    order = np.argsort(values)[::-1]
    values = values[order]
    vectors = _fix_column_phases(vectors[:, order])

    groups: list[list[int]] = [[0]]
    for idx in range(1, len(values)):
        if values[groups[-1][-1]] - values[idx] > tol:
            groups.append([idx])
        else:
            groups[-1].append(idx)

    clusters: list[SpectralCluster] = []
    for group in groups:
        raw = values[group]
        spread = float(raw.max() - raw.min())
        if spread > tol:
            # Цепочка близких значений шире допуска: кластеризация неоднозначна
            raise NumericalToleranceError(
                "Неоднозначная кластеризация спектра", residual=spread, bound=tol
            )
        clusters.append(
            SpectralCluster(
                value=float(raw.mean()),
                multiplicity=len(group),
                vectors=vectors[:, group],
                raw_values=raw.astype(np.float64),
            )
        )

    return SpectralDecomposition(clusters=tuple(clusters), cluster_tol=tol)


# ---------------------------------------------------------------------------
# Функции от операторов
# ---------------------------------------------------------------------------

def unitary_exp(a: npt.ArrayLike, s: float = 1.0) -> UnitaryOperator:
    """e^{i·s·A} для эрмитова A через собственное разложение.

    Кластеризация здесь не нужна: экспонента строится по исходным
    собственным значениям, так что результат точен и для вырожденного спектра.
    """
    m = require_hermitian(a)
    values, vectors = np.linalg.eigh(m)
    result: UnitaryOperator = (vectors * np.exp(1j * s * values)) @ vectors.conj().T
    return result


def unitary_log(
    u: npt.ArrayLike,
    resonance_tol: float = DEFAULT_RESONANCE_TOL,
) -> HermitianOperator:
    """Главный логарифм: эрмитов K с U = e^{iK}, собственные фазы в (−π, π].

    Фаза ближе ``resonance_tol`` к ±π означает резонансный период, при котором
    ветвь не определена — в этом случае BranchBoundaryError, а не выбор ветви.
    """
    m = require_unitary(u)
    # Комплексная форма Шура нормальной матрицы диагональна с точностью до округления
    triangular, basis = sla.schur(m, output="complex")
    phases = np.angle(np.diag(triangular))
    worst = int(np.argmax(np.abs(phases)))
    if np.pi - abs(phases[worst]) < resonance_tol:
        raise BranchBoundaryError(float(phases[worst]), resonance_tol)
    k = (basis * phases) @ basis.conj().T
    return hermitize(k)


def polar_unitary(a: npt.ArrayLike) -> UnitaryOperator:
    """Унитарный множитель полярного разложения — ближайшая по Фробениусу унитарная матрица."""
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InputValidationError(f"Ожидалась квадратная матрица, получена форма {m.shape}")
    left, singular, right = sla.svd(m)
    if singular.min() <= 1e-14 * max(1.0, float(singular.max())):
        raise SingularMatrixError(float(singular.min()))
    result: UnitaryOperator = left @ right
    return result


def commutator_norm(a: npt.ArrayLike, b: npt.ArrayLike) -> float:
    """‖AB − BA‖_F."""
    left = np.asarray(a, dtype=np.complex128)
    right = np.asarray(b, dtype=np.complex128)
    if left.shape != right.shape:
        raise DimensionMismatchError(left.shape, right.shape)
    return float(np.linalg.norm(left @ right - right @ left))
