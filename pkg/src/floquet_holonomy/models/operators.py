"""Базовые матричные типы: плотные комплексные операторы и спектральные разложения."""

from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

ComplexMatrix = npt.NDArray[np.complex128]
"""Плотная квадратная комплексная матрица dim×dim."""

HermitianOperator = ComplexMatrix
"""Эрмитов оператор: ‖A − A†‖_F ≤ 1e-12·max(1, ‖A‖_F)."""

UnitaryOperator = ComplexMatrix
"""Унитарный оператор: ‖U†U − 1‖_F ≤ 1e-10·dim."""

HERMITIAN_RTOL = 1e-12
UNITARY_TOL_PER_DIM = 1e-10


@dataclass(frozen=True)
class SpectralCluster:
    """Кластер собственных значений λ_n кратности l_n с ортонормированным блоком векторов."""

    value: float
    multiplicity: int
    vectors: ComplexMatrix  # dim×l_n, ортонормированные столбцы
    raw_values: npt.NDArray[np.float64]  # исходные собственные значения до усреднения

    @property
    def projector(self) -> ComplexMatrix:
        """Собственный проектор Λ_n = block·block†."""
        return self.vectors @ self.vectors.conj().T


@dataclass(frozen=True)
class SpectralDecomposition:
    """Спектральное разложение эрмитова оператора с кластеризацией вырождений.

    Кластеры упорядочены по убыванию λ_n.
    """

    clusters: tuple[SpectralCluster, ...]
    cluster_tol: float

    @property
    def dim(self) -> int:
        return int(sum(c.multiplicity for c in self.clusters))

    @property
    def values(self) -> list[float]:
        return [c.value for c in self.clusters]

    @property
    def multiplicities(self) -> list[int]:
        return [c.multiplicity for c in self.clusters]

    def projector(self, index: int) -> ComplexMatrix:
        return self.clusters[index].projector

    def find_cluster(self, value: float, tol: float | None = None) -> int | None:
        """Индекс кластера со значением ближе ``tol`` к ``value`` или ``None``."""
        bound = self.cluster_tol if tol is None else tol
        best: int | None = None
        best_gap = np.inf
        for index, cluster in enumerate(self.clusters):
            gap = abs(cluster.value - value)
            if gap <= bound and gap < best_gap:
                best, best_gap = index, gap
        return best

    def reconstruct(self) -> ComplexMatrix:
        """Σ_n λ_n·Λ_n."""
        result = np.zeros((self.dim, self.dim), dtype=np.complex128)
        for cluster in self.clusters:
            result += cluster.value * cluster.projector
        return result
