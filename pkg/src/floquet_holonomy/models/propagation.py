"""Модели эволюции: сетка по времени, трасса пропагатора, разложение Флоке."""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import numpy.typing as npt

from floquet_holonomy.models.operators import (
    ComplexMatrix,
    HermitianOperator,
    SpectralDecomposition,
)


class IntegrationMethod(str, Enum):
    """Схемы Магнуса для упорядоченной по времени экспоненты."""

    MAGNUS2 = "magnus2"
    MAGNUS4 = "magnus4"

    @property
    def order(self) -> int:
        return 2 if self is IntegrationMethod.MAGNUS2 else 4

    @classmethod
    def from_order(cls, order: int) -> "IntegrationMethod":
        if order == 2:
            return cls.MAGNUS2
        if order == 4:
            return cls.MAGNUS4
        raise ValueError(f"Поддерживаются порядки 2 и 4, получено {order}")


@dataclass(frozen=True)
class TimeGrid:
    """Равномерная сетка t_k = kT/N, k = 0..N."""

    period: float
    steps: int

    def __post_init__(self) -> None:
        if not self.period > 0:
            raise ValueError(f"Период должен быть > 0, получено {self.period}")
        if self.steps < 1:
            raise ValueError(f"Число шагов должно быть ≥ 1, получено {self.steps}")

    @property
    def step(self) -> float:
        return self.period / self.steps

    @property
    def nodes(self) -> npt.NDArray[np.float64]:
        return np.linspace(0.0, self.period, self.steps + 1)

    def refined(self) -> "TimeGrid":
        return TimeGrid(self.period, 2 * self.steps)


@dataclass(frozen=True)
class PropagatorTrace:
    """U(t_k) на узлах сетки; U(t_0) = 1, каждый отсчёт унитарен."""

    grid: TimeGrid
    U: npt.NDArray[np.complex128]  # (N+1, dim, dim)
    method: IntegrationMethod
    steps: npt.NDArray[np.complex128]  # (N, dim, dim), U_{k+1} = steps[k]·U_k

    @property
    def dim(self) -> int:
        return int(self.U.shape[1])

    @property
    def monodromy(self) -> ComplexMatrix:
        """U(T)."""
        result: ComplexMatrix = self.U[-1]
        return result


@dataclass(frozen=True)
class FloquetDecomposition:
    """U(t) = Z(t)·e^{iMt}: эрмитов M и T-периодический унитарный Z(t_k).

    Собственные фазы μ_n лежат в фундаментальной зоне (−π/T, π/T].
    """

    M: HermitianOperator
    spectrum: SpectralDecomposition
    Z: npt.NDArray[np.complex128]  # (N+1, dim, dim)
    period: float
    trace: PropagatorTrace
    degeneracy_warnings: tuple[str, ...] = field(default_factory=tuple)

    @property
    def eigenphases(self) -> list[float]:
        return self.spectrum.values

    @property
    def multiplicities(self) -> list[int]:
        return self.spectrum.multiplicities

    @property
    def dim(self) -> int:
        return int(self.M.shape[0])


@dataclass(frozen=True)
class CyclicState:
    """Циклическое состояние |μ_n, a⟩ с полной фазой α_n = μ_n·T."""

    mu: float
    index: int  # номер вектора внутри кластера μ_n
    vector: npt.NDArray[np.complex128]
    alpha: float
    alpha_wrapped: float
