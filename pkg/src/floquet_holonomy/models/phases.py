"""Модели фаз: связности E, A, Δ, перенос u(t) и отчёты о голономии."""

from dataclasses import dataclass

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, Field

from floquet_holonomy.models.invariants import FrameGauge
from floquet_holonomy.models.operators import ComplexMatrix, UnitaryOperator
from floquet_holonomy.models.propagation import TimeGrid


@dataclass(frozen=True)
class ConnectionTrace:
    """E, A и Δ = E − A на подпространстве ℋ_λ вдоль гладкой цепочки репера.

    Узел N берётся из гладкого продолжения frame(0)·W, поэтому Δ(t)
    непрерывна; замыкание W хранится рядом и учитывается при переносе.
    """

    eigenvalue: float
    gauge: FrameGauge
    grid: TimeGrid
    E: npt.NDArray[np.complex128]  # (N+1, l, l)
    A: npt.NDArray[np.complex128]  # (N+1, l, l)
    Delta: npt.NDArray[np.complex128]  # (N+1, l, l)
    closure: ComplexMatrix
    asymmetry: float  # max_k ‖A_raw − A_raw†‖_F до эрмитизации
    stencil_order: int

    @property
    def multiplicity(self) -> int:
        return int(self.E.shape[1])


@dataclass(frozen=True)
class TransportResult:
    """Решение i·du/dt = Δ(t)·u, u(0) = 1, и спектр голономии u(T)."""

    eigenvalue: float
    gauge: FrameGauge
    grid: TimeGrid
    u: npt.NDArray[np.complex128]  # (N+1, l, l)
    eigenvalues: npt.NDArray[np.complex128]
    phases: tuple[float, ...]  # arg собственных значений в (−π, π], по возрастанию
    label: str = ""
    dynamical_factor: UnitaryOperator | None = None
    geometric_factor: UnitaryOperator | None = None

    @property
    def holonomy(self) -> UnitaryOperator:
        """u(T)."""
        result: UnitaryOperator = self.u[-1]
        return result

    @property
    def multiplicity(self) -> int:
        return int(self.u.shape[1])


class HolonomyReport(BaseModel):
    """Мультимножества собственных фаз голономии по калибровкам и их расхождение."""

    eigenvalue: float
    phases: dict[str, list[float]] = Field(default_factory=dict)
    pairwise_distance: dict[str, float] = Field(default_factory=dict)
    max_distance: float = 0.0


class StatePhases(BaseModel):
    """Фазы невырожденного циклического состояния: α = δ + γ по модулю 2π."""

    mu: float
    index: int = 0
    alpha: float
    delta: float
    gamma: float
    gamma_raw: float
    closure: float = Field(description="|α − δ − γ| по модулю 2π")
