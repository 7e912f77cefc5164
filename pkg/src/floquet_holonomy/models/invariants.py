"""Модели динамических инвариантов, собственных реперов и условия неабелевости."""

from collections.abc import Sequence
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, Field

from floquet_holonomy.exceptions import InputValidationError
from floquet_holonomy.models.operators import (
    ComplexMatrix,
    HermitianOperator,
    SpectralDecomposition,
)
from floquet_holonomy.models.propagation import TimeGrid

ORTHONORMAL_TOL = 1e-10


def _orthonormality_defect(vectors: ComplexMatrix) -> float:
    return float(np.linalg.norm(vectors.conj().T @ vectors - np.eye(vectors.shape[1])))


@dataclass(frozen=True)
class InvariantSpec:
    """Начальное значение инварианта I(0).

    Задаётся либо весами c_n и полным ортонормированным набором начальных
    состояний (I(0) = Σ c_n|ψ_n⟩⟨ψ_n|), либо спектрально: значениями λ_n и
    ортонормированными блоками собственных векторов.
    """

    initial: HermitianOperator
    weights: tuple[float, ...] = field(default_factory=tuple)

    @property
    def dim(self) -> int:
        return int(self.initial.shape[0])

    def operator(self) -> HermitianOperator:
        return self.initial

    @classmethod
    def from_weights(
        cls,
        weights: Sequence[float],
        states: Sequence[npt.ArrayLike],
    ) -> "InvariantSpec":
        vectors = np.column_stack([np.asarray(s, dtype=np.complex128) for s in states])
        if len(weights) != vectors.shape[1]:
            raise InputValidationError(
                f"Число весов {len(weights)} не совпадает с числом состояний {vectors.shape[1]}"
            )
        if vectors.shape[0] != vectors.shape[1]:
            raise InputValidationError(
                f"Набор состояний неполон: {vectors.shape[1]} векторов "
                f"в размерности {vectors.shape[0]}"
            )
        defect = _orthonormality_defect(vectors)
        if defect > ORTHONORMAL_TOL:
            raise InputValidationError(f"Начальные состояния не ортонормированы: {defect:.3e}")
        c = np.asarray(weights, dtype=np.float64)
        initial = (vectors * c) @ vectors.conj().T
        return cls(initial=(initial + initial.conj().T) / 2, weights=tuple(float(w) for w in c))

    @classmethod
    def from_spectral(
        cls,
        values: Sequence[float],
        blocks: Sequence[npt.ArrayLike],
    ) -> "InvariantSpec":
        if len(values) != len(blocks):
            raise InputValidationError("Число собственных значений не совпадает с числом блоков")
        mats = [np.asarray(b, dtype=np.complex128).reshape(np.shape(b)[0], -1) for b in blocks]
        vectors = np.hstack(mats)
        if vectors.shape[0] != vectors.shape[1]:
            raise InputValidationError(
                f"Блоки неполны: Σ l_n = {vectors.shape[1]}, размерность {vectors.shape[0]}"
            )
        defect = _orthonormality_defect(vectors)
        if defect > ORTHONORMAL_TOL:
            raise InputValidationError(f"Блоки векторов не ортонормированы: {defect:.3e}")
        weights = np.concatenate(
            [np.full(m.shape[1], float(v)) for v, m in zip(values, mats, strict=True)]
        )
        initial = (vectors * weights) @ vectors.conj().T
        initial = (initial + initial.conj().T) / 2
        return cls(initial=initial, weights=tuple(float(w) for w in weights))


@dataclass(frozen=True)
class InvariantTrace:
    """Отсчёты I(t_k) инварианта и спектр I(0)."""

    grid: TimeGrid
    I: npt.NDArray[np.complex128]  # noqa: E741  (N+1, dim, dim)
    spectrum: SpectralDecomposition

    @property
    def dim(self) -> int:
        return int(self.I.shape[1])


class FrameGauge(str, Enum):
    """Калибровка однозначного собственного репера вдоль t."""

    FLOQUET = "floquet"
    ALIGNED = "aligned"


@dataclass(frozen=True)
class FrameTrace:
    """Однозначный ортонормированный репер подпространства ℋ_{λ_n}(t_k).

    ``frames[N]`` совпадает с ``frames[0]`` точно. Гладкое продолжение
    цепочки в t = T равно ``frames[0] @ closure``; для калибровки Флоке
    ``closure`` — единица с точностью до округления.
    """

    eigenvalue: float
    gauge: FrameGauge
    grid: TimeGrid
    frames: npt.NDArray[np.complex128]  # (N+1, dim, l_n)
    closure: ComplexMatrix  # l_n×l_n

    @property
    def multiplicity(self) -> int:
        return int(self.frames.shape[2])

    @property
    def initial(self) -> ComplexMatrix:
        result: ComplexMatrix = self.frames[0]
        return result

    def column(self, a: int) -> npt.NDArray[np.complex128]:
        """Трасса a-го вектора репера: (N+1, dim)."""
        result: npt.NDArray[np.complex128] = self.frames[:, :, a]
        return result

    def smooth_node(self, k: int) -> ComplexMatrix:
        """Узел гладкой цепочки с периодическим продолжением: F(t_{k+N}) = F(t_k)·W."""
        n = self.grid.steps
        period_shift, index = divmod(k, n)
        node: ComplexMatrix = self.frames[index]
        if period_shift > 0:
            node = node @ np.linalg.matrix_power(self.closure, period_shift)
        elif period_shift < 0:
            node = node @ np.linalg.matrix_power(self.closure.conj().T, -period_shift)
        return node


class ProjectorCondition(BaseModel):
    """Проверка одного вырожденного собственного проектора I(0)."""

    eigenvalue: float
    multiplicity: int
    is_M_eigenprojector: bool
    invariance_residual: float = Field(description="‖MΛ − ΛMΛ‖_F")
    eigenprojector_residual: float = Field(description="min_μ ‖(M − μ)Λ‖_F")
    closest_mu: float | None = None


class NonAbelianConditionReport(BaseModel):
    """Необходимое условие неабелевой фазы: [I(0), M] = 0 и вырожденный Λ не проектор M."""

    commutes_with_M: bool
    commutator_residual: float
    monodromy_commutator_residual: float = Field(
        description="‖[e^{iMT}, I(0)]‖_F — сообщается отдельно от ‖[M, I(0)]‖_F"
    )
    tolerance: float
    projectors: list[ProjectorCondition] = Field(default_factory=list)
    satisfied: bool
