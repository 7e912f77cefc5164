"""Модели спиновых генераторов и периодических гамильтонианов (ħ = 1)."""

import math
from collections.abc import Callable
from dataclasses import dataclass

from pydantic import BaseModel, ConfigDict, Field, field_validator

from floquet_holonomy.models.operators import HermitianOperator

Sampler = Callable[[float], HermitianOperator]
FieldPath = Callable[[float], tuple[float, float, float]]


@dataclass(frozen=True)
class SpinGenerators:
    """Генераторы J1, J2, J3 представления спина j размерности 2j+1."""

    j: float
    J1: HermitianOperator
    J2: HermitianOperator
    J3: HermitianOperator

    @property
    def dim(self) -> int:
        return int(self.J3.shape[0])

    def as_tuple(self) -> tuple[HermitianOperator, HermitianOperator, HermitianOperator]:
        return self.J1, self.J2, self.J3


def check_spin(v: float) -> float:
    """Спин j должен быть полуцелым ≥ 1/2."""
    if not math.isfinite(v) or v < 0.5 or abs(2 * v - round(2 * v)) > 1e-12:
        raise ValueError(f"j должно быть полуцелым ≥ 1/2, получено {v}")
    return v


def check_finite(v: float) -> float:
    if not math.isfinite(v):
        raise ValueError(f"Значение должно быть конечным, получено {v}")
    return v


@dataclass(frozen=True)
class PeriodicHamiltonian:
    """T-периодический эрмитов гамильтониан, заданный функцией t → H(t)."""

    dim: int
    period: float
    sampler: Sampler

    def at(self, t: float) -> HermitianOperator:
        return self.sampler(t)


class PrecessingFieldParams(BaseModel):
    """Параметры модели прецессирующего поля: спин j, частоты ω и Ω = 2π/T."""

    model_config = ConfigDict(frozen=True)

    j: float = Field(default=1.0, description="Спин (полуцелое ≥ 1/2)")
    omega: float = Field(gt=0.0, description="Частота ω в M = ωJ3")
    Omega: float = Field(gt=0.0, description="Частота прецессии Ω = 2π/T")

    @field_validator("omega", "Omega")
    @classmethod
    def _finite(cls, v: float) -> float:
        return check_finite(v)

    @field_validator("j")
    @classmethod
    def _half_integer(cls, v: float) -> float:
        return check_spin(v)

    @property
    def period(self) -> float:
        return 2 * math.pi / self.Omega
