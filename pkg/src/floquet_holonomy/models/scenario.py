"""Pydantic-модели документа сценария и итогового отчёта."""

import math
from typing import Annotated, Any, Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from floquet_holonomy.models.invariants import FrameGauge, NonAbelianConditionReport
from floquet_holonomy.models.phases import HolonomyReport, StatePhases
from floquet_holonomy.models.propagation import IntegrationMethod
from floquet_holonomy.models.spin import check_finite, check_spin

ComplexPair = Annotated[list[float], Field(min_length=2, max_length=2)]
Vector3 = Annotated[list[float], Field(min_length=3, max_length=3)]

NORMALIZATION_TOL = 1e-10


# ---------------------------------------------------------------------------
# Модель
# ---------------------------------------------------------------------------

class PrecessingModelConfig(BaseModel):
    """Прецессирующее поле: Z(t) = e^{iΩtJ1}, M = ωJ3."""

    kind: Literal["precessing"] = "precessing"
    j: float = 1.0
    omega: float = Field(default=0.4, gt=0.0)
    Omega: float = Field(default=1.0, gt=0.0)

    @field_validator("omega", "Omega")
    @classmethod
    def _finite(cls, v: float) -> float:
        return check_finite(v)

    @field_validator("j")
    @classmethod
    def _half_integer(cls, v: float) -> float:
        return check_spin(v)


class FourierPathConfig(BaseModel):
    """R(t) = a₀ + Σ_k [a_k·cos(kΩt) + b_k·sin(kΩt)]."""

    type: Literal["fourier"] = "fourier"
    constant: Vector3
    cos_terms: list[Vector3] = Field(default_factory=list)
    sin_terms: list[Vector3] = Field(default_factory=list)


class TabulatedPathConfig(BaseModel):
    """Табличное поле с линейной интерполяцией."""

    type: Literal["tabulated"] = "tabulated"
    times: list[float] = Field(min_length=2)
    values: list[Vector3] = Field(min_length=2)

    @model_validator(mode="after")
    def _same_length(self) -> "TabulatedPathConfig":
        if len(self.times) != len(self.values):
            raise ValueError(
                f"times и values разной длины: {len(self.times)} и {len(self.values)}"
            )
        return self


class CustomFieldModelConfig(BaseModel):
    """H(t) = b·R(t)·J для произвольной T-периодической траектории поля."""

    kind: Literal["custom-field"] = "custom-field"
    j: float = 1.0
    b: float = 1.0
    period: float = Field(gt=0.0)
    path: FourierPathConfig | TabulatedPathConfig = Field(discriminator="type")

    @field_validator("b", "period")
    @classmethod
    def _finite(cls, v: float) -> float:
        return check_finite(v)

    @field_validator("j")
    @classmethod
    def _half_integer(cls, v: float) -> float:
        return check_spin(v)


ModelConfig = Annotated[
    PrecessingModelConfig | CustomFieldModelConfig,
    Field(discriminator="kind"),
]


# ---------------------------------------------------------------------------
# Сетка, инвариант, репер
# ---------------------------------------------------------------------------

class GridConfig(BaseModel):
    """Равномерная сетка из N шагов на периоде и схема интегрирования."""

    steps: int = Field(default=512, ge=8)
    method: IntegrationMethod = IntegrationMethod.MAGNUS4

    @field_validator("steps")
    @classmethod
    def _power_of_two(cls, v: int) -> int:
        if v & (v - 1):
            raise ValueError(f"N должно быть степенью двойки, получено {v}")
        return v


class SpectralBlockConfig(BaseModel):
    """Собственное значение I(0) и его блок: номера базисных векторов J3 или явные векторы."""

    eigenvalue: float
    basis: list[int] = Field(default_factory=list)
    vectors: list[list[ComplexPair]] = Field(default_factory=list)

    @model_validator(mode="after")
    def _one_selector(self) -> "SpectralBlockConfig":
        if bool(self.basis) == bool(self.vectors):
            raise ValueError("Блок задаётся ровно одним из полей: basis или vectors")
        return self


class InvariantConfig(BaseModel):
    """Начальное значение инварианта: M из разложения Флоке или спектральные данные."""

    kind: Literal["from-floquet", "spectral"] = "spectral"
    blocks: list[SpectralBlockConfig] = Field(default_factory=list)

    @model_validator(mode="after")
    def _blocks_required(self) -> "InvariantConfig":
        if self.kind == "spectral" and not self.blocks:
            raise ValueError("Для спектрального инварианта нужен хотя бы один блок")
        return self


class FrameConfig(BaseModel):
    """Начальный репер: пара (ξ, ζ) двумерного подпространства или явные векторы."""

    eigenvalue: float | None = None
    xi: ComplexPair | None = None
    zeta: ComplexPair | None = None
    vectors: list[list[ComplexPair]] | None = None

    @model_validator(mode="after")
    def _normalized(self) -> "FrameConfig":
        pair = self.xi is not None or self.zeta is not None
        if pair and self.vectors is not None:
            raise ValueError("Репер задаётся либо (xi, zeta), либо vectors")
        if pair:
            if self.xi is None or self.zeta is None:
                raise ValueError("Нужны оба параметра xi и zeta")
            norm = self.xi[0] ** 2 + self.xi[1] ** 2 + self.zeta[0] ** 2 + self.zeta[1] ** 2
            if abs(norm - 1.0) > NORMALIZATION_TOL:
                raise ValueError(
                    f"Нарушена нормировка |ξ|² + |ζ|² = {norm:.12f} ≠ 1"
                )
        return self

    @property
    def has_pair(self) -> bool:
        return self.xi is not None and self.zeta is not None

    def pair(self) -> tuple[complex, complex]:
        if self.xi is None or self.zeta is None:
            raise ValueError("Репер задан не парой (xi, zeta)")
        return complex(self.xi[0], self.xi[1]), complex(self.zeta[0], self.zeta[1])


class ToleranceConfig(BaseModel):
    """Допуски проверок сценария; нарушение любой даёт код выхода 1."""

    propagator_oracle: float = Field(default=1e-8, gt=0.0)
    floquet_reconstruction: float = Field(default=1e-8, gt=0.0)
    z_periodicity: float = Field(default=1e-8, gt=0.0)
    periodicity: float = Field(default=1e-8, gt=0.0)
    spectrum_constancy: float = Field(default=1e-8, gt=0.0)
    commutation: float = Field(default=1e-8, gt=0.0)
    ode_residual: float = Field(default=1e-3, gt=0.0)
    lewis: float = Field(default=1e-3, gt=0.0)
    closure: float = Field(default=1e-6, gt=0.0)
    frame_reconstruction: float = Field(default=1e-6, gt=0.0)
    cross_gauge: float = Field(default=1e-7, gt=0.0)
    factorize_commute: float = Field(default=1e-8, gt=0.0)

    @model_validator(mode="after")
    def _finite(self) -> "ToleranceConfig":
        for name, value in self.model_dump().items():
            if not math.isfinite(value):
                raise ValueError(f"Допуск {name} должен быть конечным")
        return self


class OutputConfig(BaseModel):
    directory: str | None = None
    format: Literal["json", "csv", "both"] = "json"
    basename: str | None = None


class ScenarioConfig(BaseModel):
    """Документ сценария: модель, сетка, инвариант, репер, калибровки, допуски, вывод."""

    model_config = ConfigDict(extra="forbid")

    name: str = "custom"
    model: ModelConfig
    grid: GridConfig = Field(default_factory=GridConfig)
    invariant: InvariantConfig = Field(default_factory=lambda: InvariantConfig(kind="from-floquet"))
    frame: FrameConfig | None = None
    gauges: list[FrameGauge] = Field(
        default_factory=lambda: [FrameGauge.FLOQUET, FrameGauge.ALIGNED],
        min_length=1,
    )
    tolerances: ToleranceConfig = Field(default_factory=ToleranceConfig)
    output: OutputConfig = Field(default_factory=OutputConfig)

    @field_validator("gauges")
    @classmethod
    def _unique_gauges(cls, v: list[FrameGauge]) -> list[FrameGauge]:
        if len(set(v)) != len(v):
            raise ValueError(f"Калибровки повторяются: {[g.value for g in v]}")
        return v


# ---------------------------------------------------------------------------
# Отчёт
# ---------------------------------------------------------------------------

class FloquetSummary(BaseModel):
    mu: list[float]
    multiplicity: list[int]
    alpha: list[float] = Field(default_factory=list)
    warnings: list[str] = Field(default_factory=list)


class SubspaceReport(BaseModel):
    """Связности и голономия одного подпространства в одной калибровке."""

    model_config = ConfigDict(populate_by_name=True)

    eigenvalue: float = Field(serialization_alias="lambda")
    gauge: str
    multiplicity: int
    E0: list[list[ComplexPair]]
    A0: list[list[ComplexPair]]
    Delta0: list[list[ComplexPair]]
    closure: list[list[ComplexPair]]
    uT: list[list[ComplexPair]]
    holonomy_phases: list[float]
    connection_deviation: float
    connection_asymmetry: float
    frame_reconstruction: float
    determinant_residual: float
    factorized: bool = False
    factorized_distance: float | None = None


class ScenarioReport(BaseModel):
    """Итоговый отчёт сценария; checksum покрывает всё, кроме timings."""

    config: dict[str, Any]
    floquet: FloquetSummary
    checks: dict[str, float]
    bounds: dict[str, float]
    failed_checks: list[str] = Field(default_factory=list)
    nonabelian_condition: NonAbelianConditionReport
    states: list[StatePhases] = Field(default_factory=list)
    subspaces: list[SubspaceReport] = Field(default_factory=list)
    holonomy: list[HolonomyReport] = Field(default_factory=list)
    cross_gauge_distance: float = 0.0
    version: str
    conventions: dict[str, str] = Field(default_factory=dict)
    checksum: str = ""
    timings: dict[str, float] = Field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.failed_checks

    def payload(self) -> dict[str, Any]:
        """JSON-совместимое представление с ключами отчёта (``lambda`` и т.п.)."""
        return self.model_dump(mode="json", by_alias=True)
