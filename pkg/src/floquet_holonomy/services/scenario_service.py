"""Построение объектов вычисления из документа сценария и встроенные сценарии."""

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
from pydantic import ValidationError

from floquet_holonomy.exceptions import LevelCrossingError, ScenarioValidationError
from floquet_holonomy.models.invariants import InvariantSpec
from floquet_holonomy.models.operators import (
    ComplexMatrix,
    HermitianOperator,
    SpectralDecomposition,
    UnitaryOperator,
)
from floquet_holonomy.models.scenario import (
    CustomFieldModelConfig,
    FourierPathConfig,
    FrameConfig,
    InvariantConfig,
    PrecessingModelConfig,
    ScenarioConfig,
)
from floquet_holonomy.models.spin import PeriodicHamiltonian, PrecessingFieldParams
from floquet_holonomy.services.invariant_service import precessing_frame
from floquet_holonomy.services.spin_model_service import (
    field_hamiltonian,
    fourier_path,
    precessing_model,
    spin_generators,
    tabulated_path,
)
from floquet_holonomy.utils.matrix_core import unitary_exp
from floquet_holonomy.utils.serialization import decode_vector

logger = logging.getLogger(__name__)

DEFAULT_SCENARIO = "spin1-precessing"
FRAME_MATCH_TOL = 1e-8


@dataclass(frozen=True)
class ModelBundle:
    """Гамильтониан сценария и, для прецессирующего поля, аналитический пропагатор."""

    hamiltonian: PeriodicHamiltonian
    analytic_propagator: Callable[[float], UnitaryOperator] | None = None
    analytic_M: HermitianOperator | None = None


def builtin_scenarios() -> dict[str, ScenarioConfig]:
    """Встроенные сценарии по имени."""
    half = 1 / math.sqrt(2)
    return {
        DEFAULT_SCENARIO: ScenarioConfig.model_validate(
            {
                "name": DEFAULT_SCENARIO,
                "model": {"kind": "precessing", "j": 1.0, "omega": 0.4, "Omega": 1.0},
                "grid": {"steps": 512, "method": "magnus4"},
                "invariant": {
                    "kind": "spectral",
                    "blocks": [
                        {"eigenvalue": 1.0, "basis": [0, 1]},
                        {"eigenvalue": -1.0, "basis": [2]},
                    ],
                },
                "frame": {"eigenvalue": 1.0, "xi": [half, 0.0], "zeta": [half, 0.0]},
                "gauges": ["floquet", "aligned"],
            }
        ),
    }


def get_builtin_scenario(name: str) -> ScenarioConfig:
    scenarios = builtin_scenarios()
    if name not in scenarios:
        raise ScenarioValidationError(
            f"Неизвестный встроенный сценарий {name!r}. Доступны: {', '.join(sorted(scenarios))}"
        )
    return scenarios[name]


def build_model(config: ScenarioConfig) -> ModelBundle:
    """Гамильтониан из секции ``model``."""
    model = config.model
    if isinstance(model, PrecessingModelConfig):
        try:
            params = PrecessingFieldParams(j=model.j, omega=model.omega, Omega=model.Omega)
        except ValidationError as exc:
            raise ScenarioValidationError(f"Некорректные параметры модели: {exc}") from exc
        hamiltonian, z_analytic, m_analytic = precessing_model(params)

        def analytic_propagator(t: float) -> UnitaryOperator:
            return z_analytic(t) @ unitary_exp(m_analytic, t)

        return ModelBundle(hamiltonian, analytic_propagator, m_analytic)

    custom: CustomFieldModelConfig = model
    gens = spin_generators(custom.j)
    if isinstance(custom.path, FourierPathConfig):
        path = fourier_path(
            custom.period,
            custom.path.constant,
            custom.path.cos_terms,
            custom.path.sin_terms,
        )
    else:
        path = tabulated_path(custom.path.times, custom.path.values)
    return ModelBundle(field_hamiltonian(custom.b, path, gens, custom.period))


def build_invariant_spec(invariant: InvariantConfig, dim: int) -> InvariantSpec | None:
    """Спектральные данные I(0); для ``from-floquet`` возвращает ``None``."""
    if invariant.kind == "from-floquet":
        return None
    eye = np.eye(dim, dtype=np.complex128)
    values: list[float] = []
    blocks: list[ComplexMatrix] = []
    for block in invariant.blocks:
        if block.basis:
            if any(i < 0 or i >= dim for i in block.basis):
                raise ScenarioValidationError(
                    f"Номера базисных векторов {block.basis} вне диапазона 0..{dim - 1}"
                )
            matrix = eye[:, block.basis]
        else:
            matrix = np.column_stack([decode_vector(v) for v in block.vectors])
            if matrix.shape[0] != dim:
                raise ScenarioValidationError(
                    f"Векторы блока λ={block.eigenvalue} имеют размерность {matrix.shape[0]}, "
                    f"ожидалась {dim}"
                )
        values.append(block.eigenvalue)
        blocks.append(matrix)
    return InvariantSpec.from_spectral(values, blocks)


def resolve_frame_target(
    frame: FrameConfig | None,
    spectrum: SpectralDecomposition,
) -> float | None:
    """Собственное значение, к которому относится заданный репер.

    По умолчанию — первое вырожденное подпространство I(0). Значение, которого
    нет в спектре, даёт LevelCrossingError.
    """
    if frame is None:
        return None
    if frame.eigenvalue is not None:
        tol = max(spectrum.cluster_tol, FRAME_MATCH_TOL)
        index = spectrum.find_cluster(frame.eigenvalue, tol)
        if index is None:
            raise LevelCrossingError(
                f"Репер задан для λ = {frame.eigenvalue:.10g}, которого нет в спектре I(0) "
                f"{[round(v, 10) for v in spectrum.values]}"
            )
        return spectrum.clusters[index].value
    for cluster in spectrum.clusters:
        if cluster.multiplicity > 1:
            return cluster.value
    return spectrum.values[0]


def build_initial_frame(frame: FrameConfig, dim: int) -> ComplexMatrix:
    if frame.has_pair:
        xi, zeta = frame.pair()
        return precessing_frame(xi, zeta, dim)
    if frame.vectors is None:
        raise ScenarioValidationError("Секция frame не задаёт ни (xi, zeta), ни vectors")
    matrix = np.column_stack([decode_vector(v) for v in frame.vectors])
    if matrix.shape[0] != dim:
        raise ScenarioValidationError(
            f"Векторы репера имеют размерность {matrix.shape[0]}, ожидалась {dim}"
        )
    return matrix
