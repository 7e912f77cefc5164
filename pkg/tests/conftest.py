"""Общие фабрики и фикстуры для тестов floquet_holonomy."""

from __future__ import annotations

import math

import numpy as np
import pytest

from floquet_holonomy.config import Settings
from floquet_holonomy.models.invariants import FrameGauge, InvariantSpec
from floquet_holonomy.models.propagation import IntegrationMethod, TimeGrid
from floquet_holonomy.models.scenario import ScenarioConfig
from floquet_holonomy.models.spin import PrecessingFieldParams
from floquet_holonomy.services import invariant_service, propagator_service
from floquet_holonomy.services.spin_model_service import precessing_model
from floquet_holonomy.utils.matrix_core import unitary_exp

OMEGA = 0.4
BIG_OMEGA = 1.0
HALF = 1 / math.sqrt(2)


def make_precessing_params(**overrides) -> PrecessingFieldParams:
    """Фабрика параметров прецессирующего поля (ω = 0.4, Ω = 1, j = 1)."""
    defaults: dict = {"j": 1.0, "omega": OMEGA, "Omega": BIG_OMEGA}
    defaults.update(overrides)
    return PrecessingFieldParams.model_validate(defaults)


def make_precessing_pipeline(steps: int = 512, method=IntegrationMethod.MAGNUS4, **overrides):
    """Гамильтониан, аналитический U(t), трасса пропагатора и разложение Флоке."""
    params = make_precessing_params(**overrides)
    hamiltonian, z_analytic, m_analytic = precessing_model(params)

    def analytic_u(t: float):
        return z_analytic(t) @ unitary_exp(m_analytic, t)

    grid = TimeGrid(params.period, steps)
    trace = propagator_service.propagate(hamiltonian, grid, method)
    fd = propagator_service.floquet_decompose(trace)
    return hamiltonian, analytic_u, trace, fd


def make_lewis_spec() -> InvariantSpec:
    """I(0) = diag(1, 1, −1) в базисе |+⟩, |0⟩, |−⟩."""
    eye = np.eye(3, dtype=np.complex128)
    return InvariantSpec.from_spectral([1.0, -1.0], [eye[:, :2], eye[:, 2:]])


def make_frame(trace, fd, xi=HALF, zeta=HALF, gauge=FrameGauge.FLOQUET):
    """Репер двукратного подпространства λ = 1 инварианта diag(1, 1, −1)."""
    inv = invariant_service.invariant_from_initial(make_lewis_spec(), trace)
    return invariant_service.transport_eigenframes(
        inv,
        1.0,
        gauge,
        fd,
        initial_frame=invariant_service.precessing_frame(xi, zeta),
    )


def make_scenario_config(**overrides) -> ScenarioConfig:
    """Фабрика ScenarioConfig: прецессирующее поле, N = 512, обе калибровки."""
    defaults: dict = {
        "name": "test-precessing",
        "model": {"kind": "precessing", "j": 1.0, "omega": OMEGA, "Omega": BIG_OMEGA},
        "grid": {"steps": 512, "method": "magnus4"},
        "invariant": {
            "kind": "spectral",
            "blocks": [
                {"eigenvalue": 1.0, "basis": [0, 1]},
                {"eigenvalue": -1.0, "basis": [2]},
            ],
        },
        "frame": {"eigenvalue": 1.0, "xi": [HALF, 0.0], "zeta": [HALF, 0.0]},
        "gauges": ["floquet", "aligned"],
    }
    defaults.update(overrides)
    return ScenarioConfig.model_validate(defaults)


def make_settings(**overrides) -> Settings:
    """Фабрика Settings без чтения окружения сверх переданного."""
    defaults: dict = {"threads": 2, "log_level": "WARNING"}
    defaults.update(overrides)
    return Settings(**defaults)


@pytest.fixture(scope="session")
def precessing_pipeline():
    """Общая трасса N = 512: гамильтониан, аналитический U(t), пропагатор, Флоке."""
    return make_precessing_pipeline(512)
