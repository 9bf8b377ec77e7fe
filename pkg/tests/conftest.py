import json
import math

import pytest

from omitsim import DetuningMode, RawConfig, build_params, solve_direct

# reference experimental parameter set used throughout the suite
PAPER_DOC = {
    "pump_wavelength": 1.064e-06,
    "cavity_length": 0.025,
    "omega1": 947000.0,
    "omega2": 947000.0,
    "Q1": 6700.0,
    "Q2": 6700.0,
    "m1": 1.45e-10,
    "m2": 1.45e-10,
    "kappa": 215000.0,
    "pump_power": 0.002,
    "probe_power": 2e-09,
    "coulomb_lambda": 8e+35,
    "detuning_mode": "effective_delta",
    "detuning_value": 947000.0,
    "units": {
        "omega1": "hz_times_2pi",
        "omega2": "hz_times_2pi",
        "kappa": "hz_times_2pi",
        "detuning_value": "hz_times_2pi",
        "coulomb_lambda": "rad_per_s",
    },
}

COULOMB_LAMBDA = 8e35


def paper_raw_config(**overrides) -> RawConfig:
    base = dict(
        pump_wavelength=1.064e-6,
        cavity_length=0.025,
        omega1=2 * math.pi * 947e3,
        omega2=2 * math.pi * 947e3,
        Q1=6700.0,
        Q2=6700.0,
        m1=1.45e-10,
        m2=1.45e-10,
        kappa=2 * math.pi * 215e3,
        pump_power=2e-3,
        probe_power=2e-9,
        coulomb_lambda=COULOMB_LAMBDA,
        detuning_mode=DetuningMode.EFFECTIVE_DELTA,
        detuning_value=2 * math.pi * 947e3,
    )
    base.update(overrides)
    return RawConfig(**base)


@pytest.fixture(scope="session")
def paper_config():
    return paper_raw_config()


@pytest.fixture(scope="session")
def paper_params(paper_config):
    return build_params(paper_config)


@pytest.fixture(scope="session")
def paper_state(paper_params):
    return solve_direct(paper_params, paper_params.omega1)


@pytest.fixture
def paper_config_file(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(PAPER_DOC))
    return path
