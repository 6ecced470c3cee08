"""Shared fixtures: a representative 9 GHz resonator and its synthetic trace."""

from __future__ import annotations

import numpy as np
import pytest

from sawkit import mbvd
from sawkit.touchstone import OnePortTrace

# nominal 9.05 GHz device used throughout the suite: keff2 = 15 %, Q_m = 213,
# C_0 = 100 fF, with access/dielectric losses typical of on-wafer measurements
F_S = 9.05e9
KEFF2 = 0.15
Q_M = 213.0
C_0 = 100e-15
R_S = 0.5
R_0 = 0.5


@pytest.fixture(scope="session")
def device_params() -> mbvd.MbvdParams:
    return mbvd.params_from_metrics(F_S, KEFF2, Q_M, C_0, r_s=R_S, r_0=R_0)


@pytest.fixture(scope="session")
def device_fp(device_params) -> float:
    return mbvd.derived_fp(device_params)


@pytest.fixture(scope="session")
def device_trace(device_params) -> OnePortTrace:
    grid = np.linspace(8.5e9, 10.5e9, 4001)
    return mbvd.synthesize_s11(device_params, grid, z0=50.0)
