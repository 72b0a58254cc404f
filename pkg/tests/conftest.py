"""Shared fixtures: one admissible surface at q = 5, scanned and tabulated once per session."""

import pytest

from ffsupnorm.config import RunProfile
from ffsupnorm.driver import curve_scan
from ffsupnorm.funfield import Divisor, Place
from ffsupnorm.tracefn import build_trace_table

Q = 5


@pytest.fixture(scope="session")
def run_config():
    return RunProfile().load("quick", table_depth=4, support_n_cap=4, adjoint_d_max=3,
                             n_max=2, random_points=3, z_pole_order=1, threads=1)


@pytest.fixture(scope="session")
def scan(run_config):
    return curve_scan(run_config, progress=False)


@pytest.fixture(scope="session")
def surface(scan):
    _, found = scan
    return found[0]


@pytest.fixture(scope="session")
def table(surface, run_config):
    return build_trace_table(surface, run_config.depth)


@pytest.fixture
def level4():
    """[T] + [T-1] + [T-2] + [inf] at q = 5."""
    return Divisor({Place.rational(0, Q): 1, Place.rational(1, Q): 1,
                    Place.rational(2, Q): 1, Place.infinity(Q): 1})
