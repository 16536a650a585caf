# conftest.py
import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from app.analysis.barrier_exact import gbm_double_barrier_exact
from app.models.contracts import gbm_double_knockout
from app.models.schemas import MCConfig

CONFIG_DIR = os.path.join(os.path.dirname(__file__), "configs")
GOLDEN_DIR = os.path.join(os.path.dirname(__file__), "data", "golden")

# GBM case 1: b = sigma = 0.1, barriers [1, 5], K = 1.3, S0 = 2, T = 1
GBM_CASE1 = dict(b=0.1, sigma=0.1, B_d=1.0, B_u=5.0, K=1.3, x0=2.0, T=1.0)


@pytest.fixture
def gbm_case1():
    return gbm_double_knockout(**GBM_CASE1)


@pytest.fixture(scope="session")
def gbm_case1_exact():
    return gbm_double_barrier_exact(**GBM_CASE1)


@pytest.fixture
def small_mc():
    return MCConfig(paths=20_000, steps_per_year=250, seed=7, batch_size=5_000)


@pytest.fixture
def config_path():
    def _path(name: str) -> str:
        return os.path.join(CONFIG_DIR, name)

    return _path
