import numpy as np
import pytest

from inflap.barrier import BarrierParams
from inflap.solver import manufactured_solution


@pytest.fixture(scope="session")
def params() -> BarrierParams:
    return BarrierParams(kappa=0.125, theta=0.5)


@pytest.fixture(scope="session")
def manufactured_2d_33():
    return manufactured_solution(1.0, 2, 33)


@pytest.fixture(scope="session")
def manufactured_2d_65():
    return manufactured_solution(1.0, 2, 65)


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(20260810)
