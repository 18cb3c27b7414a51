import pytest

from src.core.elliptic import Grid
from src.core.solver import SolverConfig

from cases import make_example1, make_example2, make_no_growth


@pytest.fixture
def example1():
    return make_example1()


@pytest.fixture
def example2():
    return make_example2()


@pytest.fixture
def no_growth():
    return make_no_growth()


@pytest.fixture
def small_config():
    return SolverConfig(Grid(32), dt=1e-2, t_max=500.0, steady_tol=1e-8, seed=7)
