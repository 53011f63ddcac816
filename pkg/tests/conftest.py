import functools

import pytest

from hmlfloquet.core import Boundary, reference_params
from hmlfloquet.dynamics import TimeGrid, solve_lattice, solve_volterra


@functools.lru_cache(maxsize=None)
def cached_pair(amplitude: float, periods: int = 35, boundary: str = "open"):
    """Volterra and lattice trajectories on the reference grid dt = T/512."""
    params = reference_params(amplitude, boundary=Boundary(boundary))
    grid = TimeGrid.for_periods(params, periods, 512)
    return params, solve_volterra(params, grid), solve_lattice(params, grid)


@pytest.fixture(scope="session")
def pair():
    return cached_pair
