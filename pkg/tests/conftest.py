import numpy as np
import pytest

from glimmrcm.scheme import StaggeredGrid, riemann_data, run
from glimmrcm.sequence import SamplingSequence
from glimmrcm.system import builtin_system


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Trigger compilation of both strip kernels before any timed test."""
    grid = StaggeredGrid(h=0.1, lambda_cfl=2.0, x_min=-15.0, x_max=15.0)
    data = riemann_data([1.0], [0.95])
    for name, params in (
            ("burgers_inhom", {"a_inf": 1.0, "eps": 0.05, "kappa": 0.05}),
            ("advection_var", {"a_inf": 1.0, "eps": 0.05})):
        run(builtin_system(name, params), grid, SamplingSequence(), data,
            2.0 * grid.dt)
