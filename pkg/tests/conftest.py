import time

import numpy as np
import pytest

from pmelab.fields import Grid
from pmelab.solver import PMEProblem, SchemeConfig, solve_pme

REGRESSION_C = 1.0 / 12.0


@pytest.fixture(scope="session")
def regression_run():
    """The m=2 source-solution regression run: C=1/12, t 1 -> 2, N=401, L=4.

    Shared across test modules; wall time of the solve is stashed in the
    diagnostics for the runtime budget check.
    """
    grid = Grid(1, 4.0, 401)
    problem = PMEProblem(
        m=2.0, initial={"kind": "barenblatt", "C": REGRESSION_C},
        t0=1.0, t1=2.0,
        snapshot_times=tuple(np.round(np.arange(1.0, 2.0001, 0.1), 10)))
    start = time.perf_counter()
    traj = solve_pme(problem, grid, SchemeConfig())
    traj.diagnostics["wall_time"] = time.perf_counter() - start
    return traj


@pytest.fixture(scope="session")
def regression_run_fine():
    """The same run with dx halved (N=801), for refinement comparisons."""
    grid = Grid(1, 4.0, 801)
    problem = PMEProblem(
        m=2.0, initial={"kind": "barenblatt", "C": REGRESSION_C},
        t0=1.0, t1=2.0, snapshot_times=(1.0, 1.5, 2.0))
    return solve_pme(problem, grid, SchemeConfig())
