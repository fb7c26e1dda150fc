import time

import pytest

from vortexstring import grid as gr, model, vortex

_FLAT_CACHE = {}


def flat_solve(centers, m, beta, radius, nodes):
    """Session-cached flat vortex solve shared across test modules."""
    key = (centers, m, beta, radius, nodes)
    if key not in _FLAT_CACHE:
        spec = model.ProblemSpec(centers=centers, m=m, beta=beta)
        grid = gr.build_grid(radius, nodes, spec)
        start = time.perf_counter()
        v, report = vortex.solve_vortex(spec, grid)
        elapsed = time.perf_counter() - start
        _FLAT_CACHE[key] = (spec, grid, v, report, elapsed)
    return _FLAT_CACHE[key]


@pytest.fixture(scope="session")
def flat_solver():
    return flat_solve
