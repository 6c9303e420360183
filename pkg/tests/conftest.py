import math
import time

import pytest

from stmc import discretize as D
from stmc import models as M

_CRITERIA: dict[int, str] = {}


@pytest.fixture
def criterion():
    """Record the verdict line of an acceptance criterion."""

    def record(num: int, ok: bool, detail: str) -> bool:
        _CRITERIA[num] = f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        print(_CRITERIA[num])
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_CRITERIA):
        terminalreporter.write_line(_CRITERIA[k])


@pytest.fixture(scope="session")
def const_circle():
    return M.warped(M.Spatial("circle", {"L": 2 * math.pi}), M.Warp("const", {"c": 1.0}), (0.0, 1.0))


@pytest.fixture(scope="session")
def linear_circle():
    return M.warped(M.Spatial("circle", {"L": 2 * math.pi}), M.Warp("linear", {}), (0.0, 1.3))


@pytest.fixture(scope="session")
def antipodal_graph(linear_circle):
    """256 x 256 grid on [0.05, 1.3] plus the level pair (1, 0), (1, pi) as the last two nodes."""
    nodes = D.sample_grid(linear_circle, 256, 256, t_range=(0.05, 1.3))
    nodes += [M.ModelPoint(1.0, (0.0,)), M.ModelPoint(1.0, (math.pi,))]
    t0 = time.perf_counter()
    g = D.build_causal_graph(linear_circle, nodes)
    g.meta["build_seconds"] = time.perf_counter() - t0
    return g
