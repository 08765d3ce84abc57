import numpy as np
import pytest

from hopflax import build_graph_space, build_matrix_space, power, uniform

_criteria = {}


@pytest.fixture
def two_point():
    return build_matrix_space([[0.0, 1.0], [1.0, 0.0]])


@pytest.fixture
def path5():
    return build_graph_space([(i, i + 1, 1.0) for i in range(4)], 5)


@pytest.fixture
def quad():
    return power(2.0)


@pytest.fixture
def mu2():
    return uniform(2)


def random_space(rng, n_max=50, n_min=2):
    n = int(rng.integers(n_min, n_max + 1))
    pts = rng.random((n, 2))
    return build_matrix_space(np.sqrt(((pts[:, None] - pts[None]) ** 2).sum(-1)))


def pytest_runtest_logreport(report):
    crit = dict(report.user_properties).get("criterion")
    if crit is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _criteria[crit] = (report.outcome, dict(report.user_properties).get("title", ""))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(_criteria):
        outcome, title = _criteria[crit]
        mark = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"criterion {crit:2d}: {mark}  {title}")
