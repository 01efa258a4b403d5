import math
from collections import deque

import numpy as np
import pytest

from cosh_atlas import dynamics as dyn
from cosh_atlas.certifier import GridSpec, MarkedField
from cosh_atlas.classifier import ClassifyParams, Status

H = dyn.PRESETS["h"]
G = dyn.PRESETS["g"]


def synthetic_field(certified: np.ndarray, half_width: float = 4.0) -> MarkedField:
    n = certified.shape[0]
    st = np.where(certified, Status.FAST, Status.UNDETERMINED).astype(np.int8)
    zeros = np.zeros((n, n), dtype=np.int64)
    return MarkedField(GridSpec(0, half_width, n), ClassifyParams(), H, st, zeros, zeros, zeros)


def flood_separated(certified: np.ndarray, cell) -> bool:
    """Brute-force oracle: BFS over 4-neighbours of uncertified cells; the
    basepoint is separated iff the search never reaches the grid edge."""
    n, m = certified.shape
    seen = {cell}
    todo = deque([cell])
    while todo:
        i, j = todo.popleft()
        if i in (0, n - 1) or j in (0, m - 1):
            return False
        for a, b in ((i + 1, j), (i - 1, j), (i, j + 1), (i, j - 1)):
            if (a, b) not in seen and not certified[a, b]:
                seen.add((a, b))
                todo.append((a, b))
    return True


@pytest.fixture
def h():
    return H


@pytest.fixture
def g():
    return G


# ---------------------------------------------------------------- acceptance report

_ACCEPTANCE: dict[int, tuple[str, str]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    num, title = marker.args
    if rep.when == "call" or (rep.when == "setup" and rep.failed):
        _ACCEPTANCE[num] = ("PASS" if rep.passed else "FAIL", title)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(num, title): acceptance criterion")


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_ACCEPTANCE):
        status, title = _ACCEPTANCE[num]
        terminalreporter.write_line(f"criterion {num:>2}: {status}  {title}")
