import numpy as np
import pytest

from blockchroma import BlockModel

# independently evaluated to 30 digits
C_HALF = 2.885390081777926814
C_FIFTH = 8.962840235449099574


@pytest.fixture
def k1():
    return BlockModel([1.0], [[0.5]])


@pytest.fixture
def union_model():
    return BlockModel([0.5, 0.5], [[0.2, 0.8], [0.8, 0.5]])


def two_part(p1, p2, p12, alpha=(0.5, 0.5)):
    return BlockModel(list(alpha), [[p1, p12], [p12, p2]])


def random_model(rng, k, low=0.05, high=0.95):
    alpha = rng.dirichlet(np.ones(k) * 2)
    alpha = np.maximum(alpha, 0.05)
    alpha /= alpha.sum()
    alpha[-1] = 1.0 - alpha[:-1].sum()
    U = rng.uniform(low, high, size=(k, k))
    P = np.triu(U) + np.triu(U, 1).T
    return BlockModel(alpha, P)


# one summary line per acceptance criterion
_CRITERIA = {}


def pytest_runtest_makereport(item, call):
    mark = item.get_closest_marker("criterion")
    if mark is None or call.when != "call":
        return
    num = mark.args[0]
    ok = call.excinfo is None
    detail = dict(item.user_properties).get("detail", "")
    if not ok:
        detail = call.excinfo.exconly().splitlines()[0][:160]
    prev = _CRITERIA.get(num)
    _CRITERIA[num] = (ok and (prev is None or prev[0]), mark.args[1], detail if prev is None or not ok else prev[2], (prev[3] if prev else 0.0) + call.duration)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_CRITERIA):
        ok, title, detail, secs = _CRITERIA[num]
        line = f"criterion {num}: {'PASS' if ok else 'FAIL'}  {title} ({secs:.1f} s)"
        terminalreporter.write_line(line + (f"  {detail}" if detail else ""))
