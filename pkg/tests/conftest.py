from pathlib import Path

import numpy as np
import pytest

DATA = Path(__file__).parent / "data"


@pytest.fixture
def data_dir():
    return DATA


def two_blobs(n_maj=40, n_min=10, gap=4.0, dim=2, seed=0):
    """Gaussian majority at the origin, minority shifted by ``gap`` along x."""
    rng = np.random.default_rng(seed)
    X = np.vstack([rng.normal(0, 1, (n_maj, dim)), rng.normal(0, 1, (n_min, dim))])
    X[n_maj:, 0] += gap
    y = np.r_[np.zeros(n_maj, int), np.ones(n_min, int)]
    return X, y


_ACCEPTANCE = []


@pytest.fixture
def verdict():
    """Record one PASS/FAIL line for the end-of-run acceptance summary."""
    def record(criterion, ok, detail):
        line = f"criterion {criterion}: {'PASS' if ok else 'FAIL'} | {detail}"
        _ACCEPTANCE.append(line)
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
