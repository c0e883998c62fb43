import numpy as np
import pytest

from aglnet.network import Dataset, NetworkParams, Task


def random_params(rng, n_hidden=4, n_inputs=3, scale=1.0):
    return NetworkParams(
        rng.normal(0, scale, (n_hidden, n_inputs)),
        rng.normal(0, scale, n_hidden),
        rng.normal(0, scale, n_hidden),
        rng.normal(0, scale),
    )


def random_dataset(rng, n=30, n_inputs=3, task=Task.REGRESSION):
    X = rng.normal(size=(n, n_inputs))
    if task is Task.BINARY:
        y = rng.integers(0, 2, size=n).astype(float)
    else:
        y = rng.normal(size=n)
    return Dataset(X, y, task)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# PASS/FAIL lines from test_acceptance, repeated at the end of the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
