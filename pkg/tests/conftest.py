import functools
import warnings

import numpy as np
import pytest

from killing_momentum.fields import killing_frame_s3
from killing_momentum.quadrature import build_grid_s3
from killing_momentum.spectra import build_eigenbasis

_ACCEPTANCE: dict[int, str] = {}
N_MAX = 5


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@functools.lru_cache(maxsize=None)
def _basis_set(R: float):
    """Grid, frame and eigenstates for n <= N_MAX on both branches at radius R."""
    grid = build_grid_s3(32, 32, 32, R)
    frame = killing_frame_s3(R)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        bases = {(n, b): build_eigenbasis(n, b, R, grid=grid, frame=frame) for n in range(N_MAX + 1) for b in "+-"}
    return grid, frame, bases


@pytest.fixture(scope="session")
def basis_set():
    return _basis_set


@pytest.fixture(scope="session")
def acceptance_log():
    return _ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_ACCEPTANCE):
        terminalreporter.write_line(_ACCEPTANCE[k])
