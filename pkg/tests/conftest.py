import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from brdd import _backend  # noqa: E402
from brdd.data import Dataset, validate_and_normalize  # noqa: E402
from brdd.dgp import DgpConfig, generate  # noqa: E402


@pytest.fixture(params=_backend.available())
def backend(request):
    prev = _backend.set_backend(request.param)
    yield request.param
    _backend.set_backend(prev or "python")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def constant_ds():
    """Program geometry, constant effect 0.3, full take-up."""
    cfg = DgpConfig(compliance=1.0, noise_sd=0.03, seed=11)
    return validate_and_normalize(generate(cfg), cfg.rule)


@pytest.fixture(scope="session")
def fuzzy_ds():
    """Program geometry, constant effect 0.3, take-up 0.59 among eligible."""
    cfg = DgpConfig(noise_sd=0.05, seed=12)
    return validate_and_normalize(generate(cfg), cfg.rule)


def planar(n=20000, along="B1", jump=0.3, seed=0, half_width=20.0):
    """Noiseless planes: slope only in the discontinuity coordinate, jump on the eligible quadrant."""
    r = np.random.default_rng(seed)
    x1 = r.uniform(-half_width, half_width, n)
    x2 = r.uniform(-half_width, half_width, n)
    z = (x1 >= 0) & (x2 >= 0)
    disc = x1 if along == "B1" else x2
    y = 0.4 + 0.02 * disc + jump * z
    return validate_and_normalize(Dataset(y=y, x1=x1, x2=x2))


def pytest_terminal_summary(terminalreporter):
    from acceptance_report import summary_lines

    lines = summary_lines()
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
