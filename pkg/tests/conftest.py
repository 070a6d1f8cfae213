import hypothesis
import numpy as np
import pytest

from fracsync.paths import RngSeed, SamplePath, TimeGrid, sample_fbm
from fracsync.fou import FouConfig, fou_stationary

np.seterr(all="raise", under="ignore")

hypothesis.settings.register_profile("default", max_examples=40, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=8, deadline=None)
hypothesis.settings.load_profile("default")


def constant_path(grid: TimeGrid, c: float) -> SamplePath:
    return SamplePath(grid, np.full(grid.n + 1, float(c)))


def fou_path(window: TimeGrid, H: float = 0.75, seed: int = 0, stream: int = 0, tail: float = 20.0) -> SamplePath:
    h = window.h
    m = round(tail / h)
    noise = sample_fbm(TimeGrid(window.t0 - m * h, window.t1, window.n + m), H, RngSeed(seed, stream))
    return fou_stationary(noise, FouConfig(tail_length=m * h), window)


@pytest.fixture
def unit_grid():
    return TimeGrid(0.0, 1.0, 64)


@pytest.fixture(scope="session")
def fou_pair():
    w = TimeGrid(0.0, 20.0, 2560)
    return w, fou_path(w, seed=11, stream=0), fou_path(w, seed=11, stream=1)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.REPORT:
        terminalreporter.section("acceptance criteria")
        for line in sorted(mod.REPORT, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
