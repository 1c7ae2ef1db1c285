import functools

import pytest

from movanc.engine import run_scenario
from movanc.scenario import SCENARIO_DIR, parse_scenario_file


@functools.lru_cache(maxsize=None)
def scenario(name, *overrides):
    return parse_scenario_file(SCENARIO_DIR / f"{name}.scenario", overrides)


@functools.lru_cache(maxsize=None)
def run(name, *overrides):
    """Cached run of a shipped scenario; several test modules share the long runs."""
    return run_scenario(scenario(name, *overrides))


@pytest.fixture
def rng():
    import numpy as np
    return np.random.default_rng(12345)


# acceptance verdict lines, repeated at the end of the session so they show
# up even when output capture is on
VERDICTS = []


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in VERDICTS:
            terminalreporter.write_line(line)
