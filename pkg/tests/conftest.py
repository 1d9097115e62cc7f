import inspect
import os
import time

import pytest
from hypothesis import settings

from price_lab import cli, mu_engine, price

settings.register_profile("repro", derandomize=True, deadline=None)
settings.register_profile("stress", max_examples=1000, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "repro"))

_START = time.perf_counter()
PROFILE_RUNS = []
ACCEPTANCE_LINES = []

_original = mu_engine.growth_profile
_signature = inspect.signature(_original)


def _recording_profile(*args, **kwargs):
    samples = _original(*args, **kwargs)
    bound = _signature.bind(*args, **kwargs)
    bound.apply_defaults()
    f = bound.arguments["f"]
    tol = bound.arguments["spec"].target_rel_tol
    PROFILE_RUNS.append((type(f).__name__, f.space, tol,
                         [s.divergence_residual for s in samples]))
    return samples


for _mod in (mu_engine, price, cli):
    _mod.growth_profile = _recording_profile


def elapsed() -> float:
    return time.perf_counter() - _START


def record(criterion: str, ok: bool, detail: str = "") -> None:
    line = f"criterion {criterion}: {'PASS' if ok else 'FAIL'}  {detail}".rstrip()
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_configure(config):
    config.addinivalue_line("markers", "run_last: run after every other test")


def pytest_collection_modifyitems(items):
    items.sort(key=lambda item: item.get_closest_marker("run_last") is not None)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def profile_runs():
    return PROFILE_RUNS
