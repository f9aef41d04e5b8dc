import time
from importlib import resources

import pytest

from cotrans import metrics, run

import support


def bundled_scenario(name: str):
    """Filesystem path of a scenario shipped inside the package."""
    return str(resources.files("cotrans") / "scenarios" / name)


@pytest.fixture(scope="session")
def set1_result():
    """Full circular-command run (k_p = 1.0), timed after kernel warmup.

    Returns (log, summary, runtime_seconds). Shared across the suite so the
    60 s horizon is integrated once.
    """
    run(support.circle_config(t_end=0.01))  # warm the compiled kernels
    cfg = support.circle_config()
    started = time.perf_counter()
    log = run(cfg)
    runtime = time.perf_counter() - started
    return log, metrics(log), runtime


@pytest.fixture(scope="session")
def set2_result():
    log = run(support.circle_config(k_p=0.1))
    return log, metrics(log)


@pytest.fixture(scope="session")
def equilibrium_log():
    return run(support.equilibrium_config())
