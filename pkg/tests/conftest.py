import os

import hypothesis
import numpy as np
import pytest

from lcris.config import assemble_scenario_channels, baseline_scenario
from lcris.optimizer import benchmark_optimize, build_kernels, optimize

hypothesis.settings.register_profile("default", max_examples=60, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.register_profile("thorough", max_examples=500, deadline=None)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def scenario():
    return baseline_scenario()


@pytest.fixture(scope="session")
def channels(scenario):
    return assemble_scenario_channels(scenario, seed=0)


@pytest.fixture(scope="session")
def kernels(scenario, channels):
    return build_kernels(channels, scenario.rf.P_t)


@pytest.fixture(scope="session")
def kernels_direct(scenario, channels):
    return build_kernels(channels, scenario.rf.P_t, include_direct=True)


@pytest.fixture(scope="session")
def optimized(scenario, kernels):
    """Designs for both cyclic orders of the three default users, seed 0."""
    o = scenario.optimizer
    return {order: optimize(kernels, scenario.lc, scenario.rf.gamma_thr, order=order,
                            alpha=o.alpha, I_max=o.I_max, t_max_init=o.t_max_init_s,
                            delta_t=o.delta_t, L=o.L, lambda0=o.lambda0)
            for order in ((0, 1, 2), (0, 2, 1))}


@pytest.fixture(scope="session")
def benchmark(scenario, kernels):
    return benchmark_optimize(kernels, scenario.lc)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_CRITERIA = {}


@pytest.fixture
def criterion():
    """Record ``(number, passed, detail)`` for the acceptance summary."""
    def record(number: int, passed: bool, detail: str) -> bool:
        line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
        _CRITERIA[number] = line
        print(line)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.write_sep("=", "acceptance criteria")
        for n in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[n])
