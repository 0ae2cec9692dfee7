import numpy as np
import pytest

from mjconsensus import benchmark
from mjconsensus.graphs import spectral_constants
from mjconsensus.markov import stationary_distribution


@pytest.fixture(scope="session")
def heli():
    """Benchmark plant, ensemble, generator, spectral constants and pi_bar."""
    e = benchmark.ensemble()
    g = benchmark.generator()
    return dict(
        plant=benchmark.plant(), ensemble=e, generator=g,
        sc=spectral_constants(e), pi_bar=stationary_distribution(g).pi_bar,
    )


@pytest.fixture(scope="session")
def heli_reduced():
    return benchmark.reduced_protocol()


@pytest.fixture(scope="session")
def heli_full():
    return benchmark.full_protocol()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for k in sorted(results):
            terminalreporter.write_line(results[k])
