import numpy as np
import pytest

from wegnerflow.core_model import QuadraticCoefficients, Regime, classify_regime


def _magnitude(rng):
    return rng.uniform(0.1, 10.0) * rng.choice([-1.0, 1.0])


def random_params(rng, regime=None):
    """Real (omega0, lambda0, v0) with |omega0|, |lambda0| in [0.1, 10]."""
    while True:
        c = QuadraticCoefficients.physical(_magnitude(rng), _magnitude(rng), rng.uniform(-5, 5))
        r = classify_regime(c)
        if r in (Regime.BOUNDED, Regime.UNBOUNDED) and (regime is None or r is regime):
            return c


def random_hermitian(rng, dim):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return (a + a.conj().T) / 2


@pytest.fixture
def rng():
    return np.random.default_rng(20181115)


def pytest_terminal_summary(terminalreporter):
    import test_acceptance

    if test_acceptance.REPORT:
        terminalreporter.section("acceptance criteria")
        for line in sorted(test_acceptance.REPORT, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
