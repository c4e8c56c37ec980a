import numpy as np
import pytest
from hypothesis import settings

from utilcp import ScoreMatrix

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


def random_probs(rng, n, K, concentration=0.5):
    P = rng.dirichlet(np.full(K, concentration), size=n)
    P = np.maximum(P, 1e-12)
    return P / P.sum(axis=1, keepdims=True)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_matrix(rng):
    P = random_probs(rng, 200, 6)
    labels = np.array([rng.choice(6, p=p) for p in P])
    return ScoreMatrix.from_arrays(P, labels)


_ACCEPTANCE: dict[int, str] = {}


@pytest.fixture(scope="session")
def acceptance():
    """Record one PASS/FAIL line per acceptance criterion."""

    def record(number, title, passed, detail):
        _ACCEPTANCE[number] = f"criterion {number:>2} [{'PASS' if passed else 'FAIL'}] {title}: {detail}"
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for number in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[number])
