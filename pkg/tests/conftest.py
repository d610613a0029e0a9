import numpy as np
import pytest

from wavegest.dataset_io import Dataset, Demonstration


def random_conjugate_weights(rng, D, K, scale=1.0):
    """Random conjugate-symmetric (D, 2K+1) coefficient matrix."""
    pos = scale * (rng.standard_normal((D, K)) + 1j * rng.standard_normal((D, K)))
    dc = scale * rng.standard_normal((D, 1))
    return np.hstack([np.conj(pos[:, ::-1]), dc.astype(complex), pos])


def band_limited(rng, T, D, K, dc=True):
    """Real (T, D) signal with energy only at harmonics |k| <= K."""
    t = np.arange(T)[:, None]
    y = rng.standard_normal(D) if dc else np.zeros(D)
    y = np.tile(y, (T, 1))
    for k in range(1, K + 1):
        a = rng.standard_normal(D)
        phi = rng.uniform(-np.pi, np.pi, D)
        y = y + a * np.cos(2 * np.pi * k * t / T + phi)
    return y


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_dataset(rng):
    demos = []
    for m in range(6):
        T = 80 + 4 * m
        demos.append(Demonstration(band_limited(rng, T, 3, 6)
                                   + 0.01 * rng.standard_normal((T, 3)),
                                   0.02, f"d{m}"))
    return Dataset(tuple(demos))


ACCEPTANCE_RESULTS = []


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance.py::" in report.nodeid:
        name = report.nodeid.split("::")[-1]
        ACCEPTANCE_RESULTS.append((name, report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in ACCEPTANCE_RESULTS:
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{status}  {name}")
