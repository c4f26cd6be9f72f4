import numpy as np
import pytest

from rsdetect import scene


def random_hermitian(rng, n):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return a + a.conj().T


def random_pd(rng, n):
    a = rng.standard_normal((n, 2 * n)) + 1j * rng.standard_normal((n, 2 * n))
    return a @ a.conj().T


def random_complex(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def random_trial(rng, n=8, l=8, k=128, h1=True, snr_db=None, rho=0.4):
    profile = scene.ENERGY_PROFILES.get(l, (1.0 / l,) * l)
    snr = float(rng.uniform(-12, 0)) if snr_db is None else snr_db
    sc = scene.Scenario(
        n_pulses=n, n_primary=l, n_secondary=k, one_lag_corr=rho,
        energy_profile=profile, snr_db=snr,
    )
    return scene.make_trial(sc, scene.Hypothesis(int(h1)), rng)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, echoed after the run even when output is captured
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
