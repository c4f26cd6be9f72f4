"""Scenario description and trial-data generation for range-spread targets.

Data model: ``N`` coherent pulses, ``L`` primary range bins that may hold the
target and ``K`` signal-free secondary bins. Under H1 primary bin ``j`` holds
``alpha_j * p(theta) + n_j``; every noise column is circular complex Gaussian
with covariance ``sigma2 * rho**|m - n|``.
"""

from __future__ import annotations

import dataclasses
import enum
import json
import logging
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .linalg import cholesky

log = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi

# Energy fraction per scatterer bin for the four target extents used in the
# reference experiments.
ENERGY_PROFILES: dict[int, tuple[float, ...]] = {
    8: (0, 1 / 16, 0, 1 / 2, 1 / 4, 1 / 16, 1 / 8, 0),
    12: (0, 1 / 16, 1 / 16, 0, 0, 0, 1 / 16, 1 / 16, 1 / 2, 1 / 4, 0, 0),
    16: (0, 0, 1 / 32, 1 / 32, 0, 1 / 2, 1 / 4, 0, 1 / 32, 0, 1 / 16, 1 / 32, 0, 1 / 16, 0, 0),
    20: (0, 1 / 10) * 10,
}


class TargetModel(str, enum.Enum):
    STEADY = "Steady"
    SWERLING_II = "SwerlingII"
    SWERLING_IV = "SwerlingIV"
    ABSENT = "Absent"


class Hypothesis(enum.IntEnum):
    H0 = 0
    H1 = 1


@dataclass(frozen=True)
class Scenario:
    n_pulses: int = 8
    n_primary: int = 8
    n_secondary: int = 128
    one_lag_corr: float = 0.4
    noise_power: float = 1.0
    doppler_hz: float = 10e3
    pri_s: float = 40e-6
    target_model: TargetModel = TargetModel.STEADY
    energy_profile: tuple[float, ...] = field(default=ENERGY_PROFILES[8])
    snr_db: float = 0.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "target_model", TargetModel(self.target_model))
        object.__setattr__(self, "energy_profile", tuple(float(e) for e in self.energy_profile))
        if self.n_pulses < 1 or self.n_primary < 1:
            raise ValueError("n_pulses and n_primary must be positive")
        if self.n_secondary < self.n_pulses:
            raise ValueError(
                f"n_secondary ({self.n_secondary}) must be >= n_pulses ({self.n_pulses}) "
                "for the secondary sample matrix to be invertible"
            )
        if not 0.0 <= self.one_lag_corr < 1.0:
            raise ValueError(f"one_lag_corr must lie in [0, 1), got {self.one_lag_corr}")
        if self.one_lag_corr >= 0.999:
            log.warning("one_lag_corr=%g: C is nearly singular; results are outside the validated range",
                        self.one_lag_corr)
        if not self.noise_power > 0.0:
            raise ValueError("noise_power must be positive")
        if len(self.energy_profile) != self.n_primary:
            raise ValueError(
                f"energy_profile has {len(self.energy_profile)} entries, expected {self.n_primary}"
            )
        if min(self.energy_profile) < 0.0:
            raise ValueError("energy_profile entries must be nonnegative")
        if abs(math.fsum(self.energy_profile) - 1.0) > 1e-12:
            raise ValueError("energy_profile must sum to 1")

    @classmethod
    def reference(cls, n_primary: int = 8, **overrides) -> "Scenario":
        """Scenario with the reference radar parameters and the matching energy profile."""
        profile = overrides.pop("energy_profile", ENERGY_PROFILES[n_primary])
        return cls(n_primary=n_primary, energy_profile=profile, **overrides)

    def replace(self, **changes) -> "Scenario":
        if "n_primary" in changes and "energy_profile" not in changes:
            changes["energy_profile"] = ENERGY_PROFILES[changes["n_primary"]]
        return dataclasses.replace(self, **changes)

    @property
    def theta(self) -> float:
        """Per-pulse Doppler phase advance in [0, 2*pi)."""
        return float(np.mod(TWO_PI * self.doppler_hz * self.pri_s, TWO_PI))

    def to_dict(self) -> dict[str, Any]:
        out = dataclasses.asdict(self)
        out["target_model"] = self.target_model.value
        out["energy_profile"] = list(self.energy_profile)
        return out

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Scenario":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ValueError(f"unknown scenario keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, text: str) -> "Scenario":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class TrialData:
    primary: np.ndarray  # N x L
    secondary: np.ndarray  # N x K
    truth: Hypothesis
    theta_true: float


def steering_vector(theta: float, n: int) -> np.ndarray:
    """Doppler phase ramp ``exp(1j * k * theta)`` for ``k = 0..n-1``."""
    if n < 1:
        raise ValueError("steering vector needs at least one pulse")
    theta = float(np.mod(theta, TWO_PI))
    return np.exp(1j * theta * np.arange(n))


def noise_covariance(rho: float, sigma2: float, n: int) -> np.ndarray:
    if not 0.0 <= rho < 1.0:
        raise ValueError(f"rho must lie in [0, 1), got {rho}")
    if not sigma2 > 0.0:
        raise ValueError("sigma2 must be positive")
    lags = np.abs(np.subtract.outer(np.arange(n), np.arange(n)))
    return (sigma2 * np.power(rho, lags)).astype(complex)


def standard_complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """Unit-power circular complex normal draws (real and imaginary variance 1/2)."""
    re = rng.standard_normal(shape)
    im = rng.standard_normal(shape)
    return (re + 1j * im) * np.sqrt(0.5)


def sample_noise(cov, count: int, rng: np.random.Generator, *, factor=None) -> np.ndarray:
    """Draw ``count`` i.i.d. noise columns with covariance ``cov``.

    ``factor`` may carry a precomputed lower Cholesky factor of ``cov``.
    """
    g = cholesky(cov) if factor is None else factor
    return g @ standard_complex_normal(rng, (g.shape[0], count))


def snr_to_power(scenario: Scenario) -> float:
    """Total (average) range-profile power ``sum |alpha_j|^2`` for ``scenario.snr_db``.

    With ``||p||^2 = N`` the per-bin SNR definition reduces to
    ``10**(snr_db/10) * L * sigma2``.
    """
    return 10.0 ** (scenario.snr_db / 10.0) * scenario.n_primary * scenario.noise_power


def fluctuation_gain(model: TargetModel, rng: np.random.Generator) -> float:
    if model is TargetModel.STEADY:
        return 1.0
    if model is TargetModel.SWERLING_II:
        return float(rng.exponential(1.0))  # chi-squared, 2 dof, mean 1
    if model is TargetModel.SWERLING_IV:
        return float(rng.gamma(2.0, 0.5))  # chi-squared, 4 dof, mean 1
    return 0.0


def generate_rp(scenario: Scenario, rng: np.random.Generator) -> np.ndarray:
    """Range profile for one trial.

    All scatterers share one fluctuation gain; phases are i.i.d. uniform.
    """
    L = scenario.n_primary
    if scenario.target_model is TargetModel.ABSENT:
        return np.zeros(L, dtype=complex)
    gain = fluctuation_gain(scenario.target_model, rng)
    phases = rng.uniform(0.0, TWO_PI, L)
    power = gain * snr_to_power(scenario) * np.asarray(scenario.energy_profile)
    return np.sqrt(power) * np.exp(1j * phases)


def make_trial(
    scenario: Scenario,
    hypothesis: Hypothesis,
    rng: np.random.Generator,
    *,
    factor=None,
) -> TrialData:
    """One draw of primary and secondary data under ``hypothesis``.

    The noise for all ``L + K`` columns is drawn first so that H0 and H1
    trials built from the same stream share their noise.
    """
    N, L, K = scenario.n_pulses, scenario.n_primary, scenario.n_secondary
    if factor is None:
        factor = cholesky(noise_covariance(scenario.one_lag_corr, scenario.noise_power, N))
    noise = sample_noise(None, L + K, rng, factor=factor)
    primary = noise[:, :L]
    secondary = noise[:, L:]
    theta = scenario.theta
    if Hypothesis(hypothesis) is Hypothesis.H1:
        alpha = generate_rp(scenario, rng)
        primary = primary + np.outer(steering_vector(theta, N), alpha)
    return TrialData(primary, secondary, Hypothesis(hypothesis), theta)


def trial_rng(seed: int, index: int, stream: int = 0) -> np.random.Generator:
    """Counter-based generator for trial ``index`` of stream ``stream``.

    Philox is keyed by ``(seed, stream)`` and the trial index occupies the
    top word of the counter, so each trial owns a disjoint block of the
    sequence and trials can be generated in any order.
    """
    key = (int(seed) % 2**64) | (int(stream) % 2**64) << 64
    bitgen = np.random.Philox(key=key, counter=[0, 0, 0, int(index)])
    return np.random.Generator(bitgen)
