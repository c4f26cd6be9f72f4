"""Monte Carlo harness: threshold calibration, Pd curves, CFAR scans, timing.

Trials are processed in fixed index blocks. Trial ``i`` of a run always draws
from ``trial_rng(seed, i, stream)``, so a run is reproducible and its output
does not depend on how blocks are spread over worker processes.
"""

from __future__ import annotations

import csv
import hashlib
import io
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import stats as sps

from . import sdpsolver
from .detectors import (
    DetectorId,
    SufficientStats,
    mrs_stat,
    os_glrt_stat,
    sufficient_stats,
)
from .linalg import cholesky
from .scene import Hypothesis, Scenario, make_trial, noise_covariance, steering_vector, trial_rng

log = logging.getLogger(__name__)

BLOCK = 500
Z95 = 1.959963984540054
H0_STREAM = 0
H1_STREAM = 1
TIMING_STREAM = 7
TIMING_BLOCK = 25
DEFAULT_DETECTORS = (DetectorId.OS_GLRT, DetectorId.MRS, DetectorId.SDP)


def wilson_interval(successes: int, trials: int, z: float = Z95) -> tuple[float, float]:
    if trials <= 0:
        raise ValueError("trials must be positive")
    p = successes / trials
    denom = 1.0 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    lo = 0.0 if successes == 0 else max(0.0, centre - half)  # exact at the ends
    hi = 1.0 if successes == trials else min(1.0, centre + half)
    return lo, hi


def fmt(x: float) -> str:
    return f"{x:.9g}"


# ----------------------------------------------------------------------------
# trial engine


def _evaluate_block(args) -> dict[DetectorId, np.ndarray]:
    scenario, hypothesis, detectors, start, stop, seed, stream, assumed_theta, sdp_tol = args
    N, L, K = scenario.n_pulses, scenario.n_primary, scenario.n_secondary
    factor = cholesky(noise_covariance(scenario.one_lag_corr, scenario.noise_power, N))
    count = stop - start
    Z = np.empty((count, N, L), dtype=complex)
    Z_S = np.empty((count, N, K), dtype=complex)
    for j, idx in enumerate(range(start, stop)):
        trial = make_trial(scenario, hypothesis, trial_rng(seed, idx, stream), factor=factor)
        Z[j] = trial.primary
        Z_S[j] = trial.secondary
    stats = sufficient_stats(Z, Z_S)
    out: dict[DetectorId, np.ndarray] = {}
    for det in detectors:
        if det is DetectorId.OS_GLRT:
            theta = scenario.theta if assumed_theta is None else assumed_theta
            out[det] = np.asarray(os_glrt_stat(stats, steering_vector(theta, N)))
        elif det is DetectorId.MRS:
            out[det] = np.asarray(mrs_stat(stats))
        elif det is DetectorId.GRID_ORACLE:
            out[det] = np.asarray(sdpsolver.grid_oracle(stats).value)
        elif det is DetectorId.SDP:
            moments = sdpsolver.build_moment_vectors(stats)
            sol = sdpsolver.solve_sdp_batch(moments, tol=sdp_tol)
            values = np.array(sol.t_c, dtype=float)
            bad = sol.status != sdpsolver.SdpStatus.OPTIMAL.value
            if np.any(bad):
                log.warning("%d SDP solves did not converge; using the grid oracle", int(bad.sum()))
                sub = sdpsolver.MomentVectors(moments.x[bad], moments.y[bad])
                values[bad] = sdpsolver.grid_oracle(sub).value
            out[det] = values
        else:
            raise ValueError(f"unknown detector {det}")
    return out


def simulate(
    scenario: Scenario,
    hypothesis: Hypothesis,
    trials: int,
    detectors: Sequence[DetectorId] = DEFAULT_DETECTORS,
    *,
    seed: int | None = None,
    stream: int | None = None,
    assumed_theta: float | None = None,
    threads: int = 1,
    sdp_tol: float = 1e-7,
) -> dict[DetectorId, np.ndarray]:
    """Statistic samples of ``detectors`` over ``trials`` independent trials.

    Every detector sees the same trial data. ``assumed_theta`` replaces the
    true Doppler phase in the OS-GLRT steering vector.
    """
    detectors = tuple(DetectorId(d) for d in detectors)
    seed = scenario.seed if seed is None else seed
    if stream is None:
        stream = H1_STREAM if Hypothesis(hypothesis) is Hypothesis.H1 else H0_STREAM
    jobs = [
        (scenario, Hypothesis(hypothesis), detectors, s, min(s + BLOCK, trials), seed, stream,
         assumed_theta, sdp_tol)
        for s in range(0, trials, BLOCK)
    ]
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(_evaluate_block, jobs))
    else:
        parts = [_evaluate_block(job) for job in jobs]
    return {d: np.concatenate([p[d] for p in parts]) for d in detectors}


# ----------------------------------------------------------------------------
# thresholds


@dataclass(frozen=True)
class Threshold:
    detector_id: DetectorId
    value: float
    pfa_target: float
    trials: int
    ci95: tuple[float, float]  # Wilson interval on the achieved false-alarm rate
    value_ci95: tuple[float, float]  # order-statistic interval on the threshold itself
    exceedances: int

    @property
    def achieved_pfa(self) -> float:
        return self.exceedances / self.trials

    def overlaps(self, other: "Threshold") -> bool:
        lo = max(self.value_ci95[0], other.value_ci95[0])
        hi = min(self.value_ci95[1], other.value_ci95[1])
        return lo <= hi


def threshold_from_samples(samples, pfa: float, detector_id=DetectorId.MRS) -> Threshold:
    """Threshold at the ``ceil(trials * pfa)``-th largest H0 statistic.

    ``value_ci95`` brackets the ``1 - pfa`` quantile between two order
    statistics whose ranks come from the binomial law of the exceedance count.
    """
    x = np.sort(np.asarray(samples, dtype=float))[::-1]
    n = x.size
    if not 0.0 < pfa < 1.0:
        raise ValueError("pfa must lie in (0, 1)")
    if n < math.ceil(100.0 / pfa - 1e-9):
        raise ValueError(f"{n} trials are too few for pfa={pfa}; need at least {100 / pfa:.0f}")
    k = max(1, math.ceil(n * pfa - 1e-9))
    value = float(x[k - 1])
    exceed = int(np.count_nonzero(x > value))
    k_lo = max(1, int(sps.binom.ppf(0.025, n, pfa)))
    k_hi = min(n, int(sps.binom.ppf(0.975, n, pfa)) + 1)
    return Threshold(
        DetectorId(detector_id),
        value,
        pfa,
        n,
        wilson_interval(exceed, n),
        (float(x[k_hi - 1]), float(x[k_lo - 1])),
        exceed,
    )


def calibrate_threshold(
    detector_id: DetectorId,
    scenario: Scenario,
    pfa: float,
    trials: int,
    **kwargs,
) -> Threshold:
    """Empirical threshold of one detector from ``trials`` H0 trials of ``scenario``."""
    detector_id = DetectorId(detector_id)
    if trials < math.ceil(100.0 / pfa - 1e-9):
        raise ValueError(f"need at least {100 / pfa:.0f} trials for pfa={pfa}")
    samples = simulate(scenario, Hypothesis.H0, trials, (detector_id,), **kwargs)[detector_id]
    return threshold_from_samples(samples, pfa, detector_id)


def calibrate_all(
    scenario: Scenario,
    pfa: float,
    trials: int,
    detectors: Sequence[DetectorId] = DEFAULT_DETECTORS,
    **kwargs,
) -> tuple[dict[DetectorId, Threshold], dict[DetectorId, np.ndarray]]:
    """Thresholds for several detectors from one shared set of H0 trials."""
    samples = simulate(scenario, Hypothesis.H0, trials, detectors, **kwargs)
    return {d: threshold_from_samples(s, pfa, d) for d, s in samples.items()}, samples


# ----------------------------------------------------------------------------
# detection curves


@dataclass
class Curve:
    snr_db: np.ndarray
    pd: np.ndarray
    ci_lo: np.ndarray
    ci_hi: np.ndarray

    def snr_at(self, level: float = 0.5) -> float:
        """SNR of the first upward crossing of ``level``, linearly interpolated."""
        pd = self.pd
        above = np.nonzero(pd >= level)[0]
        if above.size == 0 or above[0] == 0:
            return math.nan
        i = above[0]
        x0, x1 = self.snr_db[i - 1], self.snr_db[i]
        y0, y1 = pd[i - 1], pd[i]
        return float(x0 + (level - y0) * (x1 - x0) / (y1 - y0))


@dataclass
class DetectionReport:
    scenario_digest: str
    trials: int
    curves: dict[DetectorId, Curve] = field(default_factory=dict)
    thresholds: dict[DetectorId, Threshold] = field(default_factory=dict)
    seconds_per_statistic: dict[DetectorId, float] = field(default_factory=dict)

    def snr_at(self, detector_id, level: float = 0.5) -> float:
        return self.curves[DetectorId(detector_id)].snr_at(level)

    def rows(self) -> Iterable[list[str]]:
        for det, c in self.curves.items():
            for s, p, lo, hi in zip(c.snr_db, c.pd, c.ci_lo, c.ci_hi):
                yield [det.value, fmt(s), fmt(p), fmt(lo), fmt(hi), str(self.trials)]

    def to_csv(self) -> str:
        return write_csv(["detector", "snr_db", "pd", "ci_lo", "ci_hi", "trials"], self.rows())


def scenario_digest(scenario: Scenario) -> str:
    return hashlib.sha256(scenario.to_json(sort_keys=True).encode()).hexdigest()[:16]


def detection_curves(
    scenario: Scenario,
    thresholds: dict[DetectorId, Threshold],
    snr_grid: Sequence[float],
    trials: int,
    *,
    assumed_theta: float | None = None,
    **kwargs,
) -> DetectionReport:
    """Pd versus SNR for every detector in ``thresholds`` on shared H1 trials.

    All SNR points reuse the same per-trial noise and range-profile draws,
    so the curves differ only through the signal amplitude.
    """
    detectors = tuple(thresholds)
    report = DetectionReport(scenario_digest(scenario), trials, thresholds=dict(thresholds))
    pd = {d: [] for d in detectors}
    elapsed = {d: 0.0 for d in detectors}
    for snr in snr_grid:
        sc = scenario.replace(snr_db=float(snr))
        for det in detectors:
            start = time.perf_counter()
            # each detector on its own pass so the wall-clock split is per statistic
            samples = simulate(sc, Hypothesis.H1, trials, (det,), assumed_theta=assumed_theta, **kwargs)[det]
            elapsed[det] += time.perf_counter() - start
            hits = int(np.count_nonzero(samples > thresholds[det].value))
            pd[det].append((hits / trials, *wilson_interval(hits, trials)))
    grid = np.asarray(snr_grid, dtype=float)
    for det in detectors:
        arr = np.asarray(pd[det])
        report.curves[det] = Curve(grid, arr[:, 0], arr[:, 1], arr[:, 2])
        report.seconds_per_statistic[det] = elapsed[det] / (trials * len(grid))
    return report


def pd_curve(
    detector_id: DetectorId,
    scenario: Scenario,
    threshold: Threshold,
    snr_grid: Sequence[float],
    trials: int,
    **kwargs,
) -> DetectionReport:
    return detection_curves(scenario, {DetectorId(detector_id): threshold}, snr_grid, trials, **kwargs)


def mismatch_experiment(
    scenario: Scenario,
    assumed_doppler_hz: float,
    thresholds: dict[DetectorId, Threshold],
    snr_grid: Sequence[float],
    trials: int,
    **kwargs,
) -> DetectionReport:
    """Detection curves when the OS-GLRT is steered to ``assumed_doppler_hz``.

    ``scenario.doppler_hz`` is the true Doppler; SDP and MRS never use it.
    """
    assumed_theta = float(np.mod(2 * np.pi * assumed_doppler_hz * scenario.pri_s, 2 * np.pi))
    return detection_curves(scenario, thresholds, snr_grid, trials, assumed_theta=assumed_theta, **kwargs)


# ----------------------------------------------------------------------------
# CFAR scan


@dataclass(frozen=True)
class CfarRow:
    rho: float
    sigma2: float
    threshold: Threshold
    ks_statistic: float
    ks_pvalue: float


@dataclass
class CfarScan:
    detector_id: DetectorId
    rows: list[CfarRow]
    samples: list[np.ndarray]

    def all_overlap(self) -> bool:
        th = [r.threshold for r in self.rows]
        return all(a.overlaps(b) for i, a in enumerate(th) for b in th[i + 1:])

    def min_ks_pvalue(self) -> float:
        return min(r.ks_pvalue for r in self.rows[1:]) if len(self.rows) > 1 else 1.0

    def to_csv(self) -> str:
        return write_csv(
            ["detector", "rho", "sigma2", "pfa", "threshold", "pfa_lo", "pfa_hi"],
            (
                [self.detector_id.value, fmt(r.rho), fmt(r.sigma2), fmt(r.threshold.pfa_target),
                 fmt(r.threshold.value), fmt(r.threshold.ci95[0]), fmt(r.threshold.ci95[1])]
                for r in self.rows
            ),
        )


def cfar_scan(
    detector_id: DetectorId,
    rho_list: Sequence[float],
    sigma2_list: Sequence[float],
    pfa: float,
    trials: int,
    *,
    scenario: Scenario | None = None,
    paired_seeds: bool = False,
    **kwargs,
) -> CfarScan:
    """H0 thresholds across noise covariances plus a two-sample KS test against the reference.

    The reference is the first ``(rho, sigma2)`` pair with ``rho == 0`` (or the
    first pair if none). With ``paired_seeds`` every covariance reuses the same
    white draws; otherwise each pair gets its own stream.
    """
    detector_id = DetectorId(detector_id)
    base = scenario or Scenario.reference()
    pairs = [(float(r), float(s)) for r in rho_list for s in sigma2_list]
    ref = next((i for i, (r, _) in enumerate(pairs) if r == 0.0), 0)
    pairs.insert(0, pairs.pop(ref))
    samples, ths = [], []
    for i, (rho, s2) in enumerate(pairs):
        sc = base.replace(one_lag_corr=rho, noise_power=s2)
        stream = H0_STREAM if paired_seeds else 1000 + i
        x = simulate(sc, Hypothesis.H0, trials, (detector_id,), stream=stream, **kwargs)[detector_id]
        samples.append(x)
        ths.append(threshold_from_samples(x, pfa, detector_id))
    rows = []
    for (rho, s2), th, x in zip(pairs, ths, samples):
        ks = sps.ks_2samp(samples[0], x)
        rows.append(CfarRow(rho, s2, th, float(ks.statistic), float(ks.pvalue)))
    return CfarScan(detector_id, rows, samples)


# ----------------------------------------------------------------------------
# timing


@dataclass(frozen=True)
class TimingRow:
    detector_id: DetectorId
    n_primary: int
    mean_seconds: float
    repetitions: int


def _shared(Z, Z_S) -> SufficientStats:
    stats = sufficient_stats(Z, Z_S)
    stats.x_inv  # materialise the shared inverse
    return stats


def _specific(det: DetectorId, stats: SufficientStats, p):
    if det is DetectorId.OS_GLRT:
        return os_glrt_stat(stats, p)
    if det is DetectorId.MRS:
        return mrs_stat(stats)
    if det is DetectorId.SDP:
        return sdpsolver.solve_sdp(sdpsolver.build_problem(stats)).t_c
    return sdpsolver.grid_oracle(stats).value


def timing_bench(
    l_list: Sequence[int] = (8, 12, 16, 20),
    repetitions: int = 1000,
    detectors: Sequence[DetectorId] = DEFAULT_DETECTORS,
    *,
    scenario: Scenario | None = None,
    seed: int = 0,
) -> list[TimingRow]:
    """Mean wall-clock of one statistic evaluation, from raw data to value.

    Trials are generated up front and processed in blocks. Within a block
    each detector runs alone over the block's trials after one untimed
    warm-up call, so a cheap detector is not timed on caches left cold by an
    expensive one; the detector order rotates from block to block so slow
    drifts in machine speed hit every detector alike. Every evaluation
    includes the computation shared by all detectors (``S``, its Cholesky
    factor and inverse, upsilon, ``X^-1``).
    """
    if repetitions < 100:
        raise ValueError("repetitions must be at least 100")
    base = scenario or Scenario.reference()
    dets = [DetectorId(d) for d in detectors]
    rows = []
    for L in l_list:
        sc = base.replace(n_primary=L)
        factor = cholesky(noise_covariance(sc.one_lag_corr, sc.noise_power, sc.n_pulses))
        p = steering_vector(sc.theta, sc.n_pulses)
        trials = [
            make_trial(sc, Hypothesis.H1, trial_rng(seed, r, TIMING_STREAM), factor=factor)
            for r in range(repetitions)
        ]
        totals = dict.fromkeys(dets, 0.0)
        for b, lo in enumerate(range(0, repetitions, TIMING_BLOCK)):
            block = trials[lo : lo + TIMING_BLOCK]
            shift = b % len(dets)
            for det in dets[shift:] + dets[:shift]:
                _specific(det, _shared(block[0].primary, block[0].secondary), p)
                for trial in block:
                    start = time.perf_counter()
                    _specific(det, _shared(trial.primary, trial.secondary), p)
                    totals[det] += time.perf_counter() - start
        rows.extend(TimingRow(d, L, totals[d] / repetitions, repetitions) for d in dets)
    return rows


def timing_csv(rows: Sequence[TimingRow]) -> str:
    return write_csv(
        ["detector", "L", "mean_seconds", "repetitions"],
        ([r.detector_id.value, str(r.n_primary), fmt(r.mean_seconds), str(r.repetitions)] for r in rows),
    )


def write_csv(header: Sequence[str], rows: Iterable[Sequence[str]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()
