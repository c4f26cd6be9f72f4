"""Generate one radar trial and look at its pieces.

Run: python3 demos/scene_generation.py
"""
import numpy as np

from rsdetect import scene

sc = scene.Scenario.reference(snr_db=-5.0, seed=7)
print(sc.to_json(indent=2))
print("Doppler phase per pulse: %.4f rad" % sc.theta)

rng = scene.trial_rng(sc.seed, index=0, stream=1)
trial = scene.make_trial(sc, scene.Hypothesis.H1, rng)
print("primary", trial.primary.shape, "secondary", trial.secondary.shape)
alpha = scene.generate_rp(sc, np.random.default_rng(1))
print("one range profile, energy per bin:", np.round(np.abs(alpha) ** 2 / np.sum(np.abs(alpha) ** 2), 4))
print("energy profile it is drawn from:  ", sc.energy_profile)

# the secondary data estimate the exponential-correlation covariance
cov = scene.noise_covariance(sc.one_lag_corr, sc.noise_power, sc.n_pulses)
est = trial.secondary @ trial.secondary.conj().T / sc.n_secondary
print("first row of C:      ", np.round(cov[0, :4].real, 3))
print("first row of S/K:    ", np.round(est[0, :4].real, 3))

# unknown keys in a config are refused rather than ignored
try:
    scene.Scenario.from_json('{"n_pulses": 8, "snrDb": 3}')
except ValueError as exc:
    print("bad config:", exc)
