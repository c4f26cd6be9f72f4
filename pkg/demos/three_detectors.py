"""OS-GLRT, SDP and MRS statistics on the same trials.

The three statistics are nested: the known-Doppler OS-GLRT never exceeds the
SDP value (maximised over Doppler), which never exceeds the MRS value
(maximised over every steering direction).

Run: python3 demos/three_detectors.py
"""
import numpy as np

from rsdetect import scene, sdpsolver
from rsdetect.detectors import mrs_stat, os_glrt_stat, sufficient_stats

sc = scene.Scenario.reference(snr_db=-8.0)
p = scene.steering_vector(sc.theta, sc.n_pulses)
print(f"{'trial':>5} {'hyp':>3} {'OS':>9} {'SDP':>9} {'MRS':>9}  theta_hat")
for i in range(8):
    hyp = scene.Hypothesis(i % 2)
    t = scene.make_trial(sc, hyp, scene.trial_rng(1, i))
    st = sufficient_stats(t.primary, t.secondary)
    sdp = sdpsolver.sdp_stat(st)
    print(f"{i:5d} {hyp.name:>3} {os_glrt_stat(st, p):9.5f} {sdp.value:9.5f} {mrs_stat(st):9.5f}  {sdp.theta_hat:.3f}")
print("true theta:", round(sc.theta, 3))
