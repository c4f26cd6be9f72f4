"""The SDP value and its nonnegativity certificate for one trial.

At the optimum t_C the trigonometric polynomial
g(theta) = t_C * p^H S^-1 p - p^H S^-1 Z X^-1 Z^H S^-1 p is nonnegative on
the whole circle, and a PSD matrix V proves it. The grid oracle finds the
same maximum by brute force.

Run: python3 demos/sdp_certificate.py
"""
import numpy as np

from rsdetect import scene, sdpsolver
from rsdetect.detectors import sufficient_stats

sc = scene.Scenario.reference(snr_db=-6.0)
t = scene.make_trial(sc, scene.Hypothesis.H1, scene.trial_rng(3, 0, 1))
st = sufficient_stats(t.primary, t.secondary)

prob = sdpsolver.build_problem(st)
sol = sdpsolver.solve_sdp(prob)
oracle = sdpsolver.grid_oracle(st)
print(f"SDP      t_C = {sol.t_c:.10f}  ({sol.iterations} iterations, gap {sol.duality_gap:.1e})")
print(f"oracle   max = {oracle.value:.10f}  at theta = {oracle.theta_hat:.4f}")
print("certificate residual:", sdpsolver.certificate_residual(prob, sol.t_c, sol.v_cert))
print("smallest eigenvalue of V:", np.linalg.eigvalsh(sol.v_cert)[0])

thetas = np.linspace(0, 2 * np.pi, 2000, endpoint=False)
g = np.array([sdpsolver.f_theta(th, sol.t_c, prob.moments) for th in thetas])
print("min over the circle of t_C*y - x:", g.min())
