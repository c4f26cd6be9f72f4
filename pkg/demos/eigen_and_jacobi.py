"""Hermitian eigendecomposition: the LAPACK path against the Jacobi reference.

Run: python3 demos/eigen_and_jacobi.py
"""
import numpy as np

from rsdetect import linalg

rng = np.random.default_rng(0)
a = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
a = a + a.conj().T

fast = linalg.hermitian_eig(a)
ref = linalg.jacobi_eig(a)
print("eigenvalues (LAPACK):", np.round(fast.eigenvalues, 6))
print("eigenvalues (Jacobi):", np.round(ref.eigenvalues, 6))
print("max difference:", np.abs(fast.eigenvalues - ref.eigenvalues).max())

# Cholesky solve and log-determinant on a positive definite matrix
pd = a @ a.conj().T + np.eye(6)
b = rng.standard_normal(6) + 0j
x = linalg.cholesky_solve(pd, b)
print("solve residual:", np.abs(pd @ x - b).max())
print("logdet:", linalg.logdet(pd), "vs numpy", np.linalg.slogdet(pd)[1])

try:
    linalg.cholesky(np.diag([1.0, -1.0]))
except linalg.NotPositiveDefiniteError as exc:
    print("indefinite input rejected:", exc)
