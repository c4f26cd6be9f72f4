"""Dense Hermitian linear algebra for the small matrices used by the detectors.

Every function accepts a single matrix or a stack of matrices with leading
batch dimensions, the way ``numpy.linalg`` does.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

HERMITIAN_RTOL = 1e-12
JACOBI_RTOL = 1e-12


class NotPositiveDefiniteError(np.linalg.LinAlgError):
    """Raised when a Cholesky pivot is not strictly positive."""


class EigDecomposition(NamedTuple):
    eigenvalues: np.ndarray  # ascending
    basis: np.ndarray  # columns are eigenvectors


def hermitian_part(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + np.conj(np.swapaxes(a, -1, -2)))


def check_hermitian(a, name: str = "matrix") -> np.ndarray:
    a = np.asarray(a)
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        raise ValueError(f"{name} must be square, got shape {a.shape}")
    if a.size == 0:
        return a
    scale = np.abs(a).max()
    skew = np.abs(a - np.conj(np.swapaxes(a, -1, -2))).max()
    if skew > HERMITIAN_RTOL * scale:
        raise ValueError(f"{name} is not Hermitian (skew {skew:.3g}, scale {scale:.3g})")
    return a


def hermitian_eig(a) -> EigDecomposition:
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending.

    Backed by LAPACK ``heevd``; :func:`jacobi_eig` is the self-contained
    reference used to cross-check it.
    """
    a = check_hermitian(a)
    w, v = np.linalg.eigh(a)
    return EigDecomposition(w, v)


def jacobi_eig(a, max_sweeps: int = 64) -> EigDecomposition:
    """Cyclic complex Jacobi eigendecomposition of a single Hermitian matrix.

    Each rotation first removes the phase of the pivot ``a[p, q]`` with a
    diagonal unitary and then applies the classical real Jacobi rotation.
    Sweeps stop once the off-diagonal Frobenius mass drops below
    ``1e-12 * max|a|``.
    """
    a = check_hermitian(a)
    if a.ndim != 2:
        raise ValueError("jacobi_eig takes a single matrix")
    n = a.shape[0]
    work = np.array(hermitian_part(a), dtype=complex)
    basis = np.eye(n, dtype=complex)
    scale = np.abs(work).max() if n else 0.0
    target = JACOBI_RTOL * scale

    off = ~np.eye(n, dtype=bool)

    def off_mass(m):
        # summed directly; |A|^2 - |diag A|^2 cancels catastrophically near convergence
        return np.sqrt(np.sum(np.abs(m[off]) ** 2))

    for _ in range(max_sweeps):
        if off_mass(work) <= target:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = work[p, q]
                mag = abs(apq)
                if mag == 0.0:
                    continue
                phase = apq / mag
                tau = (work[q, q].real - work[p, p].real) / (2.0 * mag)
                t = (1.0 if tau >= 0 else -1.0) / (abs(tau) + np.hypot(1.0, tau))
                c = 1.0 / np.hypot(1.0, t)
                s = t * c
                # G = diag(1, conj(phase)) @ [[c, s], [-s, c]] on the (p, q) plane
                gpp, gpq = c, s
                gqp, gqq = -s * np.conj(phase), c * np.conj(phase)
                col_p = work[:, p].copy()
                col_q = work[:, q].copy()
                work[:, p] = col_p * gpp + col_q * gqp
                work[:, q] = col_p * gpq + col_q * gqq
                row_p = work[p, :].copy()
                row_q = work[q, :].copy()
                work[p, :] = np.conj(gpp) * row_p + np.conj(gqp) * row_q
                work[q, :] = np.conj(gpq) * row_p + np.conj(gqq) * row_q
                work[p, q] = work[q, p] = 0.0
                work[p, p] = work[p, p].real
                work[q, q] = work[q, q].real
                vp = basis[:, p].copy()
                vq = basis[:, q].copy()
                basis[:, p] = vp * gpp + vq * gqp
                basis[:, q] = vp * gpq + vq * gqq
    else:
        if off_mass(work) > target:
            raise np.linalg.LinAlgError("Jacobi sweeps did not converge")

    w = np.real(np.diag(work))
    order = np.argsort(w, kind="stable")
    return EigDecomposition(w[order], basis[:, order])


def cholesky(a) -> np.ndarray:
    """Lower Cholesky factor; raises :class:`NotPositiveDefiniteError`."""
    a = check_hermitian(a)
    try:
        return np.linalg.cholesky(a)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError("matrix is not positive definite") from exc


def _triangular_solves(lower: np.ndarray, b: np.ndarray) -> np.ndarray:
    y = np.linalg.solve(lower, b)
    return np.linalg.solve(np.conj(np.swapaxes(lower, -1, -2)), y)


def cholesky_solve(a, b) -> np.ndarray:
    """Solve ``a @ x = b`` for Hermitian positive-definite ``a``."""
    lower = cholesky(a)
    b = np.asarray(b)
    vector = b.ndim == lower.ndim - 1
    if vector:
        b = b[..., None]
    x = _triangular_solves(lower, b)
    return x[..., 0] if vector else x


def logdet(a) -> np.ndarray | float:
    """Natural log of the determinant of a Hermitian positive-definite matrix."""
    lower = cholesky(a)
    diag = np.real(np.diagonal(lower, axis1=-2, axis2=-1))
    out = 2.0 * np.sum(np.log(diag), axis=-1)
    return float(out) if np.ndim(out) == 0 else out
