"""Exact maximisation over the Doppler phase via a semidefinite program.

The GLRT with unknown Doppler needs

    t_max = max_theta  (p^H A p) / (p^H S^-1 p),   A = S^-1 Z X^-1 Z^H S^-1,

with ``p = p(theta)`` the steering vector. ``t >= t_max`` exactly when the
trigonometric polynomial

    f(theta, t) = t*y_0 - x_0 + 2 Re sum_k (t*y_k - x_k) exp(1j*k*theta)

is nonnegative on the circle, and a trigonometric polynomial of degree
``N - 1`` is nonnegative iff its coefficients are the diagonal sums of a
positive semidefinite ``N x N`` matrix ``V``. Minimising ``t`` under that
constraint is a small SDP; :func:`solve_sdp` solves it with a batched
primal-dual interior-point method and :func:`grid_oracle` gives an
independent dense-search answer.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass

import numpy as np

from .detectors import DetectorId, DetectorStatistic, SufficientStats

log = logging.getLogger(__name__)

GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class MomentVectors:
    """Diagonal sums of the numerator (``x``) and denominator (``y``) matrices."""

    x: np.ndarray  # (..., N) complex, x[..., 0] real
    y: np.ndarray

    @property
    def n(self) -> int:
        return self.x.shape[-1]


class SdpStatus(str, enum.Enum):
    OPTIMAL = "Optimal"
    MAX_ITER = "MaxIter"
    INFEASIBLE = "Infeasible"


@dataclass(frozen=True)
class SdpProblem:
    moments: MomentVectors
    w: np.ndarray  # M x N sampling matrix, see dft_sampling_matrix
    m_param: int


@dataclass(frozen=True)
class SdpSolution:
    t_c: float
    v_cert: np.ndarray
    status: SdpStatus
    iterations: int
    duality_gap: float
    theta_hat: float


@dataclass(frozen=True)
class SdpBatchSolution:
    """Solutions for a stack of problems; ``v`` holds the Gram matrices ``V``
    with ``diag_sums(V) = t*y - x``."""

    t_c: np.ndarray
    v: np.ndarray
    status: np.ndarray  # SdpStatus values as strings
    iterations: np.ndarray
    duality_gap: np.ndarray
    theta_hat: np.ndarray

    def __len__(self):
        return len(self.t_c)


def diag_sums(a: np.ndarray) -> np.ndarray:
    """``out[k] = sum_m a[m, m + k]`` for ``k = 0..N-1``."""
    n = a.shape[-1]
    return np.stack([np.trace(a, offset=k, axis1=-2, axis2=-1) for k in range(n)], axis=-1)


def build_moment_vectors(stats: SufficientStats) -> MomentVectors:
    x = diag_sums(stats.quad_matrix())
    y = diag_sums(stats.s_inv)
    x[..., 0] = x[..., 0].real
    y[..., 0] = y[..., 0].real
    return MomentVectors(x, y)


def trig_poly(coeffs: np.ndarray, theta) -> np.ndarray:
    """Evaluate ``c_0 + 2 Re sum_{k>=1} c_k exp(1j*k*theta)``.

    ``coeffs`` is ``(..., N)``; ``theta`` broadcasts against the leading
    dimensions and may carry one extra trailing axis of evaluation points.
    """
    coeffs = np.asarray(coeffs)
    theta = np.asarray(theta, dtype=float)
    k = np.arange(1, coeffs.shape[-1])
    phase = np.exp(1j * theta[..., None] * k)
    if theta.ndim > coeffs.ndim - 1:
        c = coeffs[..., None, :]
    else:
        c = coeffs
    return np.real(c[..., 0]) + 2.0 * np.real(np.sum(c[..., 1:] * phase, axis=-1))


def f_theta(theta, t, moments: MomentVectors) -> np.ndarray | float:
    """``f(theta, t) = t*y_0 - x_0 + 2 Re sum_{k>=1} (t*y_k - x_k) exp(1j*k*theta)``."""
    coeffs = np.asarray(t)[..., None] * moments.y - moments.x
    out = trig_poly(coeffs, theta)
    return float(out) if np.ndim(out) == 0 else out


def build_w_matrix(n: int, m: int) -> np.ndarray:
    """Square ``N x N`` DFT block with entry ``(k, i) = exp(-2j*pi*i*k/M)``.

    These are the first ``N`` rows of :func:`dft_sampling_matrix`; on its own
    it does not certify nonnegativity (see ``certificate_residual``).
    """
    _check_m(n, m)
    k = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(k, k) / m)


def dft_sampling_matrix(n: int, m: int) -> np.ndarray:
    """``M x N`` matrix whose row ``i`` is ``[1, w_i, ..., w_i**(N-1)]``, ``w_i = exp(-2j*pi*i/M)``."""
    _check_m(n, m)
    return np.exp(-2j * np.pi * np.outer(np.arange(m), np.arange(n)) / m)


def _check_m(n, m):
    if m < 2 * n - 1:
        raise ValueError(f"M = {m} must be at least 2N - 1 = {2 * n - 1}")


def build_problem(stats_or_moments, m: int | None = None) -> SdpProblem:
    moments = (
        stats_or_moments
        if isinstance(stats_or_moments, MomentVectors)
        else build_moment_vectors(stats_or_moments)
    )
    n = moments.n
    m = 2 * n - 1 if m is None else m
    return SdpProblem(moments, dft_sampling_matrix(n, m), m)


def certificate_matrix(problem: SdpProblem, v: np.ndarray) -> np.ndarray:
    """Express a Gram matrix ``V`` in the DFT form ``W^H diag(W V_c W^H)``.

    With ``M`` sample points ``W^H diag(W V_c W^H) = M * conj(diag_sums(V_c))``,
    so ``V_c = conj(V) / M``.
    """
    return np.conj(v) / problem.m_param


def certificate_residual(problem: SdpProblem, t, v_cert) -> np.ndarray | float:
    """Max-abs residual of ``t*y - x = W^H diag(W V_c W^H)``."""
    w = problem.w
    samples = np.real(np.einsum("ik,...kl,il->...i", w, v_cert, np.conj(w)))
    rhs = np.einsum("ik,...i->...k", np.conj(w), samples)
    lhs = np.asarray(t)[..., None] * problem.moments.y - problem.moments.x
    out = np.max(np.abs(lhs - rhs), axis=-1)
    return float(out) if np.ndim(out) == 0 else out


# ----------------------------------------------------------------------------
# Dense grid + golden-section oracle


def doppler_ratio(moments: MomentVectors, theta) -> np.ndarray:
    """``g(theta) = (p^H A p) / (p^H S^-1 p)`` from the moment vectors."""
    return trig_poly(moments.x, theta) / trig_poly(moments.y, theta)


def _grid_values(coeffs: np.ndarray, points: int) -> np.ndarray:
    c = np.array(coeffs, dtype=complex, copy=True)
    c[..., 0] = 0.5 * c[..., 0].real
    return 2.0 * np.real(np.fft.ifft(c, n=points, axis=-1) * points)


def golden_section_max(func, lo, hi, width: float = 1e-10):
    """Vectorised golden-section search for the maximum of a unimodal ``func`` on ``[lo, hi]``.

    ``func`` maps an array of abscissae to an array of values of the same
    shape. Returns ``(argmax, max)`` once every bracket is narrower than
    ``width``.
    """
    a = np.array(lo, dtype=float, copy=True)
    b = np.array(hi, dtype=float, copy=True)
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = func(c), func(d)
    while np.max(b - a) > width:
        left = fc >= fd  # maximum lies in [a, d]
        a = np.where(left, a, c)
        b = np.where(left, d, b)
        new_c = np.where(left, b - GOLDEN * (b - a), d)
        new_d = np.where(left, c, a + GOLDEN * (b - a))
        fp = func(np.where(left, new_c, new_d))
        fc, fd = np.where(left, fp, fd), np.where(left, fc, fp)
        c, d = new_c, new_d
    x = 0.5 * (a + b)
    fx = func(x)
    return x, fx


def grid_oracle(
    stats_or_moments, coarse_points: int = 4096, n_candidates: int = 3, width: float = 1e-10
) -> DetectorStatistic:
    """Maximise ``g(theta)`` by a uniform grid followed by golden-section refinement.

    The best ``n_candidates`` local maxima of the grid are each refined
    inside their two neighbouring cells.
    """
    moments = (
        stats_or_moments
        if isinstance(stats_or_moments, MomentVectors)
        else build_moment_vectors(stats_or_moments)
    )
    n = moments.n
    if coarse_points < 4 * n:
        raise ValueError(f"coarse_points must be at least 4N = {4 * n}")
    num = _grid_values(moments.x, coarse_points)
    den = _grid_values(moments.y, coarse_points)
    g = num / den
    step = 2.0 * np.pi / coarse_points
    is_peak = (g >= np.roll(g, 1, axis=-1)) & (g >= np.roll(g, -1, axis=-1))
    ranked = np.where(is_peak, g, -np.inf)
    n_cand = min(n_candidates, coarse_points)
    idx = np.argsort(-ranked, axis=-1, kind="stable")[..., :n_cand]
    grid_best = np.take_along_axis(g, idx[..., :1], axis=-1)[..., 0]
    grid_arg = idx[..., 0] * step

    x = moments.x[..., None, :]
    y = moments.y[..., None, :]

    def ratio(theta):
        return trig_poly(x, theta) / trig_poly(y, theta)

    centre = idx * step
    theta_r, g_r = golden_section_max(ratio, centre - step, centre + step, width)
    best = np.argmax(g_r, axis=-1)
    g_best = np.take_along_axis(g_r, best[..., None], axis=-1)[..., 0]
    t_best = np.take_along_axis(theta_r, best[..., None], axis=-1)[..., 0]
    use_grid = grid_best > g_best
    value = np.where(use_grid, grid_best, g_best)
    theta = np.mod(np.where(use_grid, grid_arg, t_best), 2.0 * np.pi)
    if np.ndim(value) == 0:
        value, theta = float(value), float(theta)
    return DetectorStatistic(value, DetectorId.GRID_ORACLE, theta)


# ----------------------------------------------------------------------------
# Interior-point solver


def _herm(a):
    return 0.5 * (a + np.conj(np.swapaxes(a, -1, -2)))


def _ct(a):
    return np.conj(np.swapaxes(a, -1, -2))


def _inner(a, b):
    return np.real(np.einsum("...ij,...ij->...", a, np.conj(b)))


def _constraint_basis(n: int) -> np.ndarray:
    """Hermitian ``H`` with ``<H, V> = Re/Im diag_sums(V)[k]`` for ``k = 1..N-1``."""
    mats = []
    for k in range(1, n):
        j = np.eye(n, k=-k)
        mats.append((j + j.T) / 2.0)
        mats.append((j - j.T) / 2j)
    return np.array(mats, dtype=complex)


def _max_step(lam: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Largest ``a`` with ``diag(lam) + a*d`` positive semidefinite."""
    s = 1.0 / np.sqrt(lam)
    scaled = _herm(s[:, :, None] * d * s[:, None, :])
    emin = np.linalg.eigvalsh(scaled)[:, 0]
    with np.errstate(divide="ignore"):
        return np.where(emin < 0, -1.0 / emin, np.inf)


def _sym_product(a, b):
    return 0.5 * (a @ b + b @ a)


def solve_sdp_batch(
    moments: MomentVectors,
    tol: float = 1e-7,
    max_iter: int = 200,
    step_fraction: float = 0.98,
) -> SdpBatchSolution:
    """Minimise ``t`` s.t. ``t*y - x = diag_sums(V)``, ``V`` PSD, for a stack of moment vectors.

    ``t`` is eliminated through the ``k = 0`` equation (``t = tr V + x_0``
    after scaling by ``y_0``), leaving a standard-form SDP in ``V`` with
    ``2N - 2`` real equalities. It is solved with an infeasible-start
    primal-dual path-following method using Nesterov-Todd scaling and a
    Mehrotra predictor-corrector step.
    """
    if not 0.0 < tol <= 1e-2:
        raise ValueError("tol must lie in (0, 1e-2]")
    x = np.atleast_2d(np.asarray(moments.x, dtype=complex))
    y = np.atleast_2d(np.asarray(moments.y, dtype=complex))
    batch_shape = np.shape(moments.x)[:-1]
    x = x.reshape(-1, x.shape[-1])
    y = y.reshape(-1, y.shape[-1])
    B, n = x.shape
    y0 = y[:, 0].real
    if np.any(y0 <= 0):
        raise ValueError("y_0 must be positive")
    xs = x / y0[:, None]
    ys = y / y0[:, None]
    x0 = xs[:, 0].real

    base = _constraint_basis(n)  # (m, n, n)
    m = base.shape[0]
    eye = np.eye(n, dtype=complex)
    shift = np.empty((B, m))
    shift[:, 0::2] = ys[:, 1:].real
    shift[:, 1::2] = ys[:, 1:].imag
    A = base[None] - shift[:, :, None, None] * eye  # (B, m, n, n)
    rhs_c = ys[:, 1:] * x0[:, None] - xs[:, 1:]
    b = np.empty((B, m))
    b[:, 0::2] = rhs_c.real
    b[:, 1::2] = rhs_c.imag
    C = np.broadcast_to(eye, (B, n, n))

    X = np.broadcast_to(eye / n, (B, n, n)).copy()
    Z = np.broadcast_to(eye, (B, n, n)).copy()
    yv = np.zeros((B, m))
    iters = np.zeros(B, dtype=int)
    status = np.full(B, SdpStatus.MAX_ITER.value, dtype="<U10")
    gap_out = np.full(B, np.inf)
    active = np.arange(B)
    bnorm = 1.0 + np.linalg.norm(b, axis=1)

    for it in range(1, max_iter + 1):
        if active.size == 0:
            break
        Aa, ba, Ca = A[active], b[active], C[active]
        Xa, Za, ya = X[active], Z[active], yv[active]
        aty = np.einsum("bm,bmij->bij", ya, Aa)
        rp = ba - _inner(Aa, Xa[:, None])
        Rd = Ca - aty - Za
        pobj = np.real(np.trace(Xa, axis1=1, axis2=2))
        dobj = np.sum(ba * ya, axis=1)
        mu_sum = _inner(Xa, Za)
        gap = np.maximum(mu_sum, np.abs(pobj - dobj))
        pres = np.linalg.norm(rp, axis=1) / bnorm[active]
        dres = np.sqrt(_inner(Rd, Rd)) / (1.0 + np.sqrt(n))
        done = (gap <= tol) & (pres <= tol) & (dres <= tol)
        gap_out[active] = gap
        if np.any(done):
            status[active[done]] = SdpStatus.OPTIMAL.value
            iters[active[done]] = it - 1
            keep = ~done
            active = active[keep]
            Aa, ba, Ca, Xa, Za, ya = Aa[keep], ba[keep], Ca[keep], Xa[keep], Za[keep], ya[keep]
            rp, Rd = rp[keep], Rd[keep]
            if active.size == 0:
                break
        mu = _inner(Xa, Za) / n

        try:
            Lx = np.linalg.cholesky(Xa)
            Lz = np.linalg.cholesky(Za)
        except np.linalg.LinAlgError:
            log.warning("interior-point iterate lost definiteness; stopping %d problems", active.size)
            iters[active] = it
            break
        _, sv, vh = np.linalg.svd(_ct(Lz) @ Lx)
        R = (Lx @ _ct(vh)) * (sv ** -0.5)[:, None, :]
        Rinv = (np.sqrt(sv)[:, :, None] * vh) @ np.linalg.inv(Lx)
        W = _herm(R @ _ct(R))
        WAW = W[:, None] @ Aa @ W[:, None]
        M = _inner(Aa[:, :, None], WAW[:, None, :])
        M = 0.5 * (M + np.swapaxes(M, 1, 2))
        try:
            Lm = np.linalg.cholesky(M)
        except np.linalg.LinAlgError:
            log.warning("Schur complement singular; stopping %d problems", active.size)
            iters[active] = it
            break
        WRdW = W @ Rd @ W
        a_wrdw = _inner(Aa, WRdW[:, None])

        def direction(hs):
            rhr = _herm(R @ hs @ _ct(R))
            rhs = rp - _inner(Aa, rhr[:, None]) + a_wrdw
            dy = np.linalg.solve(_ct(Lm), np.linalg.solve(Lm, rhs[..., None]))[..., 0]
            dZ = _herm(Rd - np.einsum("bm,bmij->bij", dy, Aa))
            dX = _herm(rhr - W @ dZ @ W)
            dXs = _herm(Rinv @ dX @ _ct(Rinv))
            dZs = _herm(_ct(R) @ dZ @ R)
            return dX, dy, dZ, dXs, dZs

        lam = sv
        lam_mat = lam[:, :, None] * np.eye(n)
        # predictor
        _, _, _, dXs_a, dZs_a = direction(-lam_mat.astype(complex))
        ap = np.minimum(1.0, _max_step(lam, dXs_a))
        ad = np.minimum(1.0, _max_step(lam, dZs_a))
        mu_aff = _inner(lam_mat + ap[:, None, None] * dXs_a, lam_mat + ad[:, None, None] * dZs_a) / n
        sigma = np.clip(mu_aff / mu, 0.0, 1.0) ** 3
        # corrector
        target = (sigma * mu)[:, None, None] * np.eye(n) - lam_mat ** 2 - _sym_product(dXs_a, dZs_a)
        hs = target * (2.0 / (lam[:, :, None] + lam[:, None, :]))
        dX, dy, dZ, dXs, dZs = direction(hs)
        ap = np.minimum(1.0, step_fraction * _max_step(lam, dXs))
        ad = np.minimum(1.0, step_fraction * _max_step(lam, dZs))
        X[active] = _herm(Xa + ap[:, None, None] * dX)
        yv[active] = ya + ad[:, None] * dy
        Z[active] = _herm(Za + ad[:, None, None] * dZ)
        iters[active] = it
        if log.isEnabledFor(logging.DEBUG):
            log.debug(
                "ipm iter=%d active=%d max_gap=%.3e max_pres=%.3e",
                it, active.size, float(np.max(mu * n)), float(np.max(np.linalg.norm(rp, axis=1))),
            )

    t_c = np.real(np.trace(X, axis1=1, axis2=2)) + x0
    v = X * y0[:, None, None]
    # the dual slack is a Toeplitz moment matrix peaking at the maximiser
    _, zv = np.linalg.eigh(Z)
    top = zv[:, :, -1]
    theta_hat = np.mod(np.angle(np.sum(np.conj(top[:, :-1]) * top[:, 1:], axis=1)), 2.0 * np.pi)
    return SdpBatchSolution(
        t_c.reshape(batch_shape),
        v.reshape(batch_shape + (n, n)),
        status.reshape(batch_shape),
        iters.reshape(batch_shape),
        gap_out.reshape(batch_shape),
        theta_hat.reshape(batch_shape),
    )


def solve_sdp(problem: SdpProblem, tol: float = 1e-7, max_iter: int = 200) -> SdpSolution:
    """Solve one problem; ``v_cert`` is expressed in the DFT-certificate form of ``problem.w``."""
    if np.ndim(problem.moments.x) != 1:
        raise ValueError("solve_sdp takes a single problem; use solve_sdp_batch for stacks")
    sol = solve_sdp_batch(problem.moments, tol=tol, max_iter=max_iter)
    return SdpSolution(
        float(sol.t_c),
        certificate_matrix(problem, sol.v),
        SdpStatus(sol.status.item()),
        int(sol.iterations),
        float(sol.duality_gap),
        float(sol.theta_hat),
    )


def sdp_stat(stats: SufficientStats, tol: float = 1e-7) -> DetectorStatistic:
    sol = solve_sdp_batch(build_moment_vectors(stats), tol=tol)
    value = sol.t_c if np.ndim(sol.t_c) else float(sol.t_c)
    theta = sol.theta_hat if np.ndim(sol.theta_hat) else float(sol.theta_hat)
    return DetectorStatistic(value, DetectorId.SDP, theta)
