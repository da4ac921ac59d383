"""Moment and maximum-likelihood estimation for the common-shock Poisson family.

The likelihood maximizer uses a known property of this family: every
stationary point has theta_j equal to the sample mean of coordinate j.  On
that slice the problem is one-dimensional in the common-shock mean t, with
private means lambda_j = xbar_j - t.  The score and its derivative follow from
the posterior of the shared component K given each row:

    s(t)  = n(m-1) - sum_j n xbar_j / lambda_j + c'(t) Q,   Q = sum_i E[K_i]
    s'(t) = -sum_j n xbar_j / lambda_j^2 + c''(t) Q + c'(t)^2 V,

with c(t) = log t - sum_j log lambda_j and V = sum_i Var[K_i].  Iterations are
safeguarded Newton steps with an EM step (t <- Q/n, monotone) as fallback, so
the log-likelihood never decreases.  Everything is vectorized over a batch of
samples for the bootstrap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, logsumexp

from .errors import DegenerateSampleError, NumericalError, SampleError
from .model import CountSample, ThetaBP, ThetaTP, as_sample, logpmf_common_shock, pmf_bp_table, theta_array

EPS = 1e-8
MAX_ITER = 200
TOL_LL = 1e-10


@dataclass(frozen=True)
class EstimateResult:
    theta_hat: object
    method: str
    loglik: float
    converged: bool
    boundary_flag: bool
    iterations: int = 0
    flags: tuple = field(default_factory=tuple)

    def as_array(self) -> np.ndarray:
        return self.theta_hat.as_array()


def _theta_object(arr):
    arr = [float(v) for v in arr]
    return ThetaBP(*arr) if len(arr) == 3 else ThetaTP(*arr)


def _check_sample(sample: CountSample, m: int | None) -> np.ndarray:
    X = sample.data
    if m is not None and X.shape[1] != m:
        raise SampleError(f"expected {m} coordinates, got {X.shape[1]}")
    if X.shape[1] not in (2, 3):
        raise SampleError(f"unsupported dimension {X.shape[1]}")
    if X.shape[0] < 2:
        raise SampleError("need n >= 2")
    return X


# ---------------------------------------------------------------------------
# moment estimator


def _covariances(X: np.ndarray, ddof: int) -> np.ndarray:
    """Mean pairwise sample covariance per batch element; X is (B, n, m)."""
    n, m = X.shape[1], X.shape[2]
    Z = X - X.mean(axis=1, keepdims=True)
    covs = [(Z[..., i] * Z[..., j]).sum(axis=1) / (n - ddof) for i in range(m) for j in range(i + 1, m)]
    return np.mean(covs, axis=0)


def moment_batch(X: np.ndarray, ddof: int = 0):
    """Moment estimates for a batch (B, n, m); returns (theta (B, m+1), boundary (B,))."""
    X = np.asarray(X, dtype=float)
    means = X.mean(axis=1)
    cov = _covariances(X, ddof)
    hi = means.min(axis=1) - EPS
    t = np.minimum(np.maximum(cov, EPS), hi)
    boundary = (cov < EPS) | (cov > hi)
    return np.column_stack([means, t]), boundary


def moment_estimate(sample, ddof: int = 0) -> EstimateResult:
    """theta_k = xbar_k and the common-shock mean from the (mean pairwise) covariance.

    The covariance is clamped into [EPS, min xbar - EPS] and ``boundary_flag``
    records whether the clamp fired.  ``ddof`` selects divisor n (0) or n-1 (1).
    """
    sample = as_sample(sample)
    X = _check_sample(sample, None)
    means = X.mean(axis=0)
    if np.any(means == 0):
        raise DegenerateSampleError(f"zero marginal mean {means.tolist()}")
    if means.min() <= 2 * EPS:
        raise DegenerateSampleError("marginal mean too small for the parameter set")
    theta, boundary = moment_batch(X[None].astype(float), ddof)
    ll = log_likelihood(sample, theta[0])
    return EstimateResult(_theta_object(theta[0]), "moment", ll, True, bool(boundary[0]))


# ---------------------------------------------------------------------------
# log-likelihood


def log_likelihood(sample, theta) -> float:
    """Sum of log pmf over rows.

    Bivariate samples use one recurrence table over the sample's support box;
    trivariate samples use the shared-component sum.
    """
    sample = as_sample(sample)
    X = sample.data
    th = theta_array(theta, X.shape[1])
    if X.shape[1] == 2:
        table = pmf_bp_table(th, int(X[:, 0].max()), int(X[:, 1].max()))
        with np.errstate(divide="ignore"):
            lp = np.log(table[X[:, 0], X[:, 1]])
    else:
        lp = logpmf_common_shock(X, th)
    if not np.all(np.isfinite(lp)):
        row = int(np.flatnonzero(~np.isfinite(lp))[0])
        raise NumericalError(f"non-finite log pmf at row {row} ({X[row].tolist()})", row=row)
    return float(math.fsum(lp))


# ---------------------------------------------------------------------------
# batched profile MLE


class _Profile:
    """Slice log-likelihood in the common-shock mean for a batch of samples.

    rows: (L, m) distinct cells shared by the batch, w: (B, L) multiplicities.
    Per cell, sum_k exp(base_k + k c) is a polynomial in z = exp(c), so the
    posterior moments of K for the whole batch are three matrix products.  Rows
    whose powers of z leave the floating range are redone in log space.
    """

    def __init__(self, rows: np.ndarray, w: np.ndarray):
        self.w = np.asarray(w, dtype=float)
        self.n = self.w.sum(axis=1)
        self.sx = self.w @ rows                                   # (B, m) = n * xbar
        self.means = self.sx / self.n[:, None]
        kmin = rows.min(axis=1)
        K = int(kmin.max(initial=0)) + 1
        self.k = np.arange(K, dtype=float)
        xk = rows[:, None, :] - np.arange(K)[:, None]            # (L, K, m)
        base = -gammaln(self.k + 1) - gammaln(np.maximum(xk, 0) + 1).sum(axis=-1)
        self.base = np.where(np.arange(K) <= kmin[:, None], base, -np.inf)
        self.scale = self.base.max(axis=1)
        self.A = np.exp(self.base - self.scale[:, None]).T       # (K, L)
        self.m = rows.shape[1]

    def _moments(self, c: np.ndarray):
        """log sum_k, E[K], E[K^2] per (batch, cell)."""
        with np.errstate(over="ignore", under="ignore", invalid="ignore"):
            Z = np.exp(self.k * c[:, None])
            S0 = Z @ self.A
            S1 = (Z * self.k) @ self.A
            S2 = (Z * self.k ** 2) @ self.A
            lse = np.log(S0) + self.scale
            ek = S1 / S0
            ek2 = S2 / S0
        bad = ~np.all(np.isfinite(lse) & np.isfinite(ek2), axis=1)
        if np.any(bad):
            terms = self.base[None] + self.k * c[bad, None, None]
            l = logsumexp(terms, axis=2)
            post = np.exp(terms - l[..., None])
            lse[bad], ek[bad], ek2[bad] = l, post @ self.k, post @ self.k ** 2
        return lse, ek, ek2

    def evaluate(self, idx: np.ndarray, t: np.ndarray):
        """Log-likelihood, score, derivative of score and Q at t for batch rows idx."""
        lam = self.means[idx] - t[:, None]
        loglam = np.log(lam)
        c = np.log(t) - loglam.sum(axis=1)
        lse, ek, ek2 = self._moments(c)
        w = self.w[idx]
        n = self.n[idx]
        Q = (w * ek).sum(axis=1)
        V = (w * (ek2 - ek ** 2)).sum(axis=1)
        sx = self.sx[idx]
        ll = -n * (lam.sum(axis=1) + t) + (sx * loglam).sum(axis=1) + (w * lse).sum(axis=1)
        c1 = 1.0 / t + (1.0 / lam).sum(axis=1)
        c2 = -1.0 / t ** 2 + (1.0 / lam ** 2).sum(axis=1)
        s = n * (self.m - 1) - (sx / lam).sum(axis=1) + c1 * Q
        ds = -(sx / lam ** 2).sum(axis=1) + c2 * Q + c1 ** 2 * V
        return ll, s, ds, Q


def _batch_cells(X: np.ndarray):
    """Distinct rows across a batch (B, n, m) and their per-sample counts (B, L)."""
    B, n, m = X.shape
    shape = tuple(int(v) + 1 for v in X.reshape(-1, m).max(axis=0))
    box = int(np.prod(shape))
    codes = np.ravel_multi_index(tuple(X[..., j] for j in range(m)), shape)
    counts = np.bincount((codes + np.arange(B)[:, None] * box).ravel(), minlength=B * box).reshape(B, box)
    present = np.flatnonzero(counts.any(axis=0))
    cells = np.column_stack(np.unravel_index(present, shape))
    return cells, counts[:, present]


def profile_mle(rows: np.ndarray, w: np.ndarray, t0: np.ndarray, trace: list | None = None):
    """Maximize the slice likelihood for each batch element.

    Returns (t, loglik, converged, boundary, iterations).  The bounds are
    [EPS, min xbar - EPS]; callers must have excluded degenerate samples.
    If ``trace`` is a list, the log-likelihood vector is appended after every
    iteration.
    """
    prof = _Profile(rows, w)
    B = prof.w.shape[0]
    lo = np.full(B, EPS)
    hi = prof.means.min(axis=1) - EPS
    t = np.clip(t0, lo, hi)
    idx_all = np.arange(B)
    ll, s, ds, Q = prof.evaluate(idx_all, t)
    converged = np.zeros(B, dtype=bool)
    iters = np.zeros(B, dtype=int)
    active = hi > lo
    converged[~active] = True
    t[~active] = lo[~active]
    for _ in range(MAX_ITER):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        iters[idx] += 1
        ti, lli, si, dsi, Qi = t[idx], ll[idx], s[idx], ds[idx], Q[idx]
        em = np.clip(Qi / prof.n[idx], lo[idx], hi[idx])
        with np.errstate(divide="ignore", invalid="ignore"):
            newton = np.where(dsi < 0, ti - si / dsi, em)
        cand = np.clip(np.where(np.isfinite(newton), newton, em), lo[idx], hi[idx])
        lln, sn, dsn, Qn = prof.evaluate(idx, cand)
        bad = ~(lln >= lli - 1e-12 * np.abs(lli))
        if np.any(bad):
            # Newton overshot: fall back to the EM step, which cannot decrease the likelihood.
            b_idx = idx[bad]
            le, se, dse, Qe = prof.evaluate(b_idx, em[bad])
            cand[bad] = em[bad]
            lln[bad], sn[bad], dsn[bad], Qn[bad] = le, se, dse, Qe
        still_bad = ~(lln >= lli - 1e-12 * np.abs(lli))
        cand = np.where(still_bad, ti, cand)
        lln = np.where(still_bad, lli, lln)
        sn = np.where(still_bad, si, sn)
        dsn = np.where(still_bad, dsi, dsn)
        Qn = np.where(still_bad, Qi, Qn)
        step = np.abs(cand - ti)
        at_lo = (cand <= lo[idx]) & (sn <= 0)
        at_hi = (cand >= hi[idx]) & (sn >= 0)
        done = (np.abs(lln - lli) <= TOL_LL) & ((step <= 1e-10 * (1 + ti)) | (np.abs(sn) <= 1e-7) | at_lo | at_hi)
        done |= still_bad
        t[idx], ll[idx], s[idx], ds[idx], Q[idx] = cand, lln, sn, dsn, Qn
        if trace is not None:
            trace.append(ll.copy())
        converged[idx[done]] = True
        active[idx[done]] = False
    boundary = ((t <= lo * (1 + 1e-12)) & (s <= 0)) | ((t >= hi - 1e-12) & (s >= 0))
    return t, ll, converged, boundary, iters


def mle_batch(X: np.ndarray, ddof: int = 0, init: np.ndarray | None = None):
    """Batched MLE for samples X (B, n, m) with all marginal means positive.

    Returns (theta (B, m+1), loglik (B,), converged (B,), boundary (B,)).
    """
    X = np.asarray(X)
    if init is None:
        theta0, _ = moment_batch(X.astype(float), ddof)
        init = theta0[:, -1]
    cells, w = _batch_cells(X.astype(np.int64))
    t, ll, conv, bnd, _ = profile_mle(cells, w, init)
    means = X.mean(axis=1)
    return np.column_stack([means, t]), ll, conv, bnd


def _mle(sample, m, ddof: int = 0) -> EstimateResult:
    sample = as_sample(sample)
    X = _check_sample(sample, m)
    means = X.mean(axis=0)
    if np.any(means == 0):
        raise DegenerateSampleError(f"zero marginal mean {means.tolist()}")
    if means.min() <= 2 * EPS:
        raise DegenerateSampleError("marginal mean too small for the parameter set")
    theta0, _ = moment_batch(X[None].astype(float), ddof)
    cells, counts = np.unique(X, axis=0, return_counts=True)
    t, ll, conv, bnd, iters = profile_mle(cells, counts[None], theta0[:, -1])
    theta = np.append(means, t[0])
    return EstimateResult(_theta_object(theta), "mle", log_likelihood(sample, theta), bool(conv[0]),
                          bool(bnd[0]), int(iters[0]))


def mle(sample, ddof: int = 0) -> EstimateResult:
    """Maximum likelihood estimate of the bivariate Poisson parameters.

    ``ddof`` only affects the moment initializer.
    """
    return _mle(sample, 2, ddof)


def mle_tp(sample, ddof: int = 0) -> EstimateResult:
    """Maximum likelihood estimate of the trivariate Poisson parameters."""
    return _mle(sample, 3, ddof)


def estimate(sample, method: str = "mle", ddof: int = 0) -> EstimateResult:
    sample = as_sample(sample)
    if method == "moment":
        return moment_estimate(sample, ddof)
    if method == "mle":
        return _mle(sample, sample.d, ddof)
    raise ValueError(f"unknown estimator {method!r}")


# ---------------------------------------------------------------------------
# lenient batch estimation (bootstrap / harness)


def boundary_theta(means: np.ndarray) -> np.ndarray:
    """Boundary estimate for samples with a zero (or tiny) marginal mean."""
    return np.append(np.maximum(means, 2 * EPS), EPS)


def estimate_batch(X: np.ndarray, method: str = "mle", ddof: int = 0):
    """Estimates for a batch (B, n, m) that never raise.

    Returns (theta (B, m+1), degenerate (B,), boundary (B,), converged (B,)).
    Degenerate samples (a marginal mean <= 2*EPS) get ``boundary_theta``.
    """
    X = np.asarray(X)
    B, _, m = X.shape
    means = X.mean(axis=1)
    degenerate = means.min(axis=1) <= 2 * EPS
    theta = np.empty((B, m + 1))
    boundary = np.ones(B, dtype=bool)
    converged = np.ones(B, dtype=bool)
    ok = np.flatnonzero(~degenerate)
    for i in np.flatnonzero(degenerate):
        theta[i] = boundary_theta(means[i])
    if ok.size:
        if method == "mle":
            th, _, conv, bnd = mle_batch(X[ok], ddof)
        elif method == "moment":
            th, bnd = moment_batch(X[ok].astype(float), ddof)
            conv = np.ones(ok.size, dtype=bool)
        else:
            raise ValueError(f"unknown estimator {method!r}")
        theta[ok], boundary[ok], converged[ok] = th, bnd, conv
    return theta, degenerate, boundary, converged
