"""Bivariate and trivariate Poisson distributions (common-shock construction).

``X_k = Y_k + Y_{m+1}`` with independent Poisson ``Y``; the parameter vector
holds the marginal means ``theta_1..theta_m`` followed by the common-shock mean
``theta_{m+1}``, which is also the covariance of every pair of coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, logsumexp

from .errors import NumericalError, ParameterError, SampleError


@dataclass(frozen=True)
class ThetaBP:
    """Parameters of BP(theta): marginal means theta1, theta2 and covariance theta3."""

    theta1: float
    theta2: float
    theta3: float

    def __post_init__(self):
        t = (self.theta1, self.theta2, self.theta3)
        if not all(math.isfinite(v) for v in t):
            raise ParameterError(f"non-finite parameter {t}")
        if not (self.theta3 > 0 and self.theta1 > self.theta3 and self.theta2 > self.theta3):
            raise ParameterError(f"theta={t} outside Theta (need theta1, theta2 > theta3 > 0)")

    @property
    def reduced(self) -> tuple[float, float]:
        """Means of the private components, theta_k - theta3."""
        return self.theta1 - self.theta3, self.theta2 - self.theta3

    def as_array(self) -> np.ndarray:
        return np.array([self.theta1, self.theta2, self.theta3])


@dataclass(frozen=True)
class ThetaTP:
    """Parameters of the trivariate Poisson: marginal means theta1..theta3, common shock theta4."""

    theta1: float
    theta2: float
    theta3: float
    theta4: float

    def __post_init__(self):
        t = (self.theta1, self.theta2, self.theta3, self.theta4)
        if not all(math.isfinite(v) for v in t):
            raise ParameterError(f"non-finite parameter {t}")
        if not (self.theta4 > 0 and min(t[:3]) > self.theta4):
            raise ParameterError(f"theta={t} outside the parameter set (need theta1..3 > theta4 > 0)")

    @property
    def reduced(self) -> tuple[float, float, float]:
        return self.theta1 - self.theta4, self.theta2 - self.theta4, self.theta3 - self.theta4

    def as_array(self) -> np.ndarray:
        return np.array([self.theta1, self.theta2, self.theta3, self.theta4])


def theta_array(theta, m: int | None = None) -> np.ndarray:
    """Coerce ThetaBP / ThetaTP / EstimateResult / sequence to a validated float array."""
    if hasattr(theta, "theta_hat"):
        theta = theta.theta_hat
    if hasattr(theta, "as_array"):
        arr = theta.as_array()
    else:
        arr = np.asarray(theta, dtype=float)
    if arr.ndim != 1 or arr.size < 3:
        raise ParameterError(f"expected a parameter vector of length m+1 >= 3, got shape {arr.shape}")
    if m is not None and arr.size != m + 1:
        raise ParameterError(f"expected {m + 1} parameters, got {arr.size}")
    _check_common_shock(arr)
    return arr


def _check_common_shock(arr: np.ndarray) -> None:
    if not np.all(np.isfinite(arr)):
        raise ParameterError(f"non-finite parameter {arr}")
    if not (arr[-1] > 0 and np.all(arr[:-1] > arr[-1])):
        raise ParameterError(f"theta={arr.tolist()} outside the parameter set")


def make_theta(values):
    """ThetaBP for 3 values, ThetaTP for 4."""
    values = [float(v) for v in values]
    if len(values) == 3:
        return ThetaBP(*values)
    if len(values) == 4:
        return ThetaTP(*values)
    raise ParameterError(f"expected 3 or 4 parameters, got {len(values)}")


@dataclass(frozen=True, eq=False)
class CountSample:
    """n observed d-tuples of nonnegative counts, stored as an (n, d) int64 array."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim != 2:
            raise SampleError(f"count data must be 2-D (n, d), got shape {arr.shape}")
        if arr.shape[0] < 1:
            raise SampleError("empty sample")
        if arr.shape[1] < 2:
            raise SampleError(f"need at least 2 coordinates, got {arr.shape[1]}")
        if arr.dtype.kind == "f":
            if not np.all(np.isfinite(arr)) or np.any(arr != np.round(arr)):
                raise SampleError("counts must be integers")
        elif arr.dtype.kind not in "iu":
            raise SampleError(f"unsupported dtype {arr.dtype}")
        arr = arr.astype(np.int64)
        if np.any(arr < 0):
            bad = int(np.argwhere(arr < 0)[0, 0])
            raise SampleError(f"negative count in row {bad}")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]

    def means(self) -> np.ndarray:
        return self.data.mean(axis=0)

    def __len__(self):
        return self.n

    def __eq__(self, other):
        return isinstance(other, CountSample) and np.array_equal(self.data, other.data)

    __hash__ = None


def as_sample(x) -> CountSample:
    if isinstance(x, CountSample):
        return x
    return CountSample(np.asarray(x))


# ---------------------------------------------------------------------------
# pgf


def pgf_m(u, theta) -> np.ndarray:
    """m-variate common-shock pgf; ``u`` has shape (..., m), ``theta`` length m+1."""
    th = theta_array(theta)
    u = np.asarray(u, dtype=float)
    m = th.size - 1
    if u.shape[-1] != m:
        raise ValueError(f"u must have last dimension {m}")
    expo = (u - 1.0) @ th[:m] + th[m] * (np.prod(u, axis=-1) - u.sum(axis=-1) + m - 1)
    return np.exp(expo)


def pgf_bp(u, theta) -> np.ndarray:
    """exp{theta1(u1-1) + theta2(u2-1) + theta3(u1-1)(u2-1)}."""
    t1, t2, t3 = theta_array(theta, 2)
    u = np.asarray(u, dtype=float)
    if u.shape[-1] != 2:
        raise ValueError("u must have last dimension 2")
    u1, u2 = u[..., 0], u[..., 1]
    return np.exp(t1 * (u1 - 1) + t2 * (u2 - 1) + t3 * (u1 - 1) * (u2 - 1))


def pgf_tp(u, theta) -> np.ndarray:
    th = theta_array(theta, 3)
    u = np.asarray(u, dtype=float)
    if u.shape[-1] != 3:
        raise ValueError("u must have last dimension 3")
    u1, u2, u3 = u[..., 0], u[..., 1], u[..., 2]
    return np.exp(th[0] * (u1 - 1) + th[1] * (u2 - 1) + th[2] * (u3 - 1)
                  + th[3] * (u1 * u2 * u3 - u1 - u2 - u3 + 2))


# ---------------------------------------------------------------------------
# pmf


def logpmf_common_shock(x, theta) -> np.ndarray:
    """log pmf by summing over the shared component, term by term in log space.

    ``x`` has shape (..., m).  Works for any m; for m=2 it is the classical
    convolution sum.
    """
    th = theta_array(theta)
    m = th.size - 1
    x = np.asarray(x, dtype=np.int64)
    if x.shape[-1] != m:
        raise ValueError(f"x must have last dimension {m}")
    if np.any(x < 0):
        raise SampleError("negative count")
    lam = th[:m] - th[m]
    kmin = x.min(axis=-1)
    K = int(kmin.max(initial=0)) + 1
    k = np.arange(K)
    xk = x[..., None, :] - k[:, None]                                  # (..., K, m)
    valid = k <= kmin[..., None]
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = (np.where(xk >= 0, xk, 0) * np.log(lam)).sum(-1) - gammaln(np.where(xk >= 0, xk, 0) + 1).sum(-1)
        terms = terms + k * math.log(th[m]) - gammaln(k + 1)
    terms = np.where(valid, terms, -np.inf)
    return -(lam.sum() + th[m]) + logsumexp(terms, axis=-1)


def pmf_bp_convolution(x1: int, x2: int, theta) -> float:
    """P(X1=x1, X2=x2) as the convolution sum over the common component."""
    theta_array(theta, 2)
    if x1 < 0 or x2 < 0:
        return 0.0
    return float(np.exp(logpmf_common_shock([int(x1), int(x2)], theta)))


def pmf_bp_table(theta, max1: int, max2: int) -> np.ndarray:
    """Table P[i, j] = P(X1=i, X2=j) for 0 <= i <= max1, 0 <= j <= max2, by recurrence.

    Column j=0 is P(X2=0) * Poisson(theta1-theta3)(i) (the X2 Poisson margin at
    zero times the conditional law of X1); row i=0 symmetrically.  Everything
    else follows from the coefficient-matching recurrence

        (i+1)(j+1) P[i+1, j+1] = c0 P[i,j] + c1 P[i-1,j] + c2 P[i,j-1] + c3 P[i-1,j-1].

    All coefficients are nonnegative, so the recurrence is free of cancellation.
    """
    t1, t2, t3 = theta_array(theta, 2)
    l1, l2 = t1 - t3, t2 - t3
    c0 = t3 + l1 * l2
    c1 = t3 * l1
    c2 = t3 * l2
    c3 = t3 * t3
    log_p00 = -(t1 + t2 - t3)
    # Start from 1 and rescale at the end so an underflowing P00 does not zero the table.
    P = np.zeros((max1 + 2, max2 + 2))  # one extra zero row/col for the i-1, j-1 lookups
    P[1, 1] = 1.0
    for i in range(1, max1 + 1):
        P[i + 1, 1] = P[i, 1] * l1 / i
    for j in range(1, max2 + 1):
        P[1, j + 1] = P[1, j] * l2 / j
    jj = np.arange(1, max2 + 1)
    for i in range(0, max1):
        # row i+1 (shifted index i+2) from rows i and i-1
        rhs = (c0 * P[i + 1, 1:max2 + 1] + c1 * P[i, 1:max2 + 1]
               + c2 * P[i + 1, 0:max2] + c3 * P[i, 0:max2])
        P[i + 2, 2:max2 + 2] = rhs / ((i + 1) * jj)
    table = P[1:, 1:]
    scale = math.exp(log_p00)
    if scale > 0 and np.all(np.isfinite(table)):
        out = table * scale
    else:
        with np.errstate(divide="ignore"):
            out = np.exp(np.log(table) + log_p00)
    if not np.all(np.isfinite(out)):
        raise NumericalError(f"pmf table overflow for theta={[t1, t2, t3]}")
    return out


def pmf_bp_recurrence(x1: int, x2: int, theta) -> float:
    if x1 < 0 or x2 < 0:
        return 0.0
    return float(pmf_bp_table(theta, int(x1), int(x2))[x1, x2])


# ---------------------------------------------------------------------------
# samplers


def sample_common_shock(theta, n: int, rng: np.random.Generator) -> np.ndarray:
    """(n, m) draws of X_k = Y_k + Y_{m+1}; no parameter validation (hot path)."""
    th = np.asarray(theta, dtype=float)
    m = th.size - 1
    lam = np.empty(m + 1)
    lam[:m] = th[:m] - th[m]
    lam[m] = th[m]
    y = rng.poisson(lam, size=(n, m + 1))
    return y[:, :m] + y[:, m:]


def sample_bp(theta, n: int, rng: np.random.Generator) -> CountSample:
    """n iid pairs (Y1+Y3, Y2+Y3)."""
    th = theta_array(theta, 2)
    if n < 1:
        raise ValueError("n must be >= 1")
    return CountSample(sample_common_shock(th, n, rng))


def sample_tp(theta, n: int, rng: np.random.Generator) -> CountSample:
    th = theta_array(theta, 3)
    if n < 1:
        raise ValueError("n must be >= 1")
    return CountSample(sample_common_shock(th, n, rng))
