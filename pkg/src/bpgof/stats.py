"""Goodness-of-fit statistics for the bivariate Poisson null.

Moment tests (Crockett, Loukas-Kemp, Rayner-Best) come with asymptotic
chi-square p-values.  The pgf-based statistics (R, S, T) are weighted integrals
over the unit square, evaluated by tensor Gauss rules; W is a finite sum over
relative frequencies.  T additionally has an exact closed form (pair sums or,
equivalently, a Gram form over the frequency table).

Sample moments use divisor n by default (``ddof=0``) everywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.stats import chi2

from .errors import ParameterError, UnstableStatisticError
from .model import CountSample, as_sample
from .quadrature import QuadratureGrid, check_exponents
from .sources import EmpiricalPGF, PoissonPGF

DEFAULT_ORDER = {2: 32, 3: 24}


@dataclass(frozen=True)
class WeightExponents:
    """Exponents of the weight w(u) = prod u_k**a_k, each > -1."""

    a: tuple

    def __post_init__(self):
        object.__setattr__(self, "a", check_exponents(self.a, len(self.a)))


@dataclass(frozen=True)
class StatValue:
    name: str
    value: float
    df: Optional[int] = None
    p_asym: Optional[float] = None
    a: Optional[tuple] = None

    def reject(self, alpha: float) -> bool:
        """Asymptotic decision; only defined for the moment tests."""
        if self.p_asym is None:
            raise ValueError(f"{self.name} has no asymptotic p-value")
        return self.p_asym <= alpha


# ---------------------------------------------------------------------------
# plumbing


def _exponents(a, m: int) -> tuple:
    if isinstance(a, WeightExponents):
        a = a.a
    if a is None:
        a = (0.0,) * m
    return check_exponents(a, m)


def make_grid(m: int, a=None, order: int | None = None) -> QuadratureGrid:
    return QuadratureGrid(order or DEFAULT_ORDER[m], _exponents(a, m))


def as_source(data):
    """EmpiricalPGF for count data; pgf sources pass through unchanged."""
    if isinstance(data, (EmpiricalPGF, PoissonPGF)):
        return data
    if isinstance(data, CountSample):
        return EmpiricalPGF(data.data)
    arr = np.asarray(data)
    if arr.ndim == 2:
        return EmpiricalPGF(as_sample(arr).data)
    return EmpiricalPGF(arr)


def theta_batch(theta, B: int, m: int) -> np.ndarray:
    """Parameters as a (B, m+1) array; a single vector is broadcast."""
    if hasattr(theta, "theta_hat"):
        theta = theta.theta_hat
    if hasattr(theta, "as_array"):
        theta = theta.as_array()
    th = np.asarray(theta, dtype=float)
    if th.ndim == 1:
        th = np.broadcast_to(th, (B, th.size))
    if th.shape != (B, m + 1):
        raise ParameterError(f"expected parameters of shape ({B}, {m + 1}), got {th.shape}")
    return th


def _col(th, k, ndim):
    """Column k of a (B, m+1) parameter array, shaped to broadcast over ndim grid axes."""
    return th[:, k].reshape((-1,) + (1,) * ndim)


def _squeeze(values: np.ndarray):
    return values[0] if values.shape[0] == 1 else values


# ---------------------------------------------------------------------------
# epgf and its partials at points


def epgf_partial(sample, u, orders) -> np.ndarray:
    """Row-wise epgf partial at points ``u`` (..., d) for 0/1 ``orders``.

    Uses 0**0 = 1 and x*u**(x-1) = 0 when x = 0.  This is the direct definition,
    independent of the table contractions used by the statistics.
    """
    X = as_sample(sample).data
    u = np.asarray(u, dtype=float)
    d = X.shape[1]
    if u.shape[-1] != d:
        raise ValueError(f"u must have last dimension {d}")
    flat = u.reshape(-1, d)
    acc = np.ones((X.shape[0], flat.shape[0]))
    for k in range(d):
        x = X[:, k][:, None]
        if orders[k]:
            safe = np.maximum(x - 1, 0)
            acc *= np.where(x > 0, x * flat[None, :, k] ** safe, 0.0)
        else:
            acc *= flat[None, :, k] ** x
    return acc.mean(axis=0).reshape(u.shape[:-1])


def epgf(sample, u):
    """g_n(u) = n^-1 sum_i prod_k u_k**X_ik."""
    return epgf_partial(sample, u, (0, 0))


def epgf_d1(sample, u):
    return epgf_partial(sample, u, (1, 0))


def epgf_d2(sample, u):
    return epgf_partial(sample, u, (0, 1))


def epgf_d12(sample, u):
    return epgf_partial(sample, u, (1, 1))


# ---------------------------------------------------------------------------
# moment tests


def _moments(X: np.ndarray, ddof: int):
    """Means, variances and covariance for a batch (B, n, 2)."""
    X = np.asarray(X, dtype=float)
    n = X.shape[1]
    mean = X.mean(axis=1)
    Z = X - mean[:, None, :]
    var = (Z ** 2).sum(axis=1) / (n - ddof)
    cov = (Z[..., 0] * Z[..., 1]).sum(axis=1) / (n - ddof)
    return mean[:, 0], mean[:, 1], var[:, 0], var[:, 1], cov


def crockett_batch(X, ddof: int = 0) -> np.ndarray:
    """Crockett's quadratic form for a batch (B, n, 2); NaN where undefined.

    The covariance enters squared, as in Z V^-1 Z' with
    V proportional to [[theta1^2, theta3^2], [theta3^2, theta2^2]].
    """
    n = X.shape[1]
    m1, m2, s1, s2, c = _moments(X, ddof)
    z1, z2 = s1 - m1, s2 - m2
    den = m1 ** 2 * m2 ** 2 - c ** 4
    ok = (den > 0) & (m1 > 0) & (m2 > 0) & (s1 > 0) & (s2 > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = 0.5 * n * (m2 ** 2 * z1 ** 2 - 2 * c ** 2 * z1 * z2 + m1 ** 2 * z2 ** 2) / den
    return np.where(ok, t, np.nan)


def ib_batch(X, ddof: int = 0) -> np.ndarray:
    """Loukas-Kemp dispersion index with estimated parameters; NaN where undefined."""
    n = X.shape[1]
    m1, m2, s1, s2, c = _moments(X, ddof)
    den = m1 * m2 - c ** 2
    ok = (den > 0) & (s1 > 0) & (s2 > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        v = n * (m2 * s1 - 2 * c ** 2 + m1 * s2) / den
    return np.where(ok, v, np.nan)


def nib_batch(X, ddof: int = 0) -> np.ndarray:
    """Rayner-Best modified dispersion index; NaN where undefined."""
    n = X.shape[1]
    m1, m2, s1, s2, c = _moments(X, ddof)
    with np.errstate(divide="ignore", invalid="ignore"):
        r2 = c ** 2 / (s1 * s2)
        v = n / (1 - r2) * (s1 / m1 - 2 * r2 * np.sqrt(s1 * s2 / (m1 * m2)) + s2 / m2)
    ok = (m1 > 0) & (m2 > 0) & (s1 > 0) & (s2 > 0) & (r2 < 1)
    return np.where(ok, v, np.nan)


def _bivariate_data(sample) -> np.ndarray:
    X = as_sample(sample).data
    if X.shape[1] != 2:
        raise ValueError("moment tests are bivariate only")
    if X.shape[0] < 2:
        raise ValueError("need n >= 2")
    return X


def _moment_guard(X, ddof):
    m1, m2, s1, s2, c = (float(v[0]) for v in _moments(X[None], ddof))
    if m1 == 0 or m2 == 0:
        raise UnstableStatisticError("zero marginal mean", "mean", (m1, m2))
    if s1 == 0 or s2 == 0:
        raise UnstableStatisticError("zero marginal variance", "variance", (s1, s2))
    return m1, m2, s1, s2, c


def crockett_T(sample, ddof: int = 0) -> StatValue:
    """Crockett's statistic with its chi-square(2) p-value."""
    X = _bivariate_data(sample)
    m1, m2, s1, s2, c = _moment_guard(X, ddof)
    den = m1 ** 2 * m2 ** 2 - c ** 4
    if not den > 0:
        raise UnstableStatisticError("non-positive denominator xbar1^2 xbar2^2 - cov^4", "denominator", den)
    v = float(crockett_batch(X[None], ddof)[0])
    return StatValue("crockett", v, 2, float(chi2.sf(v, 2)))


def loukas_kemp_IB(sample, theta=None, ddof: int = 0) -> StatValue:
    """Bivariate dispersion index.

    With ``theta`` given the known-parameter form is used (df = 2n); otherwise
    the estimated form (df = 2n - 3).
    """
    X = _bivariate_data(sample)
    n = X.shape[0]
    if theta is not None:
        th = theta_batch(theta, 1, 2)[0]
        t1, t2, t3 = th
        rho = t3 / math.sqrt(t1 * t2)
        W1 = (X[:, 0] - t1) / math.sqrt(t1)
        W2 = (X[:, 1] - t2) / math.sqrt(t2)
        v = float(np.sum(W1 ** 2 - 2 * rho * W1 * W2 + W2 ** 2) / (1 - rho ** 2))
        df = 2 * n
    else:
        m1, m2, s1, s2, c = _moment_guard(X, ddof)
        den = m1 * m2 - c ** 2
        if not den > 0:
            raise UnstableStatisticError("non-positive denominator xbar1 xbar2 - cov^2", "denominator", den)
        v = float(ib_batch(X[None], ddof)[0])
        df = 2 * n - 3
    return StatValue("IB", v, df, float(chi2.sf(v, df)))


def rayner_best_NIB(sample, ddof: int = 0) -> StatValue:
    X = _bivariate_data(sample)
    n = X.shape[0]
    m1, m2, s1, s2, c = _moment_guard(X, ddof)
    r2 = c ** 2 / (s1 * s2)
    if r2 >= 1:
        raise UnstableStatisticError("squared sample correlation equals 1", "r2", r2)
    v = float(nib_batch(X[None], ddof)[0])
    df = 2 * n - 3
    return StatValue("NIB", v, df, float(chi2.sf(v, df)))


MOMENT_BATCH = {"crockett": (crockett_batch, lambda n: 2), "IB": (ib_batch, lambda n: 2 * n - 3),
                "NIB": (nib_batch, lambda n: 2 * n - 3)}


# ---------------------------------------------------------------------------
# integral statistics (batched kernels)


def _slice_axes(grid: QuadratureGrid, k: int):
    """Axes with coordinate k on the nodes and every other coordinate frozen at 1."""
    one = np.ones(1)
    return [grid.nodes[j] if j == k else one for j in range(grid.d)]


def R_values(src, th: np.ndarray, grid: QuadratureGrid) -> np.ndarray:
    """n * int (g_n - g(.; theta))^2 w for every batch element (any dimension)."""
    m = grid.d
    axes = grid.nodes
    diff = src.on_grid(axes, (0,) * m) - PoissonPGF(th).on_grid(axes, (0,) * m)
    return src.n * grid.integrate(diff ** 2)


def S_values(src, th: np.ndarray, grid: QuadratureGrid) -> np.ndarray:
    """n * int sum_i B_i^2 w with B_i = d_i g_n - {theta_i + theta_c (prod_{j!=i} u_j - 1)} g_n."""
    m = grid.d
    axes = grid.nodes
    U = np.meshgrid(*axes, indexing="ij")
    G = src.on_grid(axes, (0,) * m)
    common = _col(th, m, m)
    total = 0.0
    for i in range(m):
        orders = tuple(int(j == i) for j in range(m))
        others = np.prod([U[j] for j in range(m) if j != i], axis=0)
        Bi = src.on_grid(axes, orders) - (_col(th, i, m) + common * (others - 1)) * G
        total = total + Bi ** 2
    return src.n * grid.integrate(total)


def marginal_residual(src, th: np.ndarray, grid: QuadratureGrid, k: int) -> np.ndarray:
    """D_k on the slice u_j = 1 (j != k): d_k g_n - theta_k g_n, shape (B, q)."""
    m = grid.d
    axes = _slice_axes(grid, k)
    orders = tuple(int(j == k) for j in range(m))
    D = src.on_grid(axes, orders) - _col(th, k, m) * src.on_grid(axes, (0,) * m)
    return D.reshape(D.shape[0], -1)


def marginal_term(src, th, grid, k) -> np.ndarray:
    """int D_k^2 w over the cube; frozen axes contribute their weight mass."""
    D = marginal_residual(src, th, grid, k)
    mass = np.prod([grid.weight_mass(j) for j in range(grid.d) if j != k])
    return (D ** 2 @ grid.weights[k]) * mass


def f_bp(th: np.ndarray, u1: np.ndarray, u2: np.ndarray) -> np.ndarray:
    """f(u; theta) = theta3 + {theta2 + theta3(u1-1)}{theta1 + theta3(u2-1)}, batch-leading."""
    nd = np.ndim(u1)
    t1, t2, t3 = (_col(th, k, nd) for k in range(3))
    return t3 + (t2 + t3 * (u1 - 1)) * (t1 + t3 * (u2 - 1))


def D3_grid(src, th: np.ndarray, grid: QuadratureGrid) -> np.ndarray:
    u1, u2 = grid.nodes
    U1, U2 = np.meshgrid(u1, u2, indexing="ij")
    return src.on_grid([u1, u2], (1, 1)) - f_bp(th, U1, U2) * src.on_grid([u1, u2], (0, 0))


def T_values_quadrature(src, th: np.ndarray, grid: QuadratureGrid) -> np.ndarray:
    """n * int (D1^2 + D2^2 + D3^2) w by tensor quadrature."""
    if grid.d != 2:
        raise ValueError("T is bivariate; use mvariate.T3 for three coordinates")
    total = marginal_term(src, th, grid, 0) + marginal_term(src, th, grid, 1)
    total = total + grid.integrate(D3_grid(src, th, grid) ** 2)
    return src.n * total


def hilbert(size: int, a: float) -> np.ndarray:
    """H[i, k] = int_0^1 u^(i+k+a) du = 1/(i+k+a+1)."""
    i = np.arange(size)
    return 1.0 / (i[:, None] + i[None, :] + a + 1.0)


def T_values_gram(src: EmpiricalPGF, th: np.ndarray, a) -> np.ndarray:
    """Exact T from the frequency tables.

    Every residual is a polynomial in u whose coefficients are read off the
    table, so each integral is a quadratic form in those coefficients with the
    Hilbert-type matrices H_a.
    """
    a1, a2 = _exponents(a, 2)
    P = src.tables
    B, s1, s2 = P.shape
    t1, t2, t3 = th[:, 0], th[:, 1], th[:, 2]
    l1, l2 = t1 - t3, t2 - t3
    c0, c1, c2, c3 = t3 + l1 * l2, t3 * l1, t3 * l2, t3 * t3
    p1 = np.zeros((B, s1 + 1))
    p1[:, :s1] = P.sum(axis=2)
    p2 = np.zeros((B, s2 + 1))
    p2[:, :s2] = P.sum(axis=1)
    q1 = np.arange(1, s1 + 1) * p1[:, 1:] - t1[:, None] * p1[:, :s1]
    q2 = np.arange(1, s2 + 1) * p2[:, 1:] - t2[:, None] * p2[:, :s2]
    H1s, H2s = hilbert(s1, a1), hilbert(s2, a2)
    term1 = np.einsum("bi,ik,bk->b", q1, H1s, q1) / (a2 + 1.0)
    term2 = np.einsum("bi,ik,bk->b", q2, H2s, q2) / (a1 + 1.0)
    # coefficients of D3 for exponents 0..s1 x 0..s2; p(i, j) sits at Pp[i + 1, j + 1]
    Pp = np.zeros((B, s1 + 3, s2 + 3))
    Pp[:, 1:s1 + 1, 1:s2 + 1] = P
    i = np.arange(s1 + 1)[:, None]
    j = np.arange(s2 + 1)[None, :]
    Q = ((i + 1) * (j + 1)) * Pp[:, 2:, 2:] - (
        c0[:, None, None] * Pp[:, 1:-1, 1:-1] + c1[:, None, None] * Pp[:, :-2, 1:-1]
        + c2[:, None, None] * Pp[:, 1:-1, :-2] + c3[:, None, None] * Pp[:, :-2, :-2])
    H1, H2 = hilbert(s1 + 1, a1), hilbert(s2 + 1, a2)
    term3 = np.einsum("bij,ik,jl,bkl->b", Q, H1, H2, Q, optimize=True)
    return src.n * (term1 + term2 + term3)


def W_values(src: EmpiricalPGF, th: np.ndarray) -> np.ndarray:
    """Unscaled W for any dimension m, summing b_j^2 over r in {0..M}^m.

    M is each sample's largest count over all coordinates, and relative
    frequencies outside {0..M}^m (or at a negative index) are zero.  For b_j the
    shifted term decrements every coordinate except j.
    """
    P = src.tables
    B = P.shape[0]
    m = P.ndim - 1
    Mb = src.maxima.max(axis=1)
    K = int(Mb.max()) + 1
    # cube with one zero layer on each side: index r of p sits at r + 1
    Pp = np.zeros((B,) + (K + 2,) * m)
    Pp[(slice(None),) + tuple(slice(1, s + 1) for s in P.shape[1:])] = P

    def view(offsets):
        return Pp[(slice(None),) + tuple(slice(o, o + K) for o in offsets)]

    r = np.arange(K)
    centre = view((1,) * m)
    common = th[:, m].reshape((B,) + (1,) * m)
    total = np.zeros((B,) + (K,) * m)
    for jdx in range(m):
        up = tuple(2 if k == jdx else 1 for k in range(m))
        down = tuple(1 if k == jdx else 0 for k in range(m))
        rj = (r + 1).reshape(tuple(K if k == jdx else 1 for k in range(m)))
        lam = (th[:, jdx] - th[:, m]).reshape((B,) + (1,) * m)
        b = rj * view(up) - lam * centre - common * view(down)
        total += b ** 2
    mask = np.ones((B,) + (K,) * m, dtype=bool)
    for k in range(m):
        rk = r.reshape((1,) + tuple(K if q == k else 1 for q in range(m)))
        mask &= rk <= Mb.reshape((B,) + (1,) * m)
    return np.where(mask, total, 0.0).reshape(B, -1).sum(axis=1)


# ---------------------------------------------------------------------------
# public single-sample API


def R_stat(sample, theta_hat, a=(0, 0), grid: QuadratureGrid | None = None) -> StatValue:
    """R = int G_n^2 w, G_n = sqrt(n){g_n - g(.; theta_hat)}.

    ``sample`` may also be a pgf source (e.g. ``PoissonPGF``) to inject a known pgf.
    """
    src = as_source(sample)
    grid = grid or make_grid(src.m, a)
    v = R_values(src, theta_batch(theta_hat, src.B, src.m), grid)
    return StatValue("R", float(_squeeze(v)), a=grid.a)


def S_stat(sample, theta_hat, a=(0, 0), grid: QuadratureGrid | None = None) -> StatValue:
    src = as_source(sample)
    grid = grid or make_grid(src.m, a)
    v = S_values(src, theta_batch(theta_hat, src.B, src.m), grid)
    return StatValue("S", float(_squeeze(v)), a=grid.a)


def W_stat(sample, theta_hat) -> StatValue:
    """Unscaled frequency-domain statistic (no leading factor n)."""
    src = as_source(sample)
    if src.m != 2:
        raise ValueError("W_stat is bivariate; use mvariate.Wm_stat")
    v = W_values(src, theta_batch(theta_hat, src.B, 2))
    return StatValue("W", float(_squeeze(v)))


def T_stat_quadrature(sample, theta_hat, a=(0, 0), grid: QuadratureGrid | None = None) -> StatValue:
    src = as_source(sample)
    grid = grid or make_grid(2, a)
    v = T_values_quadrature(src, theta_batch(theta_hat, src.B, 2), grid)
    return StatValue("T", float(_squeeze(v)), a=grid.a)


def T_stat(sample, theta_hat, a=(0, 0)) -> StatValue:
    """T via the exact table (Gram) form; this is the kernel the bootstrap uses."""
    src = as_source(sample)
    v = T_values_gram(src, theta_batch(theta_hat, src.B, 2), a)
    return StatValue("T", float(_squeeze(v)), a=_exponents(a, 2))


def T_stat_closed(sample, theta_hat, a=(0, 0), prefactor: str = "corrected") -> StatValue:
    """T as the double sum over pairs of observations, O(n^2).

    Pairs are accumulated once for i < j (doubled) plus the diagonal, with
    compensated summation.  Terms whose numerator carries a zero-count
    indicator are skipped, so denominators that vanish for a_k < 0 never
    appear.

    The marginal pair terms integrate the free coordinate of the slice, giving
    the factor 1/(a_other + 1).  ``prefactor="as_printed"`` uses 1/(a_k + 1)
    instead, which only differs when a1 != a2.
    """
    X = as_sample(sample).data
    if X.shape[1] != 2:
        raise ValueError("T is bivariate")
    a1, a2 = _exponents(a, 2)
    t1, t2, t3 = (float(v) for v in theta_batch(theta_hat, 1, 2)[0])
    n = X.shape[0]
    l1, l2 = t1 - t3, t2 - t3
    c0 = l1 * l2 + t3
    if prefactor == "corrected":
        pre = (1.0 / (a2 + 1.0), 1.0 / (a1 + 1.0))
    elif prefactor == "as_printed":
        pre = (1.0 / (a1 + 1.0), 1.0 / (a2 + 1.0))
    else:
        raise ValueError(f"unknown prefactor {prefactor!r}")
    ak = (a1, a2)
    tk = (t1, t2)
    rows = [(int(x), int(y)) for x, y in X]

    def marginal(k, xi, xj):
        s = xi + xj + ak[k]
        out = 0.0
        if xi >= 1 and xj >= 1:
            out += xi * xj / (s - 1)
        if xi + xj >= 1:
            out -= tk[k] * (xi + xj) / s
        out += tk[k] ** 2 / (s + 1)
        return pre[k] * out

    def joint(ri, rj):
        s1 = ri[0] + rj[0] + a1
        s2 = ri[1] + rj[1] + a2
        pi = ri[0] * ri[1]
        pj = rj[0] * rj[1]
        out = 0.0
        if pi and pj:
            out += pi * pj / ((s1 - 1) * (s2 - 1))
        # cross terms carry the derivative factor of one row; averaging the two
        # orders keeps the i < j doubling exact
        pd = 0.5 * (pi + pj)
        if pd:
            out -= 2 * c0 * pd / (s1 * s2)
            out -= 2 * t3 * l2 * pd / (s1 * (s2 + 1))
            out -= 2 * t3 * l1 * pd / ((s1 + 1) * s2)
            out -= 2 * t3 ** 2 * pd / ((s1 + 1) * (s2 + 1))
        out += c0 ** 2 / ((s1 + 1) * (s2 + 1))
        out += 2 * t3 * c0 * l2 / ((s1 + 1) * (s2 + 2))
        out += 2 * t3 * c0 * l1 / ((s1 + 2) * (s2 + 1))
        out += t3 ** 2 * l2 ** 2 / ((s1 + 1) * (s2 + 3))
        out += t3 ** 2 * l1 ** 2 / ((s1 + 3) * (s2 + 1))
        out += 2 * t3 ** 2 * (2 * l1 * l2 + t3) / ((s1 + 2) * (s2 + 2))
        out += t3 ** 4 / ((s1 + 3) * (s2 + 3))
        out += 2 * t3 ** 3 * l2 / ((s1 + 2) * (s2 + 3))
        out += 2 * t3 ** 3 * l1 / ((s1 + 3) * (s2 + 2))
        return out

    terms = []
    for i in range(n):
        ri = rows[i]
        for j in range(i, n):
            rj = rows[j]
            pair = (marginal(0, ri[0], rj[0]) + marginal(1, ri[1], rj[1])) + joint(ri, rj)
            terms.append(pair if i == j else 2.0 * pair)
    return StatValue("T", math.fsum(terms) / n, a=(a1, a2))


def residuals_D(sample, theta_hat, u):
    """(D1, D2, D3) at points ``u`` (..., 2); D1 uses the slice (u1, 1), D2 (1, u2).

    ``sample`` may be a pgf source to inject a known pgf.
    """
    src = as_source(sample)
    u = np.asarray(u, dtype=float)
    shape = u.shape[:-1]
    pts = u.reshape(-1, 2)
    th = theta_batch(theta_hat, src.B, 2)
    one = np.ones(pts.shape[0])
    s1 = np.column_stack([pts[:, 0], one])
    s2 = np.column_stack([one, pts[:, 1]])
    D1 = src.at(s1, (1, 0)) - th[:, 0:1] * src.at(s1, (0, 0))
    D2 = src.at(s2, (0, 1)) - th[:, 1:2] * src.at(s2, (0, 0))
    D3 = src.at(pts, (1, 1)) - f_bp(th, pts[:, 0], pts[:, 1]) * src.at(pts, (0, 0))
    out = tuple(_squeeze(D).reshape((-1,) + shape) if src.B > 1 else D[0].reshape(shape) for D in (D1, D2, D3))
    return out
