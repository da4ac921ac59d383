"""Trivariate (and generic m-variate) statistics.

T3 integrates the squares of seven characterization residuals over the unit
cube: three marginal residuals on the coordinate slices, three pairwise
residuals and one third-order residual on the whole cube.  With
L_i = theta_i + theta4 (prod_{j != i} u_j - 1):

    D4 = d12 g - g (L1 L2 + theta4 u3)        (D5, D6 alike)
    D7 = d123 g - g h,  h = L1 L2 L3 + theta4 (1 + sum_k u_k L_k).

Quadrature is the default route (order 24 per axis, about 14k nodes); an exact
Gram form over the frequency table is kept as a check.  The evaluation cost
grows with the cube of the order, which is why W3 is the cheaper trivariate
test.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass

import numpy as np

from .quadrature import QuadratureGrid
from .sources import EmpiricalPGF
from .stats import (StatValue, W_values, R_values, S_values, _exponents, _squeeze, as_source, hilbert,
                    make_grid, marginal_term, theta_batch)

PAIRS = ((0, 1), (0, 2), (1, 2))
CHUNK = 32


@dataclass(frozen=True)
class TrivariateResiduals:
    D1: np.ndarray
    D2: np.ndarray
    D3: np.ndarray
    D4: np.ndarray
    D5: np.ndarray
    D6: np.ndarray
    D7: np.ndarray

    def as_tuple(self):
        return (self.D1, self.D2, self.D3, self.D4, self.D5, self.D6, self.D7)


def _L(th, U, i):
    """L_i = theta_i + theta4 (prod_{j != i} u_j - 1), batch-leading."""
    nd = np.ndim(U[0])
    t = th[:, i].reshape((-1,) + (1,) * nd)
    t4 = th[:, 3].reshape((-1,) + (1,) * nd)
    others = np.prod([U[j] for j in range(3) if j != i], axis=0)
    return t + t4 * (others - 1)


def pair_multiplier(th, U, i, j):
    """L_i L_j + theta4 u_k for the pair (i, j), k the remaining coordinate."""
    k = 3 - i - j
    nd = np.ndim(U[0])
    t4 = th[:, 3].reshape((-1,) + (1,) * nd)
    return _L(th, U, i) * _L(th, U, j) + t4 * U[k]


def h_multiplier(th, U):
    """h(u; theta) = L1 L2 L3 + theta4 (1 + sum_k u_k L_k)."""
    nd = np.ndim(U[0])
    t4 = th[:, 3].reshape((-1,) + (1,) * nd)
    L = [_L(th, U, i) for i in range(3)]
    return L[0] * L[1] * L[2] + t4 * (1 + U[0] * L[0] + U[1] * L[1] + U[2] * L[2])


def residuals_D3(sample, theta_hat, u) -> TrivariateResiduals:
    """The seven residuals at points ``u`` (..., 3).

    D1..D3 are evaluated on the slices (u1,1,1), (1,u2,1), (1,1,u3).
    ``sample`` may be a pgf source to inject a known pgf.
    """
    src = as_source(sample)
    th = theta_batch(theta_hat, src.B, 3)
    u = np.asarray(u, dtype=float)
    shape = u.shape[:-1]
    pts = u.reshape(-1, 3)
    U = [pts[:, k] for k in range(3)]
    out = []
    for k in range(3):
        s = np.ones_like(pts)
        s[:, k] = pts[:, k]
        orders = tuple(int(j == k) for j in range(3))
        out.append(src.at(s, orders) - th[:, k:k + 1] * src.at(s, (0, 0, 0)))
    g = src.at(pts, (0, 0, 0))
    for i, j in PAIRS:
        orders = tuple(int(q in (i, j)) for q in range(3))
        out.append(src.at(pts, orders) - pair_multiplier(th, U, i, j) * g)
    out.append(src.at(pts, (1, 1, 1)) - h_multiplier(th, U) * g)
    if src.B == 1:
        out = [D[0].reshape(shape) for D in out]
    else:
        out = [D.reshape((-1,) + shape) for D in out]
    return TrivariateResiduals(*out)


def _T3_chunk(src, th, grid: QuadratureGrid) -> np.ndarray:
    total = sum(marginal_term(src, th, grid, k) for k in range(3))
    axes = grid.nodes
    U = np.meshgrid(*axes, indexing="ij")
    g = src.on_grid(axes, (0, 0, 0))
    acc = np.zeros_like(g)
    for i, j in PAIRS:
        orders = tuple(int(q in (i, j)) for q in range(3))
        acc += (src.on_grid(axes, orders) - pair_multiplier(th, U, i, j) * g) ** 2
    acc += (src.on_grid(axes, (1, 1, 1)) - h_multiplier(th, U) * g) ** 2
    return src.n * (total + grid.integrate(acc))


def _chunked(fn, src, th, *args):
    """Apply a batch kernel in chunks so 3-D grids stay small in memory."""
    if not isinstance(src, EmpiricalPGF) or src.B <= CHUNK:
        return fn(src, th, *args)
    out = []
    for s in range(0, src.B, CHUNK):
        sub = EmpiricalPGF.from_tables(src.tables[s:s + CHUNK], src.n, src.maxima[s:s + CHUNK])
        out.append(fn(sub, th[s:s + CHUNK], *args))
    return np.concatenate(out)


def T3_values(src, th, grid: QuadratureGrid) -> np.ndarray:
    return _chunked(_T3_chunk, src, th, grid)


def T3_stat(sample, theta_hat, a=(0, 0, 0), grid: QuadratureGrid | None = None, warn: bool = False) -> StatValue:
    """n * int sum_{k=1..7} D_k^2 w over [0,1]^3 by tensor quadrature."""
    if warn:
        warnings.warn("T3 is expensive: cost grows with the cube of the quadrature order", stacklevel=2)
    src = as_source(sample)
    grid = grid or make_grid(3, a)
    v = T3_values(src, theta_batch(theta_hat, src.B, 3), grid)
    return StatValue("T3", float(_squeeze(v)), a=grid.a)


def R3_stat(sample, theta_hat, a=(0, 0, 0), grid: QuadratureGrid | None = None) -> StatValue:
    return Rm_stat(sample, theta_hat, a, grid, name="R3")


def S3_stat(sample, theta_hat, a=(0, 0, 0), grid: QuadratureGrid | None = None) -> StatValue:
    return Sm_stat(sample, theta_hat, a, grid, name="S3")


def Rm_stat(sample, theta_hat, a=None, grid: QuadratureGrid | None = None, name: str = "R") -> StatValue:
    src = as_source(sample)
    grid = grid or make_grid(src.m, a)
    v = _chunked(R_values, src, theta_batch(theta_hat, src.B, src.m), grid)
    return StatValue(name, float(_squeeze(v)), a=grid.a)


def Sm_stat(sample, theta_hat, a=None, grid: QuadratureGrid | None = None, name: str = "S") -> StatValue:
    src = as_source(sample)
    grid = grid or make_grid(src.m, a)
    v = _chunked(S_values, src, theta_batch(theta_hat, src.B, src.m), grid)
    return StatValue(name, float(_squeeze(v)), a=grid.a)


def Wm_stat(sample, theta_hat, m: int | None = None) -> StatValue:
    src = as_source(sample)
    if m is not None and m != src.m:
        raise ValueError(f"sample has {src.m} coordinates, not {m}")
    v = W_values(src, theta_batch(theta_hat, src.B, src.m))
    return StatValue("W" if src.m == 2 else f"W{src.m}", float(_squeeze(v)))


def W3_stat(sample, theta_hat) -> StatValue:
    return Wm_stat(sample, theta_hat, 3)


# ---------------------------------------------------------------------------
# exact Gram form of T3 (reference implementation)


def _poly_mul(p, q):
    out = {}
    for e1, c1 in p.items():
        for e2, c2 in q.items():
            e = tuple(x + y for x, y in zip(e1, e2))
            out[e] = out.get(e, 0.0) + c1 * c2
    return out


def _poly_add(*ps):
    out = {}
    for p in ps:
        for e, c in p.items():
            out[e] = out.get(e, 0.0) + c
    return out


def _poly_L(th, i):
    e = tuple(0 if j == i else 1 for j in range(3))
    return {(0, 0, 0): th[:, i] - th[:, 3], e: th[:, 3]}


def _unit(k):
    return tuple(int(j == k) for j in range(3))


def T3_values_gram(src: EmpiricalPGF, th: np.ndarray, a) -> np.ndarray:
    """Exact T3 from frequency tables: each residual's polynomial coefficients
    enter a quadratic form with Hilbert-type matrices on every axis."""
    a = _exponents(a, 3)
    P = src.tables
    B = P.shape[0]
    s = P.shape[1:]
    total = np.zeros(B)
    # marginal residuals
    for k in range(3):
        other = tuple(q + 1 for q in range(3) if q != k)
        pk = np.zeros((B, s[k] + 1))
        pk[:, :s[k]] = P.sum(axis=other)
        qk = np.arange(1, s[k] + 1) * pk[:, 1:] - th[:, k:k + 1] * pk[:, :s[k]]
        mass = np.prod([1.0 / (a[j] + 1.0) for j in range(3) if j != k])
        total += np.einsum("bi,ik,bk->b", qk, hilbert(s[k], a[k]), qk) * mass
    t4 = th[:, 3]
    L = [_poly_L(th, i) for i in range(3)]
    mults = {}
    for i, j in PAIRS:
        k = 3 - i - j
        mults[(i, j)] = _poly_add(_poly_mul(L[i], L[j]), {_unit(k): t4})
    h = _poly_mul(_poly_mul(L[0], L[1]), L[2])
    h = _poly_add(h, {(0, 0, 0): t4}, *[_poly_mul({_unit(k): t4}, L[k]) for k in range(3)])
    mults[(0, 1, 2)] = h
    size = tuple(x + 2 for x in s)            # multipliers raise degrees by at most 2
    H = [hilbert(size[k], a[k]) for k in range(3)]
    for S, M in mults.items():
        C = np.zeros((B,) + size)
        # derivative part: prod_{k in S} (r_k + 1) p(r + e_S)
        src_sl = tuple(slice(1, None) if k in S else slice(None) for k in range(3))
        Ps = P[(slice(None),) + src_sl]
        fac = np.ones(Ps.shape[1:])
        for k in S:
            r = np.arange(1, Ps.shape[1 + k] + 1).reshape(tuple(-1 if q == k else 1 for q in range(3)))
            fac = fac * r
        C[(slice(None),) + tuple(slice(0, n) for n in Ps.shape[1:])] += fac * Ps
        for e, coef in M.items():
            C[(slice(None),) + tuple(slice(e[k], e[k] + s[k]) for k in range(3))] -= coef.reshape(-1, 1, 1, 1) * P
        total += np.einsum("bijk,ip,jq,kr,bpqr->b", C, H[0], H[1], H[2], C, optimize=True)
    return src.n * total


def subsets(m: int):
    """Nonempty coordinate subsets in size order (used in documentation and tests)."""
    return [c for r in range(1, m + 1) for c in itertools.combinations(range(m), r)]
