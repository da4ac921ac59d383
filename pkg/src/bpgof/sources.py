"""Generating-function sources evaluated on quadrature grids.

The integral statistics only need a pgf and its mixed first-order partials
(at most one derivative per coordinate).  Two sources provide them:

* ``EmpiricalPGF`` - the epgf of a batch of samples, stored as relative
  frequency tables and evaluated by contracting each table axis against a
  power matrix ``u**r`` or ``r*u**(r-1)``;
* ``PoissonPGF`` - the exact common-shock pgf, used to inject the null model
  in place of the data (every residual must then vanish).

Both are batch-leading: results have shape ``(B, ...)``.
"""

from __future__ import annotations

import numpy as np

from .errors import SampleError


def power_matrix(kmax: int, u: np.ndarray, deriv: int) -> np.ndarray:
    """V[r, q] = u_q**r (deriv=0) or r*u_q**(r-1) (deriv=1), r = 0..kmax.

    Follows the conventions 0**0 = 1 and r*u**(r-1) = 0 for r = 0.
    """
    u = np.asarray(u, dtype=float)
    r = np.arange(kmax + 1)[:, None]
    if deriv == 0:
        return u[None, :] ** r
    V = np.zeros((kmax + 1, u.size))
    if kmax >= 1:
        V[1:] = r[1:] * u[None, :] ** (r[1:] - 1)
    return V


def set_partitions(items):
    """All set partitions of a list, as lists of blocks."""
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        yield [[first]] + part
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]


class EmpiricalPGF:
    """epgf of a batch of count samples of common size n.

    ``X`` has shape (B, n, m) or (n, m).  Frequency tables share one support box
    sized by the batch maxima.
    """

    def __init__(self, X):
        X = np.asarray(X)
        if X.ndim == 2:
            X = X[None]
        if X.ndim != 3:
            raise SampleError(f"expected (B, n, m) counts, got shape {X.shape}")
        if np.any(X < 0):
            raise SampleError("negative count")
        X = X.astype(np.int64, copy=False)
        B, n, m = X.shape
        self.B, self.n, self.m = B, n, m
        self.maxima = X.max(axis=1)                      # (B, m)
        self.shape = tuple(int(k) + 1 for k in self.maxima.max(axis=0))
        flat = np.ravel_multi_index(tuple(X[..., j] for j in range(m)), self.shape)
        flat = flat + np.arange(B)[:, None] * int(np.prod(self.shape))
        counts = np.bincount(flat.ravel(), minlength=B * int(np.prod(self.shape)))
        self.tables = counts.reshape((B,) + self.shape) / n

    @classmethod
    def from_tables(cls, tables, n, maxima=None):
        """Build from relative-frequency tables of shape (B, K1+1, ..., Km+1)."""
        obj = cls.__new__(cls)
        tables = np.asarray(tables, dtype=float)
        obj.tables = tables
        obj.B = tables.shape[0]
        obj.m = tables.ndim - 1
        obj.n = n
        obj.shape = tables.shape[1:]
        if maxima is None:
            maxima = np.empty((obj.B, obj.m), dtype=np.int64)
            for j in range(obj.m):
                other = tuple(k for k in range(1, obj.m + 1) if k != j + 1)
                marg = tables.sum(axis=other)
                idx = np.arange(marg.shape[1])
                maxima[:, j] = np.where(marg > 0, idx, -1).max(axis=1)
        obj.maxima = np.asarray(maxima)
        return obj

    def on_grid(self, axes, orders) -> np.ndarray:
        """Partial derivative with the given 0/1 orders on the tensor grid ``axes``.

        ``axes[k]`` holds the node values of coordinate k (an axis frozen at
        u_k = 1 is passed as ``[1.0]``).  Returns shape (B, q_1, ..., q_m).
        """
        T = self.tables
        for k in range(self.m):
            V = power_matrix(self.shape[k] - 1, axes[k], orders[k])
            T = np.tensordot(T, V, axes=([1], [0]))
        return T

    def at(self, u, orders=None) -> np.ndarray:
        """Partial derivative at scattered points ``u`` of shape (P, m); returns (B, P)."""
        u = np.atleast_2d(np.asarray(u, dtype=float))
        if orders is None:
            orders = (0,) * self.m
        T = np.tensordot(self.tables, power_matrix(self.shape[0] - 1, u[:, 0], orders[0]), axes=([1], [0]))
        for k in range(1, self.m):
            V = power_matrix(self.shape[k] - 1, u[:, k], orders[k])
            T = np.einsum("bj...p,jp->b...p", T, V)
        return T


class PoissonPGF:
    """Exact common-shock pgf for a batch of parameter vectors (B, m+1).

    ``n`` is the nominal sample size used by the statistics' leading factor.
    """

    def __init__(self, theta, n: int = 1):
        th = np.asarray(theta.as_array() if hasattr(theta, "as_array") else theta, dtype=float)
        if th.ndim == 1:
            th = th[None]
        self.theta = th
        self.B = th.shape[0]
        self.m = th.shape[1] - 1
        self.n = n

    def _eval(self, U, orders):
        m = self.m
        shape = np.broadcast_shapes(*(np.shape(x) for x in U))
        U = [np.broadcast_to(np.asarray(x, dtype=float), shape) for x in U]
        th = self.theta.reshape((self.B, m + 1) + (1,) * len(shape))
        common = th[:, m]
        prod = np.prod(U, axis=0)
        logg = sum(th[:, i] * (U[i] - 1) for i in range(m)) + common * (prod - sum(U) + m - 1)
        g = np.exp(logg)
        active = [i for i in range(m) if orders[i]]
        if not active:
            return g

        def others(block):
            out = np.ones(shape)
            for j in range(m):
                if j not in block:
                    out = out * U[j]
            return out

        total = 0.0
        for part in set_partitions(active):
            term = 1.0
            for block in part:
                if len(block) == 1:
                    i = block[0]
                    term = term * (th[:, i] + common * (others(block) - 1))
                else:
                    term = term * (common * others(block))
            total = total + term
        return g * total

    def on_grid(self, axes, orders) -> np.ndarray:
        U = np.meshgrid(*[np.asarray(a, dtype=float) for a in axes], indexing="ij")
        return self._eval(U, orders)

    def at(self, u, orders=None) -> np.ndarray:
        u = np.atleast_2d(np.asarray(u, dtype=float))
        if orders is None:
            orders = (0,) * self.m
        return self._eval([u[:, k] for k in range(self.m)], orders)
