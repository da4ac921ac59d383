"""Name -> batch kernel table shared by the bootstrap engine, harness and CLI.

Every kernel has the signature ``kernel(X, src, theta, a, order) -> (B,)`` with
X the raw counts (B, n, m), ``src`` their ``EmpiricalPGF`` and ``theta`` the
(B, m+1) estimates.  The observed statistic and every bootstrap replicate go
through the same kernel.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

from . import mvariate, stats
from .quadrature import QuadratureGrid


@dataclass(frozen=True)
class Statistic:
    name: str
    dim: int
    kind: str                       # "boot" or "moment"
    weighted: bool
    kernel: Callable
    label: str
    df: Optional[Callable] = None

    def grid(self, a, order) -> QuadratureGrid:
        return stats.make_grid(self.dim, a, order)

    def default_a(self):
        return (0.0,) * self.dim if self.weighted else None


def _R(X, src, th, a, order):
    return stats.R_values(src, th, stats.make_grid(2, a, order))


def _S(X, src, th, a, order):
    return stats.S_values(src, th, stats.make_grid(2, a, order))


def _W(X, src, th, a, order):
    return stats.W_values(src, th)


def _T(X, src, th, a, order):
    return stats.T_values_gram(src, th, a)


def _Tq(X, src, th, a, order):
    return stats.T_values_quadrature(src, th, stats.make_grid(2, a, order))


def _T3(X, src, th, a, order):
    return mvariate.T3_values(src, th, stats.make_grid(3, a, order))


def _R3(X, src, th, a, order):
    return mvariate._chunked(stats.R_values, src, th, stats.make_grid(3, a, order))


def _S3(X, src, th, a, order):
    return mvariate._chunked(stats.S_values, src, th, stats.make_grid(3, a, order))


def _moment(fn):
    def kernel(X, src, th, a, order, ddof=0):
        return fn(X, ddof)
    return kernel


STATISTICS = {
    "R": Statistic("R", 2, "boot", True, _R, "R_{n,a}"),
    "S": Statistic("S", 2, "boot", True, _S, "S_{n,a}"),
    "W": Statistic("W", 2, "boot", False, _W, "W_n"),
    "T": Statistic("T", 2, "boot", True, _T, "T_{n,a}"),
    "Tq": Statistic("Tq", 2, "boot", True, _Tq, "T_{n,a} (quadrature)"),
    "T3": Statistic("T3", 3, "boot", True, _T3, "T_{3,n,a}"),
    "R3": Statistic("R3", 3, "boot", True, _R3, "R_{3,n,a}"),
    "S3": Statistic("S3", 3, "boot", True, _S3, "S_{3,n,a}"),
    "W3": Statistic("W3", 3, "boot", False, _W, "W_{3,n}"),
    "crockett": Statistic("crockett", 2, "moment", False, _moment(stats.crockett_batch), "T (Crockett)",
                          lambda n: 2),
    "IB": Statistic("IB", 2, "moment", False, _moment(stats.ib_batch), "I_B", lambda n: 2 * n - 3),
    "NIB": Statistic("NIB", 2, "moment", False, _moment(stats.nib_batch), "NI_B", lambda n: 2 * n - 3),
}


def get(name: str) -> Statistic:
    try:
        return STATISTICS[name]
    except KeyError:
        raise ValueError(f"unknown statistic {name!r}; choose from {sorted(STATISTICS)}") from None
