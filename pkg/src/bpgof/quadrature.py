"""Tensor Gauss rules on the unit cube with weight prod u_k**a_k.

Each axis uses Gauss-Jacobi nodes for the weight u**a on [0, 1] (plain
Gauss-Legendre when a = 0), so the possibly singular weight is absorbed into
the rule and polynomial integrands of degree <= 2*order - 1 are integrated
exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi

from .errors import ParameterError


@lru_cache(maxsize=64)
def _rule(order: int, a: float) -> tuple[np.ndarray, np.ndarray]:
    # Jacobi weight (1-x)^0 (1+x)^a on [-1, 1]; u = (1+x)/2 gives u^a du up to 2^(a+1).
    x, w = roots_jacobi(order, 0.0, a)
    u = (1.0 + x) / 2.0
    w = w / 2.0 ** (a + 1.0)
    u.setflags(write=False)
    w.setflags(write=False)
    return u, w


def gauss_rule01(order: int, a: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the ``order``-point rule for int_0^1 f(u) u**a du."""
    order = int(order)
    if order < 2:
        raise ValueError("quadrature order must be >= 2")
    a = float(a)
    if not a > -1:
        raise ParameterError(f"weight exponent must exceed -1, got {a}")
    return _rule(order, a)


def check_exponents(a, d: int) -> tuple[float, ...]:
    a = tuple(float(v) for v in a)
    if len(a) != d:
        raise ParameterError(f"expected {d} weight exponents, got {len(a)}")
    if not all(v > -1 for v in a):
        raise ParameterError(f"weight exponents must exceed -1, got {a}")
    return a


@dataclass(frozen=True)
class QuadratureGrid:
    """Tensor-product rule on [0,1]^d for the weight prod u_k**a_k."""

    order: int
    a: tuple

    def __post_init__(self):
        object.__setattr__(self, "a", check_exponents(self.a, len(self.a)))
        if int(self.order) < 2:
            raise ValueError("quadrature order must be >= 2")
        object.__setattr__(self, "order", int(self.order))

    @property
    def d(self) -> int:
        return len(self.a)

    def axis(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        return gauss_rule01(self.order, self.a[k])

    @property
    def nodes(self) -> list[np.ndarray]:
        return [self.axis(k)[0] for k in range(self.d)]

    @property
    def weights(self) -> list[np.ndarray]:
        return [self.axis(k)[1] for k in range(self.d)]

    def tensor_weights(self) -> np.ndarray:
        w = self.weights[0]
        for k in range(1, self.d):
            w = np.multiply.outer(w, self.weights[k])
        return w

    def weight_mass(self, k: int) -> float:
        """int_0^1 u**a_k du, the factor picked up by an axis frozen at u_k = 1."""
        return 1.0 / (self.a[k] + 1.0)

    def integrate(self, values: np.ndarray) -> np.ndarray:
        """Integrate values on the grid; trailing d axes are the node axes."""
        out = values
        for k in reversed(range(self.d)):
            out = out @ self.weights[k]
        return out
