"""Alternative families for power studies, with exact moment formulas.

Families (parameters in the order written in a spec string):

* ``BB(m; p1, p2, p3)`` - sum of m iid correlated Bernoulli pairs with
  P(Z1=1)=p1, P(Z2=1)=p2, P(Z1=Z2=1)=p3.
* ``BPP(p; (t1,t2,t3); (s1,s2,s3))`` - mixture p BP(t) + (1-p) BP(s).
* ``BNTA(lam; t1, t2, t3)`` - Poisson(lam) number of iid clusters, each
  (Y1+Y3, Y2+Y3) with independent Poisson Y of means t1, t2, t3.
* ``BNB(k; p1, p2, p3)`` - gamma mixed bivariate Poisson: G ~ Gamma(k, 1) and
  X | G ~ BP(p1 G, p2 G, p3 G) (marginal means, common-shock mean p3 G).
* ``BLS(t1, t2, t3)`` - bivariate logarithmic series with pgf
  log(1 - t1 u1 - t2 u2 - t3 u1 u2) / log(1 - t1 - t2 - t3).
* ``BP(t1, t2, t3)`` / ``TP(t1, t2, t3, t4)`` - the null families themselves.

Spec strings may use ``d`` for 1 - exp(-1), e.g. ``BLS(3d/7,2d/7,2d/7)``.
"""

from __future__ import annotations

import ast
import math
import operator
import re
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ParameterError
from .model import CountSample, sample_common_shock, theta_array

D_CONST = 1.0 - math.exp(-1.0)
FAMILIES = ("BB", "BNB", "BPP", "BNTA", "BLS", "BP", "TP")


@dataclass(frozen=True)
class AlternativeSpec:
    family: str
    params: tuple
    moments: Optional[tuple] = None     # target (dispersion1, dispersion2, rho)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ParameterError(f"unknown family {self.family!r}")
        _validate(self.family, self.params)

    @property
    def dim(self) -> int:
        return 3 if self.family == "TP" else 2

    def label(self) -> str:
        def fmt(v):
            if isinstance(v, tuple):
                return "(" + ",".join(fmt(x) for x in v) + ")"
            return f"{v:g}"
        p = self.params
        if self.family in ("BB", "BNB", "BPP", "BNTA"):
            return f"{self.family}({fmt(p[0])};{','.join(fmt(x) for x in p[1:])})".replace(",(", ";(")
        return f"{self.family}({','.join(fmt(x) for x in p)})"


def _validate(family, params):
    p = params
    try:
        if family == "BB":
            m, p1, p2, p3 = p
            cells = (p3, p1 - p3, p2 - p3, 1 - p1 - p2 + p3)
            if int(m) != m or m < 1 or min(cells) < 0:
                raise ParameterError(f"BB parameters {p} outside the domain")
        elif family == "BPP":
            w, t, s = p
            if not 0 <= w <= 1:
                raise ParameterError("mixing weight must lie in [0, 1]")
            theta_array(t, 2)
            theta_array(s, 2)
        elif family == "BNTA":
            lam, t1, t2, t3 = p
            if lam <= 0 or min(t1, t2, t3) < 0:
                raise ParameterError(f"BNTA parameters {p} outside the domain")
        elif family == "BNB":
            k, p1, p2, p3 = p
            if k <= 0 or p3 < 0 or p1 < p3 or p2 < p3:
                raise ParameterError(f"BNB parameters {p} outside the domain")
        elif family == "BLS":
            t = p
            if len(t) != 3 or min(t) < 0 or not 0 < sum(t) < 1:
                raise ParameterError(f"BLS parameters {p} outside the domain")
        elif family == "BP":
            theta_array(p, 2)
        elif family == "TP":
            theta_array(p, 3)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ParameterError):
            raise
        raise ParameterError(f"malformed {family} parameters {p}: {exc}") from exc


# ---------------------------------------------------------------------------
# parsing

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv,
           ast.Pow: operator.pow}


def _eval(node):
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        return node.value
    if isinstance(node, ast.Name) and node.id == "d":
        return D_CONST
    if isinstance(node, ast.Tuple):
        return tuple(_eval(e) for e in node.elts)
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.USub):
        return -_eval(node.operand)
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        return _BINOPS[type(node.op)](_eval(node.left), _eval(node.right))
    raise ParameterError(f"unsupported expression in family spec: {ast.dump(node)}")


def parse_family(text: str) -> AlternativeSpec:
    """Parse e.g. ``"BPP(0.40;(0.2,0.2,0.1);(1.0,0.9,0.1))"``."""
    s = text.strip()
    s = re.sub(r"(\d)\s*d\b", r"\1*d", s.replace(";", ","))
    try:
        tree = ast.parse(s, mode="eval").body
    except SyntaxError as exc:
        raise ParameterError(f"cannot parse family spec {text!r}") from exc
    if not (isinstance(tree, ast.Call) and isinstance(tree.func, ast.Name)):
        raise ParameterError(f"family spec must look like NAME(...), got {text!r}")
    family = tree.func.id.upper()
    args = tuple(_eval(a) for a in tree.args)
    if family == "BB":
        args = (int(args[0]),) + tuple(float(x) for x in args[1:])
    return AlternativeSpec(family, args)


def as_spec(spec) -> AlternativeSpec:
    return spec if isinstance(spec, AlternativeSpec) else parse_family(spec)


# ---------------------------------------------------------------------------
# samplers


def sample_alternative_array(spec, n: int, rng: np.random.Generator) -> np.ndarray:
    """(n, d) integer draws; no CountSample wrapping (hot path)."""
    spec = as_spec(spec)
    f, p = spec.family, spec.params
    if f == "BB":
        m, p1, p2, p3 = p
        cells = rng.multinomial(m, [p3, p1 - p3, p2 - p3, max(0.0, 1 - p1 - p2 + p3)], size=n)
        return np.column_stack([cells[:, 0] + cells[:, 1], cells[:, 0] + cells[:, 2]])
    if f == "BPP":
        w, t, s = p
        first = rng.random(n) < w
        lam = np.where(first[:, None], _private(t), _private(s))
        y = rng.poisson(lam)
        return y[:, :2] + y[:, 2:]
    if f == "BNTA":
        lam, t1, t2, t3 = p
        N = rng.poisson(lam, size=n)
        y = rng.poisson(N[:, None] * np.array([t1, t2, t3]))
        return y[:, :2] + y[:, 2:]
    if f == "BNB":
        k, p1, p2, p3 = p
        G = rng.gamma(k, 1.0, size=n)
        y = rng.poisson(G[:, None] * np.array([p1 - p3, p2 - p3, p3]))
        return y[:, :2] + y[:, 2:]
    if f == "BLS":
        t = np.asarray(p, dtype=float)
        s = t.sum()
        K = rng.logseries(s, size=n)
        cells = rng.multinomial(K, t / s)
        return np.column_stack([cells[:, 0] + cells[:, 2], cells[:, 1] + cells[:, 2]])
    if f in ("BP", "TP"):
        return sample_common_shock(np.asarray(p, dtype=float), n, rng)
    raise ParameterError(f"unknown family {f!r}")


def _private(t):
    t1, t2, t3 = t
    return np.array([t1 - t3, t2 - t3, t3])


def sample_alternative(spec, n: int, rng: np.random.Generator) -> CountSample:
    """n iid draws from the family."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return CountSample(sample_alternative_array(spec, n, rng))


# ---------------------------------------------------------------------------
# moments


@dataclass(frozen=True)
class Moments:
    mean1: float
    mean2: float
    var1: float
    var2: float
    cov: float
    exact: bool = True

    @property
    def dispersion(self) -> tuple[float, float]:
        return self.var1 / self.mean1, self.var2 / self.mean2

    @property
    def rho(self) -> float:
        return self.cov / math.sqrt(self.var1 * self.var2)

    def as_tuple(self):
        return (self.mean1, self.mean2, self.var1, self.var2, self.cov)


def theoretical_moments(spec) -> Moments:
    """Closed-form means, variances and covariance of the first two coordinates."""
    spec = as_spec(spec)
    f, p = spec.family, spec.params
    if f == "BB":
        m, p1, p2, p3 = p
        return Moments(m * p1, m * p2, m * p1 * (1 - p1), m * p2 * (1 - p2), m * (p3 - p1 * p2))
    if f in ("BP", "TP"):
        return Moments(p[0], p[1], p[0], p[1], p[-1])
    if f == "BPP":
        w, t, s = p
        comps = ((w, t), (1 - w, s))
        e1 = sum(q * c[0] for q, c in comps)
        e2 = sum(q * c[1] for q, c in comps)
        e11 = sum(q * (c[0] + c[0] ** 2) for q, c in comps)
        e22 = sum(q * (c[1] + c[1] ** 2) for q, c in comps)
        e12 = sum(q * (c[2] + c[0] * c[1]) for q, c in comps)
        return Moments(e1, e2, e11 - e1 ** 2, e22 - e2 ** 2, e12 - e1 * e2)
    if f == "BNTA":
        lam, t1, t2, t3 = p
        mu1, mu2 = t1 + t3, t2 + t3
        return Moments(lam * mu1, lam * mu2, lam * (mu1 + mu1 ** 2), lam * (mu2 + mu2 ** 2),
                       lam * (t3 + mu1 * mu2))
    if f == "BNB":
        k, p1, p2, p3 = p
        return Moments(k * p1, k * p2, k * p1 * (1 + p1), k * p2 * (1 + p2), k * (p3 + p1 * p2))
    if f == "BLS":
        t1, t2, t3 = p
        s = t1 + t2 + t3
        L = -math.log(1 - s)
        a1, a2 = t1 + t3, t2 + t3
        m1 = a1 / ((1 - s) * L)
        m2 = a2 / ((1 - s) * L)
        f11 = a1 ** 2 / ((1 - s) ** 2 * L)
        f22 = a2 ** 2 / ((1 - s) ** 2 * L)
        e12 = (t3 / (1 - s) + a1 * a2 / (1 - s) ** 2) / L
        return Moments(m1, m2, f11 + m1 - m1 ** 2, f22 + m2 - m2 ** 2, e12 - m1 * m2)
    raise ParameterError(f"unknown family {f!r}")
