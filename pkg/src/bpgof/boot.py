"""Parametric bootstrap p-values.

For an observed sample: estimate theta, compute the statistic, then for
b = 1..B draw a sample of the same size from the fitted null, re-estimate and
recompute.  Replicate b always uses the substream (seed, "boot", b), and
replicates are processed in fixed-size chunks whatever the number of workers,
so a report is a pure function of (sample, config).
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy.stats import chi2, kstest, kstwobign

from . import registry
from .estimate import estimate_batch
from .model import as_sample, sample_common_shock
from .rng import Substreams
from .sources import EmpiricalPGF
from .stats import StatValue

ALPHAS = (0.01, 0.05, 0.10)
CHUNK = 50


@dataclass(frozen=True)
class BootstrapConfig:
    B: int = 500
    seed: int = 0
    statistic: str = "T"
    a: Optional[tuple] = None
    estimator: str = "mle"
    workers: int = 1
    keep_replicates: bool = False
    convention: str = "plus_one"        # (1 + #exceed)/(B + 1); "raw" gives #exceed/B
    alphas: tuple = ALPHAS
    order: Optional[int] = None          # quadrature order, default per dimension
    ddof: int = 0
    max_retries: int = 3

    def __post_init__(self):
        if int(self.B) < 1:
            raise ValueError("B must be >= 1")
        if self.convention not in ("plus_one", "raw"):
            raise ValueError(f"unknown p-value convention {self.convention!r}")
        if self.estimator not in ("mle", "moment"):
            raise ValueError(f"unknown estimator {self.estimator!r}")
        registry.get(self.statistic)


@dataclass
class TestReport:
    observed: StatValue
    p_boot: float
    p_raw: float
    theta_hat: tuple
    estimator: str
    B: int
    seed: int
    n: int
    exceed: int
    decision_at: dict
    flags: list = field(default_factory=list)
    replicate_values: Optional[list] = None
    wall_time: float = 0.0

    def to_dict(self) -> dict:
        d = {
            "statistic": self.observed.name,
            "a": list(self.observed.a) if self.observed.a is not None else None,
            "value": self.observed.value,
            "p_boot": self.p_boot,
            "theta_hat": list(self.theta_hat),
            "estimator": self.estimator,
            "B": self.B,
            "seed": self.seed,
            "n": self.n,
            "flags": list(self.flags),
            "wall_time": self.wall_time,
        }
        if self.observed.p_asym is not None:
            d["p_asym"] = self.observed.p_asym
            d["df"] = self.observed.df
        if self.replicate_values is not None:
            d["replicate_values"] = list(self.replicate_values)
        return d

    def same_result(self, other: "TestReport") -> bool:
        """Equality of everything except wall time."""
        a, b = asdict(self), asdict(other)
        a.pop("wall_time")
        b.pop("wall_time")
        return a == b


def p_value(replicates: np.ndarray, observed: float, convention: str = "plus_one") -> tuple[float, int]:
    """Bootstrap p-value and exceedance count; NaN replicates never exceed."""
    reps = np.asarray(replicates, dtype=float)
    exceed = int(np.sum(reps >= observed))
    B = reps.size
    if convention == "plus_one":
        return (1 + exceed) / (B + 1), exceed
    return exceed / B, exceed


def _estimate_flags(degenerate, boundary, converged) -> list:
    flags = []
    if degenerate:
        flags.append("degenerate_sample")
    elif boundary:
        flags.append("boundary_estimate")
    if not converged:
        flags.append("not_converged")
    return flags


def _run_chunk(theta_hat, n, seed, indices, specs, cfg, null_degenerate):
    """Resample, re-estimate and evaluate every statistic for replicates ``indices``."""
    ss = Substreams(seed)
    m = theta_hat.size - 1
    samples = np.empty((len(indices), n, m), dtype=np.int64)
    for q, b in enumerate(indices):
        samples[q] = sample_common_shock(theta_hat, n, ss("boot", b))
    theta, degenerate, _, _ = estimate_batch(samples, cfg.estimator, cfg.ddof)
    retries = 0
    if not null_degenerate:
        for attempt in range(1, cfg.max_retries + 1):
            bad = np.flatnonzero(degenerate)
            if bad.size == 0:
                break
            retries += bad.size
            for q in bad:
                samples[q] = sample_common_shock(theta_hat, n, ss("boot", indices[q], attempt))
            th_new, deg_new, _, _ = estimate_batch(samples[bad], cfg.estimator, cfg.ddof)
            theta[bad], degenerate[bad] = th_new, deg_new
    src = EmpiricalPGF(samples)
    values = {}
    for key, (stat, a) in specs.items():
        if stat.kind == "moment":
            values[key] = stat.kernel(samples, src, theta, a, cfg.order, cfg.ddof)
        else:
            values[key] = stat.kernel(samples, src, theta, a, cfg.order)
    return values, retries, int(degenerate.sum())


def _spec_key(name, a):
    return name if a is None else f"{name}{tuple(float(x) for x in a)}"


def bootstrap_tests(sample, statistics, config: BootstrapConfig) -> dict:
    """Run several statistics on the same fitted model and the same resamples.

    ``statistics`` is a list of names or (name, a) pairs.  Returns a dict keyed
    by name (or name plus exponents when the same name appears twice).
    """
    t_start = time.perf_counter()
    X = as_sample(sample).data
    n, m = X.shape
    specs = {}
    for item in statistics:
        name, a = (item, None) if isinstance(item, str) else item
        stat = registry.get(name)
        if stat.dim != m:
            raise ValueError(f"{name} needs {stat.dim} coordinates, sample has {m}")
        a = stats_exponents(stat, a if a is not None else config.a)
        key = name if all(s[0].name != name for s in specs.values()) else _spec_key(name, a)
        specs[key] = (stat, a)

    theta, degenerate, boundary, converged = estimate_batch(X[None], config.estimator, config.ddof)
    theta_hat = theta[0]
    base_flags = _estimate_flags(bool(degenerate[0]), bool(boundary[0]), bool(converged[0]))
    src = EmpiricalPGF(X[None])
    observed = {}
    for key, (stat, a) in specs.items():
        if stat.kind == "moment":
            observed[key] = float(stat.kernel(X[None], src, theta, a, config.order, config.ddof)[0])
        else:
            observed[key] = float(stat.kernel(X[None], src, theta, a, config.order)[0])

    B = int(config.B)
    chunks = [list(range(s, min(s + CHUNK, B + 1))) for s in range(1, B + 1, CHUNK)]
    run = lambda idx: _run_chunk(theta_hat, n, config.seed, idx, specs, config, bool(degenerate[0]))
    if config.workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=int(config.workers)) as pool:
            results = list(pool.map(run, chunks))
    else:
        results = [run(idx) for idx in chunks]
    retries = sum(r[1] for r in results)
    failed = sum(r[2] for r in results)
    elapsed = time.perf_counter() - t_start

    reports = {}
    for key, (stat, a) in specs.items():
        reps = np.concatenate([r[0][key] for r in results])
        obs = observed[key]
        flags = list(base_flags)
        if degenerate[0]:
            flags.append("resamples_degenerate")
        if retries:
            flags.append(f"resample_retries={retries}")
        if failed:
            flags.append(f"boundary_replicates={failed}")
        nan_reps = int(np.sum(~np.isfinite(reps)))
        if nan_reps:
            flags.append(f"undefined_replicates={nan_reps}")
        if math.isfinite(obs):
            p_plus, exceed = p_value(reps, obs, "plus_one")
            p_raw, _ = p_value(reps, obs, "raw")
        else:
            flags.append("undefined_statistic")
            p_plus = p_raw = float("nan")
            exceed = 0
        p_boot = p_plus if config.convention == "plus_one" else p_raw
        df = p_asym = None
        if stat.kind == "moment" and math.isfinite(obs):
            df = stat.df(n)
            p_asym = float(chi2.sf(obs, df))
        sv = StatValue(stat.name, obs, df, p_asym, a)
        reports[key] = TestReport(
            observed=sv, p_boot=p_boot, p_raw=p_raw, theta_hat=tuple(float(v) for v in theta_hat),
            estimator=config.estimator, B=B, seed=int(config.seed), n=n, exceed=exceed,
            decision_at={alpha: bool(p_boot <= alpha) for alpha in config.alphas}, flags=flags,
            replicate_values=[float(v) for v in reps] if config.keep_replicates else None,
            wall_time=elapsed)
    return reports


def stats_exponents(stat, a):
    if not stat.weighted:
        return None
    if a is None:
        return stat.default_a()
    a = tuple(float(x) for x in a)
    if len(a) != stat.dim:
        raise ValueError(f"{stat.name} needs {stat.dim} weight exponents, got {len(a)}")
    return a


def bootstrap_test(sample, config: BootstrapConfig) -> TestReport:
    """Bootstrap test of the null for ``config.statistic``."""
    reports = bootstrap_tests(sample, [(config.statistic, config.a)], config)
    return next(iter(reports.values()))


def pvalue_uniformity_check(pvalues, round_to: Optional[int] = None) -> tuple[float, float]:
    """One-sample KS statistic against U(0,1) and its asymptotic p-value.

    ``round_to`` rounds the p-values (e.g. to 2 decimals) before testing.
    """
    p = np.asarray(pvalues, dtype=float)
    p = p[np.isfinite(p)]
    if p.size < 2:
        raise ValueError("need at least two p-values")
    if np.any((p < 0) | (p > 1)):
        raise ValueError("p-values must lie in [0, 1]")
    if round_to is not None:
        p = np.round(p, round_to)
    D = float(kstest(p, "uniform").statistic)
    return D, float(kstwobign.sf(math.sqrt(p.size) * D))
