"""Monte Carlo harness: size and power tables, p-value uniformity, timing.

Replicate r at sample size n draws its data from the substream
(seed, "data/<family>", n, r) and bootstraps with the child seed
derive_seed(seed, "boot-seed", n, r).  A replicate therefore depends only on
(seed, family, n, r), so the reps can be split into shards (``rep_offset``) and
merged later with the same result as a single run.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.stats import chi2

from . import registry
from .alts import AlternativeSpec, as_spec, sample_alternative_array
from .boot import BootstrapConfig, bootstrap_test, bootstrap_tests, pvalue_uniformity_check
from .model import theta_array
from .rng import derive_seed, substream
from .sources import EmpiricalPGF

ALPHAS = (0.05, 0.10)


@dataclass(frozen=True)
class StatSpec:
    name: str
    a: tuple | None = None

    @property
    def key(self) -> str:
        if self.a is None:
            return self.name
        return f"{self.name}({','.join(f'{x:g}' for x in self.a)})"


def stat_specs(statistics, a=None) -> list[StatSpec]:
    """Normalise names or (name, a) pairs; weighted statistics default to ``a`` or zeros."""
    out = []
    for item in statistics:
        name, ai = (item, None) if isinstance(item, str) else item
        stat = registry.get(name)
        if stat.weighted:
            ai = ai if ai is not None else (a if a is not None else stat.default_a())
            ai = tuple(float(x) for x in ai)
            if len(ai) != stat.dim:
                raise ValueError(f"{name} needs {stat.dim} weight exponents")
        else:
            ai = None
        out.append(StatSpec(name, ai))
    return out


def null_spec(theta) -> AlternativeSpec:
    th = theta_array(theta)
    return AlternativeSpec("BP" if th.size == 3 else "TP", tuple(float(v) for v in th))


def _data_tag(spec: AlternativeSpec) -> str:
    return "data/" + spec.label()


def replicate_data(spec, n: int, r: int, seed: int) -> np.ndarray:
    spec = as_spec(spec)
    return sample_alternative_array(spec, n, substream(seed, _data_tag(spec), n, r))


def _one_replicate(job) -> dict:
    """p-values of every statistic on replicate r (top level so it pickles)."""
    spec, n, r, seed, specs, B, estimator, order = job
    X = replicate_data(spec, n, r, seed)
    out = {}
    boot = [s for s in specs if registry.get(s.name).kind == "boot"]
    if boot:
        cfg = BootstrapConfig(B=B, seed=derive_seed(seed, "boot-seed", n, r), statistic=boot[0].name,
                              estimator=estimator, order=order)
        reports = bootstrap_tests(X, [(s.name, s.a) for s in boot], cfg)
        for s, rep in zip(boot, reports.values()):
            out[s.key] = rep.p_boot
    for s in specs:
        stat = registry.get(s.name)
        if stat.kind == "moment":
            v = float(stat.kernel(X[None], None, None, None, None)[0])
            out[s.key] = float(chi2.sf(v, stat.df(n))) if math.isfinite(v) else float("nan")
    return out


def _workers(workers) -> int:
    if workers is None:
        workers = int(os.environ.get("BPGOF_WORKERS", "1"))
    return max(1, int(workers))


def run_replicates(spec, n, specs, reps, B, seed, workers=None, estimator="mle", order=None,
                   rep_offset=0) -> dict:
    """p-value lists per statistic key for reps rep_offset .. rep_offset+reps-1."""
    spec = as_spec(spec)
    jobs = [(spec, n, r, seed, specs, B, estimator, order) for r in range(rep_offset, rep_offset + reps)]
    w = _workers(workers)
    if w > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=w) as pool:
            results = list(pool.map(_one_replicate, jobs, chunksize=max(1, len(jobs) // (4 * w))))
    else:
        results = [_one_replicate(j) for j in jobs]
    return {s.key: [res[s.key] for res in results] for s in specs}


def summarize(pvalues, alphas=ALPHAS, round_to=None) -> dict:
    """Rejection fractions and KS uniformity of one p-value sample.

    Undefined p-values (NaN moment statistics) count as non-rejections and are
    reported under ``failures``.
    """
    p = np.asarray(pvalues, dtype=float)
    finite = np.isfinite(p)
    row = {"reps": int(p.size), "failures": int((~finite).sum())}
    for alpha in alphas:
        row[f"f{int(round(alpha * 100)):02d}"] = float(np.sum(p[finite] <= alpha) / p.size) if p.size else float("nan")
    if finite.sum() >= 2:
        row["ks_stat"], row["ks_p"] = pvalue_uniformity_check(p[finite], round_to=round_to)
    else:
        row["ks_stat"] = row["ks_p"] = float("nan")
    return row


def _table(spec, ns, statistics, reps, B, seed, workers, estimator, a, order, round_to, rep_offset,
           keep_pvalues):
    spec = as_spec(spec)
    specs = stat_specs(statistics, a)
    for s in specs:
        if registry.get(s.name).dim != spec.dim:
            raise ValueError(f"{s.name} is not defined for {spec.dim}-dimensional data")
    if reps < 1:
        raise ValueError("reps must be >= 1")
    rows = []
    for n in ns:
        pv = run_replicates(spec, n, specs, reps, B, seed, workers, estimator, order, rep_offset)
        for s in specs:
            row = {"family": spec.label(), "n": int(n), "statistic": s.key}
            row.update(summarize(pv[s.key], round_to=round_to))
            if keep_pvalues:
                row["pvalues"] = pv[s.key]
                row["rep_offset"] = rep_offset
            rows.append(row)
    return rows


def simulate_size(theta, ns=(30, 50, 70), statistics=("T", "S", "R", "W"), reps=1000, B=500, seed=0,
                  workers=None, estimator="mle", a=None, order=None, round_to=None, rep_offset=0,
                  keep_pvalues=True) -> list[dict]:
    """Empirical type I error table: f05, f10 and the KS p-value per (n, statistic)."""
    return _table(null_spec(theta), ns, statistics, reps, B, seed, workers, estimator, a, order, round_to,
                  rep_offset, keep_pvalues)


def simulate_power(family, ns=(50,), statistics=("T", "S", "R", "W", "crockett", "IB", "NIB"), reps=1000, B=500,
                   seed=0, workers=None, estimator="mle", a=None, order=None, rep_offset=0,
                   keep_pvalues=True) -> list[dict]:
    """Empirical power table at alpha 0.05 (f10 is reported too)."""
    return _table(family, ns, statistics, reps, B, seed, workers, estimator, a, order, None, rep_offset,
                  keep_pvalues)


def merge_shards(*shards, round_to=None) -> list[dict]:
    """Merge row lists produced over disjoint rep ranges into one table."""
    groups = {}
    for rows in shards:
        for row in rows:
            if "pvalues" not in row:
                raise ValueError("shards must keep their p-values to be merged")
            k = (row["family"], row["n"], row["statistic"])
            groups.setdefault(k, []).append((row.get("rep_offset", 0), row["pvalues"]))
    out = []
    for (fam, n, key), parts in groups.items():
        parts.sort(key=lambda t: t[0])
        p = [v for _, vals in parts for v in vals]
        row = {"family": fam, "n": n, "statistic": key}
        row.update(summarize(p, round_to=round_to))
        row["pvalues"] = p
        row["rep_offset"] = parts[0][0]
        out.append(row)
    return out


def bench(theta=(1.0, 1.0, 0.25), ns=(30, 50, 70), statistics=("T", "W", "S", "R"), B=500, reps=3, seed=0,
          estimator="mle", a=None, order=None) -> list[dict]:
    """Average wall and CPU time of one full bootstrap test per statistic.

    Every statistic sees the same datasets; each test runs alone so the
    common costs (resampling and re-estimation) are included.
    """
    spec = null_spec(theta)
    specs = stat_specs(statistics, a)
    rows = []
    for n in ns:
        data = [replicate_data(spec, n, r, seed) for r in range(reps)]
        # warm caches (quadrature rules, Hilbert matrices) outside the timed region
        for s in specs:
            bootstrap_test(data[0], BootstrapConfig(B=1, seed=seed, statistic=s.name, a=s.a,
                                                    estimator=estimator, order=order))
        for s in specs:
            wall, cpu = [], []
            for r, X in enumerate(data):
                cfg = BootstrapConfig(B=B, seed=derive_seed(seed, "bench", n, r), statistic=s.name, a=s.a,
                                      estimator=estimator, order=order)
                t0, c0 = time.perf_counter(), time.process_time()
                bootstrap_test(X, cfg)
                wall.append(time.perf_counter() - t0)
                cpu.append(time.process_time() - c0)
            rows.append({"n": int(n), "statistic": s.key, "B": B, "reps": reps,
                         "wall_mean": float(np.mean(wall)), "cpu_mean": float(np.mean(cpu))})
    return rows


def kernel_bench(theta=(1.0, 1.0, 0.25), n=50, statistics=("T", "W", "S", "R"), B=500, seed=0, a=None,
                 order=None, repeat=3) -> dict:
    """Time of the statistic kernels alone on B null resamples (no re-estimation)."""
    spec = null_spec(theta)
    th = theta_array(theta)
    X = np.stack([replicate_data(spec, n, r, seed) for r in range(B)])
    src = EmpiricalPGF(X)
    thb = np.broadcast_to(th, (B, th.size)).copy()
    out = {}
    for s in stat_specs(statistics, a):
        stat = registry.get(s.name)
        stat.kernel(X[:2], EmpiricalPGF(X[:2]), thb[:2], s.a, order)
        best = math.inf
        for _ in range(repeat):
            t0 = time.perf_counter()
            stat.kernel(X, src, thb, s.a, order)
            best = min(best, time.perf_counter() - t0)
        out[s.key] = best
    return out
