"""Command line interface.

    bpgof test --input data.csv --stat T,W --boot 500 --seed 1
    bpgof sample --theta 1,1,0.25 --n 50 --seed 3 --out data.csv
    bpgof simulate-size --theta 1,1,0.25 --n 30,50,70 --reps 1000
    bpgof simulate-power --family "BB(2;0.61,0.01,0.01)" --n 50
    bpgof bench --n 30,50,70 --stat T,W,S,R

``--config FILE`` reads ``key = value`` lines (keys are long flag names) that
override the command line.  BPGOF_WORKERS sets the default worker count.
Exit codes: 0 ok, 1 rejection (only with --reject-exit), 2 input error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys

import numpy as np

from . import harness, registry
from .alts import parse_family, sample_alternative_array
from .boot import BootstrapConfig, bootstrap_tests
from .errors import BPGofError, NumericalError, ParameterError, UnstableStatisticError
from .model import CountSample, theta_array
from .rng import substream

EXIT_OK, EXIT_REJECT, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3


class InputError(BPGofError, ValueError):
    """Unreadable or malformed input; maps to exit code 2."""


# ---------------------------------------------------------------------------
# CSV I/O


def read_counts(path) -> CountSample:
    """Read a ``x1,x2[,x3]`` CSV of non-negative integers."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    return parse_counts(text, str(path))


def parse_counts(text: str, name: str = "<input>") -> CountSample:
    rows = list(csv.reader(io.StringIO(text)))
    rows = [(i + 1, r) for i, r in enumerate(rows) if r and any(c.strip() for c in r)]
    if not rows:
        raise InputError(f"{name}: empty file")
    line, header = rows[0]
    header = [h.strip() for h in header]
    d = len(header)
    if header != [f"x{k + 1}" for k in range(d)]:
        raise InputError(f"{name}:{line}: header must be x1,x2[,x3], got {','.join(header)}")
    if d not in (2, 3):
        raise InputError(f"{name}: unsupported dimension {d}; only 2 or 3 coordinates")
    data = []
    for line, row in rows[1:]:
        if len(row) != d:
            raise InputError(f"{name}:{line}: expected {d} fields, got {len(row)}")
        try:
            vals = [int(c.strip()) for c in row]
        except ValueError:
            raise InputError(f"{name}:{line}: non-integer value in {row}") from None
        if min(vals) < 0:
            raise InputError(f"{name}:{line}: negative count")
        data.append(vals)
    if not data:
        raise InputError(f"{name}: no observations")
    return CountSample(np.array(data, dtype=np.int64))


def format_counts(X) -> str:
    X = np.asarray(X)
    lines = [",".join(f"x{k + 1}" for k in range(X.shape[1]))]
    lines += [",".join(str(int(v)) for v in row) for row in X]
    return "\n".join(lines) + "\n"


def _emit(text: str, out) -> None:
    if out in (None, "-"):
        sys.stdout.write(text)
        return
    try:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise InputError(f"cannot write {out}: {exc}") from exc


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    raise TypeError(type(o).__name__)


def _clean(obj):
    """NaN and inf become null so the JSON stays standard."""
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def to_json(obj) -> str:
    return json.dumps(_clean(obj), indent=2, default=_json_default) + "\n"


def rows_to_csv(rows: list[dict], drop=("pvalues",)) -> str:
    keys = []
    for r in rows:
        keys += [k for k in r if k not in keys and k not in drop]
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for r in rows:
        w.writerow({k: (f"{v:.6g}" if isinstance(v, float) else v) for k, v in r.items() if k in keys})
    return buf.getvalue()


# ---------------------------------------------------------------------------
# argument parsing


def _floats(text: str) -> tuple:
    return tuple(float(x) for x in text.replace(";", ",").split(",") if x.strip())


def _ints(text: str) -> tuple:
    return tuple(int(x) for x in text.split(",") if x.strip())


def _names(text: str) -> list:
    return [x.strip() for x in text.split(",") if x.strip()]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bpgof", description="Goodness-of-fit tests for bivariate and trivariate "
                                "Poisson counts based on the empirical pgf.")
    p.add_argument("--config", help="key = value file overriding the flags")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, stats_default):
        sp.add_argument("--stat", type=_names, default=_names(stats_default),
                        help=f"comma separated statistics from {','.join(registry.STATISTICS)}")
        sp.add_argument("--a1", type=float, default=0.0)
        sp.add_argument("--a2", type=float, default=0.0)
        sp.add_argument("--a3", type=float, default=0.0)
        sp.add_argument("--boot", type=int, default=500, help="bootstrap replicates B")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--estimator", choices=("mle", "moment"), default="mle")
        sp.add_argument("--workers", type=int, default=None)
        sp.add_argument("--order", type=int, default=None, help="quadrature order per axis")
        sp.add_argument("--out", default=None)
        sp.add_argument("--format", choices=("json", "csv"), default="json")
        sp.add_argument("--config", default=argparse.SUPPRESS, help=argparse.SUPPRESS)

    t = sub.add_parser("test", help="test one dataset")
    t.add_argument("--input", required=True)
    common(t, "T")
    t.add_argument("--keep-replicates", action="store_true")
    t.add_argument("--reject-exit", type=float, default=None, metavar="ALPHA",
                   help="exit with code 1 when some p_boot <= ALPHA")

    s = sub.add_parser("sample", help="write a synthetic dataset")
    s.add_argument("--theta", type=_floats, default=None)
    s.add_argument("--family", default=None)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", default=None)
    s.add_argument("--config", default=argparse.SUPPRESS, help=argparse.SUPPRESS)

    for name, default_stats in (("simulate-size", "T,S,R,W"), ("simulate-power", "T,S,R,W,crockett,IB,NIB")):
        sp = sub.add_parser(name, help=f"{name.split('-')[1]} table")
        if name == "simulate-size":
            sp.add_argument("--theta", type=_floats, default=(1.0, 1.0, 0.25))
        else:
            sp.add_argument("--family", required=True)
        sp.add_argument("--n", type=_ints, default=(50,))
        sp.add_argument("--reps", type=int, default=1000)
        sp.add_argument("--rep-offset", type=int, default=0)
        sp.add_argument("--round-ks", type=int, default=None, help="round p-values before the KS test")
        sp.add_argument("--keep-pvalues", action="store_true")
        common(sp, default_stats)

    b = sub.add_parser("bench", help="timing of full bootstrap tests")
    b.add_argument("--theta", type=_floats, default=(1.0, 1.0, 0.25))
    b.add_argument("--n", type=_ints, default=(30, 50, 70))
    b.add_argument("--reps", type=int, default=3)
    common(b, "T,W,S,R")
    return p


def read_config(path) -> list[str]:
    """Turn ``key = value`` lines into extra argv tokens."""
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc}") from exc
    tokens = []
    for i, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"{path}:{i}: expected key = value")
        key, value = (x.strip() for x in line.split("=", 1))
        flag = "--" + key.replace("_", "-")
        if value.lower() in ("true", "yes", "on"):
            tokens.append(flag)
        elif value.lower() in ("false", "no", "off"):
            continue
        else:
            tokens += [flag, value]
    return tokens


def parse_args(argv=None) -> argparse.Namespace:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        args = parser.parse_args(argv + read_config(args.config))
    if hasattr(args, "workers") and args.workers is None:
        args.workers = int(os.environ.get("BPGOF_WORKERS", "1"))
    return args


def _exponents(args, dim):
    return (args.a1, args.a2, args.a3)[:dim]


# ---------------------------------------------------------------------------
# commands


def cmd_test(args) -> int:
    sample = read_counts(args.input)
    d = sample.d
    stats = [(name, _exponents(args, d) if registry.get(name).weighted else None) for name in args.stat]
    for name, _ in stats:
        if registry.get(name).dim != d:
            raise InputError(f"statistic {name} is not defined for {d}-dimensional data")
    cfg = BootstrapConfig(B=args.boot, seed=args.seed, statistic=stats[0][0], a=stats[0][1],
                          estimator=args.estimator, workers=args.workers,
                          keep_replicates=args.keep_replicates, order=args.order)
    reports = list(bootstrap_tests(sample, stats, cfg).values())
    dicts = [r.to_dict() for r in reports]
    if args.format == "csv":
        _emit(rows_to_csv([{**x, "a": _join(x["a"]), "theta_hat": _join(x["theta_hat"]),
                            "flags": ";".join(x["flags"])} for x in dicts], drop=("replicate_values",)), args.out)
    else:
        _emit(to_json(dicts[0] if len(dicts) == 1 else dicts), args.out)
    if any("undefined_statistic" in r.flags for r in reports):
        return EXIT_NUMERIC
    if args.reject_exit is not None and any(r.p_boot <= args.reject_exit for r in reports):
        return EXIT_REJECT
    return EXIT_OK


def _join(v):
    return "" if v is None else ";".join(f"{x:.10g}" for x in v)


def cmd_sample(args) -> int:
    if (args.theta is None) == (args.family is None):
        raise InputError("give exactly one of --theta or --family")
    if args.n < 1:
        raise InputError("--n must be >= 1")
    spec = harness.null_spec(theta_array(args.theta)) if args.theta is not None else parse_family(args.family)
    X = sample_alternative_array(spec, args.n, substream(args.seed, "sample", args.n))
    _emit(format_counts(X), args.out)
    return EXIT_OK


def _emit_table(rows, args):
    if args.format == "csv":
        _emit(rows_to_csv(rows), args.out)
    else:
        if not getattr(args, "keep_pvalues", False):
            rows = [{k: v for k, v in r.items() if k not in ("pvalues", "rep_offset")} for r in rows]
        _emit(to_json(rows), args.out)


def _stat_list(args, dim):
    return [(name, _exponents(args, dim) if registry.get(name).weighted else None) for name in args.stat]


def cmd_simulate_size(args) -> int:
    dim = len(args.theta) - 1
    rows = harness.simulate_size(args.theta, args.n, _stat_list(args, dim), args.reps, args.boot, args.seed,
                                 args.workers, args.estimator, order=args.order, round_to=args.round_ks,
                                 rep_offset=args.rep_offset)
    _emit_table(rows, args)
    return EXIT_OK


def cmd_simulate_power(args) -> int:
    spec = parse_family(args.family)
    rows = harness.simulate_power(spec, args.n, _stat_list(args, spec.dim), args.reps, args.boot, args.seed,
                                  args.workers, args.estimator, order=args.order, rep_offset=args.rep_offset)
    _emit_table(rows, args)
    return EXIT_OK


def cmd_bench(args) -> int:
    dim = len(args.theta) - 1
    rows = harness.bench(args.theta, args.n, _stat_list(args, dim), args.boot, args.reps, args.seed,
                         args.estimator, order=args.order)
    _emit_table(rows, args)
    return EXIT_OK


COMMANDS = {"test": cmd_test, "sample": cmd_sample, "simulate-size": cmd_simulate_size,
            "simulate-power": cmd_simulate_power, "bench": cmd_bench}


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
        return COMMANDS[args.command](args)
    except (NumericalError, UnstableStatisticError) as exc:
        print(f"bpgof: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (InputError, ParameterError, ValueError) as exc:
        print(f"bpgof: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
