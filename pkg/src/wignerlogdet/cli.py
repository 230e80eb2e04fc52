"""Command line experiment runner.

Exit codes: 0 success, 2 usage error, 3 numerical tolerance failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from .ensembles import CATALOG
from .experiments import (
    DEFAULT_TOLERANCES,
    SUBCOMMANDS,
    ExperimentConfig,
    NumericalToleranceError,
    UsageError,
    run_experiment,
)

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3

_DEFAULTS = {
    "clt": {"n": 1024, "replicates": 500},
    "trotter-check": {"n": 64, "replicates": 400},
    "moments": {"n": 4, "replicates": 0, "method": "dense"},
    "phase": {"n": 2048, "replicates": 4000},
    "martingale": {"n": 1024, "replicates": 500},
    "resolvent": {"n": 32, "replicates": 10, "z0": (0.3, 0.5)},
    "ftc": {"n": 16, "replicates": 10, "z0": (0.3, 0.0)},
    "swap": {"n": 128, "replicates": 2000, "z0": (0.2, 0.0)},
    "sample": {"n": 8, "replicates": 1, "output_format": "csv"},
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _tolerance(text: str) -> tuple[str, float]:
    name, sep, value = text.partition("=")
    if not sep or name not in DEFAULT_TOLERANCES:
        raise argparse.ArgumentTypeError(
            f"expected NAME=VALUE with NAME in {', '.join(sorted(DEFAULT_TOLERANCES))}")
    return name, float(value)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="wignerlogdet", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--ensemble", choices=CATALOG, default="gue")
        sp.add_argument("--n", type=int)
        sp.add_argument("--replicates", type=int)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--workers", type=int, default=1)
        sp.add_argument("--format", dest="output_format", choices=("json", "csv"))
        sp.add_argument("--output", help="write here instead of stdout")
        sp.add_argument("--records", action="store_true", help="include per-replicate records")
        sp.add_argument("--timestamp", action="store_true", help="embed a UTC timestamp")
        sp.add_argument("--tol", action="append", type=_tolerance, default=[],
                        metavar="NAME=VALUE")
        sp.add_argument("--beta", type=int, choices=(1, 2))
        sp.add_argument("--m", type=int)
        if name == "clt":
            sp.add_argument("--law", choices=("gue", "goe", "iid-real", "iid-complex"))
            sp.add_argument("--method", choices=("tridiagonal", "dense"))
            sp.add_argument("--statistic", choices=("logdet", "F"), default="logdet")
        if name == "moments":
            sp.add_argument("--class", dest="moment_class", choices=("gue", "goe"), default="goe")
            sp.add_argument("--method", choices=("tridiagonal", "dense"))
        if name == "phase":
            sp.add_argument("--k", dest="ks", type=int, nargs="+", default=[1, 2, 3])
        if name == "martingale":
            sp.add_argument("--epsilon", type=float, default=0.1)
        if name in ("resolvent", "ftc", "swap"):
            sp.add_argument("--z0", type=float, nargs=2, metavar=("RE", "IM"))
        if name == "resolvent":
            sp.add_argument("--k", type=int, default=4)
            sp.add_argument("--t", type=float, default=1.0)
            sp.add_argument("--form", choices=("diagonal", "symmetric", "antisymmetric"),
                            default="symmetric")
        if name == "ftc":
            sp.add_argument("--T", type=float, default=100.0)
        if name == "swap":
            sp.add_argument("--ensemble-b", choices=CATALOG, default="gue-matched-threepoint")
            sp.add_argument("--G", dest="test_functions", nargs="+",
                            choices=("bump", "cosine", "sigmoid"),
                            default=["bump", "cosine", "sigmoid"])
        if name == "sample":
            sp.add_argument("--what", choices=("matrix", "model", "trace", "householder"),
                            default="matrix")
    return p


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    defaults = _DEFAULTS[args.subcommand]
    kw = {"subcommand": args.subcommand}
    for key in ("ensemble", "seed", "workers", "records", "beta", "m", "law", "statistic",
                "moment_class", "epsilon", "k", "t", "form", "T", "what", "ensemble_b"):
        if getattr(args, key, None) is not None:
            kw[key] = getattr(args, key)
    for key in ("n", "replicates", "method", "output_format", "z0"):
        value = getattr(args, key, None)
        if value is None:
            value = defaults.get(key)
        if value is not None:
            kw[key] = tuple(value) if key == "z0" else value
    if getattr(args, "ks", None) is not None:
        kw["ks"] = tuple(args.ks)
    if getattr(args, "test_functions", None) is not None:
        kw["test_functions"] = tuple(args.test_functions)
    kw["tolerances"] = dict(args.tol)
    return ExperimentConfig(**kw)


def _clean(obj):
    """JSON-ready copy: numpy scalars to Python, non-finite floats to ``None``."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, complex):
        return [_clean(obj.real), _clean(obj.imag)]
    return obj


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else ""
    return v


def render(report, fmt: str, timestamp: str | None = None) -> str:
    if fmt == "json":
        return json.dumps(_clean(report.to_dict(timestamp)), sort_keys=True, indent=2) + "\n"
    rows = report.records
    if not rows:
        raise UsageError("CSV output needs per-replicate records (add --records)")
    cols = list(report.columns)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for row in rows:
        w.writerow([_cell(row.get(c)) for c in cols])
    return buf.getvalue()


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = config_from_args(args)
        if cfg.output_format == "csv" and cfg.subcommand not in ("sample", "moments"):
            cfg = ExperimentConfig(**{**cfg.__dict__, "records": True})
        report = run_experiment(cfg)
        stamp = None
        if args.timestamp:
            from datetime import datetime, timezone

            stamp = datetime.now(timezone.utc).isoformat()
        text = render(report, cfg.output_format, stamp)
    except UsageError as exc:
        print(f"wignerlogdet: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericalToleranceError, ArithmeticError) as exc:
        print(f"wignerlogdet: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if report.failures:
        for msg in report.failures:
            print(f"wignerlogdet: tolerance failure: {msg}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
