"""Seeded, chunked Monte Carlo runners behind the command line interface.

Every replicate ``r`` draws from :func:`~wignerlogdet.ensembles.replicate_rng`
``(seed, r)``.  Replicates are processed in fixed chunks of :data:`CHUNK`
indices whatever the worker count, and chunk results are concatenated in
index order, so a report is byte-identical for any ``workers``.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import partial

import numpy as np

from . import __version__
from .decomposition import martingale_report, telescoping_check, weyl_sum
from .dense_logdet import LAWS, logdet_general, logdet_hermitian, standardize_logdet
from .ensembles import CATALOG, EnsembleSpec, make_ensemble, replicate_rng, sample_matrix
from .moments import (
    BRUTEFORCE_MAX_N,
    first_moment_bruteforce,
    first_moment_exact,
    moment_mc,
    second_moment_bruteforce,
    second_moment_exact,
)
from .resolvent import (
    ElementaryMatrix,
    QuadratureError,
    expand_stieltjes,
    expansion_remainder_probe,
    ftc_logdet_identity,
    neumann_sum,
    opnorm,
    resolvent,
    swap_experiment,
    swap_logdets,
)
from .stats import ks_one_sample, ks_two_sample, summary
from .tridiag import (
    DeterminantTrace,
    TridiagonalModel,
    householder_tridiagonalize,
    logdet_trace,
    sample_tridiagonal,
)

__all__ = [
    "CHUNK",
    "SUBCOMMANDS",
    "DEFAULT_TOLERANCES",
    "ExperimentConfig",
    "Report",
    "UsageError",
    "NumericalToleranceError",
    "run_experiment",
    "map_chunks",
    "tridiagonal_traces",
    "dense_logdets",
    "standardized_f",
]

CHUNK = 64
SUBCOMMANDS = ("clt", "trotter-check", "moments", "phase", "martingale",
               "resolvent", "ftc", "swap", "sample")
DEFAULT_TOLERANCES = {"telescoping": 1e-12, "ftc": 1e-6, "rr_identity": 1e-12}
BETA = {"gue": 2, "goe": 1}


class UsageError(ValueError):
    """Invalid experiment configuration."""


class NumericalToleranceError(ArithmeticError):
    """A numerical check exceeded its tolerance."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Resolved configuration, echoed into every report.

    ``workers`` is left out of the echo: it never changes a result.
    """

    subcommand: str
    ensemble: str = "gue"
    ensemble_b: str = "gue-matched-threepoint"
    n: int = 64
    replicates: int = 200
    seed: int | None = None
    law: str | None = None
    beta: int | None = None
    method: str = "tridiagonal"
    statistic: str = "logdet"
    moment_class: str = "goe"
    z0: tuple[float, float] = (0.0, 0.0)
    T: float = 100.0
    t: float = 1.0
    k: int = 4
    ks: tuple[int, ...] = (1, 2, 3)
    form: str = "symmetric"
    m: int | None = None
    epsilon: float = 0.1
    test_functions: tuple[str, ...] = ("bump", "cosine", "sigmoid")
    what: str = "matrix"
    output_format: str = "json"
    workers: int = 1
    records: bool = False
    tolerances: dict = field(default_factory=dict)

    def tol(self, name: str) -> float:
        return float(self.tolerances.get(name, DEFAULT_TOLERANCES[name]))

    def to_dict(self) -> dict:
        out = asdict(self)
        del out["workers"]
        out["z0"] = list(self.z0)
        out["ks"] = list(self.ks)
        out["test_functions"] = list(self.test_functions)
        out["tolerances"] = {k: self.tol(k) for k in sorted(DEFAULT_TOLERANCES)}
        return out


@dataclass
class Report:
    """Experiment output; ``failures`` lists tolerance violations."""

    config: dict
    summary: dict
    records: list | None = None
    columns: tuple[str, ...] = ()
    failures: list = field(default_factory=list)

    def to_dict(self, timestamp: str | None = None) -> dict:
        import scipy

        out = {
            "config": self.config,
            "summary": self.summary,
            "failures": list(self.failures),
            "versions": {"wignerlogdet": __version__, "numpy": np.__version__,
                         "scipy": scipy.__version__},
        }
        if self.records is not None:
            out["records"] = self.records
        if timestamp is not None:
            out["timestamp"] = timestamp
        return out


# --- chunked execution -----------------------------------------------------


def map_chunks(fn, replicates: int, workers: int = 1) -> list:
    """``[fn(start, stop) for each chunk]`` in chunk order, optionally in a process pool."""
    starts = list(range(0, replicates, CHUNK))
    stops = [min(s + CHUNK, replicates) for s in starts]
    if workers <= 1 or len(starts) == 1:
        return [fn(a, b) for a, b in zip(starts, stops)]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, starts, stops))


def _trace_chunk(start, stop, n, beta, seed, m, keep_h):
    models = [sample_tridiagonal(n, beta, replicate_rng(seed, r)) for r in range(start, stop)]
    T = TridiagonalModel(np.stack([x.a for x in models]), np.stack([x.b for x in models]), beta)
    tr = logdet_trace(T, m)
    if keep_h:
        return tr, telescoping_check(tr)
    # keep only the endpoints the summaries need
    tr = DeterminantTrace(tr.n, tr.m, tr.logF[:, [0, -1]], tr.theta[:, -1:], tr.h[:, :0],
                          tr.log_abs_Dn, tr.sign_n, tr.log_abs_En)
    return tr, None


def tridiagonal_traces(n: int, beta: int, seed: int, replicates: int, m=None,
                       keep_h: bool = True, workers: int = 1):
    """Batched trace over ``replicates`` Trotter draws, plus telescoping residuals.

    With ``keep_h=False`` the trace keeps only ``logF`` at ``j = m`` and
    ``n/2``, the final angle and no increments, and the residuals are ``None``.
    """
    parts = map_chunks(partial(_trace_chunk, n=n, beta=beta, seed=seed, m=m, keep_h=keep_h),
                       replicates, workers)
    traces = [p[0] for p in parts]
    cat = lambda name: np.concatenate([getattr(t, name) for t in traces])
    tr = DeterminantTrace(n, traces[0].m, cat("logF"), cat("theta"), cat("h"),
                          cat("log_abs_Dn"), cat("sign_n"), cat("log_abs_En"))
    resid = np.concatenate([p[1] for p in parts]) if keep_h else None
    return tr, resid


def _dense_chunk(start, stop, label, n, seed):
    spec = make_ensemble(label)
    out = np.empty(stop - start)
    for i, r in enumerate(range(start, stop)):
        M = sample_matrix(spec, n, replicate_rng(seed, r))
        res = logdet_hermitian(M) if spec.family == "wigner-hermitian" else logdet_general(M)
        out[i] = res.log_abs
    return out


def dense_logdets(label: str, n: int, seed: int, replicates: int, workers: int = 1,
                  offset: int = 0) -> np.ndarray:
    """``log|det M|`` for replicates ``offset..offset+replicates-1`` of a catalog ensemble."""
    fn = partial(_dense_chunk, label=label, n=n, seed=seed)
    parts = map_chunks(partial(_offset_call, fn=fn, offset=offset), replicates, workers)
    return np.concatenate(parts)


def _offset_call(start, stop, fn, offset):
    return fn(start + offset, stop + offset)


def _swap_chunk(start, stop, label, n, z0, seed):
    return swap_logdets(make_ensemble(label), n, z0, stop - start, seed, start=start)


def standardized_f(logF_final, n: int) -> np.ndarray:
    """``(log F_{n/2} + log(n)/2) / sqrt(2 log n)``."""
    return (np.asarray(logF_final) + 0.5 * math.log(n)) / math.sqrt(2.0 * math.log(n))


# --- runners ---------------------------------------------------------------


def _require_seed(cfg: ExperimentConfig) -> int:
    if cfg.seed is None:
        raise UsageError(f"{cfg.subcommand} needs an explicit --seed")
    return int(cfg.seed)


def _default_law(spec: EnsembleSpec) -> str:
    if spec.family == "iid-square":
        return "iid-real" if spec.is_real else "iid-complex"
    return "goe" if spec.is_real else "gue"


def _beta_for(cfg: ExperimentConfig) -> int:
    if cfg.beta is not None:
        return cfg.beta
    if cfg.ensemble not in BETA:
        raise UsageError("the tridiagonal path needs --ensemble gue or goe (or --beta)")
    return BETA[cfg.ensemble]


def _stat_block(x) -> dict:
    x = np.asarray(x, dtype=float)
    finite = x[np.isfinite(x)]
    out = {"nonfinite": int(x.size - finite.size)}
    if finite.size >= 2:
        out["summary"] = summary(finite).to_dict()
    if finite.size >= 5:
        out["ks"] = ks_one_sample(finite).to_dict()
    return out


def _run_clt(cfg: ExperimentConfig) -> Report:
    seed = _require_seed(cfg)
    spec = make_ensemble(cfg.ensemble)
    n = cfg.n
    if cfg.statistic == "F":
        if cfg.method != "tridiagonal" or _beta_for(cfg) != 2:
            raise UsageError("the F statistic is defined for the beta=2 tridiagonal path")
    if cfg.method == "tridiagonal":
        tr, _ = tridiagonal_traces(n, _beta_for(cfg), seed, cfg.replicates, cfg.m,
                                   keep_h=False, workers=cfg.workers)
        L = tr.log_abs_Dn
        stat = standardized_f(tr.logF[:, -1], n) if cfg.statistic == "F" else None
    elif cfg.method == "dense":
        L = dense_logdets(spec.label, n, seed, cfg.replicates, cfg.workers)
        stat = None
    else:
        raise UsageError(f"unknown method {cfg.method!r}")
    law = cfg.law or _default_law(spec)
    if law not in LAWS:
        raise UsageError(f"unknown law {law!r}")
    x = stat if stat is not None else standardize_logdet(L, n, law)
    s = {"law": law if stat is None else "F", "statistic": cfg.statistic}
    s.update(_stat_block(x))
    records = [{"replicate": r, "log_abs_det": float(L[r]), "x": float(x[r])}
               for r in range(len(L))] if cfg.records else None
    return Report(cfg.to_dict(), s, records, ("replicate", "log_abs_det", "x"))


def _run_trotter(cfg: ExperimentConfig) -> Report:
    seed = _require_seed(cfg)
    beta = _beta_for(cfg)
    label = {2: "gue", 1: "goe"}[beta]
    R = cfg.replicates
    dense = dense_logdets(label, cfg.n, seed, R, cfg.workers)
    # tridiagonal draws use replicate indices R..2R-1 so the samples are independent
    parts = map_chunks(partial(_trotter_chunk, n=cfg.n, beta=beta, seed=seed, offset=R), R, cfg.workers)
    tri = np.concatenate(parts)
    s = {
        "ks": ks_two_sample(dense, tri).to_dict(),
        "dense": summary(dense).to_dict(),
        "tridiagonal": summary(tri).to_dict(),
    }
    records = [{"replicate": r, "dense": float(dense[r]), "tridiagonal": float(tri[r])}
               for r in range(R)] if cfg.records else None
    return Report(cfg.to_dict(), s, records, ("replicate", "dense", "tridiagonal"))


def _trotter_chunk(start, stop, n, beta, seed, offset):
    from .tridiag import det_recursion_exact

    out = np.empty(stop - start)
    for i, r in enumerate(range(start, stop)):
        T = sample_tridiagonal(n, beta, replicate_rng(seed, r + offset))
        out[i] = det_recursion_exact(T)[0][-1]
    return out


def _run_moments(cfg: ExperimentConfig) -> Report:
    cls = cfg.moment_class
    if cls not in BETA:
        raise UsageError("--class must be gue or goe")
    n = cfg.n
    s = {"n": n, "class": cls, "exact_first": first_moment_exact(n),
         "exact": second_moment_exact(n, cls)}
    if n <= BRUTEFORCE_MAX_N:
        s["bruteforce_first"] = first_moment_bruteforce(n)
        s["bruteforce"] = second_moment_bruteforce(n, cls).value
    failures = []
    if "bruteforce" in s and s["bruteforce"] != s["exact"]:
        failures.append("second moment: exact and brute force disagree")
    if cfg.replicates > 1 and cfg.seed is not None:
        spec = make_ensemble(cls)
        method = "tridiagonal" if cfg.method == "tridiagonal" and n > 1 else "dense"
        est1, se1 = moment_mc(spec, n, "first", cfg.replicates, int(cfg.seed), method)
        est2, se2 = moment_mc(spec, n, "second", cfg.replicates, int(cfg.seed), method)
        s.update(mc_first=est1, mc_first_stderr=se1, mc_estimate=est2, mc_stderr=se2)
    row = {k: s.get(k) for k in ("n", "class", "exact", "mc_estimate", "mc_stderr")}
    return Report(cfg.to_dict(), s, [row], ("n", "class", "exact", "mc_estimate", "mc_stderr"),
                  failures)


def _run_phase(cfg: ExperimentConfig) -> Report:
    seed = _require_seed(cfg)
    tr, _ = tridiagonal_traces(cfg.n, _beta_for(cfg), seed, cfg.replicates, cfg.m,
                               keep_h=False, workers=cfg.workers)
    theta = tr.theta[:, -1]
    uniform = lambda x: (np.asarray(x) + math.pi) / (2.0 * math.pi)
    s = {
        "weyl": [weyl_sum(theta, k).to_dict() for k in cfg.ks],
        "ks_uniform": ks_one_sample(theta, uniform).to_dict(),
        "bound": 4.0 / math.sqrt(theta.size),
    }
    records = [{"replicate": r, "theta": float(theta[r])} for r in range(theta.size)] \
        if cfg.records else None
    return Report(cfg.to_dict(), s, records, ("replicate", "theta"))


def _run_martingale(cfg: ExperimentConfig) -> Report:
    seed = _require_seed(cfg)
    tr, resid = tridiagonal_traces(cfg.n, _beta_for(cfg), seed, cfg.replicates, cfg.m,
                                   keep_h=True, workers=cfg.workers)
    rep = martingale_report(tr, cfg.epsilon)
    s = rep.to_dict()
    s["telescoping_max"] = float(resid.max())
    failures = []
    if s["telescoping_max"] >= cfg.tol("telescoping"):
        failures.append(f"telescoping residual {s['telescoping_max']:.3g}")
    records = [
        {"j": int(j), "mean": float(a), "mean_stderr": float(b), "second": float(c),
         "second_stderr": float(d)}
        for j, a, b, c, d in zip(rep.j_values, rep.mean, rep.mean_stderr, rep.second,
                                 rep.second_stderr)
    ] if cfg.records else None
    return Report(cfg.to_dict(), s, records, ("j", "mean", "mean_stderr", "second", "second_stderr"),
                  failures)


def _normalized_draw(cfg: ExperimentConfig, r: int) -> np.ndarray:
    spec = make_ensemble(cfg.ensemble)
    if spec.family != "wigner-hermitian":
        raise UsageError("resolvent probes need a Wigner ensemble")
    return sample_matrix(spec, cfg.n, replicate_rng(cfg.seed, r)) / math.sqrt(cfg.n)


def _run_resolvent(cfg: ExperimentConfig) -> Report:
    _require_seed(cfg)
    n = cfg.n
    if n < 2:
        raise UsageError("resolvent probes need n >= 2")
    z = complex(*cfg.z0)
    if z.imag <= 0:
        raise UsageError("resolvent probes need Im z0 > 0")
    V = ElementaryMatrix(cfg.form, 0, None if cfg.form == "diagonal" else 1)
    failures = []
    rows = []
    for r in range(cfg.replicates):
        W = _normalized_draw(cfg, r)
        R0 = resolvent(W, z)
        rr = opnorm(R0 @ R0.conj().T - (R0 - R0.conj().T) / (2j * z.imag), (math.inf, 1))
        rel = rr / opnorm(R0, (math.inf, 1)) ** 2
        exp = expand_stieltjes(W, V, z, cfg.k, cfg.t)
        half = expansion_remainder_probe(W, V, z, cfg.t / 2, cfg.k)[2]
        direct = resolvent(W + cfg.t * V.matrix(n) / math.sqrt(n), z)
        errs = [opnorm(neumann_sum(R0, V, cfg.t, j) - direct, (math.inf, 1)) for j in range(cfg.k + 1)]
        rows.append({
            "replicate": r,
            "rr_identity": rel,
            "remainder": abs(exp.remainder),
            "halving_ratio": abs(exp.remainder) / abs(half) if half != 0 else math.inf,
            "max_bound_ratio": float(exp.bound_ratios.max()),
            "neumann_errors": errs,
        })
        if rel >= cfg.tol("rr_identity"):
            failures.append(f"replicate {r}: RR* identity residual {rel:.3g}")
    ratios = np.array([x["halving_ratio"] for x in rows])
    s = {
        "rr_identity_max": max(x["rr_identity"] for x in rows) if rows else None,
        "halving_ratio_median": float(np.median(ratios)) if rows else None,
        "max_bound_ratio": max(x["max_bound_ratio"] for x in rows) if rows else None,
        "K": 16.0,
    }
    return Report(cfg.to_dict(), s, rows if cfg.records else None,
                  ("replicate", "rr_identity", "remainder", "halving_ratio", "max_bound_ratio"),
                  failures)


def _run_ftc(cfg: ExperimentConfig) -> Report:
    _require_seed(cfg)
    z0 = complex(*cfg.z0)
    tol = cfg.tol("ftc")
    failures = []
    rows = []
    for r in range(cfg.replicates):
        W = _normalized_draw(cfg, r)
        try:
            res = ftc_logdet_identity(W, z0, cfg.T, quad_tol=tol / 10)
        except QuadratureError as exc:
            res = math.nan
            failures.append(f"replicate {r}: {exc}")
        rows.append({"replicate": r, "residual": res})
        if not res < tol and not math.isnan(res):
            failures.append(f"replicate {r}: residual {res:.3g}")
    vals = [x["residual"] for x in rows if not math.isnan(x["residual"])]
    s = {"residual_max": max(vals) if vals else None, "tolerance": tol}
    return Report(cfg.to_dict(), s, rows if cfg.records else None, ("replicate", "residual"),
                  failures)


def _run_swap(cfg: ExperimentConfig) -> Report:
    seed = _require_seed(cfg)
    z0 = complex(*cfg.z0)
    logs = []
    for label in (cfg.ensemble, cfg.ensemble_b):
        fn = partial(_swap_chunk, label=label, n=cfg.n, z0=z0, seed=seed)
        logs.append(np.concatenate(map_chunks(fn, cfg.replicates, cfg.workers)))
    res = swap_experiment(make_ensemble(cfg.ensemble), make_ensemble(cfg.ensemble_b), cfg.n, z0,
                          list(cfg.test_functions), seed=seed, logdets=tuple(logs))
    rows = [{"replicate": r, "logdet_a": float(logs[0][r]), "logdet_b": float(logs[1][r])}
            for r in range(cfg.replicates)] if cfg.records else None
    return Report(cfg.to_dict(), res.to_dict(), rows, ("replicate", "logdet_a", "logdet_b"))


def _run_sample(cfg: ExperimentConfig) -> Report:
    seed = _require_seed(cfg)
    rng = replicate_rng(seed, 0)
    n = cfg.n
    if cfg.what == "matrix":
        M = sample_matrix(make_ensemble(cfg.ensemble), n, rng)
        rows = [{"i": i, "j": j, "re": float(M[i, j].real), "im": float(np.imag(M[i, j]))}
                for i in range(n) for j in range(n)]
        cols = ("i", "j", "re", "im")
    elif cfg.what in ("model", "trace", "householder"):
        if cfg.what == "householder":
            T = householder_tridiagonalize(sample_matrix(make_ensemble(cfg.ensemble), n, rng))
        else:
            T = sample_tridiagonal(n, _beta_for(cfg), rng)
        if cfg.what == "trace":
            tr = logdet_trace(T, cfg.m)
            hs = np.concatenate([[math.nan], tr.h])
            rows = [{"j": int(j), "logF": float(f), "theta": float(t), "h": float(h)}
                    for j, f, t, h in zip(tr.j, tr.logF, tr.theta, hs)]
            cols = ("j", "logF", "theta", "h")
        else:
            bs = np.concatenate([T.b, [math.nan]])
            rows = [{"i": i + 1, "a": float(a), "b": float(b)} for i, (a, b) in enumerate(zip(T.a, bs))]
            cols = ("i", "a", "b")
    else:
        raise UsageError(f"unknown sample kind {cfg.what!r}")
    return Report(cfg.to_dict(), {"rows": len(rows)}, rows, cols)


_RUNNERS = {
    "clt": _run_clt,
    "trotter-check": _run_trotter,
    "moments": _run_moments,
    "phase": _run_phase,
    "martingale": _run_martingale,
    "resolvent": _run_resolvent,
    "ftc": _run_ftc,
    "swap": _run_swap,
    "sample": _run_sample,
}


def run_experiment(cfg: ExperimentConfig) -> Report:
    """Validate ``cfg`` and dispatch to the subcommand's runner.

    Raises
    ------
    UsageError
        For an invalid configuration.
    """
    if cfg.subcommand not in _RUNNERS:
        raise UsageError(f"unknown subcommand {cfg.subcommand!r}")
    if cfg.n < 1:
        raise UsageError("n must be positive")
    if cfg.replicates < 1 and cfg.subcommand not in ("moments", "sample"):
        raise UsageError("replicates must be positive")
    for label in (cfg.ensemble, cfg.ensemble_b):
        if label not in CATALOG:
            raise UsageError(f"unknown ensemble {label!r}")
    if cfg.beta not in (None, 1, 2):
        raise UsageError("beta must be 1 or 2")
    if cfg.workers < 1:
        raise UsageError("workers must be positive")
    unknown = set(cfg.tolerances) - set(DEFAULT_TOLERANCES)
    if unknown:
        raise UsageError(f"unknown tolerance names {sorted(unknown)}")
    try:
        return _RUNNERS[cfg.subcommand](cfg)
    except (UsageError, NumericalToleranceError):
        raise
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
