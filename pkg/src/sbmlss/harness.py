"""Seeded Monte Carlo experiments: null calibration, power curves, oracle comparisons, identities."""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .combinatorics import (
    alpha1,
    alpha2,
    cheby_psi_sums,
    chebyshev_poly,
    d_matrix,
    d_matrix_inverse,
    exact_matmul,
    fk_coefficient,
    fk_series,
)
from .cycles import cycle_from_lss_even, cycle_from_lss_odd, mode_from_name, signed_cycle_bruteforce
from .errors import ComplexityError, ConfigError, DegenerateCenteringError, ParameterError
from .graph_models import ModelParams, estimate_p_hat, params_from_t, replicate_rng, sample_graph
from .spectral import Centering, center_estimated, center_known, chebyshev_traces, eigenvalues
from .statistics import SignMode, StatisticKind, TestSpec, calibrate, norm_ppf, optimal_power

__all__ = [
    "ExperimentConfig",
    "SEED_ENV_VAR",
    "config_hash",
    "default_seed",
    "load_config",
    "rejection_table",
    "run_calibrate",
    "run_identities",
    "run_oracle_compare",
    "run_power_curve",
    "simulate_traces",
    "write_csv",
]

log = logging.getLogger(__name__)

SEED_ENV_VAR = "SBMLSS_SEED"
EXPERIMENTS = ("calibrate", "power", "oracle", "identities", "test")


def default_seed() -> int:
    raw = os.environ.get(SEED_ENV_VAR)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{SEED_ENV_VAR}={raw!r} is not an integer") from None


@dataclass(frozen=True)
class ExperimentConfig:
    """All knobs of one experiment. Field names double as config-file keys."""

    experiment: str = "calibrate"
    n: int = 500
    p_av: float = 0.1
    t_grid: tuple[float, ...] = (0.8,)
    kappa: int = 2
    alpha: float = 0.05
    reps: int = 200
    seed: int = 0
    statistics: tuple[str, ...] = ("La", "Lo", "adaptive_odd", "adaptive_all")
    epsilon: float = 0.15
    k_n: int | None = None
    centering: str = "estimated"
    sign_mode: str = "auto"
    assortative: bool = True
    t_correction: str = "auto"
    mu: str = "truncated"
    bar_mu_reading: str = "coefficient"
    bar_mu_weight: str = "degree"
    oracle_ks: tuple[int, ...] = (3, 4, 5, 6)
    threads: int = field(default_factory=lambda: os.cpu_count() or 1)
    record_wall_time: bool = False
    output_path: str | None = None

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; choose from {EXPERIMENTS}")
        if self.reps < 1:
            raise ConfigError("reps must be >= 1")
        if self.n < 2:
            raise ConfigError("n must be >= 2")
        if not 0.0 < self.p_av < 1.0:
            raise ConfigError(f"p_av={self.p_av} must lie in (0, 1)")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"alpha={self.alpha} must lie in (0, 1)")
        if self.experiment == "power" and self.kappa < 2:
            raise ConfigError("power curves need kappa >= 2")
        if any(t < 0 for t in self.t_grid):
            raise ConfigError("t values must be nonnegative")
        for s in self.statistics:
            try:
                StatisticKind(s)
            except ValueError:
                raise ConfigError(f"unknown statistic {s!r}") from None
        if self.centering not in ("known", "estimated"):
            raise ConfigError(f"centering must be 'known' or 'estimated', got {self.centering!r}")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")

    def test_spec(self, kind: str, t: float | None) -> TestSpec:
        try:
            return TestSpec(
                kind=StatisticKind(kind),
                alpha=self.alpha,
                t=t,
                epsilon=self.epsilon,
                k_n=self.k_n,
                sign_mode=SignMode(self.sign_mode),
                t_correction=mode_from_name(self.t_correction, seed=self.seed),
                centering=Centering(self.centering),
                mu=self.mu,
                bar_mu_reading=self.bar_mu_reading,
                bar_mu_weight=self.bar_mu_weight,
            )
        except ParameterError as exc:
            raise ConfigError(str(exc)) from exc


_TUPLE_FIELDS = {"t_grid": float, "statistics": str, "oracle_ks": int}


def _coerce(name: str, raw: str):
    f = {f.name: f for f in dataclasses.fields(ExperimentConfig)}.get(name)
    if f is None:
        raise ConfigError(f"unknown config key {name!r}")
    raw = raw.strip()
    try:
        if name in _TUPLE_FIELDS:
            return tuple(_TUPLE_FIELDS[name](v.strip()) for v in raw.split(",") if v.strip())
        if name == "k_n":
            return None if raw.lower() in ("", "auto", "none") else int(raw)
        if name == "output_path":
            return raw or None
        if name in ("assortative", "record_wall_time"):
            if raw.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return raw.lower() in ("true", "1", "yes")
        if name in ("n", "kappa", "reps", "seed", "threads"):
            return int(raw)
        if name in ("p_av", "alpha", "epsilon"):
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(f"bad value for {name}: {raw!r}") from None


def parse_config_text(text: str) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment; lists are comma separated."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key] = _coerce(key, value)
    return out


def load_config(path: str | os.PathLike | None = None, overrides: dict | None = None, **defaults) -> ExperimentConfig:
    """Config from an optional file, then ``overrides`` (already typed or raw strings)."""
    values = dict(defaults)
    values.setdefault("seed", default_seed())
    if path is not None:
        try:
            values.update(parse_config_text(Path(path).read_text()))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        values[key] = _coerce(key, value) if isinstance(value, str) else value
    try:
        return ExperimentConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def config_hash(config: ExperimentConfig) -> str:
    """Short digest of every field except the output location."""
    d = dataclasses.asdict(config)
    d.pop("output_path")
    d.pop("threads")  # results do not depend on the worker count
    text = ";".join(f"{k}={d[k]!r}" for k in sorted(d))
    return hashlib.sha256(text.encode()).hexdigest()[:12]


# ---------------------------------------------------------------------------
# Simulation core


@dataclass(frozen=True)
class TraceBatch:
    """Chebyshev traces of ``reps`` simulated graphs; rows with a degenerate density are NaN."""

    traces: np.ndarray  # (reps, m_max + 1)
    p_hat: np.ndarray  # (reps,)

    @property
    def valid(self) -> np.ndarray:
        return np.isfinite(self.traces).all(axis=1)


def _trace_chunk(args) -> tuple[np.ndarray, np.ndarray]:
    params, seed, stream, start, stop, m_max, centering, p_ref = args
    tr = np.full((stop - start, m_max + 1), np.nan)
    ph = np.empty(stop - start)
    for row, rep in enumerate(range(start, stop)):
        g = sample_graph(params, replicate_rng(seed, rep, stream))
        ph[row] = estimate_p_hat(g)
        try:
            m = center_known(g, p_ref) if centering == "known" else center_estimated(g)
        except DegenerateCenteringError:
            continue
        tr[row] = chebyshev_traces(eigenvalues(m), m_max)
    return tr, ph


def simulate_traces(
    params: ModelParams,
    reps: int,
    seed: int,
    m_max: int,
    centering: str = "estimated",
    stream: int = 0,
    threads: int = 1,
) -> TraceBatch:
    """Traces of Tr P_0..Tr P_{m_max} for ``reps`` graphs drawn from ``params``.

    Replicate ``i`` always uses stream (seed, i, stream), and chunks are merged
    in index order, so the output does not depend on ``threads``.
    """
    p_ref = params.p_av
    n_chunks = max(1, min(threads * 4, reps))
    bounds = np.linspace(0, reps, n_chunks + 1).astype(int)
    jobs = [(params, seed, stream, int(a), int(b), m_max, centering, p_ref) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(_trace_chunk, jobs))
    else:
        parts = [_trace_chunk(j) for j in jobs]
    return TraceBatch(np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts]))


def evaluate(batch: TraceBatch, spec: TestSpec, n: int, p_av: float, assortative: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Standardized statistics and rejection indicators for the valid rows of ``batch``."""
    ok = batch.valid
    z = np.full(len(ok), np.nan)
    cache = {}
    for i in np.flatnonzero(ok):
        p_ref = batch.p_hat[i] if spec.centering is Centering.ESTIMATED else p_av
        cal = cache.get(p_ref)
        if cal is None:
            cal = cache[p_ref] = calibrate(spec, n, p_ref, assortative)
        z[i] = float(cal.statistic(batch.traces[i, : cal.k_n + 1])) / cal.sd
    z = z[ok]
    return z, z > float(norm_ppf(1.0 - spec.alpha))


def max_degree(specs, n: int, p_av: float) -> int:
    return max(calibrate(s, n, p_av).k_n for s in specs)


@dataclass
class ResultRow:
    experiment: str
    statistic: str
    t: float | None
    empirical_power: float | None
    theoretical_power: float | None
    mc_stderr: float | None
    reps_used: int
    mean_z: float | None = None
    var_z: float | None = None
    k_n: int | None = None
    status: str = "ok"
    wall_time_seconds: float | None = None
    extra: dict = field(default_factory=dict)


def _binom_row(experiment, kind, t, rejects, z, theo, k_n, wall) -> ResultRow:
    m = len(rejects)
    rate = float(np.mean(rejects)) if m else float("nan")
    return ResultRow(
        experiment=experiment,
        statistic=kind,
        t=t,
        empirical_power=rate,
        theoretical_power=theo,
        mc_stderr=math.sqrt(rate * (1.0 - rate) / m) if m else None,
        reps_used=m,
        mean_z=float(np.mean(z)) if m else None,
        var_z=float(np.var(z, ddof=1)) if m > 1 else None,
        k_n=k_n,
        wall_time_seconds=wall,
    )


def _theoretical(kind: StatisticKind, alpha: float, t: float | None) -> float | None:
    if t is None or not 0.0 <= t < 1.0:
        return None
    if kind in (StatisticKind.LA_OPTIMAL, StatisticKind.LC_ORACLE):
        return optimal_power(alpha, t)
    if kind is StatisticKind.LO_OPTIMAL:
        return optimal_power(alpha, t, odd_only=True)
    return None


def _needs_t(kind: StatisticKind) -> bool:
    return kind in (StatisticKind.LA_OPTIMAL, StatisticKind.LO_OPTIMAL, StatisticKind.LC_ORACLE)


def rejection_table(
    config: ExperimentConfig,
    batch: TraceBatch,
    n: int,
    p_av: float,
    t_values,
    experiment: str,
    wall: float | None,
    t_alt: float | None = None,
) -> list[ResultRow]:
    """One row per (statistic, hypothesized t) evaluated on a shared batch of traces.

    Statistics that take no t are labelled with ``t_alt``, the signal strength
    of the simulated alternative (None under the null).
    """
    rows = []
    for name in config.statistics:
        kind = StatisticKind(name)
        ts = t_values if _needs_t(kind) else [None]
        for t in ts:
            if _needs_t(kind) and not 0.0 < t < 1.0:
                rows.append(ResultRow(experiment, name, t, None, None, None, 0, status="t_out_of_domain"))
                continue
            spec = config.test_spec(name, t)
            z, rej = evaluate(batch, spec, n, p_av, config.assortative)
            theo = config.alpha if experiment == "calibrate" else _theoretical(kind, config.alpha, t)
            k_n = calibrate(spec, n, p_av).k_n
            rows.append(_binom_row(experiment, name, t if t is not None else t_alt, rej, z, theo, k_n, wall))
    return rows


def _specs_for_degree(config: ExperimentConfig, t_values) -> list[TestSpec]:
    specs = []
    for name in config.statistics:
        kind = StatisticKind(name)
        if kind is StatisticKind.LC_ORACLE:
            raise ConfigError("the brute-force Lc statistic is not available in Monte Carlo sweeps")
        for t in t_values if _needs_t(kind) else [None]:
            if _needs_t(kind) and not 0.0 < t < 1.0:
                continue
            specs.append(config.test_spec(name, t))
    return specs


def run_calibrate(config: ExperimentConfig) -> list[ResultRow]:
    """Empirical level of each configured statistic under G(n, p_av)."""
    for name in config.statistics:
        if _needs_t(StatisticKind(name)) and not all(0.0 < t < 1.0 for t in config.t_grid):
            raise ConfigError(f"{name} needs hypothesized t values in (0, 1), got {config.t_grid}")
    specs = _specs_for_degree(config, config.t_grid)
    m_max = max_degree(specs, config.n, config.p_av)
    start = time.perf_counter()
    params = ModelParams(n=config.n, kappa=1, p=config.p_av)
    batch = simulate_traces(params, config.reps, config.seed, m_max, config.centering, stream=0, threads=config.threads)
    wall = time.perf_counter() - start if config.record_wall_time else None
    return rejection_table(config, batch, config.n, config.p_av, config.t_grid, "calibrate", wall)


def run_power_curve(config: ExperimentConfig) -> list[ResultRow]:
    """Empirical power against the kappa-block alternative at each t of the grid."""
    rows = []
    for idx, t in enumerate(config.t_grid):
        try:
            params = params_from_t(config.n, config.p_av, t, config.kappa, config.assortative)
        except ParameterError as exc:
            log.warning("t=%s infeasible: %s", t, exc)
            rows.extend(ResultRow("power", s, t, None, None, None, 0, status="infeasible") for s in config.statistics)
            continue
        specs = _specs_for_degree(config, [t])
        if not specs:
            rows.extend(ResultRow("power", s, t, None, None, None, 0, status="t_out_of_domain") for s in config.statistics)
            continue
        m_max = max_degree(specs, config.n, config.p_av)
        start = time.perf_counter()
        batch = simulate_traces(params, config.reps, config.seed, m_max, config.centering, stream=idx + 1, threads=config.threads)
        wall = time.perf_counter() - start if config.record_wall_time else None
        rows.extend(rejection_table(config, batch, config.n, config.p_av, [t], "power", wall, t_alt=t))
    return rows


@dataclass
class OracleResult:
    rows: list[dict]
    summary: list[dict]
    skipped: list[tuple[int, str]]


def run_oracle_compare(config: ExperimentConfig) -> OracleResult:
    """Brute-force signed cycles against their LSS reconstructions on null graphs."""
    n = config.n
    for k in config.oracle_ks:
        if k < 3:
            raise ConfigError(f"cycle lengths must be >= 3, got {k}")
        if float(n) ** k > 1e8:
            raise ConfigError(f"brute force of length {k} at n={n} exceeds the 1e8 work guard")
    mode = mode_from_name(config.t_correction, seed=config.seed)
    params = ModelParams(n=n, kappa=1, p=config.p_av)
    rows, skipped = [], []
    for rep in range(config.reps):
        g = sample_graph(params, replicate_rng(config.seed, rep))
        p_ref = config.p_av if config.centering == "known" else estimate_p_hat(g)
        try:
            m = center_known(g, p_ref) if config.centering == "known" else center_estimated(g)
        except DegenerateCenteringError as exc:
            log.info("replicate %d skipped: %s", rep, exc)
            skipped.append((rep, str(exc)))
            continue
        spec = eigenvalues(m)
        for k in config.oracle_ks:
            try:
                bf = signed_cycle_bruteforce(g, p_ref, k)
            except ComplexityError as exc:
                raise ConfigError(str(exc)) from exc
            lss = cycle_from_lss_odd(spec, k) if k % 2 else cycle_from_lss_even(spec, g, p_ref, k, mode)
            rows.append({"rep": rep, "k": k, "cycle_bruteforce": bf, "cycle_from_lss": lss, "diff": lss - bf})
    summary = []
    for k in config.oracle_ks:
        bf = np.array([r["cycle_bruteforce"] for r in rows if r["k"] == k])
        ls = np.array([r["cycle_from_lss"] for r in rows if r["k"] == k])
        if len(bf) < 2:
            continue
        summary.append(
            {
                "k": k,
                "reps": len(bf),
                "sd_bruteforce": float(np.std(bf, ddof=1)),
                "sd_diff": float(np.std(ls - bf, ddof=1)),
                "max_abs_diff": float(np.max(np.abs(ls - bf))),
                "correlation": float(np.corrcoef(bf, ls)[0, 1]) if np.std(bf) > 0 and np.std(ls) > 0 else float("nan"),
            }
        )
    return OracleResult(rows, summary, skipped)


# ---------------------------------------------------------------------------
# Exact identities


def identity_checks(psi_k: int = 40, d_k: int = 15, f_m: int = 20) -> list[tuple[str, bool, str]]:
    """Every exact combinatorial invariant as (name, passed, detail)."""
    out = []
    bad = [k for k in range(2, psi_k + 1) if cheby_psi_sums(k) != (0, 0)]
    out.append((f"sum_r P_2k[2r] psi_2r = 0 and sum_r P_2k[2r] r psi_2r = 0, k=2..{psi_k}", not bad, f"failures at {bad}" if bad else "exact"))
    bad = []
    for m in range(1, f_m + 1):
        for r in range(1, m + 1):
            if fk_series(r, m)[m] != fk_coefficient(m, r):
                bad.append((m, r))
    out.append((f"f(m,r) closed form equals generating-series coefficient, m<={f_m}", not bad, f"failures at {bad}" if bad else "exact"))
    for name, got, want in (
        ("alpha1(2)", alpha1(2), 0),
        ("alpha1(3)", alpha1(3), 4),
        ("alpha2(2)", alpha2(2), 1),
        ("alpha2(3)", alpha2(3), 6),
    ):
        out.append((f"{name} = {want}", got == want, f"value {got}"))
    bad = []
    for k in range(1, d_k + 1):
        prod = exact_matmul(d_matrix(k), d_matrix_inverse(k))
        eye = [[Fraction(int(i == j)) for j in range(k)] for i in range(k)]
        inv_ok = all(d_matrix_inverse(k)[i][j] == chebyshev_poly(2 * i + 3)[2 * j + 3] for i in range(k) for j in range(i + 1))
        if prod != eye or not inv_ok:
            bad.append(k)
    out.append((f"D(k) D(k)^-1 = I with Chebyshev-coefficient inverse, k<={d_k}", not bad, f"failures at {bad}" if bad else "exact"))
    return out


def run_identities(stream=None) -> int:
    """Print one pass/fail line per identity; return 0 if all pass, 1 otherwise."""
    results = identity_checks()
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'}  {name}  ({detail})", file=stream)
    return 0 if all(ok for _, ok, _ in results) else 1


# ---------------------------------------------------------------------------
# Output


ROW_COLUMNS = (
    "experiment",
    "statistic",
    "t",
    "k_n",
    "empirical_power",
    "theoretical_power",
    "mc_stderr",
    "reps_used",
    "mean_z",
    "var_z",
    "status",
)


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else str(v)
    return v


def write_csv(rows, path, config: ExperimentConfig, columns=None) -> None:
    """CSV (to a path or an open text file) with ``columns`` plus config_hash, seed and version on every row."""
    if rows and isinstance(rows[0], ResultRow):
        columns = list(columns or ROW_COLUMNS)
        if config.record_wall_time:
            columns.append("wall_time_seconds")
        dicts = [dataclasses.asdict(r) for r in rows]
    else:
        dicts = list(rows)
        columns = list(columns or (dicts[0].keys() if dicts else []))
    tail = {"config_hash": config_hash(config), "seed": config.seed, "version": __version__}

    def _write(fh):
        w = csv.writer(fh)
        w.writerow(columns + list(tail))
        for d in dicts:
            w.writerow([_fmt(d.get(c)) for c in columns] + list(tail.values()))

    if hasattr(path, "write"):
        _write(path)
    else:
        with open(path, "w", newline="") as fh:
            _write(fh)


def plot_power(rows: list[ResultRow], path, alpha: float) -> None:
    """Power against t: empirical points with 2-stderr bars and the theoretical curves."""
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError as exc:  # pragma: no cover - optional dependency
        raise ConfigError("--plot needs matplotlib (pip install 'artifact[plot]')") from exc
    fig, ax = plt.subplots(figsize=(6, 4))
    grid = np.linspace(0.0, 0.99, 200)
    ax.plot(grid, [optimal_power(alpha, t) for t in grid], "k-", lw=1, label="optimal (all degrees)")
    ax.plot(grid, [optimal_power(alpha, t, True) for t in grid], "k--", lw=1, label="optimal (odd degrees)")
    for name in dict.fromkeys(r.statistic for r in rows):
        pts = [r for r in rows if r.statistic == name and r.status == "ok"]
        if pts:
            ax.errorbar(
                [r.t for r in pts],
                [r.empirical_power for r in pts],
                yerr=[2 * r.mc_stderr for r in pts],
                fmt="o",
                ms=3,
                capsize=2,
                label=name,
            )
    ax.set_xlabel("t")
    ax.set_ylabel("power")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
