"""Test statistics built from Chebyshev traces, their null calibration, and power formulas."""

from __future__ import annotations

import enum
import json
import math
from dataclasses import asdict, dataclass, field
from math import comb, log

import numpy as np
from scipy.special import ndtr, ndtri

from .combinatorics import catalan_psi, chebyshev_poly, even_trace_constant, fk_coefficient
from .cycles import (
    ExactSmall,
    MonteCarlo,
    PlugInExpectation,
    TCorrectionMode,
    expected_T,
    fourth_moment_ratio,
    signed_cycle_bruteforce,
)
from .errors import DomainError, ParameterError
from .graph_models import GraphSample, estimate_p_hat
from .spectral import Centering, Regime, Spectrum, chebyshev_traces, default_k, spectrum_of

__all__ = [
    "SignMode",
    "SigmaMatrix",
    "StatisticKind",
    "TestOutcome",
    "TestSpec",
    "adaptive_all_from_traces",
    "adaptive_odd_from_traces",
    "apply_test",
    "bar_mu_na",
    "decide",
    "expected_chebyshev_trace",
    "La_from_traces",
    "Lo_from_traces",
    "mu_closed_form",
    "mu_npt",
    "mu_truncated",
    "norm_cdf",
    "norm_ppf",
    "null_mean_even_trace",
    "null_sd",
    "nu_odd",
    "optimal_power",
    "sigma1_sq",
    "sigma_matrix_even",
    "sigma_matrix_odd",
    "sigma_sq",
    "stat_adaptive_all",
    "stat_adaptive_odd",
    "stat_La",
    "stat_Lc",
    "stat_Lo",
    "variance_series",
    "variance_tail_bound",
]


# Monte Carlo remainder means are estimated up to T_{2 MC_MAX_J}; higher ones use plug-in values.
MC_MAX_J = 4


class StatisticKind(enum.Enum):
    LC_ORACLE = "Lc"
    LA_OPTIMAL = "La"
    LO_OPTIMAL = "Lo"
    ADAPTIVE_ODD = "adaptive_odd"
    ADAPTIVE_ALL = "adaptive_all"


class SignMode(enum.Enum):
    ASSORTATIVE = "assortative"
    DISASSORTATIVE = "disassortative"
    AUTO = "auto"


def _sign(mode: SignMode | str) -> int:
    mode = SignMode(mode)
    if mode is SignMode.AUTO:
        raise ParameterError("sign mode AUTO must be resolved from model parameters first")
    return -1 if mode is SignMode.DISASSORTATIVE else 1


# ---------------------------------------------------------------------------
# Gaussian helpers and closed-form variances


def norm_cdf(x):
    return ndtr(x)


def norm_ppf(q):
    return ndtri(q)


def _check_t(t: float) -> None:
    if not 0.0 <= t < 1.0:
        raise DomainError(f"t={t} must lie in [0, 1) (t >= 1 is the singular regime)")


def sigma_sq(t: float) -> float:
    """sigma(t)^2 = (-log(1 - t^2) - t^2 - t^4/2) / 2."""
    _check_t(t)
    t2 = t * t
    # log1p keeps small-t accuracy; the bracket is O(t^6).
    return 0.5 * (-math.log1p(-t2) - t2 - 0.5 * t2 * t2)


def sigma1_sq(t: float) -> float:
    """Odd-degree analogue: (-log((1 - t^2)/(1 + t^2)) - 2 t^2) / 4."""
    _check_t(t)
    t2 = t * t
    return 0.25 * (math.log1p(t2) - math.log1p(-t2) - 2.0 * t2)


def optimal_power(alpha: float, t: float, odd_only: bool = False) -> float:
    """Phi(-z_alpha + sigma(t)); with ``odd_only`` sigma_1(t) replaces sigma(t)."""
    if not 0.0 < alpha < 1.0:
        raise ParameterError(f"alpha={alpha} must lie in (0, 1)")
    s2 = sigma1_sq(t) if odd_only else sigma_sq(t)
    return float(norm_cdf(-norm_ppf(1.0 - alpha) + math.sqrt(s2)))


# ---------------------------------------------------------------------------
# Null means of even Chebyshev traces and the mu corrections


def _remainder_mean(j: int, n: int, p_ref: float, mode: TCorrectionMode) -> float:
    """E[T_{2j}] - binom(j+1, 2) psi_{2j}; for j = 1 only the Catalan part remains."""
    base = -comb(j + 1, 2) * catalan_psi(2 * j)
    if j == 1:
        return float(base)
    if isinstance(mode, ExactSmall) and j > 3:
        mode = PlugInExpectation()
    return base + expected_T(j, n, p_ref, mode)


def _plugin_moment(mode) -> str:
    return mode.moment if isinstance(mode, PlugInExpectation) else "bernoulli"


def expected_chebyshev_trace(m: int, n: int, p_ref: float, mode: TCorrectionMode | None = None) -> float:
    """Null mean of Tr P_m: 0 for odd m, sum_j P_m[2j] (E T_{2j} - binom(j+1,2) psi_{2j}) for even m >= 2.

    The plug-in part is evaluated from exact integer constants (the raw sum
    cancels catastrophically in floating point for large m); modes that
    replace low-order remainder means enter as corrections to it.
    """
    if m % 2 or m == 0:
        return 0.0
    mode = PlugInExpectation() if mode is None else mode
    const, wcoef = even_trace_constant(m // 2)
    value = const + wcoef * _series_moment(p_ref, _plugin_moment(mode))
    if isinstance(mode, PlugInExpectation):
        return float(value)
    plug = PlugInExpectation(_plugin_moment(mode))
    poly = chebyshev_poly(m)
    top = 3 if isinstance(mode, ExactSmall) else m // 2
    if isinstance(mode, MonteCarlo):
        top = min(top, MC_MAX_J)
    for j in range(2, min(top, m // 2) + 1):
        value += poly[2 * j] * (expected_T(j, n, p_ref, mode) - expected_T(j, n, p_ref, plug))
    return float(value)


def null_mean_even_trace(n: int, p_ref: float, k: int, mode: TCorrectionMode | None = None) -> float:
    """Null mean of Tr(A^{2k}): n psi_{2k} - binom(k+1, 2) psi_{2k} + E[T_{2k}]."""
    if k < 2:
        raise ParameterError(f"k must be >= 2, got {k}")
    mode = PlugInExpectation() if mode is None else mode
    psi = catalan_psi(2 * k)
    return n * psi - comb(k + 1, 2) * psi + expected_T(k, n, p_ref, mode)


def mu_truncated(n: int, p_ref: float, t: float, k_n: int, mode: TCorrectionMode | None = None) -> float:
    """Null mean of the truncated sum sum_{r=3}^{k_n} t^r Tr P_r / (2r)."""
    _check_t(t)
    return float(sum(t**r * expected_chebyshev_trace(r, n, p_ref, mode) / (2 * r) for r in range(4, k_n + 1, 2)))


def _series_moment(p_ref: float, moment: str) -> float:
    return 1.0 / p_ref if moment == "vanishing" else fourth_moment_ratio(p_ref)


def mu_npt(
    n: int,
    p_ref: float,
    t: float,
    mode: TCorrectionMode | None = None,
    tol: float = 1e-12,
    max_terms: int = 200,
    mc_max_j: int | None = None,
) -> float:
    """Null mean of the untruncated sum sum_{r>=3} t^r Tr P_r / (2r).

    Summed by remainder index: with u = t / (1 + t^2),

        mu = t^2/4 + (1/2) sum_{j>=1} u^{2j}/(2j) (E T_{2j} - binom(j+1,2) psi_{2j}).

    The series stops once a term falls below ``tol`` or after ``max_terms``
    terms. ``MonteCarlo`` estimates the remainder means for j <= ``mc_max_j``
    and uses plug-in means beyond.
    """
    _check_t(t)
    if not 0.0 < p_ref < 1.0:
        raise ParameterError(f"p_ref={p_ref} must lie in (0, 1)")
    mode = PlugInExpectation() if mode is None else mode
    mc_max_j = MC_MAX_J if mc_max_j is None else mc_max_j
    u2 = (t / (1.0 + t * t)) ** 2
    total = t * t / 4.0
    if t == 0.0:
        return 0.0
    for j in range(1, max_terms + 1):
        jm = mode
        if isinstance(mode, MonteCarlo) and j > mc_max_j:
            jm = PlugInExpectation()
        elif isinstance(mode, ExactSmall) and j > 3:
            jm = PlugInExpectation()
        term = 0.5 * u2**j / (2 * j) * _remainder_mean(j, n, p_ref, jm)
        total += term
        if abs(term) < tol and j >= 2:
            break
    return float(total)


def mu_closed_form(p_ref: float, t: float, moment: str = "bernoulli") -> float:
    """Limit of :func:`mu_npt` under plug-in means: t^4 (M - 2)/8 + sigma(t)^2 / 2."""
    return t**4 * (_series_moment(p_ref, moment) - 2.0) / 8.0 + 0.5 * sigma_sq(t)


def _degree_weight(m: int, epsilon: float) -> float:
    return 1.0 / (2 * m * log(m) ** (0.5 + epsilon))


def _check_epsilon(epsilon: float) -> None:
    if not 0.0 < epsilon <= 0.5:
        raise ParameterError(f"epsilon={epsilon} must lie in (0, 0.5]")


def bar_mu_na(
    n: int,
    p_ref: float,
    epsilon: float,
    k_n: int,
    mode: TCorrectionMode | None = None,
    reading: str = "coefficient",
    weight: str = "degree",
) -> float:
    """Null mean of the adaptive all-degree sum.

    sum_{r=2}^{floor(k_n/2)} w_r sum_{j=1}^{r} c_{r,j} (E T_{2j} - binom(j+1,2) psi_{2j}).

    ``reading="coefficient"`` takes c_{r,j} = P_{2r}[2j], which makes the inner
    sum equal E Tr P_{2r}; ``"evaluation"`` takes the polynomial value
    P_{2r}(2j). ``weight="degree"`` uses the weight of the degree-2r term of the
    statistic, 1/(4r (log 2r)^(1/2+eps)); ``"index"`` uses 1/(2r (log r)^(1/2+eps)).
    """
    _check_epsilon(epsilon)
    if reading not in ("coefficient", "evaluation"):
        raise ParameterError(f"unknown reading {reading!r}")
    if weight not in ("degree", "index"):
        raise ParameterError(f"unknown weight {weight!r}")
    mode = PlugInExpectation() if mode is None else mode
    total = 0.0
    for r in range(2, k_n // 2 + 1):
        w = _degree_weight(2 * r, epsilon) if weight == "degree" else _degree_weight(r, epsilon)
        if reading == "coefficient":
            inner = expected_chebyshev_trace(2 * r, n, p_ref, mode)
        else:
            poly = chebyshev_poly(2 * r)
            inner = sum(poly(2 * j) * _remainder_mean(j, n, p_ref, mode) for j in range(1, r + 1))
        total += w * inner
    return float(total)


# ---------------------------------------------------------------------------
# Statistics from a vector of Chebyshev traces (index = degree)


def La_from_traces(traces: np.ndarray, t: float, k_n: int, mu_value: float = 0.0, sign: int = 1) -> np.ndarray:
    """sum_{r=3}^{k_n} (sign t)^r Tr P_r / (2r) - mu_value; ``traces`` may carry leading batch axes."""
    traces = np.asarray(traces, dtype=float)
    r = np.arange(3, k_n + 1)
    coef = (sign * t) ** r / (2.0 * r)
    return traces[..., 3 : k_n + 1] @ coef - mu_value


def Lo_from_traces(traces: np.ndarray, t: float, k_n: int, sign: int = 1) -> np.ndarray:
    """sum over odd degrees 3..k_n of (sign t)^m Tr P_m / (2m)."""
    traces = np.asarray(traces, dtype=float)
    m = np.arange(3, k_n + 1, 2)
    coef = (sign * t) ** m / (2.0 * m)
    return traces[..., m] @ coef


def adaptive_odd_from_traces(traces: np.ndarray, epsilon: float, k_n: int, sign: int = 1) -> np.ndarray:
    traces = np.asarray(traces, dtype=float)
    m = np.arange(3, k_n + 1, 2)
    coef = np.array([_degree_weight(int(d), epsilon) for d in m])
    return sign * (traces[..., m] @ coef)


def adaptive_all_from_traces(
    traces: np.ndarray, epsilon: float, k_n: int, bar_mu_value: float = 0.0, sign: int = 1
) -> np.ndarray:
    traces = np.asarray(traces, dtype=float)
    m = np.arange(3, k_n + 1)
    coef = np.array([_degree_weight(int(d), epsilon) * sign ** int(d) for d in m])
    return traces[..., 3 : k_n + 1] @ coef - bar_mu_value


def _check_k(k_n: int) -> None:
    if k_n < 3:
        raise ParameterError(f"k_n must be >= 3, got {k_n}")


def stat_La(spectrum: Spectrum, t: float, k_n: int, mu_value: float, sign_mode: SignMode | str = SignMode.ASSORTATIVE) -> float:
    """Optimal all-degree statistic, centered by ``mu_value``."""
    if not 0.0 < t < 1.0:
        raise DomainError(f"t={t} must lie in (0, 1)")
    _check_k(k_n)
    return float(La_from_traces(chebyshev_traces(spectrum, k_n), t, k_n, mu_value, _sign(sign_mode)))


def stat_Lo(spectrum: Spectrum, t: float, k_n: int, sign_mode: SignMode | str = SignMode.ASSORTATIVE) -> float:
    """Optimal odd-degree statistic; ``k_n`` is the largest degree used."""
    if not 0.0 < t < 1.0:
        raise DomainError(f"t={t} must lie in (0, 1)")
    _check_k(k_n)
    return float(Lo_from_traces(chebyshev_traces(spectrum, k_n), t, k_n, _sign(sign_mode)))


def stat_adaptive_odd(spectrum: Spectrum, epsilon: float, k_n: int, sign_mode: SignMode | str = SignMode.ASSORTATIVE) -> float:
    _check_epsilon(epsilon)
    _check_k(k_n)
    return float(adaptive_odd_from_traces(chebyshev_traces(spectrum, k_n), epsilon, k_n, _sign(sign_mode)))


def stat_adaptive_all(
    spectrum: Spectrum,
    epsilon: float,
    k_n: int,
    bar_mu_value: float,
    sign_mode: SignMode | str = SignMode.ASSORTATIVE,
) -> float:
    _check_epsilon(epsilon)
    _check_k(k_n)
    return float(adaptive_all_from_traces(chebyshev_traces(spectrum, k_n), epsilon, k_n, bar_mu_value, _sign(sign_mode)))


def stat_Lc(graph: GraphSample, p_ref: float, t: float, k_max: int) -> float:
    """sum_{r=3}^{k_max} t^r C_{n,r} / (2r) with brute-force signed cycles."""
    if not 0.0 < t < 1.0:
        raise DomainError(f"t={t} must lie in (0, 1)")
    return float(sum(t**r * signed_cycle_bruteforce(graph, p_ref, r) / (2 * r) for r in range(3, k_max + 1)))


# ---------------------------------------------------------------------------
# Null variances


def null_variance(kind: StatisticKind | str, k_n: int, t: float | None = None, epsilon: float | None = None) -> float:
    """Limiting null variance of the statistic truncated at degree ``k_n``.

    Each Tr P_m (m >= 3) contributes variance 2m and distinct degrees are
    asymptotically uncorrelated.
    """
    kind = StatisticKind(kind)
    _check_k(k_n)
    if kind in (StatisticKind.LA_OPTIMAL, StatisticKind.LC_ORACLE):
        degrees, weight = range(3, k_n + 1), lambda m: t**m / (2 * m)
    elif kind is StatisticKind.LO_OPTIMAL:
        degrees, weight = range(3, k_n + 1, 2), lambda m: t**m / (2 * m)
    elif kind is StatisticKind.ADAPTIVE_ODD:
        degrees, weight = range(3, k_n + 1, 2), lambda m: _degree_weight(m, epsilon)
    else:
        degrees, weight = range(3, k_n + 1), lambda m: _degree_weight(m, epsilon)
    if kind in (StatisticKind.ADAPTIVE_ODD, StatisticKind.ADAPTIVE_ALL):
        _check_epsilon(epsilon)
    elif t is None or not 0.0 <= t < 1.0:
        raise DomainError(f"t={t} must lie in [0, 1)")
    return float(sum(2 * m * weight(m) ** 2 for m in degrees))


def null_sd(kind: StatisticKind | str, k_n: int, t: float | None = None, epsilon: float | None = None) -> float:
    return math.sqrt(null_variance(kind, k_n, t, epsilon))


def variance_series(epsilon: float, odd_only: bool, terms: int) -> float:
    """Partial sum of the adaptive variance series over degrees 3..terms (odd degrees if ``odd_only``)."""
    _check_epsilon(epsilon)
    m = np.arange(3, terms + 1, 2 if odd_only else 1, dtype=float)
    return float(np.sum(1.0 / (2.0 * m * np.log(m) ** (1.0 + 2.0 * epsilon))))


def variance_tail_bound(epsilon: float, start: int) -> float:
    """Upper bound on the adaptive variance series beyond degree ``start``.

    The summand 1/(2m (log m)^(1+2 eps)) is decreasing, so the tail is at most
    its integral from ``start``: (log start)^(-2 eps) / (4 eps).
    """
    _check_epsilon(epsilon)
    if start < 3:
        raise ParameterError("start must be >= 3")
    return log(start) ** (-2.0 * epsilon) / (4.0 * epsilon)


# ---------------------------------------------------------------------------
# Covariance matrices and alternative mean shifts


@dataclass(frozen=True)
class SigmaMatrix:
    ks: tuple[int, ...]
    entries: np.ndarray


def sigma_matrix_odd(ks) -> SigmaMatrix:
    """Limiting null covariance of (Tr A^{2k+1})_{k in ks}."""
    ks = tuple(int(k) for k in ks)
    if not ks or min(ks) < 1:
        raise ParameterError("ks must be nonempty with entries >= 1")
    out = np.zeros((len(ks), len(ks)))
    for a, ki in enumerate(ks):
        for b, kj in enumerate(ks):
            mi, mj = 2 * ki + 1, 2 * kj + 1
            out[a, b] = sum(
                2 * fk_coefficient(mi, r) * fk_coefficient(mj, r) * mi * mj / r for r in range(3, min(mi, mj) + 1, 2)
            )
    return SigmaMatrix(ks, out)


def sigma_matrix_even(ks, p_ref: float) -> SigmaMatrix:
    """Limiting null covariance of (Tr A^{2k})_{k in ks} under known centering.

    The second term carries Var[(x-p)^2] / (p(1-p))^2 = W - 1 from exact
    Bernoulli moments.
    """
    ks = tuple(int(k) for k in ks)
    if not ks or min(ks) < 1:
        raise ParameterError("ks must be nonempty with entries >= 1")
    v = fourth_moment_ratio(p_ref) - 1.0
    out = np.zeros((len(ks), len(ks)))
    for a, ki in enumerate(ks):
        for b, kj in enumerate(ks):
            mi, mj = 2 * ki, 2 * kj
            cyc = sum(2 * fk_coefficient(mi, r) * fk_coefficient(mj, r) * mi * mj / r for r in range(4, min(mi, mj) + 1, 2))
            out[a, b] = cyc + 2 * ki * kj * catalan_psi(mi) * catalan_psi(mj) * v
    return SigmaMatrix(ks, out)


def nu_odd(k: int, t: float, sign_mode: SignMode | str = SignMode.ASSORTATIVE) -> float:
    """Alternative mean of Tr A^{2k+1}: sum over odd r of binom(2k+1, (2k+1+r)/2) (sign t)^r."""
    if k < 1:
        raise ParameterError("k must be >= 1")
    m = 2 * k + 1
    s = _sign(sign_mode) * t
    return float(sum(comb(m, (m + r) // 2) * s**r for r in range(3, m + 1, 2)))


# ---------------------------------------------------------------------------
# Decisions


@dataclass(frozen=True)
class TestSpec:
    kind: StatisticKind = StatisticKind.ADAPTIVE_ODD
    alpha: float = 0.05
    t: float | None = None
    epsilon: float = 0.15
    k_n: int | None = None  # None: default_k
    sign_mode: SignMode = SignMode.ASSORTATIVE
    t_correction: TCorrectionMode | None = None
    centering: Centering = Centering.ESTIMATED
    mu: str = "truncated"  # or "series"
    bar_mu_reading: str = "coefficient"
    bar_mu_weight: str = "degree"

    __test__ = False  # not a pytest class

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ParameterError(f"alpha={self.alpha} must lie in (0, 1)")
        _check_epsilon(self.epsilon)
        if self.k_n is not None and self.k_n < 3:
            raise ParameterError(f"k_n must be >= 3, got {self.k_n}")
        if self.kind in (StatisticKind.LA_OPTIMAL, StatisticKind.LO_OPTIMAL, StatisticKind.LC_ORACLE):
            if self.t is None or not 0.0 < self.t < 1.0:
                raise DomainError(f"{self.kind.value} needs a hypothesized t in (0, 1), got {self.t}")
        if self.mu not in ("truncated", "series"):
            raise ParameterError(f"unknown mu convention {self.mu!r}")

    @property
    def regime(self) -> Regime:
        odd = self.kind in (StatisticKind.LO_OPTIMAL, StatisticKind.ADAPTIVE_ODD)
        return Regime.ODD_ONLY if odd else Regime.ALL


@dataclass(frozen=True)
class TestOutcome:
    statistic: float
    null_mean: float
    null_sd: float
    z: float
    p_value: float
    reject: bool
    theoretical_power: float | None = None
    k_used: int | None = None
    centering: str | None = None
    kind: str | None = None
    n: int | None = None
    p_hat: float | None = None
    t: float | None = None
    extra: dict = field(default_factory=dict, compare=False)

    __test__ = False

    CSV_COLUMNS = ("kind", "n", "p_hat", "t", "k", "statistic", "null_mean", "null_sd", "z", "p_value", "reject", "theoretical_power")

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("extra")
        d["k"] = d.pop("k_used")
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def csv_row(self) -> list:
        d = self.to_dict()
        return [d[c] for c in self.CSV_COLUMNS]


def decide(
    statistic: float,
    null_mean: float,
    null_sd: float,
    alpha: float,
    t_for_power: float | None = None,
    odd_only: bool = False,
    **meta,
) -> TestOutcome:
    """One-sided upper test of a standardized statistic."""
    if not null_sd > 0:
        raise ParameterError(f"null_sd must be positive, got {null_sd}")
    if not 0.0 < alpha < 1.0:
        raise ParameterError(f"alpha={alpha} must lie in (0, 1)")
    z = (statistic - null_mean) / null_sd
    p_value = float(ndtr(-z))
    power = optimal_power(alpha, t_for_power, odd_only) if t_for_power is not None else None
    return TestOutcome(
        statistic=float(statistic),
        null_mean=float(null_mean),
        null_sd=float(null_sd),
        z=float(z),
        p_value=p_value,
        reject=p_value < alpha,
        theoretical_power=power,
        **meta,
    )


@dataclass(frozen=True)
class Calibration:
    """Everything needed to turn a trace vector into a decision for one TestSpec."""

    spec: TestSpec
    k_n: int
    shift: float  # subtracted from the raw weighted trace sum
    sd: float
    sign: int

    def statistic(self, traces: np.ndarray) -> np.ndarray:
        s, k = self.spec, self.k_n
        if s.kind in (StatisticKind.LA_OPTIMAL, StatisticKind.LC_ORACLE):
            return La_from_traces(traces, s.t, k, self.shift, self.sign)
        if s.kind is StatisticKind.LO_OPTIMAL:
            return Lo_from_traces(traces, s.t, k, self.sign)
        if s.kind is StatisticKind.ADAPTIVE_ODD:
            return adaptive_odd_from_traces(traces, s.epsilon, k, self.sign)
        return adaptive_all_from_traces(traces, s.epsilon, k, self.shift, self.sign)


def calibrate(spec: TestSpec, n: int, p_ref: float, assortative: bool = True) -> Calibration:
    """Resolve k_n, sign and the centering constant for a test on an n-node graph with density p_ref."""
    k_n = spec.k_n if spec.k_n is not None else default_k(n, p_ref, spec.regime)
    mode = SignMode(spec.sign_mode)
    if mode is SignMode.AUTO:
        mode = SignMode.ASSORTATIVE if assortative else SignMode.DISASSORTATIVE
    sign = _sign(mode)
    shift = 0.0
    if spec.kind is StatisticKind.LA_OPTIMAL:
        if spec.mu == "series":
            shift = mu_npt(n, p_ref, spec.t, spec.t_correction)
        else:
            shift = mu_truncated(n, p_ref, spec.t, k_n, spec.t_correction)
    elif spec.kind is StatisticKind.ADAPTIVE_ALL:
        shift = bar_mu_na(n, p_ref, spec.epsilon, k_n, spec.t_correction, spec.bar_mu_reading, spec.bar_mu_weight)
    sd = null_sd(spec.kind, k_n, spec.t, spec.epsilon)
    return Calibration(spec=spec, k_n=k_n, shift=shift, sd=sd, sign=sign)


def apply_test(graph: GraphSample, spec: TestSpec, p_av: float | None = None, assortative: bool = True) -> TestOutcome:
    """Compute the statistic of ``spec`` on ``graph`` and decide at level ``spec.alpha``.

    The statistic is centered already (La and adaptive_all subtract their null
    means), so the reported null_mean is 0.
    """
    p_hat = estimate_p_hat(graph)
    p_ref = p_hat if spec.centering is Centering.ESTIMATED else p_av
    if p_ref is None:
        raise ParameterError("known centering needs p_av")
    cal = calibrate(spec, graph.n, p_ref, assortative)
    if spec.kind is StatisticKind.LC_ORACLE:
        value = stat_Lc(graph, p_ref, spec.t, cal.k_n) - cal.shift
    else:
        spectrum = spectrum_of(graph, spec.centering, p_av)
        value = float(cal.statistic(chebyshev_traces(spectrum, cal.k_n)))
    power_t = spec.t if spec.kind in (StatisticKind.LA_OPTIMAL, StatisticKind.LO_OPTIMAL, StatisticKind.LC_ORACLE) else None
    return decide(
        value,
        0.0,
        cal.sd,
        spec.alpha,
        t_for_power=power_t,
        odd_only=spec.kind is StatisticKind.LO_OPTIMAL,
        k_used=cal.k_n,
        centering=Centering(spec.centering).value,
        kind=spec.kind.value,
        n=graph.n,
        p_hat=p_hat,
        t=spec.t,
    )
