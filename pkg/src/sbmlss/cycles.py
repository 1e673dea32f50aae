"""Signed cycles: brute-force ground truth, T-remainder corrections, and cycles recovered from LSS."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import lru_cache
from math import comb

import numpy as np

from .combinatorics import alpha1, alpha2, catalan_psi, chebyshev_poly
from .errors import ComplexityError, DegenerateCenteringError, ModeError, ParameterError
from .graph_models import GraphSample, replicate_rng, sample_er
from .spectral import CenteredMatrix, Spectrum, center_known, chebyshev_lss, chebyshev_traces, eigenvalues

__all__ = [
    "ExactSmall",
    "MonteCarlo",
    "PlugInExpectation",
    "SparsePlugInWarning",
    "TCorrectionMode",
    "bernoulli_central_moment",
    "bruteforce_trace",
    "cycle_from_lss_even",
    "cycle_from_lss_odd",
    "expected_T",
    "fourth_moment_ratio",
    "mode_from_name",
    "signed_cycle_bruteforce",
    "signed_cycle_closed_form",
    "t4_correction",
    "t6_correction",
]


BRUTE_FORCE_GUARD = 10**8


class SparsePlugInWarning(RuntimeWarning):
    """Plug-in remainder means are used outside the regime where they are accurate."""


@dataclass(frozen=True)
class ExactSmall:
    """Use the closed-form corrections available for cycle lengths 4 and 6."""


@dataclass(frozen=True)
class PlugInExpectation:
    """Replace T_{2k} by its limiting mean alpha1 + alpha2 * M.

    ``moment="bernoulli"`` takes M = E(x-p)^4 / (p(1-p))^2, exact for fixed p.
    ``moment="vanishing"`` takes M = 1/p, its p -> 0 limit.
    """

    moment: str = "bernoulli"

    def __post_init__(self):
        if self.moment not in ("bernoulli", "vanishing"):
            raise ModeError(f"unknown moment convention {self.moment!r}")


@dataclass(frozen=True)
class MonteCarlo:
    """Estimate E[T_{2k}] from simulated null graphs with known centering."""

    reps: int = 200
    seed: int = 0

    def __post_init__(self):
        if self.reps < 1:
            raise ModeError("MonteCarlo needs reps >= 1")


TCorrectionMode = ExactSmall | PlugInExpectation | MonteCarlo


def mode_from_name(name: str, reps: int = 200, seed: int = 0) -> TCorrectionMode | None:
    """Parse a config string: ``auto``, ``exact``, ``plugin``, ``plugin-vanishing``, ``mc``."""
    name = name.strip().lower()
    if name == "auto":
        return None
    if name == "exact":
        return ExactSmall()
    if name == "plugin":
        return PlugInExpectation()
    if name == "plugin-vanishing":
        return PlugInExpectation("vanishing")
    if name == "mc":
        return MonteCarlo(reps=reps, seed=seed)
    raise ModeError(f"unknown T-correction mode {name!r}")


def _check_p(p_ref: float) -> None:
    if not 0.0 < p_ref < 1.0:
        raise DegenerateCenteringError(f"p_ref must lie in (0, 1), got {p_ref}")


def bernoulli_central_moment(p: float, k: int) -> float:
    """E(x - p)^k for x ~ Bernoulli(p)."""
    return p * (1.0 - p) ** k + (1.0 - p) * (-p) ** k


def fourth_moment_ratio(p: float) -> float:
    """W = E(x-p)^4 / (p(1-p))^2 = (1 - 3p + 3p^2) / (p(1-p))."""
    _check_p(p)
    return (1.0 - 3.0 * p + 3.0 * p * p) / (p * (1.0 - p))


def _centered_offdiag(graph: GraphSample, p_ref: float) -> np.ndarray:
    x = graph.adjacency.astype(float) - p_ref
    np.fill_diagonal(x, 0.0)
    return x


def signed_cycle_bruteforce(graph: GraphSample, p_ref: float, k: int) -> float:
    """C_{n,k}: sum over ordered k-tuples of distinct nodes of cyclic products of (x - p_ref), normalized.

    Enumerates each cycle once with its smallest node first and multiplies by k
    for the rotations; paths are extended breadth-first with numpy.
    """
    if k < 3:
        raise ParameterError(f"signed cycles need k >= 3, got {k}")
    _check_p(p_ref)
    n = graph.n
    if float(n) ** k > BRUTE_FORCE_GUARD:
        raise ComplexityError(f"n^k = {n}^{k} exceeds the brute-force guard {BRUTE_FORCE_GUARD:.0e}")
    if n < k:
        return 0.0
    x = _centered_offdiag(graph, p_ref)
    total = 0.0
    for i0 in range(n - k + 1):
        cand = np.arange(i0 + 1, n)
        paths = np.array([[i0]])
        w = np.ones(1)
        for _ in range(1, k):
            last = paths[:, -1]
            step = w[:, None] * x[last[:, None], cand[None, :]]
            used = (paths[:, :, None] == cand[None, None, :]).any(axis=1)
            r, c = np.nonzero(~used)
            paths = np.concatenate([paths[r], cand[c][:, None]], axis=1)
            w = step[r, c]
        total += float((w * x[paths[:, -1], i0]).sum())
    s = n * p_ref * (1.0 - p_ref)
    return k * total / s ** (k / 2)


def signed_cycle_closed_form(graph: GraphSample, p_ref: float, k: int) -> float:
    """C_{n,k} for k in {3, 4, 5} from matrix products, O(n^3).

    With a = centered, scaled entries, d_i = sum_j a_ij^2 and a zero diagonal,
    closed walks that revisit a node are removed explicitly:

        C_3 = Tr A^3
        C_4 = Tr A^4 - 2 sum_i d_i^2 + sum_ij a_ij^4
        C_5 = Tr A^5 - 5 sum_i (A^3)_ii d_i + 5 Tr(A^{o3} A^2)

    where A^{o3} is the entrywise cube (walks using one edge three times are
    counted twice by the middle term).
    """
    if k not in (3, 4, 5):
        raise ParameterError(f"closed forms exist here for k in {{3, 4, 5}}, got {k}")
    _check_p(p_ref)
    a = center_known(graph, p_ref).entries
    a2 = a @ a
    if k == 3:
        return float(np.sum(a2 * a))
    sq = a * a
    d = sq.sum(axis=1)
    if k == 4:
        return float(np.sum(a2 * a2) - 2.0 * np.sum(d * d) + np.sum(sq * sq))
    a3_diag = np.sum(a2 * a, axis=1)
    tr5 = float(np.sum((a2 @ a) * a2))
    return tr5 - 5.0 * float(a3_diag @ d) + 5.0 * float(np.sum((sq * a) * a2))


def bruteforce_trace(m: CenteredMatrix, k: int) -> float:
    """Tr(M^k) by repeated dense multiplication."""
    if k < 1:
        raise ParameterError("k must be >= 1")
    if m.n > 500:
        raise ComplexityError("bruteforce_trace is limited to n <= 500")
    return float(np.trace(np.linalg.matrix_power(m.entries, k)))


def t4_correction(graph: GraphSample, p_ref: float) -> float:
    """s^-2 sum_{i != j} (x_ij - p)^4 with s = n p (1-p)."""
    _check_p(p_ref)
    s = graph.n * p_ref * (1.0 - p_ref)
    x = _centered_offdiag(graph, p_ref)
    return float(np.sum(x**4)) / s**2


def t6_correction(graph: GraphSample, p_ref: float) -> float:
    """6 s^-3 sum_{distinct i,j,l} y_ij^4 y_jl^2 + s^-3 sum_{i != j} y_ij^6 + 4, with y = x - p."""
    _check_p(p_ref)
    s = graph.n * p_ref * (1.0 - p_ref)
    x = _centered_offdiag(graph, p_ref)
    x2 = x * x
    x4 = x2 * x2
    sum6 = float(np.sum(x4 * x2))
    # sum_j (row-sum of y^4 at j)(row-sum of y^2 at j) counts l = i once; remove it.
    paths = float(np.dot(x4.sum(axis=0), x2.sum(axis=0))) - sum6
    return (6.0 * paths + sum6) / s**3 + 4.0


def _exact_small_mean(k: int, n: int, p: float) -> float:
    """Exact finite-n expectation of t4 (k=2) or t6 (k=3) under G(n, p)."""
    s = n * p * (1.0 - p)
    m2 = bernoulli_central_moment(p, 2)
    m4 = bernoulli_central_moment(p, 4)
    if k == 2:
        return n * (n - 1) * m4 / s**2
    m6 = bernoulli_central_moment(p, 6)
    return (6.0 * n * (n - 1) * (n - 2) * m4 * m2 + n * (n - 1) * m6) / s**3 + 4.0


@lru_cache(maxsize=64)
def _mc_even_means(k_max: int, n: int, p: float, reps: int, seed: int) -> tuple[float, ...]:
    """E[T_{2j}] for j = 2..k_max from simulated null traces.

    Under known centering every signed cycle has mean exactly zero, so the
    mean of Tr P_{2j} equals sum_i P_{2j}[2i] (E T_{2i} - binom(i+1,2) psi_{2i});
    this is triangular in j and is solved upward.
    """
    acc = np.zeros(2 * k_max + 1)
    for rep in range(reps):
        g = sample_er(n, p, replicate_rng(seed, rep))
        acc += chebyshev_traces(eigenvalues(center_known(g, p)), 2 * k_max)
    mean_tr = acc / reps
    et = {1: 0.0}
    for j in range(2, k_max + 1):
        poly = chebyshev_poly(2 * j)
        known = sum(poly[2 * i] * (et[i] - comb(i + 1, 2) * catalan_psi(2 * i)) for i in range(1, j))
        et[j] = mean_tr[2 * j] - known + comb(j + 1, 2) * catalan_psi(2 * j)
    return tuple(et[j] for j in range(2, k_max + 1))


def expected_T(k: int, n: int, p_ref: float, mode: TCorrectionMode) -> float:
    """Null mean of the even-trace remainder T_{2k}."""
    if k < 2:
        raise ParameterError(f"expected_T needs k >= 2, got {k}")
    _check_p(p_ref)
    if isinstance(mode, ExactSmall):
        if k not in (2, 3):
            raise ModeError(f"ExactSmall covers cycle lengths 4 and 6 only, got 2k={2 * k}")
        return _exact_small_mean(k, n, p_ref)
    if isinstance(mode, PlugInExpectation):
        if n * p_ref**2 < 10:
            warnings.warn(
                f"plug-in T_{2 * k} mean used with n p^2 = {n * p_ref**2:.3g} < 10; the dropped 1/(n p^2) term may bias it",
                SparsePlugInWarning,
                stacklevel=2,
            )
        m = 1.0 / p_ref if mode.moment == "vanishing" else fourth_moment_ratio(p_ref)
        return alpha1(k) + alpha2(k) * m
    if isinstance(mode, MonteCarlo):
        return _mc_even_means(k, n, float(p_ref), mode.reps, mode.seed)[k - 2]
    raise ModeError(f"unknown T-correction mode {mode!r}")


def cycle_from_lss_odd(spectrum: Spectrum, k: int) -> float:
    """Tr P_k as the estimate of the odd signed cycle C_{n,k}."""
    if k < 3 or k % 2 == 0:
        raise ParameterError(f"odd construction needs odd k >= 3, got {k} (use cycle_from_lss_even)")
    return chebyshev_lss(spectrum, k)


def _t_value(r: int, graph: GraphSample, n: int, p_ref: float, mode: TCorrectionMode | None) -> float:
    if r <= 2:
        return 0.0
    if mode is None:
        mode = ExactSmall() if r <= 6 else PlugInExpectation()
    if isinstance(mode, ExactSmall):
        if r == 4:
            return t4_correction(graph, p_ref)
        if r == 6:
            return t6_correction(graph, p_ref)
        raise ModeError(f"ExactSmall cannot supply T_{r}")
    return expected_T(r // 2, n, p_ref, mode)


def even_correction(graph: GraphSample, p_ref: float, k: int, mode: TCorrectionMode | None = None) -> float:
    """sum over even r <= k of P_k[r] (T_r - binom(r/2+1, 2) psi_r), with T_0 = T_2 = 0."""
    poly = chebyshev_poly(k)
    total = 0.0
    for r in range(2, k + 1, 2):
        c = poly[r]
        if c:
            total += c * (_t_value(r, graph, graph.n, p_ref, mode) - comb(r // 2 + 1, 2) * catalan_psi(r))
    return total


def cycle_from_lss_even(
    spectrum: Spectrum,
    graph: GraphSample,
    p_ref: float,
    k: int,
    mode: TCorrectionMode | None = None,
) -> float:
    """Estimate of the even signed cycle C_{n,k} from Tr P_k.

    Tr P_k exceeds C_{n,k} by the correction sum (for k = 4 the relation
    Tr P_4 = C_4 + T_4 - 2 is an algebraic identity), so the correction is
    subtracted. ``mode=None`` uses the exact statistics for r in {4, 6} and
    plug-in means above.
    """
    if k < 4 or k % 2:
        raise ParameterError(f"even construction needs even k >= 4, got {k}")
    if isinstance(mode, ExactSmall) and k > 6:
        raise ModeError(f"ExactSmall covers cycle lengths up to 6, got k={k}")
    _check_p(p_ref)
    return chebyshev_lss(spectrum, k) - even_correction(graph, p_ref, k, mode)
