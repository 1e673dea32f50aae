"""Centered adjacency matrices, their spectra, and Chebyshev linear spectral statistics."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from math import floor, log, sqrt

import numpy as np

from .combinatorics import chebyshev_poly
from .errors import DegenerateCenteringError, NumericalError, ParameterError, RegimeTooSparseError
from .graph_models import GraphSample, estimate_p_hat

__all__ = [
    "Centering",
    "CenteredMatrix",
    "Regime",
    "Spectrum",
    "center",
    "center_estimated",
    "center_known",
    "chebyshev_lss",
    "chebyshev_traces",
    "default_k",
    "eigenvalues",
    "power_trace",
    "spectrum_of",
]

K_CAP = 60


class Centering(enum.Enum):
    KNOWN = "known"
    ESTIMATED = "estimated"


class Regime(enum.Enum):
    ODD_ONLY = "odd"
    ALL = "all"


@dataclass(frozen=True)
class CenteredMatrix:
    entries: np.ndarray
    centering: Centering
    p_ref: float

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def scale(self) -> float:
        """n p_ref (1 - p_ref), the squared normalization."""
        return self.n * self.p_ref * (1.0 - self.p_ref)


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray  # descending
    centering: Centering
    p_ref: float

    @property
    def n(self) -> int:
        return self.eigenvalues.shape[0]


def _center(graph: GraphSample, p_ref: float, mode: Centering) -> CenteredMatrix:
    if not 0.0 < p_ref < 1.0:
        raise DegenerateCenteringError(f"centering constant must lie in (0, 1), got {p_ref}")
    n = graph.n
    s = sqrt(n * p_ref * (1.0 - p_ref))
    hi, lo = (1.0 - p_ref) / s, -p_ref / s
    m = np.where(graph.adjacency.astype(bool), hi, lo)
    np.fill_diagonal(m, 0.0)
    return CenteredMatrix(entries=m, centering=mode, p_ref=float(p_ref))


def center_known(graph: GraphSample, p_av: float) -> CenteredMatrix:
    """(A - p_av (J - I)) / sqrt(n p_av (1 - p_av))."""
    return _center(graph, p_av, Centering.KNOWN)


def center_estimated(graph: GraphSample) -> CenteredMatrix:
    """Same as :func:`center_known` with p_av replaced by the edge density."""
    p_hat = estimate_p_hat(graph)
    if not 0.0 < p_hat < 1.0:
        raise DegenerateCenteringError(f"estimated density {p_hat} is degenerate (empty or complete graph)")
    return _center(graph, p_hat, Centering.ESTIMATED)


def center(graph: GraphSample, centering: Centering | str = Centering.ESTIMATED, p_av: float | None = None) -> CenteredMatrix:
    centering = Centering(centering)
    if centering is Centering.KNOWN:
        if p_av is None:
            raise ParameterError("known centering needs p_av")
        return center_known(graph, p_av)
    return center_estimated(graph)


def eigenvalues(m: CenteredMatrix) -> Spectrum:
    try:
        lam = np.linalg.eigvalsh(m.entries)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"symmetric eigensolver failed: {exc}") from exc
    if not np.all(np.isfinite(lam)):
        raise NumericalError("eigensolver returned non-finite values")
    return Spectrum(eigenvalues=lam[::-1].copy(), centering=m.centering, p_ref=m.p_ref)


def spectrum_of(graph: GraphSample, centering: Centering | str = Centering.ESTIMATED, p_av: float | None = None) -> Spectrum:
    return eigenvalues(center(graph, centering, p_av))


def _eigs(spec) -> np.ndarray:
    return spec.eigenvalues if isinstance(spec, Spectrum) else np.asarray(spec, dtype=float)


def chebyshev_traces(spec, m_max: int) -> np.ndarray:
    """Vector ``out[m] = sum_i P_m(lambda_i)`` for m = 0..m_max.

    Uses the three-term recurrence per eigenvalue, never monomial coefficients.
    """
    if m_max < 0:
        raise ParameterError("m_max must be nonnegative")
    lam = _eigs(spec)
    out = np.empty(m_max + 1)
    prev = np.full_like(lam, 2.0)
    out[0] = prev.sum()
    if m_max == 0:
        return out
    cur = lam.copy()
    out[1] = cur.sum()
    for m in range(2, m_max + 1):
        prev, cur = cur, lam * cur - prev
        out[m] = cur.sum()
    return out


def chebyshev_lss(spec, m: int) -> float:
    """sum_i P_m(lambda_i)."""
    return float(chebyshev_traces(spec, m)[m])


def power_trace(spec, k: int) -> float:
    if k < 0:
        raise ParameterError("k must be nonnegative")
    lam = _eigs(spec)
    if k == 0:
        return float(lam.size)
    return float(np.sum(lam**k))


def expanded_chebyshev_lss(spec, m: int) -> float:
    """Same quantity as :func:`chebyshev_lss` through monomial coefficients (oracle only)."""
    poly = chebyshev_poly(m)
    return float(sum(c * power_trace(spec, j) for j, c in enumerate(poly.coeffs) if c))


def default_k(n: int, p_ref: float, regime: Regime | str = Regime.ODD_ONLY) -> int:
    """Heuristic truncation degree from the growth conditions on k_n.

    The o(.) conditions do not pin a finite value; this takes
    floor(min(log g, sqrt(log n)) - 1), clamped to [3, 60], where g is n p
    (odd-only statistics) or n^2 p^3 (statistics using even degrees).
    """
    regime = Regime(regime)
    if n < 2:
        raise RegimeTooSparseError(f"n={n}: need n >= 2")
    if not 0.0 < p_ref < 1.0:
        raise ParameterError(f"p_ref={p_ref} must lie in (0, 1)")
    if regime is Regime.ODD_ONLY:
        g, label = n * p_ref, "n*p"
    else:
        g, label = n * n * p_ref**3, "n^2*p^3"
    if g <= 1.0:
        raise RegimeTooSparseError(f"growth condition violated: {label} = {g:.4g} <= 1, so log({label}) <= 0")
    if log(n) <= 1.0:
        raise RegimeTooSparseError(f"growth condition violated: log(n) = {log(n):.4g} <= 1")
    k = floor(min(log(g), sqrt(log(n))) - 1.0)
    return int(min(max(3, k), K_CAP))
