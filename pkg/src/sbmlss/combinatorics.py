"""Exact integer/rational coefficients behind the spectral statistics.

Everything here is computed with Python integers and :class:`fractions.Fraction`
so identities can be checked with ``==``. Results are memoized; the objects
returned are immutable.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb

__all__ = [
    "ChebyshevPoly",
    "CoeffTables",
    "alpha1",
    "alpha2",
    "build_tables",
    "catalan_psi",
    "chebyshev_poly",
    "cheby_psi_sums",
    "d_matrix",
    "d_matrix_inverse",
    "even_trace_constant",
    "exact_matmul",
    "fk_coefficient",
    "fk_series",
]


def catalan_psi(k: int) -> int:
    """Semicircle moment: 0 for odd ``k``, the ``k/2``-th Catalan number otherwise."""
    if k < 0:
        raise ValueError(f"k must be nonnegative, got {k}")
    if k % 2:
        return 0
    h = k // 2
    return comb(k, h) // (h + 1)


def fk_coefficient(m: int, r: int) -> int:
    """Füredi–Komlós coefficient f(m, r), via f(m,r)·m/r = binom(m, (m+r)/2)."""
    if m < 1 or r < 1:
        raise ValueError(f"m and r must be positive, got m={m}, r={r}")
    if r > m or (m - r) % 2:
        return 0
    num = r * comb(m, (m + r) // 2)
    q, rem = divmod(num, m)
    assert rem == 0, (m, r)
    return q


@lru_cache(maxsize=None)
def _sqrt_one_minus_4z2(order: int) -> tuple[Fraction, ...]:
    # Taylor coefficients of sqrt(1 - 4 z^2) up to z^order via the binomial series.
    out = [Fraction(0)] * (order + 1)
    coef = Fraction(1)  # binom(1/2, j), built incrementally
    for j in range(order // 2 + 1):
        if j > 0:
            coef = coef * (Fraction(1, 2) - (j - 1)) / j
        out[2 * j] = coef * (-4) ** j
    return tuple(out)


def fk_series(r: int, max_order: int) -> list[Fraction]:
    """Coefficients of ((1 - sqrt(1-4z^2)) / (2z))^r up to z^max_order.

    Independent of :func:`fk_coefficient`: the power series is expanded with
    exact rational arithmetic. Entry ``m`` is the coefficient of ``z^m``.
    """
    if r < 1:
        raise ValueError("r must be positive")
    s = _sqrt_one_minus_4z2(max_order + 1)
    # (1 - sqrt(1-4z^2)) / (2z): shift down by one power of z.
    base = [Fraction(0)] * (max_order + 1)
    for j in range(1, max_order + 2):
        if j - 1 <= max_order:
            c = (1 if j == 0 else 0) - s[j]
            base[j - 1] = c / 2
    result = [Fraction(0)] * (max_order + 1)
    result[0] = Fraction(1)
    for _ in range(r):
        nxt = [Fraction(0)] * (max_order + 1)
        for i, a in enumerate(result):
            if a:
                for j in range(max_order + 1 - i):
                    if base[j]:
                        nxt[i + j] += a * base[j]
        result = nxt
    return result


@dataclass(frozen=True)
class ChebyshevPoly:
    """Rescaled Chebyshev polynomial P_m(x) = 2 S_m(x/2) with exact integer coefficients.

    ``coeffs[j]`` is the coefficient of ``x**j``.
    """

    degree: int
    coeffs: tuple[int, ...]

    def __getitem__(self, j: int) -> int:
        if 0 <= j <= self.degree:
            return self.coeffs[j]
        return 0

    def __call__(self, x):
        # Horner; fine for exact or moderate-degree evaluation. Use
        # spectral.chebyshev_lss for eigenvalue sums.
        acc = 0
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc


@lru_cache(maxsize=None)
def chebyshev_poly(m: int) -> ChebyshevPoly:
    """P_m from the recurrence P_{m+1} = x P_m - P_{m-1}, P_0 = 2, P_1 = x."""
    if m < 0:
        raise ValueError(f"degree must be nonnegative, got {m}")
    if m == 0:
        return ChebyshevPoly(0, (2,))
    if m == 1:
        return ChebyshevPoly(1, (0, 1))
    prev, cur = chebyshev_poly(m - 2).coeffs, chebyshev_poly(m - 1).coeffs
    shifted = (0,) + cur
    out = tuple(a - (prev[j] if j < len(prev) else 0) for j, a in enumerate(shifted))
    return ChebyshevPoly(m, out)


def _exact_int(x: Fraction) -> int:
    assert x.denominator == 1, x
    return x.numerator


@lru_cache(maxsize=None)
def alpha1(k: int) -> int:
    """Constant part of the mean of the even-trace remainder T_{2k}."""
    if k < 2:
        raise ValueError(f"alpha1 needs k >= 2, got {k}")
    val = (
        Fraction(2 ** (2 * k - 1))
        - Fraction(comb(2 * k, k) * (5 * k + 1), 2 * (k + 1))
        + comb(k + 1, 2) * catalan_psi(2 * k)
        - 3 * comb(2 * k, k + 2)
    )
    return _exact_int(val)


def alpha2(k: int) -> int:
    """Coefficient of the fourth-moment term in the mean of T_{2k}: binom(2k, k+2)."""
    if k < 2:
        raise ValueError(f"alpha2 needs k >= 2, got {k}")
    return comb(2 * k, k + 2)


@lru_cache(maxsize=None)
def _d_matrix(k: int) -> tuple[tuple[Fraction, ...], ...]:
    rows = []
    for i in range(1, k + 1):
        m = 2 * i + 1
        row = []
        for j in range(1, k + 1):
            r = 2 * j + 1
            if j > i:
                row.append(Fraction(0))
            elif j == i:
                row.append(Fraction(1))
            else:
                row.append(Fraction(m * fk_coefficient(m, r), r))
        rows.append(tuple(row))
    return tuple(rows)


def d_matrix(k: int) -> list[list[Fraction]]:
    """k×k lower-triangular map from odd signed cycles (3,5,...,2k+1) to odd traces."""
    if k < 1:
        raise ValueError("k must be positive")
    return [list(r) for r in _d_matrix(k)]


def d_matrix_inverse(k: int) -> list[list[int]]:
    """Inverse of :func:`d_matrix`; entry (i, j) is P_{2i+1}[2j+1] (1-based)."""
    if k < 1:
        raise ValueError("k must be positive")
    return [
        [chebyshev_poly(2 * i + 1)[2 * j + 1] if j <= i else 0 for j in range(1, k + 1)]
        for i in range(1, k + 1)
    ]


def exact_matmul(a, b):
    """Product of two list-of-lists matrices in exact arithmetic."""
    inner = len(b)
    return [
        [sum((Fraction(row[t]) * b[t][j] for t in range(inner)), Fraction(0)) for j in range(len(b[0]))]
        for row in a
    ]


def cheby_psi_sums(k: int) -> tuple[int, int]:
    """The two semicircle cancellation sums for P_{2k}; both vanish for k >= 2.

    Returns (sum_r P_{2k}[2r] psi_{2r}, sum_r P_{2k}[2r] r psi_{2r}).
    """
    poly = chebyshev_poly(2 * k)
    s0 = sum(poly[2 * r] * catalan_psi(2 * r) for r in range(k + 1))
    s1 = sum(poly[2 * r] * r * catalan_psi(2 * r) for r in range(1, k + 1))
    return s0, s1


def even_trace_constant(k: int) -> tuple[int, int]:
    """Null mean of Tr P_{2k} under the plug-in remainder means, as (const, coef of W).

    Computes sum_j P_{2k}[2j] (alpha1(j) + alpha2(j) W - binom(j+1, 2) psi_{2j}),
    with the j = 1 term carrying only -psi_2, and returns the affine form in the
    normalized fourth moment W.
    """
    if k < 1:
        raise ValueError("k must be positive")
    poly = chebyshev_poly(2 * k)
    const = 0
    wcoef = 0
    for j in range(1, k + 1):
        c = poly[2 * j]
        const -= c * comb(j + 1, 2) * catalan_psi(2 * j)
        if j >= 2:
            const += c * alpha1(j)
            wcoef += c * alpha2(j)
    return const, wcoef


@dataclass(frozen=True)
class CoeffTables:
    """Snapshot of all coefficient tables up to ``max_degree``."""

    max_degree: int
    psi: tuple[int, ...]
    f: tuple[tuple[int, ...], ...]  # f[m][r], index 0 unused
    cheb: tuple[ChebyshevPoly, ...]
    alpha1: dict
    alpha2: dict


@lru_cache(maxsize=16)
def build_tables(max_degree: int) -> CoeffTables:
    if max_degree < 1:
        raise ValueError("max_degree must be positive")
    psi = tuple(catalan_psi(k) for k in range(max_degree + 1))
    f = tuple(
        tuple(fk_coefficient(m, r) if m >= 1 and r >= 1 else 0 for r in range(max_degree + 1))
        for m in range(max_degree + 1)
    )
    cheb = tuple(chebyshev_poly(m) for m in range(max_degree + 1))
    ks = range(2, max_degree // 2 + 1)
    return CoeffTables(
        max_degree=max_degree,
        psi=psi,
        f=f,
        cheb=cheb,
        alpha1={k: alpha1(k) for k in ks},
        alpha2={k: alpha2(k) for k in ks},
    )
