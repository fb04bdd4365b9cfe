"""Exact Eulerian, Bernoulli and tanh-series arithmetic for chi(M_{2l+1}).

Four routes to the Euler characteristic are provided: the Bernoulli closed
form, the convolution of alternating Eulerian sums, the coefficients of
``-tanh^2(2z)`` as an exponential generating function, and the Morse sum
over critical points. Nothing in this module touches floating point.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial
from typing import Iterable, Sequence

from .errors import BudgetExceeded, NonIntegerResult

ENUMERATION_BUDGET = 8


@dataclass(frozen=True)
class RationalSeries:
    """Power series truncated after ``z^order``; ``coeffs[n]`` multiplies ``z^n``."""

    coeffs: tuple[Fraction, ...]

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(Fraction(x) for x in self.coeffs))

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    @classmethod
    def zeros(cls, order: int) -> "RationalSeries":
        return cls((Fraction(0),) * (order + 1))

    def __getitem__(self, n: int) -> Fraction:
        return self.coeffs[n] if 0 <= n <= self.order else Fraction(0)

    def __add__(self, other: "RationalSeries | int | Fraction") -> "RationalSeries":
        if not isinstance(other, RationalSeries):
            return RationalSeries((self[0] + other,) + self.coeffs[1:])
        n = min(self.order, other.order)
        return RationalSeries(tuple(self[i] + other[i] for i in range(n + 1)))

    __radd__ = __add__

    def __neg__(self) -> "RationalSeries":
        return RationalSeries(tuple(-a for a in self.coeffs))

    def __sub__(self, other: "RationalSeries | int | Fraction") -> "RationalSeries":
        return self + (-other)

    def __mul__(self, other: "RationalSeries | int | Fraction") -> "RationalSeries":
        if not isinstance(other, RationalSeries):
            return RationalSeries(tuple(a * other for a in self.coeffs))
        n = min(self.order, other.order)
        out = []
        for d in range(n + 1):
            out.append(sum((self[i] * other[d - i] for i in range(d + 1)), Fraction(0)))
        return RationalSeries(tuple(out))

    __rmul__ = __mul__

    def scale_argument(self, a: int | Fraction) -> "RationalSeries":
        """The series of ``g(a z)``."""
        return RationalSeries(tuple(c * Fraction(a) ** n for n, c in enumerate(self.coeffs)))

    def derivative(self) -> "RationalSeries":
        return RationalSeries(tuple(n * self.coeffs[n] for n in range(1, self.order + 1)))

    def egf_values(self) -> list[Fraction]:
        """``n! [z^n]``, i.e. the sequence this series generates exponentially."""
        return [factorial(n) * c for n, c in enumerate(self.coeffs)]


@lru_cache(maxsize=None)
def _eulerian_row(n: int) -> tuple[int, ...]:
    if n == 0:
        return (1,)
    prev = _eulerian_row(n - 1)
    row = []
    for m in range(n):
        a = (m + 1) * prev[m] if m < len(prev) else 0
        b = (n - m) * prev[m - 1] if 1 <= m <= len(prev) else 0
        row.append(a + b)
    return tuple(row)


def eulerian(n: int, m: int) -> int:
    """Number of permutations of n elements with exactly m ascents."""
    if n < 0 or m < 0:
        raise ValueError("n and m must be >= 0")
    row = _eulerian_row(n)
    return row[m] if m < len(row) else 0


def eulerian_table(n_max: int) -> list[tuple[int, ...]]:
    return [_eulerian_row(n) for n in range(n_max + 1)]


def ascents(perm: Sequence[int]) -> int:
    return sum(1 for a, b in zip(perm, perm[1:]) if a < b)


def psi(n: int) -> int:
    """Alternating Eulerian sum ``sum_m (-1)^m <n, m>``."""
    return sum((-1) ** m * e for m, e in enumerate(_eulerian_row(n)))


@lru_cache(maxsize=None)
def _bernoulli_upto(n: int) -> tuple[Fraction, ...]:
    b = [Fraction(1)]
    for m in range(1, n + 1):
        s = sum((comb(m + 1, i) * b[i] for i in range(m)), Fraction(0))
        b.append(-s / (m + 1))
    return tuple(b)


def bernoulli(n: int) -> Fraction:
    """``B_n`` from ``sum_{i<=n} C(n+1, i) B_i = 0``; ``B_1 = -1/2``."""
    if n < 0:
        raise ValueError("n must be >= 0")
    return _bernoulli_upto(n)[n]


def tanh_series_bernoulli(order: int) -> RationalSeries:
    """tanh z from ``[z^{2n-1}] = 2^{2n} (2^{2n} - 1) B_{2n} / (2n)!``."""
    coeffs = [Fraction(0)] * (order + 1)
    for odd in range(1, order + 1, 2):
        two_n = odd + 1
        coeffs[odd] = Fraction(2**two_n * (2**two_n - 1)) * bernoulli(two_n) / factorial(two_n)
    return RationalSeries(tuple(coeffs))


def tanh_series_ode(order: int) -> RationalSeries:
    """tanh z solving ``T' = 1 - T^2``, ``T(0) = 0`` one coefficient at a time."""
    t = [Fraction(0)] * (order + 1)
    for n in range(order):
        square = sum((t[i] * t[n - i] for i in range(n + 1)), Fraction(0))
        t[n + 1] = ((1 if n == 0 else 0) - square) / (n + 1)
    return RationalSeries(tuple(t))


def tanh_series(order: int) -> RationalSeries:
    """tanh z to ``z^order``; both constructions are computed and must agree."""
    if order < 1:
        raise ValueError("order must be >= 1")
    from_bernoulli = tanh_series_bernoulli(order)
    if from_bernoulli != tanh_series_ode(order):
        raise ArithmeticError("tanh series constructions disagree")
    return from_bernoulli


def _as_int(value: Fraction, what: str) -> int:
    if value.denominator != 1:
        raise NonIntegerResult(f"{what} = {value} is not an integer")
    return value.numerator


def chi_closed_form(l: int) -> int:
    """``2^{2l+2} (2^{l+2} - 1) B_{l+2} / (l+2)``, with chi(M_1) taken to be 0."""
    if l < 0:
        raise ValueError("l must be >= 0")
    if l == 0:
        return 0
    value = Fraction(2 ** (2 * l + 2) * (2 ** (l + 2) - 1)) * bernoulli(l + 2) / (l + 2)
    return _as_int(value, f"closed form at l={l}")


def chi_convolution(l: int) -> int:
    """``-2^l sum_{j=1}^{l-1} C(l, j) psi(j) psi(l-j)``."""
    if l < 0:
        raise ValueError("l must be >= 0")
    return -(2**l) * sum(comb(l, j) * psi(j) * psi(l - j) for j in range(1, l))


def chi_generating_function(l_max: int) -> list[int]:
    """``l! [z^l] (-tanh^2(2z))`` for l = 0..l_max."""
    if l_max < 0:
        raise ValueError("l_max must be >= 0")
    t2z = tanh_series(max(l_max, 1)).scale_argument(2)
    series = -(t2z * t2z)
    return [_as_int(v, f"series coefficient {n}") for n, v in enumerate(series.egf_values()[: l_max + 1])]


def morse_sum_by_gap(l: int, exhaustive: bool = False) -> dict[int, int]:
    """Signed count ``sum (-1)^index`` of critical points, split by the gap label j.

    The index does not depend on the sign bits, so by default each ``(j, pi)``
    is evaluated once and weighted by ``2^l``. ``exhaustive=True`` walks every
    triple instead.
    """
    from .morse import CriticalTriple, enumerate_critical_points, index_combinatorial

    totals = {j: 0 for j in range(l + 1)}
    if exhaustive:
        for triple in enumerate_critical_points(l):
            totals[triple.j] += (-1) ** index_combinatorial(triple, l)
        return totals
    signs = (0,) * l
    for j in range(l + 1):
        for pi in itertools.permutations(range(1, l + 1)):
            totals[j] += (-1) ** index_combinatorial(CriticalTriple(j, signs, pi), l)
        totals[j] *= 2**l
    return totals


def chi_enumeration(l: int, budget: int = ENUMERATION_BUDGET, exhaustive: bool = False) -> int:
    """Euler characteristic as the Morse sum over all critical points.

    For l = 0 the single critical point of M_1 gives 1; the convention shared
    by the other routes sets chi(M_1) = 0, so 0 is returned there.
    """
    if l < 0:
        raise ValueError("l must be >= 0")
    if l > budget:
        raise BudgetExceeded(f"l={l} exceeds the enumeration budget {budget}")
    if l == 0:
        return 0
    return sum(morse_sum_by_gap(l, exhaustive).values())


CHI_METHODS = ("closed", "convolution", "genfun", "enumeration")


@dataclass(frozen=True)
class ChiRow:
    l: int
    values: dict[str, int | None]

    @property
    def agree(self) -> bool:
        found = {v for v in self.values.values() if v is not None}
        return len(found) <= 1


def chi_table(l_max: int, methods: Iterable[str] = CHI_METHODS, budget: int = ENUMERATION_BUDGET) -> list[ChiRow]:
    """Every requested route for l = 0..l_max; ``None`` marks a skipped cell."""
    methods = tuple(methods)
    unknown = set(methods) - set(CHI_METHODS)
    if unknown:
        raise ValueError(f"unknown methods: {sorted(unknown)}")
    genfun = chi_generating_function(l_max) if "genfun" in methods else None
    rows = []
    for l in range(l_max + 1):
        values: dict[str, int | None] = {}
        for method in methods:
            if method == "closed":
                values[method] = chi_closed_form(l)
            elif method == "convolution":
                values[method] = chi_convolution(l)
            elif method == "genfun":
                assert genfun is not None
                values[method] = genfun[l]
            else:
                try:
                    values[method] = chi_enumeration(l, budget)
                except BudgetExceeded:
                    values[method] = None
        rows.append(ChiRow(l, values))
    return rows
