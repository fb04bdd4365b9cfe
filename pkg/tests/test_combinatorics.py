import itertools
import math
from fractions import Fraction

import pytest
import sympy

from volterra_iso import combinatorics as comb
from volterra_iso.errors import BudgetExceeded


def brute_eulerian(n, m):
    return sum(1 for p in itertools.permutations(range(n)) if comb.ascents(p) == m)


def brute_psi(n):
    return sum((-1) ** comb.ascents(p) for p in itertools.permutations(range(n)))


def sympy_coeffs(expr, order):
    z = sympy.Symbol("z")
    poly = sympy.series(expr(z), z, 0, order + 1).removeO()
    coeffs = (sympy.Rational(poly.coeff(z, n)) for n in range(order + 1))
    return [Fraction(int(c.p), int(c.q)) for c in coeffs]


class TestSeries:
    def test_arithmetic(self):
        a = comb.RationalSeries((1, 1, 0, 0))
        b = a * a
        assert b.coeffs == (1, 2, 1, 0)
        assert (a + 1).coeffs == (2, 1, 0, 0)
        assert (a - a).coeffs == (0, 0, 0, 0)
        assert (3 * a).coeffs == (3, 3, 0, 0)
        assert a.scale_argument(2).coeffs == (1, 2, 0, 0)
        assert b.derivative().coeffs == (2, 2, 0)
        assert comb.RationalSeries.zeros(2).order == 2

    def test_truncation_keeps_shorter_order(self):
        a = comb.RationalSeries((1, 1, 1))
        b = comb.RationalSeries((1, 1))
        assert (a * b).order == 1

    def test_egf(self):
        exp_series = comb.RationalSeries(tuple(Fraction(1, math.factorial(n)) for n in range(6)))
        assert exp_series.egf_values() == [1] * 6


class TestEulerian:
    def test_examples(self):
        assert [comb.eulerian(n, 0) for n in range(1, 8)] == [1] * 7
        assert comb.eulerian(3, 1) == 4 == brute_eulerian(3, 1)
        assert comb.eulerian(4, 2) == 11 == brute_eulerian(4, 2)
        assert comb.eulerian(0, 0) == 1
        assert comb.eulerian(4, 4) == 0

    @pytest.mark.parametrize("n", range(0, 8))
    def test_against_brute_force(self, n):
        assert [comb.eulerian(n, m) for m in range(n + 1)] == [brute_eulerian(n, m) for m in range(n + 1)]

    def test_rows(self):
        for n, row in enumerate(comb.eulerian_table(20)):
            assert sum(row) == math.factorial(n)
            if n:
                assert row == row[::-1]


class TestPsi:
    def test_examples(self):
        assert comb.psi(0) == comb.psi(1) == 1
        assert comb.psi(3) == -2
        assert comb.psi(5) == 16
        assert comb.psi(7) == -272

    @pytest.mark.parametrize("n", range(0, 9))
    def test_brute_force(self, n):
        assert comb.psi(n) == brute_psi(n)

    def test_generating_function(self):
        series = (comb.tanh_series(15) + 1).egf_values()
        assert [comb.psi(n) for n in range(16)] == series


class TestBernoulli:
    def test_examples(self):
        assert comb.bernoulli(0) == 1
        assert comb.bernoulli(1) == Fraction(-1, 2)
        assert comb.bernoulli(4) == Fraction(-1, 30)
        assert comb.bernoulli(6) == Fraction(1, 42)
        assert all(comb.bernoulli(n) == 0 for n in range(3, 40, 2))

    def test_against_sympy(self):
        for n in range(2, 41):
            b = sympy.bernoulli(n)
            assert comb.bernoulli(n) == Fraction(int(b.p), int(b.q))


class TestTanh:
    def test_examples(self):
        t = comb.tanh_series(7)
        assert t[1] == 1
        assert t[3] == Fraction(-1, 3)
        assert t[5] == Fraction(2, 15)
        assert all(t[n] == 0 for n in range(0, 8, 2))

    def test_routes_agree(self):
        assert comb.tanh_series_bernoulli(25) == comb.tanh_series_ode(25)

    def test_against_sympy(self):
        assert list(comb.tanh_series(15).coeffs) == sympy_coeffs(sympy.tanh, 15)

    def test_order_must_be_positive(self):
        with pytest.raises(ValueError):
            comb.tanh_series(0)


EXPECTED_CHI = [0, 0, -8, 0, 256, 0, -17408]


class TestChi:
    def test_closed_form(self):
        assert [comb.chi_closed_form(l) for l in range(7)] == EXPECTED_CHI
        assert all(comb.chi_closed_form(l) == 0 for l in range(1, 51, 2))

    def test_convolution(self):
        assert comb.chi_convolution(1) == 0
        assert comb.chi_convolution(2) == -4 * 2 * comb.psi(1) ** 2 == -8
        assert comb.chi_convolution(3) == 0
        assert [comb.chi_convolution(l) for l in range(7)] == EXPECTED_CHI

    def test_generating_function(self):
        assert comb.chi_generating_function(6) == EXPECTED_CHI
        neg_tanh_sq = sympy_coeffs(lambda z: -sympy.tanh(2 * z) ** 2, 12)
        expected = [int(c * math.factorial(n)) for n, c in enumerate(neg_tanh_sq)]
        assert comb.chi_generating_function(12) == expected

    def test_enumeration(self):
        assert comb.chi_enumeration(1) == 0
        assert comb.chi_enumeration(2) == -8
        assert [comb.chi_enumeration(l) for l in range(7)] == EXPECTED_CHI
        assert comb.chi_enumeration(4, exhaustive=True) == 256

    def test_point_morse_sum(self):
        # M_1 is a point; the convention chi(M_1) = 0 overrides the raw count
        assert comb.morse_sum_by_gap(0) == {0: 1}
        assert comb.chi_enumeration(0) == 0

    def test_enumeration_budget(self):
        with pytest.raises(BudgetExceeded):
            comb.chi_enumeration(9)
        with pytest.raises(BudgetExceeded):
            comb.chi_enumeration(3, budget=2)

    @pytest.mark.parametrize("l", range(1, 7))
    def test_gap_ends_cancel(self, l):
        parts = comb.morse_sum_by_gap(l, exhaustive=l <= 4)
        assert parts[0] + parts[l] == 0
        assert sum(parts[j] for j in range(1, l)) == EXPECTED_CHI[l]

    def test_routes_agree_to_50(self):
        rows = comb.chi_table(50, ("closed", "convolution", "genfun"))
        assert all(r.agree for r in rows)

    def test_table_skips_enumeration(self):
        rows = comb.chi_table(10)
        assert rows[9].values["enumeration"] is None
        assert rows[8].values["enumeration"] == comb.chi_closed_form(8)
        assert all(r.agree for r in rows)

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            comb.chi_table(2, ("closed", "magic"))
