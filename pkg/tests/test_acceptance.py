"""End-to-end acceptance gate: one test per criterion, each with its own budget.

Every test records a PASS/FAIL line (shown in the terminal summary) before
asserting, so a failing criterion still reports what was measured.
"""

import itertools
import math
import time
from fractions import Fraction

import numpy as np
import sympy

from conftest import ACCEPTANCE_RESULTS
from volterra_iso import combinatorics as comb
from volterra_iso.flow import (
    commutator_residual,
    f_dissipation_rate,
    flow_to_equilibrium,
    integrate,
    volterra_field,
)
from volterra_iso.jacobi import SpectrumSpec, eigenvalues_batch, sample_manifold_point
from volterra_iso.morse import (
    count_critical_points,
    critical_matrices,
    critical_matrix,
    enumerate_critical_points,
    index_combinatorial,
    index_jacobian,
    index_numeric,
)

CHI = (0, 0, -8, 0, 256, 0, -17408)


def record(name, passed, detail):
    ACCEPTANCE_RESULTS[name] = (bool(passed), detail)
    print(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")
    assert passed, detail


def test_ac1_euler_characteristic_table():
    start = time.perf_counter()
    routes = {
        "closed": [comb.chi_closed_form(l) for l in range(7)],
        "convolution": [comb.chi_convolution(l) for l in range(7)],
        "genfun": comb.chi_generating_function(6),
        "enumeration": [comb.chi_enumeration(l, exhaustive=True) for l in range(7)],
    }
    # independent check of the generating function with a computer-algebra series
    z = sympy.symbols("z")
    expansion = sympy.series(-sympy.tanh(2 * z) ** 2, z, 0, 7).removeO()
    routes["sympy"] = [int(expansion.coeff(z, n) * sympy.factorial(n)) for n in range(7)]
    small_ok = all(tuple(v) == CHI for v in routes.values())
    wide = comb.chi_table(50, ("closed", "convolution", "genfun"))
    wide_ok = all(r.agree for r in wide)
    elapsed = time.perf_counter() - start
    record(
        "AC1 chi table",
        small_ok and wide_ok and elapsed < 60,
        f"l=0..6 -> {routes['enumeration']} by all routes={small_ok}; "
        f"three routes agree to l=50: {wide_ok}; {elapsed:.1f}s",
    )


def test_ac2_critical_point_census():
    start = time.perf_counter()
    counts = []
    worst_field = worst_eig = 0.0
    distinct = True
    for l in range(7):
        spec = SpectrumSpec.default(l)
        triples = list(enumerate_critical_points(l))
        counts.append(len(triples))
        distinct &= len(set(triples)) == len(triples) == count_critical_points(l)
        lam1 = spec.lambdas[0] if l else 1.0
        expected = np.array(sorted([0.0] + [x for lam in spec.lambdas for x in (lam, -lam)]))
        for lo in range(0, len(triples), 20000):
            cs = critical_matrices(spec, triples[lo : lo + 20000])
            field = np.linalg.norm(volterra_field(cs), axis=-1) if l else np.zeros(1)
            worst_field = max(worst_field, float(np.max(field)) / lam1**3)
            worst_eig = max(worst_eig, float(np.max(np.abs(eigenvalues_batch(cs, 1e-12) - expected))))
    expected_counts = [(l + 1) * 2**l * math.factorial(l) for l in range(7)]
    elapsed = time.perf_counter() - start
    ok = counts == expected_counts and distinct and worst_field <= 1e-12 and worst_eig <= 1e-10 and elapsed < 300
    record(
        "AC2 critical census",
        ok,
        f"counts {counts}; max |field|/lambda_1^3 {worst_field:.1e}; "
        f"max eigenvalue error {worst_eig:.1e}; {elapsed:.1f}s",
    )


def test_ac3_index_oracles_agree():
    start = time.perf_counter()
    disagreements = checked = numeric_checked = 0
    for l in range(7):
        spec = SpectrumSpec.default(l)
        doubled = SpectrumSpec(tuple(2.0 * (l - i) for i in range(l)))
        by_class: dict[tuple, set] = {}
        for t in enumerate_critical_points(l):
            ic = index_combinatorial(t, l)
            ij = index_jacobian(spec, t)
            checked += 1
            if ic != ij or index_jacobian(doubled, t) != ij:
                disagreements += 1
            if l <= 4:
                numeric_checked += 1
                if index_numeric(spec, t) != ij:
                    disagreements += 1
            by_class.setdefault((t.j, t.pi), set()).add(ij)
        # every sign pattern of a given (j, pi) must share one index
        disagreements += sum(len(v) - 1 for v in by_class.values())
    elapsed = time.perf_counter() - start
    record(
        "AC3 index oracles",
        disagreements == 0 and elapsed < 600,
        f"{checked} triples ({numeric_checked} with numeric index), "
        f"{disagreements} disagreements; {elapsed:.1f}s",
    )


def exact_fd_rate(c):
    """Central difference of f along the field, in rational arithmetic.

    f is quadratic, so the quotient is the exact directional derivative for
    any step; the float state is converted losslessly first.
    """
    x = [Fraction(0)] + [Fraction(float(v)) for v in c] + [Fraction(0)]
    v = [x[i] * (x[i + 1] ** 2 - x[i - 1] ** 2) / 2 for i in range(1, len(x) - 1)]
    x = x[1:-1]

    def f(y):
        return sum(Fraction(2 * i + 1, 4) * yi * yi for i, yi in enumerate(y, start=1))

    h = Fraction(1, 1024)
    return (f([a + h * b for a, b in zip(x, v)]) - f([a - h * b for a, b in zip(x, v)])) / (2 * h)


def test_ac4_flow_conservation_and_dissipation():
    start = time.perf_counter()
    worst_drift = worst_increase = worst_fd = 0.0
    sign_changes = samples = 0
    for k in (5, 7):
        spec = SpectrumSpec.default(k // 2)
        for seed in range(1, 101):
            c0 = sample_manifold_point(spec, k, seed)
            traj = integrate(c0, 50.0, rel_tol=1e-10, abs_tol=1e-10)
            worst_drift = max(worst_drift, traj.max_drift)
            worst_increase = max(worst_increase, float(np.max(np.diff(traj.f_values), initial=0.0)))
            tracked = np.abs(c0) > 1e-3
            sign_changes += int(np.any(np.sign(traj.states[:, tracked]) != np.sign(c0[tracked])))
            for c in traj.states:
                fd = exact_fd_rate(c)
                rate = f_dissipation_rate(c)
                err = 0.0 if fd == rate == 0 else abs(float((Fraction(rate) - fd) / fd))
                worst_fd = max(worst_fd, err)
                samples += 1
    elapsed = time.perf_counter() - start
    ok = worst_drift <= 1e-9 and worst_increase <= 1e-9 and worst_fd <= 1e-6 and sign_changes == 0 and elapsed < 120
    record(
        "AC4 flow conservation",
        ok,
        f"200 runs: max drift {worst_drift:.1e}, max f increase {worst_increase:.1e}, "
        f"dissipation rel error {worst_fd:.1e} over {samples} samples, "
        f"{sign_changes} sign changes; {elapsed:.1f}s",
    )


def test_ac5_lax_identity():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for k in (3, 5, 7, 9, 13):
        for _ in range(1000):
            c = rng.uniform(-2, 2, k - 1) * rng.choice([0.01, 1.0, 10.0])
            worst = max(worst, commutator_residual(c) / max(1.0, float(np.linalg.norm(c)) ** 3))
    record("AC5 Lax identity", worst <= 1e-10, f"5000 states, max residual / max(1,|c|^3) = {worst:.1e}")


def test_ac6_convergence_to_sinks():
    spec = SpectrumSpec.default(2)
    converged = sinks = strict = 0
    limits = set()
    for seed in range(1, 101):
        c0 = sample_manifold_point(spec, 5, seed)
        eq = flow_to_equilibrium(c0, spec)
        converged += 1
        limits.add(eq.triple)
        sinks += index_combinatorial(eq.triple, 2) == 0 and index_jacobian(spec, eq.triple) == 0
        strict += eq.f_limit < eq.f_start
        assert np.max(np.abs(eq.state - critical_matrix(spec, eq.triple))) == eq.distance
    record(
        "AC6 convergence",
        converged == sinks == strict == 100,
        f"{converged}/100 converged, {sinks} index-0 limits, {strict} with f(limit) < f(start), "
        f"{len(limits)} distinct limits",
    )


def test_ac7_combinatorial_identities():
    failures = []
    z = sympy.symbols("z")
    series = sympy.series(1 + sympy.tanh(z), z, 0, 16).removeO()
    for n in range(16):
        if comb.psi(n) != series.coeff(z, n) * sympy.factorial(n):
            failures.append(f"psi({n}) vs series")
    for n in range(9):
        brute = sum(
            (-1) ** sum(p[i] < p[i + 1] for i in range(n - 1)) for p in itertools.permutations(range(n))
        )
        if brute != comb.psi(n):
            failures.append(f"psi({n}) vs brute force")
    if comb.tanh_series_bernoulli(25) != comb.tanh_series_ode(25):
        failures.append("tanh routes")
    for n in range(21):
        if sum(comb.eulerian(n, m) for m in range(n + 1)) != math.factorial(n):
            failures.append(f"Eulerian row {n}")
    for l in range(1, 7):
        parts = comb.morse_sum_by_gap(l, exhaustive=True)
        if parts[0] + parts[l] != 0:
            failures.append(f"gap cancellation l={l}")
    record(
        "AC7 combinatorial identities",
        not failures,
        "; ".join(failures) or "psi (n<=15 series, n<=8 brute force), tanh to order 25, "
        "Eulerian rows n<=20, j=0/j=l cancellation l<=6",
    )
