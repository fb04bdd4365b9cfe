"""Invariant families run by the ``verify`` command."""

from __future__ import annotations

import itertools
import math
import time
from fractions import Fraction
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import combinatorics as comb
from .errors import VolterraError
from .flow import (
    commutator_residual,
    f_dissipation_rate,
    flow_to_equilibrium,
    integrate,
    volterra_field,
)
from .jacobi import (
    EIGEN_TOL,
    FLOW_TOL,
    SpectrumSpec,
    eigenvalues_batch,
    power_trace_invariants,
    sample_manifold_point,
    spectrum_symmetry_report,
)
from .morse import (
    count_critical_points,
    critical_matrices,
    enumerate_critical_points,
    index_combinatorial,
    index_jacobian,
    index_numeric,
    tangent_gradient_norm,
)

LEVELS = {
    "quick": {"l_max": 3, "numeric_l_max": 3, "chi_l_max": 20, "brute_n": 6, "lax_states": 100, "flow_seeds": 5, "flow_ks": (5,)},
    "full": {"l_max": 6, "numeric_l_max": 4, "chi_l_max": 50, "brute_n": 8, "lax_states": 1000, "flow_seeds": 100, "flow_ks": (5, 7)},
}


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def as_dict(self) -> dict:
        return {"check": self.name, "passed": self.passed, "detail": self.detail}


def random_offdiagonal(rng: np.random.Generator, k: int) -> np.ndarray:
    return rng.uniform(-2.0, 2.0, size=k - 1)


def check_chi_routes(l_max: int, wide_l_max: int) -> tuple[bool, str]:
    rows = comb.chi_table(l_max, budget=max(l_max, comb.ENUMERATION_BUDGET))
    exhaustive = all(comb.chi_enumeration(l, exhaustive=True) == row.values["closed"] for l, row in enumerate(rows))
    wide = comb.chi_table(wide_l_max, ("closed", "convolution", "genfun"))
    ok = exhaustive and all(r.agree for r in rows) and all(r.agree for r in wide)
    values = [r.values["closed"] for r in rows]
    return ok, f"chi(l=0..{l_max}) = {values}; three routes agree to l={wide_l_max}"


def check_combinatorial_identities(l_max: int, brute_n: int) -> tuple[bool, str]:
    failures = []
    one_plus_tanh = comb.tanh_series(15) + 1
    series_psi = one_plus_tanh.egf_values()
    if any(series_psi[n] != comb.psi(n) for n in range(16)):
        failures.append("psi vs 1 + tanh z")
    for n in range(brute_n + 1):
        brute = sum((-1) ** comb.ascents(p) for p in itertools.permutations(range(n)))
        if brute != comb.psi(n):
            failures.append(f"psi brute force n={n}")
    if comb.tanh_series_bernoulli(25) != comb.tanh_series_ode(25):
        failures.append("tanh routes")
    for n, row in enumerate(comb.eulerian_table(20)):
        if sum(row) != math.factorial(n) or (n and list(row) != list(row[::-1])):
            failures.append(f"Eulerian row {n}")
    for l in range(1, l_max + 1):
        parts = comb.morse_sum_by_gap(l)
        if parts[0] + parts[l] != 0:
            failures.append(f"gap cancellation l={l}")
    return not failures, "; ".join(failures) or "psi, tanh, Eulerian and gap-cancellation identities hold"


def check_census(l_max: int) -> tuple[bool, str]:
    worst_field = worst_eig = 0.0
    for l in range(l_max + 1):
        spec = SpectrumSpec.default(l)
        triples = list(enumerate_critical_points(l))
        if len(triples) != count_critical_points(l) or len(set(triples)) != len(triples):
            return False, f"wrong census at l={l}"
        cs = critical_matrices(spec, triples)
        lam1 = spec.lambdas[0] if l else 1.0
        worst_field = max(worst_field, float(np.max(np.abs(volterra_field(cs)), initial=0.0)) / lam1**3)
        expected = spec.full_spectrum(2 * l + 1)
        for chunk in range(0, len(cs), 20000):
            eigs = eigenvalues_batch(cs[chunk : chunk + 20000], EIGEN_TOL)
            worst_eig = max(worst_eig, float(np.max(np.abs(eigs - expected))))
    ok = worst_field <= 1e-12 and worst_eig <= 1e-10
    return ok, f"l<= {l_max}: max field/lambda_1^3 = {worst_field:.2e}, max eigenvalue error = {worst_eig:.2e}"


def check_index_agreement(l_max: int, numeric_l_max: int, spec: SpectrumSpec | None = None) -> tuple[bool, str]:
    disagreements = 0
    checked = 0
    specs = [SpectrumSpec.default(l) for l in range(l_max + 1)]
    if spec is not None:
        specs.append(spec)
    for sp in specs:
        l = sp.l
        doubled = SpectrumSpec(tuple(2.0 * (l - i) for i in range(l)))
        for t in enumerate_critical_points(l):
            ic = index_combinatorial(t, l)
            ij = index_jacobian(sp, t)
            checked += 1
            if ic != ij or index_jacobian(doubled, t) != ij:
                disagreements += 1
            if l and index_jacobian(sp, t.flip(0)) != ij:
                disagreements += 1
            if l <= numeric_l_max and index_numeric(sp, t) != ij:
                disagreements += 1
    return disagreements == 0, f"{checked} triples, {disagreements} disagreements"


def check_tangent_gradient(l_max: int) -> tuple[bool, str]:
    worst = 0.0
    for l in range(1, l_max + 1):
        spec = SpectrumSpec.default(l)
        triples = list(enumerate_critical_points(l))
        # every triple for small l, an even stride through the list beyond
        step = max(1, len(triples) // 2000)
        for t, c in zip(triples[::step], critical_matrices(spec, triples[::step])):
            worst = max(worst, tangent_gradient_norm(c, l))
    return worst <= 1e-10, f"max projected gradient at critical points = {worst:.2e}"


def check_lax_identity(n_states: int, seed: int = 0) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for k in (3, 5, 7, 9, 13):
        for _ in range(n_states):
            c = random_offdiagonal(rng, k)
            worst = max(worst, commutator_residual(c) / max(1.0, float(np.linalg.norm(c)) ** 3))
    return worst <= 1e-10, f"max scaled residual = {worst:.2e}"


def check_random_spectra(n_states: int, seed: int = 1) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    worst_sym = worst_trace = 0.0
    for i in range(n_states):
        k = int(rng.integers(2, 16))
        c = random_offdiagonal(rng, k)
        eigs = eigenvalues_batch(c[None, :])[0]
        rep = spectrum_symmetry_report(eigs, 1e-9)
        worst_sym = max(worst_sym, rep.max_pairing_error)
        l = k // 2
        traces = power_trace_invariants(c, l)
        oracle = np.array([np.sum(eigs ** (2 * m)) for m in range(1, l + 1)])
        worst_trace = max(worst_trace, float(np.max(np.abs(traces - oracle) / traces, initial=0.0)))
    ok = worst_sym <= 1e-9 and worst_trace <= 1e-8
    return ok, f"max pairing error = {worst_sym:.2e}, max trace mismatch = {worst_trace:.2e}"


def check_flows(ks: tuple[int, ...], n_seeds: int) -> tuple[bool, str]:
    worst_drift = worst_increase = worst_fd = 0.0
    sign_changes = non_sinks = 0
    for k in ks:
        spec = SpectrumSpec.default(k // 2)
        for seed in range(1, n_seeds + 1):
            c0 = sample_manifold_point(spec, k, seed)
            traj = integrate(c0, 50.0, 1e-10, 1e-10)
            worst_drift = max(worst_drift, traj.max_drift)
            worst_increase = max(worst_increase, traj.max_f_increase())
            start = np.abs(c0) > 1e-3
            if np.any(np.sign(traj.states[:, start]) != np.sign(c0[start])):
                sign_changes += 1
            worst_fd = max(worst_fd, max(dissipation_fd_error(c) for c in traj.states[::10]))
            if k % 2:
                result = flow_to_equilibrium(c0, spec)
                if index_combinatorial(result.triple, spec.l) != 0 or not result.f_limit < result.f_start:
                    non_sinks += 1
    ok = (
        worst_drift <= FLOW_TOL
        and worst_increase <= FLOW_TOL
        and worst_fd <= 1e-6
        and sign_changes == 0
        and non_sinks == 0
    )
    return ok, (
        f"drift {worst_drift:.2e}, f increase {worst_increase:.2e}, dissipation fd error {worst_fd:.2e}, "
        f"sign changes {sign_changes}, non-sink limits {non_sinks}"
    )


def dissipation_fd_error(c: np.ndarray) -> float:
    """Relative gap between the closed-form rate and a central difference of f.

    The difference quotient is taken in exact rational arithmetic on the
    float state; f is quadratic, so it is exact for any step.
    """
    cq = [Fraction(float(x)) for x in c]
    padded = [Fraction(0), *cq, Fraction(0)]
    v = [padded[i] * (padded[i + 1] ** 2 - padded[i - 1] ** 2) / 2 for i in range(1, len(cq) + 1)]

    def f_exact(x: list[Fraction]) -> Fraction:
        return sum((Fraction(2 * i + 3, 4) * xi * xi for i, xi in enumerate(x)), Fraction(0))

    h = Fraction(1, 1000)
    fd = (f_exact([a + h * b for a, b in zip(cq, v)]) - f_exact([a - h * b for a, b in zip(cq, v)])) / (2 * h)
    rate = f_dissipation_rate(c)
    if fd == 0:
        return 0.0 if rate == 0 else math.inf
    return abs(float((Fraction(rate) - fd) / fd))


def run_checks(level: str, spectrum: str | None = None) -> list[CheckResult]:
    cfg = LEVELS[level]
    results: list[CheckResult] = []
    custom: SpectrumSpec | None = None
    if spectrum is not None:
        start = time.perf_counter()
        try:
            custom = SpectrumSpec.from_source(spectrum)
            results.append(CheckResult("spectrum", True, f"accepted {custom.lambdas}", time.perf_counter() - start))
        except (VolterraError, OSError) as exc:
            results.append(CheckResult("spectrum", False, f"rejected: {exc}", time.perf_counter() - start))

    checks: list[tuple[str, Callable[[], tuple[bool, str]]]] = [
        ("chi_routes", lambda: check_chi_routes(cfg["l_max"], cfg["chi_l_max"])),
        ("combinatorial_identities", lambda: check_combinatorial_identities(cfg["l_max"], cfg["brute_n"])),
        ("critical_census", lambda: check_census(cfg["l_max"])),
        ("index_agreement", lambda: check_index_agreement(cfg["l_max"], cfg["numeric_l_max"], custom)),
        ("constrained_criticality", lambda: check_tangent_gradient(cfg["l_max"])),
        ("lax_identity", lambda: check_lax_identity(cfg["lax_states"])),
        ("spectrum_symmetry", lambda: check_random_spectra(cfg["lax_states"])),
        ("flow_conservation", lambda: check_flows(cfg["flow_ks"], cfg["flow_seeds"])),
    ]
    for name, fn in checks:
        start = time.perf_counter()
        try:
            ok, detail = fn()
        except VolterraError as exc:
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        results.append(CheckResult(name, ok, detail, time.perf_counter() - start))
    return results

