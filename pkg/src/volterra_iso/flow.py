"""The Volterra lattice on zero-diagonal Jacobi matrices.

The field ``c_i' = c_i (c_{i+1}^2 - c_{i-1}^2) / 2`` is the Lax equation
``L' = [L, A(L)]`` for the skew matrix with ``A[m, m+2] = -c_m c_{m+1} / 2``.
Along the flow ``f = tr K L^2`` decreases at the rate
``-sum_i c_i^2 c_{i+1}^2 / 2``.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import IO, TYPE_CHECKING, Iterator, NamedTuple

import numpy as np
from numpy.typing import ArrayLike

from .errors import NotConverged, StepUnderflow
from .jacobi import (
    FLOW_TOL,
    SpectrumSpec,
    as_offdiagonal,
    dense_matrix,
    objective_f,
    power_trace_invariants,
    project_to_isospectral,
)

if TYPE_CHECKING:
    from .morse import CriticalTriple

# tight enough that invariant drift stays below FLOW_TOL up to k = 13, t = 50
DEFAULT_REL_TOL = 1e-11
DEFAULT_ABS_TOL = 1e-11


def volterra_field(c: ArrayLike) -> np.ndarray:
    """Vector field of the Volterra lattice; works on stacks of shape (..., k-1)."""
    c = np.asarray(c, dtype=float)
    sq = np.zeros(c.shape[:-1] + (c.shape[-1] + 2,))
    sq[..., 1:-1] = c * c
    return 0.5 * c * (sq[..., 2:] - sq[..., :-2])


class LaxOperator(NamedTuple):
    """Skew matrix with ``A[m, m+2] = -a_m`` and ``A[m+2, m] = a_m``."""

    k: int
    a: np.ndarray

    def matrix(self) -> np.ndarray:
        return np.diag(self.a, -2) - np.diag(self.a, 2) if self.a.size else np.zeros((self.k, self.k))


def lax_operator(c: ArrayLike) -> LaxOperator:
    c = as_offdiagonal(c)
    return LaxOperator(c.size + 1, 0.5 * c[:-1] * c[1:])


def commutator_residual(c: ArrayLike) -> float:
    """Max-norm of ``[L, A(L)]`` minus the matrix form of the field."""
    c = as_offdiagonal(c)
    big_l = dense_matrix(c)
    a = lax_operator(c).matrix()
    lhs = big_l @ a - a @ big_l
    return float(np.max(np.abs(lhs - dense_matrix(volterra_field(c))), initial=0.0))


def f_dissipation_rate(c: ArrayLike) -> float:
    """``df/dt`` along the flow; never positive."""
    c2 = as_offdiagonal(c) ** 2
    return float(-0.5 * np.dot(c2[:-1], c2[1:]))


def invariant_drift(c: ArrayLike, reference: np.ndarray) -> float:
    traces = power_trace_invariants(c, reference.size)
    denom = np.where(reference != 0, np.abs(reference), 1.0)
    return float(np.max(np.abs(traces - reference) / denom, initial=0.0))


# Dormand-Prince 5(4) tableau
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array(_A[6] + [0.0])
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])


def _dopri5(
    y0: np.ndarray, t0: float, t_stop: float, rel_tol: float, abs_tol: float
) -> Iterator[tuple[float, np.ndarray]]:
    """Accepted steps ``(t, y)`` of an adaptive Dormand-Prince integration."""
    t, y = t0, y0.copy()
    f0 = volterra_field(y)
    scale = abs_tol + rel_tol * np.abs(y)
    d0 = np.sqrt(np.mean((y / scale) ** 2)) if y.size else 0.0
    d1 = np.sqrt(np.mean((f0 / scale) ** 2)) if y.size else 0.0
    h = 0.01 * d0 / d1 if d0 > 1e-5 and d1 > 1e-5 else 1e-6
    h = min(h, t_stop - t)
    k = np.empty((7, y.size))
    k[0] = f0
    failed = False
    while t < t_stop:
        if h < 10 * np.finfo(float).eps * max(1.0, abs(t)):
            raise StepUnderflow(f"step size {h:.3e} underflowed at t={t:.6g}")
        last = t + h >= t_stop
        if last:
            h = t_stop - t
        for s in range(1, 7):
            k[s] = volterra_field(y + h * np.dot(_A[s], k[:s]))
        y_new = y + h * np.dot(_B[:6], k[:6])
        err = h * np.dot(_E, k)
        scale = abs_tol + rel_tol * np.maximum(np.abs(y), np.abs(y_new))
        err_norm = float(np.max(np.abs(err) / scale, initial=0.0))
        if err_norm <= 1.0:
            t = t_stop if last else t + h
            y = y_new
            k[0] = k[6]
            factor = 5.0 if err_norm == 0 else min(5.0, 0.9 * err_norm**-0.2)
            if failed:
                factor = min(factor, 1.0)
            h *= factor
            failed = False
            yield t, y
        else:
            h *= max(0.2, 0.9 * err_norm**-0.2)
            failed = True


@dataclass
class FlowTrajectory:
    times: np.ndarray
    states: np.ndarray
    f_values: np.ndarray
    dissipation: np.ndarray
    drift: np.ndarray

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    @property
    def max_drift(self) -> float:
        return float(self.drift.max(initial=0.0))

    def max_f_increase(self) -> float:
        if self.f_values.size < 2:
            return 0.0
        return float(np.max(np.diff(self.f_values)))

    def field_names(self) -> list[str]:
        n = self.states.shape[1]
        return ["t", *[f"c_{i}" for i in range(1, n + 1)], "f", "dissipation", "drift"]

    def records(self) -> Iterator[dict[str, float]]:
        names = self.field_names()
        for row in zip(self.times, self.states, self.f_values, self.dissipation, self.drift):
            values = [row[0], *row[1], row[2], row[3], row[4]]
            yield dict(zip(names, (float(v) for v in values)))

    def write_csv(self, fh: IO[str]) -> None:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(self.field_names())
        for rec in self.records():
            writer.writerow([format(v, ".17g") for v in rec.values()])

    def write_jsonl(self, fh: IO[str]) -> None:
        for rec in self.records():
            fh.write(json.dumps(rec) + "\n")

    def to_csv(self) -> str:
        buf = io.StringIO()
        self.write_csv(buf)
        return buf.getvalue()


def _diagnostics(c: np.ndarray, reference: np.ndarray) -> tuple[float, float, float]:
    return objective_f(c), f_dissipation_rate(c), invariant_drift(c, reference)


def integrate(
    c0: ArrayLike,
    t_end: float,
    rel_tol: float = DEFAULT_REL_TOL,
    abs_tol: float = DEFAULT_ABS_TOL,
    reproject_every: int | None = None,
) -> FlowTrajectory:
    """Integrate the flow from ``c0`` up to ``t_end``, sampling accepted steps.

    With ``reproject_every=N`` the state is pulled back onto the initial
    isospectral set after every N accepted steps.
    """
    if t_end <= 0 or rel_tol <= 0 or abs_tol <= 0:
        raise ValueError("t_end and tolerances must be positive")
    c0 = as_offdiagonal(c0)
    reference = power_trace_invariants(c0, (c0.size + 1) // 2)
    times, states, diags = [0.0], [c0], [_diagnostics(c0, reference)]
    t_start, y = 0.0, c0
    done = False
    while not done:
        done = True
        for n, (t, y) in enumerate(_dopri5(y, t_start, t_end, rel_tol, abs_tol), start=1):
            if reproject_every and n % reproject_every == 0 and t < t_end:
                y = project_to_isospectral(y, reference, tol=1e-13)
                t_start, done = t, False
            times.append(t)
            states.append(y)
            diags.append(_diagnostics(y, reference))
            if not done:
                break
    f_vals, diss, drift = (np.array(col) for col in zip(*diags))
    return FlowTrajectory(np.array(times), np.array(states), f_vals, diss, drift)


@dataclass(frozen=True)
class EquilibriumResult:
    triple: "CriticalTriple"
    distance: float
    state: np.ndarray
    time: float
    f_start: float
    f_limit: float


def flow_to_equilibrium(
    c0: ArrayLike,
    spec: SpectrumSpec,
    field_tol: float | None = None,
    t_max: float = 1000.0,
    rel_tol: float = DEFAULT_REL_TOL,
    abs_tol: float = DEFAULT_ABS_TOL,
) -> EquilibriumResult:
    """Follow the flow until the field is below ``field_tol``, then name the limit.

    ``field_tol`` defaults to ``1e-9 * lambda_1^2`` in the max norm.
    """
    from .morse import match_critical_triple

    c0 = as_offdiagonal(c0)
    if c0.size != 2 * spec.l:
        raise ValueError(f"expected a point of M_{2 * spec.l + 1}, got k={c0.size + 1}")
    if field_tol is None:
        field_tol = FLOW_TOL * (spec.lambdas[0] ** 2 if spec.l else 1.0)
    t, y = 0.0, c0
    if np.max(np.abs(volterra_field(y)), initial=0.0) > field_tol:
        for t, y in _dopri5(c0, 0.0, t_max, rel_tol, abs_tol):
            if np.max(np.abs(volterra_field(y)), initial=0.0) <= field_tol:
                break
        else:
            raise NotConverged(
                f"field norm {np.max(np.abs(volterra_field(y))):.3e} > {field_tol:.3e} at t_max={t_max}"
            )
    triple, dist = match_critical_triple(y, spec)
    return EquilibriumResult(triple, dist, y, t, objective_f(c0), objective_f(y))


__all__ = [
    "EquilibriumResult",
    "FlowTrajectory",
    "LaxOperator",
    "commutator_residual",
    "f_dissipation_rate",
    "flow_to_equilibrium",
    "integrate",
    "invariant_drift",
    "lax_operator",
    "volterra_field",
]
