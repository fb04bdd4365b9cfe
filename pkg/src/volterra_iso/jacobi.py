"""Zero-diagonal Jacobi matrices stored as their off-diagonal vector.

A vector ``c = (c_1, ..., c_{k-1})`` stands for the symmetric k x k matrix
with ``L[i, i+1] = L[i+1, i] = c_i`` and zero diagonal. The boundary values
``c_0 = c_k = 0`` are implicit everywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np
from numpy.typing import ArrayLike

from .errors import (
    BisectionError,
    NoConvergence,
    SingularJacobian,
    SpectrumError,
    SpectrumParseError,
)

EIGEN_TOL = 1e-12
MANIFOLD_TOL = 1e-10
FLOW_TOL = 1e-9


def as_offdiagonal(c: ArrayLike) -> np.ndarray:
    """Validate ``c`` as an off-diagonal vector and return a float copy."""
    arr = np.array(c, dtype=float).reshape(-1)
    if not np.all(np.isfinite(arr)):
        raise ValueError("off-diagonal entries must be finite")
    return arr


def matrix_size(c: np.ndarray) -> int:
    return c.shape[-1] + 1


def dense_matrix(c: ArrayLike) -> np.ndarray:
    c = as_offdiagonal(c)
    return np.diag(c, 1) + np.diag(c, -1)


@dataclass(frozen=True)
class SpectrumSpec:
    """Positive eigenvalue magnitudes ``lambda_1 > ... > lambda_l > 0``.

    The full spectrum of a matrix in M_{2l+1} is ``{0, +-lambda_i}``; for
    M_{2l} the zero is absent.
    """

    lambdas: tuple[float, ...]

    def __post_init__(self):
        lams = tuple(float(x) for x in self.lambdas)
        object.__setattr__(self, "lambdas", lams)
        for i, lam in enumerate(lams):
            if not math.isfinite(lam) or lam <= 0:
                raise SpectrumError(f"lambda_{i + 1} = {lam!r} is not a positive finite number")
            if i and not lam < lams[i - 1]:
                raise SpectrumError(
                    f"spectrum must be strictly decreasing: lambda_{i} = {lams[i - 1]!r}, "
                    f"lambda_{i + 1} = {lam!r}"
                )

    @property
    def l(self) -> int:
        return len(self.lambdas)

    @classmethod
    def default(cls, l: int) -> "SpectrumSpec":
        """The integer spectrum ``(l, l-1, ..., 1)``."""
        return cls(tuple(float(l - i) for i in range(l)))

    @classmethod
    def from_text(cls, text: str) -> "SpectrumSpec":
        """Parse one decimal per line; blank lines and ``#`` comments are skipped."""
        values = []
        for lineno, raw in enumerate(text.splitlines(), start=1):
            body = raw.split("#", 1)[0]
            stripped = body.strip()
            if not stripped:
                continue
            column = body.index(stripped) + 1
            try:
                values.append(float(stripped))
            except ValueError:
                raise SpectrumParseError(f"not a number: {stripped!r}", lineno, column) from None
            try:
                cls(tuple(values))
            except SpectrumError as exc:
                raise SpectrumParseError(str(exc), lineno, column) from None
        return cls(tuple(values))

    @classmethod
    def from_file(cls, path: str | Path) -> "SpectrumSpec":
        return cls.from_text(Path(path).read_text(encoding="utf-8"))

    @classmethod
    def from_list(cls, text: str) -> "SpectrumSpec":
        """Parse a comma separated list such as ``"3,2,1"``."""
        values = []
        offset = 0
        for item in text.split(","):
            column = offset + len(item) - len(item.lstrip()) + 1
            offset += len(item) + 1
            try:
                values.append(float(item))
            except ValueError:
                raise SpectrumParseError(f"not a number: {item.strip()!r}", 1, column) from None
            try:
                cls(tuple(values))
            except SpectrumError as exc:
                raise SpectrumParseError(str(exc), 1, column) from None
        return cls(tuple(values))

    @classmethod
    def from_source(cls, source: str) -> "SpectrumSpec":
        """Read ``source`` as a file path if such a file exists, else as a comma list."""
        path = Path(source)
        if path.is_file():
            return cls.from_file(path)
        return cls.from_list(source)

    def full_spectrum(self, k: int) -> np.ndarray:
        """Sorted spectrum of a k x k matrix on the isospectral manifold."""
        if k not in (2 * self.l, 2 * self.l + 1):
            raise ValueError(f"k={k} is inconsistent with l={self.l}")
        lam = np.array(self.lambdas)
        parts = [-lam, lam] + ([np.zeros(1)] if k % 2 else [])
        return np.sort(np.concatenate(parts))

    def power_traces(self) -> np.ndarray:
        """Target invariants ``t_m = 2 * sum_i lambda_i^(2m)``, m = 1..l."""
        lam2 = np.array(self.lambdas) ** 2
        return np.array([2.0 * np.sum(lam2**m) for m in range(1, self.l + 1)])


def char_poly_eval(c: ArrayLike, x: float) -> float:
    """``det(L - x I)`` via the three-term recurrence."""
    c = as_offdiagonal(c)
    p_prev, p = 1.0, -x
    for ci in c:
        p_prev, p = p, -x * p - ci * ci * p_prev
    return float(p)


def _sturm_count(c2: np.ndarray, x: np.ndarray, pivmin: np.ndarray) -> np.ndarray:
    """Number of eigenvalues strictly below ``x``.

    ``c2`` has shape (N, k-1); ``x`` has shape (N, M); ``pivmin`` shape (N, 1).
    """
    d = -x
    d = np.where(np.abs(d) < pivmin, -pivmin, d)
    count = (d < 0).astype(np.int64)
    for i in range(c2.shape[1]):
        d = -x - c2[:, i : i + 1] / d
        d = np.where(np.abs(d) < pivmin, -pivmin, d)
        count += d < 0
    return count


def eigenvalues_batch(
    cs: ArrayLike, tol: float = EIGEN_TOL, max_iter: int = 200
) -> np.ndarray:
    """Sorted eigenvalues of a stack of matrices, shape (N, k-1) -> (N, k).

    Every eigenvalue is bracketed by Sturm sign counts starting from the
    Gershgorin interval, so multiplicities are counted exactly.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    cs = np.atleast_2d(np.asarray(cs, dtype=float))
    n, km1 = cs.shape
    k = km1 + 1
    padded = np.abs(np.pad(cs, ((0, 0), (1, 1))))
    bound = np.max(padded[:, 1:] + padded[:, :-1], axis=1, initial=0.0)
    scale = np.maximum(bound, np.finfo(float).tiny)
    if np.any(4 * np.finfo(float).eps * scale > tol):
        raise BisectionError(
            f"tol={tol:g} is below the attainable resolution {4 * np.finfo(float).eps * scale.max():g}"
        )
    n_iter = int(np.ceil(np.log2(2 * (scale.max() + tol) / tol))) + 1
    if n_iter > max_iter:
        raise BisectionError(f"bisection needs {n_iter} iterations, budget is {max_iter}")

    c2 = cs**2
    pivmin = (np.finfo(float).tiny / np.finfo(float).eps * np.maximum(1.0, c2.max(axis=1, initial=0.0)))[:, None]
    lo = np.repeat(-(bound + tol)[:, None], k, axis=1)
    hi = np.repeat((bound + tol)[:, None], k, axis=1)
    target = np.arange(k)[None, :]
    for _ in range(n_iter):
        mid = 0.5 * (lo + hi)
        above = _sturm_count(c2, mid, pivmin) > target
        hi = np.where(above, mid, hi)
        lo = np.where(above, lo, mid)
    if np.any(hi - lo > tol):
        raise BisectionError("bisection did not shrink every bracket below tol")
    return 0.5 * (lo + hi)


def eigenvalues(c: ArrayLike, tol: float = EIGEN_TOL, max_iter: int = 200) -> np.ndarray:
    return eigenvalues_batch(as_offdiagonal(c)[None, :], tol, max_iter)[0]


class SymmetryReport(NamedTuple):
    is_symmetric: bool
    max_pairing_error: float


def spectrum_symmetry_report(eigs: ArrayLike, tol: float) -> SymmetryReport:
    """Check that sorted ``eigs`` are symmetric about zero.

    The pairing error of ``eigs[i]`` with ``eigs[-1-i]`` is half their sum, so
    the middle eigenvalue of an odd spectrum contributes its distance to 0.
    """
    e = np.asarray(eigs, dtype=float)
    if e.size == 0:
        return SymmetryReport(True, 0.0)
    err = float(np.max(np.abs(e + e[::-1])) / 2)
    return SymmetryReport(err <= tol, err)


def _times_l(m: np.ndarray, c: np.ndarray) -> np.ndarray:
    out = np.zeros_like(m)
    out[:, 1:] += m[:, :-1] * c
    out[:, :-1] += m[:, 1:] * c
    return out


def _traces_and_differential(c: np.ndarray, l: int) -> tuple[np.ndarray, np.ndarray]:
    k = matrix_size(c)
    if 2 * l > k:
        raise ValueError(f"need 2l <= k, got l={l}, k={k}")
    traces = np.empty(l)
    diff = np.empty((l, k - 1))
    odd = _times_l(np.eye(k), c)
    for m in range(1, l + 1):
        # d tr L^{2m} / d c_i = 2m * 2 * (L^{2m-1})_{i,i+1}
        diff[m - 1] = 4 * m * np.diagonal(odd, 1)
        even = _times_l(odd, c)
        traces[m - 1] = np.trace(even)
        odd = _times_l(even, c)
    return traces, diff


def power_trace_invariants(c: ArrayLike, l: int) -> np.ndarray:
    """``(tr L^2, tr L^4, ..., tr L^{2l})`` by banded multiplication."""
    return _traces_and_differential(as_offdiagonal(c), l)[0]


def invariant_differential(c: ArrayLike, l: int) -> np.ndarray:
    """Jacobian of :func:`power_trace_invariants`, shape (l, k-1)."""
    return _traces_and_differential(as_offdiagonal(c), l)[1]


def _weights(n: int) -> np.ndarray:
    return (2 * np.arange(1, n + 1) + 1) / 4.0


def objective_f(c: ArrayLike) -> float:
    """``tr K L^2`` with ``K = diag(1, 2, 3, ...) / 4``.

    Since ``(L^2)_{ii} = c_{i-1}^2 + c_i^2`` this is
    ``sum_i (2i + 1) c_i^2 / 4``.
    """
    c = as_offdiagonal(c)
    return float(np.dot(_weights(c.size), c * c))


def objective_gradient(c: ArrayLike) -> np.ndarray:
    c = as_offdiagonal(c)
    return 2 * _weights(c.size) * c


def _normalize_rows(m: np.ndarray) -> np.ndarray:
    # row scaling keeps the null space and tames the spread of tr L^{2m}
    norms = np.linalg.norm(m, axis=1, keepdims=True)
    return m / np.where(norms > 0, norms, 1.0)


def tangent_basis(c: ArrayLike, l: int, rank_tol: float = 1e-10) -> np.ndarray:
    """Orthonormal basis (columns) of the null space of the invariant differential."""
    diff = invariant_differential(c, l)
    n = diff.shape[1]
    if l == 0 or n == 0:
        return np.eye(n)
    _, s, vt = np.linalg.svd(_normalize_rows(diff))
    rank = int(np.sum(s > rank_tol * max(s[0], np.finfo(float).tiny))) if s[0] > 0 else 0
    return vt[rank:].T


def project_to_isospectral(
    c0: ArrayLike,
    target: ArrayLike,
    tol: float = MANIFOLD_TOL,
    max_iter: int = 50,
    rank_tol: float = 1e-12,
) -> np.ndarray:
    """Newton-project ``c0`` onto ``{c : tr L^{2m} = target_m}``.

    Each step is the minimum-norm solution of the linearized equations.
    Convergence is declared when every residual satisfies
    ``|t_m - target_m| <= tol * max(1, |target_m|)``.
    """
    c = as_offdiagonal(c0)
    target = np.asarray(target, dtype=float).reshape(-1)
    l = target.size
    scale = np.maximum(1.0, np.abs(target))
    for it in range(max_iter + 1):
        traces, diff = _traces_and_differential(c, l)
        resid = traces - target
        if np.all(np.abs(resid) <= tol * scale):
            return c
        if it == max_iter:
            raise NoConvergence(
                f"projection residual {np.max(np.abs(resid) / scale):.3e} after {max_iter} iterations"
            )
        s = np.linalg.svd(_normalize_rows(diff), compute_uv=False)
        if s.size and (s[0] == 0 or s[-1] <= rank_tol * s[0]):
            raise SingularJacobian(f"invariant differential has rank < {l} at iteration {it}")
        c = c - np.linalg.lstsq(diff, resid, rcond=None)[0]
        if not np.all(np.isfinite(c)):
            raise NoConvergence("projection diverged")
    raise AssertionError("unreachable")


def sample_manifold_point(
    spec: SpectrumSpec, k: int, seed: int, magnitude: float | None = None
) -> np.ndarray:
    """A pseudorandom point of M_k near a maximal-index critical matrix.

    Starts from the critical matrix whose nonzero entries increase along the
    chain (the source of the flow), with seed-chosen signs, moves along a
    random tangent direction of Euclidean length ``magnitude`` and projects
    back onto M_k.
    """
    from .morse import CriticalTriple, critical_matrix

    l = spec.l
    if k not in (2 * l, 2 * l + 1) or k < 1:
        raise ValueError(f"k={k} is inconsistent with l={l}")
    if magnitude is None:
        magnitude = 0.1 * spec.lambdas[-1] if l else 0.0
    rng = np.random.default_rng(seed)
    signs = tuple(int(b) for b in rng.integers(0, 2, size=l))
    reverse = tuple(range(l, 0, -1))
    if k % 2:
        c_crit = critical_matrix(spec, CriticalTriple(0, signs, reverse))
    else:
        c_crit = critical_matrix(spec, CriticalTriple(l, signs, reverse))[:-1]
    if magnitude == 0 or l == 0:
        return c_crit
    basis = tangent_basis(c_crit, l)
    direction = basis @ rng.standard_normal(basis.shape[1])
    direction *= magnitude / np.linalg.norm(direction)
    return project_to_isospectral(c_crit + direction, spec.power_traces(), tol=1e-12)

