"""Critical points of ``f(L) = tr K L^2`` on M_{2l+1} and their Morse indices.

A critical matrix has exactly l nonzero off-diagonal entries, no two of them
adjacent, so L splits into 2 x 2 blocks ``[[0, +-lambda], [+-lambda, 0]]``
plus one isolated zero. It is labelled by a triple ``(j, s, pi)``:

* ``j`` in ``0..l`` places the isolated zero: the m-th nonzero sits at
  position ``2m - 1`` for ``m <= j`` and at ``2m`` for ``m > j``;
* ``s`` holds one sign bit per block;
* ``pi`` is a permutation in one-line notation (1-based), block m carrying
  the magnitude ``lambda_{pi(m)}``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Iterator, NamedTuple, Sequence

import numpy as np
from numpy.typing import ArrayLike

from .errors import AmbiguousMatch, GapTooSmall
from .flow import volterra_field
from .jacobi import (
    SpectrumSpec,
    as_offdiagonal,
    objective_f,
    objective_gradient,
    tangent_basis,
)


class CriticalTriple(NamedTuple):
    j: int
    s: tuple[int, ...]
    pi: tuple[int, ...]

    @property
    def l(self) -> int:
        return len(self.pi)

    def validate(self, l: int | None = None) -> "CriticalTriple":
        n = self.l if l is None else l
        if len(self.s) != n or len(self.pi) != n:
            raise ValueError(f"triple {self} does not have length l={n}")
        if not 0 <= self.j <= n:
            raise ValueError(f"j={self.j} outside 0..{n}")
        if any(b not in (0, 1) for b in self.s):
            raise ValueError(f"sign bits must be 0 or 1, got {self.s}")
        if sorted(self.pi) != list(range(1, n + 1)):
            raise ValueError(f"{self.pi} is not a permutation of 1..{n}")
        return self

    @property
    def s_bits(self) -> str:
        return "".join(str(b) for b in self.s)

    @property
    def pi_str(self) -> str:
        return " ".join(str(p) for p in self.pi)

    def flip(self, m: int) -> "CriticalTriple":
        """The same triple with sign bit ``m`` (0-based) toggled."""
        s = list(self.s)
        s[m] ^= 1
        return self._replace(s=tuple(s))


def count_critical_points(l: int) -> int:
    return (l + 1) * 2**l * math.factorial(l)


def enumerate_critical_points(l: int) -> Iterator[CriticalTriple]:
    """All ``(l+1) 2^l l!`` triples; j ascending, then s and pi lexicographic."""
    if l < 0:
        raise ValueError("l must be >= 0")
    perms = list(itertools.permutations(range(1, l + 1)))
    for j in range(l + 1):
        for s in itertools.product((0, 1), repeat=l):
            for pi in perms:
                yield CriticalTriple(j, s, pi)


def nonzero_positions(l: int, j: int) -> list[int]:
    """1-based positions of the nonzero entries for gap label ``j``."""
    return [2 * m - 1 if m <= j else 2 * m for m in range(1, l + 1)]


def _critical_values(lambdas: Sequence[float], triple: CriticalTriple) -> list[float]:
    l = len(lambdas)
    c = [0.0] * (2 * l)
    for m, p in enumerate(nonzero_positions(l, triple.j), start=1):
        lam = lambdas[triple.pi[m - 1] - 1]
        c[p - 1] = -lam if triple.s[m - 1] else lam
    return c


def critical_matrix(spec: SpectrumSpec, triple: CriticalTriple) -> np.ndarray:
    """Off-diagonal vector (length 2l) of the critical matrix labelled ``triple``."""
    triple.validate(spec.l)
    return np.array(_critical_values(spec.lambdas, triple))


def critical_matrices(spec: SpectrumSpec, triples: Iterable[CriticalTriple]) -> np.ndarray:
    """Stack of critical matrices, shape (N, 2l)."""
    rows = [_critical_values(spec.lambdas, t) for t in triples]
    return np.array(rows, dtype=float).reshape(len(rows), 2 * spec.l)


def index_combinatorial(triple: CriticalTriple, l: int) -> int:
    """Descents of pi away from the gap, plus one unless the gap is at the end."""
    pi = triple.pi
    descents = sum(1 for m in range(1, l) if m != triple.j and pi[m - 1] > pi[m])
    return descents + (1 if triple.j != l else 0)


def jacobian_diagonal(spec: SpectrumSpec, triple: CriticalTriple) -> list[float]:
    """Linearized field entries at the zero positions of a critical matrix.

    At a critical matrix the Jacobian of the field is diagonal. Its entries
    vanish at the nonzero positions (normal to M) and equal
    ``(c_{q+1}^2 - c_{q-1}^2) / 2`` at each zero position q.
    """
    c = [0.0] + _critical_values(spec.lambdas, triple) + [0.0]
    return [0.5 * (c[q + 1] ** 2 - c[q - 1] ** 2) for q in range(1, len(c) - 1) if c[q] == 0.0]


def index_jacobian(spec: SpectrumSpec, triple: CriticalTriple) -> int:
    return sum(1 for e in jacobian_diagonal(spec, triple) if e > 0)


def index_numeric(spec: SpectrumSpec, triple: CriticalTriple, tol: float | None = None) -> int:
    """Morse index from a finite-difference Jacobian restricted to the tangent space.

    Central differences with step ``1e-5 * lambda_1`` on the field, projected
    onto the null space of the invariant differential; the index is the number
    of restricted eigenvalues with real part above ``tol``.
    """
    l = spec.l
    if l == 0:
        return 0
    if tol is None:
        tol = 1e-6 * spec.lambdas[-1] ** 2
    c = critical_matrix(spec, triple)
    h = 1e-5 * spec.lambdas[0]
    n = c.size
    jac = np.empty((n, n))
    for i in range(n):
        e = np.zeros(n)
        e[i] = h
        jac[:, i] = (volterra_field(c + e) - volterra_field(c - e)) / (2 * h)
    basis = tangent_basis(c, l)
    if basis.shape[1] != l:
        raise GapTooSmall(f"tangent space has dimension {basis.shape[1]}, expected {l}")
    restricted = np.linalg.eigvals(basis.T @ jac @ basis).real
    if np.any(np.abs(restricted) <= tol):
        raise GapTooSmall(f"restricted eigenvalue within {tol:g} of zero at {triple}")
    return int(np.sum(restricted > tol))


def tangent_gradient_norm(c: ArrayLike, l: int) -> float:
    """Norm of the gradient of f projected onto the tangent space of M_k at ``c``."""
    c = as_offdiagonal(c)
    basis = tangent_basis(c, l)
    return float(np.linalg.norm(basis.T @ objective_gradient(c)))


def match_separation(spec: SpectrumSpec) -> float:
    """Smallest max-norm distance between two distinct critical matrices."""
    lam = spec.lambdas
    gaps = [lam[i] - lam[i + 1] for i in range(len(lam) - 1)]
    return min([lam[-1], *gaps]) if lam else math.inf


def match_critical_triple(c: ArrayLike, spec: SpectrumSpec) -> tuple[CriticalTriple, float]:
    """Nearest critical matrix to ``c`` in the max norm.

    For each gap label the best signs are the signs of ``c`` and the best
    magnitudes follow the sorted order of ``|c|`` (bottleneck assignment on a
    line). A match closer than half of :func:`match_separation` is the unique
    nearest neighbour; anything farther raises :class:`AmbiguousMatch`.
    """
    c = as_offdiagonal(c)
    l = spec.l
    if c.size != 2 * l:
        raise ValueError(f"expected {2 * l} coordinates for l={l}, got {c.size}")
    lam = np.array(spec.lambdas)
    best: tuple[float, CriticalTriple] | None = None
    for j in range(l + 1):
        pos = np.array(nonzero_positions(l, j), dtype=int) - 1
        mask = np.ones(2 * l, dtype=bool)
        mask[pos] = False
        mags = np.abs(c[pos])
        # rank 1 goes to the largest magnitude, which is matched with lambda_1
        order = np.argsort(-mags, kind="stable")
        pi = np.empty(l, dtype=int)
        pi[order] = np.arange(1, l + 1)
        dist = max(
            float(np.max(np.abs(c[mask]), initial=0.0)),
            float(np.max(np.abs(mags - lam[pi - 1]), initial=0.0)),
        )
        triple = CriticalTriple(j, tuple(int(x < 0) for x in c[pos]), tuple(int(p) for p in pi))
        if best is None or dist < best[0]:
            best = (dist, triple)
    assert best is not None
    dist, triple = best
    if not dist < match_separation(spec) / 2:
        raise AmbiguousMatch(
            f"state is {dist:.3e} from the nearest critical matrix; uniqueness needs "
            f"< {match_separation(spec) / 2:.3e}"
        )
    return triple, dist


@dataclass(frozen=True)
class CriticalPointRecord:
    triple: CriticalTriple
    c: tuple[float, ...]
    index_combinatorial: int
    index_jacobian: int
    index_numeric: int | None
    f_value: float

    @property
    def indices_agree(self) -> bool:
        found = {self.index_combinatorial, self.index_jacobian}
        if self.index_numeric is not None:
            found.add(self.index_numeric)
        return len(found) == 1

    @property
    def index(self) -> int:
        return self.index_combinatorial

    def as_dict(self) -> dict:
        return {
            "j": self.triple.j,
            "s": self.triple.s_bits,
            "pi": self.triple.pi_str,
            "c": list(self.c),
            "f": self.f_value,
            "index_combinatorial": self.index_combinatorial,
            "index_jacobian": self.index_jacobian,
            "index_numeric": self.index_numeric,
        }


def critical_point_record(
    spec: SpectrumSpec, triple: CriticalTriple, numeric: bool = True
) -> CriticalPointRecord:
    c = critical_matrix(spec, triple)
    return CriticalPointRecord(
        triple=triple,
        c=tuple(float(x) for x in c),
        index_combinatorial=index_combinatorial(triple, spec.l),
        index_jacobian=index_jacobian(spec, triple),
        index_numeric=index_numeric(spec, triple) if numeric else None,
        f_value=objective_f(c),
    )


def critical_point_census(spec: SpectrumSpec, numeric_max_l: int = 4) -> list[CriticalPointRecord]:
    numeric = spec.l <= numeric_max_l
    return [critical_point_record(spec, t, numeric) for t in enumerate_critical_points(spec.l)]
