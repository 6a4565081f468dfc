"""The perfect-matching polytope of K_{2n} and its tangent space.

A symmetric zero-diagonal ``B`` of even order ``2n`` lies in the polytope iff
it is doubly stochastic and, for every odd vertex set ``S`` with
``3 <= |S| <= 2n - 3``,

    sum_{i, j in S} b_ij <= |S| - 1

where the sum runs over ordered pairs (each edge inside ``S`` counts twice).
Membership is decided by scanning every such ``S``; the linear oracle scans
every perfect matching.  Both are brute force by design.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np

from .core import SymZeroMatrix, complete_graph, make_sym_zero, num_pairs, packed_index, pair_list
from .matchings import Matching, _check_guard, enumerate_perfect_matchings, matching_from_pairs

MEMBERSHIP_MAX_ORDER = 20
DEFAULT_FEASIBILITY_TOL = 1e-9
_LMO_CACHE_LIMIT = 200_000


class NotInPolytopeError(ValueError):
    pass


@dataclass(frozen=True)
class OddSetViolation:
    subset: tuple[int, ...]
    excess: float | Fraction

    def to_json(self) -> dict:
        return {"subset": list(self.subset), "excess": float(self.excess)}


@dataclass(frozen=True)
class StochasticityViolation:
    """A negative entry (``kind="entry"``) or a row sum away from 1 (``kind="row"``)."""

    kind: str
    where: tuple[int, ...]
    value: float | Fraction

    def to_json(self) -> dict:
        return {"kind": self.kind, "where": list(self.where), "value": float(self.value)}


@dataclass
class Membership:
    member: bool
    violations: list = field(default_factory=list)

    @property
    def odd_set_violations(self) -> list[OddSetViolation]:
        return [v for v in self.violations if isinstance(v, OddSetViolation)]

    def __bool__(self) -> bool:
        return self.member

    def to_json(self) -> dict:
        return {"member": self.member, "violations": [v.to_json() for v in self.violations]}


@lru_cache(maxsize=None)
def odd_subsets(order: int) -> tuple[np.ndarray, tuple[tuple[int, ...], ...]]:
    """Indicator matrix and tuples of all odd ``S`` with ``3 <= |S| <= order - 3``."""
    subsets = [s for size in range(3, order - 2, 2)
               for s in itertools.combinations(range(order), size)]
    ind = np.zeros((len(subsets), order), dtype=np.int64)
    for row, s in enumerate(subsets):
        ind[row, list(s)] = 1
    return ind, tuple(subsets)


def _integer_form(b: SymZeroMatrix) -> tuple[np.ndarray, int]:
    """Integer matrix ``N`` and denominator ``d`` with ``B = N / d`` exactly."""
    d = 1
    for v in b.upper:
        d = math.lcm(d, v.denominator)
    nums = [int(v * d) for v in b.to_dense().ravel()]
    bound = max((abs(x) for x in nums), default=0) * b.order ** 2
    dtype = np.int64 if bound < 2**62 else object
    return np.array(nums, dtype=dtype).reshape(b.order, b.order), d


def _subset_sums(ind: np.ndarray, dense: np.ndarray, chunk: int = 65536) -> np.ndarray:
    """``s^T B s`` for every indicator row ``s``."""
    if ind.shape[0] == 0:
        return np.zeros(0, dtype=dense.dtype)
    if dense.dtype == object:
        ind = ind.astype(object)
    out = []
    for start in range(0, ind.shape[0], chunk):
        block = ind[start:start + chunk]
        out.append(((block @ dense) * block).sum(axis=1))
    return np.concatenate(out)


def is_member(b: SymZeroMatrix, tol: float = DEFAULT_FEASIBILITY_TOL) -> Membership:
    """Decide membership in the matching polytope and list every violation.

    Exact-regime matrices are compared exactly and ``tol`` is ignored.
    """
    n = b.order
    if n % 2:
        raise ValueError("membership needs an even order")
    if n > MEMBERSHIP_MAX_ORDER:
        raise ValueError(f"order {n} exceeds membership guard {MEMBERSHIP_MAX_ORDER}")
    violations: list = []
    ind, subsets = odd_subsets(n)
    if b.exact:
        dense, d = _integer_form(b)
        for p, (i, j) in enumerate(pair_list(n)):
            if b.upper[p] < 0:
                violations.append(StochasticityViolation("entry", (i, j), b.upper[p]))
        for i, r in enumerate(dense.sum(axis=1)):
            if r != d:
                violations.append(StochasticityViolation("row", (i,), Fraction(int(r), d)))
        sums = _subset_sums(ind, dense)
        sizes = ind.sum(axis=1)
        bad = np.nonzero(sums > (sizes - 1) * d)[0]
        for row in bad:
            excess = Fraction(int(sums[row]), d) - (int(sizes[row]) - 1)
            violations.append(OddSetViolation(subsets[row], excess))
    else:
        dense = b.to_dense()
        for p, (i, j) in enumerate(pair_list(n)):
            if b.upper[p] < -tol:
                violations.append(StochasticityViolation("entry", (i, j), float(b.upper[p])))
        for i, r in enumerate(dense.sum(axis=1)):
            if abs(r - 1.0) > tol:
                violations.append(StochasticityViolation("row", (i,), float(r)))
        sums = _subset_sums(ind, dense)
        sizes = ind.sum(axis=1)
        excess = sums - (sizes - 1)
        for row in np.nonzero(excess > tol)[0]:
            violations.append(OddSetViolation(subsets[row], float(excess[row])))
    return Membership(not violations, violations)


def certify(b: SymZeroMatrix, tol: float = DEFAULT_FEASIBILITY_TOL) -> SymZeroMatrix:
    """Return ``b`` unchanged if it is a member, otherwise raise."""
    verdict = is_member(b, tol)
    if not verdict:
        raise NotInPolytopeError(f"{len(verdict.violations)} violation(s), first: {verdict.violations[0]}")
    return b


def matching_to_matrix(matching: Sequence[Sequence[int]], two_n: int | None = None) -> SymZeroMatrix:
    """0/1 matrix of a perfect matching (an extreme point of the polytope)."""
    m = matching_from_pairs(matching)
    order = 2 * len(m) if two_n is None else two_n
    if sorted(v for p in m for v in p) != list(range(order)):
        raise ValueError(f"{matching} is not a perfect matching of {order} vertices")
    upper = [Fraction(0)] * num_pairs(order)
    for i, j in m:
        upper[packed_index(i, j, order)] = Fraction(1)
    return make_sym_zero(order, upper)


def barycenter(two_n: int) -> SymZeroMatrix:
    """``A(K_{2n}) / (2n - 1)``, the fully symmetric interior point (exact)."""
    if two_n < 4 or two_n % 2:
        raise ValueError("two_n must be an even integer >= 4")
    return complete_graph(two_n).scaled(Fraction(1, two_n - 1))


@dataclass(frozen=True)
class InteriorWitness:
    min_entry: float | Fraction
    min_odd_set_slack: float | Fraction | None  # None when no odd-set constraint exists
    tight_size: int | None

    @property
    def strictly_interior(self) -> bool:
        return self.min_entry > 0 and (self.min_odd_set_slack is None or self.min_odd_set_slack > 0)


def interior_witness(b: SymZeroMatrix) -> InteriorWitness:
    """Smallest entry and smallest odd-set slack ``(|S| - 1) - sum_{S} b``."""
    ind, _ = odd_subsets(b.order)
    min_entry = min(b.upper.tolist())
    if ind.shape[0] == 0:
        return InteriorWitness(min_entry, None, None)
    if b.exact:
        dense, d = _integer_form(b)
        sums = _subset_sums(ind, dense)
        sizes = ind.sum(axis=1)
        slack = [Fraction(int((s - 1) * d - v), d) for s, v in zip(sizes, sums)]
    else:
        sums = _subset_sums(ind, b.to_dense())
        sizes = ind.sum(axis=1)
        slack = (sizes - 1 - sums).tolist()
    row = min(range(len(slack)), key=slack.__getitem__)
    return InteriorWitness(min_entry, slack[row], int(sizes[row]))


# ---------------------------------------------------------------------------
# tangent space


def project_to_tangent(x: SymZeroMatrix) -> SymZeroMatrix:
    """Orthogonal projection onto symmetric zero-diagonal matrices with zero row sums.

    Removing ``lam_i + lam_j`` from each entry, with ``((N-2) I + J) lam = r``
    for the row sums ``r``, is the least-squares correction.
    """
    n = x.order
    if n % 2:
        raise ValueError("tangent projection needs an even order")
    xf = x.to_float()
    r = xf.row_sums()
    lam = np.linalg.solve((n - 2) * np.eye(n) + np.ones((n, n)), r)
    rows, cols = np.triu_indices(n, k=1)
    return SymZeroMatrix(n, xf.upper - lam[rows] - lam[cols])


def tangent_dimension(two_n: int) -> int:
    return num_pairs(two_n) - two_n


def tangent_basis(two_n: int) -> list[SymZeroMatrix]:
    """Orthonormal basis (in packed-entry coordinates) of the tangent space.

    Elementary matrices are projected and then orthonormalised by modified
    Gram-Schmidt, dropping dependent directions.
    """
    if two_n < 4 or two_n % 2:
        raise ValueError("two_n must be an even integer >= 4")
    m = num_pairs(two_n)
    basis: list[np.ndarray] = []
    for p in range(m):
        e = np.zeros(m)
        e[p] = 1.0
        v = project_to_tangent(SymZeroMatrix(two_n, e)).upper.copy()
        for _ in range(2):
            for q in basis:
                v -= (q @ v) * q
        norm = np.linalg.norm(v)
        if norm > 1e-8:
            basis.append(v / norm)
    if len(basis) != tangent_dimension(two_n):
        raise RuntimeError(f"tangent basis has {len(basis)} elements, expected {tangent_dimension(two_n)}")
    return [SymZeroMatrix(two_n, v) for v in basis]


# ---------------------------------------------------------------------------
# linear minimization oracle


@lru_cache(maxsize=4)
def _matching_table(two_n: int) -> tuple[tuple[Matching, ...], np.ndarray]:
    matchings = tuple(enumerate_perfect_matchings(two_n))
    inc = np.zeros((len(matchings), two_n // 2), dtype=np.int64)
    for row, m in enumerate(matchings):
        inc[row] = [packed_index(i, j, two_n) for i, j in m]
    return matchings, inc


def _matchings_chunked(two_n: int, chunk: int = 100_000):
    if math.prod(range(1, two_n, 2)) <= _LMO_CACHE_LIMIT:
        yield _matching_table(two_n)
        return
    buf: list[Matching] = []
    for m in enumerate_perfect_matchings(two_n):
        buf.append(m)
        if len(buf) == chunk:
            yield tuple(buf), np.array([[packed_index(i, j, two_n) for i, j in mm] for mm in buf])
            buf = []
    if buf:
        yield tuple(buf), np.array([[packed_index(i, j, two_n) for i, j in mm] for mm in buf])


def lmo_matching(g: SymZeroMatrix) -> Matching:
    """Perfect matching minimizing ``<G, P>``; ties go to the canonically first one."""
    n = g.order
    if n % 2:
        raise ValueError("lmo needs an even order")
    _check_guard(n)
    gup = g.upper if g.exact else g.to_float().upper
    best, best_score = None, None
    for matchings, inc in _matchings_chunked(n):
        scores = gup[inc].sum(axis=1)
        row = int(np.argmin(scores)) if not g.exact else min(range(len(scores)), key=scores.__getitem__)
        if best_score is None or scores[row] < best_score:
            best, best_score = matchings[row], scores[row]
    return best


def lmo(g: SymZeroMatrix) -> SymZeroMatrix:
    """Extreme point of the polytope minimizing the linear objective ``<G, P>``."""
    return matching_to_matrix(lmo_matching(g), g.order)


# ---------------------------------------------------------------------------
# regular graphs and sampling


@dataclass
class RegularGraphCheck:
    member: bool
    r: int
    failing_cuts: list[tuple[tuple[int, ...], int]]

    def to_json(self) -> dict:
        return {"member": self.member, "r": self.r,
                "failing_cuts": [{"subset": list(s), "boundary_edges": e} for s, e in self.failing_cuts]}


def regular_graph_check(a: SymZeroMatrix, r: int) -> RegularGraphCheck:
    """Whether ``A / r`` lies in the polytope for an r-regular graph ``A``.

    Equivalent to every odd vertex set ``S`` with ``3 <= |S| <= |V| - 3``
    having at least ``r`` edges leaving it.
    """
    ae = a.to_exact()
    if any(v.denominator != 1 or v < 0 for v in ae.upper):
        raise ValueError("adjacency matrix must have non-negative integer entries")
    dense, _ = _integer_form(ae)
    if np.any(dense.sum(axis=1) != r):
        raise ValueError(f"graph is not {r}-regular")
    if a.order % 2:
        raise ValueError("graph needs an even number of vertices")
    ind, subsets = odd_subsets(a.order)
    inside = _subset_sums(ind, dense)
    boundary = r * ind.sum(axis=1) - inside
    failing = [(subsets[row], int(boundary[row])) for row in np.nonzero(boundary < r)[0]]
    return RegularGraphCheck(not failing, r, failing)


def random_matching(two_n: int, rng: np.random.Generator) -> Matching:
    """Uniformly random perfect matching: pair consecutive entries of a random permutation."""
    perm = rng.permutation(two_n)
    return matching_from_pairs(perm.reshape(-1, 2).tolist())


def random_member(two_n: int, rng: np.random.Generator, num_points: int | None = None,
                  concentration: float = 1.0) -> SymZeroMatrix:
    """Random point of the polytope (float).

    A symmetric-Dirichlet convex combination of ``num_points`` (default
    ``2n``) uniformly drawn perfect matchings.
    """
    num_points = two_n if num_points is None else num_points
    weights = rng.dirichlet(np.full(num_points, concentration))
    up = np.zeros(num_pairs(two_n))
    for w in weights:
        for i, j in random_matching(two_n, rng):
            up[packed_index(i, j, two_n)] += w
    return SymZeroMatrix(two_n, up)
