"""Hafnians, k-matching sums, permanents and their derivatives.

``haf_k(B)`` is the total weight of all k-matchings of the weighted complete
graph ``B``; equivalently the sum of hafnians of its principal submatrices of
order ``2k``.  The primary path computes the hafnian of *every* principal
submatrix at once by a subset dynamic program (pair the lowest vertex of the
subset with each partner).  Two independent cross-checks are kept:
the one-step recursion :func:`haf_k_recursive` and the brute-force matching
enumeration :func:`haf_k_by_enumeration`.
"""

from __future__ import annotations

import itertools
import math
import os
from fractions import Fraction
from functools import lru_cache
from typing import Iterator, Sequence

import numpy as np

from .core import SymZeroMatrix, make_sym_zero, num_pairs, packed_index, pair_list

DEFAULT_MAX_ORDER = 16
MAX_PERM_SIZE = 8

Matching = tuple[tuple[int, int], ...]


class GuardError(ValueError):
    """Requested enumeration is larger than the configured guard."""


def max_order() -> int:
    """Enumeration guard; ``MATCHPOLY_MAX_ORDER`` overrides it (unsafe)."""
    env = os.environ.get("MATCHPOLY_MAX_ORDER")
    return int(env) if env else DEFAULT_MAX_ORDER


def _check_guard(order: int, limit: int | None = None) -> None:
    limit = max_order() if limit is None else limit
    if order > limit:
        raise GuardError(f"order {order} exceeds enumeration guard {limit}")


# ---------------------------------------------------------------------------
# enumeration


def enumerate_perfect_matchings(two_n: int, max_order: int | None = None) -> Iterator[Matching]:
    """Yield every perfect matching of K_{two_n} once, in canonical order.

    The smallest free vertex is paired with each remaining vertex in
    increasing order, then the rest is matched recursively.  Pairs inside a
    matching come out sorted.
    """
    if two_n < 0 or two_n % 2:
        raise ValueError("two_n must be a non-negative even integer")
    _check_guard(two_n, max_order)
    yield from _match_vertices(tuple(range(two_n)))


def _match_vertices(free: tuple[int, ...]) -> Iterator[Matching]:
    if not free:
        yield ()
        return
    first = free[0]
    for pos in range(1, len(free)):
        partner = free[pos]
        rest = free[1:pos] + free[pos + 1:]
        for tail in _match_vertices(rest):
            yield ((first, partner),) + tail


def enumerate_k_matchings(two_n: int, k: int, max_order: int | None = None) -> Iterator[Matching]:
    """Yield every k-matching of K_{two_n} once.

    Vertex subsets of size ``2k`` are visited lexicographically and each is
    perfectly matched in canonical order, so the stream is deterministic.
    """
    if k < 0 or 2 * k > two_n:
        raise ValueError(f"need 0 <= 2k <= two_n, got k={k}, two_n={two_n}")
    _check_guard(two_n, max_order)
    for subset in itertools.combinations(range(two_n), 2 * k):
        for m in _match_vertices(subset):
            yield tuple(sorted(m))


def matching_weight(b: SymZeroMatrix, matching: Matching):
    w = Fraction(1) if b.exact else 1.0
    for i, j in matching:
        w *= b[i, j]
    return w


def haf_k_by_enumeration(b: SymZeroMatrix, k: int):
    """Brute-force oracle: sum of matching weights over enumerated k-matchings."""
    weights = [matching_weight(b, m) for m in enumerate_k_matchings(b.order, k)]
    if b.exact:
        return sum(weights, Fraction(0))
    return math.fsum(weights)


# ---------------------------------------------------------------------------
# subset dynamic program


@lru_cache(maxsize=None)
def _haf_layers(order: int) -> tuple:
    """For each even popcount 2m: target masks, packed edge indices, sub-masks."""
    layers = []
    by_count: dict[int, list[int]] = {}
    for mask in range(1, 1 << order):
        c = mask.bit_count()
        if c % 2 == 0:
            by_count.setdefault(c, []).append(mask)
    for c in range(2, order + 1, 2):
        masks = by_count.get(c, [])
        edges = np.empty((len(masks), c - 1), dtype=np.int64)
        subs = np.empty((len(masks), c - 1), dtype=np.int64)
        for row, mask in enumerate(masks):
            low = (mask & -mask).bit_length() - 1
            rest = mask ^ (1 << low)
            col = 0
            j = 0
            while rest >> j:
                if rest >> j & 1:
                    edges[row, col] = packed_index(low, j, order)
                    subs[row, col] = rest ^ (1 << j)
                    col += 1
                j += 1
        layers.append((np.array(masks, dtype=np.int64), edges, subs))
    return tuple(layers)


@lru_cache(maxsize=None)
def _layer_masks(order: int, size: int) -> np.ndarray:
    if size == 0:
        return np.zeros(1, dtype=np.int64)
    return _haf_layers(order)[size // 2 - 1][0]


def subset_hafnians(b: SymZeroMatrix) -> np.ndarray:
    """Hafnian of every principal submatrix, indexed by vertex bitmask.

    Entry ``h[mask]`` is ``haf(B[mask])``; odd masks hold 0 and ``h[0] = 1``.
    """
    _check_guard(b.order)
    if b.exact:
        h = np.full(1 << b.order, Fraction(0), dtype=object)
        h[0] = Fraction(1)
    else:
        h = np.zeros(1 << b.order)
        h[0] = 1.0
    up = b.upper
    for masks, edges, subs in _haf_layers(b.order):
        if len(masks):
            h[masks] = (up[edges] * h[subs]).sum(axis=1)
    return h


def _sum(values, exact: bool):
    if exact:
        return sum(values, Fraction(0))
    return math.fsum(values)


def haf_k_bysubsets(b: SymZeroMatrix, k: int):
    """``haf_k(B)``: sum of hafnians of all principal submatrices of order 2k.

    ``haf_0 = 1``.  Returns a ``Fraction`` in the exact regime, ``float``
    otherwise (compensated summation).
    """
    if k < 0 or 2 * k > b.order:
        raise ValueError(f"need 0 <= 2k <= order, got k={k}, order={b.order}")
    if k == 0:
        return Fraction(1) if b.exact else 1.0
    h = subset_hafnians(b)
    return _sum(h[_layer_masks(b.order, 2 * k)].tolist(), b.exact)


haf_k = haf_k_bysubsets


def haf_k_all(b: SymZeroMatrix) -> list:
    """``[haf_0(B), haf_1(B), ..., haf_{order//2}(B)]`` from one DP pass."""
    h = subset_hafnians(b)
    one = Fraction(1) if b.exact else 1.0
    return [one] + [_sum(h[_layer_masks(b.order, 2 * k)].tolist(), b.exact)
                    for k in range(1, b.order // 2 + 1)]


def hafnian(b: SymZeroMatrix):
    """Sum over perfect matchings of the product of matched entries."""
    if b.order % 2:
        raise ValueError("hafnian needs an even order")
    return subset_hafnians(b)[(1 << b.order) - 1]


def haf_k_recursive(b: SymZeroMatrix, k: int):
    """``haf_k`` through ``haf_k(F) = (1/k) sum_{i<j} f_ij haf_{k-1}(F minus {i,j})``.

    Independent of the subset DP; used as a cross-check path.
    """
    if k < 0 or 2 * k > b.order:
        raise ValueError(f"need 0 <= 2k <= order, got k={k}, order={b.order}")
    exact = b.exact
    pairs = pair_list(b.order)
    up = b.upper.tolist()

    @lru_cache(maxsize=None)
    def rec(mask: int, kk: int):
        if kk == 0:
            return Fraction(1) if exact else 1.0
        terms = []
        for p, (i, j) in enumerate(pairs):
            if mask >> i & 1 and mask >> j & 1 and up[p] != 0:
                terms.append(up[p] * rec(mask & ~(1 << i) & ~(1 << j), kk - 1))
        total = _sum(terms, exact)
        return total / kk if not exact else total * Fraction(1, kk)

    return rec((1 << b.order) - 1, k)


def haf_gradient(b: SymZeroMatrix, k: int) -> SymZeroMatrix:
    """Partial derivatives of ``haf_k`` with respect to each upper entry.

    ``haf_k`` is multilinear in the entries, so the derivative in ``b_ij`` is
    ``haf_{k-1}`` of the principal submatrix that drops vertices ``i`` and ``j``.
    """
    if k < 0 or 2 * k > b.order:
        raise ValueError(f"need 0 <= 2k <= order, got k={k}, order={b.order}")
    n = b.order
    if k == 0:
        zero = Fraction(0) if b.exact else 0.0
        return make_sym_zero(n, [zero] * num_pairs(n), exact=b.exact)
    h = subset_hafnians(b)
    masks = _layer_masks(n, 2 * k - 2)
    vals = h[masks]
    grad = []
    for i, j in pair_list(n):
        keep = (masks & ((1 << i) | (1 << j))) == 0
        grad.append(_sum(vals[keep].tolist(), b.exact))
    return make_sym_zero(n, grad, exact=b.exact)


def haf_hessian(b: SymZeroMatrix, k: int) -> np.ndarray:
    """Second partials of ``haf_k`` in packed-entry coordinates (float).

    Entry ``(e, f)`` is ``haf_{k-2}`` of ``B`` with the four endpoints removed
    when the pairs ``e`` and ``f`` are disjoint, and 0 otherwise.
    """
    n = b.order
    if k < 0 or 2 * k > n:
        raise ValueError(f"need 0 <= 2k <= order, got k={k}, order={n}")
    pairs = pair_list(n)
    out = np.zeros((len(pairs), len(pairs)))
    if k < 2:
        return out
    h = subset_hafnians(b.to_float())
    masks = _layer_masks(n, 2 * k - 4)
    vals = h[masks]
    for e, (i, j) in enumerate(pairs):
        for f in range(e + 1, len(pairs)):
            p, q = pairs[f]
            if len({i, j, p, q}) < 4:
                continue
            block = (1 << i) | (1 << j) | (1 << p) | (1 << q)
            out[e, f] = out[f, e] = math.fsum(vals[(masks & block) == 0].tolist())
    return out


def count_k_matchings(a: SymZeroMatrix, k: int) -> int:
    """Number of k-matchings of a (multi)graph given by its integer adjacency matrix."""
    vals = a.to_exact().upper if not a.exact else a.upper
    if any(Fraction(v).denominator != 1 or v < 0 for v in vals):
        raise ValueError("adjacency matrix must have non-negative integer entries")
    result = haf_k_bysubsets(a.to_exact(), k)
    return int(result)


# ---------------------------------------------------------------------------
# permanents


def permanent(c, max_size: int = MAX_PERM_SIZE):
    """Permanent of a square matrix by summing over all permutations."""
    c = np.asarray(c, dtype=object)
    rows, cols = c.shape
    if rows != cols:
        raise ValueError("permanent needs a square matrix; use perm_k for rectangular input")
    if rows > max_size:
        raise GuardError(f"size {rows} exceeds permanent guard {max_size}")
    exact = all(isinstance(v, (int, Fraction)) for v in c.ravel())
    terms = []
    for sigma in itertools.permutations(range(rows)):
        w = Fraction(1) if exact else 1.0
        for i, s in enumerate(sigma):
            w *= c[i, s]
        terms.append(w)
    return _sum(terms, exact)


def perm_k(c, k: int, max_size: int = MAX_PERM_SIZE):
    """Sum of permanents of all ``k x k`` submatrices of a rectangular matrix."""
    c = np.asarray(c, dtype=object)
    rows, cols = c.shape
    if k < 0 or k > min(rows, cols):
        raise ValueError(f"need 0 <= k <= min(rows, cols), got k={k}")
    exact = all(isinstance(v, (int, Fraction)) for v in c.ravel())
    terms = []
    for r in itertools.combinations(range(rows), k):
        for s in itertools.combinations(range(cols), k):
            terms.append(permanent(c[np.ix_(r, s)], max_size=max_size))
    return _sum(terms, exact)


def matching_from_pairs(pairs: Sequence[Sequence[int]]) -> Matching:
    """Canonical form of a matching: each pair sorted, pairs sorted."""
    out = tuple(sorted(tuple(sorted((int(a), int(b)))) for a, b in pairs))
    verts = [v for p in out for v in p]
    if len(set(verts)) != len(verts) or any(a == b for a, b in out):
        raise ValueError(f"{pairs} is not a matching")
    return out
