"""Symmetric zero-diagonal matrices, canonical constructors and a Jacobi eigensolver.

Vertices are 0-based throughout.  A :class:`SymZeroMatrix` of order ``N``
stores only its strict upper triangle, packed row-major::

    (0,1), (0,2), ..., (0,N-1), (1,2), ..., (N-2,N-1)

so that pair ``(i, j)`` with ``i < j`` lives at
``i*N - i*(i+1)//2 + (j - i - 1)`` (see :func:`packed_index`).

Two numeric regimes are supported.  In the *exact* regime the packed entries
are :class:`fractions.Fraction` objects held in an ``object`` array; in the
*float* regime they are ``float64``.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from numbers import Rational
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

DEFAULT_EIG_TOL = 1e-9
CSV_SYMMETRY_TOL = 1e-12


class ConvergenceError(RuntimeError):
    """Raised when an iterative routine hits its iteration cap."""


def num_pairs(order: int) -> int:
    return order * (order - 1) // 2


def packed_index(i: int, j: int, order: int) -> int:
    """Position of the unordered pair ``{i, j}`` in the packed upper triangle."""
    if i == j:
        raise ValueError("diagonal entries are not stored")
    if i > j:
        i, j = j, i
    if i < 0 or j >= order:
        raise IndexError(f"pair ({i}, {j}) out of range for order {order}")
    return i * order - i * (i + 1) // 2 + (j - i - 1)


@lru_cache(maxsize=None)
def pair_list(order: int) -> tuple[tuple[int, int], ...]:
    """All pairs ``(i, j)``, ``i < j``, in packed order."""
    return tuple((i, j) for i in range(order) for j in range(i + 1, order))


@lru_cache(maxsize=None)
def _pair_arrays(order: int) -> tuple[np.ndarray, np.ndarray]:
    rows, cols = np.triu_indices(order, k=1)
    return rows, cols


def _is_exact_value(x) -> bool:
    return isinstance(x, (Rational, Fraction)) and not isinstance(x, bool)


def _coerce_upper(upper, exact: bool | None) -> np.ndarray:
    values = list(upper)
    if exact is None:
        exact = all(_is_exact_value(v) or isinstance(v, str) for v in values)
    if exact:
        out = np.empty(len(values), dtype=object)
        for p, v in enumerate(values):
            if isinstance(v, str):
                v = Fraction(v)
            elif isinstance(v, float):
                if not math.isfinite(v):
                    raise ValueError("entries must be finite")
                v = Fraction(v)
            elif not _is_exact_value(v):
                raise TypeError(f"cannot use {v!r} in the exact regime")
            out[p] = Fraction(v)
        return out
    out = np.array([float(Fraction(v)) if isinstance(v, str) else float(v) for v in values],
                   dtype=np.float64)
    if not np.all(np.isfinite(out)):
        raise ValueError("entries must be finite (no NaN or inf)")
    return out


@dataclass(frozen=True, eq=False)
class SymZeroMatrix:
    """Symmetric matrix with zero diagonal, stored as its packed upper triangle.

    Parameters
    ----------
    order : int
        Number of vertices.
    upper : numpy.ndarray
        Packed strict upper triangle; ``float64`` (float regime) or ``object``
        holding ``Fraction`` (exact regime).  Use :func:`make_sym_zero` to build
        one from arbitrary input.
    """

    order: int
    upper: np.ndarray

    def __post_init__(self):
        if self.upper.shape != (num_pairs(self.order),):
            raise ValueError(
                f"order {self.order} needs {num_pairs(self.order)} entries, got {self.upper.shape}"
            )
        self.upper.setflags(write=False)

    @property
    def exact(self) -> bool:
        return self.upper.dtype == object

    @property
    def regime(self) -> str:
        return "exact" if self.exact else "float"

    def __getitem__(self, ij: tuple[int, int]):
        i, j = ij
        if i == j:
            return Fraction(0) if self.exact else 0.0
        return self.upper[packed_index(i, j, self.order)]

    def to_dense(self) -> np.ndarray:
        """Full square matrix (``object`` dtype in the exact regime)."""
        n = self.order
        if self.exact:
            out = np.full((n, n), Fraction(0), dtype=object)
        else:
            out = np.zeros((n, n))
        rows, cols = _pair_arrays(n)
        out[rows, cols] = self.upper
        out[cols, rows] = self.upper
        return out

    def row_sums(self) -> np.ndarray:
        return self.to_dense().sum(axis=1)

    def total_sum(self):
        """Sum of all ``order**2`` entries (each pair counted twice)."""
        if self.exact:
            return 2 * sum(self.upper.tolist(), Fraction(0))
        return 2.0 * math.fsum(self.upper.tolist())

    def to_float(self) -> "SymZeroMatrix":
        if not self.exact:
            return self
        return SymZeroMatrix(self.order, np.array([float(v) for v in self.upper], dtype=np.float64))

    def to_exact(self) -> "SymZeroMatrix":
        """Exact copy; float entries convert to their exact binary value."""
        if self.exact:
            return self
        return SymZeroMatrix(self.order, _coerce_upper(self.upper.tolist(), exact=True))

    def scaled(self, factor) -> "SymZeroMatrix":
        if self.exact and _is_exact_value(factor):
            return SymZeroMatrix(self.order, self.upper * Fraction(factor))
        return SymZeroMatrix(self.order, self.to_float().upper * float(factor))

    def __add__(self, other: "SymZeroMatrix") -> "SymZeroMatrix":
        _check_same_order(self, other)
        if self.exact and other.exact:
            return SymZeroMatrix(self.order, self.upper + other.upper)
        return SymZeroMatrix(self.order, self.to_float().upper + other.to_float().upper)

    def __sub__(self, other: "SymZeroMatrix") -> "SymZeroMatrix":
        return self + other.scaled(-1 if other.exact else -1.0)

    def frobenius(self) -> float:
        """Frobenius norm of the full square matrix."""
        return math.sqrt(2.0 * float(np.sum(self.to_float().upper ** 2)))

    def is_nonnegative(self, tol: float = 0.0) -> bool:
        return bool(np.all(self.upper >= -tol))

    def to_json(self) -> dict:
        if self.exact:
            return {"order": self.order, "upper": [_fraction_to_json(v) for v in self.upper]}
        return {"order": self.order, "upper": [float(v) for v in self.upper]}

    def __repr__(self) -> str:
        return f"SymZeroMatrix(order={self.order}, regime={self.regime!r}, upper={self.upper.tolist()!r})"


def _check_same_order(a: SymZeroMatrix, b: SymZeroMatrix) -> None:
    if a.order != b.order:
        raise ValueError(f"order mismatch: {a.order} vs {b.order}")


def _fraction_to_json(v: Fraction):
    return int(v) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


def make_sym_zero(order: int, upper: Iterable, exact: bool | None = None) -> SymZeroMatrix:
    """Build a :class:`SymZeroMatrix` from ``order`` and its packed upper triangle.

    The regime is exact when every entry is an int/Fraction (or a ``"p/q"``
    string) unless ``exact`` forces it.
    """
    if order < 2:
        raise ValueError("order must be at least 2")
    upper = list(upper)
    if len(upper) != num_pairs(order):
        raise ValueError(f"order {order} needs {num_pairs(order)} upper entries, got {len(upper)}")
    return SymZeroMatrix(order, _coerce_upper(upper, exact))


def from_dense(matrix, exact: bool | None = None, tol: float = CSV_SYMMETRY_TOL) -> SymZeroMatrix:
    """Validate a full square matrix (symmetric, zero diagonal) and pack it."""
    a = np.asarray(matrix, dtype=object if exact else None)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    n = a.shape[0]
    af = a.astype(np.float64)
    if np.any(np.abs(np.diag(af)) > tol):
        raise ValueError("diagonal must be zero")
    if np.any(np.abs(af - af.T) > tol):
        raise ValueError("matrix must be symmetric")
    rows, cols = _pair_arrays(n)
    return make_sym_zero(n, a[rows, cols].tolist(), exact=exact)


def zeros(order: int, exact: bool = False) -> SymZeroMatrix:
    return make_sym_zero(order, [Fraction(0) if exact else 0.0] * num_pairs(order), exact=exact)


def complete_graph(two_n: int) -> SymZeroMatrix:
    """Adjacency matrix of the complete graph on ``two_n`` vertices (exact)."""
    if two_n < 2 or two_n % 2:
        raise ValueError("two_n must be a positive even integer")
    return make_sym_zero(two_n, [Fraction(1)] * num_pairs(two_n))


def complete_bipartite(n: int) -> np.ndarray:
    """The ``n x n`` all-ones biadjacency matrix of K_{n,n} (exact entries)."""
    if n < 1:
        raise ValueError("n must be at least 1")
    return np.full((n, n), Fraction(1), dtype=object)


def bipartite_embedding(c) -> SymZeroMatrix:
    """The symmetric matrix ``[[0, C], [C^T, 0]]`` for a rectangular ``C``."""
    c = np.asarray(c, dtype=object)
    rows, cols = c.shape
    exact = all(_is_exact_value(v) for v in c.ravel())
    zero = Fraction(0) if exact else 0.0
    big = np.full((rows + cols, rows + cols), zero, dtype=object)
    big[:rows, rows:] = c
    big[rows:, :rows] = c.T
    r, s = _pair_arrays(rows + cols)
    return make_sym_zero(rows + cols, big[r, s].tolist(), exact=exact)


def principal_submatrix(b: SymZeroMatrix, subset: Sequence[int]) -> SymZeroMatrix:
    """The principal submatrix ``B[S]`` with rows/columns in the given order.

    Returns a 1x1 zero "matrix" (order 1, no stored entries) for a singleton.
    """
    idx = list(subset)
    if any(v < 0 or v >= b.order for v in idx):
        raise IndexError(f"subset {idx} out of range for order {b.order}")
    if len(set(idx)) != len(idx):
        raise ValueError("subset has repeated vertices")
    m = len(idx)
    positions = [packed_index(idx[a], idx[c], b.order) for a in range(m) for c in range(a + 1, m)]
    upper = b.upper[positions] if positions else np.empty(0, dtype=b.upper.dtype)
    return SymZeroMatrix(m, np.array(upper, dtype=b.upper.dtype))


def direct_sum(b: SymZeroMatrix, b2: SymZeroMatrix) -> SymZeroMatrix:
    """Block-diagonal ``B (+) B2``; cross-block entries are zero."""
    exact = b.exact and b2.exact
    left = b if exact else b.to_float()
    right = b2 if exact else b2.to_float()
    n = b.order + b2.order
    dense = np.full((n, n), Fraction(0) if exact else 0.0, dtype=object if exact else np.float64)
    dense[: b.order, : b.order] = left.to_dense()
    dense[b.order:, b.order:] = right.to_dense()
    r, c = _pair_arrays(n)
    return SymZeroMatrix(n, np.array(dense[r, c], dtype=object if exact else np.float64))


# ---------------------------------------------------------------------------
# eigenvalues


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues sorted descending plus sign counts at ``tol * radius``."""

    eigenvalues: tuple[float, ...]
    tolerance: float

    @property
    def radius(self) -> float:
        return max((abs(v) for v in self.eigenvalues), default=0.0)

    @property
    def threshold(self) -> float:
        return self.tolerance * self.radius

    @property
    def num_positive(self) -> int:
        return sum(v > self.threshold for v in self.eigenvalues)

    @property
    def num_negative(self) -> int:
        return sum(v < -self.threshold for v in self.eigenvalues)

    @property
    def num_zero(self) -> int:
        return len(self.eigenvalues) - self.num_positive - self.num_negative


def jacobi_eigenvalues(a: np.ndarray, tol: float = 1e-14, max_sweeps: int = 100) -> np.ndarray:
    """Eigenvalues of a real symmetric matrix by cyclic Jacobi rotations.

    Sweeps until the off-diagonal Frobenius norm drops below
    ``tol * ||A||_F``.  Returns them sorted descending.
    """
    a = np.array(a, dtype=np.float64, copy=True)
    n = a.shape[0]
    scale = np.linalg.norm(a)
    if n == 0:
        return np.empty(0)
    if scale == 0.0:
        return np.zeros(n)

    mask = ~np.eye(n, dtype=bool)

    def off(m):
        return float(np.linalg.norm(m[mask]))

    for _ in range(max_sweeps):
        if off(a) <= tol * scale:
            return np.sort(np.diag(a))[::-1]
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-18 * scale:
                    a[p, q] = a[q, p] = 0.0
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                rp = a[p, :].copy()
                rq = a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                a[p, q] = a[q, p] = 0.0
    if off(a) <= tol * scale:
        return np.sort(np.diag(a))[::-1]
    raise ConvergenceError(f"Jacobi did not converge in {max_sweeps} sweeps")


def sym_eigenvalues(b: SymZeroMatrix | np.ndarray, tol: float = DEFAULT_EIG_TOL,
                    max_sweeps: int = 100) -> Spectrum:
    """Spectrum of a symmetric matrix; ``tol`` sets the sign-classification threshold."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    dense = b.to_float().to_dense() if isinstance(b, SymZeroMatrix) else np.asarray(b, dtype=float)
    vals = jacobi_eigenvalues(dense, tol=min(tol, 1e-14), max_sweeps=max_sweeps)
    return Spectrum(tuple(float(v) for v in vals), tol)


# ---------------------------------------------------------------------------
# file formats


def load_matrix(path: str | Path, exact: bool | None = None) -> SymZeroMatrix:
    """Read a matrix from JSON (``{"order", "upper"}``) or CSV (full square)."""
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".csv":
        rows = [r for r in csv.reader(text.splitlines()) if r and any(c.strip() for c in r)]
        if exact:
            data = [[Fraction(c.strip()) for c in r] for r in rows]
        else:
            data = [[float(Fraction(c.strip())) for c in r] for r in rows]
        if any(len(r) != len(data) for r in data):
            raise ValueError("CSV matrix must be square")
        return from_dense(np.array(data, dtype=object if exact else np.float64), exact=exact)
    payload = json.loads(text)
    if not isinstance(payload, dict) or "order" not in payload or "upper" not in payload:
        raise ValueError("matrix JSON needs 'order' and 'upper'")
    return make_sym_zero(int(payload["order"]), payload["upper"], exact=exact)


def save_matrix(b: SymZeroMatrix, path: str | Path) -> None:
    path = Path(path)
    if path.suffix.lower() == ".csv":
        dense = b.to_dense()
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            for row in dense:
                writer.writerow([str(v) if b.exact else repr(float(v)) for v in row])
        return
    path.write_text(json.dumps(b.to_json()) + "\n")
