"""Closed-form values, Stirling brackets, hyperbolic lower bounds and capacity.

Exact values are returned as :class:`fractions.Fraction`; anything involving
``e`` or square roots is a float.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np

from .core import ConvergenceError, DEFAULT_EIG_TOL, SymZeroMatrix, sym_eigenvalues
from .matchings import haf_k
from .polytope import barycenter, random_member

BOUND_CSV_COLUMNS = ("n", "k", "haf_exact", "haf_float", "perm", "hyp_lb",
                     "stirling_lo", "stirling_hi", "approx_haf", "approx_perm")


def haf_k_barycenter_formula(n: int, k: int, allow_k1: bool = False) -> Fraction:
    """``haf_k(A(K_{2n}) / (2n-1))`` in closed form.

    ``C(2n, 2k) / k! * prod_{j<k} C(2k-2j, 2) / (2n-1)^k``.  The formula is
    stated for ``2 <= k <= n``; ``k = 1`` is accepted only with ``allow_k1``.
    """
    lo = 1 if allow_k1 else 2
    if not lo <= k <= n:
        raise ValueError(f"need {lo} <= k <= n, got n={n}, k={k}")
    prod = math.prod(math.comb(2 * k - 2 * j, 2) for j in range(k))
    return Fraction(math.comb(2 * n, 2 * k) * prod, math.factorial(k) * (2 * n - 1) ** k)


def perm_k_formula(n: int, k: int) -> Fraction:
    """``perm_k(J_n / n) = C(n, k)^2 k! / n^k``."""
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got n={n}, k={k}")
    return Fraction(math.comb(n, k) ** 2 * math.factorial(k), n**k)


def stirling_bounds(m: int) -> tuple[float, float]:
    """``(sqrt(2 pi m) m^m e^-m, same * e^{1/(12m)})``, which bracket ``m!`` strictly."""
    if m < 1:
        raise ValueError("m must be >= 1")
    log_lo = 0.5 * math.log(2 * math.pi * m) + m * math.log(m) - m
    return math.exp(log_lo), math.exp(log_lo + 1.0 / (12 * m))


@dataclass(frozen=True)
class InequalityChain:
    n: int
    lower: float
    middle: Fraction
    right: Fraction

    @property
    def holds(self) -> bool:
        return self.lower < self.middle < self.right


def inequality_chain(n: int) -> InequalityChain:
    """``e^-n sqrt 2 < (2n)! / ((2n-1)^n 2^n n!) < n! / n^n`` with exact middle and right."""
    if n < 2:
        raise ValueError("n must be >= 2")
    middle = Fraction(math.factorial(2 * n), (2 * n - 1) ** n * 2**n * math.factorial(n))
    right = Fraction(math.factorial(n), n**n)
    return InequalityChain(n, math.exp(-n) * math.sqrt(2), middle, right)


@dataclass(frozen=True)
class Asymptotics:
    n: int
    approx_haf: float
    approx_perm: float
    ratio_haf: float
    ratio_perm: float


def asymptotics(n: int) -> Asymptotics:
    """Large-n approximations ``e^-n sqrt(2e)`` and ``e^-n sqrt(2 pi n)`` with exact/approx ratios."""
    if n < 2:
        raise ValueError("n must be >= 2")
    chain = inequality_chain(n)
    approx_haf = math.exp(-n) * math.sqrt(2 * math.e)
    approx_perm = math.exp(-n) * math.sqrt(2 * math.pi * n)
    return Asymptotics(n, approx_haf, approx_perm,
                       float(chain.middle) / approx_haf, float(chain.right) / approx_perm)


def log_hyperbolic_bound(n: int, k: int) -> float:
    if not 2 <= k <= n:
        raise ValueError(f"need 2 <= k <= n, got n={n}, k={k}")
    if k == n:
        return (n - 1) * n * math.log((n - 1) / n)
    m = 2 * n - k
    return ((2 * n - 2 * k) * math.log(2 * n) + math.lgamma(m + 1) + k * math.log(2 * n)
            - math.lgamma(2 * n - 2 * k + 1) - m * math.log(m) - k * math.log(2)
            - math.lgamma(k + 1) + (m - 1) * k * math.log((m - 1) / m))


def hyperbolic_bound(n: int, k: int) -> float:
    """Lower bound on ``haf_k(B)`` for ``B`` in the polytope with one positive eigenvalue.

    For ``k = n`` this is ``((n-1)/n)^{(n-1)n}``; for ``2 <= k < n``

        (2n)^{2n-2k} (2n-k)! (2n)^k / ((2n-2k)! (2n-k)^{2n-k} 2^k k!)
            * ((2n-k-1)/(2n-k))^{(2n-k-1)k}

    evaluated in log space.
    """
    return math.exp(log_hyperbolic_bound(n, k))


def one_positive_eigenvalue(b: SymZeroMatrix | np.ndarray, tol: float = DEFAULT_EIG_TOL) -> bool:
    """True iff exactly one eigenvalue exceeds ``tol`` times the spectral radius."""
    return sym_eigenvalues(b, tol).num_positive == 1


@dataclass(frozen=True)
class CapacityEstimate:
    value: float
    minimizer: np.ndarray
    iterations: int


def capacity_estimate(b: SymZeroMatrix, k: int, tol: float = 1e-10, max_iters: int = 10_000,
                      armijo: float = 1e-4) -> CapacityEstimate:
    """Numerical ``inf_{x > 0} (x^T B x)^k / (prod x_i)^{k/n}`` for ``B`` of order 2n.

    Minimizes ``f(u) = k log(e^u . B e^u) - (k/n) sum(u)``, which is convex and
    invariant under adding constants to ``u``, by gradient descent with
    halving backtracking from ``u = 0``.  The returned minimizer is
    normalised to geometric mean 1.
    """
    order = b.order
    half = order / 2
    dense = b.to_float().to_dense()

    def f(u):
        x = np.exp(u)
        q = x @ dense @ x
        if q <= 0:
            return math.inf
        return k * math.log(q) - (k / half) * u.sum()

    def grad(u):
        x = np.exp(u)
        bx = dense @ x
        return k * 2 * x * bx / (x @ bx) - k / half

    u = np.zeros(order)
    fu = f(u)
    for it in range(max_iters + 1):
        g = grad(u)
        gn = float(np.linalg.norm(g))
        if gn <= tol:
            x = np.exp(u - u.mean())
            return CapacityEstimate(math.exp(fu), x, it)
        step = 1.0
        while True:
            cand = u - step * g
            fc = f(cand)
            if fc <= fu - armijo * step * gn * gn or step < 1e-20:
                break
            step *= 0.5
        u, fu = cand - cand.mean(), fc
    raise ConvergenceError(f"capacity descent did not reach gradient norm {tol} in {max_iters} iterations")


def mu_upper_bound_cps() -> float:
    """``log((1 + sqrt 5)/2) / 6 - log 3``: known upper bound on the growth rate mu."""
    return math.log((1 + math.sqrt(5)) / 2) / 6 - math.log(3)


def barycenter_log_rate(n: int) -> float:
    """``log(haf_n(C)) / n`` at the barycenter; tends to -1."""
    return math.log(float(inequality_chain(n).middle)) / n


# ---------------------------------------------------------------------------
# reports


@dataclass(frozen=True)
class BoundReport:
    n: int
    k: int
    haf_exact: Fraction
    haf_float: float
    perm: Fraction
    hyp_lb: float
    stirling_lo: float
    stirling_hi: float
    approx_haf: float
    approx_perm: float
    chain_holds: bool | None

    def to_json(self) -> dict:
        d = asdict(self)
        d["haf_exact"] = str(self.haf_exact)
        d["perm"] = str(self.perm)
        return d

    def csv_row(self) -> list:
        d = self.to_json()
        return [d[c] for c in BOUND_CSV_COLUMNS]


def bound_report(n: int, k: int) -> BoundReport:
    """Every closed-form quantity for one ``(n, k)``; Stirling and asymptotics use ``n``."""
    value = haf_k_barycenter_formula(n, k)
    lo, hi = stirling_bounds(n)
    asym = asymptotics(n)
    return BoundReport(
        n=n, k=k, haf_exact=value, haf_float=float(value), perm=perm_k_formula(n, k),
        hyp_lb=hyperbolic_bound(n, k), stirling_lo=lo, stirling_hi=hi,
        approx_haf=asym.approx_haf, approx_perm=asym.approx_perm,
        chain_holds=inequality_chain(n).holds if k == n else None,
    )


def bound_reports_csv(reports: list[BoundReport]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(BOUND_CSV_COLUMNS)
    for r in reports:
        writer.writerow(r.csv_row())
    return buf.getvalue()


def sample_hyperbolic_members(n: int, count: int, rng: np.random.Generator,
                              max_draws: int | None = None) -> list[SymZeroMatrix]:
    """Random polytope points of order 2n that pass the one-positive-eigenvalue gate.

    Each draw mixes the barycenter with a random member using a uniform
    weight, then is kept only if the gate passes.
    """
    c = barycenter(2 * n).to_float()
    max_draws = 50 * count if max_draws is None else max_draws
    out: list[SymZeroMatrix] = []
    for _ in range(max_draws):
        t = rng.uniform()
        x = random_member(2 * n, rng)
        b = SymZeroMatrix(2 * n, (1 - t) * c.upper + t * x.upper)
        if one_positive_eigenvalue(b):
            out.append(b)
            if len(out) == count:
                return out
    raise RuntimeError(f"only {len(out)} of {count} gated samples after {max_draws} draws")


@dataclass(frozen=True)
class SampledBound:
    value: float
    bound: float
    applicable: bool

    @property
    def satisfied(self) -> bool | None:
        return self.value >= self.bound - 1e-12 if self.applicable else None


def sampled_bound_check(n: int, k: int, samples: int, rng: np.random.Generator) -> list[SampledBound]:
    """Evaluate ``haf_k`` against the hyperbolic bound on random polytope points.

    Points failing the eigenvalue gate are reported as not applicable.
    """
    bound = hyperbolic_bound(n, k)
    out = []
    for _ in range(samples):
        t = rng.uniform()
        x = random_member(2 * n, rng)
        c = barycenter(2 * n).to_float()
        b = SymZeroMatrix(2 * n, (1 - t) * c.upper + t * x.upper)
        out.append(SampledBound(float(haf_k(b, k)), bound, one_positive_eigenvalue(b)))
    return out
