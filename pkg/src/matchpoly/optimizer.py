"""Frank-Wolfe minimization of haf_k over the matching polytope, plus local checks.

Every value produced here is an *upper estimate* of the minimum of haf_k
over the polytope: Frank-Wolfe certifies stationarity, not global optimality
(except for k = 2, where the objective is convex on the polytope's affine hull).
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from dataclasses import asdict, dataclass, field, replace
from fractions import Fraction
from pathlib import Path

import numpy as np

from .bounds import mu_upper_bound_cps
from .core import SymZeroMatrix, direct_sum, sym_eigenvalues
from .matchings import haf_gradient, haf_hessian, haf_k
from .polytope import barycenter, is_member, lmo_matching, matching_to_matrix, random_member, tangent_basis

ESTIMATE_LABEL = "upper estimate"


@dataclass(frozen=True)
class OptimizeConfig:
    """Frank-Wolfe settings.  ``seed`` has no default: every run is reproducible."""

    seed: int
    gap_tol: float = 1e-9
    max_iters: int = 50_000
    random_starts: int = 8
    line_search_grid: int = 33
    line_search_tol: float = 1e-12
    check_every: int = 0  # gradient finite-difference spot check period; 0 disables
    check_feasibility: bool = False
    away_steps: bool = True
    regime: str = "float"

    def __post_init__(self):
        if self.regime != "float":
            raise ValueError("the optimizer runs in the float regime only")
        if self.line_search_grid < 2:
            raise ValueError("line_search_grid must be >= 2")


def load_run_config(source: str | Path | dict) -> tuple[int | None, int | None, OptimizeConfig]:
    """Parse ``{n, k, gap_tol, max_iters, random_starts, seed, regime}``; ``seed`` is mandatory."""
    if isinstance(source, dict):
        payload = dict(source)
    else:
        payload = json.loads(Path(source).read_text())
    if "seed" not in payload or payload["seed"] is None:
        raise ValueError("run config must set 'seed'")
    n = payload.pop("n", None)
    k = payload.pop("k", None)
    known = {f for f in OptimizeConfig.__dataclass_fields__}
    unknown = set(payload) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    return n, k, OptimizeConfig(**payload)


@dataclass
class OptimizeResult:
    n: int
    k: int
    best_point: SymZeroMatrix
    best_value: float
    trajectory: list[tuple[int, float, float]]
    restarts: int
    converged: bool
    start_values: list[float] = field(default_factory=list)
    label: str = ESTIMATE_LABEL

    def to_json(self, include_trajectory: bool = False) -> dict:
        out = {
            "n": self.n, "k": self.k, "label": self.label,
            "best_value": self.best_value, "restarts": self.restarts,
            "converged": self.converged, "final_gap": self.trajectory[-1][2] if self.trajectory else None,
            "iterations": self.trajectory[-1][0] if self.trajectory else 0,
            "start_values": self.start_values, "best_point": self.best_point.to_json(),
        }
        if include_trajectory:
            out["trajectory"] = [list(t) for t in self.trajectory]
        return out

    def trajectory_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iteration", "value", "duality_gap"])
        w.writerows(self.trajectory)
        return buf.getvalue()


def _horner(coeffs, t: float) -> float:
    acc = 0.0
    for c in reversed(coeffs):
        acc = acc * t + c
    return acc


def _segment_polynomial(x: SymZeroMatrix, d: np.ndarray, k: int, value: float, slope: float) -> list[float]:
    """Coefficients (ascending) of ``t -> haf_k(X + t D)``, a polynomial of degree <= k.

    The constant and linear terms are the current value and the directional
    derivative; the rest are interpolated.  Taking the slope from the
    gradient keeps the line search accurate once value differences fall
    below rounding level.
    """
    if k == 1:
        return [value, slope]
    m = k - 1
    nodes = 0.5 * (1.0 + np.cos(np.pi * (np.arange(m) + 0.5) / m))
    rhs = [(haf_k(SymZeroMatrix(x.order, x.upper + t * d), k) - value - slope * t) / (t * t) for t in nodes]
    higher = np.linalg.solve(np.vander(nodes, m, increasing=True), np.array(rhs))
    return [value, slope] + higher.tolist()


def line_search(coeffs, grid: int = 33, tol: float = 1e-12) -> float:
    """Minimize a polynomial on ``[0, 1]``: grid scan, then ternary search around the best node.

    The constant term is ignored so that tiny decreases are not lost to rounding.
    """
    tail = [0.0] + list(coeffs[1:])
    ts = np.linspace(0.0, 1.0, grid)
    vals = [_horner(tail, t) for t in ts]
    i = int(np.argmin(vals))
    lo, hi = float(ts[max(i - 1, 0)]), float(ts[min(i + 1, grid - 1)])
    while hi - lo > tol:
        a = lo + (hi - lo) / 3
        b = hi - (hi - lo) / 3
        if _horner(tail, a) <= _horner(tail, b):
            hi = b
        else:
            lo = a
    t = 0.5 * (lo + hi)
    return t if _horner(tail, t) <= vals[i] else float(ts[i])


def _check_gradient(x: SymZeroMatrix, k: int, grad: np.ndarray, h: float = 1e-5, rel: float = 1e-6) -> float:
    worst = 0.0
    for p in range(len(x.upper)):
        up, dn = x.upper.copy(), x.upper.copy()
        up[p] += h
        dn[p] -= h
        fp = haf_k(SymZeroMatrix(x.order, up), k)
        fm = haf_k(SymZeroMatrix(x.order, dn), k)
        fd = (fp - fm) / (2 * h)
        err = abs(fd - grad[p]) / max(abs(grad[p]), 1e-12)
        worst = max(worst, err)
    if worst > rel:
        raise RuntimeError(f"gradient check failed: relative error {worst:.3g}")
    return worst


def frank_wolfe(x0: SymZeroMatrix, k: int, cfg: OptimizeConfig):
    """One Frank-Wolfe run with exact line search.

    Returns ``(point, value, trajectory, converged)``; the trajectory holds
    ``(iteration, value, gap)`` with ``gap = <G, X - S>`` in the full
    Frobenius inner product.

    With ``cfg.away_steps`` the iterate is tracked as a convex combination of
    atoms (the starting point plus the vertices visited so far) and, when it
    pays more, the step moves away from the worst active atom instead of
    towards the oracle vertex.  This keeps convergence linear when the
    minimizer sits on a face of the polytope.
    """
    x = x0.to_float()
    value = haf_k(x, k)
    trajectory = []
    converged = False
    atoms = {"start": x.upper.copy()}
    weights = {"start": 1.0}
    for it in range(cfg.max_iters + 1):
        if cfg.check_feasibility and not is_member(x, 1e-8):
            raise RuntimeError(f"iterate {it} left the polytope")
        g = haf_gradient(x, k).upper
        if cfg.check_every and it % cfg.check_every == 0:
            _check_gradient(x, k, g)
        m = lmo_matching(SymZeroMatrix(x.order, g))
        s = matching_to_matrix(m, x.order).to_float().upper
        gap = 2.0 * float(g @ (x.upper - s))
        trajectory.append((it, value, gap))
        if gap <= cfg.gap_tol:
            converged = True
            break
        if it == cfg.max_iters:
            break

        away = None
        if cfg.away_steps:
            away = max(weights, key=lambda a: float(g @ atoms[a]))
            away_gain = float(g @ (atoms[away] - x.upper))
            if 2.0 * away_gain <= gap or weights[away] >= 1.0:
                away = None
        if away is None:
            d, t_max = s - x.upper, 1.0
        else:
            w = weights[away]
            d, t_max = x.upper - atoms[away], w / (1.0 - w)

        coeffs = _segment_polynomial(x, t_max * d, k, value, t_max * float(g @ d))
        t = t_max * line_search(coeffs, cfg.line_search_grid, cfg.line_search_tol)
        x = SymZeroMatrix(x.order, x.upper + t * d)
        value = haf_k(x, k)

        if away is None:
            for a in weights:
                weights[a] *= 1.0 - t
            atoms.setdefault(m, s)
            weights[m] = weights.get(m, 0.0) + t
        else:
            for a in weights:
                weights[a] *= 1.0 + t
            weights[away] -= t
        for a in [a for a, w in weights.items() if w <= 1e-15]:
            del weights[a], atoms[a]
    return x, value, trajectory, converged


def _validate(n: int, k: int) -> None:
    if not 2 <= k <= n:
        raise ValueError(f"need 2 <= k <= n, got n={n}, k={k}")


def minimize_haf_k(n: int, k: int, cfg: OptimizeConfig, warm_starts: list[SymZeroMatrix] | None = None,
                   include_barycenter: bool = True) -> OptimizeResult:
    """Multi-start Frank-Wolfe estimate of ``min haf_k`` over the polytope of order 2n.

    Starts are the barycenter (unless disabled), any ``warm_starts``, and
    ``cfg.random_starts`` seeded random members.  The lowest final value wins;
    ties keep the earliest start.
    """
    _validate(n, k)
    rng = np.random.default_rng(cfg.seed)
    starts = [barycenter(2 * n).to_float()] if include_barycenter else []
    starts += [w.to_float() for w in warm_starts or []]
    starts += [random_member(2 * n, rng) for _ in range(cfg.random_starts)]
    if not starts:
        raise ValueError("no starting points")
    best = None
    start_values = []
    for x0 in starts:
        run = frank_wolfe(x0, k, cfg)
        start_values.append(run[1])
        if best is None or run[1] < best[1]:
            best = run
    x, value, trajectory, converged = best
    return OptimizeResult(n, k, x, value, trajectory, len(starts), converged, start_values)


# ---------------------------------------------------------------------------
# mu table and subadditivity


@dataclass(frozen=True)
class MuRow:
    n: int
    k: int
    mu_estimate: float
    barycenter_value: float
    conjecture_gap: float
    log_mu_over_n: float


@dataclass
class MuTable:
    rows: list[MuRow]
    cps_upper_bound: float
    label: str = ESTIMATE_LABEL

    def to_json(self) -> dict:
        return {"label": self.label, "cps_upper_bound": self.cps_upper_bound,
                "rows": [asdict(r) for r in self.rows]}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        cols = list(MuRow.__dataclass_fields__)
        w.writerow(cols + ["cps_upper_bound"])
        for r in self.rows:
            w.writerow([getattr(r, c) for c in cols] + [self.cps_upper_bound])
        return buf.getvalue()


def mu_table(max_n: int, cfg: OptimizeConfig) -> MuTable:
    """Rows ``n = 2..max_n`` of the ``k = n`` estimates with ``log(mu)/n``."""
    from .bounds import haf_k_barycenter_formula

    rows = []
    for n in range(2, max_n + 1):
        res = minimize_haf_k(n, n, cfg)
        bary = float(haf_k_barycenter_formula(n, n))
        rows.append(MuRow(n, n, res.best_value, bary, bary - res.best_value,
                          math.log(res.best_value) / n))
    return MuTable(rows, mu_upper_bound_cps())


@dataclass(frozen=True)
class SubadditivityCheck:
    n: int
    m: int
    mu_n: float
    mu_m: float
    product_exact: bool
    direct_sum_member: bool
    warm_value: float

    @property
    def product(self) -> float:
        return self.mu_n * self.mu_m

    @property
    def warm_ok(self) -> bool:
        return self.warm_value <= self.product * (1 + 1e-6)

    @property
    def passed(self) -> bool:
        return self.product_exact and self.direct_sum_member and self.warm_ok


def subadditivity_check(n: int, m: int, cfg: OptimizeConfig) -> SubadditivityCheck:
    """Check ``haf_{n+m}(B + B') = haf_n(B) haf_m(B')`` on the best points found at n and m.

    The product law is verified exactly on the binary values of the float
    points; the direct sum is then used as the only start at size ``n + m``.
    """
    rn = minimize_haf_k(n, n, cfg)
    rm = minimize_haf_k(m, m, cfg)
    joined = direct_sum(rn.best_point.to_exact(), rm.best_point.to_exact())
    product_exact = haf_k(joined, n + m) == haf_k(rn.best_point.to_exact(), n) * haf_k(rm.best_point.to_exact(), m)
    member = bool(is_member(joined.to_float(), 1e-8))
    warm = minimize_haf_k(n + m, n + m, replace(cfg, random_starts=0),
                          warm_starts=[joined.to_float()], include_barycenter=False)
    return SubadditivityCheck(n, m, rn.best_value, rm.best_value, product_exact, member, warm.best_value)


# ---------------------------------------------------------------------------
# local analysis at the barycenter


@dataclass(frozen=True)
class TangentHessian:
    n: int
    k: int
    matrix: np.ndarray
    eigenvalues: tuple[float, ...]

    @property
    def positive_definite(self) -> bool:
        return min(self.eigenvalues) > 0


def hessian_on_tangent(n: int, k: int) -> TangentHessian:
    """Hessian of ``haf_k`` at the barycenter restricted to the tangent space.

    Expressed in the orthonormal :func:`tangent_basis` coordinates.
    """
    _validate(n, k)
    c = barycenter(2 * n)
    full = haf_hessian(c, k)
    q = np.array([y.upper for y in tangent_basis(2 * n)])
    h = q @ full @ q.T
    h = 0.5 * (h + h.T)
    return TangentHessian(n, k, h, sym_eigenvalues(h).eigenvalues)


def _four_set_sum(x: SymZeroMatrix) -> float:
    """``sum_{i<j<p<q} (x_ij x_pq + x_ip x_jq + x_iq x_jp)``."""
    terms = []
    for i, j, p, q in itertools.combinations(range(x.order), 4):
        terms.append(x[i, j] * x[p, q] + x[i, p] * x[j, q] + x[i, q] * x[j, p])
    return sum(terms, Fraction(0)) if x.exact else math.fsum(terms)


def _sq_sum(x: SymZeroMatrix):
    vals = x.upper.tolist()
    return sum((v * v for v in vals), Fraction(0)) if x.exact else math.fsum(v * v for v in vals)


def polarization_residual(x: SymZeroMatrix):
    """``2 * four_set_sum - [(sum x)^2 - sum_i row_i^2 + sum x^2]``; zero for any X."""
    total = x.total_sum() / 2
    rows = x.row_sums().tolist()
    row_sq = sum((r * r for r in rows), Fraction(0)) if x.exact else math.fsum(r * r for r in rows)
    return 2 * _four_set_sum(x) - (total * total - row_sq + _sq_sum(x))


def _require_tangent(y: SymZeroMatrix, tol: float = 1e-10) -> None:
    rows = y.row_sums()
    scale = 1.0 + max((abs(float(v)) for v in y.upper), default=0.0)
    if y.exact:
        if any(r != 0 for r in rows):
            raise ValueError("direction is not in the tangent space (nonzero row sums)")
    elif np.max(np.abs(rows.astype(float))) > tol * scale:
        raise ValueError("direction is not in the tangent space (nonzero row sums)")


@dataclass(frozen=True)
class QuarticCheck:
    lhs: float
    half_square_sum: float
    residual: float
    polarization_residual: float


def quartic_identity_check(y: SymZeroMatrix, require_tangent: bool = True) -> QuarticCheck:
    """On the tangent space the four-set sum equals half the sum of squared entries.

    With ``require_tangent=False`` any direction is accepted, which shows the
    constrained identity failing once row sums are nonzero while the
    polarization identity still holds.
    """
    if require_tangent:
        _require_tangent(y)
    lhs = _four_set_sum(y)
    rhs = _sq_sum(y) / 2
    return QuarticCheck(float(lhs), float(rhs), abs(float(lhs - rhs)), abs(float(polarization_residual(y))))


def haf2_expansion_check(n: int, y: SymZeroMatrix) -> float:
    """``|haf_2(C + Y) - haf_2(C) - sum_{i<j} y_ij^2 / 2|`` for a tangent direction Y.

    The identity is polynomial, so it holds for any size of Y, not just near C.
    """
    if y.order != 2 * n:
        raise ValueError("direction has the wrong order")
    _require_tangent(y)
    c = barycenter(2 * n)
    if not y.exact:
        c = c.to_float()
    return abs(float(haf_k(c + y, 2) - haf_k(c, 2) - _sq_sum(y) / 2))
