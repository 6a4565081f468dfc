"""
Minimizing haf_k over the polytope
==================================

Frank-Wolfe with away steps and an exact line search.  For k = 2 the
barycenter is the global minimizer.  For k = n = 3 the optimizer finds a
point strictly below the barycenter value 3/25: 1/3 on the edges of two
disjoint triangles and 1/9 across, with haf_3 = 87/729 = 29/243.  Every reported
value is an upper estimate of the true minimum.
"""

from fractions import Fraction

from matchpoly.bounds import haf_k_barycenter_formula, one_positive_eigenvalue
from matchpoly.core import make_sym_zero
from matchpoly.matchings import haf_k
from matchpoly.optimizer import (
    OptimizeConfig,
    haf2_expansion_check,
    hessian_on_tangent,
    minimize_haf_k,
    mu_table,
)
from matchpoly.polytope import barycenter, is_member, tangent_basis

cfg = OptimizeConfig(seed=0)

for n in (2, 3, 4):
    res = minimize_haf_k(n, 2, cfg)
    print(f"k=2 n={n}: {res.label} {res.best_value:.9f}  barycenter {float(haf_k_barycenter_formula(n, 2)):.9f}  "
          f"distance {(res.best_point - barycenter(2 * n).to_float()).frobenius():.1e}")

# The barycenter is a strict local minimum for every k tried ...
for n, k in [(3, 3), (4, 3), (4, 4)]:
    print(f"Hessian at C, n={n} k={k}: smallest eigenvalue {min(hessian_on_tangent(n, k).eigenvalues):.4f}")

# ... but not the global one when k = n = 3.
res = minimize_haf_k(3, 3, cfg)
print(f"k=n=3: {res.label} {res.best_value:.9f} vs barycenter 0.12")
up = [Fraction(1, 3) if (i < 3) == (j < 3) else Fraction(1, 9) for i in range(6) for j in range(i + 1, 6)]
b = make_sym_zero(6, up)
print("two-triangle point: member", bool(is_member(b)), " haf_3 =", haf_k(b, 3),
      " one positive eigenvalue:", one_positive_eigenvalue(b))

# haf_2 is exactly quadratic around C.
y = tangent_basis(6)[0].scaled(50.0)
print("haf_2 expansion residual for a large direction:", haf2_expansion_check(3, y))

table = mu_table(4, cfg)
for row in table.rows:
    print(f"n={row.n}: {table.label} {row.mu_estimate:.7f}  barycenter {row.barycenter_value:.7f}  "
          f"log/n {row.log_mu_over_n:.4f}")
print("known upper bound on the limit:", table.cps_upper_bound)
