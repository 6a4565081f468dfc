"""
Hafnians and k-matching sums
============================

haf_k(B) adds up the weight of every k-matching of the complete graph,
where a matching's weight is the product of its matched entries.  Three
independent routines compute it; this script checks them against each other
and against the closed form at the barycenter of the matching polytope.
"""

from fractions import Fraction

import numpy as np

from matchpoly.bounds import haf_k_barycenter_formula, perm_k_formula
from matchpoly.core import bipartite_embedding, complete_bipartite, make_sym_zero, num_pairs
from matchpoly.matchings import (
    count_k_matchings,
    haf_k,
    haf_k_by_enumeration,
    haf_k_recursive,
    perm_k,
)
from matchpoly.polytope import barycenter

# A random rational matrix of order 6.  Integers and Fractions keep the
# computation exact.
rng = np.random.default_rng(0)
b = make_sym_zero(6, [Fraction(int(rng.integers(0, 5)), int(rng.integers(1, 4))) for _ in range(num_pairs(6))])
for k in range(4):
    values = {haf_k(b, k), haf_k_recursive(b, k), haf_k_by_enumeration(b, k)}
    print(f"haf_{k}(B) = {values.pop()}   (all three methods agree: {not values})")

# At the barycenter A(K_2n)/(2n-1) the closed form is exact.
for n in (2, 3, 4):
    c = barycenter(2 * n)
    for k in range(2, n + 1):
        print(f"n={n} k={k}:  haf_k(C) = {haf_k(c, k)}  formula = {haf_k_barycenter_formula(n, k)}")

# The bipartite analogue: embedding J_n/n as a bipartite graph turns
# haf_k into perm_k.
j = complete_bipartite(3) * Fraction(1, 3)
for k in (1, 2, 3):
    print(f"k={k}: perm_k(J/3) = {perm_k(j, k)}  haf_k of embedding = {haf_k(bipartite_embedding(j), k)}  "
          f"formula = {perm_k_formula(3, k)}")

# For a 0/1 adjacency matrix haf_k counts k-matchings.
k6 = make_sym_zero(6, [1] * 15)
print("2-matchings of K6:", count_k_matchings(k6, 2))
