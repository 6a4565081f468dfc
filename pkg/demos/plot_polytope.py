"""
The perfect-matching polytope
=============================

A symmetric zero-diagonal matrix belongs to the polytope when it is doubly
stochastic and every odd vertex set S with 3 <= |S| <= 2n-3 carries at most
|S| - 1 in total (ordered pairs).  Membership here is decided by scanning
all such sets.
"""

from fractions import Fraction

import numpy as np

from matchpoly.core import make_sym_zero, num_pairs, packed_index
from matchpoly.matchings import enumerate_perfect_matchings
from matchpoly.polytope import (
    barycenter,
    interior_witness,
    is_member,
    lmo_matching,
    matching_to_matrix,
    random_member,
    regular_graph_check,
    tangent_basis,
)

# The barycenter is inside, with slack on every odd set.
c = barycenter(6)
print("barycenter member:", bool(is_member(c)), " witness:", interior_witness(c))

# Two disjoint triangles scaled by 1/2: doubly stochastic but each
# triangle holds 2 * 3 * 1/2 = 3 > |S| - 1 = 2.
up = [0] * num_pairs(6)
for i, j in [(0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (4, 5)]:
    up[packed_index(i, j, 6)] = Fraction(1, 2)
triangles = make_sym_zero(6, up)
print("two triangles:", is_member(triangles).to_json())
print("as a 2-regular graph:", regular_graph_check(triangles.scaled(2), 2).to_json())

# Extreme points are perfect matchings; random convex combinations stay in.
rng = np.random.default_rng(1)
print("all 105 matchings of K8 are members:",
      all(is_member(matching_to_matrix(m)) for m in enumerate_perfect_matchings(8)))
print("random members:", [bool(is_member(random_member(8, rng), 1e-10)) for _ in range(5)])

# The tangent space: zero row sums, dimension N(N-1)/2 - N.
basis = tangent_basis(6)
print("tangent dimension at 2n=6:", len(basis))

# The linear oracle returns the cheapest perfect matching.
g = random_member(6, rng)
print("cheapest matching for a random cost:", lmo_matching(g))
