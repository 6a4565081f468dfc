import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_float, random_rational
from matchpoly.core import (
    ConvergenceError,
    bipartite_embedding,
    complete_bipartite,
    complete_graph,
    direct_sum,
    from_dense,
    jacobi_eigenvalues,
    load_matrix,
    make_sym_zero,
    packed_index,
    pair_list,
    principal_submatrix,
    save_matrix,
    sym_eigenvalues,
)


class TestConstruction:
    def test_smallest(self):
        b = make_sym_zero(2, [1])
        assert b.to_dense().tolist() == [[0, 1], [1, 0]]
        assert b.exact

    def test_third_of_k4_is_stochastic(self):
        b = make_sym_zero(4, [Fraction(1, 3)] * 6)
        assert all(r == 1 for r in b.row_sums())
        assert b.total_sum() == 4

    def test_wrong_arity(self):
        with pytest.raises(ValueError):
            make_sym_zero(4, [1] * 5)

    @pytest.mark.parametrize("bad", [float("nan"), float("inf")])
    def test_non_finite(self, bad):
        with pytest.raises(ValueError):
            make_sym_zero(3, [1.0, bad, 0.0])

    def test_order_too_small(self):
        with pytest.raises(ValueError):
            make_sym_zero(1, [])

    def test_packed_order_is_row_major(self):
        order = 5
        for pos, (i, j) in enumerate(pair_list(order)):
            assert packed_index(i, j, order) == pos
            assert packed_index(j, i, order) == pos

    def test_float_regime(self):
        b = make_sym_zero(3, [0.5, 1, 2])
        assert not b.exact
        assert b.upper.dtype == np.float64


class TestCanonicalMatrices:
    @pytest.mark.parametrize("two_n", [4, 6])
    def test_complete_graph_rows(self, two_n):
        a = complete_graph(two_n)
        assert all(r == two_n - 1 for r in a.row_sums())
        c = a.scaled(Fraction(1, two_n - 1))
        assert all(r == 1 for r in c.row_sums())

    @pytest.mark.parametrize("bad", [0, 3, -2])
    def test_complete_graph_rejects(self, bad):
        with pytest.raises(ValueError):
            complete_graph(bad)

    def test_complete_bipartite(self):
        c = complete_bipartite(2)
        assert c.shape == (2, 2) and all(v == 1 for v in c.ravel())
        e = bipartite_embedding(c)
        assert e.order == 4
        dense = e.to_dense()
        assert dense[0, 1] == 0 and dense[2, 3] == 0 and dense[0, 2] == 1
        third = bipartite_embedding(complete_bipartite(3) * Fraction(1, 3))
        assert all(r == 1 for r in third.row_sums())
        with pytest.raises(ValueError):
            complete_bipartite(0)


class TestSubmatrixAndSum:
    def test_restriction_of_complete_graph(self):
        sub = principal_submatrix(complete_graph(6), [0, 1, 2, 3])
        assert sub.order == 4 and all(v == 1 for v in sub.upper)

    def test_singleton_and_full(self, rng):
        b = random_rational(5, rng)
        assert principal_submatrix(b, [2]).order == 1
        full = principal_submatrix(b, range(5))
        assert list(full.upper) == list(b.upper)

    def test_out_of_range(self):
        with pytest.raises(IndexError):
            principal_submatrix(complete_graph(4), [0, 4])

    @settings(max_examples=40, deadline=None)
    @given(st.integers(4, 8), st.data())
    def test_submatrix_composes(self, order, data):
        b = make_sym_zero(order, list(range(1, order * (order - 1) // 2 + 1)))
        s = data.draw(st.lists(st.integers(0, order - 1), min_size=2, max_size=order, unique=True))
        t = data.draw(st.lists(st.integers(0, len(s) - 1), min_size=1, max_size=len(s), unique=True))
        nested = principal_submatrix(principal_submatrix(b, s), t)
        direct = principal_submatrix(b, [s[i] for i in t])
        assert list(nested.upper) == list(direct.upper)

    def test_direct_sum_blocks(self):
        d = direct_sum(make_sym_zero(2, [1]), make_sym_zero(2, [1]))
        assert d.order == 4
        assert d[0, 1] == 1 and d[2, 3] == 1
        assert sum(d.upper) == 2


class TestEigenvalues:
    @pytest.mark.parametrize("two_n", [4, 6, 8])
    def test_complete_graph_spectrum(self, two_n):
        spectrum = sym_eigenvalues(complete_graph(two_n))
        assert spectrum.eigenvalues[0] == pytest.approx(two_n - 1, abs=1e-10)
        assert np.allclose(spectrum.eigenvalues[1:], -1, atol=1e-10)
        scaled = sym_eigenvalues(complete_graph(two_n).scaled(Fraction(1, two_n - 1)))
        assert scaled.num_positive == 1
        assert np.allclose(scaled.eigenvalues[1:], -1 / (two_n - 1), atol=1e-12)

    def test_two_by_two(self):
        assert sym_eigenvalues(make_sym_zero(2, [1])).eigenvalues == pytest.approx((1, -1))

    def test_against_lapack(self, rng):
        for order in range(2, 13):
            b = random_float(order, rng, -1, 1)
            ours = sym_eigenvalues(b).eigenvalues
            ref = np.sort(np.linalg.eigvalsh(b.to_dense()))[::-1]
            assert np.allclose(ours, ref, atol=1e-10 * max(1, np.abs(ref).max()))

    def test_zero_trace(self, rng):
        for order in range(2, 10):
            spectrum = sym_eigenvalues(random_float(order, rng))
            assert abs(sum(spectrum.eigenvalues)) <= 10 * 1e-9 * spectrum.radius

    def test_direct_sum_spectrum_is_union(self, rng):
        b1, b2 = random_float(3, rng), random_float(4, rng)
        joined = sym_eigenvalues(direct_sum(b1, b2)).eigenvalues
        union = sorted(sym_eigenvalues(b1).eigenvalues + sym_eigenvalues(b2).eigenvalues, reverse=True)
        assert np.allclose(joined, union, atol=1e-10)

    def test_iteration_cap(self, rng):
        with pytest.raises(ConvergenceError):
            jacobi_eigenvalues(random_float(8, rng).to_dense(), max_sweeps=1)

    def test_bad_tol(self):
        with pytest.raises(ValueError):
            sym_eigenvalues(complete_graph(4), tol=0)


class TestFiles:
    def test_json_round_trip_exact(self, tmp_path, rng):
        b = random_rational(5, rng)
        path = tmp_path / "b.json"
        save_matrix(b, path)
        back = load_matrix(path)
        assert back.exact and list(back.upper) == list(b.upper)
        assert json.loads(path.read_text())["order"] == 5

    def test_csv_round_trip(self, tmp_path, rng):
        b = random_float(4, rng)
        path = tmp_path / "b.csv"
        save_matrix(b, path)
        assert np.array_equal(load_matrix(path).upper, b.upper)

    def test_csv_rejects_asymmetric(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("0,1\n1.1,0\n")
        with pytest.raises(ValueError):
            load_matrix(path)

    def test_csv_tolerance(self, tmp_path):
        path = tmp_path / "ok.csv"
        path.write_text("0,1\n1.0000000000001,0\n")
        assert load_matrix(path).order == 2
        with pytest.raises(ValueError):
            from_dense([[1e-6, 1], [1, 0]])
