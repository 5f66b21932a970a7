import random

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from tpnsi.bigraded import (
    IDENTITY_NAMES,
    InvalidPresentationError,
    LieAlgebraPresentation,
    StructuralError,
    build_basis,
    build_ce_complex,
    count_eigenvalues_le,
    library_names,
    load_library,
    norm_of,
    scaled_gram,
    scaled_gram_squared,
    split_differential,
    up_laplacian,
    verify_identities,
)

R = sp.Rational
rationals = st.fractions(min_value=R(1, 7), max_value=7, max_denominator=12).map(lambda f: R(f.numerator, f.denominator))


def complex_of(name):
    lie = load_library(name)
    return lie, build_basis(lie), build_ce_complex(lie)


def nonzero(mats):
    return [k for k, m in enumerate(mats) if not m.is_zero_matrix]


class TestLibrary:
    def test_contents(self):
        names = set(library_names())
        assert {"R2", "R3", "R4", "h3", "h5", "solvable3"} <= names

    @pytest.mark.parametrize("name", ["R2", "R3", "R4", "h3", "h5", "solvable3"])
    def test_identities_vanish(self, name):
        lie, basis, d = complex_of(name)
        for k in range(lie.dim):
            assert (d[k + 1] * d[k]).is_zero_matrix
        split = split_differential(d, basis)
        assert not split.residual_entries()
        for k in range(lie.dim + 1):
            assert split.total(k) == d[k]
        ids = verify_identities(split)
        assert tuple(ids) == IDENTITY_NAMES
        for mats in ids.values():
            assert all(m.is_zero_matrix for m in mats)

    @pytest.mark.parametrize("name", ["R2", "R3", "R4", "h3", "h5", "solvable3"])
    def test_round_trip(self, name):
        lie = load_library(name)
        assert LieAlgebraPresentation.loads(lie.dumps()) == lie


class TestBasis:
    @pytest.mark.parametrize("name", ["R3", "h3", "h5"])
    def test_bidegree_counts(self, name):
        lie = load_library(name)
        basis = build_basis(lie)
        assert sum(basis.size(k) for k in range(lie.dim + 1)) == 2**lie.dim
        for words in basis.monomials:
            for w in words:
                p, q = basis.bidegree(w)
                assert p <= len(lie.horizontal) and q <= len(lie.vertical)


class TestComplex:
    def test_abelian(self):
        _, _, d = complex_of("R3")
        assert nonzero(d) == []

    def test_h3(self):
        _, basis, d = complex_of("h3")
        d1 = d[1]
        col = basis.index((2,))
        assert d1[basis.index((0, 1)), col] == -1
        assert d1[:, basis.index((0,))].is_zero_matrix and d1[:, basis.index((1,))].is_zero_matrix

    def test_h5(self):
        _, basis, d = complex_of("h5")
        col = d[1][:, basis.index((4,))]
        expected = {basis.index((0, 2)): -1, basis.index((1, 3)): -1}
        assert {i: v for i, v in enumerate(col) if v != 0} == expected

    def test_jacobi_failure_names_triple(self):
        with pytest.raises(InvalidPresentationError, match=r"\(0, 1, 2\)"):
            LieAlgebraPresentation(3, {(0, 1, 2): 1, (1, 2, 1): 1}, (2,))

    def test_antisymmetric_input(self):
        a = LieAlgebraPresentation(3, {(1, 0, 2): -1}, (2,))
        assert a == load_library("h3")

    @pytest.mark.parametrize("bad", [
        "dim = 0",
        "dim = 3\nbracket 0 1 5 = 1",
        "dim = 3\nbracket 0 1 2 = 1\nbracket 0 1 2 = 2",
        "dim = 3\ncolour = red",
        "vertical = 1",
    ])
    def test_bad_files(self, bad):
        with pytest.raises((InvalidPresentationError, ValueError, TypeError)):
            LieAlgebraPresentation.loads(bad)

    def test_rational_constants_round_trip(self):
        lie = LieAlgebraPresentation(3, {(0, 1, 2): R(-3, 7)}, (2,))
        assert "bracket 0 1 2 = -3/7" in lie.dumps()
        assert LieAlgebraPresentation.loads(lie.dumps()).brackets == {(0, 1, 2): R(-3, 7)}


class TestSplit:
    def test_h3_only_d2m1(self):
        _, basis, d = complex_of("h3")
        split = split_differential(d, basis)
        assert split.D2m1[1] == d[1]
        assert split.D01[1].is_zero_matrix and split.D10[1].is_zero_matrix

    def test_abelian_all_zero(self):
        _, basis, d = complex_of("R4")
        split = split_differential(d, basis)
        assert nonzero(split.D01) == nonzero(split.D10) == nonzero(split.D2m1) == []

    def test_solvable_d10(self):
        _, basis, d = complex_of("solvable3")
        split = split_differential(d, basis)
        assert not split.D10[1].is_zero_matrix
        assert split.D01[1].is_zero_matrix and split.D2m1[1].is_zero_matrix
        assert split.D10[1][basis.index((0, 2)), basis.index((2,))] == -1

    def test_non_subalgebra_vertical(self):
        with pytest.raises(InvalidPresentationError, match="subalgebra"):
            LieAlgebraPresentation(3, {(0, 1, 2): 1}, (0, 1))
        lie = LieAlgebraPresentation(3, {(0, 1, 2): 1}, (0, 1), strict=False)
        basis = build_basis(lie)
        d = build_ce_complex(lie)
        with pytest.raises(StructuralError) as info:
            split_differential(d, basis)
        (k, src, dst, value), = info.value.entries
        assert (k, src, dst, value) == (1, (2,), (0, 1), -1)
        assert basis.bidegree(dst)[0] - basis.bidegree(src)[0] == -1
        assert split_differential(d, basis, allow_residual=True).residual_entries()


class TestGram:
    def test_identity_at_one(self):
        lie, basis, _ = complex_of("h3")
        g = scaled_gram(basis, 1, 1)
        for k in range(lie.dim + 1):
            assert all(w == 1 for w in g.weights[k])
        assert g.weights[0] == (1,)

    def test_example(self):
        _, basis, _ = complex_of("h3")
        assert norm_of({(0, 2): 1}, scaled_gram(basis, 2, 3)) == R(1, 36)

    def test_rejects(self):
        _, basis, _ = complex_of("h3")
        with pytest.raises(ValueError):
            scaled_gram(basis, 0, 1)
        with pytest.raises(TypeError):
            scaled_gram(basis, 0.5, 1)

    @given(st.integers(0, 2**32 - 1), rationals, rationals)
    @settings(max_examples=40)
    def test_orthogonality(self, seed, mu, nu):
        rng = random.Random(seed)
        lie, basis, _ = complex_of("h5")
        g = scaled_gram(basis, mu, nu)
        form = {}
        for _ in range(rng.randint(1, 8)):
            k = rng.randint(0, lie.dim)
            word = rng.choice(basis.monomials[k])
            form[word] = R(rng.randint(-9, 9), rng.randint(1, 9))
        # oracle: expand, then sum per-bidegree pieces
        by_bidegree = {}
        for w, c in form.items():
            by_bidegree.setdefault(basis.bidegree(w), {})[w] = c
        pieces = sum((norm_of(part, g) for part in by_bidegree.values()), R(0))
        direct = sum((mu ** (-2 * basis.bidegree(w)[0]) * nu ** (-2 * basis.bidegree(w)[1]) * c**2
                      for w, c in form.items()), R(0))
        assert norm_of(form, g) == pieces == direct

    def test_pure_bidegree_norm_scaling(self):
        _, basis, _ = complex_of("h5")
        form = {(0, 3): R(2, 3), (1, 2): R(-1, 5)}
        base = norm_of(form, scaled_gram(basis, 1, 1))
        assert norm_of(form, scaled_gram(basis, R(3, 2), R(5, 7))) == base * R(2, 3) ** 4


class TestLaplacian:
    def test_degree_zero(self):
        for name in ("h3", "h5", "solvable3"):
            lie, basis, d = complex_of(name)
            assert up_laplacian(0, d, scaled_gram(basis, 2, 3)).is_zero_matrix

    def test_h3_degree_one(self):
        _, basis, d = complex_of("h3")
        assert up_laplacian(1, d, scaled_gram(basis, 1, 1)) == sp.diag(0, 0, 1)
        assert up_laplacian(1, d, scaled_gram(basis, 2, 3)) == sp.diag(0, 0, R(9, 16))

    def test_top_degree(self):
        lie, basis, d = complex_of("h5")
        assert up_laplacian(lie.dim, d, scaled_gram(basis, 2, 3)).shape == (1, 1)

    def test_accepts_split(self):
        _, basis, d = complex_of("h5")
        g = scaled_gram(basis, R(1, 2), 3)
        split = split_differential(d, basis)
        assert all(up_laplacian(k, split, g) == up_laplacian(k, d, g) for k in range(6))

    @pytest.mark.parametrize("name", ["h3", "h5", "solvable3"])
    def test_self_adjoint_nonnegative(self, name):
        lie, basis, d = complex_of(name)
        g = scaled_gram(basis, R(2, 3), R(7, 5))
        for k in range(lie.dim + 1):
            L = up_laplacian(k, d, g)
            G = g.matrix(k)
            assert G * L == (G * L).T
            eig = np.linalg.eigvalsh(np.array((G * L).evalf(), dtype=float)) if L.rows else []
            assert all(e >= -1e-12 for e in eig)

    @pytest.mark.parametrize("trial", range(100))
    def test_uniform_scaling(self, trial):
        rng = random.Random(trial)
        name = rng.choice(["h3", "h5", "solvable3"])
        lie, basis, d = complex_of(name)
        mu, nu, lam = (R(rng.randint(1, 9), rng.randint(1, 9)) for _ in range(3))
        g1 = scaled_gram(basis, mu, nu)
        g2 = scaled_gram(basis, lam * mu, lam * nu)
        k = rng.randint(0, lie.dim)
        assert up_laplacian(k, d, g2) == up_laplacian(k, d, g1) / lam**2

    @given(rationals, rationals, st.fractions(min_value=R(1, 9), max_value=20, max_denominator=9),
           st.sampled_from(["h3", "h5", "solvable3"]), st.integers(0, 5))
    @settings(max_examples=40)
    def test_right_endpoint(self, mu, nu, lam0, name, k):
        lie, basis, d = complex_of(name)
        k = k % (lie.dim + 1)
        lam0 = R(lam0.numerator, lam0.denominator)
        left = count_eigenvalues_le(up_laplacian(k, d, scaled_gram(basis, mu, nu)), lam0)
        g = scaled_gram_squared(basis, lam0 * mu**2, lam0 * nu**2)
        right = count_eigenvalues_le(up_laplacian(k, d, g), 1)
        assert left == right

    def test_count_exact_at_eigenvalue(self):
        A = sp.diag(0, 0, R(9, 16))
        assert count_eigenvalues_le(A, R(9, 16)) == 3
        assert count_eigenvalues_le(A, R(9, 16) - R(1, 10**30)) == 2
        assert count_eigenvalues_le(A, -1) == 0
