import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from qbarforms.linalg import (
    AmbientMismatch,
    MatrixA,
    RankDeficient,
    Subspace,
    VectorA,
    constrained_kernel,
    contains,
    grassmann,
    intersect,
    kernel,
)
from qbarforms.tower import QQ, adjoin_sqrt


def rand_subspace(rng, n, dim):
    while True:
        vecs = [[rng.randint(-5, 5) for _ in range(n)] for _ in range(dim)]
        s = Subspace.from_spanning(vecs, n)
        if s.dim == dim:
            return s


class TestKernel:
    def test_single_row(self):
        K = kernel(MatrixA([[1, 1, 1]]))
        assert K.dim == 2
        assert contains(K, VectorA([1, -1, 0]))

    def test_identity(self):
        assert kernel(MatrixA.identity(3)).dim == 0

    def test_tower_entries(self):
        ctx, g = adjoin_sqrt(QQ, 2)
        K = kernel(MatrixA([[ctx.one(), g]]))
        assert K.dim == 1
        assert contains(K, VectorA([-g, ctx.one()]))

    def test_kernel_vectors_annihilate(self):
        rng = random.Random(5)
        for _ in range(10):
            A = MatrixA([[rng.randint(-4, 4) for _ in range(5)] for _ in range(3)])
            K = kernel(A)
            for v in K.basis:
                assert A.matvec(v).is_zero()


class TestIntersect:
    def test_golden(self):
        U = Subspace.from_spanning([[1, 0, 0], [0, 1, 0]])
        V = Subspace.from_spanning([[0, 1, 0], [0, 0, 1]])
        W = intersect(U, V)
        assert W.dim == 1
        assert contains(W, VectorA([0, 1, 0]))

    def test_idempotent(self):
        U = Subspace.from_spanning([[1, 2, 3], [0, 1, 1]])
        assert intersect(U, U) == U

    def test_ambient_mismatch(self):
        with pytest.raises(AmbientMismatch):
            intersect(Subspace.full(2), Subspace.full(3))

    @settings(deadline=None, max_examples=40)
    @given(st.integers(min_value=0, max_value=10**9))
    def test_dimension_formula(self, seed):
        rng = random.Random(seed)
        n = rng.randint(2, 5)
        U = rand_subspace(rng, n, rng.randint(0, n))
        V = rand_subspace(rng, n, rng.randint(0, n))
        cap = intersect(U, V)
        cup = U.join(V)
        assert cap.dim + cup.dim == U.dim + V.dim
        for v in cap.basis:
            assert contains(U, v) and contains(V, v)


class TestGrassmann:
    def test_golden(self):
        X = MatrixA.from_columns([[1, 0, 1], [0, 1, 0]])
        g = grassmann(X)
        assert [e.rational_value() for e in g] == [1, 0, -1]

    def test_square_is_det(self):
        X = MatrixA([[1, 2], [3, 4]])
        g = grassmann(X)
        assert len(g) == 1 and g[0].rational_value() == -2

    def test_column_swap_negates(self):
        X = MatrixA.from_columns([[1, 2, 0], [0, 1, 3]])
        Y = MatrixA.from_columns([[0, 1, 3], [1, 2, 0]])
        gx, gy = grassmann(X), grassmann(Y)
        assert all((a + b).is_zero() for a, b in zip(gx, gy))

    def test_rank_deficient(self):
        with pytest.raises(RankDeficient):
            grassmann(MatrixA.from_columns([[1, 1], [2, 2]]))

    @settings(deadline=None, max_examples=30)
    @given(st.integers(min_value=0, max_value=10**9))
    def test_basis_change_scales_by_det(self, seed):
        rng = random.Random(seed)
        n, l = 4, 2
        U = rand_subspace(rng, n, l)
        X = U.basis_matrix()
        while True:
            C = MatrixA([[rng.randint(-3, 3) for _ in range(l)] for _ in range(l)])
            d = C.det()
            if not d.is_zero():
                break
        Y = X.matmul(C)
        gx, gy = grassmann(X), grassmann(Y)
        assert all((b - a * d).is_zero() for a, b in zip(gx, gy))

    def test_reordered_spanning_same_subspace(self):
        U = Subspace.from_spanning([[1, 2, 3], [4, 5, 6]])
        V = Subspace.from_spanning([[4, 5, 6], [1, 2, 3]])
        assert U == V
        assert U.grassmann_vector() == V.grassmann_vector()


class TestConstrainedKernel:
    def test_hyperbolic_worked_example(self):
        h = Fraction(1, 2)
        F = MatrixA(
            [[0, h, 0, 0], [h, 0, 0, 0], [0, 0, 0, h], [0, 0, h, 0]]
        )
        M = MatrixA.from_columns([F.column(0)])
        W = constrained_kernel(Subspace.full(4), M)
        assert W == Subspace.from_spanning([[1, 0, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]])

    def test_zero_matrix(self):
        Z = Subspace.from_spanning([[1, 1, 0], [0, 0, 1]])
        M = MatrixA([[0], [0], [0]])
        assert constrained_kernel(Z, M) == Z

    def test_identity_matrix(self):
        assert constrained_kernel(Subspace.full(3), MatrixA.identity(3)).dim == 0


class TestSubspace:
    def test_zero_subspace(self):
        Z = Subspace.zero(4)
        assert Z.dim == 0
        assert contains(Z, VectorA([0, 0, 0, 0]))
        assert not contains(Z, VectorA([1, 0, 0, 0]))
        assert len(Z.grassmann_vector()) == 1

    def test_membership_scaling(self):
        U = Subspace.from_spanning([[2, 2]])
        assert contains(U, VectorA([1, 1]))
        assert not contains(U, VectorA([1, 2]))

    def test_canonical_equality(self):
        U = Subspace.from_spanning([[2, 4, 0], [1, 1, 1]])
        V = Subspace.from_spanning([[1, 2, 0], [0, 1, -1]])
        assert U == V

    def test_json_roundtrip(self):
        ctx, g = adjoin_sqrt(QQ, 3)
        U = Subspace.from_spanning([[ctx.one(), g, 0], [0, g, 1]])
        data = U.to_json()
        assert Subspace.from_json(data) == U

    def test_matrix_json_roundtrip(self):
        ctx, g = adjoin_sqrt(QQ, 5)
        M = MatrixA([[1 + g, 2], [Fraction(1, 3), g]])
        assert MatrixA.from_json(M.to_json()) == M
