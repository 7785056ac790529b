import random
from fractions import Fraction

import pytest

from qbarforms.isometry import (
    AnisotropicRequired,
    Isometry,
    NoAnisotropicVector,
    NotAnIsometry,
    cartan_dieudonne,
    compose,
    is_isometry,
    isometry_height,
    random_isometry,
    reflection,
    small_anisotropic,
    small_reflection,
)
from qbarforms.linalg import MatrixA, Subspace, VectorA
from qbarforms.quadspace import NotRegular, QuadraticSpace

HALF = Fraction(1, 2)
HYP2 = MatrixA([[0, HALF], [HALF, 0]])
DIAG2 = MatrixA.identity(2)


def ident(Q):
    return Isometry(MatrixA.identity(Q.N, Q.gram.ctx), Q)


def rand_regular(rng, n, bound=4):
    while True:
        e = [[Fraction(rng.randint(-bound, bound)) for _ in range(n)] for _ in range(n)]
        for i in range(n):
            for j in range(i):
                e[i][j] = e[j][i]
        Q = QuadraticSpace(MatrixA(e))
        if Q.regular:
            return Q


class TestReflection:
    def test_diag_e1(self):
        Q = QuadraticSpace(DIAG2)
        r = reflection(Q, VectorA([1, 0]))
        assert r.matrix == MatrixA([[-1, 0], [0, 1]])
        assert r.isometry.det == -1

    def test_hyperbolic_swap(self):
        Q = QuadraticSpace(HYP2)
        r = reflection(Q, VectorA([1, 1]))
        assert r.matrix == MatrixA([[0, -1], [-1, 0]])

    def test_isotropic_rejected(self):
        Q = QuadraticSpace(HYP2)
        with pytest.raises(AnisotropicRequired):
            reflection(Q, VectorA([1, 0]))

    def test_involution_random(self):
        rng = random.Random(11)
        for _ in range(10):
            Q = rand_regular(rng, rng.randint(2, 4))
            while True:
                v = VectorA([Fraction(rng.randint(-3, 3)) for _ in range(Q.N)])
                if not v.is_zero() and not Q.evaluate(v).is_zero():
                    break
            r = reflection(Q, v)
            sq = r.matrix.matmul(r.matrix)
            assert sq == MatrixA.identity(Q.N, sq.ctx)
            assert r.isometry.det == -1


class TestIsIsometry:
    def test_golden(self):
        Q = QuadraticSpace(DIAG2)
        assert is_isometry(Q, MatrixA([[-1, 0], [0, 1]]))
        assert not is_isometry(Q, MatrixA([[2, 0], [0, 2]]))
        rot = MatrixA(
            [[Fraction(3, 5), Fraction(-4, 5)], [Fraction(4, 5), Fraction(3, 5)]]
        )
        assert is_isometry(Q, rot)
        assert Isometry(rot, Q).is_rotation

    def test_invalid_raises(self):
        Q = QuadraticSpace(DIAG2)
        with pytest.raises(NotAnIsometry):
            Isometry(MatrixA([[2, 0], [0, 2]]), Q)


class TestCompose:
    def test_involution_gives_identity(self):
        Q = QuadraticSpace(DIAG2)
        r = reflection(Q, VectorA([1, 0])).isometry
        assert compose(r, r).is_identity_on()

    def test_two_reflections_rotate(self):
        Q = QuadraticSpace(DIAG2)
        a = reflection(Q, VectorA([1, 0])).isometry
        b = reflection(Q, VectorA([1, 1])).isometry
        prod = compose(a, b)
        assert prod.det == 1

    def test_certificate(self):
        Q = QuadraticSpace(DIAG2)
        a = reflection(Q, VectorA([1, 2])).isometry
        b = reflection(Q, VectorA([2, 1])).isometry
        prod, cert = compose(a, b, certify=True)
        assert cert.bound_id == "matrix_prod" and cert.verdict == "verified"


class TestIsometryHeight:
    def test_identity_sqrt_n(self):
        for n in (2, 3, 4):
            Q = QuadraticSpace(MatrixA.identity(n))
            h = isometry_height(ident(Q))
            assert h.interval(128).sq().contains(n)

    def test_sign_flip(self):
        Q = QuadraticSpace(DIAG2)
        h = isometry_height(Isometry(MatrixA([[-1, 0], [0, 1]]), Q))
        assert h.interval(128).sq().contains(2)

    def test_negation_invariance(self):
        rng = random.Random(2)
        Q = rand_regular(rng, 3)
        s = random_isometry(Q, rng)
        neg = MatrixA([[-e for e in row] for row in s.matrix.rows])
        h1 = isometry_height(s).interval(160)
        h2 = isometry_height(Isometry(neg, Q)).interval(160)
        assert h1.overlaps(h2)


class TestSmallAnisotropic:
    def test_diag(self):
        Q = QuadraticSpace(MatrixA([[1, 0], [0, -1]]))
        y, sign, cert = small_anisotropic(Q, ident(Q))
        assert not Q.evaluate(y).is_zero()
        assert cert.verdict == "verified" and cert.caveats == []

    def test_hyperbolic_needs_sum(self):
        Q = QuadraticSpace(HYP2)
        y, sign, cert = small_anisotropic(Q, ident(Q))
        assert str(y) in ("(1, 1)", "(1, -1)")

    def test_zero_form(self):
        Z = Subspace.from_spanning([[1, 0]], 2)
        G = MatrixA([[0, 0], [0, 1]])
        Q = QuadraticSpace(G, Z)
        with pytest.raises((NoAnisotropicVector, NotRegular)):
            small_anisotropic(Q, ident(Q))

    def test_condition_on_random_isometries(self):
        rng = random.Random(19)
        for _ in range(10):
            Q = rand_regular(rng, rng.randint(2, 3))
            s = random_isometry(Q, rng)
            y, sign, cert = small_anisotropic(Q, s)
            shifted = s.apply(y) - y if sign == "-" else s.apply(y) + y
            assert not Q.evaluate(shifted).is_zero()


class TestSmallReflection:
    def test_diag_golden(self):
        Q = QuadraticSpace(DIAG2)
        tau, certs = small_reflection(Q)
        assert tau.isometry.det == -1
        ids = [c.bound_id for c in certs]
        assert "ref_bound" in ids and "isom_bound" in ids and "anis" in ids
        assert all(c.verdict == "verified" for c in certs)

    def test_not_regular(self):
        with pytest.raises(NotRegular):
            small_reflection(QuadraticSpace(MatrixA([[1, 0], [0, 0]])))


class TestCartanDieudonne:
    def test_identity_empty(self):
        Q = QuadraticSpace(DIAG2)
        refs, certs = cartan_dieudonne(Q, ident(Q))
        assert refs == [] and certs == []

    def test_single_reflection(self):
        Q = QuadraticSpace(DIAG2)
        tau = reflection(Q, VectorA([1, 2]))
        refs, certs = cartan_dieudonne(Q, tau.isometry)
        assert len(refs) == 1
        assert all("surrogate" in c.caveats[0] for c in certs)

    def test_minus_identity(self):
        Q = QuadraticSpace(DIAG2)
        neg = Isometry(MatrixA([[-1, 0], [0, -1]]), Q)
        refs, _ = cartan_dieudonne(Q, neg)
        assert len(refs) == 2
        acc = refs[0].matrix.matmul(refs[1].matrix)
        assert acc == MatrixA([[-1, 0], [0, -1]])

    def test_roundtrip_campaign(self):
        rng = random.Random(41)
        for _ in range(15):
            Q = rand_regular(rng, rng.randint(2, 3))
            s = random_isometry(Q, rng)
            refs, certs = cartan_dieudonne(Q, s)
            assert len(refs) <= 2 * Q.L - 1
            acc = MatrixA.identity(Q.N, Q.gram.ctx)
            for r in refs:
                acc = acc.matmul(r.matrix)
            for v in Q.Z.basis:
                assert (acc.matvec(v) - s.apply(v)).is_zero()
            assert all(c.verdict == "verified" for c in certs)

    def test_zero1_invariant(self):
        # F(sigma(x) - x, sigma(x) + x) = 0 for every x in Z
        rng = random.Random(55)
        Q = rand_regular(rng, 3)
        s = random_isometry(Q, rng)
        for _ in range(10):
            x = VectorA([Fraction(rng.randint(-4, 4)) for _ in range(3)])
            sx = s.apply(x)
            assert Q.evaluate(sx - x, sx + x).is_zero()

    def test_not_an_isometry(self):
        # scaling preserves x1 x2 but not diag(1,1)
        Q = QuadraticSpace(DIAG2)
        scaler = Isometry(
            MatrixA([[2, 0], [0, HALF]]), QuadraticSpace(HYP2)
        )
        with pytest.raises(NotAnIsometry):
            cartan_dieudonne(Q, scaler)
