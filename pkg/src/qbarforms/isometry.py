"""Isometries of a bilinear space: reflections, exact verification, small
anisotropic vectors, and the effective Cartan-Dieudonne factorization into
at most 2L-1 reflections."""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import List, Optional, Tuple

from .certify import BoundCertificate, check
from .heights import HeightValue, height_gram, height_inhom, height_subspace, height_vector
from .linalg import MatrixA, Subspace, VectorA, constrained_kernel, contains
from .quadspace import NotRegular, QuadraticSpace
from .reduction import small_basis

__all__ = [
    "Isometry",
    "Reflection",
    "reflection",
    "is_isometry",
    "compose",
    "isometry_height",
    "small_anisotropic",
    "small_reflection",
    "cartan_dieudonne",
    "random_isometry",
    "NotAnIsometry",
    "AnisotropicRequired",
    "NoAnisotropicVector",
    "DomainMismatch",
]

SURROGATE_CAVEAT = "curly-H(sigma) is the concrete-matrix surrogate (upper bound for the minimal extension height)"
RANDOM_POOL_CAVEAT = "witness found outside the deterministic search pool"


class NotAnIsometry(ValueError):
    pass


class AnisotropicRequired(ValueError):
    pass


class NoAnisotropicVector(RuntimeError):
    pass


class DomainMismatch(ValueError):
    pass


class Isometry:
    """An N x N matrix A with A^t F A = F exactly, mapping Z onto Z, with
    det(A) = +-1; rotation iff det = +1."""

    def __init__(self, A: MatrixA, domain: QuadraticSpace, validate: bool = True):
        self.matrix = A
        self.domain = domain
        if validate and not is_isometry(domain, A):
            raise NotAnIsometry("matrix does not preserve the space")
        d = A.det()
        if (d - 1).is_zero():
            self.det = 1
        elif (d + 1).is_zero():
            self.det = -1
        else:
            raise NotAnIsometry("determinant is not +-1")

    @property
    def is_rotation(self) -> bool:
        return self.det == 1

    def apply(self, x: VectorA) -> VectorA:
        return self.matrix.matvec(x)

    def is_identity_on(self, Z: Optional[Subspace] = None) -> bool:
        Z = Z or self.domain.Z
        return all((self.apply(v) - v).is_zero() for v in Z.basis)

    def __eq__(self, other):
        return (
            isinstance(other, Isometry) and self.matrix == other.matrix
        )

    def to_json(self):
        return {"matrix": self.matrix.to_json(), "det": self.det}


def is_isometry(Q: QuadraticSpace, A: MatrixA) -> bool:
    if A.nrows != Q.N or A.ncols != Q.N:
        return False
    prod = A.transpose().matmul(Q.gram).matmul(A)
    if any(
        not (prod[i, j] - Q.gram[i, j]).is_zero()
        for i in range(Q.N)
        for j in range(Q.N)
    ):
        return False
    if not all(contains(Q.Z, A.matvec(v)) for v in Q.Z.basis):
        return False
    d = A.det()
    return (d - 1).is_zero() or (d + 1).is_zero()


@dataclass
class Reflection:
    vector: VectorA
    isometry: Isometry

    @property
    def matrix(self) -> MatrixA:
        return self.isometry.matrix

    def apply(self, x: VectorA) -> VectorA:
        return self.isometry.apply(x)

    def to_json(self):
        return {"vector": self.vector.to_json()}


def reflection(Q: QuadraticSpace, x: VectorA) -> Reflection:
    """tau_x(y) = y - 2 F(x,y)/F(x) * x; requires F(x) != 0 and x in Z."""
    fx = Q.evaluate(x)
    if fx.is_zero():
        raise AnisotropicRequired("reflection vector must be anisotropic")
    if not contains(Q.Z, x):
        raise DomainMismatch("reflection vector must lie in Z")
    img = Q.gram.matvec(x)  # (Fx)_j
    n = Q.N
    ctx = x.ctx
    rows = []
    for i in range(n):
        row = []
        for j in range(n):
            delta = ctx.one() if i == j else ctx.zero()
            row.append(delta - 2 * x[i] * img[j] / fx)
        rows.append(row)
    A = MatrixA(rows)
    tau = Isometry(A, Q)
    assert tau.det == -1
    assert (A.matmul(A) == MatrixA.identity(n, A.ctx)) or all(
        (A.matmul(A)[i, j] - (1 if i == j else 0)).is_zero()
        for i in range(n)
        for j in range(n)
    )
    assert (tau.apply(x) + x).is_zero()
    return Reflection(x, tau)


def compose(s: Isometry, t: Isometry, certify: bool = False):
    """(s o t); optionally also returns the Lemma-6.6 product certificate."""
    if s.domain.gram != t.domain.gram or s.domain.Z != t.domain.Z:
        raise DomainMismatch("isometries live on different spaces")
    prod = Isometry(s.matrix.matmul(t.matrix), s.domain)
    if not certify:
        return prod
    cert = check(
        "matrix_prod",
        height_gram(prod.matrix),
        {"HA": height_gram(s.matrix), "HB": height_gram(t.matrix)},
    )
    return prod, cert


def isometry_height(s: Isometry) -> HeightValue:
    """Height of the stored concrete matrix: an upper bound for the paper's
    minimal-extension height (see SURROGATE_CAVEAT)."""
    return height_gram(s.matrix)


def _condition_holds(Q, sigma, y):
    if Q.evaluate(y).is_zero():
        return None
    sy = sigma.apply(y)
    if not Q.evaluate(sy - y).is_zero():
        return "-"
    if not Q.evaluate(sy + y).is_zero():
        return "+"
    return None


def small_anisotropic(
    Q: QuadraticSpace, sigma: Isometry, seed: int = 0
) -> Tuple[VectorA, str, BoundCertificate]:
    """An anisotropic y in Z with sigma(y) +- y anisotropic for one sign.
    Deterministic pool first (small basis, pairwise sums/differences), then
    random small combinations with a growing coefficient bound."""
    if not Q.regular:
        raise NotRegular("small_anisotropic requires a regular space")
    sb = small_basis(Q.Z)
    pool = list(sb.vectors)
    m = len(sb.vectors)
    for i in range(m):
        for j in range(i + 1, m):
            pool.append(sb.vectors[i] + sb.vectors[j])
            pool.append(sb.vectors[i] - sb.vectors[j])
    if all(Q.evaluate(v).is_zero() for v in pool):
        # polarization: F(x_i, x_j) = 0 for all pairs, so F vanishes on Z
        raise NoAnisotropicVector("F restricted to Z is identically zero")
    witness = None
    sign = None
    from_pool = True
    for v in pool:
        s = _condition_holds(Q, sigma, v)
        if s is not None:
            witness, sign = v, s
            break
    if witness is None:
        from_pool = False
        rng = random.Random(seed)
        bound = 2
        while witness is None:
            for _ in range(20):
                v = VectorA([Q.Z.ctx.zero()] * Q.N)
                for b in sb.vectors:
                    v = v + b.scale(
                        Q.Z.ctx.from_rational(rng.randint(-bound, bound))
                    )
                if v.is_zero():
                    continue
                s = _condition_holds(Q, sigma, v)
                if s is not None:
                    witness, sign = v, s
                    break
            bound *= 2
    cert = check(
        "anis",
        height_inhom(witness),
        {"L": Q.L, "HZ": height_subspace(Q.Z)},
        caveats=[] if from_pool else [RANDOM_POOL_CAVEAT],
    )
    return witness, sign, cert


def small_reflection(
    Q: QuadraticSpace, seed: int = 0
) -> Tuple[Reflection, List[BoundCertificate]]:
    """A reflection of small height: tau at the small anisotropic vector
    for sigma = id, with the Lemma 6.2 and Corollary 6.3 certificates."""
    ident = Isometry(MatrixA.identity(Q.N, Q.gram.ctx), Q)
    y, _, anis_cert = small_anisotropic(Q, ident, seed=seed)
    tau = reflection(Q, y)
    h_tau = height_gram(tau.matrix)
    hf = height_gram(Q.gram)
    certs = [
        anis_cert,
        check(
            "ref_bound",
            h_tau,
            {"N": Q.N, "HF": hf, "HX": height_vector(y)},
        ),
        check(
            "isom_bound",
            h_tau,
            {"N": Q.N, "L": Q.L, "HF": hf, "HZ": height_subspace(Q.Z)},
        ),
    ]
    return tau, certs


def cartan_dieudonne(
    Q: QuadraticSpace, sigma: Isometry, seed: int = 0
) -> Tuple[List[Reflection], List[BoundCertificate]]:
    """Factors sigma into l <= 2L-1 reflections with exact recomposition on
    Z; [] iff sigma restricts to the identity.  Each reflection carries a
    cd_bound certificate (surrogate curly-H(sigma) on both sides)."""
    if not Q.regular:
        raise NotRegular("cartan_dieudonne requires a regular space")
    if not is_isometry(Q, sigma.matrix):
        raise NotAnIsometry("input does not preserve (Z, F)")
    h_sigma = isometry_height(sigma)
    hf = height_gram(Q.gram)
    hz = height_subspace(Q.Z)
    L = Q.L
    refs = _cd_rec(Q, sigma, seed)
    assert len(refs) <= 2 * L - 1
    # exact recomposition on Z
    acc = MatrixA.identity(Q.N, Q.gram.ctx)
    for r in refs:
        acc = acc.matmul(r.matrix)
    for v in Q.Z.basis:
        assert (acc.matvec(v) - sigma.apply(v)).is_zero()
    certs = [
        check(
            "cd_bound",
            height_gram(r.matrix),
            {"N": Q.N, "L": L, "HF": hf, "HZ": hz, "Hsigma": h_sigma},
            caveats=[SURROGATE_CAVEAT],
            provenance={"reflection": i + 1, "of": len(refs)},
        )
        for i, r in enumerate(refs)
    ]
    return refs, certs


def _cd_rec(Q: QuadraticSpace, sigma: Isometry, seed: int) -> List[Reflection]:
    if sigma.is_identity_on(Q.Z):
        return []
    if Q.L == 1:
        v = Q.Z.basis[0]
        assert (sigma.apply(v) + v).is_zero()  # sigma = -id on the line
        return [reflection(Q, v)]
    y, sign, _ = small_anisotropic(Q, sigma, seed=seed)
    sy = sigma.apply(y)
    if sign == "-":
        tau = reflection(Q, sy - y)
        prefix = [tau]
        sprime = compose(tau.isometry, sigma)
    else:
        tau_s = reflection(Q, sy)
        tau_p = reflection(Q, sy + y)
        prefix = [tau_s, tau_p]
        sprime = compose(tau_p.isometry, compose(tau_s.isometry, sigma))
    assert (sprime.apply(y) - y).is_zero()
    Z1 = constrained_kernel(Q.Z, MatrixA.from_columns([Q.gram.matvec(y)]))
    assert Z1.dim == Q.L - 1
    Q1 = Q.restrict(Z1)
    if not Q1.regular:
        raise NotRegular("orthogonal complement of an anisotropic vector "
                         "is singular (should be impossible)")
    sub = Isometry(sprime.matrix, Q1)
    return prefix + _cd_rec(Q1, sub, seed)


def random_isometry(
    Q: QuadraticSpace, rng: random.Random, max_reflections: Optional[int] = None
) -> Isometry:
    """A random product of reflections at random anisotropic vectors of Z
    (1 .. 2L-1 factors), for testing the factorization round trip."""
    if not Q.regular:
        raise NotRegular("random_isometry requires a regular space")
    cap = max_reflections or max(2 * Q.L - 1, 1)
    count = rng.randint(1, cap)
    acc = Isometry(MatrixA.identity(Q.N, Q.gram.ctx), Q)
    basis = list(Q.Z.basis)
    for _ in range(count):
        while True:
            v = VectorA([Q.Z.ctx.zero()] * Q.N)
            for b in basis:
                v = v + b.scale(Q.Z.ctx.from_rational(rng.randint(-3, 3)))
            if not v.is_zero() and not Q.evaluate(v).is_zero():
                break
        acc = compose(acc, reflection(Q, v).isometry)
    return acc
