"""Quadratic/bilinear space constructions: radicals, small zeros, maximal
totally isotropic subspaces, hyperbolic planes, Witt decompositions, and
orthogonal bases.

Every output passes exact algebraic verification (isotropy, orthogonality,
hyperbolic relations, span equality); the accompanying height inequalities
are certified separately as three-valued interval verdicts.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Tuple

from .certify import BoundCertificate, check
from .heights import (
    height_gram,
    height_inhom,
    height_subspace,
    height_vector,
)
from .linalg import (
    AmbientMismatch,
    MatrixA,
    Subspace,
    VectorA,
    constrained_kernel,
    contains,
)
from .reduction import small_basis
from .tower import adjoin_sqrt

__all__ = [
    "QuadraticSpace",
    "HyperbolicPlane",
    "WittDecomposition",
    "MaxIsotropic",
    "evaluate",
    "radical_split",
    "small_zero_free",
    "isotropic_in_space",
    "max_isotropic",
    "hyperbolic_pair",
    "witt_decompose",
    "orthogonal_basis",
    "NotRegular",
    "DimensionTooSmall",
    "ZeroForm",
    "AnisotropicInput",
    "RadicalVector",
    "ContradictsRegularity",
    "AsymmetricGram",
]


class NotRegular(ValueError):
    pass


class DimensionTooSmall(ValueError):
    pass


class ZeroForm(ValueError):
    pass


class AnisotropicInput(ValueError):
    pass


class RadicalVector(ValueError):
    pass


class ContradictsRegularity(RuntimeError):
    pass


class AsymmetricGram(ValueError):
    pass


class QuadraticSpace:
    """A symmetric bilinear form F on the ambient space, restricted to a
    subspace Z; radical/rank/regularity are computed exactly and cached."""

    def __init__(self, gram: MatrixA, Z: Optional[Subspace] = None):
        if not gram.is_symmetric():
            raise AsymmetricGram("Gram matrix must be exactly symmetric")
        self.gram = gram
        self.N = gram.nrows
        if Z is None:
            Z = Subspace.full(self.N, gram.ctx)
        if Z.ambient != self.N:
            raise AmbientMismatch("subspace ambient does not match the form")
        self.Z = Z
        self.L = Z.dim
        self._radical: Optional[Subspace] = None

    def evaluate(self, x: VectorA, y: Optional[VectorA] = None):
        if y is None:
            y = x
        if len(x) != self.N or len(y) != self.N:
            raise AmbientMismatch("vector length does not match the form")
        return x.dot(self.gram.matvec(y))

    def restricted_gram(self) -> MatrixA:
        B = self.Z.basis
        return MatrixA(
            [[self.evaluate(u, v) for v in B] for u in B]
        )

    @property
    def radical(self) -> Subspace:
        if self._radical is None:
            if self.L == 0:
                self._radical = Subspace.zero(self.N)
            else:
                imgs = [self.gram.matvec(v) for v in self.Z.basis]
                self._radical = constrained_kernel(
                    self.Z, MatrixA.from_columns(imgs)
                )
        return self._radical

    @property
    def rank(self) -> int:
        return self.L - self.radical.dim

    @property
    def regular(self) -> bool:
        return self.radical.dim == 0

    @property
    def witt_index(self) -> int:
        if not self.regular:
            raise NotRegular("Witt index is stored for regular spaces")
        return self.L // 2

    def restrict(self, W: Subspace) -> "QuadraticSpace":
        return QuadraticSpace(self.gram, W)

    def to_json(self):
        return {"gram": self.gram.to_json(), "Z": self.Z.to_json()}


def evaluate(Q: QuadraticSpace, x: VectorA, y: Optional[VectorA] = None):
    return Q.evaluate(x, y)


def _basis_image_matrix(Q: QuadraticSpace, vectors) -> MatrixA:
    return MatrixA.from_columns([Q.gram.matvec(v) for v in vectors])


def radical_split(
    Q: QuadraticSpace,
) -> Tuple[Subspace, Subspace, List[BoundCertificate]]:
    """Z = radical ⟂ W with W regular; returns certificates for the
    heights of both components."""
    certs: List[BoundCertificate] = []
    if Q.L == 0:
        return Subspace.zero(Q.N), Subspace.zero(Q.N), certs
    sb = small_basis(Q.Z)
    rad = constrained_kernel(Q.Z, _basis_image_matrix(Q, sb.vectors))
    # complement of the radical from the small basis: any complement is
    # automatically F-orthogonal to the radical and regular.  (Selecting by
    # independent images F.x instead can pick radical vectors: v in the
    # radical has F.v orthogonal to Z but not necessarily zero.)
    picked: List[VectorA] = []
    acc = rad
    for v in sb.vectors:
        trial = acc.join(Subspace.from_spanning([v], Q.N))
        if trial.dim > acc.dim:
            picked.append(v)
            acc = trial
    W = Subspace.from_spanning(picked, Q.N)
    r = W.dim
    assert rad.dim + r == Q.L
    assert rad.join(W) == Q.Z
    for u in rad.basis:
        for v in picked:
            assert Q.evaluate(u, v).is_zero()
    QW = Q.restrict(W)
    assert QW.regular
    zero_form = all(e.is_zero() for row in Q.gram.rows for e in row)
    hz = height_subspace(Q.Z)
    if 0 < rad.dim and not zero_form:
        # curly-H(F) is undefined for the zero form; regular2 needs it
        certs.append(
            check(
                "regular2",
                height_subspace(rad),
                {"L": Q.L, "r": r, "HF": height_gram(Q.gram), "HZ": hz},
            )
        )
    if 0 < r:
        certs.append(
            check("regular3", height_subspace(W), {"L": Q.L, "HZ": hz})
        )
    return rad, W, certs


def small_zero_free(F: MatrixA):
    """A nonzero isotropic vector of an N-variable form, N >= 2, with the
    H(x) <= 2 sqrt(curly-H(F)) certificate.  Returns (x, certificate, note).
    """
    if not F.is_symmetric():
        raise AsymmetricGram("Gram matrix must be exactly symmetric")
    n = F.nrows
    if n < 2:
        raise DimensionTooSmall("need at least two variables")
    ctx = F.ctx
    if all(e.is_zero() for row in F.rows for e in row):
        x = _unit(ctx, n, 0)
        return x, None, "form identically zero; every vector is isotropic"
    note = None
    diag_zero = next((i for i in range(n) if F[i, i].is_zero()), None)
    if diag_zero is not None:
        x = _unit(ctx, n, diag_zero)
    else:
        # restrict to (X1, X2): f11 a^2 + 2 f12 a + f22 = 0
        f11, f12, f22 = F[0, 0], F[0, 1], F[1, 1]
        disc = f12 * f12 - f11 * f22
        ctx2, s = adjoin_sqrt(ctx, disc)
        alpha = (s - f12) / (f11 + ctx2.zero())
        x = VectorA(
            [alpha, ctx2.one()] + [ctx2.zero()] * (n - 2)
        )
    val = x.dot(F.matvec(x))
    assert val.is_zero()
    cert = check("qz_bound", height_vector(x), {"HF": height_gram(F)})
    return x, cert, note


def _unit(ctx, n, i):
    e = [ctx.zero()] * n
    e[i] = ctx.one()
    return VectorA(e)


def isotropic_in_space(
    Q: QuadraticSpace,
) -> Tuple[VectorA, BoundCertificate]:
    """A nonzero isotropic vector in a regular space of dimension >= 2,
    via the binary form on the two smallest small-basis vectors."""
    if Q.L < 2:
        raise DimensionTooSmall("need dim Z >= 2")
    if not Q.regular:
        raise NotRegular("isotropic_in_space requires a regular space")
    sb = small_basis(Q.Z)
    z1, z2 = sb.vectors[0], sb.vectors[1]
    G = MatrixA(
        [
            [Q.evaluate(z1, z1), Q.evaluate(z1, z2)],
            [Q.evaluate(z2, z1), Q.evaluate(z2, z2)],
        ]
    )
    a, _, _ = small_zero_free(G)
    y = z1.scale(a[0]) + z2.scale(a[1])
    assert not y.is_zero()
    assert Q.evaluate(y).is_zero()
    cert = check(
        "zero_eq",
        height_vector(y),
        {
            "L": Q.L,
            "HF": height_gram(Q.gram),
            "HZ": height_subspace(Q.Z),
        },
    )
    return y, cert


@dataclass
class MaxIsotropic:
    subspace: Subspace
    certificates: List[BoundCertificate]
    trace: List[dict] = field(default_factory=list)

    def to_json(self):
        return {
            "subspace": self.subspace.to_json(),
            "certificates": [c.to_json() for c in self.certificates],
            "trace": self.trace,
        }


def _binary_zeros(c11, c12, c22, ctx):
    """Projective zeros (a, b) of c11 a^2 + 2 c12 ab + c22 b^2, as one or
    two exact points (two coincide at a double root)."""
    if c11.is_zero() and c12.is_zero() and c22.is_zero():
        return None  # identically zero
    if c11.is_zero():
        first = (ctx.one(), ctx.zero())
        if c12.is_zero():
            return [first]
        # b (2 c12 a + c22 b) = 0
        return [first, (-c22, c12 + c12)]
    disc = c12 * c12 - c11 * c22
    ctx2, s = adjoin_sqrt(disc.ctx, disc)
    roots = [(s - c12) / (c11 + ctx2.zero())]
    if not s.is_zero():
        roots.append((-s - c12) / (c11 + ctx2.zero()))
    return [(r, r.ctx.one()) for r in roots]


def _regular_sub_from(Q: QuadraticSpace, vectors, size):
    """The first regular `size`-subset of the given vectors, scanned in
    ascending-height order; None if every subset is singular."""
    for idx in itertools.combinations(range(len(vectors)), size):
        W = Subspace.from_spanning([vectors[i] for i in idx], Q.N)
        if W.dim == size and Q.restrict(W).regular:
            return W
    return None


def _max_iso_even(Q: QuadraticSpace, certs, trace, level=0) -> Subspace:
    L = Q.L
    k = L // 2
    if k == 1:
        y, cert = isotropic_in_space(Q)
        certs.append(cert)
        V = Subspace.from_spanning([y], Q.N)
        certs.append(
            check(
                "vaaler_even",
                height_subspace(V),
                {
                    "k": 1,
                    "HF": height_gram(Q.gram),
                    "HZ": height_subspace(Q.Z),
                },
                provenance={"level": level, "site": "even base case"},
            )
        )
        return V
    sb = small_basis(Q.Z)
    Z1 = _regular_sub_from(Q, sb.vectors, L - 2)
    if Z1 is None:
        raise ContradictsRegularity(
            "no regular (L-2)-subset among the small basis"
        )
    U = _max_iso_even(Q.restrict(Z1), certs, trace, level + 1)
    W = constrained_kernel(Q.Z, _basis_image_matrix(Q, U.basis))
    assert W.dim == k + 1
    wsb = small_basis(W)
    picks: List[VectorA] = []
    span = U
    for v in wsb.vectors:
        trial = span.join(Subspace.from_spanning([v], Q.N))
        if trial.dim > span.dim:
            picks.append(v)
            span = trial
        if len(picks) == 2:
            break
    w1, w2 = picks
    zeros = _binary_zeros(
        Q.evaluate(w1, w1), Q.evaluate(w1, w2), Q.evaluate(w2, w2), Q.Z.ctx
    )
    if zeros is None:
        raise ContradictsRegularity(
            "binary form G vanishes identically on W outside U"
        )
    candidates = []
    for a, b in zeros:
        w = w1.scale(a) + w2.scale(b)
        assert Q.evaluate(w).is_zero()
        candidates.append(U.join(Subspace.from_spanning([w], Q.N)))
    heights = [height_subspace(V) for V in candidates]
    if len(candidates) == 1:
        candidates.append(candidates[0])
        heights.append(heights[0])
    winner = 0 if heights[0].mid() <= heights[1].mid() else 1
    certs.append(
        check(
            "bezout",
            [heights[0], heights[1]],
            {"HW": height_subspace(W), "HF": height_gram(Q.gram)},
            provenance={"level": level, "site": "candidate pair"},
        )
    )
    trace.append(
        {
            "level": level,
            "U": [str(v) for v in U.basis],
            "W": [str(v) for v in W.basis],
            "G": [
                str(Q.evaluate(w1, w1)),
                str(Q.evaluate(w1, w2)),
                str(Q.evaluate(w2, w2)),
            ],
            "candidates": [
                [str(v) for v in V.basis] for V in candidates
            ],
            "heights": [str(h) for h in heights],
            "winner": winner,
        }
    )
    return candidates[winner]


def _max_iso_odd(Q: QuadraticSpace, certs, trace, level=0) -> Subspace:
    L = Q.L
    if L == 1:
        return Subspace.zero(Q.N)
    sb = small_basis(Q.Z)
    Z1 = Subspace.from_spanning(sb.vectors[: L - 1], Q.N)
    Q1 = Q.restrict(Z1)
    if Q1.regular:
        return _max_iso_even(Q1, certs, trace, level + 1)
    rad, W1, split_certs = radical_split(Q1)
    certs.extend(split_certs)
    assert rad.dim == 1
    U = _max_iso_odd(Q.restrict(W1), certs, trace, level + 1)
    return rad.join(U)


def max_isotropic(Q: QuadraticSpace) -> MaxIsotropic:
    if not Q.regular:
        raise NotRegular("max_isotropic requires a regular space")
    certs: List[BoundCertificate] = []
    trace: List[dict] = []
    L = Q.L
    k = L // 2
    if L % 2 == 0 and L > 0:
        V = _max_iso_even(Q, certs, trace)
    else:
        V = _max_iso_odd(Q, certs, trace)
    assert V.dim == k
    for u in V.basis:
        for w in V.basis:
            assert Q.evaluate(u, w).is_zero()
    assert Q.Z.join(V) == Q.Z
    if k >= 1:
        bound_id = "vaaler_even" if L % 2 == 0 else "vaaler_odd"
        certs.append(
            check(
                bound_id,
                height_subspace(V),
                {
                    "k": k,
                    "HF": height_gram(Q.gram),
                    "HZ": height_subspace(Q.Z),
                },
                provenance={"site": "final"},
            )
        )
    return MaxIsotropic(V, certs, trace)


@dataclass
class HyperbolicPlane:
    x: VectorA
    y: VectorA
    span: Subspace
    certificate: Optional[BoundCertificate] = None

    def to_json(self):
        return {
            "x": self.x.to_json(),
            "y": self.y.to_json(),
            "certificate": self.certificate.to_json()
            if self.certificate
            else None,
        }


def hyperbolic_pair(Q: QuadraticSpace, x: VectorA) -> HyperbolicPlane:
    """Completes an isotropic x (outside the radical) to an exact
    hyperbolic pair F(x) = F(y) = 0, F(x, y) = 1."""
    if not contains(Q.Z, x) or x.is_zero():
        raise AmbientMismatch("x must be a nonzero vector of Z")
    if not Q.evaluate(x).is_zero():
        raise AnisotropicInput("x must be isotropic")
    yprime = None
    c = None
    for v in small_basis(Q.Z).vectors:
        val = Q.evaluate(x, v)
        if not val.is_zero():
            yprime, c = v, val
            break
    if yprime is None:
        raise RadicalVector("F(x, .) vanishes on Z")
    y = yprime.scale(1 / c) - x.scale(Q.evaluate(yprime) / (2 * c * c))
    assert Q.evaluate(y).is_zero()
    assert (Q.evaluate(x, y) - 1).is_zero()
    span = Subspace.from_spanning([x, y], Q.N)
    assert span.dim == 2
    k = max(Q.L // 2, 1)
    cert = check(
        "hyp1",
        height_subspace(span),
        {"k": k, "HF": height_gram(Q.gram), "HZ": height_subspace(Q.Z)},
    )
    return HyperbolicPlane(x, y, span, cert)


@dataclass
class WittDecomposition:
    radical: Subspace
    planes: List[HyperbolicPlane]
    anisotropic_line: Optional[VectorA]
    certificates: List[BoundCertificate]

    def to_json(self):
        return {
            "radical": self.radical.to_json(),
            "planes": [p.to_json() for p in self.planes],
            "anisotropic_line": self.anisotropic_line.to_json()
            if self.anisotropic_line is not None
            else None,
            "certificates": [c.to_json() for c in self.certificates],
        }


def witt_decompose(Q: QuadraticSpace) -> WittDecomposition:
    """Z = radical ⟂ H_1 ⟂ ... ⟂ H_k ⟂ (anisotropic line if odd rank)."""
    certs: List[BoundCertificate] = []
    if Q.regular:
        rad = Subspace.zero(Q.N)
        R = Q.Z
    else:
        rad, R, split_certs = radical_split(Q)
        certs.extend(split_certs)
    hf = height_gram(Q.gram) if R.dim else None
    hz = height_subspace(R) if R.dim else None
    k = R.dim // 2
    line = None
    current = R
    if R.dim % 2 == 1:
        from .isometry import Isometry, small_anisotropic

        QR = Q.restrict(R)
        sigma_id = Isometry(MatrixA.identity(Q.N, Q.gram.ctx), QR)
        y, _, anis_cert = small_anisotropic(QR, sigma_id)
        certs.append(anis_cert)
        line = y
        certs.append(
            check(
                "witt2",
                height_vector(y),
                {"k": k, "HZ": hz},
                provenance={"site": "anisotropic line"},
            )
        )
        current = constrained_kernel(R, _basis_image_matrix(Q, [y]))
        if not Q.restrict(current).regular:
            raise ContradictsRegularity(
                "complement of the anisotropic line is singular"
            )
    planes: List[HyperbolicPlane] = []
    while current.dim >= 2:
        Qc = Q.restrict(current)
        x, iso_cert = isotropic_in_space(Qc)
        certs.append(iso_cert)
        plane = hyperbolic_pair(Qc, x)
        certs.append(plane.certificate)
        certs.append(
            check(
                "witt1",
                height_subspace(plane.span),
                {"k": k, "HF": hf, "HZ": hz},
                provenance={"site": f"plane {len(planes) + 1}"},
            )
        )
        planes.append(plane)
        current = constrained_kernel(
            current, _basis_image_matrix(Q, [plane.x, plane.y])
        )
    assert current.dim == 0
    assert len(planes) == k
    # exact pairwise orthogonality across components + span equality
    parts = [list(rad.basis)]
    if line is not None:
        parts.append([line])
    parts.extend([p.x, p.y] for p in planes)
    for i in range(len(parts)):
        for j in range(i + 1, len(parts)):
            for u in parts[i]:
                for v in parts[j]:
                    assert Q.evaluate(u, v).is_zero()
    total = Subspace.from_spanning(
        [v for part in parts for v in part], Q.N
    )
    assert total == Q.Z
    return WittDecomposition(rad, planes, line, certs)


def orthogonal_basis(
    Q: QuadraticSpace, literal: bool = False
) -> Tuple[List[VectorA], BoundCertificate]:
    """A basis of Z with F(x_i, x_j) = 0 for i != j, with the product
    height certificate.  The default branch picks the smallest-height
    anisotropic pivot; `literal` picks the smallest non-radical pivot
    (which can fail on isotropic pivots — kept for comparison)."""
    if not (1 <= Q.L <= Q.N):
        raise DimensionTooSmall("need 1 <= dim Z <= N")
    vectors = _orthogonal_rec(Q, literal)
    assert len(vectors) == Q.L
    for i, u in enumerate(vectors):
        for v in vectors[i + 1 :]:
            assert Q.evaluate(u, v).is_zero()
    assert Subspace.from_spanning(vectors, Q.N) == Q.Z
    cert = check(
        "siegel2",
        [height_vector(v) for v in vectors],
        {
            "L": Q.L,
            "HF": height_gram(Q.gram),
            "HZ": height_subspace(Q.Z),
        },
    )
    return vectors, cert


def _pivot_pool(Q: QuadraticSpace):
    sb = small_basis(Q.Z)
    pool = list(sb.vectors)
    for i in range(len(sb.vectors)):
        for j in range(i + 1, len(sb.vectors)):
            pool.append(sb.vectors[i] + sb.vectors[j])
    return sb, pool


def _orthogonal_rec(Q: QuadraticSpace, literal: bool) -> List[VectorA]:
    if Q.L == 0:
        return []
    sb, pool = _pivot_pool(Q)
    if literal:
        pivot = next(
            (v for v in pool if not contains(Q.radical, v)), None
        )
    else:
        pivot = next(
            (v for v in pool if not Q.evaluate(v).is_zero()), None
        )
    if pivot is None:
        # F restricted to Z vanishes identically (polarization): any basis
        # is orthogonal
        assert all(Q.evaluate(u, w).is_zero() for u in sb.vectors for w in sb.vectors)
        return list(sb.vectors)
    Z1 = constrained_kernel(Q.Z, _basis_image_matrix(Q, [pivot]))
    if contains(Z1, pivot):
        raise ContradictsRegularity(
            "literal pivot is isotropic: span(x1) + Z1 is not a direct sum"
        )
    rest = _orthogonal_rec(Q.restrict(Z1), literal)
    return [pivot] + rest
