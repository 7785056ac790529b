"""Small bases of subspaces: the constructive stand-in for the absolute
Siegel lemma.

Over Q the subspace is intersected with Z^N (saturated integer kernel of
the annihilator) and LLL-reduced exactly.  Over a tower of degree d the
subspace is viewed as a Z-lattice of rank d*L via restriction of scalars
in the monomial order Z[g_1..g_t], reduced numerically under the summed
squared embedding lengths, and mapped back exactly; L vectors that are
K-linearly independent are then selected greedily in ascending height.

Every result carries a three-valued certificate for the chain
prod_i h(x_i) <= 3^(L(L-1)/2) * H(Z).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm
from typing import List, Optional, Tuple

from .intervals import RI
from .heights import HeightValue, height_inhom, height_subspace
from .linalg import MatrixA, Subspace, VectorA
from .tower import QQ, TowerElement, embed_all

__all__ = [
    "SmallBasis",
    "small_basis",
    "lll_reduce",
    "integer_kernel",
    "ZeroSubspace",
]

LLL_DELTA = Fraction(99, 100)
PROXY_BITS = 96
VERDICT_CAP = 4096


class ZeroSubspace(ValueError):
    pass


# --- exact integer/rational lattice tools ---

def integer_kernel(A: List[List[int]]) -> List[List[int]]:
    """Saturated basis of {x in Z^n : A x = 0} via unimodular column ops."""
    m = len(A)
    n = len(A[0]) if m else 0
    cols = [[A[i][j] for i in range(m)] for j in range(n)]
    trans = [[1 if i == j else 0 for i in range(n)] for j in range(n)]  # columns of U
    pivot_cols = set()
    for r in range(m):
        active = [j for j in range(n) if j not in pivot_cols]
        while True:
            nz = [j for j in active if cols[j][r] != 0]
            if len(nz) <= 1:
                break
            nz.sort(key=lambda j: abs(cols[j][r]))
            p = nz[0]
            for j in nz[1:]:
                q = cols[j][r] // cols[p][r]
                if q:
                    for i in range(m):
                        cols[j][i] -= q * cols[p][i]
                    for i in range(n):
                        trans[j][i] -= q * trans[p][i]
        nz = [j for j in active if cols[j][r] != 0]
        if nz:
            pivot_cols.add(nz[0])
    return [trans[j] for j in range(n) if all(c == 0 for c in cols[j]) ]


def _gso(b: List[List[Fraction]]):
    n = len(b)
    mu = [[Fraction(0)] * n for _ in range(n)]
    bstar = []
    B = []
    for i in range(n):
        mu[i][i] = Fraction(1)
        v = list(b[i])
        for j in range(i):
            if B[j] == 0:
                mu[i][j] = Fraction(0)
                continue
            mu[i][j] = sum(x * y for x, y in zip(b[i], bstar[j])) / B[j]
            v = [x - mu[i][j] * y for x, y in zip(v, bstar[j])]
        bstar.append(v)
        B.append(sum(x * x for x in v))
    return mu, B


def lll_reduce(
    rows: List[List], delta: Fraction = LLL_DELTA
) -> Tuple[List[List[Fraction]], List[List[int]]]:
    """Exact LLL; returns (reduced rows, integer transform U) with
    reduced[i] = sum_k U[i][k] * rows[k]."""
    b = [[Fraction(x) for x in r] for r in rows]
    n = len(b)
    U = [[1 if i == j else 0 for j in range(n)] for i in range(n)]
    if n <= 1:
        return b, U
    mu, B = _gso(b)
    k = 1
    while k < n:
        for j in range(k - 1, -1, -1):
            q = round(mu[k][j])
            if q:
                b[k] = [x - q * y for x, y in zip(b[k], b[j])]
                U[k] = [x - q * y for x, y in zip(U[k], U[j])]
                for i in range(j + 1):
                    mu[k][i] -= q * mu[j][i]
        if B[k] >= (delta - mu[k][k - 1] * mu[k][k - 1]) * B[k - 1]:
            k += 1
        else:
            b[k], b[k - 1] = b[k - 1], b[k]
            U[k], U[k - 1] = U[k - 1], U[k]
            mu, B = _gso(b)
            k = max(k - 1, 1)
    return b, U


# --- the small-basis result ---

@dataclass
class SmallBasis:
    subspace: Subspace
    vectors: List[VectorA]
    heights: List[HeightValue]  # inhomogeneous heights, ascending
    product: RI  # enclosure of prod h(x_i)
    subspace_height: HeightValue
    bound: RI  # enclosure of 3^(L(L-1)/2) H(Z)
    roy_thunder_met: str  # verified / violated / inconclusive

    def certificate(self):
        return {
            "bound_id": "siegel3",
            "lhs": {"lo": str(self.product.lo), "hi": str(self.product.hi)},
            "rhs": {"lo": str(self.bound.lo), "hi": str(self.bound.hi)},
            "verdict": self.roy_thunder_met,
        }


def _height_key(h: HeightValue, v: VectorA):
    # ties broken in canonical-coordinate order (e_1 before e_2, ...):
    # compare reversed coordinate strings so earlier pivots sort first
    return (h.mid(), tuple(str(e) for e in reversed(list(v))))


def _rational_lattice_basis(Z: Subspace) -> List[VectorA]:
    n = Z.ambient
    ann = Z.annihilator_matrix()
    if ann is None:
        rows_int: List[List[int]] = [[0] * n]
    else:
        rows_int = []
        for r in ann.rows:
            qs = [e.rational_value() for e in r]
            den = lcm(*[q.denominator for q in qs])
            rows_int.append([int(q * den) for q in qs])
    ker = integer_kernel(rows_int)
    red, _ = lll_reduce(ker)
    return [VectorA([int(x) for x in v]) for v in red]


def _tower_lattice_basis(Z: Subspace, bits: int) -> List[VectorA]:
    ctx = Z.ctx
    d = ctx.degree
    n = Z.ambient
    # Z-module generators: monomial multiples of the canonical basis
    gens: List[VectorA] = []
    for i in range(d):
        coeffs = [Fraction(0)] * d
        coeffs[i] = Fraction(1)
        mono = ctx.element(coeffs)
        for bvec in Z.basis:
            gens.append(bvec.scale(mono))
    # numeric proxies: fixed-point Re/Im of every embedded coordinate
    emb = embed_all(ctx, bits)
    scale = 1 << bits
    proxies = []
    for g in gens:
        row = []
        for s in range(len(emb)):
            for e in g:
                ci = emb.eval_at(s, e + ctx.zero())
                row.append(int(ci.re.mid() * scale))
                row.append(int(ci.im.mid() * scale))
        proxies.append(row)
    _, U = lll_reduce(proxies)
    out = []
    for urow in U:
        v = VectorA([ctx.zero()] * n)
        for c, g in zip(urow, gens):
            if c:
                v = v + g.scale(ctx.from_rational(c))
        if not v.is_zero():
            out.append(v)
    return out


def small_basis(
    Z: Subspace,
    bits: int = 128,
    seed: int = 0,
    delta: Fraction = LLL_DELTA,
) -> SmallBasis:
    if Z.dim == 0:
        raise ZeroSubspace("small basis of the zero subspace")
    L = Z.dim
    if Z.ctx.level == 0:
        candidates = _rational_lattice_basis(Z)
    else:
        candidates = _tower_lattice_basis(Z, PROXY_BITS)
        candidates.extend(Z.basis)  # exact fallback generators
    scored = []
    for v in candidates:
        h = height_inhom(v, seed=seed)
        scored.append((v, h))
    scored.sort(key=lambda vh: _height_key(vh[1], vh[0]))
    chosen: List[Tuple[VectorA, HeightValue]] = []
    span = Subspace.zero(Z.ambient)
    for v, h in scored:
        trial = span.join(Subspace.from_spanning([v], Z.ambient))
        if trial.dim > span.dim:
            chosen.append((v, h))
            span = trial
            if span.dim == L:
                break
    if span != Subspace.from_spanning(list(Z.basis), Z.ambient):
        raise RuntimeError("reduced vectors do not span the input subspace")
    vectors = [v for v, _ in chosen]
    heights = [h for _, h in chosen]
    hz = height_subspace(Z, seed=seed)
    product, bound, verdict = _siegel3_verdict(heights, hz, L)
    return SmallBasis(Z, vectors, heights, product, hz, bound, verdict)


def _siegel3_verdict(heights, hz, L):
    const = Fraction(3) ** (L * (L - 1) // 2)
    b = 128
    while True:
        lhs = RI.exact(1)
        for h in heights:
            lhs = (lhs * h.interval(b)).round(b)
        rhs = (RI.exact(const) * hz.interval(b)).round(b)
        if lhs.hi <= rhs.lo:
            return lhs, rhs, "verified"
        if lhs.lo > rhs.hi:
            return lhs, rhs, "violated"
        if b >= VERDICT_CAP:
            return lhs, rhs, "inconclusive"
        b *= 2
