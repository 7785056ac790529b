"""Absolute Weil heights with certified enclosures and exact fast paths.

The height of a vector splits as (finite part) x (archimedean part).  The
finite part is a finite product of prime powers p^(m_p/d), computed exactly:
directly over Q, by fractional-ideal norms over a single quadratic field,
and by Monte Carlo Gauss-content of two-generator pencil norms over deeper
towers.  The archimedean part is a certified interval from the embedding
set, with an exact squared value recorded for totally real towers.
"""

from __future__ import annotations

import random
from fractions import Fraction
from math import gcd, lcm
from typing import Callable, Dict, Optional

from sympy import factorint

from .intervals import RI
from .linalg import MatrixA, Subspace, VectorA
from .tower import QQ, TowerElement, embed_all, field_norm, invert, pencil_norm

__all__ = [
    "PrimePowers",
    "HeightValue",
    "finite_part",
    "height_vector",
    "height_inhom",
    "height_subspace",
    "height_gram",
    "height_form_poly",
    "ZeroVector",
    "ZeroObject",
]

DEFAULT_TRIALS = 8
DEFAULT_BITS = 128


class ZeroVector(ValueError):
    pass


class ZeroObject(ValueError):
    pass


def _factor_int(n: int) -> Dict[int, int]:
    if n in (1, -1):
        return {}
    return {int(p): int(e) for p, e in factorint(abs(n)).items()}


def _factor_fraction(q: Fraction) -> Dict[int, int]:
    out = _factor_int(q.numerator)
    for p, e in _factor_int(q.denominator).items():
        out[p] = out.get(p, 0) - e
    return {p: e for p, e in out.items() if e}


class PrimePowers:
    """A positive real of the form prod p^(e_p) with rational exponents e_p.

    Exact and closed under multiplication and rational powers; this is the
    natural value domain of projective finite parts over a degree-d tower,
    where exponents are multiples of 1/d."""

    __slots__ = ("exps",)

    def __init__(self, exps: Optional[Dict[int, Fraction]] = None):
        self.exps = {
            p: Fraction(e) for p, e in (exps or {}).items() if e != 0
        }

    @classmethod
    def one(cls) -> "PrimePowers":
        return cls()

    @classmethod
    def from_fraction(cls, q) -> "PrimePowers":
        q = Fraction(q)
        if q <= 0:
            raise ValueError("PrimePowers represents positive reals only")
        return cls({p: Fraction(e) for p, e in _factor_fraction(q).items()})

    def __mul__(self, other: "PrimePowers") -> "PrimePowers":
        out = dict(self.exps)
        for p, e in other.exps.items():
            out[p] = out.get(p, 0) + e
        return PrimePowers(out)

    def __truediv__(self, other: "PrimePowers") -> "PrimePowers":
        return self * other ** -1

    def __pow__(self, e) -> "PrimePowers":
        e = Fraction(e)
        return PrimePowers({p: x * e for p, x in self.exps.items()})

    def __eq__(self, other):
        if isinstance(other, PrimePowers):
            return self.exps == other.exps
        if isinstance(other, (int, Fraction)):
            return self.is_fraction() and self.as_fraction() == other
        return NotImplemented

    def __hash__(self):
        return hash(frozenset(self.exps.items()))

    def is_one(self) -> bool:
        return not self.exps

    def is_fraction(self) -> bool:
        return all(e.denominator == 1 for e in self.exps.values())

    def as_fraction(self) -> Fraction:
        if not self.is_fraction():
            raise ValueError(f"{self} is not rational")
        out = Fraction(1)
        for p, e in self.exps.items():
            out *= Fraction(p) ** int(e)
        return out

    def interval(self, bits: int) -> RI:
        out = RI.exact(1)
        for p, e in sorted(self.exps.items()):
            out = (out * RI.exact(p).pow_fraction(e, bits)).round(bits)
        return out

    def __str__(self):
        if self.is_one():
            return "1"
        if self.is_fraction():
            return str(self.as_fraction())
        return " * ".join(
            f"{p}^({e})" for p, e in sorted(self.exps.items())
        )

    __repr__ = __str__


def _merge_max(acc: Dict[int, Fraction], new: Dict[int, Fraction]) -> None:
    for p, e in new.items():
        if e > acc.get(p, Fraction(0)):
            acc[p] = e


def _content_exponents_of_poly(coeffs, degree: int) -> Dict[int, Fraction]:
    """Per-prime exponents of (p-content of a rational polynomial)^(-1/d);
    the constant term is 1, so only denominator primes can contribute."""
    den = lcm(*[c.denominator for c in coeffs]) if coeffs else 1
    out: Dict[int, Fraction] = {}
    for p in _factor_int(den):
        m = min(_padic_val(c, p) for c in coeffs)
        if m < 0:
            out[p] = Fraction(-m, degree)
    return out


def _padic_val(q: Fraction, p: int) -> int:
    if q == 0:
        return 10**9
    v = 0
    n = q.numerator
    while n % p == 0:
        n //= p
        v += 1
    if v:
        return v
    d = q.denominator
    while d % p == 0:
        d //= p
        v -= 1
    return v


# --- finite part fast paths ---

def _finite_part_rational(coords) -> PrimePowers:
    """prod_p p^(-min_i v_p(x_i)) for a nonzero rational vector."""
    den = lcm(*[c.denominator for c in coords])
    num = gcd(*[int(c * den) for c in coords])
    return PrimePowers.from_fraction(Fraction(den, num))


def _quadratic_parts(x: TowerElement):
    c = x.coeffs
    return c[0], c[1] if len(c) > 1 else Fraction(0)


def _finite_part_quadratic(coords, m: int) -> PrimePowers:
    """Fractional-ideal norm over Q(sqrt(m)), m squarefree: the finite part
    is N(ideal generated by the coordinates)^(-1/2)."""
    one_mod_four = m % 4 == 1
    gens = []
    for x in coords:
        a, b = _quadratic_parts(x)
        if one_mod_four:
            u, v = a - b, 2 * b  # x = u + v*omega, omega = (1+sqrt m)/2
        else:
            u, v = a, b
        gens.append((u, v))
        if one_mod_four:
            gens.append((v * Fraction(m - 1, 4), u + v))  # omega * x
        else:
            gens.append((v * m, u))
    den = lcm(*[q.denominator for uv in gens for q in uv])
    rows = [(int(u * den), int(v * den)) for u, v in gens]
    # 2-column integer HNF determinant: gcd-combine second components into
    # one pivot row, eliminate, then gcd the remaining first components
    pivot = None
    for u, v in rows:
        if v == 0:
            continue
        if pivot is None:
            pivot = (u, v)
        else:
            a, b = pivot
            g, s, t = _xgcd(b, v)
            pivot = (s * a + t * u, g)
    if pivot is None:
        # every coordinate is rational; absoluteness reduces to the Q path
        return _finite_part_rational([x.coeffs[0] for x in coords])
    a, d2 = pivot
    firsts = [u - (v // d2) * a for u, v in rows]
    d1 = gcd(*firsts)
    ideal_norm = Fraction(abs(d1 * d2), den * den)
    return PrimePowers.from_fraction(ideal_norm) ** Fraction(-1, 2)


def _xgcd(a: int, b: int):
    old_r, r = a, b
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
        old_t, t = t, old_t - q * t
    if old_r < 0:
        old_r, old_s, old_t = -old_r, -old_s, -old_t
    return old_r, old_s, old_t


def _finite_part_mc(coords, ctx, trials: int, rng: random.Random) -> PrimePowers:
    """Gauss-content of the pencil Norm(1 + t*y2) over random small integer
    combinations y2 of the normalized coordinates."""
    d = ctx.degree
    one = ctx.one()
    acc: Dict[int, Fraction] = {}
    candidates = [y for y in coords if not y.is_zero()]
    for y in candidates:  # cheap deterministic seeds: single coordinates
        poly = pencil_norm(one, y)
        _merge_max(acc, _content_exponents_of_poly(poly, d))
    bound = 2
    for _ in range(trials):
        y2 = ctx.zero()
        for y in candidates:
            y2 = y2 + y * rng.randint(-bound, bound)
        bound *= 2
        if y2.is_zero():
            continue
        poly = pencil_norm(one, y2)
        _merge_max(acc, _content_exponents_of_poly(poly, d))
    return PrimePowers(acc)


def finite_part(
    x: VectorA,
    method: str = "auto",
    trials: int = DEFAULT_TRIALS,
    seed: int = 0,
) -> PrimePowers:
    """Product of the non-archimedean local heights of x, exactly."""
    if x.is_zero():
        raise ZeroVector("finite part of the zero vector")
    first = next(e for e in x if not e.is_zero())
    inv_first = invert(first)  # may simplify the tower as a side effect
    norm_coords = [e * inv_first for e in x]
    from .tower import common_context

    ctx = common_context(norm_coords + [first])
    norm_coords = [c + ctx.zero() for c in norm_coords]
    scalar = PrimePowers.from_fraction(
        abs(field_norm(first + ctx.zero()))
    ) ** Fraction(-1, ctx.degree)

    if method not in ("auto", "exact", "mc"):
        raise ValueError(f"unknown method {method!r}")
    if method != "mc":
        if ctx.level == 0:
            return scalar * _finite_part_rational([e.rational_value() for e in norm_coords])
        if ctx.level == 1 and ctx.gen_square.is_rational():
            m = ctx.gen_square.rational_value()
            if m.denominator == 1:
                return scalar * _finite_part_quadratic(norm_coords, int(m))
        if method == "exact":
            raise ValueError("no exact fast path for this tower; use mc")
    rng = random.Random(seed)
    return scalar * _finite_part_mc(norm_coords, ctx, trials, rng)


# --- global heights ---

class HeightValue:
    """A certified absolute height: exact finite part plus an archimedean
    interval, refinable by recomputation at higher precision."""

    __slots__ = ("content", "degree", "bits", "enclosure", "exact_arch_sq", "_arch")

    def __init__(
        self,
        content: PrimePowers,
        degree: int,
        arch: Callable[[int], RI],
        bits: int = DEFAULT_BITS,
        exact_arch_sq: Optional[Fraction] = None,
    ):
        self.content = content
        self.degree = degree
        self._arch = arch  # bits -> enclosure of prod_sigma ||sigma(x)||^2
        self.bits = bits
        self.exact_arch_sq = exact_arch_sq  # = prod_sigma ||sigma(x)||^2, rational
        self.enclosure = self._compute(bits)

    @classmethod
    def exact_one(cls, degree: int = 1) -> "HeightValue":
        return cls(PrimePowers.one(), degree, lambda b: RI.exact(1), 32, Fraction(1))

    def _compute(self, bits: int) -> RI:
        p = self._arch(bits)
        arch = p.pow_fraction(Fraction(1, 2 * self.degree), bits)
        return (self.content.interval(bits) * arch).round(bits)

    def interval(self, bits: Optional[int] = None) -> RI:
        if bits is None or bits <= self.bits:
            return self.enclosure
        return self._compute(bits)

    def refine(self, bits: int) -> "HeightValue":
        if bits <= self.bits:
            return self
        return HeightValue(self.content, self.degree, self._arch, bits, self.exact_arch_sq)

    @property
    def is_exact(self) -> bool:
        return self.exact_arch_sq is not None

    def exact_power(self):
        """(2d, exact value of H^(2d)) when available, else None."""
        if self.exact_arch_sq is None:
            return None
        val = self.content ** (2 * self.degree)
        return 2 * self.degree, val * PrimePowers.from_fraction(self.exact_arch_sq)

    def contains(self, q) -> bool:
        return self.enclosure.contains(q)

    def mid(self) -> Fraction:
        return self.enclosure.mid()

    def __float__(self):
        return float(self.enclosure.mid())

    def __str__(self):
        return f"H~{float(self):.6g}"

    def __repr__(self):
        e = self.enclosure
        return f"HeightValue([{float(e.lo):.9g}, {float(e.hi):.9g}], finite={self.content})"

    def to_json(self):
        return {
            "lo": str(self.enclosure.lo),
            "hi": str(self.enclosure.hi),
            "finite_part": str(self.content),
            "exact": self.is_exact,
            "bits": self.bits,
        }


def _height_of_elements(
    entries, trials: int, seed: int, bits: int
) -> HeightValue:
    vec = VectorA(entries)
    if vec.is_zero():
        raise ZeroVector("height of the zero vector")
    content = finite_part(vec, trials=trials, seed=seed)
    vec = VectorA(vec.entries)  # re-unify in case the tower simplified
    ctx = vec.ctx
    d = ctx.degree
    sum_sq = ctx.zero()
    for e in vec:
        sum_sq = sum_sq + e * e

    def arch(b: int) -> RI:
        emb = embed_all(ctx, b)
        prod = RI.exact(1)
        for i in range(len(emb)):
            s = RI.exact(0)
            for e in vec:
                s = s + emb.eval_at(i, e).abs2()
            prod = (prod * s).round(b)
        return prod

    exact_arch = None
    emb0 = embed_all(ctx, 64)
    if emb0.is_totally_real():
        exact_arch = field_norm(sum_sq)
    return HeightValue(content, d, arch, bits, exact_arch)


def height_vector(
    x: VectorA, bits: int = DEFAULT_BITS, trials: int = DEFAULT_TRIALS, seed: int = 0
) -> HeightValue:
    return _height_of_elements(list(x.entries), trials, seed, bits)


def height_inhom(
    x: VectorA, bits: int = DEFAULT_BITS, trials: int = DEFAULT_TRIALS, seed: int = 0
) -> HeightValue:
    """h(x) = H(1, x); defined (and equal to 1) for the zero vector."""
    one = x.ctx.one() if len(x) else QQ.one()
    return _height_of_elements([one] + list(x.entries), trials, seed, bits)


def height_subspace(
    Z: Subspace, bits: int = DEFAULT_BITS, trials: int = DEFAULT_TRIALS, seed: int = 0
) -> HeightValue:
    if Z.dim in (0, Z.ambient):
        return HeightValue.exact_one()
    g = Z.grassmann_vector()
    return _height_of_elements(list(g.entries), trials, seed, bits)


def height_gram(
    M: MatrixA, bits: int = DEFAULT_BITS, trials: int = DEFAULT_TRIALS, seed: int = 0
) -> HeightValue:
    flat = [e for row in M.rows for e in row]
    if all(e.is_zero() for e in flat):
        raise ZeroObject("height of the zero matrix")
    return _height_of_elements(flat, trials, seed, bits)


def height_form_poly(
    M: MatrixA, bits: int = DEFAULT_BITS, trials: int = DEFAULT_TRIALS, seed: int = 0
) -> HeightValue:
    """Height of the polynomial coefficient vector (f_ii; 2 f_ij, i<j) of
    the quadratic form with symmetric Gram matrix M."""
    if not M.is_symmetric():
        raise ValueError("Gram matrix must be symmetric")
    entries = []
    n = M.nrows
    for i in range(n):
        entries.append(M[i, i])
        for j in range(i + 1, n):
            entries.append(M[i, j] * 2)
    if all(e.is_zero() for e in entries):
        raise ZeroObject("height of the zero form")
    return _height_of_elements(entries, trials, seed, bits)
