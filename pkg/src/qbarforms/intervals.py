"""Outward-rounded interval arithmetic with exact rational endpoints.

Endpoints are `fractions.Fraction`; ring operations are exact, and only
irrational operations (square roots, n-th roots) round outward to a dyadic
grid of the requested bit size.  Complex intervals are axis-aligned
rectangles.
"""

from __future__ import annotations

from fractions import Fraction

import gmpy2

__all__ = [
    "RI",
    "CI",
    "BranchCutError",
    "PrecisionCapExceeded",
]

_ZERO = Fraction(0)
_ONE = Fraction(1)


class BranchCutError(ArithmeticError):
    """Complex square root could not pick a branch at this precision."""


class PrecisionCapExceeded(ArithmeticError):
    """The configured maximum working precision was reached."""


def _floor_div(a: int, b: int) -> int:
    return a // b


def _ceil_div(a: int, b: int) -> int:
    return -((-a) // b)


def round_down(q: Fraction, bits: int) -> Fraction:
    """Largest multiple of 2^-bits that is <= q."""
    return Fraction(_floor_div(q.numerator << bits, q.denominator), 1 << bits)


def round_up(q: Fraction, bits: int) -> Fraction:
    return Fraction(_ceil_div(q.numerator << bits, q.denominator), 1 << bits)


def sqrt_down(q: Fraction, bits: int) -> Fraction:
    """Dyadic lower bound for sqrt(q), q >= 0."""
    if q < 0:
        raise ValueError("sqrt of negative rational")
    n = (q.numerator << (2 * bits)) // q.denominator
    return Fraction(int(gmpy2.isqrt(n)), 1 << bits)


def sqrt_up(q: Fraction, bits: int) -> Fraction:
    if q < 0:
        raise ValueError("sqrt of negative rational")
    n = _ceil_div(q.numerator << (2 * bits), q.denominator)
    r = int(gmpy2.isqrt(n))
    if r * r < n:
        r += 1
    return Fraction(r, 1 << bits)


def nth_root_down(q: Fraction, n: int, bits: int) -> Fraction:
    if q < 0:
        raise ValueError("n-th root of negative rational")
    m = (q.numerator << (n * bits)) // q.denominator
    r, _ = gmpy2.iroot(gmpy2.mpz(m), n)
    return Fraction(int(r), 1 << bits)


def nth_root_up(q: Fraction, n: int, bits: int) -> Fraction:
    if q < 0:
        raise ValueError("n-th root of negative rational")
    m = _ceil_div(q.numerator << (n * bits), q.denominator)
    r, exact = gmpy2.iroot(gmpy2.mpz(m), n)
    r = int(r)
    if not exact:
        r += 1
    return Fraction(r, 1 << bits)


class RI:
    """Closed real interval [lo, hi] with Fraction endpoints."""

    __slots__ = ("lo", "hi")

    def __init__(self, lo, hi=None):
        if hi is None:
            hi = lo
        lo = Fraction(lo)
        hi = Fraction(hi)
        if lo > hi:
            raise ValueError(f"empty interval [{lo}, {hi}]")
        self.lo = lo
        self.hi = hi

    @classmethod
    def exact(cls, q) -> "RI":
        q = Fraction(q)
        return cls(q, q)

    def __repr__(self):
        return f"RI({self.lo}, {self.hi})"

    # --- ring operations (exact) ---

    def __add__(self, other):
        other = _as_ri(other)
        return RI(self.lo + other.lo, self.hi + other.hi)

    __radd__ = __add__

    def __neg__(self):
        return RI(-self.hi, -self.lo)

    def __sub__(self, other):
        return self + (-_as_ri(other))

    def __rsub__(self, other):
        return _as_ri(other) + (-self)

    def __mul__(self, other):
        other = _as_ri(other)
        c = (
            self.lo * other.lo,
            self.lo * other.hi,
            self.hi * other.lo,
            self.hi * other.hi,
        )
        return RI(min(c), max(c))

    __rmul__ = __mul__

    def recip(self) -> "RI":
        if self.contains_zero():
            raise ZeroDivisionError("interval contains zero")
        return RI(1 / self.hi, 1 / self.lo)

    def __truediv__(self, other):
        return self * _as_ri(other).recip()

    def sq(self) -> "RI":
        if self.lo >= 0:
            return RI(self.lo * self.lo, self.hi * self.hi)
        if self.hi <= 0:
            return RI(self.hi * self.hi, self.lo * self.lo)
        m = max(-self.lo, self.hi)
        return RI(_ZERO, m * m)

    # --- rounded operations ---

    def sqrt(self, bits: int) -> "RI":
        lo = self.lo if self.lo > 0 else _ZERO
        return RI(sqrt_down(lo, bits), sqrt_up(self.hi, bits))

    def nth_root(self, n: int, bits: int) -> "RI":
        lo = self.lo if self.lo > 0 else _ZERO
        return RI(nth_root_down(lo, n, bits), nth_root_up(self.hi, n, bits))

    def pow_fraction(self, e: Fraction, bits: int) -> "RI":
        """self**e for positive self and rational e, outward rounded."""
        e = Fraction(e)
        if e == 0:
            return RI.exact(1)
        base = self
        if e < 0:
            base = base.recip()
            e = -e
        p = RI(base.lo ** e.numerator, base.hi ** e.numerator)
        if e.denominator == 1:
            return p
        return p.nth_root(e.denominator, bits)

    def round(self, bits: int) -> "RI":
        return RI(round_down(self.lo, bits), round_up(self.hi, bits))

    # --- queries ---

    def contains(self, q) -> bool:
        q = Fraction(q)
        return self.lo <= q <= self.hi

    def contains_zero(self) -> bool:
        return self.lo <= 0 <= self.hi

    def is_point(self) -> bool:
        return self.lo == self.hi

    def mid(self) -> Fraction:
        return (self.lo + self.hi) / 2

    def width(self) -> Fraction:
        return self.hi - self.lo

    def overlaps(self, other: "RI") -> bool:
        return self.lo <= other.hi and other.lo <= self.hi

    def hull(self, other: "RI") -> "RI":
        return RI(min(self.lo, other.lo), max(self.hi, other.hi))

    def __float__(self):
        return float(self.mid())


def _as_ri(x) -> RI:
    if isinstance(x, RI):
        return x
    return RI.exact(x)


class CI:
    """Complex interval as a rectangle re + i*im of two real intervals.

    An imaginary part that is the exact point [0, 0] is treated as
    symbolically real, which keeps square roots of real data on the real
    path regardless of precision.
    """

    __slots__ = ("re", "im")

    def __init__(self, re, im=None):
        self.re = _as_ri(re)
        self.im = _as_ri(im) if im is not None else RI.exact(0)

    @classmethod
    def exact(cls, q) -> "CI":
        return cls(RI.exact(q))

    def __repr__(self):
        return f"CI({self.re!r}, {self.im!r})"

    def is_real(self) -> bool:
        return self.im.is_point() and self.im.lo == 0

    def __add__(self, other):
        other = _as_ci(other)
        return CI(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __neg__(self):
        return CI(-self.re, -self.im)

    def __sub__(self, other):
        return self + (-_as_ci(other))

    def __mul__(self, other):
        other = _as_ci(other)
        return CI(
            self.re * other.re - self.im * other.im,
            self.re * other.im + self.im * other.re,
        )

    __rmul__ = __mul__

    def abs2(self) -> RI:
        return self.re.sq() + self.im.sq()

    def contains_zero(self) -> bool:
        return self.re.contains_zero() and self.im.contains_zero()

    def round(self, bits: int) -> "CI":
        return CI(self.re.round(bits), self.im.round(bits))

    def sqrt(self, bits: int) -> "CI":
        """One square root of the rectangle (its negative is the other).

        Raises BranchCutError when the rectangle straddles the negative
        real axis too coarsely to pick a branch; callers refine precision
        and retry.
        """
        if self.is_real():
            if self.re.lo >= 0:
                return CI(self.re.sqrt(bits))
            if self.re.hi <= 0:
                return CI(RI.exact(0), (-self.re).sqrt(bits))
            raise BranchCutError("real part straddles zero")
        r = self.abs2().sqrt(bits)
        u_sq = (r + self.re) * Fraction(1, 2)
        v_sq = (r - self.re) * Fraction(1, 2)
        u = u_sq.sqrt(bits)
        v = v_sq.sqrt(bits)
        if self.im.lo > 0:
            return CI(u, v)
        if self.im.hi < 0:
            return CI(u, -v)
        # imaginary part straddles zero: fine on the right half plane only
        if self.re.lo > 0:
            return CI(u, RI(-v.hi, v.hi))
        raise BranchCutError("rectangle straddles the branch cut")

    def __float__(self):
        return float(self.re.mid())

    def to_complex(self) -> complex:
        return complex(float(self.re.mid()), float(self.im.mid()))


def _as_ci(x) -> CI:
    if isinstance(x, CI):
        return x
    if isinstance(x, RI):
        return CI(x)
    return CI.exact(x)
