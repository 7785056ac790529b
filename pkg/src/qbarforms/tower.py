"""Exact arithmetic in iterated quadratic extensions of the rationals.

A context is a chain Q = K_0 < K_1 < ... < K_t where K_i = K_{i-1}(g_i) and
g_i^2 = D_i for a nonzero D_i in K_{i-1}.  Elements are tuples of 2^t
rational coefficients indexed by squarefree monomials in the generators
(bit i of the index selects g_{i+1}).

Radicands that turn out to be squares are handled lazily: inversion of a
zero divisor raises SquareDetected carrying an exact witness, and by
default the offending generator is substituted away and the computation
retried.  Degree strictly drops, so retries terminate.
"""

from __future__ import annotations

import random
import re as _re
from fractions import Fraction
from typing import Iterable, Optional

import gmpy2
from sympy import factorint

from .intervals import CI, RI, BranchCutError, PrecisionCapExceeded

__all__ = [
    "TowerContext",
    "TowerElement",
    "EmbeddingSet",
    "QQ",
    "adjoin_sqrt",
    "invert",
    "relative_conjugate",
    "field_norm",
    "pencil_norm",
    "embed_all",
    "common_context",
    "parse_element",
    "TowerError",
    "ZeroRadicand",
    "DegreeCapExceeded",
    "DivisionByZero",
    "RationalContext",
    "ContextMismatch",
    "SquareDetected",
]

DEGREE_CAP = 64
PRECISION_CAP = 1 << 15

_ZERO = Fraction(0)
_ONE = Fraction(1)


class TowerError(Exception):
    pass


class ZeroRadicand(TowerError):
    pass


class DegreeCapExceeded(TowerError):
    pass


class DivisionByZero(TowerError, ZeroDivisionError):
    pass


class RationalContext(TowerError):
    pass


class ContextMismatch(TowerError):
    pass


class SquareDetected(TowerError):
    """Inversion found a^2 = D b^2 with b != 0: the generator with square D
    collapses to the rational-side witness r = a/b one level down."""

    def __init__(self, context: "TowerContext", level: int, witness: "TowerElement"):
        self.context = context
        self.level = level  # 1-based position of the collapsing generator
        self.witness = witness
        self.radicand = context.prefix(level).gen_square
        super().__init__(f"generator {context.prefix(level).gen_name} equals {witness}")


class TowerContext:
    """Immutable description of an iterated quadratic extension."""

    __slots__ = ("parent", "gen_name", "gen_square", "level", "_children", "_replacement")

    def __init__(self, parent: Optional["TowerContext"], gen_square: Optional["TowerElement"]):
        self.parent = parent
        self.gen_square = gen_square
        self.level = 0 if parent is None else parent.level + 1
        self.gen_name = None if parent is None else f"g{self.level}"
        self._children = {}
        self._replacement = None

    # --- basic structure ---

    @property
    def degree(self) -> int:
        return 1 << self.level

    @property
    def generators(self):
        out = []
        ctx = self
        while ctx.parent is not None:
            out.append((ctx.gen_name, ctx.gen_square))
            ctx = ctx.parent
        return list(reversed(out))

    def prefix(self, k: int) -> "TowerContext":
        ctx = self
        while ctx.level > k:
            ctx = ctx.parent
        return ctx

    def is_ancestor_of(self, other: "TowerContext") -> bool:
        return other.prefix(self.level) is self

    def __repr__(self):
        if self.level == 0:
            return "TowerContext(QQ)"
        gens = ", ".join(f"{n}^2={s}" for n, s in self.generators)
        return f"TowerContext({gens})"

    # --- element constructors ---

    def element(self, coeffs) -> "TowerElement":
        coeffs = tuple(Fraction(c) for c in coeffs)
        if len(coeffs) != self.degree:
            raise ValueError("coefficient count does not match context degree")
        return TowerElement(self, coeffs)

    def from_rational(self, q) -> "TowerElement":
        q = Fraction(q)
        return TowerElement(self, (q,) + (_ZERO,) * (self.degree - 1))

    def zero(self) -> "TowerElement":
        return self.from_rational(0)

    def one(self) -> "TowerElement":
        return self.from_rational(1)

    def gen(self, i: Optional[int] = None) -> "TowerElement":
        """The i-th generator (0-based) as an element; default: topmost."""
        if self.level == 0:
            raise RationalContext("rational context has no generators")
        if i is None:
            i = self.level - 1
        coeffs = [_ZERO] * self.degree
        coeffs[1 << i] = _ONE
        return TowerElement(self, tuple(coeffs))

    def _adjoin_raw(self, square: "TowerElement") -> "TowerContext":
        key = square.coeffs
        child = self._children.get(key)
        if child is None:
            child = TowerContext(self, square)
            self._children[key] = child
        return child

    def squares_chain(self):
        """Coefficient tuples of the generator squares, level 1..t."""
        out = []
        ctx = self
        while ctx.parent is not None:
            out.append(ctx.gen_square.coeffs)
            ctx = ctx.parent
        return list(reversed(out))


QQ = TowerContext(None, None)


# --- coefficient-level kernels ---

def _c_add(a, b):
    return tuple(x + y for x, y in zip(a, b))


def _c_sub(a, b):
    return tuple(x - y for x, y in zip(a, b))


def _c_neg(a):
    return tuple(-x for x in a)


def _c_scale(a, q):
    return tuple(x * q for x in a)


def _c_is_zero(a):
    return all(x == 0 for x in a)


def _c_mul(sq, a, b, level):
    if level == 0:
        return (a[0] * b[0],)
    h = 1 << (level - 1)
    a0, a1 = a[:h], a[h:]
    b0, b1 = b[:h], b[h:]
    z0 = _c_is_zero(a1)
    z1 = _c_is_zero(b1)
    t00 = _c_mul(sq, a0, b0, level - 1)
    if z0 and z1:
        return t00 + (_ZERO,) * h
    cross = _c_add(
        _c_mul(sq, a0, b1, level - 1) if not z1 else (_ZERO,) * h,
        _c_mul(sq, a1, b0, level - 1) if not z0 else (_ZERO,) * h,
    )
    if z0 or z1:
        return t00 + cross
    t11 = _c_mul(sq, a1, b1, level - 1)
    lo = _c_add(t00, _c_mul(sq, t11, sq[level - 1], level - 1))
    return lo + cross


def _c_inv(sq, a, level, ctx):
    if level == 0:
        if a[0] == 0:
            raise DivisionByZero("inversion of zero")
        return (1 / a[0],)
    h = 1 << (level - 1)
    a0, a1 = a[:h], a[h:]
    if _c_is_zero(a1):
        return _c_inv(sq, a0, level - 1, ctx) + (_ZERO,) * h
    d = sq[level - 1]
    n = _c_sub(_c_mul(sq, a0, a0, level - 1), _c_mul(sq, d, _c_mul(sq, a1, a1, level - 1), level - 1))
    if _c_is_zero(n):
        # a0^2 = D a1^2 with a1 != 0: D is the square of r = a0/a1
        r = _c_mul(sq, a0, _c_inv(sq, a1, level - 1, ctx), level - 1)
        witness = TowerElement(ctx.prefix(level - 1), r)
        raise SquareDetected(ctx, level, witness)
    ninv = _c_inv(sq, n, level - 1, ctx)
    lo = _c_mul(sq, a0, ninv, level - 1)
    hi = _c_neg(_c_mul(sq, a1, ninv, level - 1))
    return lo + hi


# --- context migration (lazy tower simplification) ---

def _eval_under(coeffs, level, gen_values, target: TowerContext) -> "TowerElement":
    """Evaluate a coefficient tuple over generators mapped to gen_values."""
    acc = target.zero()
    for idx, c in enumerate(coeffs):
        if c == 0:
            continue
        term = target.from_rational(c)
        j = idx
        pos = 0
        while j:
            if j & 1:
                term = term * gen_values[pos]
            j >>= 1
            pos += 1
        acc = acc + term
    return acc


def _current(ctx: TowerContext):
    """Resolve chained replacements.  Returns (ctx2, vals) where vals maps
    each generator of ctx to an element of ctx2, or vals None if unchanged."""
    if ctx.level == 0:
        return ctx, None
    if ctx._replacement is not None:
        tgt, vals = ctx._replacement
        t2, tvals = _current(tgt)
        if tvals is not None:
            vals = [_eval_under(v.coeffs, v.ctx.level, tvals, t2) for v in vals]
            ctx._replacement = (t2, vals)
        return ctx._replacement
    p2, pvals = _current(ctx.parent)
    if pvals is None:
        return ctx, None
    sq2 = _eval_under(ctx.gen_square.coeffs, ctx.gen_square.ctx.level, pvals, p2)
    c2, s = adjoin_sqrt(p2, sq2)
    vals = [_lift(v, c2) for v in pvals] + [s]
    ctx._replacement = (c2, vals)
    return ctx._replacement


def _register_collapse(exc: SquareDetected) -> None:
    pref = exc.context.prefix(exc.level)
    tgt = pref.parent
    vals = [tgt.gen(i) for i in range(tgt.level)] + [_lift(exc.witness, tgt)]
    pref._replacement = (tgt, vals)


def _lift(x: "TowerElement", ctx: TowerContext) -> "TowerElement":
    if x.ctx is ctx:
        return x
    if not x.ctx.is_ancestor_of(ctx):
        raise ContextMismatch("element context is not an ancestor of the target")
    return TowerElement(ctx, x.coeffs + (_ZERO,) * (ctx.degree - len(x.coeffs)))


def _migrate(x: "TowerElement") -> "TowerElement":
    c2, vals = _current(x.ctx)
    if vals is None:
        return x
    return _eval_under(x.coeffs, x.ctx.level, vals, c2)


def _unify(x: "TowerElement", y: "TowerElement"):
    x = _migrate(x)
    y = _migrate(y)
    if x.ctx is y.ctx:
        return x.ctx, x.coeffs, y.coeffs
    if x.ctx.is_ancestor_of(y.ctx):
        return y.ctx, _lift(x, y.ctx).coeffs, y.coeffs
    if y.ctx.is_ancestor_of(x.ctx):
        return x.ctx, x.coeffs, _lift(y, x.ctx).coeffs
    raise ContextMismatch("elements live in unrelated towers")


def common_context(elems: Iterable["TowerElement"]) -> TowerContext:
    ctx = QQ
    for e in elems:
        e2 = _migrate(e)
        if ctx.is_ancestor_of(e2.ctx):
            ctx = e2.ctx
        elif not e2.ctx.is_ancestor_of(ctx):
            raise ContextMismatch("elements live in unrelated towers")
    return ctx


class TowerElement:
    __slots__ = ("ctx", "coeffs")

    def __init__(self, ctx: TowerContext, coeffs):
        self.ctx = ctx
        self.coeffs = coeffs

    # --- predicates ---

    def is_zero(self) -> bool:
        return _c_is_zero(_migrate(self).coeffs)

    def __bool__(self):
        return not self.is_zero()

    def is_rational(self) -> bool:
        return _c_is_zero(_migrate(self).coeffs[1:])

    def rational_value(self) -> Fraction:
        x = _migrate(self)
        if not _c_is_zero(x.coeffs[1:]):
            raise ValueError("element is not rational")
        return x.coeffs[0]

    # --- arithmetic ---

    def _coerce(self, other):
        if isinstance(other, TowerElement):
            return other
        if isinstance(other, (int, Fraction)):
            return self.ctx.from_rational(other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        ctx, a, b = _unify(self, other)
        return TowerElement(ctx, _c_add(a, b))

    __radd__ = __add__

    def __neg__(self):
        return TowerElement(self.ctx, _c_neg(self.coeffs))

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        ctx, a, b = _unify(self, other)
        return TowerElement(ctx, _c_mul(ctx.squares_chain(), a, b, ctx.level))

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self * invert(other)

    def __rtruediv__(self, other):
        return self._coerce(other) * invert(self)

    def __pow__(self, n: int):
        if n < 0:
            return invert(self) ** (-n)
        result = self.ctx.one()
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __eq__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        try:
            _, a, b = _unify(self, other)
        except ContextMismatch:
            return False
        return a == b

    def __hash__(self):
        x = _migrate(self)
        return hash((id(x.ctx), x.coeffs))

    # --- display ---

    def __str__(self):
        x = _migrate(self)
        names = [n for n, _ in x.ctx.generators]
        terms = []
        for idx, c in enumerate(x.coeffs):
            if c == 0:
                continue
            mono = "*".join(names[i] for i in range(x.ctx.level) if idx >> i & 1)
            if not mono:
                terms.append(str(c))
            elif c == 1:
                terms.append(mono)
            elif c == -1:
                terms.append(f"-{mono}")
            else:
                terms.append(f"{c}*{mono}")
        if not terms:
            return "0"
        out = terms[0]
        for t in terms[1:]:
            out += f" - {t[1:]}" if t.startswith("-") else f" + {t}"
        return out

    def __repr__(self):
        return f"<{self} in {self.ctx!r}>"


# --- module operations ---

def _squarefree_split(m: int):
    """m = u^2 * s with s squarefree (sign kept on s); returns (u, s)."""
    if m == 0:
        raise ZeroRadicand("zero radicand")
    sign = -1 if m < 0 else 1
    m = abs(m)
    if gmpy2.is_square(m):
        return int(gmpy2.isqrt(m)), sign
    u, s = 1, 1
    for p, e in factorint(m).items():
        u *= p ** (e // 2)
        if e % 2:
            s *= p
    return u, sign * s


def adjoin_sqrt(ctx: TowerContext, d, degree_cap: Optional[int] = None):
    """Return (ctx2, s) with s*s == d, extending ctx by at most one generator.

    Rational radicands are squarefree-normalized and deduplicated against
    existing generators; tower radicands are adjoined as-is (squares are
    detected lazily at inversion time).
    """
    cap = DEGREE_CAP if degree_cap is None else degree_cap
    ctx, _ = _current(ctx)
    if isinstance(d, (int, Fraction)):
        d = ctx.from_rational(d)
    d = _migrate(d)
    ctx2 = d.ctx if d.ctx.level >= ctx.level else ctx
    if not (ctx.is_ancestor_of(ctx2) or ctx2.is_ancestor_of(ctx)):
        raise ContextMismatch("radicand context unrelated to base context")
    if ctx2 is not ctx:
        ctx = ctx2
    d = _lift(d, ctx)
    if d.is_zero():
        raise ZeroRadicand("cannot adjoin a square root of zero")

    if d.is_rational():
        q = d.rational_value()
        u, s = _squarefree_split(q.numerator * q.denominator)
        scale = Fraction(u, q.denominator)
        if s == 1:
            return ctx, ctx.from_rational(scale)
        walk = ctx
        while walk.parent is not None:
            if walk.gen_square.is_rational() and walk.gen_square.rational_value() == s:
                g = _lift(walk.gen(), ctx)
                return ctx, g * scale
            walk = walk.parent
        if 2 * ctx.degree > cap:
            raise DegreeCapExceeded(f"tower degree would exceed {cap}")
        new_ctx = ctx._adjoin_raw(ctx.from_rational(s))
        return new_ctx, new_ctx.gen() * scale

    # tower-valued radicand: reuse only an exact coefficient match
    for key, child in ctx._children.items():
        if key == d.coeffs:
            return child, child.gen()
    if 2 * ctx.degree > cap:
        raise DegreeCapExceeded(f"tower degree would exceed {cap}")
    new_ctx = ctx._adjoin_raw(d)
    return new_ctx, new_ctx.gen()


def invert(x: TowerElement, auto_simplify: bool = True) -> TowerElement:
    while True:
        x = _migrate(x)
        if _c_is_zero(x.coeffs):
            raise DivisionByZero("inversion of zero")
        try:
            coeffs = _c_inv(x.ctx.squares_chain(), x.coeffs, x.ctx.level, x.ctx)
            return TowerElement(x.ctx, coeffs)
        except SquareDetected as exc:
            if not auto_simplify:
                raise
            _register_collapse(exc)


def relative_conjugate(x: TowerElement) -> TowerElement:
    x = _migrate(x)
    if x.ctx.level == 0:
        raise RationalContext("no generator to conjugate over")
    h = x.ctx.degree // 2
    return TowerElement(x.ctx, x.coeffs[:h] + _c_neg(x.coeffs[h:]))


def field_norm(x: TowerElement) -> Fraction:
    x = _migrate(x)
    sq = x.ctx.squares_chain()
    c = x.coeffs
    level = x.ctx.level
    while level > 0:
        h = 1 << (level - 1)
        a, b = c[:h], c[h:]
        c = _c_sub(
            _c_mul(sq, a, a, level - 1),
            _c_mul(sq, sq[level - 1], _c_mul(sq, b, b, level - 1), level - 1),
        )
        level -= 1
    return c[0]


def _poly_mul(sq, p, q, level):
    out = [(_ZERO,) * (1 << level) for _ in range(len(p) + len(q) - 1)]
    for i, a in enumerate(p):
        if _c_is_zero(a):
            continue
        for j, b in enumerate(q):
            if _c_is_zero(b):
                continue
            out[i + j] = _c_add(out[i + j], _c_mul(sq, a, b, level))
    return out


def pencil_norm(y1: TowerElement, y2: TowerElement):
    """Coefficients of Norm_{K(t)/Q(t)}(y1 + t*y2) as a list of Fractions."""
    ctx, a, b = _unify(y1, y2)
    if _c_is_zero(a) and _c_is_zero(b):
        raise ValueError("pencil of two zero elements")
    sq = ctx.squares_chain()
    poly = [a, b]
    level = ctx.level
    while level > 0:
        h = 1 << (level - 1)
        pa = [c[:h] for c in poly]
        pb = [c[h:] for c in poly]
        sa = _poly_mul(sq, pa, pa, level - 1)
        sb = _poly_mul(sq, pb, pb, level - 1)
        d = sq[level - 1]
        poly = [
            _c_sub(x, _c_mul(sq, d, y, level - 1))
            for x, y in zip(sa, sb)
        ]
        level -= 1
    coeffs = [c[0] for c in poly]
    while len(coeffs) > 1 and coeffs[-1] == 0:
        coeffs.pop()
    return coeffs


class EmbeddingSet:
    """All complex embeddings of a tower context as certified intervals."""

    def __init__(self, ctx: TowerContext, bits: int, assignments):
        self.ctx = ctx
        self.bits = bits
        self.assignments = assignments  # list of tuples of CI, one per generator
        self._monomials = []
        for assign in assignments:
            mono = [CI.exact(1)] * ctx.degree
            for idx in range(1, ctx.degree):
                low = idx & -idx
                pos = low.bit_length() - 1
                mono[idx] = (mono[idx ^ low] * assign[pos]).round(bits + 16)
            self._monomials.append(mono)

    def __len__(self):
        return len(self.assignments)

    def is_totally_real(self) -> bool:
        return all(ci.is_real() for assign in self.assignments for ci in assign)

    def eval_at(self, i: int, x: TowerElement) -> CI:
        x = _migrate(x)
        if x.ctx is not self.ctx:
            x = _lift(x, self.ctx)
        mono = self._monomials[i]
        re = RI.exact(0)
        im = RI.exact(0)
        for idx, c in enumerate(x.coeffs):
            if c == 0:
                continue
            m = mono[idx]
            re = re + m.re * c
            im = im + m.im * c
        return CI(re.round(self.bits + 16), im.round(self.bits + 16))


def _build_embeddings(ctx: TowerContext, bits: int):
    if ctx.level == 0:
        return [()]
    lower = _build_embeddings(ctx.parent, bits)
    out = []
    for assign in lower:
        partial = EmbeddingSet(ctx.parent, bits, [assign])
        w = partial.eval_at(0, ctx.gen_square)
        if w.contains_zero():
            raise BranchCutError("radicand interval touches zero")
        s = w.sqrt(bits)
        out.append(assign + (s,))
        out.append(assign + (-s,))
    return out


def embed_all(ctx: TowerContext, precision: int = 64, precision_cap: Optional[int] = None) -> EmbeddingSet:
    """Certified complex-interval embeddings; precision is raised internally
    until every generator interval excludes zero."""
    if precision < 32:
        raise ValueError("precision must be at least 32 bits")
    cap = PRECISION_CAP if precision_cap is None else precision_cap
    ctx, _ = _current(ctx)
    bits = precision
    while True:
        try:
            assigns = _build_embeddings(ctx, bits)
            return EmbeddingSet(ctx, bits, assigns)
        except BranchCutError:
            bits *= 2
            if bits > cap:
                raise PrecisionCapExceeded(
                    f"could not separate embedding intervals below {cap} bits"
                ) from None


# --- parsing / serialization ---

_TERM_RE = _re.compile(r"^\s*([+-]?\s*[^+-]*(?:[+-]\d+)?)")


def parse_element(ctx: TowerContext, text: str) -> TowerElement:
    """Parse expressions like '1/2 + 3*g1 - g1*g2' in the given context."""
    ctx, _ = _current(ctx)
    names = {n: i for i, (n, _) in enumerate(ctx.generators)}
    s = text.replace(" ", "")
    if not s:
        raise ValueError("empty element expression")
    # split into signed terms
    terms = []
    buf = ""
    for ch in s:
        if ch in "+-" and buf and buf[-1] not in "+-/*(":
            terms.append(buf)
            buf = ch
        else:
            buf += ch
    terms.append(buf)
    coeffs = [_ZERO] * ctx.degree
    for term in terms:
        sign = 1
        while term and term[0] in "+-":
            if term[0] == "-":
                sign = -sign
            term = term[1:]
        if not term:
            raise ValueError(f"malformed term in {text!r}")
        coeff = Fraction(sign)
        idx = 0
        for factor in term.split("*"):
            if factor in names:
                bit = 1 << names[factor]
                if idx & bit:
                    raise ValueError(f"repeated generator {factor!r} in {text!r}")
                idx |= bit
            else:
                coeff *= Fraction(factor)
        coeffs[idx] += coeff
    return ctx.element(coeffs)


def serialize_context(ctx: TowerContext):
    ctx, _ = _current(ctx)
    return [{"name": n, "square": str(s)} for n, s in ctx.generators]


def context_from_serialized(data) -> TowerContext:
    ctx = QQ
    for entry in data:
        square = parse_element(ctx, entry["square"])
        ctx = ctx._adjoin_raw(square)
    return ctx


def random_element(ctx: TowerContext, rng: random.Random, bound: int = 10) -> TowerElement:
    coeffs = [
        Fraction(rng.randint(-bound, bound), rng.randint(1, bound))
        for _ in range(ctx.degree)
    ]
    return ctx.element(coeffs)
