"""Bound catalog and certificate production.

Every displayed inequality is an executable right-hand side: an exact
prime-power constant times height factors with rational exponents.  The
comparison is done on exact-rational interval enclosures with precision
escalation (Python integers make the huge tower constants like
3^(12 k^4 (k+1) (3/2)^k) exact, so no overflow is possible); verdicts are
three-valued and reported alongside log-domain numbers.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple, Union

import mpmath

from .heights import HeightValue, PrimePowers
from .intervals import RI

__all__ = [
    "BoundCertificate",
    "BoundExpr",
    "bound_rhs",
    "check",
    "inequality_suite",
    "UnknownBoundId",
    "BadParams",
]

PREC_START = 128
PREC_MAX = 4096


class UnknownBoundId(ValueError):
    pass


class BadParams(ValueError):
    pass


def _pp(n) -> PrimePowers:
    return PrimePowers.from_fraction(n)


def _sqrt_pp(n: int) -> PrimePowers:
    return _pp(n) ** Fraction(1, 2)


@dataclass
class BoundExpr:
    """constant * prod_i height_i^(e_i), heights tagged by parameter name."""

    constant: PrimePowers
    factors: List[Tuple[str, HeightValue, Fraction]]

    def interval(self, bits: int) -> RI:
        out = self.constant.interval(bits)
        for _, h, e in self.factors:
            out = (out * h.interval(bits).pow_fraction(e, bits)).round(bits)
        return out

    def exact_value(self) -> Optional[PrimePowers]:
        out = self.constant
        for _, h, e in self.factors:
            xp = h.exact_power()
            if xp is None:
                return None
            power, val = xp
            out = out * val ** (e / power)
        return out


_CATALOG = {}


def _bound(bound_id):
    def reg(fn):
        _CATALOG[bound_id] = fn
        return fn

    return reg


def _need(params, *names):
    missing = [n for n in names if n not in params]
    if missing:
        raise BadParams(f"missing parameters {missing}")
    return [params[n] for n in names]


def _f(x) -> Fraction:
    return Fraction(x)


@_bound("qz_bound")
def _qz(params):
    (hf,) = _need(params, "HF")
    return BoundExpr(_pp(2), [("HF", hf, _f("1/2"))])


@_bound("zero_eq")
def _zero_eq(params):
    L, hf, hz = _need(params, "L", "HF", "HZ")
    return BoundExpr(
        _pp(8) * _pp(3) ** (2 * (L - 1)),
        [("HF", hf, _f("1/2")), ("HZ", hz, Fraction(4, L))],
    )


@_bound("vaaler_even")
def _vaaler_even(params):
    k, hf, hz = _need(params, "k", "HF", "HZ")
    const = _pp(24) * _pp(2) ** Fraction(k - 1, 4) * _pp(3) ** Fraction(
        k * k * (k + 1) ** 2, 4
    )
    return BoundExpr(
        const,
        [
            ("HF", hf, Fraction(k * k, 2)),
            ("HZ", hz, Fraction(k * k + k + 2, 2 * k)),
        ],
    )


@_bound("o1")
def _o1(params):
    k, hf, hz = _need(params, "k", "HF", "HZ")
    const = _pp(24) * _pp(2) ** Fraction(k - 1, 4) * _pp(3) ** Fraction(
        k * (k + 1) ** 2 * (k + 4), 4
    )
    return BoundExpr(
        const,
        [
            ("HF", hf, Fraction(k * k, 2)),
            ("HZ", hz, Fraction(k * k + k + 2, 2 * k + 1)),
        ],
    )


@_bound("vaaler_odd")
def _vaaler_odd(params):
    k, hf, hz = _need(params, "k", "HF", "HZ")
    return BoundExpr(
        _pp(3) ** (2 * k * (k + 1) ** 3),
        [("HF", hf, Fraction(k * k)), ("HZ", hz, Fraction(4 * k, 3))],
    )


@_bound("siegel3")
def _siegel3(params):
    L, hz = _need(params, "L", "HZ")
    return BoundExpr(_pp(3) ** (L * (L - 1) // 2), [("HZ", hz, _f(1))])


@_bound("regular2")
def _regular2(params):
    L, r, hf, hz = _need(params, "L", "r", "HF", "HZ")
    return BoundExpr(
        _pp(3) ** (L * (L - 1) // 2),
        [("HF", hf, Fraction(r)), ("HZ", hz, _f(2))],
    )


@_bound("regular3")
def _regular3(params):
    L, hz = _need(params, "L", "HZ")
    return BoundExpr(_pp(3) ** (L * (L - 1) // 2), [("HZ", hz, _f(1))])


@_bound("anis")
def _anis(params):
    L, hz = _need(params, "L", "HZ")
    const = _pp(2) * _sqrt_pp(L) * _pp(3) ** Fraction((L + 2) * (L - 1), 4)
    return BoundExpr(const, [("HZ", hz, Fraction(L + 2, 2 * L))])


@_bound("witt1")
def _witt1(params):
    k, hf, hz = _need(params, "k", "HF", "HZ")
    outer = Fraction((k + 1) * (k + 2), 2) * Fraction(3, 2) ** k
    const = _pp(3) ** (12 * k**4 * (k + 1) * Fraction(3, 2) ** k)
    const = const * _sqrt_pp(k) ** outer
    return BoundExpr(
        const,
        [
            ("HF", hf, (k * k + 1) * outer),
            ("HZ", hz, Fraction(6 * k + 5, 4 * k + 2) * outer),
        ],
    )


@_bound("witt2")
def _witt2(params):
    k, hz = _need(params, "k", "HZ")
    const = _pp(2) * _sqrt_pp(2 * k + 1) * _pp(3) ** Fraction((2 * k + 3) * k, 2)
    return BoundExpr(const, [("HZ", hz, Fraction(2 * k + 3, 4 * k + 2))])


_CATALOG["anis_comp"] = _CATALOG["witt2"]


@_bound("even_dec")
def _even_dec(params):
    k, hf, hz = _need(params, "k", "HF", "HZ")
    outer = Fraction((k + 1) * (k + 2), 2) * Fraction(3, 2) ** k
    const = _pp(3) ** (12 * k**5 * Fraction(3, 2) ** k)
    return BoundExpr(
        const, [("HF", hf, k * k * outer), ("HZ", hz, outer)]
    )


@_bound("hyp1")
def _hyp1(params):
    k, hf, hz = _need(params, "k", "HF", "HZ")
    return BoundExpr(
        _pp(3) ** ((k + 1) ** 3),
        [
            ("HF", hf, Fraction(k, 2)),
            ("HZ", hz, Fraction((k + 1) * (k + 2), 2 * k * k)),
        ],
    )


@_bound("siegel2")
def _siegel2(params):
    L, hf, hz = _need(params, "L", "HF", "HZ")
    return BoundExpr(
        _pp(3) ** Fraction((L - 1) ** 2 * (L + 2), 4),
        [("HF", hf, Fraction(L * (L + 1), 2)), ("HZ", hz, Fraction(L))],
    )


@_bound("ref_bound")
def _ref_bound(params):
    N, hf, hx = _need(params, "N", "HF", "HX")
    return BoundExpr(
        _pp(N**3 * (N + 2)), [("HF", hf, _f(1)), ("HX", hx, _f(2))]
    )


@_bound("isom_bound")
def _isom_bound(params):
    N, L, hf, hz = _need(params, "N", "L", "HF", "HZ")
    const = _pp(3) ** Fraction((L + 2) * (L - 1), 2) * _pp(4 * L * N**3 * (N + 2))
    return BoundExpr(const, [("HF", hf, _f(1)), ("HZ", hz, Fraction(L + 2, L))])


@_bound("cd_bound")
def _cd_bound(params):
    N, L, hf, hz, hs = _need(params, "N", "L", "HF", "HZ", "Hsigma")
    outer = Fraction(5) ** (L - 1)
    const = (_pp(2 * N * N) * _pp(3) ** Fraction(L - 1, 2)) ** (
        Fraction(L * L, 2) * outer
    )
    return BoundExpr(
        const,
        [
            ("HF", hf, Fraction(L, 3) * outer),
            ("HZ", hz, Fraction(L, 2) * outer),
            ("Hsigma", hs, outer),
        ],
    )


@_bound("bezout")
def _bezout(params):
    hf, hw = _need(params, "HF", "HW")
    return BoundExpr(_sqrt_pp(2), [("HW", hw, _f(2)), ("HF", hf, _f(1))])


@_bound("matrix_pm")
def _matrix_pm(params):
    (ha,) = _need(params, "HA")
    return BoundExpr(_pp(2), [("HA", ha, _f(1))])


@_bound("matrix_prod")
def _matrix_prod(params):
    ha, hb = _need(params, "HA", "HB")
    return BoundExpr(PrimePowers.one(), [("HA", ha, _f(1)), ("HB", hb, _f(1))])


@_bound("sum_height")
def _sum_height(params):
    # h(sum a_i x_i) <= h(a) prod h(x_i); the coefficient height is the
    # inhomogeneous one (the projective version fails under common scaling)
    ha, hxs = _need(params, "ha", "hxs")
    return BoundExpr(
        PrimePowers.one(),
        [("ha", ha, _f(1))] + [(f"hx{i}", h, _f(1)) for i, h in enumerate(hxs)],
    )


@_bound("hf_vs_curly")
def _hf_vs_curly(params):
    (hf,) = _need(params, "HF")
    return BoundExpr(_sqrt_pp(2), [("HF", hf, _f(1))])


@_bound("prod_1")
def _prod_1(params):
    (hxs,) = _need(params, "Hxs")
    return BoundExpr(
        PrimePowers.one(), [(f"Hx{i}", h, _f(1)) for i, h in enumerate(hxs)]
    )


@_bound("prod_2")
def _prod_2(params):
    h1, h2 = _need(params, "HX1", "HX2")
    return BoundExpr(PrimePowers.one(), [("HX1", h1, _f(1)), ("HX2", h2, _f(1))])


@_bound("prod_3")
def _prod_3(params):
    J, hf, hxs = _need(params, "J", "HF", "Hxs")
    return BoundExpr(
        PrimePowers.one(),
        [("HF", hf, Fraction(J))] + [(f"Hx{i}", h, _f(1)) for i, h in enumerate(hxs)],
    )


@_bound("intersection")
def _intersection(params):
    h1, h2 = _need(params, "HU1", "HU2")
    return BoundExpr(PrimePowers.one(), [("HU1", h1, _f(1)), ("HU2", h2, _f(1))])


def bound_rhs(bound_id: str, params: Dict) -> BoundExpr:
    if bound_id not in _CATALOG:
        raise UnknownBoundId(bound_id)
    return _CATALOG[bound_id](params)


def _log_pair(ri: RI) -> Tuple[float, float]:
    with mpmath.workprec(80):
        lo = mpmath.iv.log(mpmath.iv.mpf(ri.lo.numerator) / ri.lo.denominator)
        hi = mpmath.iv.log(mpmath.iv.mpf(ri.hi.numerator) / ri.hi.denominator)
        return float(mpmath.mpf(lo.a)), float(mpmath.mpf(hi.b))


@dataclass
class BoundCertificate:
    bound_id: str
    params: Dict
    lhs: RI
    rhs: RI
    verdict: str
    caveats: List[str] = dc_field(default_factory=list)
    provenance: Dict = dc_field(default_factory=dict)

    @property
    def slack_log(self) -> float:
        # log(rhs.lo) - log(lhs.hi): certified remaining room when verified
        return _log_pair(self.rhs)[0] - _log_pair(self.lhs)[1]

    def to_json(self):
        num = {
            k: v for k, v in self.params.items() if isinstance(v, (int, str))
        }
        return {
            "bound_id": self.bound_id,
            "params": num,
            "lhs": {"lo": str(self.lhs.lo), "hi": str(self.lhs.hi)},
            "rhs_log": {
                "lo": _log_pair(self.rhs)[0],
                "hi": _log_pair(self.rhs)[1],
            },
            "slack_log": self.slack_log,
            "verdict": self.verdict,
            "caveats": list(self.caveats),
            "provenance": dict(self.provenance),
        }


LhsLike = Union[HeightValue, Sequence[HeightValue], RI]


def _lhs_interval(lhs: LhsLike, bits: int) -> RI:
    if isinstance(lhs, RI):
        return lhs
    if isinstance(lhs, HeightValue):
        return lhs.interval(bits)
    out = RI.exact(1)
    for h in lhs:
        out = (out * h.interval(bits)).round(bits)
    return out


def _lhs_exact(lhs: LhsLike) -> Optional[PrimePowers]:
    if isinstance(lhs, RI):
        return None
    hs = [lhs] if isinstance(lhs, HeightValue) else list(lhs)
    out = PrimePowers.one()
    for h in hs:
        xp = h.exact_power()
        if xp is None:
            return None
        power, val = xp
        out = out * val ** Fraction(1, power)
    return out


def check(
    bound_id: str,
    lhs: LhsLike,
    params: Dict,
    caveats: Optional[List[str]] = None,
    provenance: Optional[Dict] = None,
    prec_start: int = PREC_START,
    prec_max: int = PREC_MAX,
) -> BoundCertificate:
    expr = bound_rhs(bound_id, params)
    bits = prec_start
    while True:
        lhs_iv = _lhs_interval(lhs, bits)
        rhs_iv = expr.interval(bits)
        if lhs_iv.hi <= rhs_iv.lo:
            verdict = "verified"
            break
        if lhs_iv.lo > rhs_iv.hi:
            verdict = "violated"
            break
        if bits >= prec_max:
            # last resort: exact equality decides ties like H = H
            le, re_ = _lhs_exact(lhs), expr.exact_value()
            verdict = (
                "verified" if le is not None and le == re_ else "inconclusive"
            )
            break
        bits *= 2
    return BoundCertificate(
        bound_id=bound_id,
        params=params,
        lhs=lhs_iv,
        rhs=rhs_iv,
        verdict=verdict,
        caveats=list(caveats or []),
        provenance=dict(provenance or {}),
    )


def inequality_suite(instance, rng=None) -> List[BoundCertificate]:
    """Runs the seven stand-alone inequality families against an instance's
    drawn vectors/matrices/subspaces.  `instance` is a dict that may contain
    keys: vectors (list of VectorA), matrices (list of square MatrixA),
    gram (symmetric MatrixA), subspaces (list of Subspace), unimodular
    (list of det +-1 MatrixA), coeffs (VectorA).  Missing keys skip their
    families; an empty instance yields an empty list."""
    import random as _random

    from .heights import (
        height_form_poly,
        height_gram,
        height_inhom,
        height_subspace,
        height_vector,
    )
    from .linalg import MatrixA, Subspace, VectorA, intersect

    rng = rng or _random.Random(0)
    out: List[BoundCertificate] = []
    vectors = instance.get("vectors") or []
    gram = instance.get("gram")
    subspaces = instance.get("subspaces") or []
    unimodular = instance.get("unimodular") or []
    matrices = instance.get("matrices") or []
    coeffs = instance.get("coeffs")

    if vectors:
        span = Subspace.from_spanning(vectors, len(vectors[0]))
        if span.dim == len(vectors):
            out.append(
                check(
                    "prod_1",
                    height_subspace(span),
                    {"Hxs": [height_vector(v) for v in vectors]},
                )
            )
        if gram is not None:
            imgs = [gram.matvec(v) for v in vectors]
            ispan = Subspace.from_spanning(imgs, gram.nrows)
            if ispan.dim == len(vectors):
                out.append(
                    check(
                        "prod_3",
                        height_subspace(ispan),
                        {
                            "J": len(vectors),
                            "HF": height_gram(gram),
                            "Hxs": [height_vector(v) for v in vectors],
                        },
                    )
                )
    if len(subspaces) >= 2:
        u1, u2 = subspaces[0], subspaces[1]
        cap = intersect(u1, u2)
        if 0 < cap.dim:
            out.append(
                check(
                    "intersection",
                    height_subspace(cap),
                    {"HU1": height_subspace(u1), "HU2": height_subspace(u2)},
                )
            )
    for A in unimodular:
        n = A.nrows
        for sign in (1, -1):
            shifted = MatrixA(
                [
                    [A[i, j] + (sign if i == j else 0) for j in range(n)]
                    for i in range(n)
                ]
            )
            if all(e.is_zero() for r in shifted.rows for e in r):
                continue
            out.append(
                check(
                    "matrix_pm", height_gram(shifted), {"HA": height_gram(A)}
                )
            )
    if len(matrices) >= 2:
        A, B = matrices[0], matrices[1]
        out.append(
            check(
                "matrix_prod",
                height_gram(A.matmul(B)),
                {"HA": height_gram(A), "HB": height_gram(B)},
            )
        )
    if coeffs is not None and vectors:
        ks = min(len(coeffs), len(vectors))
        s = VectorA([0] * len(vectors[0]))
        for ai, v in zip(list(coeffs)[:ks], vectors[:ks]):
            s = s + v.scale(ai)
        if not s.is_zero():
            out.append(
                check(
                    "sum_height",
                    height_inhom(s),
                    {
                        "ha": height_inhom(VectorA(list(coeffs)[:ks])),
                        "hxs": [height_inhom(v) for v in vectors[:ks]],
                    },
                )
            )
    if gram is not None:
        out.append(
            check(
                "hf_vs_curly", height_form_poly(gram), {"HF": height_gram(gram)}
            )
        )
    return out
