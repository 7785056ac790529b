from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from qbarforms.intervals import CI, RI, BranchCutError

fractions_st = st.fractions(
    min_value=Fraction(-100), max_value=Fraction(100), max_denominator=1000
)


def ri_st():
    return st.tuples(fractions_st, fractions_st).map(
        lambda ab: RI(min(ab), max(ab))
    )


class TestRI:
    def test_exact_ring_ops(self):
        a = RI(Fraction(1, 3), Fraction(1, 2))
        b = RI(Fraction(-1), Fraction(2))
        s = a + b
        assert s.lo == Fraction(-2, 3) and s.hi == Fraction(5, 2)
        p = a * b
        assert p.lo == Fraction(-1, 2) and p.hi == 1

    def test_empty_interval_rejected(self):
        with pytest.raises(ValueError):
            RI(1, 0)

    def test_recip(self):
        r = RI(2, 4).recip()
        assert r.lo == Fraction(1, 4) and r.hi == Fraction(1, 2)
        with pytest.raises(ZeroDivisionError):
            RI(-1, 1).recip()

    def test_sq_straddling_zero(self):
        s = RI(-2, 3).sq()
        assert s.lo == 0 and s.hi == 9

    def test_sqrt_encloses(self):
        r = RI.exact(2).sqrt(64)
        assert r.lo**2 <= 2 <= r.hi**2
        assert r.width() < Fraction(1, 2**60)

    def test_nth_root(self):
        r = RI.exact(32).nth_root(5, 64)
        assert r.lo**5 <= 32 <= r.hi**5

    def test_pow_fraction(self):
        r = RI.exact(8).pow_fraction(Fraction(2, 3), 64)
        assert r.contains(4)
        r = RI.exact(4).pow_fraction(Fraction(-1, 2), 64)
        assert r.contains(Fraction(1, 2))

    @given(ri_st(), ri_st(), fractions_st, fractions_st)
    def test_mul_contains_products(self, a, b, x, y):
        x = a.lo + (a.hi - a.lo) * abs(x) / 101
        y = b.lo + (b.hi - b.lo) * abs(y) / 101
        assert (a * b).contains(x * y)

    @given(ri_st(), st.integers(min_value=8, max_value=128))
    def test_round_outward(self, a, bits):
        r = a.round(bits)
        assert r.lo <= a.lo and r.hi >= a.hi
        assert r.width() <= a.width() + Fraction(2, 1 << bits)


class TestCI:
    def test_real_flag(self):
        assert CI.exact(3).is_real()
        assert not CI(RI.exact(3), RI.exact(1)).is_real()
        assert not CI(RI.exact(3), RI(0, Fraction(1, 10**9))).is_real()

    def test_mul(self):
        i = CI(RI.exact(0), RI.exact(1))
        m = i * i
        assert m.re.contains(-1) and m.re.is_point()
        assert m.im.is_point() and m.im.lo == 0

    def test_sqrt_positive_real(self):
        s = CI.exact(2).sqrt(64)
        assert s.is_real()
        assert s.re.lo**2 <= 2 <= s.re.hi**2

    def test_sqrt_negative_real(self):
        s = CI.exact(-4).sqrt(64)
        assert s.re.is_point() and s.re.lo == 0
        assert s.im.contains(2)

    def test_sqrt_complex(self):
        z = CI(RI.exact(0), RI.exact(2))  # sqrt(2i) = 1 + i
        s = z.sqrt(96)
        assert s.re.contains(1) or s.re.width() < Fraction(1, 2**90)
        sq = s * s
        assert sq.re.contains(0)
        assert sq.im.contains(2)

    def test_branch_cut(self):
        z = CI(RI(-2, -1), RI(Fraction(-1, 100), Fraction(1, 100)))
        with pytest.raises(BranchCutError):
            z.sqrt(64)

    @given(
        st.tuples(fractions_st, fractions_st),
        st.integers(min_value=32, max_value=96),
    )
    def test_sqrt_squares_back(self, reim, bits):
        re, im = reim
        if im == 0 and re < 0:
            im = Fraction(1, 7)  # keep away from the cut
        z = CI(RI.exact(re), RI.exact(im))
        if z.contains_zero():
            return
        try:
            s = z.sqrt(bits)
        except BranchCutError:
            return
        sq = s * s
        pad = Fraction(1, 2 ** (bits - 20))
        assert sq.re.lo - pad <= re <= sq.re.hi + pad
        assert sq.im.lo - pad <= im <= sq.im.hi + pad
