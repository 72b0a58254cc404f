import math
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ffsupnorm.errors import FfsnError
from ffsupnorm.exactalg import (
    CycInt,
    Poly,
    RationalSeries,
    SqrtQInt,
    cyc_abs,
    monic_polys,
    poly_code,
    poly_factor,
    series_coeff,
)

P = 5
coeff_lists = st.lists(st.integers(min_value=0, max_value=P - 1), min_size=1, max_size=6)
cyc_buckets = st.lists(st.integers(-9, 9), min_size=P, max_size=P)


def poly(*low):
    return Poly.from_low(list(low), P)


class TestPoly:
    def test_factor_splitting_quadratic(self):
        lc, factors = poly_factor(poly(1, 0, 1))  # T^2 + 1, and 2^2 = -1 in F_5
        assert lc == 1
        assert factors == [(poly(2, 1), 1), (poly(3, 1), 1)]

    def test_factor_repeated_root(self):
        _, factors = poly_factor(poly(2, 1) ** 2)  # (T - 3)^2
        assert factors == [(poly(2, 1), 2)]

    def test_factor_with_unit(self):
        lc, factors = poly_factor(poly(2, 0, 0, 4))  # 4T^3 + 2
        assert lc == 4
        assert factors == [(poly(2, 1), 1), (poly(4, 3, 1), 1)]

    def test_factor_of_zero(self):
        with pytest.raises(FfsnError) as exc:
            poly_factor(Poly.zero(P))
        assert exc.value.code == "factor-of-zero"

    def test_unverified_factorization(self, monkeypatch):
        # a backend that hands back a reducible factor
        monkeypatch.setattr("ffsupnorm.exactalg.gf_factor", lambda c, p, K: (1, [([1, 2, 1], 1)]))
        with pytest.raises(FfsnError) as exc:
            poly_factor(poly(1, 2, 1))
        assert exc.value.code == "factor-failed"

    def test_monic_polys_are_indexed_by_code(self):
        for d in range(3):
            for i, f in enumerate(monic_polys(d, P)):
                assert f.is_monic() and f.degree == d
                assert poly_code(f) == i

    @given(coeff_lists, coeff_lists)
    def test_divmod_reconstructs(self, a, b):
        f, g = poly(*a), poly(*b)
        if g.is_zero():
            return
        q, r = divmod(f, g)
        assert q * g + r == f
        assert r.degree < g.degree

    @given(coeff_lists)
    def test_factorization_multiplies_back(self, a):
        f = poly(*a)
        if f.is_zero():
            return
        lc, factors = poly_factor(f)
        prod = Poly.const(lc, P)
        for g, k in factors:
            prod = prod * g ** k
        assert prod == f

    @given(coeff_lists, coeff_lists)
    def test_factorization_of_product_is_union(self, a, b):
        f, g = poly(*a), poly(*b)
        if f.is_zero() or g.is_zero():
            return
        lf, ff = poly_factor(f)
        lg, fg = poly_factor(g)
        lfg, ffg = poly_factor(f * g)
        assert lfg == (lf * lg) % P
        expected = Counter()
        for h, k in ff + fg:
            expected[h] += k
        assert dict(ffg) == dict(expected)


class TestSqrtQInt:
    def test_arithmetic(self):
        r = SqrtQInt.sqrt_q(5)
        assert r * r == 5
        assert (r + 1) * (r - 1) == 4
        assert str(SqrtQInt(3, -2, 5)) == "3-2*sqrt(5)"

    @given(st.integers(-50, 50), st.integers(-50, 50))
    def test_sign_matches_float(self, a, b):
        x = SqrtQInt(a, b, 7)
        value = a + b * math.sqrt(7)
        expected = 0 if a == 0 and b == 0 else (1 if value > 0 else -1)
        assert x.sign() == expected

    def test_ordering(self):
        assert SqrtQInt(0, 1, 5) < 3
        assert SqrtQInt(0, 1, 5) > 2

    def test_square_base_compares_by_value(self):
        assert SqrtQInt(3, 0, 9) == SqrtQInt(0, 1, 9)
        assert SqrtQInt(7, -1, 9) == 4
        assert hash(SqrtQInt(3, 0, 9)) == hash(SqrtQInt(0, 1, 9))
        assert len({SqrtQInt(6, 0, 9), SqrtQInt(0, 2, 9), SqrtQInt(3, 1, 9)}) == 1
        assert SqrtQInt(0, 1, 9) < SqrtQInt(4, 0, 9)

    @given(st.integers(-50, 50), st.integers(-50, 50))
    def test_non_square_base_equality_is_structural(self, a, b):
        assert (SqrtQInt(a, b, 5) == SqrtQInt(0, 0, 5)) == (a == 0 and b == 0)

    def test_mismatched_base(self):
        with pytest.raises(FfsnError):
            SqrtQInt(1, 1, 5) + SqrtQInt(1, 1, 7)


class TestCycInt:
    def test_magnitudes(self):
        assert cyc_abs(CycInt.from_int(0, P)) == 0.0
        assert cyc_abs(CycInt.from_int(-1, P)) == 1.0
        assert cyc_abs(CycInt.from_buckets([1] * P, P)) == 0.0
        assert cyc_abs(CycInt.zeta(2, P)) == pytest.approx(1.0)

    def test_zeta_power_relation(self):
        z = CycInt.zeta(1, P)
        acc = CycInt.from_int(1, P)
        for _ in range(P):
            acc = acc * z
        assert acc == 1

    @given(st.lists(st.integers(-20, 20), min_size=P, max_size=P))
    def test_norm_is_product_with_conjugate(self, buckets):
        x = CycInt.from_buckets(buckets, P)
        n = x * x.conj()
        assert float(n.embed(1).real) == pytest.approx(cyc_abs(x) ** 2, abs=1e-9)

    @given(cyc_buckets, cyc_buckets, cyc_buckets)
    def test_ring_laws(self, a, b, c):
        x, y, z = (CycInt.from_buckets(v, P) for v in (a, b, c))
        assert x * y == y * x
        assert x + y == y + x
        assert (x * y) * z == x * (y * z)
        assert (x + y) + z == x + (y + z)
        assert x * (y + z) == x * y + x * z

    @given(cyc_buckets, cyc_buckets)
    def test_abs_is_multiplicative(self, a, b):
        x, y = CycInt.from_buckets(a, P), CycInt.from_buckets(b, P)
        assert cyc_abs(x * y) == pytest.approx(cyc_abs(x) * cyc_abs(y), rel=1e-9, abs=1e-9)

    def test_size_mismatch(self):
        with pytest.raises(FfsnError):
            CycInt([1, 2], P)


class TestRationalSeries:
    def test_binomial_series(self):
        s = RationalSeries.from_factors([], [[1, -1], [1, -1]])
        assert series_coeff(s, 2) == 3
        assert s.coefficients(4) == [1, 2, 3, 4, 5]

    def test_negative_index(self):
        assert series_coeff(RationalSeries((1,), (1,)), -1) == 0

    def test_non_unit_constant(self):
        with pytest.raises(FfsnError) as exc:
            RationalSeries((1,), (2, 1)).coefficients(1)
        assert exc.value.code == "non-invertible-series"

    def test_sqrtq_coefficients(self):
        q = 7
        s = RationalSeries.from_factors([], [[1, -1], [1, 1], [1, 1], [1, SqrtQInt(-1, -2, q)]])
        c = s.coefficients(2)
        assert c[1] == SqrtQInt(0, 2, q)
        assert c[2] == SqrtQInt(4 * q + 2, 2, q)

    @given(st.lists(st.integers(-9, 9), min_size=1, max_size=4),
           st.lists(st.integers(-9, 9), min_size=1, max_size=4),
           st.lists(st.integers(-3, 3), min_size=0, max_size=3))
    @settings(max_examples=30)
    def test_linear_in_the_numerator(self, f, g, tail):
        den = tuple([1] + tail)
        sf, sg = RationalSeries(tuple(f), den), RationalSeries(tuple(g), den)
        width = max(len(f), len(g))
        summed = tuple((f[i] if i < len(f) else 0) + (g[i] if i < len(g) else 0) for i in range(width))
        s = RationalSeries(summed, den)
        for n in (0, 1, 7, 50):
            assert series_coeff(s, n) == series_coeff(sf, n) + series_coeff(sg, n)
            assert series_coeff(RationalSeries(tuple(3 * x for x in f), den), n) == 3 * series_coeff(sf, n)

    @given(st.lists(st.integers(-9, 9), min_size=1, max_size=3),
           st.lists(st.integers(-3, 3), min_size=1, max_size=3))
    @settings(max_examples=30)
    def test_satisfies_the_denominator_recurrence(self, num, tail):
        den = [1] + tail
        c = RationalSeries(tuple(num), tuple(den)).coefficients(50)
        for k in range(len(num), 51):
            assert sum(den[j] * c[k - j] for j in range(len(den)) if j <= k) == 0

    def test_square_base_grid(self):
        # q = 9: sqrt(q) = 3 so the SqrtQInt series agrees with the integer one
        q = 9
        s = RationalSeries.from_factors([], [[1, -1], [1, 1], [1, 1], [1, SqrtQInt(-1, -2, q)]])
        t = RationalSeries.from_factors([], [[1, -1], [1, 1], [1, 1], [1, -7]])
        assert s.coefficients(10) == t.coefficients(10)
