import pytest
from hypothesis import given
from hypothesis import strategies as st

from ffsupnorm.errors import FfsnError
from ffsupnorm.exactalg import CycInt, Poly
from ffsupnorm.funfield import (
    Adele,
    Divisor,
    Place,
    RationalFunction,
    divisor_of,
    parse_adele,
    parse_divisor,
    parse_rational,
    psi0,
    residue,
    residue_pairing,
)

P = 5
INF = Place.infinity(P)


def rf(text):
    return parse_rational(text, P)


def place(*low):
    return Place.finite(Poly.from_low(list(low), P))


lows = st.lists(st.integers(0, P - 1), min_size=1, max_size=4)


@st.composite
def nonzero_rationals(draw):
    num = Poly.from_low(draw(lows), P)
    den = Poly.from_low(draw(lows), P)
    if num.is_zero():
        num = Poly.one(P)
    if den.is_zero():
        den = Poly.T(P)
    return RationalFunction(num, den)


@st.composite
def rational_adeles(draw):
    comps = {}
    for v in (place(0, 1), place(3, 1), place(2, 0, 1), INF):
        comps[v] = draw(nonzero_rationals())
    return Adele(P, comps)


class TestDivisors:
    def test_divisor_of_quotient(self):
        D = divisor_of(rf("T/(T+1)"))
        assert D == Divisor({place(0, 1): 1, place(1, 1): -1})
        assert D.degree == 0

    def test_divisor_of_T(self):
        assert divisor_of(rf("T")) == Divisor({place(0, 1): 1, INF: -1})

    def test_divisor_with_quadratic_place(self):
        D = divisor_of(rf("4*T^3 + 2"))
        assert D == Divisor({place(2, 1): 1, place(4, 3, 1): 1, INF: -3})
        assert D.degree == 0

    def test_divisor_of_zero(self):
        with pytest.raises(FfsnError) as exc:
            divisor_of(RationalFunction.const(0, P))
        assert exc.value.code == "divisor-of-zero"

    def test_parse_divisor_matches_str(self):
        D = Divisor({place(0, 1): 1, place(4, 3, 1): 2, INF: 1})
        assert parse_divisor(str(D), P) == D

    @given(st.lists(st.integers(0, P - 1), min_size=1, max_size=5),
           st.lists(st.integers(0, P - 1), min_size=1, max_size=5))
    def test_principal_divisors_have_degree_zero(self, num, den):
        n, d = Poly.from_low(num, P), Poly.from_low(den, P)
        if n.is_zero() or d.is_zero():
            return
        assert divisor_of(RationalFunction(n, d)).degree == 0


    @given(nonzero_rationals(), nonzero_rationals())
    def test_divisor_is_multiplicative(self, r1, r2):
        assert divisor_of(r1 * r2) == divisor_of(r1) + divisor_of(r2)
        assert divisor_of(r1.inverse()) == -divisor_of(r1)

class TestResidues:
    def test_simple_pole(self):
        assert residue(rf("1/T"), place(0, 1)) == 1

    def test_no_residue_at_infinity_for_polynomials(self):
        assert residue(rf("T"), INF) == 0

    def test_residue_at_infinity_of_inverse(self):
        # T = 1/s, dT = -ds/s^2: (1/T) dT = -ds/s
        assert residue(rf("1/T"), INF) == P - 1

    @given(st.lists(st.integers(0, P - 1), min_size=1, max_size=4),
           st.lists(st.integers(0, P - 1), min_size=1, max_size=4))
    def test_residue_theorem(self, num, den):
        n, d = Poly.from_low(num, P), Poly.from_low(den, P)
        if n.is_zero() or d.is_zero():
            return
        r = RationalFunction(n, d)
        places = set(divisor_of(r).support()) | {INF}
        assert sum(residue(r, v) for v in places) % P == 0


class TestCharacters:
    def test_psi0(self):
        assert psi0(0, P) == CycInt.from_int(1, P)
        assert psi0(1, P) == CycInt.zeta(1, P)

    def test_full_character_sum(self):
        total = CycInt.from_int(0, P)
        for x in range(P):
            total = total + psi0(x, P)
        assert total == 0


class TestPairing:
    def test_constant_coefficient(self):
        z = parse_adele("T:1/T", P)
        w = rf("3 + 2*T + T^2")
        assert residue_pairing(z, w) == 3

    def test_zero_adele(self):
        assert residue_pairing(Adele(P, {}), rf("1 + T")) == 0

    def test_infinity_component(self):
        z = Adele(P, {INF: rf("1/T")})
        assert residue_pairing(z, rf("T")) == 0
        assert residue_pairing(z, rf("1")) == P - 1

    def test_parse_adele_accumulates(self):
        z = parse_adele("T:1/T;T:1/T^2", P)
        assert z[place(0, 1)] == rf("(T + 1)/T^2")

    @given(rational_adeles(), rational_adeles(), lows)
    def test_additive_in_the_adele(self, z1, z2, w):
        w = RationalFunction.from_poly(Poly.from_low(w, P))
        assert residue_pairing(z1 + z2, w) == (residue_pairing(z1, w) + residue_pairing(z2, w)) % P

    @given(rational_adeles(), lows, lows, st.integers(0, P - 1))
    def test_linear_in_the_section(self, z, w1, w2, c):
        f, g = Poly.from_low(w1, P), Poly.from_low(w2, P)
        lhs = residue_pairing(z, RationalFunction.from_poly(f + g * c))
        rhs = residue_pairing(z, RationalFunction.from_poly(f)) + c * residue_pairing(z, RationalFunction.from_poly(g))
        assert lhs == rhs % P

    @given(rational_adeles(), lows, st.integers(1, P - 1))
    def test_scaling_the_adele(self, z, w, c):
        w = RationalFunction.from_poly(Poly.from_low(w, P))
        assert residue_pairing(z.scale(RationalFunction.const(c, P)), w) == c * residue_pairing(z, w) % P
