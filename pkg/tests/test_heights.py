import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import numpy as np

from ffsupnorm.driver import height_report, height_suite, random_matrix_suite
from ffsupnorm.errors import FfsnError
from ffsupnorm.exactalg import Poly
from ffsupnorm.funfield import Adele, Divisor, Place, RationalFunction, parse_adele
from ffsupnorm.heights import (
    Cusp,
    all_etuples,
    atkin_lehner_action,
    canonical_matrix,
    cusp_transform,
    cusp_valuations,
    d_alpha,
    e_switch,
    e_switch_check,
    enumerate_cusps,
    etuple_full,
    etuple_zero,
    height,
    height_profile,
    invariance_suite,
    mountain_shape_check,
    packing_check,
    parse_cusp,
    profile_cusps,
    random_gamma,
    random_matrix,
    rank_over_extension,
    uniqueness_check,
    volume_comparison,
)
from ffsupnorm.whittaker import EvalPoint, LinearForm

Q = 5
ZERO_CUSP = Cusp(Poly.zero(Q), Poly.one(Q))
INF_CUSP = Cusp(Poly.one(Q), Poly.zero(Q))


def frame(level, n=2, z=None):
    return canonical_matrix(EvalPoint(n, z if z is not None else Adele(Q, {})), level)


class TestCusps:
    def test_normalisation(self):
        c = parse_cusp("2*T:4", Q)
        assert c == Cusp(Poly.T(Q), Poly.const(2, Q))
        assert c.degree == 1

    def test_ratio_form(self):
        assert parse_cusp("1/T", Q) == Cusp(Poly.one(Q), Poly.T(Q))

    def test_common_factor_removed(self):
        T = Poly.T(Q)
        assert Cusp(T * T, T) == Cusp(T, Poly.one(Q))

    def test_degenerate(self):
        with pytest.raises(FfsnError) as exc:
            Cusp(Poly.zero(Q), Poly.zero(Q))
        assert exc.value.code == "degenerate-combination"


class TestETuples:
    def test_count(self, level4):
        assert len(list(all_etuples(level4))) == 16

    def test_switch_is_an_involution(self, level4):
        v = Place.rational(1, Q)
        for e in all_etuples(level4):
            assert e_switch(e_switch(e, v, level4), v, level4) == e
        assert e_switch(etuple_zero(level4), v, level4)[v] == 1

    def test_switch_outside_level(self, level4):
        with pytest.raises(FfsnError) as exc:
            e_switch(etuple_zero(level4), Place.rational(4, Q), level4)
        assert exc.value.code == "not-a-level-place"


class TestCanonicalHeights:
    @pytest.mark.parametrize("n", [0, 2, 3])
    def test_basic_cusps(self, level4, n):
        m = frame(level4, n)
        for e in all_etuples(level4):
            assert height(m, ZERO_CUSP, e) == e.total - (n + 2)
            assert height(m, INF_CUSP, e) == n + 2 - e.total

    def test_profiles(self, level4):
        m = frame(level4)
        assert height_profile(m, INF_CUSP).hstar == 4
        assert height_profile(m, INF_CUSP).epeak == etuple_zero(level4)
        assert height_profile(m, ZERO_CUSP).epeak == etuple_full(level4)

    def test_mountain_shape(self, level4):
        m = frame(level4, z=parse_adele("T:1/T", Q))
        for c in (ZERO_CUSP, INF_CUSP, parse_cusp("T:1", Q)):
            assert mountain_shape_check(m, c).passed

    def test_uniqueness_and_packing(self, level4):
        m = frame(level4)
        profiles = profile_cusps(m, [ZERO_CUSP, INF_CUSP])
        assert uniqueness_check(m, profiles).passed
        assert packing_check(m, profiles).passed

    def test_enumeration_at_zero_form(self, level4):
        found = enumerate_cusps(frame(level4), 1, 1)
        by_cusp = {cp.cusp: cp.profile for cp in found}
        assert by_cusp[INF_CUSP].hstar == 4
        assert by_cusp[INF_CUSP].epeak == etuple_zero(level4)
        assert ZERO_CUSP not in by_cusp
        assert all(cp.profile.hstar >= 1 and cp.cusp.degree <= 1 for cp in found)

    def test_enumeration_threshold(self, level4):
        with pytest.raises(FfsnError):
            enumerate_cusps(frame(level4), 0, 1)

    def test_volume_comparison_at_zero_form(self, level4):
        check = volume_comparison(frame(level4))
        assert check.complete
        assert not check.violations


class TestSplittingInvariant:
    def test_middle_coefficient(self, level4):
        assert d_alpha(2, LinearForm.coefficient(2, 1, Q), etuple_zero(level4)) == -2

    @pytest.mark.parametrize("n", [1, 2, 4])
    def test_constant_coefficient(self, level4, n):
        assert d_alpha(n, LinearForm.coefficient(n, 0, Q), etuple_zero(level4)) == n - 2

    def test_full_weight_in_kernel(self, level4):
        # L = T(T - 1) has no constant term
        e = etuple_zero(level4).replace(Place.rational(0, Q), 1).replace(Place.rational(1, Q), 1)
        assert d_alpha(2, LinearForm.coefficient(2, 0, Q), e) == 0

    def test_weight_above_n(self, level4):
        with pytest.raises(FfsnError):
            d_alpha(1, LinearForm.zero(1, Q), etuple_full(level4))

    @pytest.mark.parametrize("degree", [1, 2])
    def test_middle_coefficient_ranks(self, level4, degree):
        alpha = LinearForm.coefficient(2, 1, Q)
        e = etuple_zero(level4)
        assert [rank_over_extension(2, alpha, e, m, degree) for m in range(3)] == [1, 2, 1]

    @given(st.integers(0, 4).flatmap(lambda n: st.tuples(
        st.just(n), st.lists(st.integers(0, Q - 1), min_size=n + 1, max_size=n + 1))),
        st.integers(0, 1), st.integers(0, 1))
    @settings(max_examples=25, deadline=None)
    def test_rank_is_stable_under_base_change(self, form, e0, e1):
        n, values = form
        level = Divisor({Place.rational(0, Q): 1, Place.rational(1, Q): 1, Place.infinity(Q): 1})
        e = etuple_zero(level).replace(Place.rational(0, Q), e0).replace(Place.rational(1, Q), e1)
        if e.total > n:
            return
        alpha = LinearForm(tuple(values), Q)
        ranks = [rank_over_extension(n, alpha, e, m, 2) for m in range(n - e.total + 1)]
        assert ranks == [rank_over_extension(n, alpha, e, m, 1) for m in range(n - e.total + 1)]
        # the splitting degree read off the F_{p^2} ranks gives the same d_alpha
        m_min = next((m for m, r in enumerate(ranks) if r <= m), n - e.total + 1)
        assert d_alpha(n, alpha, e) == n - 2 * m_min - e.total


class TestGroupActions:
    def test_atkin_lehner_switches_e(self, level4):
        m = frame(level4)
        for v in level4.support():
            assert e_switch_check(m, [ZERO_CUSP, INF_CUSP], v).passed

    def test_atkin_lehner_outside_level(self, level4):
        with pytest.raises(FfsnError):
            atkin_lehner_action(frame(level4), Place.rational(3, Q))

    def test_invariance(self, level4):
        m = frame(level4, z=parse_adele("T:1/T", Q))
        one, zero = RationalFunction.const(1, Q), RationalFunction.const(0, Q)
        T = RationalFunction.from_poly(Poly.T(Q))
        gammas = [(zero, one, one, zero), (one, T, zero, one)]
        unipotents = [(Place.rational(0, Q), T), (Place.infinity(Q), T.inverse())]
        results = invariance_suite(m, [ZERO_CUSP, INF_CUSP, parse_cusp("T:1", Q)], gammas, unipotents)
        assert len(results) == 4
        assert all(r.passed for r in results), [r.detail for r in results if not r.passed]


class TestRandomMatrices:
    PLACES = [Place.rational(0, Q), Place.rational(1, Q), Place.rational(2, Q),
              Place.rational(3, Q), Place.infinity(Q)]
    CUSPS = [ZERO_CUSP, INF_CUSP, parse_cusp("T:1", Q), parse_cusp("T+2:3", Q)]

    def moved(self, level, seed, n=2, z=None):
        return random_matrix(frame(level, n, z), np.random.default_rng(seed), self.PLACES)

    @given(st.integers(0, 2**32 - 1))
    def test_random_gamma_is_invertible(self, seed):
        al, be, ga, de = random_gamma(np.random.default_rng(seed), Q)
        assert not ga.is_zero()
        assert not (al * de - be * ga).is_zero()

    def test_seeded(self, level4):
        first, second = self.moved(level4, 7), self.moved(level4, 7)
        assert first.gamma == second.gamma
        assert first.cusps() == second.cusps()

    def test_not_canonical(self, level4):
        moved = self.moved(level4, 1)
        assert Place.rational(3, Q) in moved.matrix.override_places()
        assert moved.matrix.frame == moved.base.frame

    @pytest.mark.parametrize("seed", range(4))
    def test_mountain_shape_against_all_etuples(self, level4, seed):
        moved = self.moved(level4, seed, z=parse_adele("T:1/T", Q))
        for c in self.CUSPS:
            vals = cusp_valuations(moved.matrix, c)
            heights = [vals.height(e) for e in all_etuples(level4)]
            prof = height_profile(moved.matrix, c)
            assert prof.hstar == max(heights)
            assert vals.height(prof.epeak) == prof.hstar
            assert mountain_shape_check(moved.matrix, c).passed

    @pytest.mark.parametrize("seed", range(4))
    def test_heights_follow_the_moved_cusp(self, level4, seed):
        moved = self.moved(level4, seed, z=parse_adele("T:1/T", Q))
        for c in self.CUSPS:
            before = cusp_valuations(moved.base, c)
            after = cusp_valuations(moved.matrix, cusp_transform(c, moved.gamma))
            for e in all_etuples(level4):
                assert after.height(e) == before.height(e)

    @pytest.mark.parametrize("seed", range(2))
    def test_volume_comparison(self, level4, seed):
        moved = self.moved(level4, seed)
        check = volume_comparison(moved.matrix, profile_cusps(moved.matrix, moved.cusps()))
        assert not check.violations
        assert check.complete

    def test_uniqueness_on_moved_matrix(self, level4):
        moved = self.moved(level4, 3)
        profiles = [cp for cp in profile_cusps(moved.matrix, moved.cusps()) if cp.profile.hstar >= 1]
        assert profiles
        assert uniqueness_check(moved.matrix, profiles).passed
        assert packing_check(moved.matrix, profiles).passed


@pytest.mark.slow
class TestOnSurface:
    def test_height_suite(self, table, run_config):
        point = EvalPoint(2, parse_adele("T:1/T", Q))
        failed = [r.to_dict() for r in height_suite(table, point, run_config) if not r.passed]
        assert not failed

    def test_report_has_no_violations(self, table, run_config):
        report = height_report(table, EvalPoint(1, Adele(Q, {})), run_config)
        assert not report.violations

    def test_random_matrix_suite(self, table, run_config):
        point = EvalPoint(1, parse_adele("T:1/T", Q))
        results = random_matrix_suite(table, point, run_config)
        failed = [r.to_dict() for r in results if not r.passed]
        assert not failed
        assert sum(r.name == "volume-comparison" for r in results) == run_config.random_points
