import math
from concurrent.futures import ThreadPoolExecutor

import pytest
from mpmath import iv

from ffsupnorm.bounds import (
    atkin_lehner_optimize,
    base_term,
    bound_atkin_lehner,
    bound_cusp,
    bound_chain,
    bound_final,
    bound_first,
    bound_first_form,
    bound_squarefree,
    dominates,
    l2_envelope,
    ratio,
)
from ffsupnorm.ccycle import b_coeff
from ffsupnorm.driver import evaluate_point, is_violation
from ffsupnorm.errors import FfsnError
from ffsupnorm.exactalg import CycInt, SqrtQInt, cyc_abs
from ffsupnorm.funfield import parse_adele
from ffsupnorm.heights import canonical_matrix, d_alpha, enumerate_cusps, etuple_zero
from ffsupnorm.models import BoundReport
from ffsupnorm.whittaker import EvalPoint, LinearForm, linear_form_of, whittaker_value_of_form

Q = 5


class TestClosedForms:
    def test_base_term(self):
        assert base_term(4, Q) == SqrtQInt(0, 2, Q)
        assert base_term(6, Q) == SqrtQInt(0, 8, Q)
        with pytest.raises(FfsnError) as exc:
            base_term(3, Q)
        assert exc.value.code == "level-too-small"

    def test_final_bound_at_degree_four(self):
        r = math.sqrt(Q)
        value, envelope = bound_final(4, Q)
        expected = r * (2 + (8 / 5) * (2 * r + 2) ** 2 / (2 * r + 1))
        assert float(value) == pytest.approx(expected)
        assert float(envelope) == pytest.approx(((2 * r + 2) / math.sqrt(2 * r + 1)) ** 4)

    @pytest.mark.parametrize("deg_n", [4, 5, 8, 13])
    def test_chain_is_ordered(self, deg_n):
        lines = {line.name: line.value for line in bound_chain(deg_n, Q)}
        assert lines["packing"] <= lines["binomial-estimate"] * (1 + 1e-12)
        assert lines["final/envelope"] == pytest.approx(lines["binomial-estimate"] / lines["envelope"])

    def test_l2_envelope_decays(self):
        assert l2_envelope(12, 101) < l2_envelope(6, 101)


class TestDominates:
    def test_rational_sums(self):
        S = CycInt.from_int(5, Q)
        assert dominates(S, 1, Q, SqrtQInt(1, 0, Q))
        assert not dominates(S, 1, Q, SqrtQInt(0, 0, Q))

    def test_rational_against_root(self):
        S = CycInt.from_int(-3, Q)
        assert not dominates(S, 0, Q, SqrtQInt(0, 1, Q))
        assert dominates(S, 0, Q, SqrtQInt(1, 1, Q))

    def test_negative_bound(self):
        assert not dominates(CycInt.from_int(0, Q), 0, Q, SqrtQInt(0, -1, Q))

    def test_irrational_sums(self):
        S = CycInt.zeta(1, Q)
        assert dominates(S, 0, Q, SqrtQInt(2, 0, Q))
        assert not dominates(S + S, 0, Q, SqrtQInt(1, 0, Q))

    def test_boundary_is_inconclusive(self):
        with pytest.raises(FfsnError) as exc:
            dominates(CycInt.zeta(2, Q), 0, Q, SqrtQInt(1, 0, Q))
        assert exc.value.code == "inconclusive-comparison"

    def test_thread_pool_agrees_with_expected(self):
        cases, expected = [], []
        for i in range(1, 40):
            S = CycInt.from_buckets([i % 3, i % 5, (i * 7) % 4, 0, i % 2], Q)
            if S.is_rational():
                continue
            m = cyc_abs(S)
            k = round(m) if abs(m - round(m)) < 1e-9 else None
            above = k + 1 if k is not None else math.floor(m) + 1
            below = k - 1 if k is not None else math.ceil(m) - 1
            cases.append((S, 0, Q, SqrtQInt(above, 0, Q)))
            expected.append(True)
            if below >= 0:
                cases.append((S, 0, Q, SqrtQInt(below, 0, Q)))
                expected.append(False)
        before = iv.prec
        with ThreadPoolExecutor(max_workers=8) as pool:
            results = list(pool.map(lambda c: dominates(*c), cases))
        assert results == expected
        assert iv.prec == before

    def test_precision_is_a_parameter(self):
        S = CycInt.zeta(1, Q) + CycInt.zeta(4, Q)  # 2 cos(2 pi / 5)
        assert dominates(S, 0, Q, SqrtQInt(1, 0, Q), prec=64)
        assert not dominates(S + 1, 0, Q, SqrtQInt(1, 0, Q), prec=64)

    def test_ratio(self):
        assert ratio(1.0, SqrtQInt(2, 0, Q)) == 0.5
        assert ratio(1.0, SqrtQInt(0, 0, Q)) == math.inf


class TestViolationRule:
    def test_unverified_cusp_bound_is_not_a_violation(self):
        report = BoundReport(point="p", n=1, S="0", magnitude=0.0,
                             passed={"first": True, "cusp": False}, verified=False)
        assert not is_violation(report)
        report.verified = True
        assert is_violation(report)

    def test_unconditional_bound(self):
        report = BoundReport(point="p", n=1, S="0", magnitude=0.0,
                             passed={"final": False}, verified=False)
        assert is_violation(report)


class TestOnSurface:
    @pytest.mark.parametrize("n", [0, 1, 2])
    def test_first_bound_holds_for_coefficient_forms(self, table, n):
        for k in range(n + 1):
            alpha = LinearForm.coefficient(n, k, Q)
            S = whittaker_value_of_form(table, n, alpha).S
            assert dominates(S, n, Q, bound_first_form(table, n, alpha))

    @pytest.mark.slow
    @pytest.mark.parametrize("z", ["0", "T:1/T", "inf:T"])
    def test_evaluate_point(self, table, run_config, z):
        point = EvalPoint(2, parse_adele(z, Q))
        report = evaluate_point(table, point, run_config)
        assert report.passed["first"]
        assert report.passed["final"]
        assert report.passed["volume"]
        assert not is_violation(report)
        assert report.bounds["final"].value >= report.magnitude


class TestCuspBounds:
    def test_empty_cusp_list(self, table):
        base = base_term(table.deg_n, Q)
        assert bound_cusp(table, []) == base
        assert bound_squarefree(table, []) == base
        assert bound_atkin_lehner(table, []) == base

    def test_first_bound_at_degree_zero(self, table):
        point = EvalPoint(0, parse_adele("T:1/T", Q))
        alpha = linear_form_of(point)
        expected = base_term(table.deg_n, Q) + b_coeff(d_alpha(0, alpha, etuple_zero(table.conductor)), Q) * Q
        assert bound_first(table, point) == expected

    def test_cusp_sum_sees_the_infinite_cusp(self, table):
        m = canonical_matrix(EvalPoint(2, parse_adele("0", Q)), table.conductor)
        profiles = enumerate_cusps(m, 2, 1)
        assert profiles
        assert bound_cusp(table, profiles) > base_term(table.deg_n, Q)

    def test_atkin_lehner_word_keeps_the_bound(self, table):
        m = canonical_matrix(EvalPoint(2, parse_adele("0", Q)), table.conductor)
        profiles = enumerate_cusps(m, 1, 1)
        result = atkin_lehner_optimize(table, m, profiles)
        assert result.invariant
        assert result.after == result.before
        assert len(result.word) <= len(table.conductor.support())
        assert all(step["ok"] for step in result.steps)

    def test_atkin_lehner_without_cusps(self, table):
        m = canonical_matrix(EvalPoint(1, parse_adele("0", Q)), table.conductor)
        result = atkin_lehner_optimize(table, m, [])
        assert result.word == []
        assert result.after == result.before == base_term(table.deg_n, Q)
