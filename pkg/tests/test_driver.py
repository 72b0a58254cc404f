import pytest

from ffsupnorm.driver import (
    curve_scan,
    form_value,
    grid_limits,
    l2_explore,
    plancherel_slice,
    radon_identity_results,
    sweep_adeles,
    sweep_points,
    verify_identities,
)
from ffsupnorm.errors import ConfigError, FfsnError
from ffsupnorm.tracefn import conductor
from ffsupnorm.whittaker import EvalPoint

Q = 5


class TestCurveScan:
    def test_accepted_surfaces_pass_validation(self, scan, run_config):
        report, found = scan
        assert found and len(found) <= run_config.max_instances
        assert len(report.accepted) == len(found)
        for E, summary in zip(found, report.accepted):
            N = conductor(E)
            assert N.is_squarefree() and N.degree in run_config.scan_deg_n
            assert summary.deg_n == N.degree

    def test_isotrivial_candidates_rejected(self, scan):
        report, _ = scan
        assert report.rejected.get("unsupported", 0) > 0

    def test_deterministic(self, scan, run_config):
        again, _ = curve_scan(run_config, progress=False)
        assert again.model_dump() == scan[0].model_dump()

    def test_no_instances(self, run_config):
        cfg = run_config.model_copy(update={"scan_deg_n": [40], "scan_a4_degree": 1, "scan_a6_degree": 1})
        with pytest.raises(FfsnError) as exc:
            curve_scan(cfg, progress=False)
        assert exc.value.code == "no-instances"


class TestSweeps:
    def test_point_count(self, table, run_config):
        zs = sweep_adeles(table, run_config)
        # zero class, (q + 1) places times the pole orders, then the random points
        assert len(zs) == 1 + (Q + 1) * run_config.z_pole_order + run_config.random_points
        assert len(sweep_points(table, run_config)) == (run_config.n_max + 1) * len(zs)

    def test_labels_are_unique(self, table, run_config):
        labels = [label for label, _ in sweep_points(table, run_config)]
        assert len(labels) == len(set(labels))

    def test_degree_zero_values(self, table, run_config):
        # |f| at n = 0 is q - 1 on the zero class and 1 elsewhere
        for label, z in sweep_adeles(table, run_config):
            value = form_value(table, EvalPoint(0, z)).magnitude
            assert value == pytest.approx(Q - 1) or value == pytest.approx(1.0), label


class TestIdentities:
    def test_radon_identity_on_surface(self, table):
        results = list(radon_identity_results(table, 3, samples=5, seed=1))
        assert results
        assert all(r.passed for r in results), [r.to_dict() for r in results if not r.passed]

    def test_radon_identity_includes_zero_form(self, table):
        results = [r for r in radon_identity_results(table, 2, samples=2, seed=3) if r.name == "radon-identity"]
        assert len(results) == 3 * 3
        zero_forms = [r for r in results if not any(r.params["alpha"])]
        assert {r.params["n"] for r in zero_forms} == {0, 1, 2}
        assert all(r.passed for r in zero_forms)

    def test_grid_limits(self):
        assert "q in {5,7,9,11,13}" in grid_limits("full")
        with pytest.raises(ConfigError):
            grid_limits("huge")

    def test_unknown_grid(self):
        with pytest.raises(ConfigError):
            verify_identities("huge")

    @pytest.mark.slow
    def test_small_grid(self, table):
        report = verify_identities("small", table, samples=3)
        assert report.failed == 0
        assert report.passed == len(report.results)


class TestL2:
    @pytest.mark.parametrize("n", [0, 1, 2])
    def test_plancherel(self, table, n):
        row = plancherel_slice(table, n)
        assert row["plancherel_lhs"] == pytest.approx(row["plancherel_rhs"], rel=1e-9)

    def test_report(self, table, run_config):
        report = l2_explore(table, run_config)
        assert report.adjoint["in_window"]
        assert len(report.per_n) == min(run_config.support_n_cap, table.depth, run_config.n_max) + 1
        assert not [f for f in report.flags if f.startswith("plancherel-mismatch")]
