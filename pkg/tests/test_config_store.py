import json

import pandas as pd
import pytest

from ffsupnorm.config import RunProfile
from ffsupnorm.errors import ConfigError
from ffsupnorm.store import dump_json, load_table, save_table, write_csv, write_jsonl
from ffsupnorm.tracefn import l_coefficients
from ffsupnorm.whittaker import LinearForm, whittaker_value_of_form


class TestProfiles:
    def test_shipped_profiles(self):
        profiles = RunProfile()
        assert {"default", "quick", "full", "q7"} <= set(profiles.names())
        assert profiles.load("q7").q == 7

    def test_overrides(self):
        cfg = RunProfile().load("quick", n_max=2, seed=None)
        assert cfg.n_max == 2
        assert cfg.seed == 0

    def test_depth(self):
        cfg = RunProfile().load("quick", n_max=2, adjoint_d_max=3, support_n_cap=4)
        assert cfg.depth == 4
        assert RunProfile().load("quick", table_depth=7).depth == 7

    @pytest.mark.parametrize("overrides", [{"q": 4}, {"q": 3}, {"threads": 0}, {"a4": [1, 2]}])
    def test_invalid_values(self, overrides):
        with pytest.raises(ConfigError):
            RunProfile().load("quick", **overrides)

    def test_unknown_profile(self):
        with pytest.raises(ConfigError):
            RunProfile().load("nope")

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            RunProfile(str(tmp_path / "absent.yaml"))

    def test_custom_file(self, tmp_path):
        path = tmp_path / "p.yaml"
        path.write_text("profiles:\n  mine:\n    q: 11\n    n_max: 1\n", encoding="utf-8")
        cfg = RunProfile(str(path)).load("mine")
        assert (cfg.q, cfg.n_max) == (11, 1)


class TestTableStore:
    def test_round_trip_preserves_values(self, table, tmp_path):
        path = save_table(table, tmp_path / "t.json")
        back = load_table(path)
        assert back.conductor == table.conductor
        assert back.depth == table.depth
        assert l_coefficients(back, back.depth) == l_coefficients(table, table.depth)
        alpha = LinearForm.coefficient(2, 1, table.p)
        assert whittaker_value_of_form(back, 2, alpha).S == whittaker_value_of_form(table, 2, alpha).S

    def test_corrupt_file(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json", encoding="utf-8")
        with pytest.raises(ConfigError):
            load_table(path)

    def test_malformed_file(self, tmp_path):
        path = tmp_path / "partial.json"
        path.write_text(json.dumps({"depth": 2}), encoding="utf-8")
        with pytest.raises(ConfigError):
            load_table(path)

    def test_corrupt_file_is_overwritten(self, table, tmp_path):
        path = tmp_path / "t.json"
        path.write_text("garbage", encoding="utf-8")
        save_table(table, path)
        assert load_table(path).conductor == table.conductor

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_table(tmp_path / "absent.json")


class TestReports:
    def test_dump_json_is_sorted(self):
        assert dump_json({"b": 1, "a": 2}).index('"a"') < dump_json({"b": 1, "a": 2}).index('"b"')

    def test_jsonl_and_csv(self, tmp_path):
        rows = [{"point": "p1", "bounds": {"first": 1.5}, "n": 1},
                {"point": "p2", "bounds": {"first": 2.5}, "n": 2}]
        lines = write_jsonl(rows, tmp_path / "r.jsonl").read_text(encoding="utf-8").splitlines()
        assert [json.loads(x)["n"] for x in lines] == [1, 2]
        frame = pd.read_csv(write_csv(rows, tmp_path / "r.csv"))
        assert list(frame["n"]) == [1, 2]
        assert json.loads(frame["bounds"][0]) == {"first": 1.5}
