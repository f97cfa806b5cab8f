"""Command-line interface: formats, exit codes, and output documents."""
import json

import pytest
from click.testing import CliRunner

from auctionlab import cli
from auctionlab.qfspace import Uniform

from conftest import example_scenario


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def scenario_file(tmp_path):
    sc = example_scenario()
    doc = {"lambda": sc.opportunity_cost,
           "buyers": [{"qf": json.loads(f.to_json()), "budget": b}
                      for f, b in zip(sc.qfs, sc.budgets)]}
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(doc))
    return str(path)


@pytest.fixture
def asymmetric_file(tmp_path):
    doc = {"lambda": 0.1,
           "buyers": [{"qf": json.loads(Uniform(0.0, 1.0).to_json()), "budget": 0.3},
                      {"qf": json.loads(Uniform(0.2, 0.9).to_json()), "budget": 0.4}]}
    path = tmp_path / "asym.json"
    path.write_text(json.dumps(doc))
    return str(path)


class TestEval:
    def test_table(self, runner, scenario_file):
        res = runner.invoke(cli.main, ["eval", scenario_file, "--mechanism",
                                       "bdfpa", "--params", "0.25,0.25"])
        assert res.exit_code == 0
        assert "seller revenue: 0.540000" in res.output

    def test_json(self, runner, scenario_file):
        res = runner.invoke(cli.main, ["eval", scenario_file, "--mechanism",
                                       "bdfpa", "--params", "0.25,0.25",
                                       "--format", "json"])
        assert res.exit_code == 0
        doc = json.loads(res.output)
        assert doc["expected_payments"][0] == pytest.approx(0.312, abs=1e-6)

    def test_csv(self, runner, scenario_file):
        res = runner.invoke(cli.main, ["eval", scenario_file, "--mechanism",
                                       "pspa", "--params", "1,1",
                                       "--format", "csv"])
        assert res.exit_code == 0
        lines = res.output.strip().splitlines()
        assert lines[0] == "buyer,expected_payment,expected_utility,win_probability"
        assert len(lines) == 4  # header, two buyers, revenue row

    def test_zero_params(self, runner, scenario_file):
        res = runner.invoke(cli.main, ["eval", scenario_file, "--mechanism",
                                       "bdfpa", "--params", "0,0",
                                       "--format", "json"])
        assert res.exit_code == 0
        doc = json.loads(res.output)
        assert doc["expected_payments"] == [0.0, 0.0]
        assert doc["allocation_probability"] == 0.0

    def test_malformed_file(self, runner, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        res = runner.invoke(cli.main, ["eval", str(bad), "--mechanism",
                                       "bdfpa", "--params", "1,1"])
        assert res.exit_code == 2

    def test_missing_budget(self, runner, tmp_path):
        doc = {"lambda": 0.1,
               "buyers": [{"qf": json.loads(Uniform(0, 1).to_json())}]}
        bad = tmp_path / "nobudget.json"
        bad.write_text(json.dumps(doc))
        res = runner.invoke(cli.main, ["eval", str(bad), "--mechanism",
                                       "bdfpa", "--params", "1"])
        assert res.exit_code == 2

    def test_unknown_mechanism(self, runner, scenario_file):
        res = runner.invoke(cli.main, ["eval", scenario_file, "--mechanism",
                                       "vickrey", "--params", "1,1"])
        assert res.exit_code == 2

    def test_wrong_param_count(self, runner, scenario_file):
        res = runner.invoke(cli.main, ["eval", scenario_file, "--mechanism",
                                       "bdfpa", "--params", "1"])
        assert res.exit_code == 2


class TestSolve:
    def test_max_tuple_bdfpa(self, runner, scenario_file):
        res = runner.invoke(cli.main, ["solve", scenario_file, "--mechanism",
                                       "ebdfpa", "--method", "max-tuple",
                                       "--nodes", "1024"])
        assert res.exit_code == 0
        doc = json.loads(res.output)
        assert doc["params"][0] == pytest.approx(0.25, abs=1e-5)
        assert doc["uniqueness"]["unique"] is True

    def test_dual_broa(self, runner, scenario_file):
        res = runner.invoke(cli.main, ["solve", scenario_file, "--mechanism",
                                       "broa", "--method", "dual",
                                       "--nodes", "1024"])
        assert res.exit_code == 0
        doc = json.loads(res.output)
        assert doc["params"] == [1.0, 1.0]
        assert doc["duality_gap"] <= 1e-3

    def test_symmetric_pspa(self, runner, scenario_file):
        res = runner.invoke(cli.main, ["solve", scenario_file, "--mechanism",
                                       "pspa", "--method", "symmetric",
                                       "--nodes", "1024"])
        assert res.exit_code == 0
        doc = json.loads(res.output)
        assert doc["params"] == [1.0, 1.0]

    def test_trace_included_on_request(self, runner, scenario_file):
        res = runner.invoke(cli.main, ["solve", scenario_file, "--mechanism",
                                       "bdfpa", "--method", "max-tuple",
                                       "--nodes", "1024", "--trace"])
        doc = json.loads(res.output)
        assert len(doc["trace"]) >= 1

    def test_method_kind_mismatch(self, runner, scenario_file):
        res = runner.invoke(cli.main, ["solve", scenario_file, "--mechanism",
                                       "pspa", "--method", "dual"])
        assert res.exit_code == 2

    def test_symmetric_needs_symmetry(self, runner, asymmetric_file):
        res = runner.invoke(cli.main, ["solve", asymmetric_file, "--mechanism",
                                       "pspa", "--method", "symmetric",
                                       "--nodes", "1024"])
        assert res.exit_code == 4


class TestMap:
    def test_writes_mapped_profile(self, runner, scenario_file, tmp_path):
        out = tmp_path / "mapped.json"
        res = runner.invoke(cli.main, ["map", scenario_file, "--from", "ebdfpa",
                                       "--to", "broa", "--out", str(out),
                                       "--nodes", "1024"])
        assert res.exit_code == 0
        doc = json.loads(out.read_text())
        assert doc["discrepancy"] <= 1e-4
        assert doc["source"]["kind"] == "bdfpa"
        assert doc["target"]["kind"] == "broa"

    def test_symmetric_pair_to_stdout(self, runner, scenario_file):
        res = runner.invoke(cli.main, ["map", scenario_file, "--from", "bdfpa",
                                       "--to", "bdspa", "--nodes", "1024"])
        assert res.exit_code == 0
        doc = json.loads(res.output)
        assert doc["discrepancy"] <= 1e-4

    def test_unreachable_target_exits_solver_code(self, runner, scenario_file):
        # the binding first-price payment exceeds what a reserve-floored
        # pspa can collect, so the mapping refuses
        res = runner.invoke(cli.main, ["map", scenario_file, "--from", "bdfpa",
                                       "--to", "pspa", "--nodes", "1024"])
        assert res.exit_code == 4

    def test_asymmetric_pair_usage_error(self, runner, asymmetric_file):
        res = runner.invoke(cli.main, ["map", asymmetric_file, "--from", "bdfpa",
                                       "--to", "pfpa", "--nodes", "1024"])
        assert res.exit_code == 2


class TestExample:
    def test_reproduces_reference_table(self, runner):
        res = runner.invoke(cli.main, ["example", "--nodes", "1024"])
        assert res.exit_code == 0
        assert "max abs delta" in res.output


class TestValidate:
    def test_full_check_passes(self, runner, scenario_file):
        res = runner.invoke(cli.main, ["validate", scenario_file, "--samples",
                                       "50000", "--nodes", "512"])
        assert res.exit_code == 0
        assert "FAIL" not in res.output

    def test_feasibility_only_passes(self, runner, scenario_file):
        res = runner.invoke(cli.main, ["validate", scenario_file, "--mechanism",
                                       "bdfpa", "--params", "0.25,0.25",
                                       "--nodes", "512"])
        assert res.exit_code == 0

    def test_infeasible_tuple_fails(self, runner, scenario_file):
        res = runner.invoke(cli.main, ["validate", scenario_file, "--mechanism",
                                       "bdfpa", "--params", "1,1",
                                       "--nodes", "512"])
        assert res.exit_code == 6
        assert "FAIL" in res.output
