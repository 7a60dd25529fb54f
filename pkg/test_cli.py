import json
from unittest.mock import MagicMock, patch

import pytest
from click.testing import CliRunner

import main
from cli import EXIT_FAIL, EXIT_FIXTURE, EXIT_PASS, EXIT_USAGE, cli

# Test fixtures
@pytest.fixture
def invoke():
    runner = CliRunner()

    def run(*args):
        args = list(args)
        return runner.invoke(cli, args, obj={"argv": args})
    return run

@pytest.fixture
def repository():
    repo = MagicMock()
    repo.save_report.return_value = 7
    repo.list_recent.return_value = []
    with patch("cli.get_report_repository", return_value=repo):
        yield repo

@pytest.fixture
def bad_incidence(tmp_path):
    path = tmp_path / "broken.inc"
    path.write_text("gonality 3\nP1 L1\nP1 L1\n")
    return str(path)


class TestZoo:
    def test_list(self, invoke):
        """Test every zoo member is listed"""
        result = invoke("zoo", "list")
        assert result.exit_code == EXIT_PASS
        for name in ("A2q2", "A3q3", "C3q2"):
            assert name in result.output

    def test_build(self, invoke, tmp_path):
        """Test building the Fano flag system with dump and DOT output"""
        dump, dot = tmp_path / "a2.dump", tmp_path / "a2.dot"
        result = invoke("zoo", "build", "A2q2", "--dump", str(dump), "--dot", str(dot))
        assert result.exit_code == EXIT_PASS
        assert "chambers: 21" in result.output
        assert "panels: 14" in result.output
        assert dump.read_text()
        assert dot.read_text().startswith("graph chambers {")

    def test_unknown_instance(self, invoke):
        """Test unknown names exit with the usage code"""
        result = invoke("zoo", "build", "E8q7")
        assert result.exit_code == EXIT_USAGE
        assert "Unknown instance" in result.output

    def test_ingest(self, invoke):
        """Test the Fano incidence fixture"""
        result = invoke("zoo", "ingest", "fixtures/fano.inc")
        assert result.exit_code == EXIT_PASS
        assert "chambers: 21" in result.output

    def test_ingest_malformed(self, invoke, bad_incidence):
        """Test malformed incidence files exit with the fixture code"""
        assert invoke("zoo", "ingest", bad_incidence).exit_code == EXIT_FIXTURE


class TestChecks:
    def test_axioms(self, invoke):
        """Test the Fano building passes its sweeps"""
        result = invoke("axioms", "A2q2", "--twin")
        assert result.exit_code == EXIT_PASS
        assert "exhaustive" in result.output

    @pytest.mark.parametrize("k,code", [("0", EXIT_FAIL), ("1", EXIT_PASS)])
    def test_opposition(self, invoke, k, code):
        """Test co_0 fails and co_1 holds for W(2)"""
        assert invoke("opp", "check", "C2q2", "--k", k).exit_code == code

    def test_negative_k(self, invoke):
        """Test bounds are validated before any work"""
        result = invoke("opp", "check", "C2q2", "--k", "-1")
        assert result.exit_code == EXIT_USAGE

    def test_walls(self, invoke):
        """Test the Fano self-twin is wall-connected"""
        result = invoke("walls", "check", "A2q2")
        assert result.exit_code == EXIT_PASS
        assert "wall(" in result.output

    def test_single_wall_graph(self, invoke, tmp_path):
        """Test one wall graph with its DOT export"""
        dot = tmp_path / "wall.dot"
        result = invoke("walls", "check", "A2q2", "--chamber", "0", "--gen", "1", "--dot", str(dot))
        assert result.exit_code == EXIT_PASS
        assert "4 panels, 6 edges" in result.output
        assert dot.exists()

    def test_wall_generator_required(self, invoke):
        """Test --chamber needs a valid --gen"""
        assert invoke("walls", "check", "A2q2", "--chamber", "0", "--gen", "5").exit_code == EXIT_USAGE

    def test_thin_instance_refused(self, invoke, tmp_path):
        """Test a thin geometry cannot be twinned"""
        path = tmp_path / "triangle.inc"
        path.write_text("gonality 3\nP1 L1\nP2 L1\nP2 L2\nP3 L2\nP3 L3\nP1 L3\n")
        assert invoke("opp", "check", str(path)).exit_code == EXIT_USAGE

    def test_isometry_extension(self, invoke):
        """Test a random group element is recovered from its plus half"""
        result = invoke("--seed", "5", "isom", "extend", "A2q2")
        assert result.exit_code == EXIT_PASS
        assert "extended to 42 chambers" in result.output

    def test_rigidity(self, invoke):
        """Test the rigidity summary"""
        result = invoke("isom", "rigidity", "A2q2", "--chamber", "3")
        assert result.exit_code in (EXIT_PASS, EXIT_FAIL)
        assert "fixed 6" in result.output

    def test_rgd(self, invoke):
        """Test SL_3(F_2) passes every RGD check"""
        result = invoke("rgd", "check", "SL3F2")
        assert result.exit_code == EXIT_PASS
        assert "RGD3" in result.output

    def test_unknown_family(self, invoke):
        """Test unknown families are a usage error"""
        assert invoke("rgd", "check", "SL9F7").exit_code == EXIT_USAGE


class TestAffine:
    def test_cert_and_verify(self, invoke, tmp_path):
        """Test a written certificate verifies with its negative control"""
        path = tmp_path / "cert.json"
        assert invoke("affine", "cert", "~A2", "--depth", "4", "--gen", "0", "--out", str(path)).exit_code == EXIT_PASS
        result = invoke("affine", "verify", str(path), "--mutations", "10")
        assert result.exit_code == EXIT_PASS
        assert "mutations rejected: 10/10" in result.output

    def test_out_needs_generator(self, invoke, tmp_path):
        """Test one output file means one generator"""
        result = invoke("affine", "cert", "~A2", "--depth", "3", "--out", str(tmp_path / "c.json"))
        assert result.exit_code == EXIT_USAGE

    def test_finite_type_refused(self, invoke):
        """Test certificates exist only for affine types"""
        assert invoke("affine", "cert", "A3", "--depth", "3").exit_code == EXIT_USAGE

    def test_malformed_certificate(self, invoke, tmp_path):
        """Test unreadable certificates exit with the fixture code"""
        path = tmp_path / "cert.json"
        path.write_text("{not json")
        assert invoke("affine", "verify", str(path)).exit_code == EXIT_FIXTURE


class TestReporting:
    def test_json_report(self, invoke, tmp_path):
        """Test --json writes the run report with the command line"""
        path = tmp_path / "run.json"
        result = invoke("--json", str(path), "opp", "check", "C2q2", "--k", "0")
        assert result.exit_code == EXIT_FAIL
        data = json.loads(path.read_text())
        assert data["command"] == ["--json", str(path), "opp", "check", "C2q2", "--k", "0"]
        assert data["instance"] == {"name": "C2q2", "k": 0}
        assert data["checks"][0]["passed"] is False
        assert "timing" not in data

    def test_record(self, invoke, repository):
        """Test --record stores the report"""
        result = invoke("--record", "zoo", "list")
        assert result.exit_code == EXIT_PASS
        assert "recorded as run 7" in result.output
        assert repository.save_report.call_count == 1

    def test_history_empty(self, invoke, repository):
        """Test the history listing without runs"""
        result = invoke("history", "--limit", "5")
        assert result.exit_code == EXIT_PASS
        assert "no recorded runs" in result.output
        repository.list_recent.assert_called_once_with(5)

    def test_history_rows(self, invoke, repository):
        """Test recorded runs are listed"""
        repository.list_recent.return_value = [
            {"id": 3, "command": "zoo list", "passed": True, "checks": 1, "created_at": "2026-01-01T00:00:00"},
        ]
        result = invoke("history")
        assert "zoo list" in result.output
        assert "pass" in result.output


class TestMain:
    @pytest.fixture(autouse=True)
    def quiet(self):
        with patch("main.setup_logging"), patch("main.close_report_store") as close:
            yield close

    def test_exit_codes(self, quiet):
        """Test run returns the command's exit code and closes the store"""
        assert main.run(["zoo", "list"]) == EXIT_PASS
        assert main.run(["opp", "check", "C2q2", "--k", "0"]) == EXIT_FAIL
        assert quiet.call_count == 2

    def test_click_usage_error(self):
        """Test unknown commands map to the usage code"""
        assert main.run(["frobnicate"]) == EXIT_USAGE

    def test_unexpected_error(self):
        """Test unhandled exceptions exit 1"""
        with patch("cli.ZOO_BUILDERS", new=MagicMock(items=MagicMock(side_effect=RuntimeError("boom")))):
            assert main.run(["zoo", "list"]) == EXIT_FAIL


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
