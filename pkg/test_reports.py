import json

import networkx as nx
import pytest

from reports import SCHEMA_VERSION, CheckVerdict, RunReport, dot_source, export_dot

# Test fixtures
@pytest.fixture
def report():
    return RunReport(command=["axioms", "A2q2"], instance={"name": "A2q2"})

@pytest.fixture
def labelled_graph():
    g = nx.Graph()
    g.add_edge(2, 1, type=0)
    g.add_edge(0, 2)
    return g


class TestRunReport:
    def test_empty_report_passes(self, report):
        """Test a report without checks counts as passed"""
        assert report.passed
        assert report.schema_version == SCHEMA_VERSION

    def test_add(self, report):
        """Test checks accumulate and one failure fails the run"""
        verdict = report.add("Bu1", True, checks=21)
        assert isinstance(verdict, CheckVerdict)
        assert verdict.details == {"checks": 21}
        assert verdict.witnesses == []
        report.add("Bu3", False, witnesses=[[0, 1, 2]])
        assert not report.passed
        assert [c.name for c in report.checks] == ["Bu1", "Bu3"]

    def test_passed_is_coerced(self, report):
        """Test truthy values become booleans"""
        assert report.add("count", 3).passed is True

    def test_json_omits_missing_timing(self, report):
        """Test timing appears only when measured"""
        data = json.loads(report.to_json())
        assert "timing" not in data
        assert data["command"] == ["axioms", "A2q2"]
        report.timing = 0.25
        assert json.loads(report.to_json())["timing"] == 0.25

    def test_json_is_stable(self, report):
        """Test keys are sorted so reruns produce identical text"""
        report.add("b", True, zeta=1, alpha=2)
        text = report.to_json()
        assert text == report.to_json()
        assert text.index('"alpha"') < text.index('"zeta"')

    def test_write(self, report, tmp_path):
        """Test the written file round-trips through the model"""
        report.add("Tw1", True)
        path = tmp_path / "report.json"
        report.write(str(path))
        loaded = RunReport(**json.loads(path.read_text()))
        assert loaded == report


class TestDot:
    def test_empty_graph(self):
        """Test an empty graph still yields a valid block"""
        assert dot_source(nx.Graph()) == "graph G {\n}\n"

    def test_order_and_labels(self, labelled_graph):
        """Test nodes and edges come out sorted with edge data as labels"""
        text = dot_source(labelled_graph, name="chambers")
        assert text.splitlines() == [
            "graph chambers {",
            '  "0";',
            '  "1";',
            '  "2";',
            '  "0" -- "2";',
            '  "1" -- "2" [label="type=0"];',
            "}",
        ]

    def test_mixed_nodes(self):
        """Test nodes of mixed types fall back to string order"""
        g = nx.Graph()
        g.add_edge("+0", 3)
        assert '  "+0" -- "3";' in dot_source(g).splitlines()

    def test_quotes_escaped(self):
        """Test quotes in node names are escaped"""
        g = nx.Graph()
        g.add_node('a"b')
        assert '"a\\"b";' in dot_source(g)

    def test_export_creates_directory(self, labelled_graph, tmp_path):
        """Test export writes into a missing directory"""
        path = tmp_path / "out" / "g.dot"
        export_dot(labelled_graph, str(path))
        assert path.read_text() == dot_source(labelled_graph)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
