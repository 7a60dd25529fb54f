from unittest.mock import MagicMock, patch

import pytest

import twin_building
from building import AxiomReport, thin_building
from coxeter import CoxeterMatrix
from errors import ConstructionError, DomainError
from geometry_zoo import get_zoo_building
from twin_building import (
    MINUS, PLUS, RelabeledBuilding, TwinChamber, check_adjacency_characterization, check_twin_apartment,
    condition_co_k, cross_panel_distance, cross_parallel, opposition_graph, opposition_sets_coincide, same_wall,
    self_twin, twin_apartment, verify_twin_axioms,
)

# Test fixtures
@pytest.fixture(scope="module")
def twin_a2():
    return self_twin(get_zoo_building("A2q2"))

@pytest.fixture(scope="module")
def twin_c2():
    return self_twin(get_zoo_building("C2q2"))

@pytest.fixture(scope="module")
def opposite_pair(twin_a2):
    x = TwinChamber(PLUS, 0)
    return x, TwinChamber(MINUS, int(twin_a2.opposite_ids(x)[0]))


class TestSelfTwin:
    def test_plus_half_is_relabeled(self, twin_a2):
        """Test the A2 plus half swaps generator labels"""
        assert isinstance(twin_a2.plus, RelabeledBuilding)
        assert twin_a2.plus.permutation == (1, 0)
        assert twin_a2.minus is get_zoo_building("A2q2")

    def test_c2_labels_fixed(self, twin_c2):
        """Test the longest element of C2 is central"""
        assert twin_c2.plus.permutation == (0, 1)

    @pytest.mark.parametrize("fixture", ["twin_a2", "twin_c2"])
    def test_exhaustive_axioms(self, fixture, request):
        """Test Tw1-Tw3 over every cross-sign triple"""
        twin = request.getfixturevalue(fixture)
        report = verify_twin_axioms(twin)
        assert report.exhaustive
        assert report.passed
        assert report.triples == 2 * twin.plus.num_chambers * twin.minus.num_chambers * twin.rank

    def test_sampled_volume(self):
        """Test the sampled twin sweep on PG(3,2) covers at least ten thousand triples"""
        twin = self_twin(get_zoo_building("A3q2"), samples=10_000)
        report = verify_twin_axioms(twin, samples=10_000, seed=3)
        assert not report.exhaustive
        assert report.triples >= 10_000
        assert report.passed

    @pytest.mark.parametrize("name,count", [("A2q2", 8), ("A2q3", 27), ("C2q2", 16)])
    def test_opposite_counts(self, name, count):
        """Test |x^op| is q to the length of the longest element"""
        twin = self_twin(get_zoo_building(name))
        assert len(twin.opposite_ids(TwinChamber(PLUS, 0))) == count
        assert len(twin.opposite_ids(TwinChamber(MINUS, 5))) == count

    def test_thin_refused(self):
        """Test thin buildings are not twinned"""
        with pytest.raises(DomainError):
            self_twin(thin_building(CoxeterMatrix.named("A2")))

    def test_infinite_refused(self):
        """Test non-spherical buildings are not twinned"""
        with pytest.raises(DomainError):
            self_twin(thin_building(CoxeterMatrix.named("~A2"), radius=2))

    def test_failed_sweep_raises(self):
        """Test a failing axiom sweep aborts construction"""
        failing = AxiomReport(name="forced", violations=[("Tw2", (0, 1, 2, 0))])
        with patch("twin_building.verify_twin_axioms", return_value=failing):
            with pytest.raises(ConstructionError) as info:
                self_twin(get_zoo_building("A2q2"))
        assert info.value.axiom == "Tw2"

    def test_large_buildings_are_sampled(self):
        """Test the sweep is sampled above the full table limit"""
        fake = MagicMock(full_table_limit=10, axiom_samples=400, sample_seed=1729, axiom_sample_sources=4)
        with patch("twin_building.get_settings", return_value=fake), \
                patch("twin_building.verify_twin_axioms", wraps=twin_building.verify_twin_axioms) as sweep:
            self_twin(get_zoo_building("A2q2"))
        assert sweep.call_args.kwargs["samples"] == 400


class TestCodistance:
    def test_codistance_inverts(self, twin_a2):
        """Test delta*(y, x) = delta*(x, y)^-1"""
        x = TwinChamber(PLUS, 3)
        for y in twin_a2.chambers(MINUS)[:10]:
            assert twin_a2.codistance(y, x) == twin_a2.codistance(x, y).inverse()

    def test_same_sign_refused(self, twin_a2):
        """Test codistance needs opposite signs"""
        with pytest.raises(DomainError):
            twin_a2.codistance_index(TwinChamber(PLUS, 0), TwinChamber(PLUS, 1))

    def test_bad_sign(self, twin_a2):
        """Test signs are +1 or -1"""
        with pytest.raises(DomainError):
            twin_a2.half(0)

    def test_same_id_is_closest(self, twin_a2):
        """Test x+ and x- have codistance r_S"""
        assert twin_a2.ell_star(TwinChamber(PLUS, 4), TwinChamber(MINUS, 4)) == 3

    def test_coprojection_maximizes(self, twin_a2):
        """Test the coprojection has the longest codistance in the panel"""
        x = TwinChamber(PLUS, 2)
        panel = twin_a2.minus.panel(1, 9)
        z = twin_a2.coprojection(x, panel)
        lengths = [twin_a2.ell_star(x, TwinChamber(MINUS, int(y))) for y in panel.members]
        assert twin_a2.ell_star(x, TwinChamber(MINUS, z)) == max(lengths)
        with pytest.raises(DomainError):
            twin_a2.coprojection(x, twin_a2.plus.panel(0, 9))


class TestParallelPanels:
    def test_opposite_panels_parallel(self, twin_a2, opposite_pair):
        """Test opposite panels are parallel at distance s"""
        x, y = opposite_pair
        P, Q = twin_a2.plus.panel(0, x.id), twin_a2.minus.panel(0, y.id)
        assert twin_a2.opposite_residues(P, Q)
        assert cross_parallel(twin_a2, P, Q)
        assert cross_panel_distance(twin_a2, P, Q) == twin_a2.coxeter.generator(0)

    def test_panels_of_one_id_not_parallel(self, twin_a2):
        """Test panels through x+ and x- do not project bijectively"""
        P, Q = twin_a2.plus.panel(0, 0), twin_a2.minus.panel(0, 0)
        assert not cross_parallel(twin_a2, P, Q)
        with pytest.raises(DomainError):
            cross_panel_distance(twin_a2, P, Q)

    def test_same_sign_refused(self, twin_a2):
        """Test cross_parallel needs panels of opposite signs"""
        with pytest.raises(DomainError):
            cross_parallel(twin_a2, twin_a2.plus.panel(0, 0), twin_a2.plus.panel(0, 1))

    def test_types_must_match_for_opposition(self, twin_a2, opposite_pair):
        """Test residues of different type are never opposite"""
        x, y = opposite_pair
        assert not twin_a2.opposite_residues(twin_a2.plus.panel(0, x.id), twin_a2.minus.panel(1, y.id))


class TestTwinApartments:
    def test_apartment_size(self, twin_a2, opposite_pair):
        """Test a twin apartment of type A2 has two hexagons"""
        A = twin_apartment(twin_a2, *opposite_pair)
        assert len(A) == 12
        assert len(A.plus) == len(A.minus) == 6
        assert opposite_pair[0] in A and opposite_pair[1] in A

    def test_apartment_panels(self, twin_a2, opposite_pair):
        """Test each panel meets the apartment in its two projections"""
        report = check_twin_apartment(twin_a2, twin_apartment(twin_a2, *opposite_pair))
        assert report.passed
        assert report.checks == 12

    def test_non_opposite_refused(self, twin_a2):
        """Test apartments need opposite chambers"""
        with pytest.raises(DomainError):
            twin_apartment(twin_a2, TwinChamber(PLUS, 0), TwinChamber(MINUS, 0))

    def test_walls_pair_panels(self, twin_a2, opposite_pair):
        """Test each wall crosses two panels of the plus hexagon"""
        A = twin_apartment(twin_a2, *opposite_pair)
        plus = twin_a2.plus
        inside = set(A.plus)
        panels = [plus.panel_ref(p) for p in range(plus.num_panels)
                  if len(inside.intersection(plus.panel_members(p).tolist())) == 2]
        assert len(panels) == 6
        for P in panels:
            assert sum(same_wall(twin_a2, A, P, Q) for Q in panels) == 2


class TestOpposition:
    def test_k_range(self, twin_a2):
        """Test k is bounded by the longest length"""
        with pytest.raises(DomainError):
            opposition_graph(twin_a2, TwinChamber(PLUS, 0), 4)

    def test_full_opposition_graph(self, twin_a2):
        """Test c^op(l(r_S)) is the whole opposite half"""
        graph = opposition_graph(twin_a2, TwinChamber(PLUS, 0), 3)
        assert len(graph.vertices) == 21
        assert graph.connected

    def test_co_k_for_quadrangle(self, twin_c2):
        """Test co_0 fails and co_1 holds for W(2)"""
        assert not condition_co_k(twin_c2, 0).passed
        report = condition_co_k(twin_c2, 1)
        assert report.passed
        assert report.transversal
        assert len(report.results) == 2

    @pytest.mark.parametrize("k,results", [
        (0, [(TwinChamber(PLUS, 0), 16, 2), (TwinChamber(MINUS, 0), 16, 2)]),
        (1, [(TwinChamber(PLUS, 0), 32, 1), (TwinChamber(MINUS, 0), 32, 1)]),
    ])
    def test_quadrangle_component_counts(self, twin_c2, k, results):
        """Test the W(2) opposition graphs split into two eight-cycles at k=0 and join at k=1"""
        assert condition_co_k(twin_c2, k).results == results

    @pytest.mark.parametrize("name", ["A2q2", "A2q3"])
    def test_co_0_for_projective_planes(self, name):
        """Test the opposite set of a flag in PG(2,q) is connected"""
        report = condition_co_k(self_twin(get_zoo_building(name)), 0)
        assert report.passed
        assert all(count == 1 for _, _, count in report.results)

    def test_coprojection_through_larger_residue(self, twin_c2):
        """Test projecting onto a panel equals projecting onto the whole half first"""
        plus, minus = twin_c2.plus, twin_c2.minus
        whole = minus.residue(0, (0, 1))
        for x in plus.chambers():
            chamber = TwinChamber(PLUS, x)
            gate = twin_c2.coprojection(chamber, whole)
            for p in range(minus.num_panels):
                R = minus.panel_ref(p)
                assert twin_c2.coprojection(chamber, R) == minus.projection(gate, R)

    def test_opposite_panels_pair_at_longest_element(self, twin_c2):
        """Test chambers of opposite panels are mutual gates exactly at codistance r_J"""
        plus, minus = twin_c2.plus, twin_c2.minus
        pairs = 0
        for p in range(plus.num_panels):
            R = plus.panel_ref(p)
            longest = twin_c2.table.longest_in(R.type)
            for q in range(minus.num_panels):
                T = minus.panel_ref(q)
                if not twin_c2.opposite_residues(R, T):
                    continue
                pairs += 1
                for x in R.members.tolist():
                    for y in T.members.tolist():
                        forward = twin_c2.coprojection(TwinChamber(PLUS, x), T) == y
                        at_longest = twin_c2.codistance_index(TwinChamber(PLUS, x), TwinChamber(MINUS, y)) == longest
                        backward = twin_c2.coprojection(TwinChamber(MINUS, y), R) == x
                        assert forward == at_longest == backward
        assert pairs == 30 * 8

    def test_failures_listed(self, twin_c2):
        """Test failing centers are reported"""
        report = condition_co_k(twin_c2, 0, transversal=True)
        assert report.failures() == [TwinChamber(PLUS, 0), TwinChamber(MINUS, 0)]

    @pytest.mark.parametrize("k", [0, 1, 2, 3])
    def test_opposition_sets_coincide(self, twin_a2, k):
        """Test c^op(k) matches the spherical description"""
        assert opposition_sets_coincide(twin_a2, TwinChamber(MINUS, 6), k)

    def test_to_dict(self, twin_c2):
        """Test the opposition graph summary"""
        summary = opposition_graph(twin_c2, TwinChamber(PLUS, 0), 0).to_dict()
        assert summary["vertices"] == 16
        assert summary["center"] == "+0"


class TestAdjacency:
    def test_adjacency_characterization(self, twin_a2):
        """Test s-adjacency is read off the opposite sets"""
        pairs = [(x, y) for x in range(0, 21, 4) for y in range(21)]
        report = check_adjacency_characterization(twin_a2, pairs=pairs)
        assert report.passed
        assert report.checks == len(pairs) * 2

    def test_quadrangle_adjacency_exhaustive(self, twin_c2):
        """Test the characterization over every pair of W(2) chambers"""
        report = check_adjacency_characterization(twin_c2)
        assert report.exhaustive
        assert report.passed
        assert report.checks == 45 * 45 * 2

    def test_same_half_required(self, twin_a2):
        """Test the opposite-set test needs chambers of one sign"""
        with pytest.raises(DomainError):
            twin_building.opposite_sets_adjacent(twin_a2, TwinChamber(PLUS, 0), TwinChamber(MINUS, 0), 0)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
