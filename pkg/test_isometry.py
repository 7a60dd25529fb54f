import json
import random

import pytest

from errors import DomainError, ExtensionError
from geometry_zoo import get_zoo_building, random_group_element
from input_validator import IsometryMapInput
from isometry import (
    TwinIsometry, check_isometry, check_rigidity, extend_germ, extend_to_minus, forced_chambers, image_residue,
    is_admissible, opposite_image_criterion, phi_s_transport, projections_commute,
)
from paths_walls import wall_graph
from twin_building import MINUS, PLUS, TwinChamber, self_twin

# Test fixtures
@pytest.fixture(scope="module")
def twin():
    return self_twin(get_zoo_building("A2q2"))

@pytest.fixture(scope="module")
def group_perm(twin):
    g = random_group_element(twin.minus, random.Random(7))
    return twin.minus.act(g)

@pytest.fixture
def group_isometry(twin, group_perm):
    return TwinIsometry.from_permutations(twin, twin, plus=group_perm, minus=group_perm)

@pytest.fixture(scope="module")
def twin_c2():
    return self_twin(get_zoo_building("C2q2"))

@pytest.fixture(scope="module")
def twin_c3():
    return self_twin(get_zoo_building("C3q2"))


def group_isometry_of(t, seed):
    perm = t.minus.act(random_group_element(t.minus, random.Random(seed)))
    return TwinIsometry.from_permutations(t, t, plus=perm, minus=perm)


def assert_wall_adjacent_transports_agree(t, phi, c, s):
    wg = wall_graph(t, c, s)
    assert wg.graph.number_of_edges()
    anchors = {}
    for y in t.opposite_ids(c).tolist():
        anchors.setdefault(t.plus.panel_id(s, y), TwinChamber(PLUS, y))
    c2 = phi[c]
    for a, b in wg.graph.edges():
        assert phi_s_transport(t, t, phi, c, c2, anchors[a], s) == phi_s_transport(t, t, phi, c, c2, anchors[b], s)


class TestTwinIsometry:
    def test_identity(self, twin):
        """Test the identity is an isometry on both halves"""
        phi = TwinIsometry.identity(twin)
        assert len(phi) == 42
        assert phi.is_total(PLUS) and phi.is_total(MINUS)
        assert check_isometry(phi).passed

    def test_group_element(self, group_isometry):
        """Test a matrix acting on both halves preserves distance and codistance"""
        assert check_isometry(group_isometry).passed

    def test_swapped_chambers(self, twin):
        """Test swapping two chambers breaks Iso3"""
        phi = TwinIsometry.identity(twin)
        phi.maps[PLUS][0], phi.maps[PLUS][1] = 1, 0
        report = check_isometry(phi)
        assert not report.passed
        assert report.violations[0][0] == "Iso3"

    def test_non_injective(self, twin):
        """Test repeated images break Iso1"""
        phi = TwinIsometry(twin, twin, plus={0: 3, 1: 3})
        assert check_isometry(phi).violations[0][0] == "Iso1"

    def test_out_of_range(self, twin):
        """Test images must be chambers of the target half"""
        phi = TwinIsometry(twin, twin, minus={0: 99})
        assert check_isometry(phi).violations[0][0] == "Iso2"

    def test_mismatched_types(self, twin):
        """Test both twins need the same Coxeter system"""
        with pytest.raises(DomainError):
            TwinIsometry(twin, self_twin(get_zoo_building("C2q2")))

    def test_add_checks_signs(self, twin):
        """Test chambers keep their sign"""
        with pytest.raises(DomainError):
            TwinIsometry(twin, twin).add(TwinChamber(PLUS, 0), TwinChamber(MINUS, 0))

    def test_json(self, twin):
        """Test the JSON form lists id pairs per sign"""
        phi = TwinIsometry(twin, twin, plus={1: 2, 0: 0}, minus={4: 4})
        assert json.loads(phi.to_json()) == {"plus": [[0, 0], [1, 2]], "minus": [[4, 4]]}
        assert phi == phi.copy()

    def test_from_input(self, twin):
        """Test an isometry file with its minus pair"""
        data = IsometryMapInput(plus=[(x, x) for x in range(21)], minus=(2, 2))
        phi, c, c2 = TwinIsometry.from_input(twin, twin, data)
        assert phi.is_total(PLUS)
        assert c == c2 == TwinChamber(MINUS, 2)
        with pytest.raises(DomainError):
            TwinIsometry.from_input(twin, twin, IsometryMapInput(plus=[(0, 21)], minus=(0, 0)))


class TestAdmissibility:
    def test_admissible_pairs(self, twin):
        """Test the plus identity admits only c- -> c-"""
        phi = TwinIsometry.identity(twin, signs=(PLUS,))
        assert is_admissible(phi, TwinChamber(MINUS, 4), TwinChamber(MINUS, 4))
        assert not is_admissible(phi, TwinChamber(MINUS, 4), TwinChamber(MINUS, 5))
        assert not is_admissible(phi, TwinChamber(MINUS, 4), TwinChamber(PLUS, 4))

    def test_opposite_image_criterion(self, twin):
        """Test phi(x^op) lies in x2^op exactly for the admissible image"""
        phi = TwinIsometry.identity(twin)
        assert opposite_image_criterion(phi, TwinChamber(PLUS, 0), TwinChamber(PLUS, 0))
        assert not opposite_image_criterion(phi, TwinChamber(PLUS, 0), TwinChamber(PLUS, 1))

    def test_criterion_needs_total_map(self, twin):
        """Test the criterion needs the other half mapped"""
        phi = TwinIsometry.identity(twin, signs=(PLUS,))
        with pytest.raises(DomainError):
            opposite_image_criterion(phi, TwinChamber(PLUS, 0), TwinChamber(PLUS, 0))

    def test_projections_commute(self, twin, group_isometry, group_perm):
        """Test phi(proj_R x) = proj_phi(R) phi(x)"""
        R = twin.minus.panel(0, 5)
        image = image_residue(group_isometry, R)
        assert image.contains(int(group_perm[5]))
        for x in range(0, 21, 5):
            assert projections_commute(group_isometry, TwinChamber(PLUS, x), TwinChamber(PLUS, int(group_perm[x])), R)


class TestExtension:
    def test_panel_transport(self, twin):
        """Test transport through an opposite panel under the identity"""
        phi = TwinIsometry.identity(twin)
        c = TwinChamber(MINUS, 0)
        x = TwinChamber(PLUS, int(twin.opposite_ids(c)[0]))
        transport = phi_s_transport(twin, twin, phi, c, c, x, 0)
        assert transport == {d: d for d in twin.minus.panel(0, 0).members.tolist()}
        with pytest.raises(DomainError):
            phi_s_transport(twin, twin, phi, c, c, TwinChamber(PLUS, 0), 0)

    def test_extend_group_element(self, twin, group_isometry, group_perm):
        """Test the plus half and one minus pair determine the group action on the minus half"""
        plus_only = group_isometry.restrict(PLUS)
        c = TwinChamber(MINUS, 0)
        extended = extend_to_minus(twin, twin, plus_only, c, TwinChamber(MINUS, int(group_perm[0])))
        assert extended.maps[MINUS] == group_isometry.maps[MINUS]
        assert check_isometry(extended).passed

    def test_inadmissible_anchor(self, twin):
        """Test a wrong minus image stops the extension"""
        phi = TwinIsometry.identity(twin, signs=(PLUS,))
        with pytest.raises(ExtensionError):
            extend_to_minus(twin, twin, phi, TwinChamber(MINUS, 0), TwinChamber(MINUS, 1))

    def test_anchor_sign(self, twin):
        """Test the anchor pair lies in the minus halves"""
        phi = TwinIsometry.identity(twin, signs=(PLUS,))
        with pytest.raises(DomainError):
            extend_to_minus(twin, twin, phi, TwinChamber(PLUS, 0), TwinChamber(PLUS, 0))

    def test_partial_plus_map(self, twin):
        """Test extension needs the whole plus half"""
        phi = TwinIsometry(twin, twin, plus={0: 0})
        with pytest.raises(DomainError):
            extend_to_minus(twin, twin, phi, TwinChamber(MINUS, 0), TwinChamber(MINUS, 0))

    def test_extend_germ(self, twin, group_isometry, group_perm):
        """Test a germ on E_2(c+) and c- extends to the group element"""
        c_plus = 3
        germ = TwinIsometry(twin, twin, plus={x: int(group_perm[x]) for x in twin.plus.e_k_neighborhood(c_plus, 2)})
        c_minus = TwinChamber(MINUS, int(twin.opposite_ids(TwinChamber(PLUS, c_plus))[0]))
        germ.add(c_minus, TwinChamber(MINUS, int(group_perm[c_minus.id])))
        assert extend_germ(twin, twin, germ, c_minus) == group_isometry

    @pytest.mark.parametrize("c,s", [(0, 0), (5, 1), (12, 0)])
    def test_transport_independent_of_wall_anchor(self, twin, group_isometry, c, s):
        """Test wall-adjacent anchors transport P_s(c) the same way"""
        assert_wall_adjacent_transports_agree(twin, group_isometry, TwinChamber(MINUS, c), s)

    @pytest.mark.slow
    @pytest.mark.parametrize("c,s", [(0, 0), (17, 2)])
    def test_symplectic_transport_independent_of_wall_anchor(self, twin_c3, c, s):
        """Test wall-adjacent anchors agree on the W(5,2) self-twin"""
        assert_wall_adjacent_transports_agree(twin_c3, group_isometry_of(twin_c3, 3), TwinChamber(MINUS, c), s)

    @pytest.mark.slow
    def test_extend_symplectic_element(self, twin_c3):
        """Test a symplectic group element is recovered on the minus half from its plus half"""
        phi = group_isometry_of(twin_c3, 11)
        c = TwinChamber(MINUS, 0)
        extended = extend_to_minus(twin_c3, twin_c3, phi.restrict(PLUS), c, phi[c])
        assert extended.maps[MINUS] == phi.maps[MINUS]

    def test_germ_needs_minus_chamber(self, twin):
        """Test the germ must contain its minus anchor"""
        germ = TwinIsometry.identity(twin, signs=(PLUS,))
        with pytest.raises(DomainError):
            extend_germ(twin, twin, germ, TwinChamber(MINUS, 0))


class TestRigidity:
    def test_fixing_a_half_forces_everything(self, twin):
        """Test codistance rows from a whole half pin down every chamber of the other half"""
        forced, columns = forced_chambers(twin, twin.chambers(PLUS))
        assert len(forced) == 42
        assert columns == 42

    def test_rigidity_report(self, twin):
        """Test the report counts fixed and forced chambers"""
        report = check_rigidity(twin, 0)
        assert report.fixed == 6
        assert report.forced == report.total == 42
        assert report.rigid

    def test_quadrangle_rigidity(self, twin_c2):
        """Test fixing E_1(c+) and one opposite chamber forces all of W(2)"""
        report = check_rigidity(twin_c2, 0)
        assert report.fixed == 6
        assert report.forced == report.total == 90
        assert report.rigid

    @pytest.mark.slow
    def test_symplectic_rigidity(self, twin_c3):
        """Test rigidity on the W(5,2) self-twin"""
        report = check_rigidity(twin_c3, 0)
        assert report.fixed == 8
        assert report.total == 2 * 2835
        assert report.rigid

    def test_anchor_must_be_opposite(self, twin):
        """Test c- must be opposite c+"""
        with pytest.raises(DomainError):
            check_rigidity(twin, 0, c_minus=0)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
