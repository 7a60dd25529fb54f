import numpy as np
import pytest

from coxeter import Root
from errors import DomainError, FixtureValidationError, UsageError
from geometry_zoo import get_zoo_building
from rgd_matrix import (
    MatrixGroupElement, RootSubgroupFamily, check_wc_generation, commutator, commutator_projection, find_m_element,
    load_family, mulclose, normalizing_subgroup, simply_transitive_check, standard_chamber, validate_rgd_axioms,
    wc_consistency,
)
from twin_building import MINUS, PLUS, TwinChamber, self_twin

# Test fixtures
@pytest.fixture(scope="module")
def sl3_f2():
    return load_family("SL3F2")

@pytest.fixture(scope="module")
def sp4_f2():
    return load_family("Sp4F2")

@pytest.fixture(scope="module")
def twin_a2():
    return self_twin(get_zoo_building("A2q2"))

@pytest.fixture
def generator_file(tmp_path):
    def write(text):
        path = tmp_path / "family.gen"
        path.write_text(text)
        return str(path)
    return write


def elementary(i, j, q=2, n=3, t=1):
    entries = np.eye(n, dtype=np.int64)
    entries[i, j] = t
    return MatrixGroupElement(entries, q)


HEADER = "family TEST\ntype A2\nfield 2\ndimension 3\n"
IDENTITY_ROWS = "1 0 0\n0 1 0\n0 0 1\n"


class TestMatrixGroupElement:
    def test_inverse(self):
        """Test x x^-1 = 1 over F_3"""
        x = elementary(0, 1, q=3, t=2) * elementary(1, 2, q=3)
        assert (x * x.inverse()).is_identity()

    def test_singular(self):
        """Test singular matrices have no inverse"""
        with pytest.raises(DomainError):
            MatrixGroupElement(np.zeros((3, 3), dtype=np.int64), 2).inverse()

    def test_entries_reduced(self):
        """Test entries are stored mod q and equal elements hash alike"""
        a = MatrixGroupElement([[3, 1], [0, 1]], 2)
        b = MatrixGroupElement([[1, 1], [0, 1]], 2)
        assert a == b
        assert len({a, b}) == 1

    def test_commutator_of_transvections(self):
        """Test [1 + E_12, 1 + E_23] = 1 + E_13"""
        assert commutator(elementary(0, 1), elementary(1, 2)) == elementary(0, 2)

    def test_mulclose(self):
        """Test a transvection over F_3 generates a group of order 3"""
        assert len(mulclose([elementary(0, 1, q=3)])) == 3
        assert len(mulclose([elementary(0, 1), elementary(1, 2)])) == 8
        with pytest.raises(DomainError):
            mulclose([])


class TestLoading:
    def test_builtin_family(self, sl3_f2):
        """Test SL_3(F_2) loads with one root group per root"""
        assert sl3_f2.q == 2
        assert sl3_f2.form is None
        assert len(sl3_f2.generators) == 3
        assert all(len(sl3_f2.subgroup(r)) == 2 for r in sl3_f2.roots)

    def test_negative_roots_are_transposes(self, sl3_f2):
        """Test U_-alpha is the transpose of U_alpha"""
        alpha = sl3_f2.coxeter.simple_root(0)
        assert sl3_f2.subgroup(-alpha) == frozenset(g.transpose() for g in sl3_f2.subgroup(alpha))

    def test_unknown_family(self):
        """Test unknown names are a usage error"""
        with pytest.raises(UsageError):
            load_family("SL9F7")

    def test_not_a_root(self, generator_file):
        """Test coordinates must be positive roots"""
        text = HEADER + "root 2 1\n" + IDENTITY_ROWS
        with pytest.raises(FixtureValidationError):
            load_family(generator_file(text))

    def test_missing_root(self, generator_file):
        """Test every positive root needs a generator"""
        text = HEADER + "root 1 0\n1 1 0\n0 1 0\n0 0 1\n"
        with pytest.raises(FixtureValidationError) as info:
            load_family(generator_file(text))
        assert len(info.value.messages) == 2


class TestGroups:
    @pytest.mark.parametrize("name,order", [
        ("SL3F2", 168), pytest.param("SL3F3", 5616, marks=pytest.mark.slow), ("Sp4F2", 720),
    ])
    def test_ambient_orders(self, name, order):
        """Test SL_3(2), SL_3(3) and Sp_4(2) by enumeration"""
        assert len(load_family(name).ambient_group()) == order

    def test_unipotent_orders(self, sl3_f2, sp4_f2):
        """Test |U_+| is q to the number of positive roots"""
        assert len(sl3_f2.unipotent(PLUS)) == 8
        assert len(sp4_f2.unipotent(PLUS)) == 16
        assert len(sp4_f2.unipotent(MINUS)) == 16

    def test_cyclic_roots(self, sl3_f2):
        """Test the circle of roots for A2"""
        circle = [r.coords for r in sl3_f2.cyclic_roots()]
        assert circle == [(1, 0), (1, 1), (0, 1), (-1, 0), (-1, -1), (0, -1)]

    def test_torus(self, sl3_f2):
        """Test the diagonal subgroup of SL_3(2) is trivial"""
        torus = normalizing_subgroup(sl3_f2)
        assert len(torus) == 1
        assert next(iter(torus)).is_identity()


class TestRGDAxioms:
    @pytest.mark.parametrize("name", ["SL3F2", pytest.param("SL3F3", marks=pytest.mark.slow), "Sp4F2"])
    def test_families_pass(self, name):
        """Test the built-in families are RGD systems"""
        report = validate_rgd_axioms(load_family(name))
        assert report.passed
        assert set(report.axioms) == {"RGD0", "RGD1", "RGD2", "RGD3", "RGD4"}

    def test_m_element(self, sl3_f2):
        """Test m(u) swaps U_alpha and U_-alpha"""
        alpha = sl3_f2.coxeter.simple_root(1)
        u = next(g for g in sl3_f2.subgroup(alpha) if not g.is_identity())
        m = find_m_element(sl3_f2, 1, u)
        assert m is not None
        assert {m * g * m.inverse() for g in sl3_f2.subgroup(alpha)} == set(sl3_f2.subgroup(-alpha))

    def test_wrong_commutators_fail(self, sl3_f2):
        """Test RGD1 catches a family whose highest root group is wrong"""
        a, b = sl3_f2.coxeter.simple_root(0), sl3_f2.coxeter.simple_root(1)
        broken = RootSubgroupFamily(
            name="broken", coxeter=sl3_f2.coxeter, q=2, dimension=3, form=None,
            generators={a: [elementary(0, 1)], b: [elementary(1, 2)], Root(sl3_f2.coxeter, [1, 1]): [elementary(2, 1)]},
        )
        report = validate_rgd_axioms(broken)
        assert not report.passed
        assert not report.axioms["RGD1"].passed
        assert report.to_dict()["axioms"]["RGD1"]["passed"] is False


class TestCommutatorProjections:
    def test_a2_projection(self, sl3_f2):
        """Test [U_1, U_3]_2 = U_2 for SL_3(2)"""
        result = commutator_projection(sl3_f2, 1, 2)
        assert result == sl3_f2.subgroup(sl3_f2.cyclic_roots()[1])

    @pytest.mark.parametrize("i,k", [(1, 2), (1, 3), (2, 3), (2, 4)])
    def test_c2_projections(self, sp4_f2, i, k):
        """Test every projection of Sp_4(2) is the whole root group"""
        result = commutator_projection(sp4_f2, i, k)
        assert len(result) == 2

    def test_k_range(self, sl3_f2):
        """Test k must lie strictly between i and i + n - 1"""
        with pytest.raises(DomainError):
            commutator_projection(sl3_f2, 1, 3)


class TestWallConnectedGeneration:
    def test_spherical_generation(self, sl3_f2):
        """Test every root has finite order with s in a spherical type"""
        report = check_wc_generation(sl3_f2, 0, PLUS)
        assert report.degenerate
        assert report.equal
        assert report.consistent is None

    def test_consistency_with_wall_graph(self, sl3_f2, twin_a2):
        """Test (wc) agrees with the connectivity of Gamma_s(c)"""
        for side in (PLUS, MINUS):
            report = wc_consistency(sl3_f2, 1, side, twin_a2)
            assert report.wall_connected
            assert report.consistent

    def test_standard_chambers_opposite(self, twin_a2):
        """Test the upper and lower triangular flags are opposite"""
        b = twin_a2.minus
        c_plus, c_minus = standard_chamber(b, PLUS), standard_chamber(b, MINUS)
        assert twin_a2.is_opposite(TwinChamber(PLUS, c_plus), TwinChamber(MINUS, c_minus))


class TestSimplyTransitive:
    @pytest.mark.parametrize("name,building,count", [
        ("SL3F2", "A2q2", 8), ("Sp4F2", "C2q2", 16), pytest.param("SL3F3", "A2q3", 27, marks=pytest.mark.slow),
    ])
    def test_simply_transitive(self, name, building, count):
        """Test U_+ acts simply transitively on the chambers opposite c_+"""
        report = simply_transitive_check(load_family(name), self_twin(get_zoo_building(building)), PLUS)
        assert report.simply_transitive
        assert report.group_order == report.opposite_count == report.orbit_size == count

    def test_minus_side(self, sl3_f2, twin_a2):
        """Test U_- on the chambers opposite c_-"""
        assert simply_transitive_check(sl3_f2, twin_a2, MINUS).simply_transitive

    def test_field_mismatch(self, sl3_f2):
        """Test the family must act on the building it is checked against"""
        with pytest.raises(DomainError):
            simply_transitive_check(sl3_f2, self_twin(get_zoo_building("A2q3")), PLUS)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
