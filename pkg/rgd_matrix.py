"""
Root-subgroup families of small matrix groups and the RGD axioms.

Generators come from fixture files (one matrix per positive root, negative
root subgroups are transposes). Groups are enumerated by multiplicative
closure, so every axiom is checked over all elements of the groups involved.
"""
import logging
from dataclasses import dataclass, field
from itertools import product
from typing import Dict, FrozenSet, Iterable, List, Optional, Tuple

import numpy as np

from building import AxiomReport
from coxeter import INFINITY, CoxeterMatrix, Root, reflection_product_order, root_interval
from errors import DomainError, FixtureValidationError, StructuralError, UsageError
from geometry_zoo import get_zoo_building, resolve_fixture_path, rref, subspace_key, symplectic_form
from input_validator import parse_generator_text
from paths_walls import wall_graph
from twin_building import PLUS, TwinBuilding, TwinChamber, self_twin

logger = logging.getLogger("rgd_matrix")

# family -> (fixture file, zoo building it acts on)
RGD_FAMILIES: Dict[str, Tuple[str, str]] = {
    "SL3F2": ("sl3_f2.gen", "A2q2"),
    "SL3F3": ("sl3_f3.gen", "A2q3"),
    "Sp4F2": ("sp4_f2.gen", "C2q2"),
}


class MatrixGroupElement:
    """Invertible matrix over F_q, hashable by its entries"""

    __slots__ = ("entries", "q", "_key", "_hash")

    def __init__(self, entries, q: int):
        array = np.array(entries, dtype=np.int64) % q
        array.setflags(write=False)
        self.entries = array
        self.q = q
        self._key = (q, array.shape[0], array.tobytes())
        self._hash = hash(self._key)

    @classmethod
    def identity(cls, n: int, q: int) -> "MatrixGroupElement":
        return cls(np.eye(n, dtype=np.int64), q)

    @property
    def dimension(self) -> int:
        return self.entries.shape[0]

    def is_identity(self) -> bool:
        return bool((self.entries == np.eye(self.dimension, dtype=np.int64)).all())

    def inverse(self) -> "MatrixGroupElement":
        n = self.dimension
        reduced = rref(np.hstack([self.entries, np.eye(n, dtype=np.int64)]), self.q)
        if len(reduced) != n or not (reduced[:, :n] == np.eye(n, dtype=np.int64)).all():
            raise DomainError("Matrix is not invertible")
        return MatrixGroupElement(reduced[:, n:], self.q)

    def transpose(self) -> "MatrixGroupElement":
        return MatrixGroupElement(self.entries.T, self.q)

    def __mul__(self, other: "MatrixGroupElement") -> "MatrixGroupElement":
        return MatrixGroupElement(self.entries @ other.entries, self.q)

    def __eq__(self, other) -> bool:
        return isinstance(other, MatrixGroupElement) and self._key == other._key

    def __hash__(self) -> int:
        return self._hash

    def __lt__(self, other: "MatrixGroupElement") -> bool:
        return self._key < other._key

    def __repr__(self) -> str:
        rows = ";".join(" ".join(str(v) for v in row) for row in self.entries)
        return f"[{rows}]"


def commutator(a: MatrixGroupElement, b: MatrixGroupElement) -> MatrixGroupElement:
    """[a, b] = a^-1 b^-1 a b"""
    return a.inverse() * b.inverse() * a * b


def mulclose(generators: Iterable[MatrixGroupElement], maxsize: Optional[int] = None) -> FrozenSet[MatrixGroupElement]:
    """The group generated by generators, identity included"""
    generators = list(generators)
    if not generators:
        raise DomainError("mulclose needs at least one generator")
    one = MatrixGroupElement.identity(generators[0].dimension, generators[0].q)
    elements = {one, *generators}
    boundary = list(elements)
    while boundary:
        fresh = []
        for a in generators:
            for b in boundary:
                c = a * b
                if c not in elements:
                    elements.add(c)
                    fresh.append(c)
                    if maxsize and len(elements) >= maxsize:
                        return frozenset(elements)
        boundary = fresh
    return frozenset(elements)


def _integer_det3(stack: np.ndarray) -> np.ndarray:
    return (stack[:, 0, 0] * (stack[:, 1, 1] * stack[:, 2, 2] - stack[:, 1, 2] * stack[:, 2, 1])
            - stack[:, 0, 1] * (stack[:, 1, 0] * stack[:, 2, 2] - stack[:, 1, 2] * stack[:, 2, 0])
            + stack[:, 0, 2] * (stack[:, 1, 0] * stack[:, 2, 1] - stack[:, 1, 1] * stack[:, 2, 0]))


@dataclass
class RootSubgroupFamily:
    """Phi-indexed root subgroups of a matrix group over F_q"""
    name: str
    coxeter: CoxeterMatrix
    q: int
    dimension: int
    form: Optional[np.ndarray]
    generators: Dict[Root, List[MatrixGroupElement]]
    building_name: Optional[str] = None
    _subgroups: Dict[Root, FrozenSet[MatrixGroupElement]] = field(default_factory=dict, repr=False)
    _generated: Dict[FrozenSet[Root], FrozenSet[MatrixGroupElement]] = field(default_factory=dict, repr=False)
    _ambient: Optional[FrozenSet[MatrixGroupElement]] = field(default=None, repr=False)

    @property
    def table(self):
        return self.coxeter.weyl_table()

    @property
    def gonality(self) -> int:
        return int(self.coxeter.m(0, 1))

    @property
    def roots(self) -> List[Root]:
        return self.table.roots()

    def positive_roots(self) -> List[Root]:
        return [r for r in self.roots if r.is_positive]

    def roots_of_sign(self, side: int) -> List[Root]:
        return [r for r in self.roots if r.is_positive == (side == PLUS)]

    def subgroup(self, root: Root) -> FrozenSet[MatrixGroupElement]:
        if root not in self._subgroups:
            if root.is_positive:
                gens = self.generators.get(root)
                if gens is None:
                    raise FixtureValidationError(self.name, [f"no generators for root {root}"])
            else:
                gens = [g.transpose() for g in self.generators.get(-root, [])]
            self._subgroups[root] = mulclose(gens)
        return self._subgroups[root]

    def generated_by(self, roots: Iterable[Root]) -> FrozenSet[MatrixGroupElement]:
        key = frozenset(roots)
        if key not in self._generated:
            if not key:
                self._generated[key] = frozenset({MatrixGroupElement.identity(self.dimension, self.q)})
            else:
                gens = [g for r in sorted(key) for g in self.subgroup(r) if not g.is_identity()]
                self._generated[key] = mulclose(gens) if gens else frozenset(
                    {MatrixGroupElement.identity(self.dimension, self.q)})
        return self._generated[key]

    def unipotent(self, side: int) -> FrozenSet[MatrixGroupElement]:
        return self.generated_by(self.roots_of_sign(side))

    def ambient_group(self) -> FrozenSet[MatrixGroupElement]:
        """SL_n(q), or Sp_n(q) when a form is fixed, by exhaustive enumeration"""
        if self._ambient is None:
            n, q = self.dimension, self.q
            stack = np.array(list(product(range(q), repeat=n * n)), dtype=np.int64).reshape(-1, n, n)
            if self.form is not None:
                preserved = (np.einsum("kji,jl,klm->kim", stack, self.form, stack) - self.form) % q
                keep = ~preserved.reshape(len(stack), -1).any(axis=1)
            elif n == 3:
                keep = _integer_det3(stack) % q == 1
            else:
                raise DomainError(f"No determinant enumeration for dimension {n}")
            self._ambient = frozenset(MatrixGroupElement(g, q) for g in stack[keep])
            logger.info(f"{self.name}: ambient group has {len(self._ambient)} elements")
        return self._ambient

    def cyclic_roots(self) -> List[Root]:
        """U_1 .. U_2n around the circle: the inversion sequence of r_S from alpha_0, then the negatives"""
        if self.coxeter.rank != 2:
            raise DomainError("Cyclic root order is defined for rank 2 families")
        table = self.table
        word = table.words[table.longest]
        w = self.coxeter.identity()
        positive = []
        for s in word:
            positive.append(w.act(self.coxeter.simple_root(s)))
            w = w * self.coxeter.generator(s)
        return positive + [-r for r in positive]


def load_family(name: str) -> RootSubgroupFamily:
    """Built-in family by name, or a generator file by path"""
    if name in RGD_FAMILIES:
        filename, building_name = RGD_FAMILIES[name]
    else:
        filename, building_name = name, None
    path = resolve_fixture_path(filename)
    if path is None:
        raise UsageError(f"Unknown RGD family {name!r}; known: {', '.join(RGD_FAMILIES)}")
    with open(path, encoding="utf-8") as handle:
        parsed = parse_generator_text(handle.read(), path)
    coxeter = CoxeterMatrix.named(parsed.type)
    table = coxeter.weyl_table()
    known = {tuple(r.coords): r for r in table.roots() if r.is_positive}
    generators: Dict[Root, List[MatrixGroupElement]] = {}
    for entry in parsed.generators:
        root = known.get(tuple(entry.coords))
        if root is None:
            raise FixtureValidationError(path, [f"{entry.coords} is not a positive root of {parsed.type}"])
        generators.setdefault(root, []).append(MatrixGroupElement(entry.rows, parsed.field))
    missing = sorted(set(known.values()) - set(generators))
    if missing:
        raise FixtureValidationError(path, [f"no generator for root {root}" for root in missing])
    form = symplectic_form(parsed.dimension, parsed.field) if parsed.form == "antidiagonal" else None
    family = RootSubgroupFamily(
        name=parsed.family, coxeter=coxeter, q=parsed.field, dimension=parsed.dimension,
        form=form, generators=generators, building_name=building_name,
    )
    logger.info(f"Loaded {family.name}: {len(generators)} positive roots over F_{family.q}")
    return family


def _conjugates_onto(m: MatrixGroupElement, source: FrozenSet[MatrixGroupElement],
                     target: FrozenSet[MatrixGroupElement]) -> bool:
    inverse = m.inverse()
    return {m * g * inverse for g in source} == set(target)


def _open_interval(a: Root, b: Root) -> Optional[FrozenSet[Root]]:
    try:
        return root_interval(a, b) - {a, b}
    except DomainError:
        return None


@dataclass
class RGDReport:
    family: str
    group_order: int
    axioms: Dict[str, AxiomReport] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(report.passed for report in self.axioms.values())

    def to_dict(self) -> Dict[str, object]:
        return {
            "family": self.family,
            "group_order": self.group_order,
            "axioms": {
                name: {"checks": r.checks, "passed": r.passed, "violations": [list(map(str, v)) for v in r.violations]}
                for name, r in self.axioms.items()
            },
        }


def validate_rgd_axioms(f: RootSubgroupFamily) -> RGDReport:
    """RGD0-RGD4 by enumeration of every group involved"""
    roots = f.roots
    ambient = f.ambient_group()
    report = RGDReport(family=f.name, group_order=len(ambient))

    rgd0 = AxiomReport(name="RGD0", exhaustive=True)
    for root in roots:
        group = f.subgroup(root)
        rgd0.checks += 1
        if len(group) < 2:
            rgd0.record("RGD0", (str(root),))
        if not group <= ambient:
            rgd0.record("RGD0-ambient", (str(root),))
    report.axioms["RGD0"] = rgd0

    rgd1 = AxiomReport(name="RGD1", exhaustive=True)
    for a in roots:
        for b in roots:
            if not a < b:
                continue
            inside = _open_interval(a, b)
            if inside is None:
                continue
            target = f.generated_by(inside)
            for u in f.subgroup(a):
                for v in f.subgroup(b):
                    rgd1.checks += 1
                    if commutator(u, v) not in target:
                        rgd1.record("RGD1", (str(a), str(b), repr(u), repr(v)))
    report.axioms["RGD1"] = rgd1

    rgd2 = AxiomReport(name="RGD2", exhaustive=True)
    for s in range(f.coxeter.rank):
        alpha = f.coxeter.simple_root(s)
        for u in sorted(f.subgroup(alpha)):
            if u.is_identity():
                continue
            rgd2.checks += 1
            if find_m_element(f, s, u) is None:
                rgd2.record("RGD2", (s, repr(u)))
    report.axioms["RGD2"] = rgd2

    rgd3 = AxiomReport(name="RGD3", exhaustive=True)
    upper = f.unipotent(PLUS)
    for s in range(f.coxeter.rank):
        rgd3.checks += 1
        if f.subgroup(-f.coxeter.simple_root(s)) <= upper:
            rgd3.record("RGD3", (s,))
    report.axioms["RGD3"] = rgd3

    rgd4 = AxiomReport(name="RGD4", exhaustive=True)
    torus = normalizing_subgroup(f)
    generated = f.generated_by(roots)
    products = {h * g for h in torus for g in generated}
    rgd4.checks += 1
    if products != set(ambient):
        rgd4.record("RGD4", (len(torus), len(generated), len(ambient)))
    report.axioms["RGD4"] = rgd4

    logger.info(f"{f.name}: RGD axioms {'pass' if report.passed else 'fail'} (|G| = {len(ambient)})")
    return report


def find_m_element(f: RootSubgroupFamily, s: int, u: MatrixGroupElement) -> Optional[MatrixGroupElement]:
    """m(u) = u' u u'' with u', u'' in U_{-alpha_s} conjugating every U_beta onto U_{s beta}"""
    alpha = f.coxeter.simple_root(s)
    opposite = sorted(f.subgroup(-alpha))
    for left in opposite:
        for right in opposite:
            m = left * u * right
            if all(_conjugates_onto(m, f.subgroup(beta), f.subgroup(alpha.reflect(beta))) for beta in f.roots):
                return m
    return None


def normalizing_subgroup(f: RootSubgroupFamily) -> FrozenSet[MatrixGroupElement]:
    """H = elements normalizing every root subgroup"""
    checks = [(f.subgroup(r), [g for g in f.subgroup(r) if not g.is_identity()]) for r in f.roots]
    found = []
    for h in f.ambient_group():
        inverse = h.inverse()
        if all(h * g * inverse in group for group, gens in checks for g in gens):
            found.append(h)
    return frozenset(found)


def commutator_projection(f: RootSubgroupFamily, i: int, k: int) -> FrozenSet[MatrixGroupElement]:
    """{[a_i, a_j]_k} for j = i + n - 1, read off the unique normal form a_{i+1} ... a_{j-1}"""
    n = f.gonality
    if not i + 1 <= k <= i + n - 2:
        raise DomainError(f"Need {i + 1} <= k <= {i + n - 2}, got k = {k}")
    circle = f.cyclic_roots()
    at = lambda index: circle[(index - 1) % (2 * n)]
    j = i + n - 1
    middle = [f.subgroup(at(l)) for l in range(i + 1, j)]

    factorizations: Dict[MatrixGroupElement, Tuple[MatrixGroupElement, ...]] = {}
    for factors in product(*[sorted(group) for group in middle]):
        value = MatrixGroupElement.identity(f.dimension, f.q)
        for a in factors:
            value = value * a
        if value in factorizations:
            raise StructuralError(f"{f.name}: normal form over U_{i + 1}..U_{j - 1} is not unique for {value!r}")
        factorizations[value] = factors

    collected = set()
    for a in f.subgroup(at(i)):
        for b in f.subgroup(at(j)):
            c = commutator(a, b)
            factors = factorizations.get(c)
            if factors is None:
                raise StructuralError(f"{f.name}: [{a!r}, {b!r}] has no normal form over U_{i + 1}..U_{j - 1}")
            collected.add(factors[k - i - 1])
    result = frozenset(collected)
    if result != f.subgroup(at(k)):
        raise StructuralError(f"{f.name}: [U_{i}, U_{j}]_{k} differs from U_{k}")
    if mulclose(result) != result:
        raise StructuralError(f"{f.name}: [U_{i}, U_{j}]_{k} is not closed")
    return result


@dataclass
class WcReport:
    family: str
    generator: int
    side: int
    full_order: int
    restricted_order: int
    degenerate: bool
    wall_connected: Optional[bool] = None

    @property
    def equal(self) -> bool:
        return self.full_order == self.restricted_order

    @property
    def consistent(self) -> Optional[bool]:
        return None if self.wall_connected is None else self.wall_connected == self.equal


def _finite_with(beta: Root, alpha: Root) -> bool:
    if beta == alpha or beta == -alpha:
        return True
    return reflection_product_order(beta, alpha) != INFINITY


def check_wc_generation(f: RootSubgroupFamily, s: int, side: int) -> WcReport:
    """U_side against the subgroup generated by U_beta with o(r_beta s) finite"""
    alpha = f.coxeter.simple_root(s)
    roots = f.roots_of_sign(side)
    finite = [beta for beta in roots if _finite_with(beta, alpha)]
    report = WcReport(
        family=f.name, generator=s, side=side,
        full_order=len(f.unipotent(side)),
        restricted_order=len(f.generated_by(finite)),
        degenerate=len(finite) == len(roots),
    )
    if f.coxeter.is_finite() and not (report.degenerate and report.equal):
        raise StructuralError(f"{f.name}: spherical type but (wc) is not forced for s = {s}")
    return report


def standard_chamber(b, side: int) -> int:
    """Id of the flag fixed by the upper (plus) or lower (minus) triangular matrices"""
    n = b.n
    identity = np.eye(n, dtype=np.int64)
    keys = []
    for dim in range(1, b.rank + 1):
        rows = identity[:dim] if side == PLUS else identity[n - dim:]
        keys.append(subspace_key(rref(rows, b.q)))
    return b.flag_index[tuple(keys)]


def wc_consistency(f: RootSubgroupFamily, s: int, side: int, t: Optional[TwinBuilding] = None) -> WcReport:
    """check_wc_generation with the connectivity of Gamma_s(c_side) recorded alongside"""
    report = check_wc_generation(f, s, side)
    if t is None:
        t = self_twin(get_zoo_building(f.building_name))
    c = TwinChamber(side, standard_chamber(t.minus, side))
    report.wall_connected = wall_graph(t, c, s).connected
    if not report.consistent:
        logger.warning(f"{f.name}: (wc) and wall-connectedness disagree for s = {s}, side {side}")
    return report


@dataclass
class TransitivityReport:
    family: str
    side: int
    group_order: int
    opposite_count: int
    orbit_size: int

    @property
    def simply_transitive(self) -> bool:
        return self.group_order == self.opposite_count == self.orbit_size


def simply_transitive_check(f: RootSubgroupFamily, t: TwinBuilding, side: int) -> TransitivityReport:
    """U_side fixes c_side and permutes the chambers opposite it freely and transitively"""
    b = t.minus
    if not hasattr(b, "act") or b.n != f.dimension or b.q != f.q:
        raise DomainError(f"{b.name} carries no matrix action matching {f.name}")
    c = TwinChamber(side, standard_chamber(b, side))
    opposite = t.opposite_ids(c)
    inside = np.zeros(b.num_chambers, dtype=bool)
    inside[opposite] = True
    group = f.unipotent(side)
    start = int(opposite[0])
    orbit = set()
    for u in sorted(group):
        perm = b.act(u.entries)
        if perm[c.id] != c.id:
            raise StructuralError(f"{u!r} moves the chamber {c}")
        if not inside[perm[opposite]].all():
            raise StructuralError(f"{u!r} does not preserve the chambers opposite {c}")
        orbit.add(int(perm[start]))
    report = TransitivityReport(family=f.name, side=side, group_order=len(group),
                                opposite_count=len(opposite), orbit_size=len(orbit))
    logger.info(f"{f.name}: |U| = {report.group_order}, |c^op| = {report.opposite_count}, orbit {report.orbit_size}")
    return report
