"""
Self-twins of finite spherical buildings.

The minus half is the building itself. The plus half is the same chamber set
with generator labels permuted by s -> r_S s r_S, and the codistance is
delta*(x+, y-) = r_S delta(x, y), delta*(x-, y+) = delta(x, y) r_S, where delta
is the distance of the underlying building. The twin axioms are swept when the
twin is built; a failure raises instead of switching conventions.
"""
import logging
import math
import random
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from building import AxiomReport, Building, ResidueRef
from coxeter import WeylElement
from errors import ConstructionError, DomainError, StructuralError
from settings import get_settings

logger = logging.getLogger("twin_building")

PLUS = 1
MINUS = -1


class TwinChamber(NamedTuple):
    sign: int
    id: int

    def __repr__(self) -> str:
        return f"{'+' if self.sign == PLUS else '-'}{self.id}"


def sign_label(sign: int) -> str:
    return "+" if sign == PLUS else "-"


class RelabeledBuilding(Building):
    """The chambers of base with s-panels taken from the permutation[s]-panels of base"""

    def __init__(self, base: Building, permutation: Sequence[int], name: Optional[str] = None):
        self.base = base
        self.permutation = tuple(permutation)
        assignment = [
            [base.panel_id(self.permutation[s], x) for s in range(base.rank)]
            for x in base.chambers()
        ]
        super().__init__(base.coxeter, assignment, name=name or f"{base.name}+", thick=base.is_thick())
        self.chamber_transitive = base.chamber_transitive


class TwinBuilding:
    """Two halves plus the codistance between them"""

    def __init__(self, plus: Building, minus: Building, name: Optional[str] = None):
        if plus.num_chambers != minus.num_chambers or plus.coxeter != minus.coxeter:
            raise StructuralError("Twin halves must share chamber count and Coxeter matrix")
        self.plus = plus
        self.minus = minus
        self.coxeter = minus.coxeter
        self.rank = minus.rank
        self.table = minus.table
        self.longest = self.table.longest
        self.name = name or minus.name
        self.chamber_transitive = minus.chamber_transitive
        self._caches: Dict[str, object] = {}

    def half(self, sign: int) -> Building:
        if sign == PLUS:
            return self.plus
        if sign == MINUS:
            return self.minus
        raise DomainError(f"Sign must be +1 or -1, got {sign}")

    def sign_of(self, building: Building) -> int:
        if building is self.plus:
            return PLUS
        if building is self.minus:
            return MINUS
        raise DomainError(f"{building.name} is not a half of {self.name}")

    def chambers(self, sign: int) -> List[TwinChamber]:
        return [TwinChamber(sign, x) for x in self.half(sign).chambers()]

    # Codistance

    def codistance_row(self, x: TwinChamber) -> np.ndarray:
        """Element indices of delta*(x, y) for every y in the opposite half"""
        row = self.minus.distance_row(x.id)
        if x.sign == PLUS:
            return self.table.mult[self.longest, row]
        return self.table.mult[row, self.longest]

    def codistance_index(self, x: TwinChamber, y: TwinChamber) -> int:
        if x.sign == y.sign:
            raise DomainError(f"Codistance needs chambers of opposite signs, got {x} and {y}")
        return int(self.codistance_row(x)[y.id])

    def codistance(self, x: TwinChamber, y: TwinChamber) -> WeylElement:
        return self.table.element(self.codistance_index(x, y))

    def ell_star(self, x: TwinChamber, y: TwinChamber) -> int:
        return int(self.table.lengths[self.codistance_index(x, y)])

    def delta_index(self, x: TwinChamber, y: TwinChamber) -> int:
        """delta within a half, delta* across"""
        if x.sign == y.sign:
            return self.half(x.sign).delta_index(x.id, y.id)
        return self.codistance_index(x, y)

    def opposite_ids(self, x: TwinChamber) -> np.ndarray:
        """Ids of x^op in the opposite half"""
        return np.flatnonzero(self.codistance_row(x) == 0)

    def is_opposite(self, x: TwinChamber, y: TwinChamber) -> bool:
        return x.sign != y.sign and self.codistance_index(x, y) == 0

    # Projections

    def coprojection(self, x: TwinChamber, R: ResidueRef, verify: bool = True) -> int:
        """The gate of x in a residue R of the opposite half, maximizing codistance length"""
        if self.sign_of(R.building) == x.sign:
            raise DomainError(f"Coprojection of {x} needs a residue of the opposite half")
        members = R.members
        row = self.codistance_row(x)
        lengths = self.table.lengths[row[members]]
        best = lengths.max()
        if (lengths == best).sum() != 1:
            raise StructuralError(f"Coprojection of {x} onto {R} is not unique")
        z = int(members[int(np.argmax(lengths))])
        if verify:
            composed = self.table.mult[row[z], R.building.distance_row(z)[members]]
            if not np.array_equal(composed, row[members]):
                raise StructuralError(f"Codistance gate property fails for {x} onto {R}")
        return z

    def projection(self, x: TwinChamber, R: ResidueRef, verify: bool = False) -> int:
        """Projection within a half, coprojection across"""
        if self.sign_of(R.building) == x.sign:
            return R.building.projection(x.id, R, verify=verify)
        return self.coprojection(x, R, verify=verify)

    def project_set(self, sign: int, chambers, R: ResidueRef) -> Tuple[int, ...]:
        return tuple(sorted({self.projection(TwinChamber(sign, int(x)), R) for x in chambers}))

    def projection_map(self, source: ResidueRef, target: ResidueRef) -> Dict[int, int]:
        sign = self.sign_of(source.building)
        return {int(x): self.projection(TwinChamber(sign, int(x)), target) for x in source.members}

    def opposite_residues(self, R: ResidueRef, T: ResidueRef) -> bool:
        """Same type, opposite halves, and some pair of opposite chambers"""
        sr, st = self.sign_of(R.building), self.sign_of(T.building)
        if sr == st or R.type != T.type:
            return False
        row = self.codistance_row(TwinChamber(sr, R.representative))
        # an R-chamber opposite some T-chamber exists iff the gate of rep in T sits at r_J
        z = self.coprojection(TwinChamber(sr, R.representative), T, verify=False)
        return int(row[z]) == self.table.longest_in(R.type)


def _tw_checks_from(t: TwinBuilding, x: TwinChamber, report: AxiomReport,
                    ys: Optional[np.ndarray] = None) -> None:
    table = t.table
    other = t.half(-x.sign)
    row = t.codistance_row(x)
    ys = np.arange(other.num_chambers) if ys is None else ys

    for y in ys.tolist():
        back = t.codistance_index(TwinChamber(-x.sign, y), x)
        if back != table.inverse[row[y]]:
            report.record("Tw1", (x, y))
    report.checks += len(ys)
    report.triples += len(ys) * t.rank

    for s in range(t.rank):
        zs = other._neighbors[s][ys]
        w = row[ys]
        ws = table.right_gen[w, s]
        valid = (zs >= 0) & (zs != ys[:, None])
        d = np.where(valid, row[np.where(zs >= 0, zs, 0)], -1)
        spread = valid & (d != w[:, None]) & (d != ws[:, None])
        if spread.any():
            i, j = np.argwhere(spread)[0]
            report.record("Tw-adjacent", (x, int(ys[i]), int(zs[i, j]), s))
        forced = (table.lengths[ws] < table.lengths[w])[:, None]
        tw2 = valid & forced & (d != ws[:, None])
        if tw2.any():
            i, j = np.argwhere(tw2)[0]
            report.record("Tw2", (x, int(ys[i]), int(zs[i, j]), s))
        tw3 = ~((d == ws[:, None]) & valid).any(axis=1)
        if tw3.any():
            report.record("Tw3", (x, int(ys[np.flatnonzero(tw3)[0]]), s))
        report.checks += int(valid.sum()) + len(ys)


def verify_twin_axioms(t: TwinBuilding, samples: Optional[int] = None, seed: Optional[int] = None,
                       sources: Optional[int] = None) -> AxiomReport:
    """Tw1-Tw3 over every cross-sign triple, or sampled from a few sources per sign"""
    settings = get_settings()
    report = AxiomReport(name=f"{t.name} twin")
    if samples is None:
        report.exhaustive = True
        for sign in (PLUS, MINUS):
            for x in t.half(sign).chambers():
                _tw_checks_from(t, TwinChamber(sign, x), report)
    else:
        rng = random.Random(settings.sample_seed if seed is None else seed)
        n = t.minus.num_chambers
        count = min(sources or settings.axiom_sample_sources, n)
        per_source = max(1, math.ceil(samples / (2 * count * t.rank)))
        for sign in (PLUS, MINUS):
            for x in rng.sample(range(n), count):
                ys = np.array([rng.randrange(n) for _ in range(per_source)], dtype=np.int64)
                _tw_checks_from(t, TwinChamber(sign, x), report, ys)
    logger.info(f"{t.name}: twin sweep made {report.checks} checks, {len(report.violations)} violations")
    return report


def self_twin(b: Building, samples: Optional[int] = None, seed: Optional[int] = None) -> TwinBuilding:
    """Twin a thick spherical building with itself, checking Tw1-Tw3 on the way"""
    if not b.coxeter.is_finite():
        raise DomainError(f"{b.name} is not spherical")
    if not b.is_thick():
        raise DomainError(f"{b.name} is not thick")
    table = b.table
    permutation = table.generator_permutation(table.longest)
    twin = TwinBuilding(RelabeledBuilding(b, permutation), b, name=b.name)

    settings = get_settings()
    if samples is None and b.num_chambers > settings.full_table_limit:
        samples = settings.axiom_samples
    report = verify_twin_axioms(twin, samples=samples, seed=seed)
    if not report.passed:
        axiom, witness = report.violations[0]
        raise ConstructionError(axiom, witness)
    logger.info(f"Twinned {b.name}: generator relabeling {list(permutation)}, {report.checks} checks")
    return twin


def cross_parallel(t: TwinBuilding, P: ResidueRef, Q: ResidueRef) -> bool:
    """Panels of opposite signs are parallel iff proj_P Q has at least two chambers"""
    sp, sq = t.sign_of(P.building), t.sign_of(Q.building)
    if sp == sq:
        raise DomainError("cross_parallel needs panels of opposite signs")
    forward = t.projection_map(Q, P)
    if len(set(forward.values())) < 2:
        return False
    backward = t.projection_map(P, Q)
    bijective = sorted(forward.values()) == sorted(int(p) for p in P.members)
    inverse = all(backward[forward[q]] == q for q in forward) and all(forward[backward[p]] == p for p in backward)
    if not (bijective and inverse):
        raise StructuralError(f"Projections between {P} and {Q} are not inverse bijections")
    return True


def cross_panel_distance(t: TwinBuilding, P: ResidueRef, Q: ResidueRef) -> WeylElement:
    """delta(P, Q) = delta*(x, proj_Q x) for cross-sign parallel panels, with the conjugation identity checked"""
    if not cross_parallel(t, P, Q):
        raise DomainError(f"{P} and {Q} are not parallel")
    sign = t.sign_of(P.building)
    values = {t.codistance_index(TwinChamber(sign, int(x)), TwinChamber(-sign, t.coprojection(TwinChamber(sign, int(x)), Q, verify=False)))
              for x in P.members}
    if len(values) != 1:
        raise StructuralError(f"delta({P}, {Q}) depends on the base chamber: {sorted(values)}")
    w = values.pop()
    table = t.table
    s = table.generator_indices[P.generator]
    u = table.generator_indices[Q.generator]
    if table.mult[table.mult[table.inverse[w], s], w] != u:
        raise StructuralError(f"Conjugation identity fails for {P}, {Q}")
    if table.lengths[table.mult[s, w]] != table.lengths[w] - 1:
        raise StructuralError(f"Length drop l(sw) = l(w) - 1 fails for {P}, {Q}")
    return table.element(w)


@dataclass(frozen=True)
class TwinApartment:
    x: TwinChamber
    y: TwinChamber
    plus: Tuple[int, ...]
    minus: Tuple[int, ...]

    def half(self, sign: int) -> Tuple[int, ...]:
        return self.plus if sign == PLUS else self.minus

    def __contains__(self, c: TwinChamber) -> bool:
        return c.id in self.half(c.sign)

    def __len__(self) -> int:
        return len(self.plus) + len(self.minus)


def twin_apartment(t: TwinBuilding, x: TwinChamber, y: TwinChamber) -> TwinApartment:
    """A(x, y) = {z : delta(x, z) = delta(y, z)} for opposite x, y"""
    if not t.is_opposite(x, y):
        raise DomainError(f"{x} and {y} are not opposite")
    same_x = np.flatnonzero(t.half(x.sign).distance_row(x.id) == t.codistance_row(y))
    same_y = np.flatnonzero(t.codistance_row(x) == t.half(y.sign).distance_row(y.id))
    halves = {x.sign: tuple(same_x.tolist()), y.sign: tuple(same_y.tolist())}
    return TwinApartment(x=x, y=y, plus=halves[PLUS], minus=halves[MINUS])


def check_twin_apartment(t: TwinBuilding, A: TwinApartment) -> AxiomReport:
    """Every panel meeting A meets it in {proj_P x, proj_P y}, two distinct chambers"""
    report = AxiomReport(name=f"apartment {A.x},{A.y}")
    for sign in (PLUS, MINUS):
        half = t.half(sign)
        inside = np.zeros(half.num_chambers, dtype=bool)
        inside[list(A.half(sign))] = True
        for p in range(half.num_panels):
            members = half.panel_members(p)
            meet = members[inside[members]]
            if not meet.size:
                continue
            report.checks += 1
            P = half.panel_ref(p)
            expected = {t.projection(A.x, P), t.projection(A.y, P)}
            if len(meet) != 2 or len(expected) != 2 or set(meet.tolist()) != expected:
                report.record("apartment-panel", (sign_label(sign), p, tuple(meet.tolist())))
    return report


def same_wall(t: TwinBuilding, A: TwinApartment, P: ResidueRef, Q: ResidueRef) -> bool:
    """Whether the reflection of A swapping the chambers of P swaps those of Q too"""
    base = TwinChamber(PLUS, A.plus[0])
    table = t.table

    def coordinates(R: ResidueRef) -> List[int]:
        sign = t.sign_of(R.building)
        chambers = [int(z) for z in R.members if int(z) in A.half(sign)]
        if len(chambers) != 2:
            raise DomainError(f"{R} does not meet the apartment in two chambers")
        return [t.delta_index(base, TwinChamber(sign, z)) for z in chambers]

    u1, u2 = coordinates(P)
    v1, v2 = coordinates(Q)
    reflection = table.mult[u2, table.inverse[u1]]
    return int(table.mult[reflection, v1]) == v2 and int(table.mult[reflection, v2]) == v1


@dataclass
class OppositionGraph:
    center: TwinChamber
    k: int
    vertices: Tuple[int, ...]
    graph: nx.Graph
    components: List[List[int]] = field(default_factory=list)

    @property
    def connected(self) -> bool:
        return len(self.components) <= 1

    def to_dict(self) -> Dict[str, object]:
        return {
            "center": repr(self.center),
            "k": self.k,
            "vertices": len(self.vertices),
            "components": self.components,
        }


def opposition_graph(t: TwinBuilding, c: TwinChamber, k: int) -> OppositionGraph:
    """c^op(k) in the opposite half with the chamber adjacency restricted to it"""
    top = int(t.table.lengths[t.longest])
    if not 0 <= k <= top:
        raise DomainError(f"k must lie in [0, {top}], got {k}")
    other = t.half(-c.sign)
    lengths = t.table.lengths[t.codistance_row(c)]
    vertices = np.flatnonzero(lengths <= k)
    inside = np.zeros(other.num_chambers, dtype=bool)
    inside[vertices] = True

    graph = nx.Graph(name=f"op({c}, {k})")
    graph.add_nodes_from(vertices.tolist())
    for s in range(t.rank):
        neighbours = other._neighbors[s][vertices]
        keep = (neighbours > vertices[:, None]) & inside[np.where(neighbours >= 0, neighbours, 0)]
        rows, cols = np.nonzero(keep)
        graph.add_edges_from(
            (int(vertices[i]), int(neighbours[i, j]), {"color": s}) for i, j in zip(rows, cols)
        )
    components = sorted((sorted(part) for part in nx.connected_components(graph)), key=lambda part: part[0])
    return OppositionGraph(center=c, k=k, vertices=tuple(vertices.tolist()), graph=graph, components=components)


def spherical_opposition_set(b: Building, c: int, k: int) -> np.ndarray:
    """{d : l(c, d) >= l(r_S) - k} inside one spherical building"""
    top = int(b.table.lengths[b.table.longest])
    return np.flatnonzero(b.length_row(c) >= top - k)


def opposition_sets_coincide(t: TwinBuilding, c: TwinChamber, k: int) -> bool:
    twin_side = opposition_graph(t, c, k).vertices
    spherical = spherical_opposition_set(t.half(c.sign), c.id, k)
    return tuple(spherical.tolist()) == twin_side


@dataclass
class CoKReport:
    k: int
    transversal: bool
    results: List[Tuple[TwinChamber, int, int]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(count <= 1 for _, _, count in self.results)

    def failures(self) -> List[TwinChamber]:
        return [c for c, _, count in self.results if count > 1]


def condition_co_k(t: TwinBuilding, k: int, transversal: Optional[bool] = None) -> CoKReport:
    """Connectivity of c^op(k) for every center, or one per sign when the group is chamber-transitive"""
    if transversal is None:
        transversal = t.chamber_transitive
    report = CoKReport(k=k, transversal=transversal)
    for sign in (PLUS, MINUS):
        centers = [0] if transversal else list(t.half(sign).chambers())
        for c in centers:
            graph = opposition_graph(t, TwinChamber(sign, c), k)
            report.results.append((TwinChamber(sign, c), len(graph.vertices), len(graph.components)))
    logger.info(f"{t.name}: co_{k} {'holds' if report.passed else 'fails'} over {len(report.results)} centers")
    return report


def opposite_sets_adjacent(t: TwinBuilding, x: TwinChamber, y: TwinChamber, s: int) -> bool:
    """Every z in x^op has a chamber of P_s(z) in y^op"""
    if x.sign != y.sign:
        raise DomainError("Both chambers must lie in the same half")
    other = t.half(-x.sign)
    target = np.zeros(other.num_chambers, dtype=bool)
    target[t.opposite_ids(y)] = True
    neighbours = other._neighbors[s][t.opposite_ids(x)]
    hits = (neighbours >= 0) & target[np.where(neighbours >= 0, neighbours, 0)]
    return bool(hits.any(axis=1).all())


def check_adjacency_characterization(t: TwinBuilding, sign: int = PLUS,
                                     pairs: Optional[Sequence[Tuple[int, int]]] = None) -> AxiomReport:
    """delta(x, y) in <s> iff the opposite sets of x and y are s-adjacent"""
    half = t.half(sign)
    table = t.table
    report = AxiomReport(name=f"{t.name} adjacency")
    if pairs is None:
        report.exhaustive = True
        pairs = [(x, y) for x in half.chambers() for y in half.chambers()]
    for x, y in pairs:
        w = half.delta_index(x, y)
        for s in range(t.rank):
            expected = bool(table.in_parabolic(w, (s,)))
            if opposite_sets_adjacent(t, TwinChamber(sign, x), TwinChamber(sign, y), s) != expected:
                report.record("adjacency", (x, y, s))
            report.checks += 1
    return report
