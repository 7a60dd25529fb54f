"""
W-metric chamber systems.

A Building stores, for every generator s, the partition of its chambers into
s-panels. The Weyl distance is read off minimal galleries: a breadth-first
layer sweep from a source chamber assigns delta(x, y) = delta(x, z) * s the
first time y is reached from z across an s-panel, generators taken in
ascending order. Rows delta(x, .) are kept in a bounded LRU, or all of them
when the building is small.
"""
import logging
import math
import random
from collections import OrderedDict
from dataclasses import dataclass
from itertools import combinations
from typing import Dict, FrozenSet, Hashable, Iterable, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from coxeter import CoxeterMatrix, WeylElement, WeylGroupTable
from errors import DomainError, FixtureValidationError, StructuralError, UnsupportedInstanceError
from settings import get_settings

logger = logging.getLogger("building")


@dataclass(frozen=True, eq=False)
class ResidueRef:
    """Handle on the J-residue with canonical (smallest) representative"""
    building: "Building"
    type: FrozenSet[int]
    representative: int

    @property
    def members(self) -> np.ndarray:
        return self.building.residue_members(self)

    @property
    def rank(self) -> int:
        return len(self.type)

    @property
    def generator(self) -> int:
        """The type of a panel"""
        if len(self.type) != 1:
            raise DomainError(f"Residue of type {sorted(self.type)} is not a panel")
        return next(iter(self.type))

    def contains(self, y: int) -> bool:
        return bool(self.building.in_parabolic(self.building.delta_index(self.representative, y), self.type))

    def __len__(self) -> int:
        return len(self.members)

    def __eq__(self, other) -> bool:
        return (isinstance(other, ResidueRef) and self.building is other.building
                and self.type == other.type and self.representative == other.representative)

    def __hash__(self) -> int:
        return hash((id(self.building), self.type, self.representative))

    def __repr__(self) -> str:
        kind = "Panel" if len(self.type) == 1 else "Residue"
        return f"{kind}(type={sorted(self.type)}, rep={self.representative})"


@dataclass
class AxiomReport:
    """Counts and witnesses from an axiom sweep"""
    name: str
    checks: int = 0
    exhaustive: bool = False
    violations: List[Tuple[str, Tuple]] = None
    triples: int = 0

    def __post_init__(self):
        if self.violations is None:
            self.violations = []

    @property
    def passed(self) -> bool:
        return not self.violations

    def record(self, axiom: str, witness: Tuple) -> None:
        if len(self.violations) < 20:
            self.violations.append((axiom, witness))


class Building:
    """Finite building given by its panel partitions"""

    def __init__(self, coxeter: CoxeterMatrix, panel_assignment: Sequence[Sequence[Hashable]],
                 name: Optional[str] = None, thick: Optional[bool] = None):
        self.coxeter = coxeter
        self.rank = coxeter.rank
        self.name = name or repr(coxeter)
        self.partial = False
        self.chamber_transitive = False
        self.num_chambers = len(panel_assignment)
        if self.num_chambers == 0:
            raise StructuralError("A building needs at least one chamber")

        self._build_panels(panel_assignment)
        self._labels: Dict[int, np.ndarray] = {}
        self._members: Dict[Tuple[int, int], np.ndarray] = {}
        self._init_distance_cache()

        reached = self._flood(0, range(self.rank))
        if len(reached) != self.num_chambers:
            raise StructuralError(f"{self.name}: chamber system is disconnected")

        if thick is not None and thick != self.is_thick():
            raise StructuralError(f"{self.name}: declared thick={thick} but panel sizes disagree")
        logger.info(f"Built {self.name}: {self.num_chambers} chambers, {self.num_panels} panels")

    def _build_panels(self, panel_assignment) -> None:
        n, rank = self.num_chambers, self.rank
        local = np.empty((rank, n), dtype=np.int64)
        for s in range(rank):
            ids: Dict[Hashable, int] = {}
            for x, labels in enumerate(panel_assignment):
                if len(labels) != rank:
                    raise StructuralError(f"Chamber {x} has {len(labels)} panel labels, expected {rank}")
                local[s, x] = ids.setdefault(labels[s], len(ids))
        self._panel_local = local
        self._panel_offset = []
        members: List[np.ndarray] = []
        types: List[int] = []
        self._neighbors: List[np.ndarray] = []
        for s in range(rank):
            self._panel_offset.append(len(members))
            count = int(local[s].max()) + 1
            order = np.argsort(local[s], kind="stable")
            bounds = np.searchsorted(local[s][order], np.arange(count + 1))
            groups = [order[bounds[i]:bounds[i + 1]] for i in range(count)]
            width = max(len(g) for g in groups)
            table = np.full((count, width), -1, dtype=np.int64)
            for i, group in enumerate(groups):
                table[i, :len(group)] = group
                members.append(group)
                types.append(s)
            self._neighbors.append(table[local[s]])
        self._panel_members = members
        self._panel_type = np.array(types, dtype=np.int64)
        self.num_panels = len(members)

    def _init_distance_cache(self) -> None:
        settings = get_settings()
        self.table: Optional[WeylGroupTable] = self.coxeter.weyl_table() if self.coxeter.is_finite() else None
        self._rows: "OrderedDict[int, np.ndarray]" = OrderedDict()
        self._keep_all_rows = self.num_chambers <= settings.full_table_limit
        self._row_cache_size = settings.delta_cache_size

    # Panels and residues

    def chambers(self) -> range:
        return range(self.num_chambers)

    def panel_id(self, s: int, x: int) -> int:
        return self._panel_offset[s] + int(self._panel_local[s, x])

    def panel_type(self, p: int) -> int:
        return int(self._panel_type[p])

    def panel_members(self, p: int) -> np.ndarray:
        return self._panel_members[p]

    def panel(self, s: int, x: int) -> ResidueRef:
        p = self.panel_id(s, x)
        return ResidueRef(self, frozenset((s,)), int(self._panel_members[p][0]))

    def panel_ref(self, p: int) -> ResidueRef:
        return ResidueRef(self, frozenset((self.panel_type(p),)), int(self._panel_members[p][0]))

    def panel_of(self, R: ResidueRef) -> int:
        return self.panel_id(R.generator, R.representative)

    def panel_sizes(self) -> List[int]:
        return sorted({len(m) for m in self._panel_members})

    def is_thick(self) -> bool:
        return all(len(m) >= 3 for m in self._panel_members)

    def neighbors(self, s: int, x: int) -> np.ndarray:
        """Members of P_s(x), x included"""
        row = self._neighbors[s][x]
        return row[row >= 0]

    def _flood(self, x: int, generators: Iterable[int]) -> np.ndarray:
        generators = list(generators)
        visited = np.zeros(self.num_chambers, dtype=bool)
        visited[x] = True
        frontier = np.array([x], dtype=np.int64)
        while frontier.size:
            found = []
            for s in generators:
                candidates = self._neighbors[s][frontier].ravel()
                candidates = candidates[candidates >= 0]
                candidates = np.unique(candidates[~visited[candidates]])
                visited[candidates] = True
                found.append(candidates)
            frontier = np.concatenate(found) if found else np.empty(0, dtype=np.int64)
        return np.flatnonzero(visited)

    def _residue_labels(self, subset: FrozenSet[int]) -> np.ndarray:
        mask = sum(1 << s for s in subset)
        labels = self._labels.get(mask)
        if labels is None:
            labels = np.full(self.num_chambers, -1, dtype=np.int64)
            for x in range(self.num_chambers):
                if labels[x] < 0:
                    members = self._flood(x, sorted(subset))
                    labels[members] = x
                    self._members[(mask, x)] = members
            self._labels[mask] = labels
        return labels

    def residue(self, x: int, subset: Iterable[int]) -> ResidueRef:
        """R_J(x) as a canonical handle"""
        subset = frozenset(subset)
        if len(subset) == 1:
            return self.panel(next(iter(subset)), x)
        return ResidueRef(self, subset, int(self._residue_labels(subset)[x]))

    def residues(self, subset: Iterable[int]) -> List[ResidueRef]:
        subset = frozenset(subset)
        labels = self._residue_labels(subset)
        return [ResidueRef(self, subset, int(rep)) for rep in np.unique(labels)]

    def residue_members(self, R: ResidueRef) -> np.ndarray:
        if len(R.type) == 1:
            return self._panel_members[self.panel_id(R.generator, R.representative)]
        mask = sum(1 << s for s in R.type)
        self._residue_labels(R.type)
        return self._members[(mask, R.representative)]

    def in_parabolic(self, index, subset: Iterable[int]):
        return self.table.in_parabolic(index, subset)

    # Weyl distance

    def distance_row(self, x: int) -> np.ndarray:
        """Table indices of delta(x, y) for every chamber y"""
        row = self._rows.get(x)
        if row is not None:
            self._rows.move_to_end(x)
            return row
        row = self._compute_row(x)
        self._rows[x] = row
        if not self._keep_all_rows and len(self._rows) > self._row_cache_size:
            self._rows.popitem(last=False)
        return row

    def _compute_row(self, x: int) -> np.ndarray:
        if self.table is None:
            raise UnsupportedInstanceError("distance_row", "W is infinite")
        right = self.table.right_gen
        row = np.full(self.num_chambers, -1, dtype=np.int64)
        row[x] = 0
        frontier = np.array([x], dtype=np.int64)
        while frontier.size:
            found = []
            for s in range(self.rank):
                candidates = self._neighbors[s][frontier]
                values = np.broadcast_to(right[row[frontier], s][:, None], candidates.shape)
                keep = candidates >= 0
                candidates, values = candidates[keep], values[keep]
                fresh = row[candidates] < 0
                candidates, values = candidates[fresh], values[fresh]
                reached, first = np.unique(candidates, return_index=True)
                row[reached] = values[first]
                found.append(reached)
            frontier = np.concatenate(found)
        row.setflags(write=False)
        return row

    def delta_index(self, x: int, y: int) -> int:
        return int(self.distance_row(x)[y])

    def weyl_distance(self, x: int, y: int) -> WeylElement:
        return self.table.element(self.delta_index(x, y))

    def ell(self, x: int, y: int) -> int:
        return int(self.table.lengths[self.delta_index(x, y)])

    def length_row(self, x: int) -> np.ndarray:
        return self.table.lengths[self.distance_row(x)]

    # Projections and parallelism

    def projection(self, x: int, R: ResidueRef, verify: bool = True) -> int:
        """proj_R x, the gate of x in R"""
        members = R.members
        lengths = self.length_row(x)[members]
        best = lengths.min()
        if (lengths == best).sum() != 1:
            raise StructuralError(f"{self.name}: projection of {x} onto {R} is not unique")
        z = int(members[int(np.argmin(lengths))])
        if verify:
            row_x, row_z = self.distance_row(x), self.distance_row(z)
            composed = self.table.mult[row_x[z], row_z[members]]
            if not np.array_equal(composed, row_x[members]):
                raise StructuralError(f"{self.name}: gate property fails for {x} onto {R}")
        return z

    def project_set(self, chambers: Iterable[int], R: ResidueRef) -> Tuple[int, ...]:
        return tuple(sorted({self.projection(int(x), R, verify=False) for x in chambers}))

    def projection_map(self, source: ResidueRef, target: ResidueRef) -> Dict[int, int]:
        return {int(x): self.projection(int(x), target, verify=False) for x in source.members}

    def are_parallel(self, R: ResidueRef, Q: ResidueRef) -> bool:
        """True iff proj_R|Q and proj_Q|R are mutually inverse bijections"""
        if R == Q:
            return True
        forward = self.projection_map(Q, R)
        backward = self.projection_map(R, Q)
        if len(R) != len(Q) or sorted(forward.values()) != sorted(int(r) for r in R.members):
            return False
        return all(backward[forward[q]] == q for q in forward) and all(forward[backward[r]] == r for r in backward)

    def panel_distance(self, P: ResidueRef, Q: ResidueRef) -> WeylElement:
        """delta(P, Q) for parallel panels, with the conjugation identity checked"""
        if not self.are_parallel(P, Q):
            raise DomainError(f"{P} and {Q} are not parallel")
        values = {self.delta_index(int(x), self.projection(int(x), Q, verify=False)) for x in P.members}
        if len(values) != 1:
            raise StructuralError(f"delta({P}, {Q}) depends on the base chamber: {sorted(values)}")
        w = values.pop()
        table = self.table
        s = table.generator_indices[P.generator]
        t = table.generator_indices[Q.generator]
        if table.mult[table.mult[table.inverse[w], s], w] != t:
            raise StructuralError(f"Conjugation identity fails for {P}, {Q}")
        return table.element(w)

    def e_k_neighborhood(self, x: int, k: int) -> FrozenSet[int]:
        """Union of all residues of rank at most k through x"""
        if k < 0 or k > self.rank:
            raise DomainError(f"k must lie in [0, {self.rank}], got {k}")
        chambers = {x}
        for size in range(1, k + 1):
            for subset in combinations(range(self.rank), size):
                chambers.update(int(y) for y in self.residue(x, subset).members)
        return frozenset(chambers)

    # Galleries and exports

    def minimal_gallery(self, x: int, y: int, generator_order: Optional[Sequence[int]] = None) -> List[int]:
        """A minimal gallery from x to y, first generator in generator_order winning ties"""
        order = list(generator_order) if generator_order is not None else list(range(self.rank))
        parent = np.full(self.num_chambers, -1, dtype=np.int64)
        parent[x] = x
        frontier = np.array([x], dtype=np.int64)
        while frontier.size and parent[y] < 0:
            found = []
            for s in order:
                candidates = self._neighbors[s][frontier]
                sources = np.broadcast_to(frontier[:, None], candidates.shape)
                keep = candidates >= 0
                candidates, sources = candidates[keep], sources[keep]
                fresh = parent[candidates] < 0
                candidates, sources = candidates[fresh], sources[fresh]
                reached, first = np.unique(candidates, return_index=True)
                parent[reached] = sources[first]
                found.append(reached)
            frontier = np.concatenate(found)
        path = [y]
        while path[-1] != x:
            path.append(int(parent[path[-1]]))
        return path[::-1]

    def adjacency_type(self, x: int, y: int) -> int:
        for s in range(self.rank):
            if x != y and self._panel_local[s, x] == self._panel_local[s, y]:
                return s
        raise DomainError(f"Chambers {x} and {y} are not adjacent")

    def gallery_word(self, gallery: Sequence[int]) -> Tuple[int, ...]:
        return tuple(self.adjacency_type(a, b) for a, b in zip(gallery, gallery[1:]))

    def chamber_graph(self) -> nx.Graph:
        graph = nx.Graph(name=self.name)
        graph.add_nodes_from(self.chambers())
        for p, members in enumerate(self._panel_members):
            for a, b in combinations(members.tolist(), 2):
                graph.add_edge(a, b, color=self.panel_type(p))
        return graph

    def dump(self) -> str:
        """Chamber-system dump: one line per chamber, id then global panel ids"""
        lines = [f"# {self.name}", f"# rank {self.rank} chambers {self.num_chambers}"]
        for x in self.chambers():
            lines.append(" ".join([str(x)] + [str(self.panel_id(s, x)) for s in range(self.rank)]))
        return "\n".join(lines) + "\n"

    @classmethod
    def load(cls, text: str, coxeter: CoxeterMatrix, name: Optional[str] = None) -> "Building":
        rows = []
        for number, line in enumerate(text.splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            fields = line.split()
            if len(fields) != coxeter.rank + 1 or not all(f.isdigit() for f in fields):
                raise FixtureValidationError("chamber dump", [f"line {number}: expected id and {coxeter.rank} panel ids"])
            rows.append(tuple(int(f) for f in fields))
        ids = [row[0] for row in rows]
        if ids != list(range(len(rows))):
            raise FixtureValidationError("chamber dump", ["chamber ids must be 0..n-1 in order"])
        return cls(coxeter, [row[1:] for row in rows], name=name)


class ThinBall(Building):
    """Ball of radius r around 1 in the Coxeter complex of an infinite W"""

    def __init__(self, coxeter: CoxeterMatrix, radius: int):
        layers = [[coxeter.identity()]]
        seen = {layers[0][0]}
        for _ in range(radius):
            fresh = []
            for w in layers[-1]:
                for s in range(coxeter.rank):
                    if (w.matrix[:, s] >= 0).all():
                        ws = w * coxeter.generator(s)
                        if ws not in seen:
                            seen.add(ws)
                            fresh.append(ws)
            layers.append(fresh)
        self.elements: List[WeylElement] = sorted(
            (w for layer in layers for w in layer), key=lambda w: (w.length(), w.word))
        self.index = {w: i for i, w in enumerate(self.elements)}
        self.radius = radius
        assignment = []
        for i, w in enumerate(self.elements):
            labels = []
            for s in range(coxeter.rank):
                partner = self.index.get(w * coxeter.generator(s))
                labels.append(min(i, partner) if partner is not None else ("boundary", i))
            assignment.append(labels)
        super().__init__(coxeter, assignment, name=f"ball({coxeter.name or coxeter.rank}, {radius})")
        self.partial = True

    def weyl_distance(self, x: int, y: int) -> WeylElement:
        return self.elements[x].inverse() * self.elements[y]

    def ell(self, x: int, y: int) -> int:
        return self.weyl_distance(x, y).length()

    def length_row(self, x: int) -> np.ndarray:
        return np.array([self.ell(x, y) for y in self.chambers()], dtype=np.int64)

    def delta_index(self, x: int, y: int) -> int:
        raise UnsupportedInstanceError("delta_index", "ball of an infinite W has no element table")

    def projection(self, x: int, R: ResidueRef, verify: bool = True) -> int:
        members = R.members
        lengths = np.array([self.ell(x, int(y)) for y in members])
        z = int(members[int(np.argmin(lengths))])
        if verify:
            for y in members:
                if self.weyl_distance(x, z) * self.weyl_distance(z, int(y)) != self.weyl_distance(x, int(y)):
                    raise StructuralError(f"{self.name}: gate property fails for {x} onto {R}")
        return z


def thin_building(coxeter: CoxeterMatrix, radius: Optional[int] = None) -> Building:
    """Coxeter complex of W; a partial ball when W is infinite"""
    if radius is not None and radius < 1:
        raise DomainError(f"Radius must be at least 1, got {radius}")
    if coxeter.is_finite():
        table = coxeter.weyl_table()
        assignment = [
            [min(i, int(table.right_gen[i, s])) for s in range(coxeter.rank)]
            for i in range(table.order)
        ]
        return Building(coxeter, assignment, name=f"thin({coxeter.name or coxeter.rank})", thick=False)
    if radius is None:
        radius = get_settings().thin_ball_radius
    return ThinBall(coxeter, radius)


# Axiom suite

def _bu_checks_from(b: Building, x: int, report: AxiomReport, ys: Optional[np.ndarray] = None) -> None:
    table = b.table
    row = b.distance_row(x)
    ys = np.arange(b.num_chambers) if ys is None else ys

    is_identity = row[ys] == 0
    if not np.array_equal(is_identity, ys == x):
        bad = int(ys[np.flatnonzero(is_identity != (ys == x))[0]])
        report.record("Bu1", (x, bad))
    report.checks += len(ys)
    report.triples += len(ys) * b.rank

    for s in range(b.rank):
        zs = b._neighbors[s][ys]
        w = row[ys]
        ws = table.right_gen[w, s]
        valid = (zs >= 0) & (zs != ys[:, None])
        d = np.where(valid, row[np.where(zs >= 0, zs, 0)], -1)
        allowed = (d == w[:, None]) | (d == ws[:, None])
        forced = (table.lengths[ws] > table.lengths[w])[:, None]
        bu2 = valid & (~allowed | (forced & (d != ws[:, None])))
        if bu2.any():
            i, j = np.argwhere(bu2)[0]
            report.record("Bu2", (x, int(ys[i]), int(zs[i, j]), s))
        bu3 = ~((d == ws[:, None]) & valid).any(axis=1)
        if bu3.any():
            report.record("Bu3", (x, int(ys[np.flatnonzero(bu3)[0]]), s))
        report.checks += int(valid.sum()) + len(ys)


def verify_building_axioms(b: Building, samples: Optional[int] = None, seed: Optional[int] = None,
                           sources: Optional[int] = None) -> AxiomReport:
    """Bu1-Bu3 over every triple, or over sampled triples drawn from a few sources"""
    settings = get_settings()
    report = AxiomReport(name=b.name)
    if samples is None:
        report.exhaustive = True
        for x in b.chambers():
            _bu_checks_from(b, x, report)
    else:
        rng = random.Random(settings.sample_seed if seed is None else seed)
        count = min(sources or settings.axiom_sample_sources, b.num_chambers)
        chosen = rng.sample(range(b.num_chambers), count)
        per_source = max(1, math.ceil(samples / (count * b.rank)))
        for x in chosen:
            ys = np.array([rng.randrange(b.num_chambers) for _ in range(per_source)], dtype=np.int64)
            _bu_checks_from(b, x, report, ys)
    logger.info(f"{b.name}: axiom sweep made {report.checks} checks, {len(report.violations)} violations")
    return report


def check_gallery_independence(b: Building, pairs: Optional[int] = None, seed: Optional[int] = None) -> AxiomReport:
    """Compare delta along minimal galleries found with opposite tie-breaks"""
    settings = get_settings()
    rng = random.Random(settings.sample_seed if seed is None else seed)
    count = settings.gallery_samples if pairs is None else pairs
    table = b.table
    report = AxiomReport(name=f"{b.name} gallery independence")
    reverse = list(range(b.rank))[::-1]
    for _ in range(count):
        x, y = rng.randrange(b.num_chambers), rng.randrange(b.num_chambers)
        gallery = b.minimal_gallery(x, y, reverse)
        w = 0
        for s in b.gallery_word(gallery):
            w = int(table.right_gen[w, s])
        report.checks += 1
        if w != b.delta_index(x, y) or len(gallery) - 1 != table.lengths[w]:
            report.record("gallery", (x, y))
    return report
