"""
Panel graphs, compatible paths and wall graphs.

Two panels of one half are adjacent when they are opposite in a common rank-2
residue. A path (P_0, ..., P_k) is compatible when every step from P_{i-1} to
P_i inside R_i = R(P_{i-1}, P_i) satisfies proj_{R_i} P_0 = P_{i-1}; it is
anchored at an opposite-sign panel P when in addition proj_{R_i} P = P_i.
Every path handed out here is re-verified from scratch before it is returned.
"""
import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from building import AxiomReport, Building, ResidueRef
from errors import DomainError, StructuralError
from settings import get_settings
from twin_building import PLUS, MINUS, TwinBuilding, TwinChamber, sign_label

logger = logging.getLogger("paths_walls")

TypeSequence = Tuple[Tuple[int, ...], ...]


def _members(b: Building, p: int) -> Tuple[int, ...]:
    return tuple(b.panel_members(p).tolist())


def panel_with_members(b: Building, members: Sequence[int]) -> Optional[int]:
    """The panel whose chamber set is exactly members, if any"""
    members = tuple(members)
    for u in range(b.rank):
        p = b.panel_id(u, members[0])
        if _members(b, p) == members:
            return p
    return None


class PanelGraph:
    """Panels of one building, joined when opposite in a rank-2 residue"""

    def __init__(self, building: Building):
        if building.table is None:
            raise DomainError(f"{building.name}: panel graph needs a finite building")
        self.building = building
        self.graph = nx.Graph(name=f"panels({building.name})")
        self.graph.add_nodes_from(range(building.num_panels))
        self._edge_residue: Dict[Tuple[int, int], ResidueRef] = {}
        self._adjacent: Dict[int, List[Tuple[int, ResidueRef]]] = {p: [] for p in range(building.num_panels)}
        self._build()

    def _local_distances(self, R: ResidueRef) -> Tuple[np.ndarray, np.ndarray]:
        """Gallery distances inside R, computed by breadth-first search over its own generators"""
        b = self.building
        members = R.members
        position = {int(x): i for i, x in enumerate(members)}
        generators = sorted(R.type)
        distances = np.full((len(members), len(members)), -1, dtype=np.int64)
        for i, x in enumerate(members.tolist()):
            distances[i, i] = 0
            frontier = [x]
            depth = 0
            while frontier:
                depth += 1
                fresh = []
                for z in frontier:
                    for s in generators:
                        for y in b.neighbors(s, z).tolist():
                            j = position[y]
                            if distances[i, j] < 0:
                                distances[i, j] = depth
                                fresh.append(y)
                frontier = fresh
        return members, distances

    def _build(self) -> None:
        b = self.building
        for s in range(b.rank):
            for t in range(s + 1, b.rank):
                m = int(b.coxeter.m(s, t))
                swap = {s: t, t: s} if m % 2 else {s: s, t: t}
                for R in b.residues((s, t)):
                    members, distances = self._local_distances(R)
                    for i, j in zip(*np.nonzero(distances == m)):
                        if i > j:
                            continue
                        x, y = int(members[i]), int(members[j])
                        for u in (s, t):
                            self._add_edge(b.panel_id(u, x), b.panel_id(swap[u], y), R)
        for p in self._adjacent:
            self._adjacent[p].sort(key=lambda item: (item[0], sorted(item[1].type)))
        logger.info(f"Panel graph of {b.name}: {self.num_vertices} panels, {self.num_edges} edges")

    def _add_edge(self, a: int, c: int, R: ResidueRef) -> None:
        key = (min(a, c), max(a, c))
        known = self._edge_residue.get(key)
        if known is not None:
            if known != R:
                raise StructuralError(f"Panels {a}, {c} are opposite in two rank-2 residues: {known}, {R}")
            return
        self._edge_residue[key] = R
        self._adjacent[a].append((c, R))
        self._adjacent[c].append((a, R))
        self.graph.add_edge(a, c, residue=tuple(sorted(R.type)))

    @property
    def num_vertices(self) -> int:
        return self.graph.number_of_nodes()

    @property
    def num_edges(self) -> int:
        return self.graph.number_of_edges()

    def neighbors(self, p: int) -> List[Tuple[int, ResidueRef]]:
        return self._adjacent[p]

    def edge_residue(self, a: int, c: int) -> ResidueRef:
        try:
            return self._edge_residue[(min(a, c), max(a, c))]
        except KeyError:
            raise DomainError(f"Panels {a} and {c} are not adjacent")

    def are_adjacent(self, a: int, c: int) -> bool:
        return (min(a, c), max(a, c)) in self._edge_residue


def build_panel_graph(b: Building) -> PanelGraph:
    return PanelGraph(b)


def get_panel_graph(t: TwinBuilding, sign: int) -> PanelGraph:
    graphs = t._caches.setdefault("panel_graph", {})
    if sign not in graphs:
        graphs[sign] = build_panel_graph(t.half(sign))
    return graphs[sign]


@dataclass
class CompatiblePath:
    building: Building
    panels: Tuple[int, ...]
    residues: Tuple[ResidueRef, ...] = ()
    anchor: Optional[ResidueRef] = None

    @property
    def length(self) -> int:
        return len(self.panels) - 1

    @property
    def start(self) -> int:
        return self.panels[0]

    @property
    def end(self) -> int:
        return self.panels[-1]

    @property
    def types(self) -> TypeSequence:
        return tuple(tuple(sorted(R.type)) for R in self.residues)

    def reversed(self) -> "CompatiblePath":
        return CompatiblePath(self.building, self.panels[::-1], self.residues[::-1])

    def to_dict(self) -> Dict[str, object]:
        data = {"panels": list(self.panels), "types": [list(j) for j in self.types]}
        if self.anchor is not None:
            data["anchor"] = self.anchor.building.panel_of(self.anchor)
        return data


def _project(b: Building, chambers: Sequence[int], R: ResidueRef, cache: Dict) -> Tuple[int, ...]:
    if R not in cache:
        cache[R] = b.project_set(chambers, R)
    return cache[R]


def _path_from_parents(b: Building, parent: Dict[int, Tuple[int, Optional[ResidueRef]]], end: int,
                       anchor: Optional[ResidueRef] = None) -> CompatiblePath:
    panels, residues = [end], []
    while parent[panels[-1]][1] is not None:
        previous, R = parent[panels[-1]]
        residues.append(R)
        panels.append(previous)
    return CompatiblePath(b, tuple(panels[::-1]), tuple(residues[::-1]), anchor)


def _default_bound(b: Building) -> int:
    bound = get_settings().wall_search_bound
    if bound:
        return bound
    return int(b.table.lengths[b.table.longest]) * b.rank


def find_compatible_path(g: PanelGraph, P: int, Q: int, bound: Optional[int] = None) -> Optional[CompatiblePath]:
    """Shortest compatible path from P to Q, smallest panel ids first; None when P and Q are not parallel"""
    b = g.building
    bound = _default_bound(b) if bound is None else bound
    start = _members(b, P)
    cache: Dict[ResidueRef, Tuple[int, ...]] = {}
    parent: Dict[int, Tuple[int, Optional[ResidueRef]]] = {P: (P, None)}
    queue = deque([(P, 0)])
    while queue:
        X, depth = queue.popleft()
        if X == Q:
            path = _path_from_parents(b, parent, Q)
            report = verify_path_properties(path)
            if not report.passed:
                raise StructuralError(f"Compatible path {path.panels} fails {report.violations[0][0]}")
            return path
        if depth >= bound:
            continue
        members = _members(b, X)
        for Y, R in g.neighbors(X):
            if Y in parent or _project(b, start, R, cache) != members:
                continue
            parent[Y] = (X, R)
            queue.append((Y, depth + 1))
    return None


def _check_compatible(path: CompatiblePath, report: AxiomReport, label: str = "compatible") -> None:
    b = path.building
    start = _members(b, path.start)
    for i, R in enumerate(path.residues, start=1):
        X, Y = path.panels[i - 1], path.panels[i]
        report.checks += 1
        x0 = int(b.panel_members(X)[0])
        s, t = sorted(R.type)
        far = max(b.ell(x0, int(y)) for y in b.panel_members(Y)) == int(b.coxeter.m(s, t))
        opposite = far and b.panel_type(Y) in _opposite_types(b, R, b.panel_type(X))
        in_residue = all(R.contains(int(x)) for x in (x0, b.panel_members(Y)[0]))
        if not (opposite and in_residue) or b.project_set(start, R) != _members(b, X):
            report.record(label, (path.panels, i))


def _opposite_types(b: Building, R: ResidueRef, u: int) -> Tuple[int, ...]:
    s, t = sorted(R.type)
    if int(b.coxeter.m(s, t)) % 2:
        return ({s: t, t: s}[u],)
    return (u,)


def verify_path_properties(path: CompatiblePath) -> AxiomReport:
    """Projection factorization, delta multiplicativity, length additivity and reversal, checked independently"""
    b = path.building
    report = AxiomReport(name=f"path {path.panels}", exhaustive=True)
    _check_compatible(path, report)
    if path.length == 0:
        return report

    refs = [b.panel_ref(p) for p in path.panels]
    first, last = refs[0], refs[-1]
    direct = b.projection_map(first, last)
    total = b.panel_distance(first, last)
    for i, middle in enumerate(refs):
        report.checks += 3
        through = b.projection_map(first, middle)
        onward = b.projection_map(middle, last)
        if any(onward[through[x]] != direct[x] for x in direct):
            report.record("factorization", (path.panels, i))
        head, tail = b.panel_distance(first, middle), b.panel_distance(middle, last)
        if head * tail != total:
            report.record("multiplicativity", (path.panels, i))
        if head.length() + tail.length() != total.length():
            report.record("additivity", (path.panels, i))

    _check_compatible(path.reversed(), report, label="reversal")
    return report


# Anchored paths

def _anchored_setup(t: TwinBuilding, P: ResidueRef, Q0: ResidueRef) -> Tuple[int, int]:
    anchor_sign = t.sign_of(P.building)
    sign = t.sign_of(Q0.building)
    if anchor_sign == sign:
        raise DomainError("The anchor panel must lie in the other half")
    if not t.opposite_residues(P, Q0):
        raise DomainError(f"{Q0} is not opposite {P}")
    return anchor_sign, sign


class _AnchoredSearch:
    """Admissible steps for paths starting at Q0 and anchored at P"""

    def __init__(self, t: TwinBuilding, P: ResidueRef, Q0: ResidueRef):
        self.t = t
        self.P = P
        self.anchor_sign, self.sign = _anchored_setup(t, P, Q0)
        self.half = t.half(self.sign)
        self.graph = get_panel_graph(t, self.sign)
        self.start = self.half.panel_of(Q0)
        self._start_members = _members(self.half, self.start)
        self._own: Dict[ResidueRef, Tuple[int, ...]] = {}
        self._anchor: Dict[ResidueRef, Tuple[int, ...]] = {}

    def step(self, X: int, R: ResidueRef) -> Optional[int]:
        """The unique Y with X -> Y admissible inside R, if any"""
        if _project(self.half, self._start_members, R, self._own) != _members(self.half, X):
            return None
        if R not in self._anchor:
            self._anchor[R] = self.t.project_set(self.anchor_sign, self.P.members, R)
        Y = panel_with_members(self.half, self._anchor[R])
        if Y is None or Y == X or not self.graph.are_adjacent(X, Y) or self.graph.edge_residue(X, Y) != R:
            return None
        return Y

    def residues_at(self, X: int) -> List[ResidueRef]:
        seen: List[ResidueRef] = []
        for _, R in self.graph.neighbors(X):
            if R not in seen:
                seen.append(R)
        return sorted(seen, key=lambda R: sorted(R.type))

    def path(self, parent, end: int) -> CompatiblePath:
        return _path_from_parents(self.half, parent, end, anchor=self.P)


def anchored_reach(t: TwinBuilding, P: ResidueRef, Q0: ResidueRef,
                   bound: Optional[int] = None) -> Dict[int, CompatiblePath]:
    """Every panel reachable from Q0 by a P-anchored path, with a shortest such path"""
    search = _AnchoredSearch(t, P, Q0)
    bound = _default_bound(search.half) if bound is None else bound
    parent = {search.start: (search.start, None)}
    queue = deque([(search.start, 0)])
    while queue:
        X, depth = queue.popleft()
        if depth >= bound:
            continue
        for R in search.residues_at(X):
            Y = search.step(X, R)
            if Y is not None and Y not in parent:
                parent[Y] = (X, R)
                queue.append((Y, depth + 1))
    return {Q: search.path(parent, Q) for Q in parent}


def find_anchored_path(t: TwinBuilding, P: ResidueRef, Q0: ResidueRef, Q: ResidueRef,
                       bound: Optional[int] = None) -> Optional[CompatiblePath]:
    """Shortest P-anchored compatible path from Q0 to Q, verified before it is returned"""
    search = _AnchoredSearch(t, P, Q0)
    target = search.half.panel_of(Q)
    bound = _default_bound(search.half) if bound is None else bound
    parent = {search.start: (search.start, None)}
    queue = deque([(search.start, 0)])
    while queue:
        X, depth = queue.popleft()
        if X == target:
            return _verified(t, search.path(parent, X))
        if depth >= bound:
            continue
        for R in search.residues_at(X):
            Y = search.step(X, R)
            if Y is not None and Y not in parent:
                parent[Y] = (X, R)
                queue.append((Y, depth + 1))
    return None


def find_typed_anchored_path(t: TwinBuilding, P: ResidueRef, Q0: ResidueRef, target: int,
                             types: TypeSequence) -> Optional[CompatiblePath]:
    """The P-anchored path from Q0 following the given rank-2 types, if it ends at target"""
    search = _AnchoredSearch(t, P, Q0)
    half = search.half
    X = search.start
    parent = {X: (X, None)}
    for J in types:
        R = half.residue(int(half.panel_members(X)[0]), J)
        Y = search.step(X, R)
        if Y is None or Y in parent:
            return None
        parent[Y] = (X, R)
        X = Y
    if X != target:
        return None
    return _verified(t, search.path(parent, X))


def _verified(t: TwinBuilding, path: CompatiblePath) -> CompatiblePath:
    report = verify_anchored_path(t, path)
    if not report.passed:
        axiom, witness = report.violations[0]
        raise StructuralError(f"Anchored path {path.panels} fails {axiom} at {witness}")
    return path


def verify_anchored_path(t: TwinBuilding, path: CompatiblePath) -> AxiomReport:
    """Anchor conditions plus the codistance and projection identities along an anchored path"""
    if path.anchor is None:
        raise DomainError("Path carries no anchor panel")
    b = path.building
    P = path.anchor
    anchor_sign, sign = t.sign_of(P.building), t.sign_of(b)
    report = AxiomReport(name=f"anchored path {path.panels}", exhaustive=True)
    _check_compatible(path, report)

    refs = [b.panel_ref(p) for p in path.panels]
    report.checks += 1
    if not t.opposite_residues(P, refs[0]):
        report.record("anchor-opposite", (path.panels[0],))
    for i, R in enumerate(path.residues, start=1):
        report.checks += 1
        if t.project_set(anchor_sign, P.members, R) != _members(b, path.panels[i]):
            report.record("anchor", (path.panels, i))

    onto_start = t.projection_map(P, refs[0])
    back_from_start = t.projection_map(refs[0], P)
    lengths = t.table.lengths
    for i, middle in enumerate(refs):
        w = b.panel_distance(refs[0], middle).length()
        to_middle = t.projection_map(P, middle)
        for x, z in to_middle.items():
            report.checks += 1
            if lengths[t.codistance_index(TwinChamber(anchor_sign, x), TwinChamber(sign, z))] != w + 1:
                report.record("codistance", (path.panels, i, x))
        middle_to_start = b.projection_map(middle, refs[0])
        if any(middle_to_start[to_middle[x]] != onto_start[x] for x in onto_start):
            report.record("factor-onto-start", (path.panels, i))
        start_to_middle = b.projection_map(refs[0], middle)
        middle_to_anchor = t.projection_map(middle, P)
        if any(middle_to_anchor[start_to_middle[y]] != back_from_start[y] for y in back_from_start):
            report.record("factor-onto-anchor", (path.panels, i))
        report.checks += 2
    return report


# Wall graphs

@dataclass
class WallGroup:
    """Vertices sharing one target panel and one type sequence"""
    target: int
    types: TypeSequence
    paths: Dict[int, CompatiblePath] = field(default_factory=dict)


@dataclass
class WallGraph:
    twin: TwinBuilding
    center: TwinChamber
    generator: int
    anchor: ResidueRef
    vertices: Tuple[int, ...]
    graph: nx.Graph
    bound: int
    groups: List[WallGroup] = field(default_factory=list)
    unmatched: List[int] = field(default_factory=list)

    @property
    def connected(self) -> bool:
        return not self.vertices or nx.is_connected(self.graph)

    @property
    def length_exhaustive(self) -> bool:
        # Covers path lengths only; targets other than the mirror panel are not searched
        return self.bound >= int(self.twin.table.lengths[self.twin.longest])

    @property
    def verdict(self) -> str:
        if self.connected:
            return "connected"
        return f"no edge found (bound {self.bound})"

    def certificate(self, a: int, c: int) -> Tuple[int, CompatiblePath, CompatiblePath]:
        for group in self.groups:
            if a in group.paths and c in group.paths:
                return group.target, group.paths[a], group.paths[c]
        raise DomainError(f"No certificate joins {a} and {c}")

    def to_dict(self) -> Dict[str, object]:
        return {
            "center": repr(self.center),
            "generator": self.generator,
            "bound": self.bound,
            "vertices": list(self.vertices),
            "edges": self.graph.number_of_edges(),
            "connected": self.connected,
            "length_exhaustive": self.length_exhaustive,
            "verdict": self.verdict,
            "unmatched": list(self.unmatched),
            "certificates": [
                {
                    "target": group.target,
                    "types": [list(j) for j in group.types],
                    "paths": {str(q): path.to_dict() for q, path in sorted(group.paths.items())},
                }
                for group in self.groups
            ],
        }


def mirror_panel(t: TwinBuilding, P: ResidueRef) -> int:
    """The panel of the other half on the same chamber ids"""
    other = t.half(-t.sign_of(P.building))
    found = panel_with_members(other, tuple(P.members.tolist()))
    if found is None:
        raise StructuralError(f"{P} has no mirror panel")
    return found


def opposite_panels(t: TwinBuilding, c: TwinChamber, s: int) -> Tuple[int, ...]:
    """Panels of the other half opposite P_s(c)"""
    other = t.half(-c.sign)
    return tuple(sorted({other.panel_id(s, int(y)) for y in t.opposite_ids(c)}))


def wall_graph(t: TwinBuilding, c: TwinChamber, s: int, bound: Optional[int] = None) -> WallGraph:
    """Gamma_s(c) with one certificate group per (target, type sequence)"""
    if not 0 <= s < t.rank:
        raise DomainError(f"Generator {s} out of range for rank {t.rank}")
    half = t.half(c.sign)
    other = t.half(-c.sign)
    P = half.panel(s, c.id)
    bound = _default_bound(half) if bound is None else bound
    vertices = opposite_panels(t, c, s)
    target = mirror_panel(t, P)

    graph = nx.Graph(name=f"wall({c}, {s})")
    graph.add_nodes_from(vertices)
    wg = WallGraph(twin=t, center=c, generator=s, anchor=P, vertices=vertices, graph=graph, bound=bound)
    tried = set()

    def try_join(Q: int, index: int) -> bool:
        tried.add((Q, index))
        group = wg.groups[index]
        if Q in group.paths:
            return True
        path = find_typed_anchored_path(t, P, other.panel_ref(Q), group.target, group.types)
        if path is None or path.length > bound:
            return False
        for other_vertex in group.paths:
            graph.add_edge(Q, other_vertex, target=group.target)
        group.paths[Q] = path
        return True

    for Q in vertices:
        joined = False
        for index in range(len(wg.groups)):
            joined = try_join(Q, index) or joined
        if joined:
            continue
        path = find_anchored_path(t, P, other.panel_ref(Q), other.panel_ref(target), bound=bound)
        if path is not None:
            wg.groups.append(WallGroup(target=target, types=path.types, paths={Q: path}))
            tried.add((Q, len(wg.groups) - 1))

    # groups opened late are offered to the vertices checked before them
    for Q in vertices:
        for index in range(len(wg.groups)):
            if (Q, index) not in tried:
                try_join(Q, index)

    for Q in vertices:
        if not any(Q in group.paths for group in wg.groups):
            wg.unmatched.append(Q)
            logger.debug(f"wall({c}, {s}): no anchored path from {Q} to {target} within {bound}")

    logger.info(f"wall({c}, {s}) on {t.name}: {len(vertices)} vertices, {graph.number_of_edges()} edges, "
                f"{len(wg.groups)} groups, {wg.verdict}")
    return wg


def verify_wall_graph(wg: WallGraph) -> AxiomReport:
    """Re-check every vertex and every stored certificate without reusing search state"""
    t = wg.twin
    other = t.half(-wg.center.sign)
    report = AxiomReport(name=f"wall({wg.center}, {wg.generator}) certificates", exhaustive=True)
    for Q in wg.vertices:
        report.checks += 1
        if other.panel_type(Q) != wg.generator or not t.opposite_residues(wg.anchor, other.panel_ref(Q)):
            report.record("vertex", (Q,))
    for index, group in enumerate(wg.groups):
        for Q, path in group.paths.items():
            report.checks += 1
            if path.start != Q or path.end != group.target or path.types != group.types:
                report.record("certificate-shape", (index, Q))
                continue
            if path.anchor != wg.anchor:
                report.record("certificate-anchor", (index, Q))
                continue
            verdict = verify_anchored_path(t, path)
            if not verdict.passed:
                report.record("certificate-path", (index, Q, verdict.violations[0][0]))
    for a, c in wg.graph.edges():
        report.checks += 1
        try:
            target, first, second = wg.certificate(a, c)
        except DomainError:
            report.record("edge-without-certificate", (a, c))
            continue
        if first.length != second.length or first.types != second.types or first.end != second.end:
            report.record("edge-certificate", (a, c, target))
    return report


@dataclass
class WallPairResult:
    center: TwinChamber
    generator: int
    vertices: int
    edges: int
    components: int
    verdict: str

    @property
    def connected(self) -> bool:
        return self.verdict == "connected"


@dataclass
class WallConnectivityReport:
    name: str
    transversal: bool
    bound: int
    results: List[WallPairResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(result.connected for result in self.results)

    def failures(self) -> List[WallPairResult]:
        return [result for result in self.results if not result.connected]


def is_wall_connected(t: TwinBuilding, bound: Optional[int] = None, transversal: Optional[bool] = None,
                      verify: bool = True) -> WallConnectivityReport:
    """Gamma_s(c) for every (c, s), or for one chamber per sign when the group is chamber-transitive"""
    if transversal is None:
        transversal = t.chamber_transitive
    bound = _default_bound(t.minus) if bound is None else bound
    report = WallConnectivityReport(name=t.name, transversal=transversal, bound=bound)
    for sign in (PLUS, MINUS):
        centers = [0] if transversal else list(t.half(sign).chambers())
        for c in centers:
            for s in range(t.rank):
                wg = wall_graph(t, TwinChamber(sign, c), s, bound=bound)
                verdict = wg.verdict
                if verify:
                    check = verify_wall_graph(wg)
                    if not check.passed:
                        raise StructuralError(f"Certificates of wall({sign_label(sign)}{c}, {s}) fail: {check.violations[0]}")
                report.results.append(WallPairResult(
                    center=wg.center, generator=s, vertices=len(wg.vertices),
                    edges=wg.graph.number_of_edges(),
                    components=nx.number_connected_components(wg.graph) if wg.vertices else 0,
                    verdict=verdict,
                ))
    logger.info(f"{t.name}: wall-connectedness {'holds' if report.passed else 'not established'} "
                f"over {len(report.results)} pairs")
    return report
