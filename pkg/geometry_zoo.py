"""
Finite thick buildings over F_2 and F_3, plus ingested rank-2 geometries.

Subspaces are stored as reduced row echelon bases over F_q; the tuple of their
rows is a canonical key. Chambers are maximal flags listed depth first in key
order, and two chambers are s-adjacent when they differ in their s-th member
only.
"""
import logging
import os
import random
from dataclasses import dataclass
from itertools import product
from typing import Callable, Dict, List, Optional, Tuple

import networkx as nx
import numpy as np

from building import Building
from coxeter import CoxeterMatrix
from errors import DomainError, FixtureValidationError, StructuralError, UnsupportedInstanceError, UsageError
from input_validator import parse_incidence_text
from settings import get_settings

logger = logging.getLogger("geometry_zoo")

SUPPORTED_FIELDS = (2, 3)
PROJECTIVE_DIMENSIONS = (2, 3)
SYMPLECTIC_PARAMETERS = ((4, 2), (4, 3), (6, 2))

SubspaceKey = Tuple[Tuple[int, ...], ...]


def rref(matrix, q: int) -> np.ndarray:
    """Reduced row echelon form over F_q, zero rows dropped"""
    m = np.array(matrix, dtype=np.int64) % q
    rows, cols = m.shape
    pivot = 0
    for col in range(cols):
        if pivot == rows:
            break
        nonzero = np.flatnonzero(m[pivot:, col])
        if not nonzero.size:
            continue
        r = pivot + int(nonzero[0])
        m[[pivot, r]] = m[[r, pivot]]
        m[pivot] = (m[pivot] * pow(int(m[pivot, col]), -1, q)) % q
        factors = m[:, col].copy()
        factors[pivot] = 0
        m = (m - np.outer(factors, m[pivot])) % q
        pivot += 1
    return m[:pivot]


def subspace_key(basis: np.ndarray) -> SubspaceKey:
    return tuple(tuple(int(v) for v in row) for row in basis)


def key_matrix(key: SubspaceKey, n: int) -> np.ndarray:
    return np.array(key, dtype=np.int64).reshape(len(key), n)


def symplectic_form(n: int, q: int) -> np.ndarray:
    """Alternating form with e_i paired against e_{n-1-i}"""
    form = np.zeros((n, n), dtype=np.int64)
    for i in range(n // 2):
        form[i, n - 1 - i] = 1
        form[n - 1 - i, i] = q - 1
    return form


def is_isotropic(basis: np.ndarray, form: np.ndarray, q: int) -> bool:
    return not ((basis @ form @ basis.T) % q).any()


def enumerate_subspaces(n: int, q: int, max_dim: int, form: Optional[np.ndarray] = None
                        ) -> Tuple[Dict[int, List[SubspaceKey]], Dict[SubspaceKey, List[SubspaceKey]]]:
    """Subspaces of F_q^n of dimension 1..max_dim (isotropic ones when form is given) and the covering relation"""
    points = sorted({subspace_key(rref(np.array([v]), q)) for v in product(range(q), repeat=n) if any(v)})
    levels: Dict[int, List[SubspaceKey]] = {1: points}
    children: Dict[SubspaceKey, List[SubspaceKey]] = {}
    for dim in range(1, max_dim):
        found = set()
        for key in levels[dim]:
            basis = key_matrix(key, n)
            above = set()
            for point in points:
                vector = key_matrix(point, n)
                if form is not None and ((vector @ form @ basis.T) % q).any():
                    continue
                joined = rref(np.vstack([basis, vector]), q)
                if len(joined) == dim + 1:
                    above.add(subspace_key(joined))
            children[key] = sorted(above)
            found |= above
        levels[dim + 1] = sorted(found)
        logger.debug(f"F_{q}^{n}: {len(levels[dim + 1])} subspaces of dimension {dim + 1}")
    return levels, children


def _maximal_flags(levels, children, top: int) -> List[Tuple[SubspaceKey, ...]]:
    flags = []

    def extend(chain):
        if len(chain) == top:
            flags.append(tuple(chain))
            return
        for key in children[chain[-1]]:
            extend(chain + [key])

    for point in levels[1]:
        extend([point])
    return flags


class FlagBuilding(Building):
    """Maximal (isotropic) flags of F_q^n with the group acting on them"""

    def __init__(self, coxeter: CoxeterMatrix, n: int, q: int, levels, children,
                 form: Optional[np.ndarray] = None, name: Optional[str] = None):
        self.n = n
        self.q = q
        self.form = form
        self.subspaces = levels
        self.flags = _maximal_flags(levels, children, coxeter.rank)
        self.flag_index = {flag: i for i, flag in enumerate(self.flags)}
        assignment = [[flag[:s] + flag[s + 1:] for s in range(coxeter.rank)] for flag in self.flags]
        super().__init__(coxeter, assignment, name=name, thick=True)
        self.chamber_transitive = True

    def act(self, g) -> np.ndarray:
        """Chamber permutation induced by g acting on column vectors"""
        g = np.asarray(g, dtype=np.int64) % self.q
        if g.shape != (self.n, self.n) or len(rref(g, self.q)) != self.n:
            raise DomainError(f"Expected an invertible {self.n}x{self.n} matrix over F_{self.q}")
        if self.form is not None and ((g.T @ self.form @ g - self.form) % self.q).any():
            raise DomainError("Matrix does not preserve the symplectic form")
        images = {}
        for keys in self.subspaces.values():
            for key in keys:
                images[key] = subspace_key(rref(key_matrix(key, self.n) @ g.T, self.q))
        perm = np.empty(self.num_chambers, dtype=np.int64)
        for x, flag in enumerate(self.flags):
            target = self.flag_index.get(tuple(images[key] for key in flag))
            if target is None:
                raise StructuralError(f"{self.name}: image of chamber {x} is not a chamber")
            perm[x] = target
        return perm


def random_group_element(b: FlagBuilding, rng: random.Random, steps: int = 12) -> np.ndarray:
    """Product of random transvections: symplectic ones when b carries a form, elementary ones otherwise"""
    n, q = b.n, b.q
    g = np.eye(n, dtype=np.int64)
    for _ in range(steps):
        a = rng.randrange(1, q)
        if b.form is None:
            i, j = rng.sample(range(n), 2)
            step = np.eye(n, dtype=np.int64)
            step[i, j] = a
        else:
            v = np.array([rng.randrange(q) for _ in range(n)], dtype=np.int64)
            step = np.eye(n, dtype=np.int64) + a * np.outer(v, v) @ b.form.T
        g = (g @ step) % q
    return g


def build_projective_flag_building(dim: int, q: int) -> FlagBuilding:
    """Flag building of PG(dim, q), type A_dim"""
    if dim not in PROJECTIVE_DIMENSIONS or q not in SUPPORTED_FIELDS:
        raise UnsupportedInstanceError("build_projective_flag_building", f"PG({dim},{q})")
    n = dim + 1
    levels, children = enumerate_subspaces(n, q, dim)
    return FlagBuilding(CoxeterMatrix.named(f"A{dim}"), n, q, levels, children, name=f"A{dim}({q})")


def build_symplectic_building(n: int, q: int) -> FlagBuilding:
    """Isotropic flag building of Sp_n(q), type C_{n/2}"""
    if (n, q) not in SYMPLECTIC_PARAMETERS:
        raise UnsupportedInstanceError("build_symplectic_building", f"Sp_{n}({q})")
    form = symplectic_form(n, q)
    levels, children = enumerate_subspaces(n, q, n // 2, form)
    return FlagBuilding(CoxeterMatrix.named(f"C{n // 2}"), n, q, levels, children,
                        form=form, name=f"C{n // 2}({q})")


@dataclass
class IncidenceGeometry:
    """Point-line geometry checked to be a generalized m-gon"""
    points: List[int]
    lines: List[int]
    flags: List[Tuple[int, int]]
    gonality: int
    source: str = "incidence file"

    @classmethod
    def from_text(cls, text: str, source: str = "incidence file") -> "IncidenceGeometry":
        parsed = parse_incidence_text(text, source)
        return cls(
            points=sorted({p for p, _ in parsed.flags}),
            lines=sorted({l for _, l in parsed.flags}),
            flags=sorted(parsed.flags),
            gonality=parsed.gonality,
            source=source,
        )

    def orders(self) -> Tuple[int, int]:
        """(s, t): s+1 points per line, t+1 lines per point"""
        on_line: Dict[int, int] = {}
        through_point: Dict[int, int] = {}
        for p, l in self.flags:
            on_line[l] = on_line.get(l, 0) + 1
            through_point[p] = through_point.get(p, 0) + 1
        for counts, kind in ((through_point, "point"), (on_line, "line")):
            sizes = sorted(set(counts.values()))
            if len(sizes) != 1:
                low = min(counts, key=lambda k: (counts[k], k))
                high = max(counts, key=lambda k: (counts[k], -k))
                raise FixtureValidationError(
                    self.source,
                    [f"non-constant order: {kind} {low} has {counts[low]} incidences, {kind} {high} has {counts[high]}"],
                    witness=(low, high),
                )
        return next(iter(on_line.values())) - 1, next(iter(through_point.values())) - 1

    def incidence_graph(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(("P", p) for p in self.points)
        graph.add_nodes_from(("L", l) for l in self.lines)
        graph.add_edges_from((("P", p), ("L", l)) for p, l in self.flags)
        return graph

    def check_polygon(self) -> None:
        """Diameter m and girth 2m of the incidence graph, with a witness on failure"""
        m = self.gonality
        graph = self.incidence_graph()
        if not nx.is_connected(graph):
            parts = sorted(min(c) for c in nx.connected_components(graph))
            raise FixtureValidationError(self.source, ["incidence graph is disconnected"], witness=parts[:2])

        distances = dict(nx.all_pairs_shortest_path_length(graph))
        far = max(((d, u, v) for u, row in distances.items() for v, d in row.items()), key=lambda t: t[0])
        if far[0] != m:
            path = nx.shortest_path(graph, far[1], far[2])
            raise FixtureValidationError(self.source, [f"diameter is {far[0]}, expected {m}"], witness=path)

        cycle = self.shortest_cycle(graph)
        if cycle is None or len(cycle) != 2 * m:
            found = "none" if cycle is None else len(cycle)
            raise FixtureValidationError(self.source, [f"girth is {found}, expected {2 * m}"], witness=cycle)

    @staticmethod
    def shortest_cycle(graph: nx.Graph) -> Optional[List]:
        best = None
        for u, v in sorted(graph.edges()):
            graph.remove_edge(u, v)
            try:
                path = nx.shortest_path(graph, v, u)
                if best is None or len(path) < len(best):
                    best = path
            except nx.NetworkXNoPath:
                pass
            finally:
                graph.add_edge(u, v)
        return best

    def to_building(self, name: Optional[str] = None) -> Building:
        """Flag chamber system: s0 moves the point, s1 moves the line"""
        self.orders()
        self.check_polygon()
        m = self.gonality
        coxeter = CoxeterMatrix([[1, m], [m, 1]], name=f"I2({m})")
        assignment = [[("L", l), ("P", p)] for p, l in self.flags]
        return Building(coxeter, assignment, name=name or os.path.basename(self.source))


def ingest_rank2_geometry(source: str) -> Building:
    """Read an incidence file and build its flag chamber system"""
    try:
        with open(source, encoding="utf-8") as handle:
            text = handle.read()
    except OSError as e:
        raise FixtureValidationError(source, [f"cannot read file: {e}"])
    geometry = IncidenceGeometry.from_text(text, source)
    building = geometry.to_building()
    s, t = geometry.orders()
    logger.info(f"Ingested {source}: generalized {geometry.gonality}-gon of order ({s}, {t})")
    return building


ZOO_BUILDERS: Dict[str, Tuple[Callable[[], FlagBuilding], str]] = {
    "A2q2": (lambda: build_projective_flag_building(2, 2), "flags of PG(2,2)"),
    "A2q3": (lambda: build_projective_flag_building(2, 3), "flags of PG(2,3)"),
    "A3q2": (lambda: build_projective_flag_building(3, 2), "flags of PG(3,2)"),
    "A3q3": (lambda: build_projective_flag_building(3, 3), "flags of PG(3,3)"),
    "C2q2": (lambda: build_symplectic_building(4, 2), "isotropic flags of W(2)"),
    "C2q3": (lambda: build_symplectic_building(4, 3), "isotropic flags of W(3)"),
    "C3q2": (lambda: build_symplectic_building(6, 2), "isotropic flags of Sp6(2)"),
}

# Built instances, keyed by zoo name or resolved path
_zoo_cache: Dict[str, Building] = {}


def resolve_fixture_path(name: str) -> Optional[str]:
    candidates = [name, os.path.join(get_settings().fixture_dir, name)]
    if not name.endswith(".inc"):
        candidates.append(os.path.join(get_settings().fixture_dir, f"{name}.inc"))
    return next((path for path in candidates if os.path.isfile(path)), None)


def get_zoo_building(name: str) -> Building:
    """Named zoo member, or an incidence file by path or fixture name"""
    if name in _zoo_cache:
        return _zoo_cache[name]
    if name in ZOO_BUILDERS:
        building = ZOO_BUILDERS[name][0]()
        building.name = name
    else:
        path = resolve_fixture_path(name)
        if path is None:
            raise UsageError(f"Unknown instance {name!r}; known: {', '.join(ZOO_BUILDERS)} or an incidence file")
        building = ingest_rank2_geometry(path)
    _zoo_cache[name] = building
    return building


def describe_building(building: Building) -> Dict[str, object]:
    return {
        "name": building.name,
        "type": building.coxeter.name,
        "rank": building.rank,
        "chambers": building.num_chambers,
        "panels": building.num_panels,
        "panel_sizes": building.panel_sizes(),
        "thick": building.is_thick(),
    }


def clear_zoo_cache() -> None:
    _zoo_cache.clear()
