"""
Isometries between twin buildings and their extension from one half.

An isometry is stored as one partial id map per sign. Extension from the plus
half to the minus half walks the minus half breadth-first from c-, sending
each new chamber through the panel transport of an already mapped neighbour,
and is recomputed from a second anchor to confirm the result is unique.
"""
import json
import logging
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np

from building import AxiomReport, ResidueRef
from errors import DomainError, ExtensionError, StructuralError
from input_validator import IsometryMapInput
from twin_building import MINUS, PLUS, TwinBuilding, TwinChamber

logger = logging.getLogger("isometry")


class TwinIsometry:
    """A sign-preserving partial map between the chambers of two twin buildings"""

    def __init__(self, source: TwinBuilding, target: TwinBuilding,
                 plus: Optional[Dict[int, int]] = None, minus: Optional[Dict[int, int]] = None):
        if source.coxeter != target.coxeter:
            raise DomainError("Isometries need twin buildings over the same Coxeter system")
        self.source = source
        self.target = target
        self.maps: Dict[int, Dict[int, int]] = {PLUS: dict(plus or {}), MINUS: dict(minus or {})}
        self._images: Dict[int, set] = {sign: set(m.values()) for sign, m in self.maps.items()}

    @classmethod
    def identity(cls, t: TwinBuilding, signs: Iterable[int] = (PLUS, MINUS)) -> "TwinIsometry":
        maps = {sign: {x: x for x in t.half(sign).chambers()} for sign in signs}
        return cls(t, t, maps.get(PLUS), maps.get(MINUS))

    @classmethod
    def from_permutations(cls, t: TwinBuilding, t2: TwinBuilding, plus: Optional[np.ndarray] = None,
                          minus: Optional[np.ndarray] = None) -> "TwinIsometry":
        as_dict = lambda perm: None if perm is None else {i: int(v) for i, v in enumerate(perm)}
        return cls(t, t2, as_dict(plus), as_dict(minus))

    @classmethod
    def from_input(cls, t: TwinBuilding, t2: TwinBuilding, data: IsometryMapInput) -> Tuple["TwinIsometry", TwinChamber, TwinChamber]:
        """The plus map of an isometry file plus its admissible minus pair"""
        n = t.plus.num_chambers
        if any(max(pair) >= n for pair in data.plus) or max(data.minus) >= n:
            raise DomainError(f"Chamber ids must lie below {n}")
        phi = cls(t, t2, plus=dict(data.plus))
        c, c2 = data.minus
        return phi, TwinChamber(MINUS, c), TwinChamber(MINUS, c2)

    def copy(self) -> "TwinIsometry":
        return TwinIsometry(self.source, self.target, self.maps[PLUS], self.maps[MINUS])

    def __contains__(self, x: TwinChamber) -> bool:
        return x.id in self.maps[x.sign]

    def __getitem__(self, x: TwinChamber) -> TwinChamber:
        return TwinChamber(x.sign, self.maps[x.sign][x.id])

    def __len__(self) -> int:
        return len(self.maps[PLUS]) + len(self.maps[MINUS])

    def is_total(self, sign: int) -> bool:
        return len(self.maps[sign]) == self.source.half(sign).num_chambers

    def add(self, x: TwinChamber, y: TwinChamber) -> None:
        if x.sign != y.sign:
            raise DomainError(f"{x} and {y} have different signs")
        self.maps[x.sign][x.id] = y.id
        self._images[x.sign].add(y.id)

    def arrays(self, sign: int) -> Tuple[np.ndarray, np.ndarray]:
        items = sorted(self.maps[sign].items())
        sources = np.array([a for a, _ in items], dtype=np.int64)
        images = np.array([b for _, b in items], dtype=np.int64)
        return sources, images

    def restrict(self, sign: int) -> "TwinIsometry":
        return TwinIsometry(self.source, self.target, **{"plus" if sign == PLUS else "minus": self.maps[sign]})

    def to_json(self) -> str:
        return json.dumps({
            "plus": sorted([a, b] for a, b in self.maps[PLUS].items()),
            "minus": sorted([a, b] for a, b in self.maps[MINUS].items()),
        })

    def __eq__(self, other) -> bool:
        return isinstance(other, TwinIsometry) and self.maps == other.maps

    def __repr__(self) -> str:
        return f"TwinIsometry(+{len(self.maps[PLUS])}, -{len(self.maps[MINUS])})"


def _rows_agree(phi: TwinIsometry, y: TwinChamber, y2: TwinChamber) -> Optional[Tuple[int, int]]:
    """First (sign, chamber) of the domain whose distance to y is not carried to y2, else None"""
    t, t2 = phi.source, phi.target
    for sign in (PLUS, MINUS):
        sources, images = phi.arrays(sign)
        if not sources.size:
            continue
        if sign == y.sign:
            left = t.half(sign).distance_row(y.id)[sources]
            right = t2.half(sign).distance_row(y2.id)[images]
        else:
            left = t.codistance_row(y)[sources]
            right = t2.codistance_row(y2)[images]
        bad = np.flatnonzero(left != right)
        if bad.size:
            return sign, int(sources[bad[0]])
    return None


def check_isometry(phi: TwinIsometry) -> AxiomReport:
    """Iso1 injectivity, Iso2 sign preservation and Iso3 distance preservation on the whole domain"""
    report = AxiomReport(name=repr(phi), exhaustive=True)
    for sign, m in phi.maps.items():
        report.checks += 1
        if len(set(m.values())) != len(m):
            report.record("Iso1", (sign,))
        half2 = phi.target.half(sign)
        if any(not 0 <= v < half2.num_chambers for v in m.values()):
            report.record("Iso2", (sign,))
    if not report.passed:
        return report
    for sign in (PLUS, MINUS):
        for x, image in sorted(phi.maps[sign].items()):
            report.checks += 1
            witness = _rows_agree(phi, TwinChamber(sign, x), TwinChamber(sign, image))
            if witness is not None:
                report.record("Iso3", (TwinChamber(sign, x), witness))
    return report


def is_admissible(phi: TwinIsometry, y: TwinChamber, y2: TwinChamber) -> bool:
    """Whether y -> y2 extends phi to an isometry"""
    if y.sign != y2.sign:
        return False
    known = phi.maps[y.sign].get(y.id)
    if known is not None:
        return known == y2.id
    if y2.id in phi._images[y.sign]:
        return False
    return _rows_agree(phi, y, y2) is None


def opposite_image_criterion(phi: TwinIsometry, x: TwinChamber, x2: TwinChamber) -> bool:
    """phi maps the opposite set of x into the opposite set of x2 (phi total on the other half)"""
    other = -x.sign
    if not phi.is_total(other):
        raise DomainError("The criterion needs phi on the whole opposite half")
    sources, images = phi.arrays(other)
    mapped = images[phi.source.opposite_ids(x)]
    return bool(np.isin(mapped, phi.target.opposite_ids(x2)).all())


def image_residue(phi: TwinIsometry, R: ResidueRef) -> ResidueRef:
    """phi(R) for a residue inside the domain"""
    t, t2 = phi.source, phi.target
    sign = t.sign_of(R.building)
    rep = phi.maps[sign][int(R.representative)]
    return t2.half(sign).residue(rep, R.type)


def projections_commute(phi: TwinIsometry, x: TwinChamber, x2: TwinChamber, R: ResidueRef) -> bool:
    """phi(proj_R x) = proj_{phi(R)} x2 for an admissible pair (x, x2)"""
    t, t2 = phi.source, phi.target
    sign = t.sign_of(R.building)
    mapped = phi.maps[sign][t.projection(x, R)]
    return mapped == t2.projection(x2, image_residue(phi, R))


def phi_s_transport(t: TwinBuilding, t2: TwinBuilding, phi: TwinIsometry, c: TwinChamber, c2: TwinChamber,
                    x: TwinChamber, s: int) -> Dict[int, int]:
    """P_s(c) -> P_s(c2) through the panel P_s(x) of the other half and its phi-image"""
    if not is_admissible(phi, c, c2):
        raise DomainError(f"({c}, {c2}) is not admissible for {phi}")
    if not t.is_opposite(x, c):
        raise DomainError(f"{x} is not opposite {c}")
    if x.id not in phi.maps[x.sign]:
        raise DomainError(f"{x} lies outside the domain of {phi}")
    half, half2 = t.half(c.sign), t2.half(c.sign)
    P = half.panel(s, c.id)
    through = t.half(x.sign).panel(s, x.id)
    P2 = half2.panel(s, c2.id)
    own = phi.maps[x.sign]

    transport = {}
    for d in P.members.tolist():
        p = t.coprojection(TwinChamber(c.sign, d), through, verify=False)
        if p not in own:
            raise DomainError(f"Chamber {p} of P_s({x}) lies outside the domain of {phi}")
        transport[d] = t2.coprojection(TwinChamber(x.sign, own[p]), P2, verify=False)

    if transport[c.id] != c2.id:
        raise StructuralError(f"Transport through {x} sends {c} to {transport[c.id]}, not {c2.id}")
    if sorted(transport.values()) != sorted(P2.members.tolist()):
        raise StructuralError(f"Transport through {x} is not a bijection onto P_{s}({c2})")
    return transport


def _propagate_minus(t: TwinBuilding, t2: TwinBuilding, phi: TwinIsometry, c: TwinChamber,
                     c2: TwinChamber) -> TwinIsometry:
    half = t.half(c.sign)
    result = phi.copy()
    if not is_admissible(result, c, c2):
        raise ExtensionError(c.id, None, f"({c}, {c2}) is not admissible")
    result.add(c, c2)
    lengths = half.length_row(c.id)
    order = np.lexsort((np.arange(half.num_chambers), lengths))
    for y in order.tolist():
        if y in result.maps[c.sign]:
            continue
        predecessor = None
        for s in range(t.rank):
            for z in half.neighbors(s, y).tolist():
                if z in result.maps[c.sign] and lengths[z] == lengths[y] - 1:
                    predecessor = (z, s)
                    break
            if predecessor is not None:
                break
        if predecessor is None:
            raise ExtensionError(y, None, "no mapped neighbour closer to the anchor")
        z, s = predecessor
        zc = TwinChamber(c.sign, z)
        x = TwinChamber(-c.sign, int(t.opposite_ids(zc)[0]))
        transport = phi_s_transport(t, t2, result, zc, result[zc], x, s)
        image = TwinChamber(c.sign, transport[y])
        if not is_admissible(result, TwinChamber(c.sign, y), image):
            raise ExtensionError(y, s, f"transported image {image} is not admissible")
        result.add(TwinChamber(c.sign, y), image)
        logger.debug(f"{TwinChamber(c.sign, y)} -> {image} via {zc} and {x}")
    return result


def extend_to_minus(t: TwinBuilding, t2: TwinBuilding, phi: TwinIsometry, c: TwinChamber,
                    c2: TwinChamber) -> TwinIsometry:
    """Extend phi from the whole plus half to everything, given an admissible minus pair (c, c2)"""
    if c.sign != MINUS or c2.sign != MINUS:
        raise DomainError("The anchor pair must lie in the minus halves")
    if not phi.is_total(PLUS):
        raise DomainError("extend_to_minus needs phi on the whole plus half")
    base = phi.restrict(PLUS)
    first = _propagate_minus(t, t2, base, c, c2)

    farthest = int(np.argmax(t.minus.length_row(c.id)))
    if farthest != c.id:
        anchor = TwinChamber(MINUS, farthest)
        second = _propagate_minus(t, t2, base, anchor, first[anchor])
        for y, image in first.maps[MINUS].items():
            if second.maps[MINUS][y] != image:
                raise ExtensionError(y, None, f"anchors {c} and {anchor} disagree: {image} vs {second.maps[MINUS][y]}")
    logger.info(f"Extended {phi} on {t.name} from ({c}, {c2}) to {len(first.maps[MINUS])} minus chambers")
    return first


def extend_half(t: TwinBuilding, t2: TwinBuilding, phi: TwinIsometry, sign: int) -> TwinIsometry:
    """Fill one half by forced choices: a chamber is placed once exactly one admissible image remains"""
    half, half2 = t.half(sign), t2.half(sign)
    result = phi.copy()
    if not result.maps[sign]:
        raise DomainError("Need at least one mapped chamber in the half being filled")
    progress = True
    while progress and not result.is_total(sign):
        progress = False
        for y in half.chambers():
            if y in result.maps[sign]:
                continue
            candidates = set()
            for s in range(t.rank):
                for z in half.neighbors(s, y).tolist():
                    if z in result.maps[sign]:
                        candidates.update(half2.neighbors(s, result.maps[sign][z]).tolist())
            if not candidates:
                continue
            admissible = [v for v in sorted(candidates)
                          if is_admissible(result, TwinChamber(sign, y), TwinChamber(sign, v))]
            if not admissible:
                raise ExtensionError(y, None, "no admissible image among neighbours")
            if len(admissible) == 1:
                result.add(TwinChamber(sign, y), TwinChamber(sign, admissible[0]))
                progress = True
    if not result.is_total(sign):
        missing = [y for y in half.chambers() if y not in result.maps[sign]]
        raise ExtensionError(missing[0], None, f"{len(missing)} chambers stay undetermined")
    return result


def extend_germ(t: TwinBuilding, t2: TwinBuilding, germ: TwinIsometry, c_minus: TwinChamber) -> TwinIsometry:
    """Extend a map on E_2(c+) and c- to both halves, the plus half first"""
    if c_minus not in germ:
        raise DomainError(f"The germ must contain {c_minus}")
    plus_part = extend_half(t, t2, germ.restrict(PLUS), PLUS)
    return extend_to_minus(t, t2, plus_part, c_minus, germ[c_minus])


@dataclass
class RigidityReport:
    fixed: int
    forced: int
    total: int
    columns: int

    @property
    def rigid(self) -> bool:
        return self.forced == self.total


def forced_chambers(t: TwinBuilding, fixed: Iterable[TwinChamber]) -> Tuple[List[TwinChamber], int]:
    """Closure of fixed under 'the only chamber with these distances to fixed chambers'"""
    labels = {sign: np.zeros(t.half(sign).num_chambers, dtype=np.int64) for sign in (PLUS, MINUS)}
    known = {sign: np.zeros(t.half(sign).num_chambers, dtype=bool) for sign in (PLUS, MINUS)}
    queue: List[TwinChamber] = []
    for c in fixed:
        if not known[c.sign][c.id]:
            known[c.sign][c.id] = True
            queue.append(c)
    order = t.table.order
    columns = 0
    while queue:
        f = queue.pop(0)
        columns += 1
        for sign in (PLUS, MINUS):
            row = t.half(sign).distance_row(f.id) if sign == f.sign else t.codistance_row(f)
            _, labels[sign] = np.unique(labels[sign] * order + row, return_inverse=True)
            counts = np.bincount(labels[sign])
            fresh = np.flatnonzero((counts[labels[sign]] == 1) & ~known[sign])
            known[sign][fresh] = True
            queue.extend(TwinChamber(sign, int(y)) for y in fresh)
    forced = [TwinChamber(sign, int(y)) for sign in (PLUS, MINUS) for y in np.flatnonzero(known[sign])]
    return forced, columns


def check_rigidity(t: TwinBuilding, c_plus: int, c_minus: Optional[int] = None) -> RigidityReport:
    """Whether fixing E_1(c+) and one opposite chamber c- forces every chamber"""
    start = TwinChamber(PLUS, c_plus)
    if c_minus is None:
        c_minus = int(t.opposite_ids(start)[0])
    if not t.is_opposite(start, TwinChamber(MINUS, c_minus)):
        raise DomainError(f"-{c_minus} is not opposite {start}")
    fixed = [TwinChamber(PLUS, int(y)) for y in sorted(t.plus.e_k_neighborhood(c_plus, 1))]
    fixed.append(TwinChamber(MINUS, c_minus))
    forced, columns = forced_chambers(t, fixed)
    report = RigidityReport(fixed=len(fixed), forced=len(forced),
                            total=t.plus.num_chambers + t.minus.num_chambers, columns=columns)
    logger.info(f"{t.name}: fixing E_1({start}) and -{c_minus} forces {report.forced}/{report.total} chambers")
    return report
