"""
Weyl-level wall-connectedness certificates for the affine rank-3 types.

For each positive root gamma whose reflection generates an infinite dihedral
group with s, the certificate names the vertex fan (all positive roots whose
walls pass through one vertex) in which gamma sits strictly between the two
bounding roots. Every other fan root has finite order with s, so U_gamma lies
in the group generated by finite-order root groups. Generation and
verification are separate code paths.
"""
import json
import logging
import random
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from building import thin_building
from coxeter import AFFINE_RANK3_TYPES, INFINITY, CoxeterMatrix, Root, positive_roots_up_to_depth, reflection_product_order
from errors import BuildingError, DomainError, StructuralError, UsageError
from input_validator import CertificateEntryInput, CertificateInput, parse_certificate
from settings import get_settings

logger = logging.getLogger("affine_cert")

FINITE_ORDERS = (2, 3, 4, 6)


def affine_coxeter(type_name: str) -> CoxeterMatrix:
    if type_name not in AFFINE_RANK3_TYPES:
        raise UsageError(f"Certificates cover {', '.join(AFFINE_RANK3_TYPES)}, not {type_name!r}")
    return CoxeterMatrix.named(type_name)


def order_with_generator(s: int, root: Root) -> float:
    """o(s r_root), with s r_{alpha_s} = 1 counted as finite"""
    alpha = root.coxeter.simple_root(s)
    if root == alpha or root == -alpha:
        return 1
    return reflection_product_order(alpha, root)


def enumerate_positive_roots(type_name: str, depth: int) -> List[Root]:
    """Positive roots of depth at most depth, sorted"""
    if depth < 1:
        raise UsageError(f"Depth must be at least 1, got {depth}")
    return positive_roots_up_to_depth(affine_coxeter(type_name), depth)


@dataclass(frozen=True)
class VertexFan:
    """Positive roots through one vertex, in natural order"""
    vertex: Tuple[Root, Root]
    fan: Tuple[Root, ...]
    residue_type: Tuple[int, int]

    @property
    def m(self) -> int:
        return len(self.fan)

    def position(self, root: Root) -> int:
        """1-based index of root in the fan"""
        if root not in self.fan:
            raise StructuralError(f"{root} is not in the fan at {self.vertex}")
        return self.fan.index(root) + 1


def _fan_from_endpoints(first: Root, second: Root, m: int) -> Tuple[Root, ...]:
    """alpha_1, alpha_2 given; alpha_{i+1} = -r_{alpha_i}(alpha_{i-1})"""
    fan = [first, second]
    while len(fan) < m:
        fan.append(-fan[-1].reflect(fan[-2]))
    return tuple(fan)


class GallerySearch:
    """ShortLex ball of the Coxeter complex used to seed minimal galleries"""

    def __init__(self, coxeter: CoxeterMatrix, radius: int):
        self.coxeter = coxeter
        self.ball = thin_building(coxeter, radius=radius)
        self.elements = self.ball.elements
        self._inverses = np.stack([w.inverse_matrix for w in self.elements])

    def crossing_gallery(self, gamma: Root) -> Tuple[int, ...]:
        """Type of a shortest gallery from 1 whose last step crosses the wall of gamma"""
        images = self._inverses @ gamma.vector
        negative = (images <= 0).all(axis=1)
        if not negative.any():
            raise DomainError(f"No chamber within radius {self.ball.radius} lies across the wall of {gamma}")
        return self.elements[int(np.argmax(negative))].word


def build_vertex_fan(s: int, gamma: Root, gallery: Sequence[int]) -> VertexFan:
    """The fan at the vertex of the rank-2 residue holding the last three chambers of gallery"""
    coxeter = gamma.coxeter
    if not gamma.is_positive:
        raise DomainError(f"{gamma} is not positive")
    if order_with_generator(s, gamma) != INFINITY:
        raise DomainError(f"{gamma} has finite order with s{s}; no certificate needed")
    gallery = tuple(gallery)
    if len(gallery) < 2:
        raise StructuralError(f"Gallery {gallery} for {gamma} is shorter than 2")
    w = coxeter.element(gallery)
    last_crossing = coxeter.element(gallery[:-1]).act(coxeter.simple_root(gallery[-1]))
    if last_crossing != gamma:
        raise DomainError(f"Gallery {gallery} does not cross the wall of {gamma} last")

    J = tuple(sorted(gallery[-2:]))
    projection = coxeter.element(gallery[:-2])
    while True:
        descents = [j for j in J if j in projection.right_descents()]
        if not descents:
            break
        projection = projection * coxeter.generator(descents[0])
    a, b = J
    m = int(coxeter.m(a, b))
    first = projection.act(coxeter.simple_root(a))
    second = (projection * coxeter.generator(a)).act(coxeter.simple_root(b))
    fan = _fan_from_endpoints(first, second, m)
    if fan[-1] != projection.act(coxeter.simple_root(b)):
        raise StructuralError(f"Fan at {projection} does not close at the second bounding root")
    logger.debug(f"{gamma}: gallery {w.word_string()}, fan of gonality {m}")
    return VertexFan(vertex=(first, fan[-1]), fan=fan, residue_type=J)


@dataclass
class CertificateEntry:
    gamma: Root
    fan: VertexFan
    ell: int

    def to_input(self) -> CertificateEntryInput:
        return CertificateEntryInput(
            gamma=list(self.gamma.coords),
            vertex=[list(r.coords) for r in self.fan.vertex],
            fan=[list(r.coords) for r in self.fan.fan],
            ell=self.ell,
        )


@dataclass
class WcCertificate:
    type: str
    s: int
    depth: int
    entries: List[CertificateEntry] = field(default_factory=list)
    failures: List[Tuple[Root, str]] = field(default_factory=list)

    @property
    def complete(self) -> bool:
        return not self.failures

    def to_input(self) -> CertificateInput:
        return CertificateInput(type=self.type, s=self.s, depth=self.depth,
                                entries=[entry.to_input() for entry in self.entries])

    def to_json(self) -> str:
        return json.dumps(self.to_input().dict(), indent=2, sort_keys=True)


def generate_certificate(type_name: str, s: int, depth: Optional[int] = None) -> WcCertificate:
    """One fan entry per infinite-order positive root within depth"""
    coxeter = affine_coxeter(type_name)
    if not 0 <= s < coxeter.rank:
        raise UsageError(f"Generator index {s} out of range for {type_name}")
    depth = get_settings().affine_cert_depth if depth is None else depth
    roots = enumerate_positive_roots(type_name, depth)
    search = GallerySearch(coxeter, radius=depth)
    certificate = WcCertificate(type=type_name, s=s, depth=depth)
    for gamma in roots:
        if order_with_generator(s, gamma) != INFINITY:
            continue
        try:
            fan = build_vertex_fan(s, gamma, search.crossing_gallery(gamma))
            ell = fan.position(gamma)
            if not 1 < ell < fan.m:
                raise StructuralError(f"{gamma} bounds its fan (position {ell} of {fan.m})")
            finite = [order_with_generator(s, alpha) != INFINITY for i, alpha in enumerate(fan.fan, 1) if i != ell]
            if not all(finite):
                raise StructuralError(f"Fan of {gamma} has a second infinite-order root")
        except BuildingError as e:
            certificate.failures.append((gamma, str(e)))
            logger.error(f"{type_name} s{s}: no fan for {gamma}: {e}")
            continue
        certificate.entries.append(CertificateEntry(gamma=gamma, fan=fan, ell=ell))
    logger.info(f"{type_name} s{s} depth {depth}: {len(certificate.entries)} entries, "
                f"{len(certificate.failures)} failures over {len(roots)} roots")
    return certificate


@dataclass
class CertificateVerdict:
    checked: int = 0
    problems: List[str] = field(default_factory=list)

    @property
    def accepted(self) -> bool:
        return not self.problems


def _root(coxeter: CoxeterMatrix, coords: Sequence[int]) -> Root:
    return Root(coxeter, coords)


def _det3(a: Sequence[int], b: Sequence[int], c: Sequence[int]) -> int:
    """Exact 3x3 determinant of integer rows by cofactor expansion"""
    return (a[0] * (b[1] * c[2] - b[2] * c[1])
            - a[1] * (b[0] * c[2] - b[2] * c[0])
            + a[2] * (b[0] * c[1] - b[1] * c[0]))


def _check_entry(coxeter: CoxeterMatrix, s: int, entry: CertificateEntryInput) -> List[str]:
    problems = []
    gamma = _root(coxeter, entry.gamma)
    fan = [_root(coxeter, c) for c in entry.fan]
    vertex = [_root(coxeter, c) for c in entry.vertex]
    m = len(fan)
    if not gamma.is_positive or not all(r.is_positive for r in fan):
        problems.append("non-positive root")
    if order_with_generator(s, gamma) != INFINITY:
        problems.append("gamma has finite order with s")
    if not 1 < entry.ell < m:
        problems.append(f"ell = {entry.ell} is not interior to a fan of size {m}")
    elif fan[entry.ell - 1] != gamma:
        problems.append(f"fan position {entry.ell} is not gamma")
    if sorted(vertex) != sorted([fan[0], fan[-1]]):
        problems.append("vertex roots are not the fan endpoints")
    if reflection_product_order(fan[0], fan[-1]) != m:
        problems.append(f"bounding reflections do not generate a dihedral group of order {2 * m}")
    for i, alpha in enumerate(fan):
        if _det3(fan[0].coords, fan[-1].coords, alpha.coords) != 0:
            problems.append(f"fan root {i + 1} misses the vertex")
        if 0 < i < m - 1 and -alpha.reflect(fan[i - 1]) != fan[i + 1]:
            problems.append(f"fan order breaks at position {i + 1}")
        for beta in fan[i + 1:]:
            if reflection_product_order(alpha, beta) not in FINITE_ORDERS:
                problems.append(f"fan roots {alpha} and {beta} have no finite crystallographic order")
        if i + 1 != entry.ell and order_with_generator(s, alpha) == INFINITY:
            problems.append(f"fan root {i + 1} has infinite order with s")
    return problems


def verify_certificate(certificate: CertificateInput) -> CertificateVerdict:
    """Recheck every entry from scratch, then coverage of the infinite-order roots"""
    coxeter = affine_coxeter(certificate.type)
    verdict = CertificateVerdict()
    s = certificate.s
    if s >= coxeter.rank:
        verdict.problems.append(f"generator {s} out of range")
        return verdict
    covered = set()
    for number, entry in enumerate(certificate.entries):
        verdict.checked += 1
        try:
            problems = _check_entry(coxeter, s, entry)
        except BuildingError as e:
            problems = [str(e)]
        verdict.problems.extend(f"entry {number} {entry.gamma}: {p}" for p in problems)
        gamma = tuple(entry.gamma)
        if gamma in covered:
            verdict.problems.append(f"entry {number}: {entry.gamma} appears twice")
        covered.add(gamma)
    for gamma in positive_roots_up_to_depth(coxeter, certificate.depth):
        if order_with_generator(s, gamma) == INFINITY and gamma.coords not in covered:
            verdict.problems.append(f"{list(gamma.coords)} has no entry")
    level = logging.INFO if verdict.accepted else logging.WARNING
    logger.log(level, f"{certificate.type} s{s}: {verdict.checked} entries, {len(verdict.problems)} problems")
    return verdict


def load_certificate(path: str) -> CertificateInput:
    with open(path, encoding="utf-8") as handle:
        return parse_certificate(handle.read(), path)


def mutate_certificate(certificate: CertificateInput, rng: random.Random) -> Tuple[CertificateInput, str]:
    """Copy with one entry damaged: ell moved to an endpoint, or gamma replaced by a neighbor in its fan"""
    mutated = certificate.copy(deep=True)
    number = rng.randrange(len(mutated.entries))
    entry = mutated.entries[number]
    if rng.random() < 0.5:
        entry.ell = rng.choice([1, len(entry.fan)])
        return mutated, f"entry {number}: ell -> {entry.ell}"
    entry.gamma = list(entry.fan[entry.ell - 2 + 2 * rng.randrange(2)])
    return mutated, f"entry {number}: gamma -> {entry.gamma}"


@dataclass
class MutationReport:
    total: int
    rejected: int
    accepted_mutations: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.rejected == self.total


def negative_control(certificate: CertificateInput, mutations: Optional[int] = None,
                     seed: Optional[int] = None) -> MutationReport:
    """Verifier must reject every single-entry mutation"""
    settings = get_settings()
    total = settings.cert_mutations if mutations is None else mutations
    rng = random.Random(settings.sample_seed if seed is None else seed)
    if not certificate.entries:
        return MutationReport(total=0, rejected=0)
    report = MutationReport(total=total, rejected=0)
    for _ in range(total):
        mutated, description = mutate_certificate(certificate, rng)
        if verify_certificate(mutated).accepted:
            report.accepted_mutations.append(description)
        else:
            report.rejected += 1
    logger.info(f"Negative control: {report.rejected}/{report.total} mutations rejected")
    return report


def certify_all(type_name: str, depth: Optional[int] = None) -> Dict[int, WcCertificate]:
    coxeter = affine_coxeter(type_name)
    return {s: generate_certificate(type_name, s, depth) for s in range(coxeter.rank)}
