"""
Exact arithmetic for crystallographic Coxeter systems.

Elements of W act on the root lattice in the simple-root basis through integer
matrices built from Cartan pairings, so finite and affine types share one code
path and nothing is ever rounded.
"""
import logging
import math
from enum import Enum
from fractions import Fraction
from itertools import product
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from errors import (
    CoefficientOverflowError,
    DomainError,
    FixtureValidationError,
    StructuralError,
    UnsupportedInstanceError,
)

logger = logging.getLogger("coxeter")

INFINITY = math.inf

# a_st * a_ts per Coxeter label
PAIRING_PRODUCTS = {2: 0, 3: 1, 4: 2, 6: 3, INFINITY: 4}
ORDER_FROM_PAIRING = {0: 2, 1: 3, 2: 4, 3: 6}
INT64_LIMIT = 2 ** 62

# Largest finite crystallographic Weyl group per rank
MAX_FINITE_ORDER = {0: 1, 1: 2, 2: 12, 3: 48, 4: 1152}
TABLE_ORDER_LIMIT = 50000

# Unlisted pairs carry label 2
NAMED_TYPES: Dict[str, Tuple[int, Dict[Tuple[int, int], float]]] = {
    "A1": (1, {}),
    "A1xA1": (2, {}),
    "A2": (2, {(0, 1): 3}),
    "A3": (3, {(0, 1): 3, (1, 2): 3}),
    "C2": (2, {(0, 1): 4}),
    "C3": (3, {(0, 1): 3, (1, 2): 4}),
    "G2": (2, {(0, 1): 6}),
    "~A2": (3, {(0, 1): 3, (1, 2): 3, (0, 2): 3}),
    "~C2": (3, {(0, 1): 4, (1, 2): 4}),
    "~G2": (3, {(0, 1): 6, (1, 2): 3}),
}
AFFINE_RANK3_TYPES = ("~A2", "~C2", "~G2")


def _normalize_label(value) -> float:
    if isinstance(value, str):
        token = value.strip().lower()
        if token in ("inf", "infinity", "∞"):
            return INFINITY
        try:
            value = int(token)
        except ValueError:
            raise DomainError(f"Unreadable Coxeter label {value!r}")
    # non-positive labels mean infinity, as in diagram notation
    if value == INFINITY or value <= 0:
        return INFINITY
    if isinstance(value, float) and not value.is_integer():
        raise DomainError(f"Coxeter label {value} is not an integer")
    return int(value)


def _exact_sqrt(value: Fraction) -> int:
    if value.denominator != 1:
        raise StructuralError(f"Pairing product {value} is not integral")
    root = math.isqrt(value.numerator)
    if root * root != value.numerator:
        raise StructuralError(f"Pairing product {value} is not a square")
    return root


def _checked_product(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    bound = int(np.abs(a).max(initial=0)) * int(np.abs(b).max(initial=0)) * a.shape[-1]
    if bound > INT64_LIMIT:
        raise CoefficientOverflowError(INT64_LIMIT)
    return a @ b


class CoxeterMatrix:
    """Coxeter matrix with labels in {2, 3, 4, 6, inf} and its integral realization"""

    def __init__(self, entries: Sequence[Sequence], labels: Optional[Sequence[str]] = None,
                 name: Optional[str] = None):
        rows = [list(row) for row in entries]
        rank = len(rows)
        if rank == 0:
            raise DomainError("A Coxeter matrix needs at least one generator")

        normalized = []
        for i, row in enumerate(rows):
            if len(row) != rank:
                raise DomainError(f"Row {i} has {len(row)} entries, expected {rank}")
            normalized.append([_normalize_label(v) for v in row])

        for i in range(rank):
            if normalized[i][i] != 1:
                raise DomainError(f"Diagonal entry m_{i}{i} must be 1")
            for j in range(rank):
                if i == j:
                    continue
                m = normalized[i][j]
                if m != normalized[j][i]:
                    raise DomainError(f"Coxeter matrix is not symmetric at ({i}, {j})")
                if m not in PAIRING_PRODUCTS:
                    raise DomainError(f"Label {m} at ({i}, {j}) is not crystallographic")

        self.rank = rank
        self.entries: Tuple[Tuple[float, ...], ...] = tuple(tuple(row) for row in normalized)
        self.labels = tuple(labels) if labels else tuple(f"s{i + 1}" for i in range(rank))
        if len(self.labels) != rank:
            raise DomainError("One label per generator is required")
        self.name = name

        self.cartan, self.symmetrizer = self._realize()
        self.form = (np.diag(self.symmetrizer) @ self.cartan).astype(np.int64)
        self.generator_matrices = tuple(self._generator_matrix(s) for s in range(rank))
        self._table: Optional["WeylGroupTable"] = None
        self._spherical: Dict[FrozenSet[int], bool] = {}

    @classmethod
    def named(cls, name: str) -> "CoxeterMatrix":
        """Build one of the named types (A2, C3, ~G2, ...)"""
        if name not in NAMED_TYPES:
            raise DomainError(f"Unknown Coxeter type {name!r}; known: {', '.join(NAMED_TYPES)}")
        rank, labels = NAMED_TYPES[name]
        entries = [[1 if i == j else 2 for j in range(rank)] for i in range(rank)]
        for (i, j), m in labels.items():
            entries[i][j] = entries[j][i] = m
        return cls(entries, name=name)

    @classmethod
    def from_text(cls, text: str, source: str = "Coxeter matrix text") -> "CoxeterMatrix":
        """Parse 'rank' followed by the upper triangle of labels, 'inf' for infinity"""
        lines = [line.split("#", 1)[0].strip() for line in text.splitlines()]
        lines = [line for line in lines if line]
        if not lines:
            raise FixtureValidationError(source, ["empty input"])
        try:
            rank = int(lines[0])
        except ValueError:
            raise FixtureValidationError(source, [f"first line must be the rank, got {lines[0]!r}"])
        if rank < 1:
            raise FixtureValidationError(source, ["rank must be positive"])
        tokens = " ".join(lines[1:]).split()
        expected = rank * (rank - 1) // 2
        if len(tokens) != expected:
            raise FixtureValidationError(source, [f"expected {expected} labels, got {len(tokens)}"])
        entries = [[1] * rank for _ in range(rank)]
        position = 0
        for i in range(rank):
            for j in range(i + 1, rank):
                entries[i][j] = entries[j][i] = tokens[position]
                position += 1
        try:
            return cls(entries)
        except DomainError as e:
            raise FixtureValidationError(source, [str(e)])

    def to_text(self) -> str:
        lines = [str(self.rank)]
        for i in range(self.rank - 1):
            lines.append(" ".join(
                "inf" if self.entries[i][j] == INFINITY else str(int(self.entries[i][j]))
                for j in range(i + 1, self.rank)
            ))
        return "\n".join(lines) + "\n"

    def m(self, s: int, t: int) -> float:
        return self.entries[s][t]

    def __eq__(self, other) -> bool:
        return isinstance(other, CoxeterMatrix) and self.entries == other.entries

    def __hash__(self) -> int:
        return hash(self.entries)

    def __repr__(self) -> str:
        return f"CoxeterMatrix({self.name or self.entries})"

    def _realize(self) -> Tuple[np.ndarray, List[int]]:
        """Pick a symmetrizable integral Cartan matrix, longer root on the lower index first"""
        edges = [(i, j, self.entries[i][j])
                 for i in range(self.rank) for j in range(i + 1, self.rank)
                 if self.entries[i][j] != 2]
        options = []
        for _, _, m in edges:
            if m == 3:
                options.append((Fraction(1),))
            elif m == 4:
                options.append((Fraction(1, 2), Fraction(2)))
            elif m == 6:
                options.append((Fraction(1, 3), Fraction(3)))
            else:
                options.append((Fraction(1), Fraction(1, 4), Fraction(4)))

        for ratios in product(*options):
            weights = self._propagate_ratios(edges, ratios)
            if weights is not None:
                break
        else:
            raise DomainError(f"{self!r} has no symmetrizable crystallographic realization")

        scale = math.lcm(*(w.denominator for w in weights))
        symmetrizer = [int(w * scale) for w in weights]

        cartan = 2 * np.eye(self.rank, dtype=np.int64)
        for (i, j, m), ratio in zip(edges, ratios):
            pairing = PAIRING_PRODUCTS[m]
            cartan[i, j] = -_exact_sqrt(ratio * pairing)
            cartan[j, i] = -_exact_sqrt(pairing / ratio)
        return cartan, symmetrizer

    def _propagate_ratios(self, edges, ratios) -> Optional[List[Fraction]]:
        neighbours: Dict[int, List[Tuple[int, Fraction]]] = {i: [] for i in range(self.rank)}
        for (i, j, _), ratio in zip(edges, ratios):
            neighbours[i].append((j, ratio))
            neighbours[j].append((i, 1 / ratio))
        weights: List[Optional[Fraction]] = [None] * self.rank
        for start in range(self.rank):
            if weights[start] is not None:
                continue
            weights[start] = Fraction(1)
            stack = [start]
            while stack:
                i = stack.pop()
                for j, ratio in neighbours[i]:
                    value = weights[i] * ratio
                    if weights[j] is None:
                        weights[j] = value
                        stack.append(j)
                    elif weights[j] != value:
                        return None
        return weights

    def _generator_matrix(self, s: int) -> np.ndarray:
        matrix = np.eye(self.rank, dtype=np.int64)
        matrix[s, :] -= self.cartan[s, :]
        matrix.setflags(write=False)
        return matrix

    def identity(self) -> "WeylElement":
        eye = np.eye(self.rank, dtype=np.int64)
        return WeylElement(self, eye, eye, word=())

    def generator(self, s: int) -> "WeylElement":
        if not 0 <= s < self.rank:
            raise DomainError(f"Generator index {s} out of range for rank {self.rank}")
        matrix = self.generator_matrices[s]
        return WeylElement(self, matrix, matrix, word=(s,))

    def element(self, word: Iterable[int]) -> "WeylElement":
        result = self.identity()
        for s in word:
            result = result * self.generator(s)
        return result

    def simple_root(self, s: int) -> "Root":
        coords = [0] * self.rank
        coords[s] = 1
        return Root(self, coords)

    def generator_index(self, token) -> int:
        """Resolve a generator given as index or label"""
        if isinstance(token, int):
            index = token
        elif str(token).isdigit():
            index = int(token)
        elif token in self.labels:
            return self.labels.index(token)
        else:
            raise DomainError(f"Unknown generator {token!r}")
        if not 0 <= index < self.rank:
            raise DomainError(f"Generator index {index} out of range for rank {self.rank}")
        return index

    def is_spherical(self, subset: Iterable[int]) -> bool:
        key = frozenset(subset)
        if key not in self._spherical:
            self._spherical[key] = _decide_spherical(self, sorted(key))
        return self._spherical[key]

    def is_finite(self) -> bool:
        return self.is_spherical(range(self.rank))

    def longest_element(self, subset: Iterable[int]) -> "WeylElement":
        return longest_element(self, subset)

    def weyl_table(self) -> "WeylGroupTable":
        if self._table is None:
            self._table = WeylGroupTable(self)
        return self._table


class WeylElement:
    """An element of W as an integer matrix on the simple-root basis, with its inverse"""

    __slots__ = ("coxeter", "matrix", "inverse_matrix", "_word", "_hash")

    def __init__(self, coxeter: CoxeterMatrix, matrix: np.ndarray, inverse_matrix: np.ndarray,
                 word: Optional[Tuple[int, ...]] = None):
        self.coxeter = coxeter
        self.matrix = matrix
        self.inverse_matrix = inverse_matrix
        self._word = word
        self._hash = None

    @property
    def word(self) -> Tuple[int, ...]:
        """ShortLex-minimal reduced word, by stripping the smallest left descent"""
        if self._word is None:
            word = []
            matrix, inverse = self.matrix, self.inverse_matrix
            while True:
                descent = _first_nonpositive_column(inverse)
                if descent is None:
                    break
                word.append(descent)
                generator = self.coxeter.generator_matrices[descent]
                matrix = _checked_product(generator, matrix)
                inverse = _checked_product(inverse, generator)
            if not np.array_equal(matrix, np.eye(self.coxeter.rank, dtype=np.int64)):
                raise StructuralError("Descent stripping did not reach the identity")
            self._word = tuple(word)
        return self._word

    def length(self) -> int:
        return len(self.word)

    def is_identity(self) -> bool:
        return np.array_equal(self.matrix, np.eye(self.coxeter.rank, dtype=np.int64))

    def inverse(self) -> "WeylElement":
        return WeylElement(self.coxeter, self.inverse_matrix, self.matrix)

    def left_descents(self) -> List[int]:
        return [s for s in range(self.coxeter.rank) if (self.inverse_matrix[:, s] <= 0).all()]

    def right_descents(self) -> List[int]:
        return [s for s in range(self.coxeter.rank) if (self.matrix[:, s] <= 0).all()]

    def act(self, root: "Root") -> "Root":
        _require_same(self.coxeter, root.coxeter)
        return Root(self.coxeter, _checked_product(self.matrix, root.vector))

    def word_string(self) -> str:
        if not self.word:
            return "1"
        return "".join(self.coxeter.labels[s] for s in self.word)

    def __mul__(self, other: "WeylElement") -> "WeylElement":
        return multiply(self, other)

    def __eq__(self, other) -> bool:
        return (isinstance(other, WeylElement)
                and self.coxeter == other.coxeter
                and np.array_equal(self.matrix, other.matrix))

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.coxeter.rank, self.matrix.tobytes()))
        return self._hash

    def __repr__(self) -> str:
        return f"WeylElement({self.word_string()})"


class Root:
    """A real root as integer coordinates in the simple-root basis"""

    __slots__ = ("coxeter", "coords")

    def __init__(self, coxeter: CoxeterMatrix, coords: Iterable[int]):
        values = tuple(int(c) for c in coords)
        if len(values) != coxeter.rank:
            raise DomainError(f"Root needs {coxeter.rank} coordinates, got {len(values)}")
        if not any(values):
            raise StructuralError("The zero vector is not a root")
        if any(c > 0 for c in values) and any(c < 0 for c in values):
            raise StructuralError(f"Root coordinates {values} have mixed signs")
        self.coxeter = coxeter
        self.coords = values

    @property
    def vector(self) -> np.ndarray:
        return np.array(self.coords, dtype=np.int64)

    @property
    def sign(self) -> str:
        return "+" if self.is_positive else "-"

    @property
    def is_positive(self) -> bool:
        return any(c > 0 for c in self.coords)

    def inner(self, other: "Root") -> int:
        _require_same(self.coxeter, other.coxeter)
        return int(self.vector @ self.coxeter.form @ other.vector)

    def norm2(self) -> int:
        return self.inner(self)

    def coroot_pairing(self, other: "Root") -> int:
        """<self, other^vee> = 2 (self, other) / (other, other)"""
        value = Fraction(2 * self.inner(other), other.norm2())
        if value.denominator != 1:
            raise StructuralError(f"Pairing of {self} with {other} is not integral")
        return int(value)

    def reflect(self, other: "Root") -> "Root":
        """Image of other under the reflection in self"""
        k = other.coroot_pairing(self)
        return Root(self.coxeter, [o - k * c for o, c in zip(other.coords, self.coords)])

    def reflection(self) -> WeylElement:
        rank = self.coxeter.rank
        vector = self.vector
        numerators = 2 * (self.coxeter.form @ vector)
        norm = self.norm2()
        if any(int(n) % norm for n in numerators):
            raise StructuralError(f"Reflection in {self} is not integral")
        functional = numerators // norm
        matrix = np.eye(rank, dtype=np.int64) - np.outer(vector, functional)
        matrix.setflags(write=False)
        return WeylElement(self.coxeter, matrix, matrix)

    def depth(self) -> int:
        return root_depth(self)

    def __neg__(self) -> "Root":
        return Root(self.coxeter, [-c for c in self.coords])

    def __eq__(self, other) -> bool:
        return isinstance(other, Root) and self.coxeter == other.coxeter and self.coords == other.coords

    def __lt__(self, other: "Root") -> bool:
        return (not self.is_positive, sum(map(abs, self.coords)), self.coords) < \
            (not other.is_positive, sum(map(abs, other.coords)), other.coords)

    def __hash__(self) -> int:
        return hash(self.coords)

    def __repr__(self) -> str:
        return f"Root({self.sign}, {self.coords})"


class ExchangeOutcome(Enum):
    LENGTH_DROP_2 = "LengthDrop2"
    EQUAL = "Equal"


def _first_nonpositive_column(matrix: np.ndarray) -> Optional[int]:
    for s in range(matrix.shape[1]):
        if (matrix[:, s] <= 0).all():
            return s
    return None


def _require_same(a: CoxeterMatrix, b: CoxeterMatrix) -> None:
    if a is not b and a != b:
        raise StructuralError(f"Mismatched Coxeter matrices {a!r} and {b!r}")


def multiply(a: WeylElement, b: WeylElement) -> WeylElement:
    _require_same(a.coxeter, b.coxeter)
    return WeylElement(
        a.coxeter,
        _checked_product(a.matrix, b.matrix),
        _checked_product(b.inverse_matrix, a.inverse_matrix),
    )


def length(w: WeylElement) -> int:
    return w.length()


def _positive_definite(form: np.ndarray) -> bool:
    """Sylvester's criterion in exact arithmetic"""
    size = form.shape[0]
    rows = [[Fraction(int(x)) for x in row] for row in form]
    for k in range(size):
        pivot = rows[k][k]
        if pivot <= 0:
            return False
        for i in range(k + 1, size):
            factor = rows[i][k] / pivot
            for j in range(k, size):
                rows[i][j] -= factor * rows[k][j]
    return True


def _enumerate_parabolic(coxeter: CoxeterMatrix, subset: List[int], bound: int) -> Optional[int]:
    """Order of <subset> if it closes within bound, else None"""
    seen = {coxeter.identity()}
    frontier = list(seen)
    while frontier:
        fresh = []
        for w in frontier:
            for s in subset:
                ws = w * coxeter.generator(s)
                if ws not in seen:
                    seen.add(ws)
                    fresh.append(ws)
                    if len(seen) > bound:
                        return None
        frontier = fresh
    return len(seen)


def _decide_spherical(coxeter: CoxeterMatrix, subset: List[int]) -> bool:
    if not subset:
        return True
    definite = _positive_definite(coxeter.form[np.ix_(subset, subset)])
    bound = MAX_FINITE_ORDER.get(len(subset))
    if bound is None:
        logger.debug(f"Rank {len(subset)} parabolic decided by the form alone")
        return definite
    order = _enumerate_parabolic(coxeter, subset, bound)
    if (order is not None) != definite:
        raise StructuralError(
            f"Sphericity tests disagree for {subset}: enumeration order {order}, definite={definite}"
        )
    return definite


def is_spherical(coxeter: CoxeterMatrix, subset: Iterable[int]) -> bool:
    return coxeter.is_spherical(subset)


def longest_element(coxeter: CoxeterMatrix, subset: Iterable[int]) -> WeylElement:
    """r_J, built by right multiplication while some w(alpha_s) stays positive"""
    generators = sorted(set(subset))
    if not coxeter.is_spherical(generators):
        raise DomainError(f"Generators {generators} do not span a finite subgroup")
    w = coxeter.identity()
    while True:
        ascent = next((s for s in generators if (w.matrix[:, s] >= 0).all()), None)
        if ascent is None:
            return w
        w = w * coxeter.generator(ascent)


def check_exchange_variant(w: WeylElement, s: int, t: int) -> ExchangeOutcome:
    coxeter = w.coxeter
    gs, gt = coxeter.generator(s), coxeter.generator(t)
    base = w.length()
    if (gs * w).length() != base - 1 or (w * gt).length() != base - 1:
        raise DomainError(f"Need l(sw) = l(w) - 1 = l(wt) for w={w}, s={s}, t={t}")
    swt = gs * w * gt
    if swt.length() == base - 2:
        return ExchangeOutcome.LENGTH_DROP_2
    if swt == w:
        return ExchangeOutcome.EQUAL
    raise StructuralError(f"Exchange dichotomy violated for w={w}, s={s}, t={t}")


def reflection_product_order(a: Root, b: Root) -> float:
    """Order of r_a r_b from the pairing product <a,b^vee><b,a^vee>"""
    _require_same(a.coxeter, b.coxeter)
    if a == b or a == -b:
        raise DomainError(f"Roots {a} and {b} are proportional")
    product_value = Fraction(4 * a.inner(b) ** 2, a.norm2() * b.norm2())
    if product_value >= 4:
        return INFINITY
    if product_value.denominator != 1 or int(product_value) not in ORDER_FROM_PAIRING:
        raise StructuralError(f"Non-crystallographic pairing {product_value} for {a}, {b}")
    return ORDER_FROM_PAIRING[int(product_value)]


def root_depth(root: Root) -> int:
    """Depth of a positive root: one more than the number of descent steps to a simple root"""
    if not root.is_positive:
        raise DomainError(f"Depth is defined for positive roots, got {root}")
    return len(descent_sequence(root)[0]) + 1


def descent_sequence(root: Root) -> Tuple[List[int], int]:
    """Generators (s_0, ..., s_{k-1}) and t with root = s_0 ... s_{k-1} alpha_t"""
    coxeter = root.coxeter
    current = root
    steps: List[int] = []
    while sum(current.coords) != 1:
        vector = current.vector @ coxeter.form
        s = next((i for i in range(coxeter.rank) if vector[i] > 0), None)
        if s is None:
            raise StructuralError(f"No descent available for {current}")
        steps.append(s)
        current = coxeter.simple_root(s).reflect(current)
        if not current.is_positive:
            raise StructuralError(f"Descent left the positive roots at {current}")
    return steps, current.coords.index(1)


def positive_roots_up_to_depth(coxeter: CoxeterMatrix, depth: int) -> List[Root]:
    """All positive roots of depth at most depth, sorted"""
    if depth < 1:
        return []
    layer = [coxeter.simple_root(s) for s in range(coxeter.rank)]
    seen = set(layer)
    for _ in range(depth - 1):
        fresh = []
        for beta in layer:
            vector = beta.vector @ coxeter.form
            for s in range(coxeter.rank):
                if vector[s] < 0:
                    image = coxeter.simple_root(s).reflect(beta)
                    if image not in seen:
                        seen.add(image)
                        fresh.append(image)
        if not fresh:
            break
        layer = fresh
    return sorted(seen)


def root_interval(a: Root, b: Root) -> FrozenSet[Root]:
    """[a, b] computed from root half-sets in the thin building"""
    _require_same(a.coxeter, b.coxeter)
    coxeter = a.coxeter
    if a == b:
        raise DomainError("A root interval needs two distinct roots")
    if not coxeter.is_finite():
        raise UnsupportedInstanceError("root_interval", "W is infinite")
    table = coxeter.weyl_table()
    every = frozenset(range(table.order))
    half_a, half_b = table.root_half(a), table.root_half(b)
    both = half_a & half_b
    neither = (every - half_a) & (every - half_b)
    if not both or not neither:
        raise DomainError(f"Roots {a} and {b} are not prenilpotent")
    return frozenset(
        gamma for gamma in table.roots()
        if both <= table.root_half(gamma) and neither.isdisjoint(table.root_half(gamma))
    )


class WeylGroupTable:
    """Enumerated finite W: elements in ShortLex order with multiplication data"""

    def __init__(self, coxeter: CoxeterMatrix):
        if not coxeter.is_finite():
            raise UnsupportedInstanceError("WeylGroupTable", f"{coxeter!r} is infinite")
        self.coxeter = coxeter
        rank = coxeter.rank

        layers = [[coxeter.identity()]]
        seen = {layers[0][0]}
        while True:
            fresh = []
            for w in layers[-1]:
                for s in range(rank):
                    if (w.matrix[:, s] >= 0).all():
                        ws = w * coxeter.generator(s)
                        if ws not in seen:
                            seen.add(ws)
                            fresh.append(ws)
            if not fresh:
                break
            layers.append(fresh)
            if len(seen) > TABLE_ORDER_LIMIT:
                raise UnsupportedInstanceError("WeylGroupTable", f"order above {TABLE_ORDER_LIMIT}")

        ordered = sorted(
            ((level, w.word, w) for level, layer in enumerate(layers) for w in layer),
            key=lambda item: (item[0], item[1]),
        )
        self.elements: List[WeylElement] = [w for _, _, w in ordered]
        self.words: List[Tuple[int, ...]] = [word for _, word, _ in ordered]
        self.order = len(self.elements)
        self.index: Dict[WeylElement, int] = {w: i for i, w in enumerate(self.elements)}
        self.lengths = np.array([len(word) for word in self.words], dtype=np.int64)
        self.support = np.array([sum(1 << s for s in set(word)) for word in self.words], dtype=np.int64)

        self.right_gen = np.empty((self.order, rank), dtype=np.int64)
        self.left_gen = np.empty((self.order, rank), dtype=np.int64)
        for i, w in enumerate(self.elements):
            for s in range(rank):
                self.right_gen[i, s] = self.index[w * coxeter.generator(s)]
                self.left_gen[i, s] = self.index[coxeter.generator(s) * w]

        self.mult = np.empty((self.order, self.order), dtype=np.int64)
        self.mult[:, 0] = np.arange(self.order)
        for j in range(1, self.order):
            last = self.words[j][-1]
            prefix = self.right_gen[j, last]
            self.mult[:, j] = self.right_gen[self.mult[:, prefix], last]
        self.inverse = np.argmin(self.mult, axis=1)
        self.longest = int(np.argmax(self.lengths))
        self.generator_indices = [int(self.right_gen[0, s]) for s in range(rank)]
        self._inverse_stack = np.stack([w.inverse_matrix for w in self.elements])
        self._roots: Optional[List[Root]] = None
        logger.debug(f"Enumerated {self.order} elements of {coxeter!r}")

    def element(self, i: int) -> WeylElement:
        return self.elements[i]

    def index_of(self, w: WeylElement) -> int:
        return self.index[w]

    def parabolic_mask(self, subset: Iterable[int]) -> int:
        return sum(1 << s for s in set(subset))

    def in_parabolic(self, i, subset: Iterable[int]):
        """Membership of element index (or index array) in <subset>"""
        mask = self.parabolic_mask(subset)
        return (self.support[i] & ~mask) == 0

    def longest_in(self, subset: Iterable[int]) -> int:
        members = np.flatnonzero(self.in_parabolic(np.arange(self.order), subset))
        return int(members[np.argmax(self.lengths[members])])

    def conjugation_map(self, k: int) -> np.ndarray:
        """Index array of i -> k i k^-1"""
        return self.mult[self.mult[k, :], self.inverse[k]]

    def generator_permutation(self, k: int) -> List[int]:
        """Generator images under conjugation by k, when k normalizes S"""
        conj = self.conjugation_map(k)
        lookup = {g: s for s, g in enumerate(self.generator_indices)}
        images = [lookup.get(int(conj[g])) for g in self.generator_indices]
        if any(image is None for image in images):
            raise DomainError("Conjugation does not permute the simple generators")
        return images

    def roots(self) -> List[Root]:
        if self._roots is None:
            found = {w.act(self.coxeter.simple_root(s)) for w in self.elements for s in range(self.coxeter.rank)}
            self._roots = sorted(found)
        return self._roots

    def root_half(self, root: Root) -> FrozenSet[int]:
        """{w : w^-1 root > 0}"""
        images = self._inverse_stack @ root.vector
        return frozenset(np.flatnonzero(images.sum(axis=1) > 0).tolist())
