"""
Exact arithmetic in the group of lower unitriangular integer matrices.

Generators s_i (1 <= i <= n-1) carry a single 1 in row i+1, column i.
Matrices act on integer vectors as matrix times column vector, so s_i adds
coordinate i to coordinate i+1. Word letters multiply left to right; the
induced action satisfies apply(a*b, q) = apply(a, apply(b, q)).
"""

import itertools
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator, List, Tuple

import numpy as np

from nilflow.core.exceptions import DimensionMismatchError, DomainError, ParseError

# Configure logging
logger = logging.getLogger(__name__)


class Order(Enum):
    LESS = -1
    EQUAL = 0
    GREATER = 1


@dataclass(frozen=True)
class LatticePoint:
    """Element (q_1, ..., q_n) of Z^n."""
    coords: Tuple[int, ...]

    def __post_init__(self):
        coords = tuple(int(c) for c in self.coords)
        if not coords:
            raise DomainError("LatticePoint needs at least one coordinate")
        object.__setattr__(self, 'coords', coords)

    @classmethod
    def of(cls, *coords: int) -> 'LatticePoint':
        return cls(tuple(coords))

    @classmethod
    def origin(cls, n: int) -> 'LatticePoint':
        return cls((0,) * n)

    @property
    def n(self) -> int:
        return len(self.coords)

    def __len__(self) -> int:
        return len(self.coords)

    def __iter__(self) -> Iterator[int]:
        return iter(self.coords)

    def __getitem__(self, index):
        return self.coords[index]

    def __sub__(self, other: 'LatticePoint') -> 'LatticePoint':
        _check_same_length(self, other)
        return LatticePoint(tuple(a - b for a, b in zip(self.coords, other.coords)))

    def __lt__(self, other: 'LatticePoint') -> bool:
        return lex_compare(self, other) is Order.LESS

    def __str__(self) -> str:
        return '(' + ','.join(str(c) for c in self.coords) + ')'


def _check_same_length(q: LatticePoint, r: LatticePoint) -> None:
    if len(q) != len(r):
        raise DimensionMismatchError(f"Lattice points of lengths {len(q)} and {len(r)}")


@dataclass(frozen=True)
class UnipotentMatrix:
    """
    n x n lower-triangular integer matrix with unit diagonal.

    Attributes:
        n: Dimension
        entries: Rows as tuples of Python ints
    """
    n: int
    entries: Tuple[Tuple[int, ...], ...]

    def __post_init__(self):
        rows = tuple(tuple(int(v) for v in row) for row in self.entries)
        if self.n < 1 or len(rows) != self.n or any(len(row) != self.n for row in rows):
            raise DimensionMismatchError(f"Expected a {self.n}x{self.n} matrix")
        for r in range(self.n):
            if rows[r][r] != 1:
                raise DomainError(f"Diagonal entry ({r + 1},{r + 1}) is {rows[r][r]}, not 1")
            if any(rows[r][c] != 0 for c in range(r + 1, self.n)):
                raise DomainError(f"Row {r + 1} has a nonzero entry above the diagonal")
        object.__setattr__(self, 'entries', rows)

    @classmethod
    def identity(cls, n: int) -> 'UnipotentMatrix':
        return cls(n, tuple(tuple(1 if r == c else 0 for c in range(n)) for r in range(n)))

    @classmethod
    def generator(cls, n: int, i: int, exponent: int = 1) -> 'UnipotentMatrix':
        """s_i ** exponent; the only off-diagonal entry sits at (i+1, i)."""
        if not 1 <= i <= n - 1:
            raise DomainError(f"Generator index {i} outside [1, {n - 1}]")
        rows = [[1 if r == c else 0 for c in range(n)] for r in range(n)]
        rows[i][i - 1] = exponent
        return cls(n, tuple(tuple(row) for row in rows))

    @property
    def is_identity(self) -> bool:
        return self == UnipotentMatrix.identity(self.n)

    def to_array(self) -> np.ndarray:
        return np.array(self.entries, dtype=object)

    def __matmul__(self, other: 'UnipotentMatrix') -> 'UnipotentMatrix':
        return mat_mul(self, other)

    def __str__(self) -> str:
        return '[' + '; '.join(' '.join(str(v) for v in row) for row in self.entries) + ']'


def mat_mul(a: UnipotentMatrix, b: UnipotentMatrix) -> UnipotentMatrix:
    """Exact product a*b; lower-triangular structure limits the inner sum to c <= k <= r."""
    if a.n != b.n:
        raise DimensionMismatchError(f"Cannot multiply {a.n}x{a.n} by {b.n}x{b.n}")
    n = a.n
    rows = []
    for r in range(n):
        row = []
        for c in range(n):
            if c > r:
                row.append(0)
            else:
                row.append(sum(a.entries[r][k] * b.entries[k][c] for k in range(c, r + 1)))
        rows.append(tuple(row))
    return UnipotentMatrix(n, tuple(rows))


def mat_inverse(a: UnipotentMatrix) -> UnipotentMatrix:
    """
    Exact inverse via the finite Neumann series.

    With N = a - I nilpotent (N**n = 0), a^{-1} = I - N + N^2 - ... +- N^{n-1}.
    """
    n = a.n
    nil = [[a.entries[r][c] - (1 if r == c else 0) for c in range(n)] for r in range(n)]
    result = [[1 if r == c else 0 for c in range(n)] for r in range(n)]
    power = [row[:] for row in result]
    for k in range(1, n):
        power = [[sum(power[r][j] * nil[j][c] for j in range(n)) for c in range(n)] for r in range(n)]
        sign = -1 if k % 2 else 1
        for r in range(n):
            for c in range(n):
                result[r][c] += sign * power[r][c]
    return UnipotentMatrix(n, tuple(tuple(row) for row in result))


@dataclass(frozen=True)
class GroupWord:
    """
    Word in the generators s_i and their inverses.

    Text form: whitespace separated letters, ``s1`` for a generator and
    ``S1`` for its inverse.
    """
    letters: Tuple[Tuple[int, int], ...] = ()

    def __post_init__(self):
        letters = tuple((int(i), int(e)) for i, e in self.letters)
        for i, e in letters:
            if i < 1:
                raise DomainError(f"Generator index {i} must be >= 1")
            if e not in (1, -1):
                raise DomainError(f"Letter exponent must be +1 or -1, got {e}")
        object.__setattr__(self, 'letters', letters)

    @classmethod
    def parse(cls, text: str) -> 'GroupWord':
        letters = []
        for token in text.split():
            if len(token) < 2 or token[0] not in 'sS' or not token[1:].isdigit():
                raise ParseError(f"Bad generator letter '{token}' (expected s<i> or S<i>)")
            letters.append((int(token[1:]), 1 if token[0] == 's' else -1))
        return cls(tuple(letters))

    def inverse(self) -> 'GroupWord':
        return GroupWord(tuple((i, -e) for i, e in reversed(self.letters)))

    def __add__(self, other: 'GroupWord') -> 'GroupWord':
        return GroupWord(self.letters + other.letters)

    def __len__(self) -> int:
        return len(self.letters)

    def max_index(self) -> int:
        return max((i for i, _ in self.letters), default=0)

    def __str__(self) -> str:
        return ' '.join(('s' if e > 0 else 'S') + str(i) for i, e in self.letters)


def word_eval(word: GroupWord, n: int) -> UnipotentMatrix:
    """
    Matrix of a word: product of the generator matrices in word order.

    Raises:
        DomainError: if a letter index is outside [1, n-1]
    """
    if word.max_index() > n - 1:
        raise DomainError(f"Word '{word}' uses generators beyond s{n - 1}")
    result = UnipotentMatrix.identity(n)
    for i, e in word.letters:
        result = mat_mul(result, UnipotentMatrix.generator(n, i, e))
    return result


def apply_to_lattice(a: UnipotentMatrix, q: LatticePoint) -> LatticePoint:
    """Matrix times column vector over Z."""
    if a.n != len(q):
        raise DimensionMismatchError(f"{a.n}x{a.n} matrix applied to a point of length {len(q)}")
    return LatticePoint(tuple(
        sum(a.entries[r][c] * q.coords[c] for c in range(r + 1)) for r in range(a.n)
    ))


def lex_compare(q: LatticePoint, r: LatticePoint) -> Order:
    """Lexicographic comparison; the first coordinate is most significant."""
    _check_same_length(q, r)
    for a, b in zip(q.coords, r.coords):
        if a != b:
            return Order.LESS if a < b else Order.GREATER
    return Order.EQUAL


def lex_successor(q: LatticePoint) -> LatticePoint:
    return LatticePoint(q.coords[:-1] + (q.coords[-1] + 1,))


def lex_predecessor(q: LatticePoint) -> LatticePoint:
    return LatticePoint(q.coords[:-1] + (q.coords[-1] - 1,))


def lattice_box(n: int, radius: int) -> List[LatticePoint]:
    """All points with |q_i| <= radius, in increasing lexicographic order."""
    span = range(-radius, radius + 1)
    return [LatticePoint(coords) for coords in itertools.product(span, repeat=n)]


def random_word(rng: np.random.Generator, n: int, length: int) -> GroupWord:
    """Uniform random word of the given length over s_1..s_{n-1} and inverses."""
    if n < 2:
        return GroupWord()
    indices = rng.integers(1, n, size=length)
    signs = rng.choice([-1, 1], size=length)
    return GroupWord(tuple((int(i), int(e)) for i, e in zip(indices, signs)))


def generators(n: int) -> List[UnipotentMatrix]:
    return [UnipotentMatrix.generator(n, i) for i in range(1, n)]


def words_up_to(n: int, length: int) -> Iterable[GroupWord]:
    """Every word of length <= length (freely unreduced), shortest first."""
    letters = [(i, e) for i in range(1, n) for e in (1, -1)]
    for size in range(length + 1):
        for combo in itertools.product(letters, repeat=size):
            yield GroupWord(tuple(combo))


def as_matrix(element, n: int) -> UnipotentMatrix:
    """Accept a matrix, a GroupWord or word text."""
    if isinstance(element, UnipotentMatrix):
        if element.n != n:
            raise DimensionMismatchError(f"Expected dimension {n}, got {element.n}")
        return element
    if isinstance(element, str):
        element = GroupWord.parse(element)
    if isinstance(element, GroupWord):
        return word_eval(element, n)
    raise TypeError(f"Cannot interpret {type(element).__name__} as a group element")
