"""
A C-infinity nilpotent group acting on the real line.

The generators are the translation f(x) = x - 1 and maps h_k built from one
bump diffeomorphism alpha of [0, 1]:

    alpha(x) = x + delta * beta(x),   beta(x) = exp(-1 / (x (1 - x)))

extended to R cell by cell (alpha(m + y) = m + alpha(y)). On the cell
[m, m + 1] the map h_k acts as the E_k(m)-th power of alpha, with
E_0 = 1, E_1(m) = m, E_k = 0 on the cells [0, 1] and [-1, 0] for k >= 2,
and E_k(m) - E_k(m - 1) = E_{k-1}(m), which is what makes
f^{-1} h_k^{-1} f h_k = h_{k-1}. The closed form is binom(m + k - 1, k).

Points are tracked symbolically as (cell, exponent, seed): the point
cell + alpha^exponent(seed) with seed in [0, 1). Words only touch the integer
state; alpha powers are evaluated once, at the end.
"""

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Dict, List, Tuple

import numpy as np

from nilflow.core.certified_reals import (
    Enclosure,
    exp_raw,
    settle,
    to_fraction,
    tol_bits,
)
from nilflow.core.config import DEFAULT_TOL, summation_budget
from nilflow.core.exceptions import BudgetExhaustedError, DomainError, NonConvergenceError, ParseError

# Configure logging
logger = logging.getLogger(__name__)

DEFAULT_DEPTH = 8
GRID_BITS = 10
BETA_SECOND_DERIVATIVE_BOUND = 8
MAX_REFINEMENTS = 6

RECURSIVE = 'recursive'
EXPONENT_TABLE = 'exponent-table'
STRATEGIES = (RECURSIVE, EXPONENT_TABLE)


# ----------------------------------------------------------------------
# the bump
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class BumpMap:
    """
    alpha(x) = x + delta * beta(x) on [0, 1].

    Attributes:
        delta: Amplitude 1 / (4 ceil(sup |beta'|))
        beta_prime_bound: Certified upper bound of sup |beta'|
        grid_bits: Grid 2**-grid_bits used for the bound
    """
    delta: Fraction
    beta_prime_bound: Fraction
    grid_bits: int = GRID_BITS

    @property
    def lipschitz(self) -> Fraction:
        """Upper bound of alpha' (and 1 / lower bound of alpha')."""
        return 1 + self.delta * self.beta_prime_bound

    def to_json(self) -> Dict[str, str]:
        return {"delta": str(self.delta), "beta_prime_bound": str(self.beta_prime_bound),
                "grid_bits": str(self.grid_bits)}


def _beta_prime_upper(x: Fraction, bits: int) -> Fraction:
    y = 1 / (x * (1 - x))
    if y >= 64:
        # y^2 e^-y is decreasing past y = 2 and tiny here
        return Fraction(1, 1 << 40)
    value = exp_raw(-y, bits) * ((1 - 2 * x) * y * y)
    return max(abs(value.lo), abs(value.hi))


@lru_cache(maxsize=1)
def bump_map() -> BumpMap:
    """
    Build alpha with a certified derivative bound.

    sup |beta'| is bounded by the grid maximum plus L h / 2 with L = 8 an
    upper bound of |beta''|; delta * sup |beta'| <= 1/4 keeps alpha' > 0.
    """
    grid = 1 << GRID_BITS
    best = max(_beta_prime_upper(Fraction(i, grid), 48) for i in range(1, grid))
    bound = best + Fraction(BETA_SECOND_DERIVATIVE_BOUND, 2 * grid)
    delta = Fraction(1, 4 * math.ceil(bound))
    logger.debug(f"Bump built: sup|beta'| <= {float(bound):.5f}, delta = {delta}")
    return BumpMap(delta=delta, beta_prime_bound=bound)


def _alpha_point(y: Fraction, bits: int, delta: Fraction) -> Enclosure:
    if y <= 0 or y >= 1:
        return Enclosure.point(y)
    arg = 1 / (y * (1 - y))
    if arg >= bits + 16:
        beta = Enclosure(Fraction(0), Fraction(1, 1 << (bits + 16)))
    else:
        beta = exp_raw(-arg, bits + 8)
    return (y + delta * beta).round_out(bits + 4)


def _alpha(y: Enclosure, bits: int, delta: Fraction) -> Enclosure:
    low = _alpha_point(y.lo, bits, delta)
    if y.is_point:
        return low
    return Enclosure(low.lo, _alpha_point(y.hi, bits, delta).hi)


def _alpha_inverse_guess(z: float, delta: float) -> float:
    g = z
    for _ in range(40):
        if g <= 0.0 or g >= 1.0:
            break
        t = g * (1.0 - g)
        beta = math.exp(-1.0 / t)
        value = g + delta * beta - z
        slope = 1.0 + delta * beta * (1.0 - 2.0 * g) / (t * t) if beta > 0.0 else 1.0
        step = value / slope
        g -= step
        if abs(step) < 1e-17:
            break
    return min(max(g, 0.0), 1.0)


def _alpha_inverse_point(z: Fraction, bits: int, delta: Fraction) -> Enclosure:
    """Certified alpha^{-1}(z): alpha(lo) <= z <= alpha(hi) checked by enclosure."""
    if z <= 0 or z >= 1:
        return Enclosure.point(z)
    guess = Fraction(_alpha_inverse_guess(float(z), float(delta)))
    step = Fraction(1, 1 << bits)
    lo = max(Fraction(0), guess - step)
    while lo > 0 and _alpha_point(lo, bits, delta).hi > z:
        lo = max(Fraction(0), lo - step)
        step *= 2
    step = Fraction(1, 1 << bits)
    hi = min(Fraction(1), guess + step)
    while hi < 1 and _alpha_point(hi, bits, delta).lo < z:
        hi = min(Fraction(1), hi + step)
        step *= 2
    return Enclosure(lo, hi).round_out(bits + 4)


def _alpha_inverse(z: Enclosure, bits: int, delta: Fraction) -> Enclosure:
    low = _alpha_inverse_point(z.lo, bits, delta)
    if z.is_point:
        return low
    return Enclosure(low.lo, _alpha_inverse_point(z.hi, bits, delta).hi)


@lru_cache(maxsize=16384)
def _orbit(seed: Fraction, exponent: int, bits: int) -> Enclosure:
    bump = bump_map()
    value = Enclosure.point(seed)
    if exponent >= 0:
        for _ in range(exponent):
            value = _alpha(value, bits, bump.delta)
    else:
        for _ in range(-exponent):
            value = _alpha_inverse(value, bits, bump.delta)
    return value


@lru_cache(maxsize=16384)
def alpha_power(seed, exponent: int, tol=DEFAULT_TOL) -> Enclosure:
    """
    Enclosure of alpha^exponent(seed) for seed in [0, 1].

    Widths grow by at most the Lipschitz constant per step, so the working
    precision starts with that many extra bits and doubles until narrow.
    """
    seed = to_fraction(seed)
    tol = to_fraction(tol)
    if not 0 <= seed <= 1:
        raise DomainError(f"Seed {seed} outside [0, 1]")
    if exponent == 0 or seed in (0, 1):
        return Enclosure.point(seed)
    growth = abs(exponent) * math.log2(float(bump_map().lipschitz)) + abs(exponent).bit_length()
    bits = tol_bits(tol) + 8 + math.ceil(growth)
    for _ in range(MAX_REFINEMENTS):
        raw = _orbit(seed, exponent, bits)
        if raw.width <= tol / 4:
            return settle(raw, tol).clamp(0, 1)
        bits *= 2
    raise NonConvergenceError(f"alpha^{exponent}({seed}) did not reach width {tol}")


# ----------------------------------------------------------------------
# exponents
# ----------------------------------------------------------------------
def _check_depth(k: int, m: int, depth: int) -> None:
    if not 0 <= k <= depth:
        raise DomainError(f"Level k={k} outside [0, {depth}]")
    budget = summation_budget()
    if abs(m) * max(k, 1) > budget:
        raise BudgetExhaustedError(f"Cell {m} at level {k} exceeds budget {budget}")


@lru_cache(maxsize=None)
def _table(k: int, m: int) -> int:
    if k == 0:
        return 1
    if k == 1:
        return m
    if m >= 0:
        return sum(_table(k - 1, j) for j in range(1, m + 1))
    return -sum(_table(k - 1, j) for j in range(m + 1, 0))


def exponent_table(k: int, m: int, depth: int = DEFAULT_DEPTH) -> int:
    """
    H_k(m): the power of alpha by which h_k acts on [m, m + 1].

    Built from H_k(m) - H_k(m - 1) = H_{k-1}(m), H_k(0) = H_k(-1) = 0 (k >= 2),
    H_0 = 1 and H_1(m) = m.

    Raises:
        DomainError: k outside [0, depth]
    """
    _check_depth(k, m, depth)
    return _table(k, m)


def binomial_exponent(k: int, m: int) -> int:
    """Closed form binom(m + k - 1, k) (generalized), with H_0 = 1."""
    if k == 0:
        return 1
    product = 1
    for i in range(k):
        product *= m + k - 1 - i
    return product // math.factorial(k)


@lru_cache(maxsize=None)
def _inverse_step(k: int, m: int) -> int:
    """
    Net alpha exponent of h_k^{-1} on the cell [m, m + 1].

    Cells m >= 1 unfold h_k^{-1} = h_{k-1}^{-1} f^{-1} h_k^{-1} f and cells
    m <= -2 unfold h_k^{-1} = f h_{k-1} h_k^{-1} f^{-1}.
    """
    if k == 0:
        return -1
    if k == 1:
        return -m
    if m in (0, -1):
        return 0
    total = 0
    if m >= 1:
        for cell in range(1, m + 1):
            # f moves to cell - 1, h_k^{-1} acts there, f^{-1} returns, h_{k-1}^{-1} acts
            total = total + _inverse_step(k - 1, cell)
        return total
    for cell in range(-2, m - 1, -1):
        # f^{-1} moves to cell + 1, h_k^{-1} acts, h_{k-1} acts there, f returns
        total = total - _inverse_step(k - 1, cell + 1)
    return total


def recursive_exponent(k: int, m: int, depth: int = DEFAULT_DEPTH) -> int:
    """Exponent of h_k on [m, m + 1] from the recursion defining h_k^{-1}."""
    _check_depth(k, m, depth)
    return -_inverse_step(k, m)


# ----------------------------------------------------------------------
# words
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class Letter:
    kind: str  # 'f' or 'h'
    level: int  # k for h_k, 0 for f
    sign: int

    def inverse(self) -> 'Letter':
        return Letter(self.kind, self.level, -self.sign)

    def __str__(self) -> str:
        name = 'f' if self.kind == 'f' else f"h{self.level}"
        return name if self.sign > 0 else name.upper()


@dataclass(frozen=True)
class StaircaseElement:
    """
    Composition of f^{+-1} and h_k^{+-1}; the rightmost letter acts first.

    Attributes:
        letters: Letters in written order
        strategy: 'recursive' or 'exponent-table'
        depth: Largest admissible k
    """
    letters: Tuple[Letter, ...] = ()
    strategy: str = RECURSIVE
    depth: int = DEFAULT_DEPTH

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise DomainError(f"Unknown strategy '{self.strategy}'")
        for letter in self.letters:
            if letter.kind == 'h' and not 0 <= letter.level <= self.depth:
                raise DomainError(f"Letter {letter} beyond depth {self.depth}")

    def inverse(self) -> 'StaircaseElement':
        return StaircaseElement(tuple(l.inverse() for l in reversed(self.letters)),
                                self.strategy, self.depth)

    def then(self, other: 'StaircaseElement') -> 'StaircaseElement':
        """self o other (other acts first)."""
        return StaircaseElement(self.letters + other.letters, self.strategy,
                                max(self.depth, other.depth))

    def with_strategy(self, strategy: str) -> 'StaircaseElement':
        return StaircaseElement(self.letters, strategy, self.depth)

    @property
    def is_identity_word(self) -> bool:
        return not self.letters

    def __str__(self) -> str:
        return ' '.join(str(l) for l in self.letters)


def parse_staircase_word(text: str, strategy: str = RECURSIVE,
                         depth: int = DEFAULT_DEPTH) -> StaircaseElement:
    """
    Parse 'F H1 f h1' style words: f/F for f^{+-1}, h<k>/H<k> for h_k^{+-1}.

    Raises:
        ParseError: on unknown tokens
    """
    letters: List[Letter] = []
    for token in text.split():
        if token in ('f', 'F'):
            letters.append(Letter('f', 0, 1 if token == 'f' else -1))
        elif len(token) > 1 and token[0] in 'hH' and token[1:].isdigit():
            letters.append(Letter('h', int(token[1:]), 1 if token[0] == 'h' else -1))
        else:
            raise ParseError(f"Bad staircase letter '{token}' (expected f, F, h<k> or H<k>)")
    return StaircaseElement(tuple(letters), strategy, depth)


def commutator(a: StaircaseElement, b: StaircaseElement) -> StaircaseElement:
    """[a, b] = a^{-1} b^{-1} a b."""
    return a.inverse().then(b.inverse()).then(a).then(b)


def generator(name: str, strategy: str = RECURSIVE, depth: int = DEFAULT_DEPTH) -> StaircaseElement:
    return parse_staircase_word(name, strategy, depth)


# ----------------------------------------------------------------------
# evaluation
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class CellPoint:
    """The point cell + alpha^exponent(seed), seed in [0, 1)."""
    cell: int
    exponent: int
    seed: Fraction

    @classmethod
    def of(cls, x) -> 'CellPoint':
        x = to_fraction(x)
        cell = math.floor(x)
        return cls(cell, 0, x - cell)


def _letter_exponent(element: StaircaseElement, level: int, cell: int) -> int:
    if element.strategy == EXPONENT_TABLE:
        return exponent_table(level, cell, element.depth)
    return recursive_exponent(level, cell, element.depth)


def track(element: StaircaseElement, x) -> CellPoint:
    """Symbolic image of x under the word."""
    point = x if isinstance(x, CellPoint) else CellPoint.of(x)
    cell, exponent = point.cell, point.exponent
    for letter in reversed(element.letters):
        if letter.kind == 'f':
            cell -= letter.sign
        else:
            exponent += letter.sign * _letter_exponent(element, letter.level, cell)
    return CellPoint(cell, exponent, point.seed)


def materialize(point: CellPoint, tol=DEFAULT_TOL) -> Enclosure:
    return point.cell + alpha_power(point.seed, point.exponent, to_fraction(tol))


def stair_apply(element: StaircaseElement, x, tol=DEFAULT_TOL) -> Enclosure:
    """
    Enclosure of the word's action at the rational point x, width <= tol.

    Raises:
        BudgetExhaustedError: if |cell| * depth passes NILFLOW_BUDGET
    """
    return materialize(track(element, x), tol)


def displacement(element: StaircaseElement, x, tol=DEFAULT_TOL) -> Enclosure:
    """
    Enclosure of element(x) - x.

    A nonzero cell shift s gives s - seed <= element(x) - x < s + 1 - seed,
    which already has a strict sign, so no alpha power is evaluated.
    """
    start = CellPoint.of(x)
    end = track(element, start)
    shift = end.cell - start.cell
    if end.exponent == 0 or start.seed == 0:
        return Enclosure.point(shift)
    if shift != 0:
        return Enclosure(shift - start.seed, shift + 1 - start.seed)
    return alpha_power(start.seed, end.exponent, to_fraction(tol)) - start.seed


def displacement_sign(element: StaircaseElement, x) -> int:
    """Exact sign of element(x) - x; alpha(y) > y on (0, 1)."""
    start = CellPoint.of(x)
    end = track(element, start)
    shift = end.cell - start.cell
    if shift != 0:
        return 1 if shift > 0 else -1
    if start.seed == 0 or end.exponent == 0:
        return 0
    return 1 if end.exponent > 0 else -1


def relation_residual(lhs: StaircaseElement, rhs: StaircaseElement, x, tol=DEFAULT_TOL) -> Enclosure:
    """lhs(x) - rhs(x); exactly 0 when both words reach the same symbolic point."""
    left, right = track(lhs, x), track(rhs, x)
    if left == right:
        return Enclosure.point(0)
    return materialize(left, tol) - materialize(right, tol)


@dataclass
class RelationReport:
    relation: str
    max_residual: Fraction
    contains_zero: bool
    samples: int

    def to_json(self) -> Dict[str, object]:
        return {"relation": self.relation, "max_residual": str(self.max_residual),
                "contains_zero": self.contains_zero, "samples": self.samples}


def iterated_commutator(times: int, base: StaircaseElement) -> StaircaseElement:
    """[f, [f, ... [f, base]]] with ``times`` brackets."""
    f = generator('f', base.strategy, base.depth)
    word = base
    for _ in range(times):
        word = commutator(f, word)
    return word


def _relations(n: int, strategy: str, depth: int) -> List[Tuple[str, StaircaseElement, StaircaseElement]]:
    def g(text: str) -> StaircaseElement:
        return parse_staircase_word(text, strategy, depth)

    identity = StaircaseElement((), strategy, depth)
    f = g('f')
    relations = [("[f,h0] = id", commutator(f, g('h0')), identity)]
    for k in range(1, n + 1):
        relations.append((f"[f,h{k}] = h{k - 1}", commutator(f, g(f"h{k}")), g(f"h{k - 1}")))
    for i in range(n + 1):
        for j in range(i + 1, n + 1):
            relations.append((f"h{i} h{j} = h{j} h{i}", g(f"h{i} h{j}"), g(f"h{j} h{i}")))
    relations.append((f"{n}-fold [f, h{n}] = h0", iterated_commutator(n, g(f"h{n}")), g('h0')))
    return relations


def nilpotency_witness(n: int, tol=DEFAULT_TOL, samples: int = 200, seed: int = 0,
                       window: Tuple[int, int] = (-5, 5), strategy: str = RECURSIVE,
                       depth: int = DEFAULT_DEPTH) -> Dict[str, object]:
    """
    Check the defining relations up to degree n at random points.

    Relations: [f, h0] = id, [f, h_k] = h_{k-1} for 1 <= k <= n, h_i h_j = h_j h_i,
    and the n-fold commutator of f against h_n equals h0.

    Returns:
        JSON-ready report with one entry per relation and a 'passed' flag
    """
    if not 0 <= n <= depth:
        raise DomainError(f"Degree {n} outside [0, {depth}]")
    tol = to_fraction(tol)
    rng = np.random.default_rng(seed)
    points = [Fraction(float(v)) for v in rng.uniform(window[0], window[1], size=samples)]
    reports = []
    for name, lhs, rhs in _relations(n, strategy, depth):
        worst = Fraction(0)
        contains = True
        for x in points:
            residual = relation_residual(lhs, rhs, x, tol)
            worst = max(worst, abs(residual.lo), abs(residual.hi))
            contains = contains and residual.contains_zero()
        reports.append(RelationReport(name, worst, contains, samples))
        logger.debug(f"{name}: max residual {float(worst):.3e}")
    return {
        "degree": n,
        "samples": samples,
        "bump": bump_map().to_json(),
        "relations": [r.to_json() for r in reports],
        "passed": all(r.contains_zero for r in reports),
    }
