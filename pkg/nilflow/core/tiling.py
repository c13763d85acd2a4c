"""
Tiles I_K(q) = [S_K(q), S_K(succ q)] of [0, S_K] and the point locator.

Tiles are adjacent and ordered lexicographically. Their complement J_K is the
countable closed set of accumulation points of tile endpoints; ``locate``
reports points it cannot separate from J_K as Unresolved.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import List, Optional, Tuple, Union

from nilflow.core.certified_reals import Enclosure, as_enclosure, to_fraction
from nilflow.core.config import summation_budget
from nilflow.core.exceptions import DomainError
from nilflow.core.lattice_series import (
    LatticeLike,
    SeriesContext,
    as_lattice_point,
    b_value,
    downset_mass,
    prefix_mass,
    total_mass,
)
from nilflow.core.unipotent import LatticePoint, lattice_box, lex_successor

# Configure logging
logger = logging.getLogger(__name__)

LOCATE_ROUNDS = (1, 4, 16)


@dataclass(frozen=True)
class Tile:
    """
    One tile I_K(q).

    Attributes:
        q: Lattice point naming the tile
        left: Enclosure of S_K(q)
        right: Enclosure of S_K(succ q)
        length: Exact 1/B_K(q)
    """
    q: LatticePoint
    left: Enclosure
    right: Enclosure
    length: Fraction

    @property
    def midpoint(self) -> Enclosure:
        return (self.left + self.right) / 2


class UnresolvedReason(Enum):
    ACCUMULATION_POINT = 'accumulation_point'
    PRECISION_EXHAUSTED = 'precision_exhausted'


@dataclass(frozen=True)
class Interior:
    q: LatticePoint


@dataclass(frozen=True)
class BoundaryPair:
    q: LatticePoint
    successor: LatticePoint


@dataclass(frozen=True)
class Unresolved:
    reason: UnresolvedReason


LocateResult = Union[Interior, BoundaryPair, Unresolved]


def tile_interval(ctx: SeriesContext, q: LatticeLike, tol) -> Tile:
    """Endpoints S_K(q) and S_K(succ q) with the exact length 1/B_K(q)."""
    q = as_lattice_point(q)
    left = downset_mass(ctx, q, tol)
    right = downset_mass(ctx, lex_successor(q), tol)
    return Tile(q=q, left=left, right=right, length=1 / b_value(ctx, q))


def tiles_in_box(ctx: SeriesContext, radius: int, tol) -> List[Tile]:
    """All tiles with |q_i| <= radius, in lexicographic order."""
    return [tile_interval(ctx, q, tol) for q in lattice_box(ctx.n, radius)]


_ABOVE, _BELOW, _AMBIGUOUS = 1, -1, 0


def _compare(x: Enclosure, threshold: Enclosure) -> int:
    if threshold.hi <= x.lo:
        return _ABOVE
    if x.hi < threshold.lo:
        return _BELOW
    return _AMBIGUOUS


def _search_coordinate(ctx: SeriesContext, prefix: Tuple[int, ...], x: Enclosure,
                       tol: Fraction) -> Tuple[Optional[int], Optional[int]]:
    """
    Find c with prefix_mass(prefix + (c,)) <= x < prefix_mass(prefix + (c + 1,)).

    Gallops away from 0, then bisects. Returns (c, None) when resolved,
    (None, c) when x cannot be separated from the threshold at c, and
    (None, None) when galloping runs past the budget.
    """
    budget = summation_budget()
    cache = {}

    def compare(c: int) -> int:
        if c not in cache:
            cache[c] = _compare(x, prefix_mass(ctx, prefix + (c,), tol))
        return cache[c]

    first = compare(0)
    if first == _AMBIGUOUS:
        return None, 0
    step = 1
    if first == _ABOVE:
        lo, hi = 0, 1
        while True:
            state = compare(hi)
            if state == _BELOW:
                break
            if state == _AMBIGUOUS:
                return None, hi
            lo, step = hi, step * 2
            hi = lo + step
            if step > budget:
                logger.debug(f"Galloping passed {budget} steps at prefix {prefix}")
                return None, None
    else:
        lo, hi = -1, 0
        while True:
            state = compare(lo)
            if state == _ABOVE:
                break
            if state == _AMBIGUOUS:
                return None, lo
            hi, step = lo, step * 2
            lo = hi - step
            if step > budget:
                logger.debug(f"Galloping passed {budget} steps at prefix {prefix}")
                return None, None
    while hi - lo > 1:
        mid = (lo + hi) // 2
        state = compare(mid)
        if state == _ABOVE:
            lo = mid
        elif state == _BELOW:
            hi = mid
        else:
            return None, mid
    return lo, None


def _locate_once(ctx: SeriesContext, x: Enclosure, tol: Fraction):
    prefix: Tuple[int, ...] = ()
    for level in range(ctx.n):
        coordinate, boundary = _search_coordinate(ctx, prefix, x, tol)
        if coordinate is not None:
            prefix = prefix + (coordinate,)
            continue
        if boundary is None or level < ctx.n - 1:
            return 'accumulation', None
        # x straddles the shared endpoint of (.., c - 1) and (.., c)
        below = _compare(x, prefix_mass(ctx, prefix + (boundary - 1,), tol))
        above = _compare(x, prefix_mass(ctx, prefix + (boundary + 1,), tol))
        if below == _ABOVE and above == _BELOW:
            return 'boundary', LatticePoint(prefix + (boundary - 1,))
        return 'exhausted', None
    return 'interior', LatticePoint(prefix)


def locate(ctx: SeriesContext, x, tol) -> LocateResult:
    """
    Find the tile containing x (the map nu).

    Coordinates are found most significant first by galloping and bisection
    over prefix_mass thresholds, refining at tol, tol/4 and tol/16.

    Returns:
        Interior(q), BoundaryPair(q, succ q) or Unresolved(reason)

    Raises:
        DomainError: if x lies outside [0, S_K] by more than tol
    """
    x = as_enclosure(x)
    tol = to_fraction(tol)
    total = total_mass(ctx, tol)
    if x.hi < -tol or x.lo > total.hi + tol:
        raise DomainError(f"Point {x} outside [0, S_K]")
    outcome = ('exhausted', None)
    for divisor in LOCATE_ROUNDS:
        outcome = _locate_once(ctx, x, tol / divisor)
        if outcome[0] == 'interior':
            return Interior(outcome[1])
    kind, q = outcome
    if kind == 'boundary':
        return BoundaryPair(q, lex_successor(q))
    if kind == 'accumulation':
        logger.debug(f"Point {x} is not separated from an accumulation point")
        return Unresolved(UnresolvedReason.ACCUMULATION_POINT)
    return Unresolved(UnresolvedReason.PRECISION_EXHAUSTED)
