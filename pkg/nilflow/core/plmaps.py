"""
Exact piecewise-linear homeomorphisms of [0, 1].

A map is stored by its interior breakpoints and one positive slope per
piece; values follow by continuity from f(0) = 0 and must end at f(1) = 1.
Maps are kept in canonical form (no breakpoint between equal slopes), so
dataclass equality is equality of maps.
"""

import bisect
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from nilflow.core.certified_reals import format_fraction, to_fraction
from nilflow.core.exceptions import DomainError, ParseError

# Configure logging
logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PLHomeo:
    """
    Orientation-preserving PL homeomorphism of [0, 1].

    Attributes:
        breakpoints: Strictly increasing rationals in (0, 1)
        slopes: Positive rationals, one more than the breakpoints
    """
    breakpoints: Tuple[Fraction, ...] = ()
    slopes: Tuple[Fraction, ...] = (Fraction(1),)

    def __post_init__(self):
        bps = tuple(to_fraction(b) for b in self.breakpoints)
        slopes = tuple(to_fraction(s) for s in self.slopes)
        if len(slopes) != len(bps) + 1:
            raise DomainError(f"{len(bps)} breakpoints need {len(bps) + 1} slopes, got {len(slopes)}")
        if any(s <= 0 for s in slopes):
            raise DomainError("Slopes must be positive")
        edges = (Fraction(0),) + bps + (Fraction(1),)
        if any(b <= a for a, b in zip(edges, edges[1:])):
            raise DomainError("Breakpoints must be strictly increasing inside (0, 1)")
        end = sum(s * (b - a) for s, a, b in zip(slopes, edges, edges[1:]))
        if end != 1:
            raise DomainError(f"Map ends at {end}, not 1")
        # canonical form
        kept_bps: List[Fraction] = []
        kept_slopes: List[Fraction] = [slopes[0]]
        for bp, slope in zip(bps, slopes[1:]):
            if slope == kept_slopes[-1]:
                continue
            kept_bps.append(bp)
            kept_slopes.append(slope)
        object.__setattr__(self, 'breakpoints', tuple(kept_bps))
        object.__setattr__(self, 'slopes', tuple(kept_slopes))

    @classmethod
    def identity(cls) -> 'PLHomeo':
        return cls()

    @classmethod
    def from_knots(cls, points: Sequence[Fraction], values: Sequence[Fraction]) -> 'PLHomeo':
        """Map through (points[i], values[i]); points start at 0 and end at 1."""
        points = [to_fraction(p) for p in points]
        values = [to_fraction(v) for v in values]
        if points[0] != 0 or points[-1] != 1 or values[0] != 0 or values[-1] != 1:
            raise DomainError("Knots must run from (0, 0) to (1, 1)")
        slopes = [(v1 - v0) / (p1 - p0) for p0, p1, v0, v1
                  in zip(points, points[1:], values, values[1:])]
        return cls(tuple(points[1:-1]), tuple(slopes))

    @property
    def knots(self) -> List[Fraction]:
        return [Fraction(0)] + list(self.breakpoints) + [Fraction(1)]

    @property
    def values(self) -> List[Fraction]:
        """f at each knot."""
        edges = self.knots
        out = [Fraction(0)]
        for slope, a, b in zip(self.slopes, edges, edges[1:]):
            out.append(out[-1] + slope * (b - a))
        return out

    @property
    def is_identity(self) -> bool:
        return self.slopes == (Fraction(1),)

    def __call__(self, x) -> Fraction:
        return pl_evaluate(self, x)

    def __str__(self) -> str:
        return format_pl(self)


def pl_evaluate(f: PLHomeo, x) -> Fraction:
    """Exact f(x) for x in [0, 1]."""
    x = to_fraction(x)
    if not 0 <= x <= 1:
        raise DomainError(f"Point {x} outside [0, 1]")
    piece = bisect.bisect_right(f.breakpoints, x)
    start = f.knots[piece]
    return f.values[piece] + f.slopes[piece] * (x - start)


def _preimage(f: PLHomeo, y: Fraction) -> Fraction:
    values = f.values
    piece = max(bisect.bisect_right(values, y) - 1, 0)
    piece = min(piece, len(f.slopes) - 1)
    return f.knots[piece] + (y - values[piece]) / f.slopes[piece]


def pl_compose(f: PLHomeo, g: PLHomeo) -> PLHomeo:
    """f o g, with breakpoints from g and the g-preimages of f's breakpoints."""
    points = set(g.knots)
    points.update(_preimage(g, bp) for bp in f.breakpoints)
    ordered = sorted(points)
    return PLHomeo.from_knots(ordered, [pl_evaluate(f, pl_evaluate(g, p)) for p in ordered])


def pl_inverse(f: PLHomeo) -> PLHomeo:
    return PLHomeo.from_knots(f.values, f.knots)


def pl_commutator(f: PLHomeo, g: PLHomeo) -> PLHomeo:
    """f^{-1} g^{-1} f g (g acts first)."""
    return pl_compose(pl_inverse(f), pl_compose(pl_inverse(g), pl_compose(f, g)))


def endpoint_character(f: PLHomeo) -> Tuple[Fraction, Fraction]:
    """(f'(0), f'(1)); a homomorphism to pairs of positive rationals."""
    return f.slopes[0], f.slopes[-1]


@dataclass(frozen=True)
class FixedComponent:
    """A maximal fixed interval [lo, hi] (lo == hi for an isolated point)."""
    lo: Fraction
    hi: Fraction

    @property
    def is_point(self) -> bool:
        return self.lo == self.hi

    def __str__(self) -> str:
        if self.is_point:
            return format_fraction(self.lo)
        return f"[{format_fraction(self.lo)}, {format_fraction(self.hi)}]"


def pl_fixed_points(f: PLHomeo) -> List[FixedComponent]:
    """Solve f(x) = x piece by piece and merge touching pieces into maximal components."""
    found: List[Tuple[Fraction, Fraction]] = []
    edges, values = f.knots, f.values
    for x0, x1, y0, y1 in zip(edges, edges[1:], values, values[1:]):
        d0, d1 = y0 - x0, y1 - x1
        if d0 == 0 and d1 == 0:
            found.append((x0, x1))
            continue
        if d0 == 0:
            found.append((x0, x0))
        if d1 == 0:
            found.append((x1, x1))
        if d0 * d1 < 0:
            root = x0 + d0 * (x1 - x0) / (d0 - d1)
            found.append((root, root))
    found.sort()
    merged: List[List[Fraction]] = []
    for lo, hi in found:
        if merged and lo <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])
    return [FixedComponent(lo, hi) for lo, hi in merged]


def initial_identity_interval(f: PLHomeo) -> Fraction:
    """Largest a with f = id on [0, a] (0 when f moves points near 0)."""
    if f.slopes[0] != 1:
        return Fraction(0)
    return f.breakpoints[0] if f.breakpoints else Fraction(1)


def random_pl(rng: np.random.Generator, pieces: int, denominator: int = 64) -> PLHomeo:
    """
    Random PL map with the given number of pieces.

    Breakpoints are distinct multiples of 1/denominator; slopes are random
    positive weights rescaled so the map ends at 1.
    """
    if pieces < 1 or pieces > denominator:
        raise DomainError(f"Cannot draw {pieces} pieces on a 1/{denominator} grid")
    cuts = sorted(int(c) for c in rng.choice(np.arange(1, denominator), size=pieces - 1, replace=False))
    edges = [Fraction(0)] + [Fraction(c, denominator) for c in cuts] + [Fraction(1)]
    weights = [Fraction(int(w)) for w in rng.integers(1, 9, size=pieces)]
    total = sum(w * (b - a) for w, a, b in zip(weights, edges, edges[1:]))
    return PLHomeo(tuple(edges[1:-1]), tuple(w / total for w in weights))


def _parse_list(text: str, what: str) -> List[Fraction]:
    text = text.strip()
    if not text:
        return []
    try:
        return [Fraction(part.strip()) for part in text.split(',')]
    except (ValueError, ZeroDivisionError) as e:
        raise ParseError(f"Bad {what} list '{text}': {e}") from e


def parse_pl(text: str) -> PLHomeo:
    """
    Parse ``bp: 1/2; slopes: 1/2, 3/2``.

    Raises:
        ParseError: malformed text
        DomainError: data that is not a homeomorphism of [0, 1]
    """
    fields = {}
    for part in text.split(';'):
        if not part.strip():
            continue
        key, sep, value = part.partition(':')
        if not sep:
            raise ParseError(f"Expected 'key: value' in '{part.strip()}'")
        fields[key.strip().lower()] = value
    if 'slopes' not in fields:
        raise ParseError(f"Missing 'slopes' in '{text}'")
    unknown = set(fields) - {'bp', 'slopes'}
    if unknown:
        raise ParseError(f"Unknown fields {sorted(unknown)}")
    return PLHomeo(tuple(_parse_list(fields.get('bp', ''), 'breakpoint')),
                   tuple(_parse_list(fields['slopes'], 'slope')))


def format_pl(f: PLHomeo) -> str:
    bps = ', '.join(format_fraction(b) for b in f.breakpoints)
    slopes = ', '.join(format_fraction(s) for s in f.slopes)
    return f"bp: {bps}; slopes: {slopes}"


def parse_pl_lines(lines: Iterable[str]) -> List[PLHomeo]:
    """One map per non-blank, non-comment line."""
    return [parse_pl(line) for line in lines if line.strip() and not line.lstrip().startswith('#')]
