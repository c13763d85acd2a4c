"""
Translation numbers, fixed points and a distortion probe.

For a homeomorphism f preserving a measure mu that is finite on compact sets,

    tau(f) = mu([x, f(x)))    if x < f(x)
             0                if x = f(x)
             -mu([f(x), x))   if x > f(x)

does not depend on x, is additive on the group, and vanishes exactly when f
has a fixed point. Only atomic measures are handled here.
"""

import itertools
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterator, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from tqdm import tqdm

from nilflow.core.certified_reals import Enclosure, format_fraction, to_fraction
from nilflow.core.config import DEFAULT_GRID_BITS, DEFAULT_TOL, DEFAULT_WINDOW, summation_budget
from nilflow.core.exceptions import BudgetExhaustedError, DomainError, ParseError, WindowError
from nilflow.core.nilaction import ActionContext, unit_action
from nilflow.core.staircase import StaircaseElement, displacement, stair_apply
from nilflow.core.lattice_series import b_value
from nilflow.core.unipotent import LatticePoint, UnipotentMatrix, apply_to_lattice, as_matrix
from nilflow.core.yoccoz import PhiParams, phi_deriv

# Configure logging
logger = logging.getLogger(__name__)

MAX_TAU_REFINEMENTS = 4
DEFAULT_PROBE_TILES = 50


# ----------------------------------------------------------------------
# measures
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class AtomicMeasure:
    """
    Finitely many atoms, valid on a window.

    Attributes:
        atoms: (point, mass) pairs with strictly increasing points
        window: (lo, hi) where the atom list is complete
    """
    atoms: Tuple[Tuple[Fraction, Fraction], ...]
    window: Tuple[Fraction, Fraction]

    def __post_init__(self):
        points = [p for p, _ in self.atoms]
        if any(b <= a for a, b in zip(points, points[1:])):
            raise DomainError("Atom points must be strictly increasing")
        if any(m <= 0 for _, m in self.atoms):
            raise DomainError("Atom masses must be positive")
        if self.window[0] > self.window[1]:
            raise DomainError(f"Empty window {self.window}")

    @classmethod
    def integers(cls, lo: int = DEFAULT_WINDOW[0], hi: int = DEFAULT_WINDOW[1]) -> 'AtomicMeasure':
        """Unit atoms on the integers of [lo, hi]: invariant under the staircase group."""
        return cls(tuple((Fraction(k), Fraction(1)) for k in range(lo, hi + 1)),
                   (Fraction(lo), Fraction(hi)))

    def in_window(self, x: Enclosure) -> bool:
        return self.window[0] <= x.lo and x.hi <= self.window[1]

    def mass(self, lo: Fraction, hi: Fraction) -> Fraction:
        """mu([lo, hi))."""
        return sum((m for p, m in self.atoms if lo <= p < hi), Fraction(0))


def parse_measure(text: str) -> AtomicMeasure:
    """
    Parse 'integers', 'integers:LO:HI' or 'atoms:p=m,p=m,...'.

    An atom list is valid on the hull of its points.
    """
    text = text.strip()
    head, _, rest = text.partition(':')
    try:
        if head == 'integers':
            if not rest:
                return AtomicMeasure.integers()
            lo, hi = (int(v) for v in rest.split(':'))
            return AtomicMeasure.integers(lo, hi)
        if head == 'atoms':
            atoms = []
            for item in rest.split(','):
                point, _, mass = item.partition('=')
                atoms.append((Fraction(point.strip()), Fraction(mass.strip() or '1')))
            atoms.sort()
            return AtomicMeasure(tuple(atoms), (atoms[0][0], atoms[-1][0]))
    except (ValueError, ZeroDivisionError, IndexError) as e:
        raise ParseError(f"Bad measure '{text}': {e}") from e
    raise ParseError(f"Unknown measure '{text}' (expected integers, integers:LO:HI or atoms:p=m,...)")


# ----------------------------------------------------------------------
# maps
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class EvaluableMap:
    """
    A homeomorphism given by certified evaluation.

    Attributes:
        name: Label for reports
        evaluate: (x, tol) -> enclosure of f(x)
        shift: Optional (x, tol) -> enclosure of f(x) - x, when cheaper than evaluate
    """
    name: str
    evaluate: Callable[[Fraction, Fraction], Enclosure]
    shift: Optional[Callable[[Fraction, Fraction], Enclosure]] = None

    def displacement(self, x: Fraction, tol: Fraction) -> Enclosure:
        if self.shift is not None:
            return self.shift(x, tol)
        return self.evaluate(x, tol) - x

    @classmethod
    def of_staircase(cls, element: StaircaseElement) -> 'EvaluableMap':
        return cls(str(element) or 'id',
                   lambda x, tol: stair_apply(element, x, tol),
                   lambda x, tol: displacement(element, x, tol))

    @classmethod
    def of_action(cls, ac: ActionContext, alpha, mode: str = 'interval') -> 'EvaluableMap':
        matrix = as_matrix(alpha, ac.n)
        return cls(str(alpha), lambda x, tol: unit_action(ac, matrix, x, tol, mode))


def _signed_mass(mu: AtomicMeasure, x: Fraction, fx: Enclosure) -> Enclosure:
    if fx.is_point and fx.lo == x:
        return Enclosure.point(0)
    if fx.lo > x:
        return Enclosure(mu.mass(x, fx.lo), mu.mass(x, fx.hi))
    if fx.hi < x:
        return Enclosure(-mu.mass(fx.lo, x), -mu.mass(fx.hi, x))
    # f(x) may sit on either side of x
    return Enclosure(-mu.mass(fx.lo, x), mu.mass(x, fx.hi))


def _atom_inside(mu: AtomicMeasure, fx: Enclosure) -> bool:
    return not fx.is_point and any(fx.lo <= p <= fx.hi for p, _ in mu.atoms)


def translation_number(fmap: EvaluableMap, mu: AtomicMeasure, x=0, tol=DEFAULT_TOL) -> Enclosure:
    """
    Enclosure of tau(f) computed at the basepoint x.

    f(x) is refined while an atom lies inside its enclosure.

    Raises:
        WindowError: x or f(x) outside the measure's window
    """
    x = to_fraction(x)
    tol = to_fraction(tol)
    if not mu.in_window(Enclosure.point(x)):
        raise WindowError(f"Basepoint {x} outside window {mu.window}")
    fx = fmap.evaluate(x, tol)
    for _ in range(MAX_TAU_REFINEMENTS):
        if not _atom_inside(mu, fx):
            break
        tol = tol / 16
        fx = fmap.evaluate(x, tol)
    if not mu.in_window(fx):
        raise WindowError(f"Image {fx} of {x} under {fmap.name} leaves window {mu.window}")
    return _signed_mass(mu, x, fx)


# ----------------------------------------------------------------------
# fixed points
# ----------------------------------------------------------------------
def _outward(lo: int, hi: int) -> Iterator[int]:
    """Integers of [lo, hi] ordered by distance from the centre."""
    if lo > hi:
        return
    centre = (lo + hi) // 2
    yield centre
    for step in itertools.count(1):
        if centre + step > hi and centre - step < lo:
            return
        if centre + step <= hi:
            yield centre + step
        if centre - step >= lo:
            yield centre - step


def _sign(d: Enclosure) -> Optional[int]:
    if d.is_point and d.lo == 0:
        return 0
    if d.lo > 0:
        return 1
    if d.hi < 0:
        return -1
    return None


def _bisect(fmap: EvaluableMap, lo: Fraction, hi: Fraction, lo_sign: int, tol: Fraction) -> Enclosure:
    while hi - lo > tol:
        mid = (lo + hi) / 2
        s = _sign(fmap.displacement(mid, tol))
        if s == 0:
            return Enclosure.point(mid)
        if s is None:
            break
        if s == lo_sign:
            lo = mid
        else:
            hi = mid
    return Enclosure(lo, hi)


def find_fixed_point(fmap: EvaluableMap, window: Sequence = DEFAULT_WINDOW,
                     grid_bits: int = DEFAULT_GRID_BITS, tol=DEFAULT_TOL) -> Optional[Enclosure]:
    """
    A certified fixed point of f in the window, or None when none is found.

    Integers are tried first, then a 2**-grid_bits grid outward from the
    centre; a certified sign change of f(x) - x is bisected down to tol.

    Raises:
        BudgetExhaustedError: grid larger than NILFLOW_BUDGET
    """
    tol = to_fraction(tol)
    lo, hi = (to_fraction(w) for w in window)
    for k in _outward(math.ceil(lo), math.floor(hi)):
        if _sign(fmap.displacement(Fraction(k), tol)) == 0:
            return Enclosure.point(k)
    scale = 1 << grid_bits
    first, last = math.ceil(lo * scale), math.floor(hi * scale)
    if last - first > summation_budget():
        raise BudgetExhaustedError(f"Fixed point grid of {last - first} points exceeds budget")
    signs = {}

    def sign_at(i: int) -> Optional[int]:
        if i not in signs:
            signs[i] = _sign(fmap.displacement(Fraction(i, scale), tol))
        return signs[i]

    for i in _outward(first, last - 1):
        left, right = sign_at(i), sign_at(i + 1)
        if left == 0:
            return Enclosure.point(Fraction(i, scale))
        if right == 0:
            return Enclosure.point(Fraction(i + 1, scale))
        if left is not None and right is not None and left != right:
            return _bisect(fmap, Fraction(i, scale), Fraction(i + 1, scale), left, tol)
    return None


# ----------------------------------------------------------------------
# tau report
# ----------------------------------------------------------------------
@dataclass
class TauReport:
    """Per-word table and pairwise additivity residuals."""
    words: pd.DataFrame
    additivity: pd.DataFrame

    @property
    def passed(self) -> bool:
        return bool(self.words['consistent'].all()) and bool(self.additivity['contains_zero'].all())


def tau_report(words: Sequence[StaircaseElement], mu: Optional[AtomicMeasure] = None,
               tol=DEFAULT_TOL, basepoint=0, grid_bits: int = DEFAULT_GRID_BITS,
               progress: bool = False) -> TauReport:
    """
    tau of each word, Fix/tau consistency, and tau(vw) - tau(v) - tau(w) for all pairs.

    A word is consistent when it has a certified fixed point in the window
    exactly when its tau enclosure is {0}.
    """
    mu = mu or AtomicMeasure.integers()
    tol = to_fraction(tol)
    taus = {}
    rows = []
    for element in tqdm(words, desc="tau", disable=not progress):
        fmap = EvaluableMap.of_staircase(element)
        tau = translation_number(fmap, mu, basepoint, tol)
        fixed = find_fixed_point(fmap, mu.window, grid_bits, tol)
        taus[str(element)] = tau
        is_zero = tau.is_point and tau.lo == 0
        rows.append({
            'word': str(element) or 'id',
            'tau_lo': format_fraction(tau.lo),
            'tau_hi': format_fraction(tau.hi),
            'fixed_point': '' if fixed is None else str(fixed),
            'has_fixed_point': fixed is not None,
            'consistent': (fixed is not None) == is_zero,
        })
        logger.debug(f"tau({element}) = {tau}, fixed point {fixed}")
    pairs = []
    for v, w in itertools.product(words, repeat=2):
        vw = v.then(w)
        tau_vw = translation_number(EvaluableMap.of_staircase(vw), mu, basepoint, tol)
        residual = tau_vw - taus[str(v)] - taus[str(w)]
        pairs.append({
            'v': str(v) or 'id',
            'w': str(w) or 'id',
            'residual_lo': format_fraction(residual.lo),
            'residual_hi': format_fraction(residual.hi),
            'contains_zero': residual.contains_zero(),
        })
    return TauReport(pd.DataFrame(rows), pd.DataFrame(pairs))


# ----------------------------------------------------------------------
# distortion
# ----------------------------------------------------------------------
def _log_lipschitz(values: np.ndarray, spacing: float) -> float:
    """max |v_i - v_j| / |x_i - x_j| on an evenly spaced grid."""
    if len(values) < 2:
        return 0.0
    index = np.arange(len(values))
    gaps = np.abs(index[:, None] - index[None, :]) * spacing
    diffs = np.abs(values[:, None] - values[None, :])
    with np.errstate(divide='ignore', invalid='ignore'):
        ratios = np.where(gaps > 0, diffs / gaps, 0.0)
    return float(ratios.max())


def _probe_tile(ac: ActionContext, alpha: UnipotentMatrix, q: LatticePoint, depth: int,
                tol: Fraction) -> Tuple[Fraction, Fraction, List[float]]:
    b1 = 1 / b_value(ac.ctx, q)
    b2 = 1 / b_value(ac.ctx, apply_to_lattice(alpha, q))
    params = PhiParams(b1, b2)
    size = 1 << depth
    logs = [math.log(float(phi_deriv(params, b1 * Fraction(j, size), tol).mid))
            for j in range(size + 1)]
    return b1, b2, logs


def distortion_probe(ac: ActionContext, alpha, depth: int, tiles: int = DEFAULT_PROBE_TILES,
                     base: Optional[Sequence[int]] = None, tol=None,
                     progress: bool = False) -> pd.DataFrame:
    """
    Lipschitz estimates of log g' on the tiles q = base + (k,), 0 <= k <= tiles.

    base defaults to all ones; as k grows the tiles run into a point of J_K.

    Each tile gets one row per grid depth d <= depth with the estimate on a
    grid of 2**d + 1 points; grids are nested, so estimates grow with d.

    Raises:
        BudgetExhaustedError: if tiles * 2**depth exceeds NILFLOW_BUDGET
    """
    if depth < 0:
        raise DomainError(f"Depth must be >= 0, got {depth}")
    if (tiles + 1) * (1 << depth) > summation_budget():
        raise BudgetExhaustedError(f"{tiles + 1} tiles at depth {depth} exceed budget")
    tol = ac.tol if tol is None else to_fraction(tol)
    matrix = alpha if isinstance(alpha, UnipotentMatrix) else (
        UnipotentMatrix.generator(ac.n, alpha) if isinstance(alpha, int) else as_matrix(alpha, ac.n))
    lead = tuple(base) if base is not None else (1,) * (ac.n - 1)
    if len(lead) != ac.n - 1:
        raise DomainError(f"Tile prefix {lead} needs {ac.n - 1} coordinates")
    rows = []
    for k in tqdm(range(tiles + 1), desc="distortion", disable=not progress):
        q = LatticePoint(lead + (k,))
        b1, b2, logs = _probe_tile(ac, matrix, q, depth, tol)
        values = np.asarray(logs)
        for d in range(depth + 1):
            stride = 1 << (depth - d)
            estimate = _log_lipschitz(values[::stride], float(b1) / (1 << d))
            rows.append({'tile': str(q), 'k': k, 'depth': d, 'tile_length': float(b1),
                         'image_length': float(b2), 'lipschitz_log_deriv': estimate})
    return pd.DataFrame(rows)
