"""
The action of the unipotent group on [0, S_K], on [0, 1] and on the circle.

g_alpha maps the tile I_K(q) onto I_K(alpha q) by the diffeomorphism
phi_{b1,b2} between the tile lengths:

    g_alpha(x) = S_K(alpha q) + phi_{b1,b2}(x - S_K(q)),  b1 = 1/B_K(q), b2 = 1/B_K(alpha q)

and is continued to the accumulation set J_K by monotonicity. The rescaled
action Psi(alpha)(x) = g_alpha(S_K x) / S_K lives on [0, 1]; identifying the
endpoints gives the circle action. Glued actions place one rescaled action in
each block I_m = [1/(m+1), 1/m] of [0, 1].
"""

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import qmc
from tqdm import tqdm

from nilflow.core.certified_reals import Enclosure, as_enclosure, to_fraction
from nilflow.core.config import DEFAULT_TOL, GluedActionConfig
from nilflow.core.exceptions import BudgetExhaustedError, ConfigError, DomainError, ParseError
from nilflow.core.lattice_series import SeriesContext, b_value, derivative_envelope, total_mass
from nilflow.core.tiling import BoundaryPair, Interior, Tile, locate, tile_interval
from nilflow.core.unipotent import (
    GroupWord,
    LatticePoint,
    UnipotentMatrix,
    apply_to_lattice,
    as_matrix,
    lattice_box,
    word_eval,
)
from nilflow.core.yoccoz import PhiParams, phi_apply, phi_deriv

# Configure logging
logger = logging.getLogger(__name__)

MAX_BRACKET_DOUBLINGS = 48
CALIBRATION_RADIUS = 3
CALIBRATION_SAMPLES = 500
MAX_K_DOUBLINGS = 40


@dataclass(frozen=True)
class ActionContext:
    """
    Series context plus default tolerance for the action.

    Words multiply left to right as matrices and g_{ab} = g_a o g_b.
    """
    ctx: SeriesContext
    tol: Fraction = DEFAULT_TOL

    @classmethod
    def build(cls, n: int, K, tol=DEFAULT_TOL) -> 'ActionContext':
        return cls(SeriesContext(n, to_fraction(K)), to_fraction(tol))

    @property
    def n(self) -> int:
        return self.ctx.n

    @property
    def K(self) -> Fraction:
        return self.ctx.K


def _tol(ac: ActionContext, tol) -> Fraction:
    return ac.tol if tol is None else to_fraction(tol)


def _tile_pair(ac: ActionContext, alpha: UnipotentMatrix, q: LatticePoint,
               tol: Fraction) -> Tuple[Tile, Tile]:
    return tile_interval(ac.ctx, q, tol), tile_interval(ac.ctx, apply_to_lattice(alpha, q), tol)


def _local(tile: Tile, x: Enclosure) -> Enclosure:
    return (x - tile.left).clamp(0, tile.length)


def _map_on_tile(ac, alpha, q, x, tol) -> Enclosure:
    inner = tol / 8
    tile, image = _tile_pair(ac, alpha, q, inner)
    return image.left + phi_apply(PhiParams(tile.length, image.length), _local(tile, x), inner)


def _deriv_on_tile(ac, alpha, q, x, tol) -> Enclosure:
    inner = tol / 8
    tile, image = _tile_pair(ac, alpha, q, inner)
    return phi_deriv(PhiParams(tile.length, image.length), _local(tile, x), inner)


def _resolved(ac, alpha, x: Enclosure, tol: Fraction, on_tile) -> Optional[Enclosure]:
    """Evaluate on the located tile(s); None when x is not separated from J_K."""
    where = locate(ac.ctx, x, tol)
    if isinstance(where, Interior):
        return on_tile(ac, alpha, where.q, x, tol)
    if isinstance(where, BoundaryPair):
        return on_tile(ac, alpha, where.q, x, tol).hull(on_tile(ac, alpha, where.successor, x, tol))
    return None


def _bracket(ac, alpha, x: Enclosure, tol: Fraction, total: Enclosure):
    """
    Nearest resolvable points y1 <= x.lo and y2 >= x.hi with their values.

    Returns ((y1, g(y1)), (y2, g(y2))); the ends 0 and S_K are fixed points.
    """
    def search(start: Fraction, direction: int):
        delta = tol
        for _ in range(MAX_BRACKET_DOUBLINGS):
            y = start + direction * delta
            if y <= 0:
                return Fraction(0), Enclosure.point(0)
            if y >= total.lo:
                return total.hi, Enclosure(total.lo, total.hi)
            value = _resolved(ac, alpha, Enclosure.point(y), tol, _map_on_tile)
            if value is not None:
                return y, value
            delta *= 2
        raise BudgetExhaustedError(f"No resolvable point found near {start}")

    return search(x.lo, -1), search(x.hi, 1)


def g_apply(ac: ActionContext, alpha, x, tol=None) -> Enclosure:
    """
    Enclosure of g_alpha(x) for x in [0, S_K].

    Points inside a tile use the tile formula, shared tile endpoints take the
    hull of both adjacent formulas, and points not separated from J_K get the
    hull of the images of bracketing resolvable points.

    Raises:
        DomainError: if x is outside [0, S_K]
        BudgetExhaustedError: if no bracketing points can be resolved
    """
    tol = _tol(ac, tol)
    alpha = as_matrix(alpha, ac.n)
    x = as_enclosure(x)
    total = total_mass(ac.ctx, tol)
    if x.hi < -tol or x.lo > total.hi + tol:
        raise DomainError(f"Point {x} outside [0, S_K]")
    if alpha.is_identity or x == Enclosure.point(0):
        return x
    value = _resolved(ac, alpha, x, tol, _map_on_tile)
    if value is None:
        (_, low), (_, high) = _bracket(ac, alpha, x, tol, total)
        value = Enclosure(low.lo, high.hi)
    return value.clamp(0, total.hi)


def g_deriv(ac: ActionContext, alpha, x, tol=None) -> Enclosure:
    """
    Enclosure of g_alpha'(x).

    Points not separated from J_K get the global envelope of all tile
    derivatives, which contains the value 1 taken on J_K.
    """
    tol = _tol(ac, tol)
    alpha = as_matrix(alpha, ac.n)
    x = as_enclosure(x)
    total = total_mass(ac.ctx, tol)
    if x.hi < -tol or x.lo > total.hi + tol:
        raise DomainError(f"Point {x} outside [0, S_K]")
    if alpha.is_identity or x == Enclosure.point(0):
        return Enclosure.point(1)
    value = _resolved(ac, alpha, x, tol, _deriv_on_tile)
    if value is not None:
        return value
    logger.debug(f"g_deriv at {x} falls back to the B-ratio envelope")
    return derivative_envelope(ac.ctx, alpha)


def _to_unit_domain(x, mode: str, tol: Fraction) -> Enclosure:
    x = as_enclosure(x)
    if mode == 'circle':
        shift = math.floor(x.lo)
        if x.hi - shift > 1:
            raise DomainError(f"Enclosure {x} wraps around the circle")
        return x - shift
    if mode != 'interval':
        raise DomainError(f"Unknown mode '{mode}' (expected interval or circle)")
    if x.lo < -tol or x.hi > 1 + tol:
        raise DomainError(f"Point {x} outside [0, 1]")
    return x.clamp(0, 1)


def unit_action(ac: ActionContext, alpha, x_unit, tol=None, mode: str = 'interval') -> Enclosure:
    """
    Psi(alpha)(x) = g_alpha(S_K x) / S_K on [0, 1], or on R/Z in circle mode.

    0 and 1 are fixed exactly.
    """
    tol = _tol(ac, tol)
    x = _to_unit_domain(x_unit, mode, tol)
    if x.is_point and x.lo in (0, 1):
        return x
    inner = tol / 8
    total = total_mass(ac.ctx, inner)
    image = g_apply(ac, alpha, x * total, inner)
    return (image / total).clamp(0, 1)


def unit_deriv(ac: ActionContext, alpha, x_unit, tol=None, mode: str = 'interval') -> Enclosure:
    """Derivative of Psi(alpha); scaling conjugation keeps g_alpha'(S_K x)."""
    tol = _tol(ac, tol)
    x = _to_unit_domain(x_unit, mode, tol)
    if x.is_point and x.lo in (0, 1):
        return Enclosure.point(1)
    inner = tol / 8
    total = total_mass(ac.ctx, inner)
    return g_deriv(ac, alpha, x * total, inner)


# ----------------------------------------------------------------------
# calibration
# ----------------------------------------------------------------------
@dataclass
class CalibrationResult:
    """
    Outcome of calibrate_K.

    achieved_sup is a sampled supremum, hence a lower bound on the true sup.
    """
    K: Fraction
    achieved_sup: Fraction
    tried: List[Fraction] = field(default_factory=list)
    samples: int = 0


def midpoint_deviation(ctx: SeriesContext, alphas: Sequence[UnipotentMatrix],
                       radius: int, stop_at: Optional[Fraction] = None) -> Fraction:
    """Max |(B_K(q)/B_K(alpha q))^2 - 1| over the box; exits early once stop_at is reached."""
    best = Fraction(0)
    for q in lattice_box(ctx.n, radius):
        base = b_value(ctx, q)
        for alpha in alphas:
            deviation = abs((base / b_value(ctx, apply_to_lattice(alpha, q))) ** 2 - 1)
            if deviation > best:
                best = deviation
                if stop_at is not None and best >= stop_at:
                    return best
    return best


def halton_deviation(ctx: SeriesContext, alphas: Sequence[UnipotentMatrix], samples: int,
                     seed: int, radius: int, tol: Fraction,
                     progress: bool = False) -> Fraction:
    """
    Max |g' - 1| over Halton samples (tile index, local fraction) of the box.

    The local coordinate is known, so samples go straight to phi_deriv.
    """
    if samples <= 0 or not alphas:
        return Fraction(0)
    tiles = lattice_box(ctx.n, radius)
    sampler = qmc.Halton(d=2, scramble=False)
    if seed:
        sampler.fast_forward(seed)
    points = sampler.random(samples)
    index = np.minimum((points[:, 0] * len(tiles)).astype(int), len(tiles) - 1)
    best = Fraction(0)
    for row in tqdm(range(samples), desc="Halton samples", disable=not progress):
        q = tiles[int(index[row])]
        length = 1 / b_value(ctx, q)
        fraction = Fraction(float(points[row, 1])).limit_denominator(1 << 30)
        for alpha in alphas:
            target = 1 / b_value(ctx, apply_to_lattice(alpha, q))
            d = phi_deriv(PhiParams(length, target), fraction * length, tol)
            best = max(best, abs(d.lo - 1), abs(d.hi - 1))
    return best


def calibrate_K(n: int, generators: Iterable, eps, samples: int = CALIBRATION_SAMPLES,
                seed: int = 0, radius: int = CALIBRATION_RADIUS, tol=DEFAULT_TOL,
                progress: bool = False) -> CalibrationResult:
    """
    First K in 1, 2, 4, ... whose sampled sup |g' - 1| is below eps.

    Samples are the exact tile-midpoint derivatives over |q_i| <= radius (the
    tile-wise maximum of |phi' - 1|), the tile endpoints (derivative 1) and
    Halton points evaluated through phi_deriv.

    Raises:
        BudgetExhaustedError: if no K up to 2**40 passes
    """
    eps = to_fraction(eps)
    if eps <= 0:
        raise DomainError(f"eps must be positive, got {eps}")
    alphas = [as_matrix(g, n) for g in generators]
    alphas = [a for a in alphas if not a.is_identity]
    result = CalibrationResult(K=Fraction(1), achieved_sup=Fraction(0))
    K = Fraction(1)
    for _ in range(MAX_K_DOUBLINGS + 1):
        ctx = SeriesContext(n, K)
        result.tried.append(K)
        sup = midpoint_deviation(ctx, alphas, radius, stop_at=eps)
        if sup < eps:
            sup = max(sup, halton_deviation(ctx, alphas, samples, seed, radius,
                                            to_fraction(tol), progress))
            result.samples = samples
        if sup < eps:
            result.K, result.achieved_sup = K, sup
            logger.info(f"Calibrated K={K} for n={n}, eps={eps}: sampled sup {float(sup):.3e}")
            return result
        logger.debug(f"K={K}: sampled sup {float(sup):.3e} >= {float(eps):.3e}")
        K *= 2
    logger.warning(f"Calibration for eps={eps} gave up after K={K / 2}")
    raise BudgetExhaustedError(f"No K <= 2**{MAX_K_DOUBLINGS} reaches sampled sup below {eps}")


def witness_point(ctx: SeriesContext, alpha, radius: int = 1, tol=DEFAULT_TOL) -> Optional[Fraction]:
    """Unit-interval midpoint of the first tile in the box that alpha moves."""
    alpha = as_matrix(alpha, ctx.n)
    tol = to_fraction(tol)
    for q in lattice_box(ctx.n, radius):
        if apply_to_lattice(alpha, q) != q:
            tile = tile_interval(ctx, q, tol)
            return (tile.midpoint.mid / total_mass(ctx, tol).mid)
    return None


# ----------------------------------------------------------------------
# residual gluing
# ----------------------------------------------------------------------
@dataclass
class GluedBlock:
    """
    One block I_m = [1/(m+1), 1/m] carrying a rescaled action.

    Attributes:
        m: Block index
        action: Action on the block after affine conjugation
        images: Abstract generator name -> GroupWord
        sup: Sampled sup |g' - 1| recorded at build time
        calibrated: True when K came from calibrate_K
    """
    m: int
    action: ActionContext
    images: Dict[str, GroupWord]
    sup: Fraction
    calibrated: bool = False

    @property
    def left(self) -> Fraction:
        return Fraction(1, self.m + 1)

    @property
    def right(self) -> Fraction:
        return Fraction(1, self.m)

    def image_matrix(self, word: str) -> UnipotentMatrix:
        """Matrix of an abstract word (lowercase letter = generator, uppercase = inverse)."""
        image = GroupWord()
        for token in word.split():
            if len(token) != 1 or not token.isalpha():
                raise ParseError(f"Bad abstract letter '{token}'")
            name = token.lower()
            if name not in self.images:
                raise ConfigError(f"Block {self.m} has no image for '{name}'")
            letter = self.images[name]
            image = image + (letter if token.islower() else letter.inverse())
        return word_eval(image, self.action.n)


@dataclass
class GluedAction:
    blocks: Dict[int, GluedBlock]
    witnesses: List[Tuple[str, int]] = field(default_factory=list)
    tol: Fraction = DEFAULT_TOL


def build_glued_action(config: GluedActionConfig, tol=DEFAULT_TOL, samples: int = CALIBRATION_SAMPLES,
                       seed: int = 0, progress: bool = False) -> GluedAction:
    """
    Instantiate every configured block, calibrating K against 2**-m when asked.

    Raises:
        ConfigError: on unparsable image words or series dimensions above 3
    """
    tol = to_fraction(tol)
    blocks: Dict[int, GluedBlock] = {}
    for spec in config.blocks:
        try:
            images = {name: GroupWord.parse(text) for name, text in spec.images.items()}
            matrices = [word_eval(word, spec.n) for word in images.values()]
        except (ParseError, DomainError) as e:
            raise ConfigError(f"Block {spec.m}: {e}") from e
        if spec.n > 3:
            raise ConfigError(f"Block {spec.m}: n = {spec.n} has no finite lattice series")
        bound = Fraction(1, 2 ** spec.m)
        if spec.K is None:
            calibration = calibrate_K(spec.n, matrices, bound, samples=samples, seed=seed,
                                      tol=tol, progress=progress)
            K, sup, calibrated = calibration.K, calibration.achieved_sup, True
        else:
            ctx = SeriesContext(spec.n, spec.K)
            movers = [a for a in matrices if not a.is_identity]
            sup = max(midpoint_deviation(ctx, movers, CALIBRATION_RADIUS),
                      halton_deviation(ctx, movers, samples, seed, CALIBRATION_RADIUS, tol))
            K, calibrated = spec.K, False
        logger.info(f"Block m={spec.m}: n={spec.n}, K={K}, sampled sup {float(sup):.3e}")
        blocks[spec.m] = GluedBlock(m=spec.m, action=ActionContext.build(spec.n, K, tol),
                                    images=images, sup=sup, calibrated=calibrated)
    witnesses = [(w.word, w.block) for w in config.witnesses]
    return GluedAction(blocks=blocks, witnesses=witnesses, tol=tol)


def block_sup(glued: GluedAction, m: int) -> Fraction:
    try:
        return glued.blocks[m].sup
    except KeyError:
        raise ConfigError(f"Block {m} is not configured")


def block_of(x: Fraction) -> Optional[int]:
    """m with x in (1/(m+1), 1/m); None at 0 and at block endpoints."""
    if x <= 0 or x > 1:
        return None
    m = int(1 / x)  # floor
    if Fraction(1, m) == x:
        return None
    return m


def _glue_point(glued: GluedAction, word: str, x: Fraction, tol: Fraction) -> Enclosure:
    m = block_of(x)
    if m is None or m not in glued.blocks:
        return Enclosure.point(x)
    block = glued.blocks[m]
    alpha = block.image_matrix(word)
    if alpha.is_identity:
        return Enclosure.point(x)
    scale = block.right - block.left
    u = (x - block.left) / scale
    v = unit_action(block.action, alpha, u, tol)
    return (block.left + v * scale).clamp(block.left, block.right)


def glue_residual(glued: GluedAction, element: str, x, tol=None) -> Enclosure:
    """
    Evaluate the glued action of an abstract word at x in [0, 1].

    Each block acts through its image word by the rescaled unipotent action
    conjugated onto I_m; 0, block endpoints and unconfigured blocks are fixed.
    The glued map is increasing, so interval inputs use their endpoints.
    """
    tol = glued.tol if tol is None else to_fraction(tol)
    x = as_enclosure(x)
    if x.lo < 0 or x.hi > 1:
        raise DomainError(f"Point {x} outside [0, 1]")
    left = _glue_point(glued, element, x.lo, tol)
    if x.is_point:
        return left
    return left.hull(_glue_point(glued, element, x.hi, tol))


def glue_witness_point(glued: GluedAction, element: str, m: int) -> Optional[Fraction]:
    """Sample point of block m moved by the element's image, or None if the image is trivial."""
    block = glued.blocks.get(m)
    if block is None:
        raise ConfigError(f"Block {m} is not configured")
    alpha = block.image_matrix(element)
    if alpha.is_identity:
        return None
    u = witness_point(block.action.ctx, alpha, radius=1, tol=glued.tol)
    if u is None:
        return None
    return block.left + u * (block.right - block.left)
