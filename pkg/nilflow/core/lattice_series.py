"""
Certified summation of the lattice series S_K.

For q in Z^n the weight is B_K(q) = K + q_1^{2n} + q_2^{2n-2} + ... + q_n^2.
S_K sums 1/B_K over Z^n, and S_K(r) sums it over the lexicographic down-set
{q < r}. The series is finite exactly when sum_j 1/e_j < 1, that is n <= 3.

Summation runs coordinate by coordinate. The fiber mass at level l is

    F_l(A) = sum over (q_l, ..., q_n) of 1 / (A + sum_{j >= l} q_j^{e_j})

and F_{n+1}(A) = 1/A. Each level is summed explicitly for 0 <= m < N and
the tail m >= N is enclosed analytically:

* the fiber below is replaced by its large-argument form c * B^(-gamma)
  with a certified relative error (gamma = 1, 1/2, 1/4 for 0, 1, 2 free
  coordinates),
* (A + m^e)^(-gamma) is expanded in the alternating binomial series of A/m^e,
* the power sums sum_{m >= N} m^(-s) are enclosed by Euler-Maclaurin with
  the first neglected term as remainder bound.

All error terms are exact rationals; results are rounded outward to dyadic
rationals and settled the same way as the certified transcendentals.
"""

import itertools
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Dict, Sequence, Tuple, Union

from nilflow.core.certified_reals import (
    Enclosure,
    ceil_dyadic,
    floor_dyadic,
    pi_raw,
    quartic_integral_raw,
    settle,
    sqrt_raw,
    to_fraction,
    tol_bits,
)
from nilflow.core.config import summation_budget
from nilflow.core.exceptions import (
    BudgetExhaustedError,
    DimensionMismatchError,
    DivergentSeriesError,
    DomainError,
    NonConvergenceError,
)
from nilflow.core.unipotent import (
    LatticePoint,
    UnipotentMatrix,
    apply_to_lattice,
    lattice_box,
    mat_inverse,
)

# Configure logging
logger = logging.getLogger(__name__)

GUARD_BITS = 24
MAX_REFINEMENTS = 5
MIN_TAIL_START = 16
MAX_BINOMIAL_TERMS = 64

# B_2, B_4, ..., B_14; the last one bounds the Euler-Maclaurin remainder
BERNOULLI = (
    Fraction(1, 6), Fraction(-1, 30), Fraction(1, 42), Fraction(-1, 30),
    Fraction(5, 66), Fraction(-691, 2730), Fraction(7, 6),
)
EM_TERMS = len(BERNOULLI) - 1

# exponent gamma of the large-argument form of a fiber with d free coordinates
FIBER_GAMMA = {0: Fraction(1), 1: Fraction(1, 2), 2: Fraction(1, 4)}

LatticeLike = Union[LatticePoint, Sequence[int]]


@dataclass(frozen=True)
class SeriesContext:
    """
    Dimension and constant of the series.

    Attributes:
        n: Dimension (>= 1)
        K: Positive rational constant, K >= 1
    """
    n: int
    K: Fraction

    def __post_init__(self):
        K = to_fraction(self.K)
        if self.n < 1:
            raise DomainError(f"Dimension must be >= 1, got {self.n}")
        if K < 1:
            raise DomainError(f"K must be >= 1, got {K}")
        object.__setattr__(self, 'K', K)

    @property
    def exponents(self) -> Tuple[int, ...]:
        """e_j = 2n - 2j + 2 for j = 1..n."""
        return tuple(2 * (self.n - level) for level in range(self.n))

    @property
    def converges(self) -> bool:
        return self.n <= 3


def as_lattice_point(q: LatticeLike) -> LatticePoint:
    return q if isinstance(q, LatticePoint) else LatticePoint(tuple(q))


def b_value(ctx: SeriesContext, q: LatticeLike) -> Fraction:
    """Exact B_K(q) = K + sum_j q_j^{e_j}."""
    q = as_lattice_point(q)
    if len(q) != ctx.n:
        raise DimensionMismatchError(f"Point of length {len(q)} in dimension {ctx.n}")
    return ctx.K + sum(c ** e for c, e in zip(q.coords, ctx.exponents))


def _require_convergent(ctx: SeriesContext) -> None:
    if not ctx.converges:
        raise DivergentSeriesError(
            f"The lattice series diverges for n = {ctx.n} (sum of 1/e_j >= 1); n must be <= 3")


def _root_ceil(value: Fraction, e: int) -> int:
    """Smallest integer N >= 0 with N**e >= value."""
    if value <= 0:
        return 0
    guess = max(0, int(float(value) ** (1.0 / e)) - 1)
    while Fraction(guess) ** e < value:
        guess += 1
    while guess > 0 and Fraction(guess - 1) ** e >= value:
        guess -= 1
    return guess


def _power(base: int, exponent: Fraction) -> Fraction:
    """base**exponent for half-integer exponents; base must be a square then."""
    if exponent.denominator == 1:
        return Fraction(base) ** int(exponent)
    root = math.isqrt(base)
    if root * root != base:
        raise DomainError(f"{base} is not a perfect square")
    return Fraction(root) ** int(2 * exponent)


class _Engine:
    """
    Summation state for one (n, K, precision) triple.

    ``bits`` is the dyadic working precision; ``stretch`` pushes every tail
    start N further out by a factor 2**stretch.
    """

    def __init__(self, n: int, K: Fraction, bits: int, stretch: int):
        self.n = n
        self.K = K
        self.bits = bits
        self.stretch = stretch
        self.exponents = tuple(2 * (n - level) for level in range(n))
        self.budget = summation_budget()
        self.pi = pi_raw(bits + 8)
        self.c0 = quartic_integral_raw(bits + 8)
        self.fiber_constant = {
            0: Enclosure.point(1),
            1: self.pi,
            2: (self.pi * self.c0).round_out(bits + 8),
        }
        # closed regimes: relative error of the large-argument form below 2**-bits
        root = max(6, -(-(bits + 2) // 8))
        quarter = max(4, -(-(bits + 4) // 4))
        self.threshold = {0: Fraction(0), 1: Fraction(root * root), 2: Fraction(quarter ** 4)}
        self._fiber: Dict[Tuple[int, Fraction], Enclosure] = {}
        self._positive: Dict[Tuple[int, Fraction, int], Enclosure] = {}
        self._zeta: Dict[Tuple[Fraction, int], Enclosure] = {}

    # ------------------------------------------------------------------
    # error factors
    # ------------------------------------------------------------------
    def _geometric(self, exponent: int) -> Fraction:
        """2**-exponent, saturated at the working precision."""
        return Fraction(1, 1 << min(exponent, self.bits + 16))

    def coth_excess(self, B: Fraction) -> Fraction:
        """Upper bound of coth(pi sqrt B) - 1, using exp(-2 pi s) <= 2**(-8 s)."""
        s = math.isqrt(math.floor(B))
        if s < 1:
            raise DomainError(f"Closed form needs B >= 1, got {B}")
        u = self._geometric(8 * s)
        return 2 * u / (1 - u)

    def poisson_excess(self, B: Fraction) -> Fraction:
        """Relative error of the quartic-fiber integral, using exp(-pi l) <= 16**-l."""
        lam = math.isqrt(math.isqrt(math.floor(B)))
        if lam < 1:
            raise DomainError(f"Closed form needs B >= 1, got {B}")
        u = self._geometric(4 * lam)
        return 11 * u / (1 - u)

    def relative_factor(self, depth: int, B: Fraction) -> Enclosure:
        if depth == 0:
            return Enclosure.point(1)
        if depth == 1:
            return Enclosure(Fraction(1), 1 + self.coth_excess(B))
        delta = self.poisson_excess(B)
        return Enclosure(1 - delta, (1 + delta) * (1 + self.coth_excess(B)))

    # ------------------------------------------------------------------
    # building blocks
    # ------------------------------------------------------------------
    def reciprocal(self, A: Fraction) -> Enclosure:
        value = 1 / A
        return Enclosure(floor_dyadic(value, self.bits + 8), ceil_dyadic(value, self.bits + 8))

    def closed(self, depth: int, B: Fraction) -> Enclosure:
        """Large-argument form of a fiber with 1 or 2 free coordinates."""
        root = sqrt_raw(Enclosure.point(B), self.bits + 8)
        if depth == 2:
            root = sqrt_raw(root, self.bits + 8)
        inverse = Enclosure(1 / root.hi, 1 / root.lo)
        value = (self.fiber_constant[depth] * inverse).round_out(self.bits + 8)
        return (value * self.relative_factor(depth, B)).round_out(self.bits + 8)

    def zeta(self, s: Fraction, N: int) -> Enclosure:
        """sum_{m >= N} m**-s by Euler-Maclaurin."""
        key = (s, N)
        cached = self._zeta.get(key)
        if cached is not None:
            return cached
        total = _power(N, 1 - s) / (s - 1) + _power(N, -s) / 2
        rising = s
        for k in range(1, EM_TERMS + 1):
            total += BERNOULLI[k - 1] / math.factorial(2 * k) * rising * _power(N, -s - 2 * k + 1)
            rising *= (s + 2 * k - 1) * (s + 2 * k)
        k = EM_TERMS + 1
        omitted = BERNOULLI[k - 1] / math.factorial(2 * k) * rising * _power(N, -s - 2 * k + 1)
        value = Enclosure.hull_of(total, total + omitted).round_out(self.bits + 12)
        self._zeta[key] = value
        return value

    # ------------------------------------------------------------------
    # recursive fiber engine
    # ------------------------------------------------------------------
    def fiber(self, level: int, A: Fraction) -> Enclosure:
        """F_level(A), levels counted from 0."""
        key = (level, A)
        cached = self._fiber.get(key)
        if cached is not None:
            return cached
        depth = self.n - level
        if depth == 0:
            value = self.reciprocal(A)
        elif depth <= 2 and A >= self.threshold[depth]:
            value = self.closed(depth, A)
        else:
            value = self.line(level, A)
        self._fiber[key] = value
        return value

    def line(self, level: int, A: Fraction) -> Enclosure:
        """sum over m in Z of F_{level+1}(A + m^e)."""
        return (self.fiber(level + 1, A) + 2 * self.positive(level, A, 1)).round_out(self.bits + 4)

    def positive(self, level: int, A: Fraction, start: int) -> Enclosure:
        """sum over m >= start (start >= 0) of F_{level+1}(A + m^e)."""
        key = (level, A, start)
        cached = self._positive.get(key)
        if cached is not None:
            return cached
        N = self.tail_start(level, A, start)
        value = (self.explicit(level, A, start, N - 1) + self.tail(level, A, N)).round_out(self.bits + 4)
        self._positive[key] = value
        return value

    def below(self, level: int, A: Fraction, r: int) -> Enclosure:
        """sum over m < r of F_{level+1}(A + m^e), using the symmetry m -> -m."""
        if r <= 1:
            return self.positive(level, A, 1 - r)
        return self.line(level, A) - self.positive(level, A, r)

    def tail_start(self, level: int, A: Fraction, start: int) -> int:
        e = self.exponents[level]
        depth = self.n - level - 1
        need = max(16 * A, self.threshold[depth], Fraction(1))
        N = max(MIN_TAIL_START, _root_ceil(need, e)) << self.stretch
        N = max(N, start)
        if (e * FIBER_GAMMA[depth]).denominator != 1:
            root = math.isqrt(N)
            if root * root != N:
                N = (root + 1) ** 2
        if N - start > self.budget:
            logger.warning(f"Summation radius {N} exceeds budget {self.budget}")
            raise BudgetExhaustedError(
                f"Summation needs {N - start} explicit terms, budget is {self.budget} (NILFLOW_BUDGET)")
        return N

    def explicit(self, level: int, A: Fraction, first: int, last: int) -> Enclosure:
        if last < first:
            return Enclosure.point(0)
        e = self.exponents[level]
        if level == self.n - 1:
            # innermost run in integer fixed point: floor(2^b q / (p + q m^e)) per term
            bits = self.bits + 8
            p, q = A.numerator, A.denominator
            scaled = q << bits
            low = 0
            for m in range(first, last + 1):
                low += scaled // (p + q * m ** e)
            count = last - first + 1
            return Enclosure(Fraction(low, 1 << bits), Fraction(low + count, 1 << bits))
        total = Enclosure.point(0)
        for m in range(first, last + 1):
            total = total + self.fiber(level + 1, A + m ** e)
        return total.round_out(self.bits + 4)

    def tail(self, level: int, A: Fraction, N: int) -> Enclosure:
        """sum over m >= N of F_{level+1}(A + m^e) with N^e >= 16 A."""
        e = self.exponents[level]
        depth = self.n - level - 1
        gamma = FIBER_GAMMA[depth]
        s0 = e * gamma
        eps = Fraction(1, 1 << (self.bits + 12))
        total = Enclosure.point(0)
        coef = Fraction(1)
        power = Fraction(1)
        k = 0
        while True:
            term = self.zeta(s0 + e * k, N) * (coef * power)
            if max(abs(term.lo), abs(term.hi)) < eps or k >= MAX_BINOMIAL_TERMS:
                # alternating series: the rest lies between 0 and this term
                total = total + Enclosure.hull_of(0, term)
                break
            total = total + term
            coef = coef * (-gamma - k) / (k + 1)
            power = power * A
            k += 1
        value = (total.round_out(self.bits + 12) * self.fiber_constant[depth]).round_out(self.bits + 8)
        return (value * self.relative_factor(depth, Fraction(N) ** e)).round_out(self.bits + 8)

    # ------------------------------------------------------------------
    # slabs
    # ------------------------------------------------------------------
    def prefix(self, prefix: Tuple[int, ...]) -> Enclosure:
        """Mass of {q : (q_1..q_k) < prefix} as a sum of slabs."""
        total = Enclosure.point(0)
        A = self.K
        for level, r in enumerate(prefix):
            total = total + self.below(level, A, r)
            A = A + Fraction(r) ** self.exponents[level]
        return total

    def outside_box(self, radius: int) -> Enclosure:
        """
        Mass of {q : some |q_i| > radius}, split by the first coordinate leaving the box.

        That coordinate contributes both signed tails m > radius of its fiber
        sum; the coordinates before it range over the box.
        """
        total = Enclosure.point(0)
        heads = [self.K]
        for level in range(self.n):
            e = self.exponents[level]
            for A in heads:
                total = total + 2 * self.positive(level, A, radius + 1)
            heads = [A + Fraction(m) ** e for A in heads for m in range(-radius, radius + 1)]
        return total.round_out(self.bits + 4)


@lru_cache(maxsize=32)
def _engine(n: int, K: Fraction, bits: int, stretch: int) -> _Engine:
    logger.debug(f"New summation engine n={n} K={K} bits={bits} stretch={stretch}")
    return _Engine(n, K, bits, stretch)


def _certified(name: str, ctx: SeriesContext, tol, compute) -> Enclosure:
    _require_convergent(ctx)
    tol = to_fraction(tol)
    if tol <= 0:
        raise DomainError(f"Tolerance must be positive, got {tol}")
    bits = tol_bits(tol) + GUARD_BITS
    for stretch in range(MAX_REFINEMENTS):
        engine = _engine(ctx.n, ctx.K, bits << stretch, stretch)
        raw = compute(engine)
        if raw.width <= tol / 4:
            return settle(raw, tol)
        logger.debug(f"{name}: width {float(raw.width):.3e} above {float(tol) / 4:.3e}, refining")
    raise NonConvergenceError(f"{name} did not reach width {tol} for n={ctx.n}, K={ctx.K}")


@lru_cache(maxsize=65536)
def _prefix_cached(ctx: SeriesContext, prefix: Tuple[int, ...], tol: Fraction) -> Enclosure:
    return _certified("prefix_mass", ctx, tol, lambda engine: engine.prefix(prefix))


def total_mass(ctx: SeriesContext, tol) -> Enclosure:
    """
    Enclosure of S_K with width <= tol.

    Raises:
        DivergentSeriesError: for n >= 4
        BudgetExhaustedError: if the summation radius passes NILFLOW_BUDGET
    """
    return _total_cached(ctx, to_fraction(tol))


@lru_cache(maxsize=256)
def _total_cached(ctx: SeriesContext, tol: Fraction) -> Enclosure:
    return _certified("total_mass", ctx, tol, lambda engine: engine.fiber(0, engine.K))


def prefix_mass(ctx: SeriesContext, prefix: Sequence[int], tol) -> Enclosure:
    """Mass of the lattice points whose first k coordinates precede ``prefix``."""
    prefix = tuple(int(p) for p in prefix)
    if not 1 <= len(prefix) <= ctx.n:
        raise DimensionMismatchError(f"Prefix length {len(prefix)} outside [1, {ctx.n}]")
    return _prefix_cached(ctx, prefix, to_fraction(tol))


def downset_mass(ctx: SeriesContext, r: LatticeLike, tol) -> Enclosure:
    """Enclosure of S_K(r), the mass of {q : q < r}."""
    r = as_lattice_point(r)
    if len(r) != ctx.n:
        raise DimensionMismatchError(f"Point of length {len(r)} in dimension {ctx.n}")
    return prefix_mass(ctx, r.coords, tol)


def fiber_mass(ctx: SeriesContext, level: int, A, tol) -> Enclosure:
    """Sum over coordinates level..n (1-indexed) of 1/(A + sum q_j^{e_j})."""
    if not 1 <= level <= ctx.n + 1:
        raise DomainError(f"Level {level} outside [1, {ctx.n + 1}]")
    A = to_fraction(A)
    if A < 1:
        raise DomainError(f"Fiber argument must be >= 1, got {A}")
    return _certified("fiber_mass", ctx, tol, lambda engine: engine.fiber(level - 1, A))


def truncated_mass(ctx: SeriesContext, radius: int, tol) -> Tuple[Enclosure, Enclosure]:
    """
    Box mass over |q_i| <= radius and the summation engine's enclosure of the rest.

    The rest is computed directly from the fiber tails, never from S_K, so
    box + rest is an independent enclosure of S_K.

    Returns:
        (enclosure of the box sum, enclosure of S_K minus the box sum)

    Raises:
        DivergentSeriesError: for n >= 4
        DomainError: for a negative radius
    """
    _require_convergent(ctx)
    if radius < 0:
        raise DomainError(f"Radius must be >= 0, got {radius}")
    tol = to_fraction(tol)
    bits = tol_bits(tol) + GUARD_BITS
    low = 0
    count = 0
    for q in itertools.product(range(-radius, radius + 1), repeat=ctx.n):
        B = ctx.K + sum(c ** e for c, e in zip(q, ctx.exponents))
        low += (B.denominator << bits) // B.numerator
        count += 1
    box = Enclosure(Fraction(low, 1 << bits), Fraction(low + count, 1 << bits))
    rest = _certified("truncated_mass", ctx, tol, lambda engine: engine.outside_box(radius))
    return box, rest.clamp(0, rest.hi)


def ratio_scan(p: int, K, radius: int) -> Fraction:
    """
    max over |x|, |y| <= radius of |(x + y)^p - y^p| / (x^(p+2) + y^p + K).

    Checkable form of the polynomial ratio bound; nonincreasing in K.
    """
    if p < 2 or p % 2:
        raise DomainError(f"Exponent must be even and >= 2, got {p}")
    K = to_fraction(K)
    best = Fraction(0)
    for x in range(-radius, radius + 1):
        for y in range(-radius, radius + 1):
            value = Fraction(abs((x + y) ** p - y ** p)) / (x ** (p + 2) + y ** p + K)
            if value > best:
                best = value
    return best


def b_ratio_sup(ctx: SeriesContext, i: int, radius: int) -> Fraction:
    """max over the box of |B_K(s_i q) / B_K(q) - 1|."""
    sigma = UnipotentMatrix.generator(ctx.n, i)
    return max(abs(b_value(ctx, apply_to_lattice(sigma, q)) / b_value(ctx, q) - 1)
               for q in lattice_box(ctx.n, radius))


def _iroot(value: int, e: int) -> int:
    """floor(value ** (1/e)) for a non-negative integer."""
    if value < 2:
        return value
    lo, hi = 1, 1 << (value.bit_length() // e + 1)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if mid ** e <= value:
            lo = mid
        else:
            hi = mid
    return lo


def _inverse_power_upper(K: Fraction, s: Fraction, bits: int = 32) -> Fraction:
    """Rational upper bound of K**-s for K >= 1 and 0 < s <= 1."""
    scaled = K ** s.numerator * (1 << (bits * s.denominator))
    return Fraction(1 << bits, _iroot(scaled.numerator // scaled.denominator, s.denominator))


def b_ratio_bound(ctx: SeriesContext, alpha: UnipotentMatrix) -> Fraction:
    """
    Upper bound of |B_K(alpha q) / B_K(q) - 1| valid for every q in Z^n.

    Row j of alpha adds a linear form L_j of the earlier coordinates with
    |L_j| <= A_j rho^(1/e_{j-1}), where rho = max_k |q_k|^{e_k} and A_j is
    the absolute row sum below the diagonal. Each monomial of
    (q_j + L_j)^{e_j} - q_j^{e_j} is then at most C(e_j, t) A_j^t rho^(1 - s)
    with s = t (1/e_j - 1/e_{j-1}), and rho^(1 - s) / (K + rho) <= K^-min(s, 1)
    by the weighted AM-GM inequality.
    """
    if alpha.n != ctx.n:
        raise DimensionMismatchError(f"Matrix of size {alpha.n} in dimension {ctx.n}")
    exponents = ctx.exponents
    bound = Fraction(0)
    for j in range(1, ctx.n):
        weight = sum(abs(c) for c in alpha.entries[j][:j])
        if weight == 0:
            continue
        e, coarser = exponents[j], exponents[j - 1]
        gap = Fraction(1, e) - Fraction(1, coarser)
        for t in range(1, e + 1):
            s = min(Fraction(1), t * gap)
            bound += math.comb(e, t) * weight ** t * _inverse_power_upper(ctx.K, s)
    return bound


def derivative_envelope(ctx: SeriesContext, alpha: UnipotentMatrix) -> Enclosure:
    """
    Interval holding 1 and (B_K(q) / B_K(alpha q))^2 for every q.

    Every tile derivative of g_alpha lies between 1 and that square, so the
    interval bounds g_alpha' everywhere, J_K included.
    """
    forward = b_ratio_bound(ctx, alpha)
    backward = b_ratio_bound(ctx, mat_inverse(alpha))
    return Enclosure(1 / (1 + forward) ** 2, (1 + backward) ** 2)


def midpoint_derivative_sup(ctx: SeriesContext, alpha: UnipotentMatrix, radius: int) -> Fraction:
    """max over the box of |(B_K(q) / B_K(alpha q))^2 - 1|, the tile-midpoint value of |g' - 1|."""
    return max(abs((b_value(ctx, q) / b_value(ctx, apply_to_lattice(alpha, q))) ** 2 - 1)
               for q in lattice_box(ctx.n, radius))
