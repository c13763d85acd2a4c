"""
Enclosure arithmetic over exact rationals.

An ``Enclosure`` is a pair of exact ``Fraction`` endpoints bracketing a real
number. Arithmetic on enclosures is exact endpoint arithmetic, so every
result encloses the true result for any reals inside the inputs.

Transcendental functions (pi, sqrt, arctan, tan_shifted, coth, exp) are
evaluated by series with explicit remainder bounds. Internally partial sums
are rounded outward to dyadic rationals with a working precision of ``bits``
bits; a refinement loop doubles ``bits`` until the raw enclosure is narrower
than ``tol / 4``. The raw enclosure is then widened by ``tol / 4`` on both
sides (see ``settle``), which makes results at ``tol`` contain results at any
``tol' <= tol / 3``.
"""

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Dict, Optional, Union

import mpmath

from nilflow.core.exceptions import DomainError, NonConvergenceError, ParseError

# Configure logging
logger = logging.getLogger(__name__)

Q = Fraction
Rational = Union[int, Fraction]

GUARD_BITS = 16
MAX_REFINEMENTS = 8


def to_fraction(value) -> Fraction:
    """
    Convert ints, Fractions, strings and floats to an exact Fraction.

    Strings accept the forms understood by ``Fraction``: "3", "-1/7", "1e-9",
    "0.125". Floats are converted exactly (their binary value).
    """
    if type(value) is Fraction:
        return value
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as e:
            raise ParseError(f"Not a rational number: {value!r}") from e
    if isinstance(value, float):
        if not math.isfinite(value):
            raise DomainError(f"Non-finite value {value}")
        return Fraction(value)
    raise TypeError(f"Cannot convert {type(value).__name__} to Fraction")


def format_fraction(value: Fraction) -> str:
    """Exact 'p/q' rendering (always with a denominator)."""
    value = to_fraction(value)
    return f"{value.numerator}/{value.denominator}"


def decimal_string(value: Rational, digits: int = 20) -> str:
    """Non-authoritative decimal rendering with ``digits`` significant digits."""
    value = to_fraction(value)
    with mpmath.workdps(digits + 10):
        return mpmath.nstr(mpmath.mpf(value.numerator) / value.denominator, digits)


def floor_dyadic(value: Fraction, bits: int) -> Fraction:
    """Largest multiple of 2**-bits that is <= value."""
    return Fraction((value.numerator << bits) // value.denominator, 1 << bits)


def ceil_dyadic(value: Fraction, bits: int) -> Fraction:
    """Smallest multiple of 2**-bits that is >= value."""
    return Fraction(-((-value.numerator << bits) // value.denominator), 1 << bits)


def tol_bits(tol: Rational) -> int:
    """Number of bits b with 2**-b < tol."""
    tol = to_fraction(tol)
    if tol <= 0:
        raise DomainError(f"Tolerance must be positive, got {tol}")
    return math.ceil(1 / tol).bit_length()


@dataclass(frozen=True)
class Enclosure:
    """
    Closed interval [lo, hi] with exact rational endpoints.

    Attributes:
        lo: Lower endpoint (exact rational)
        hi: Upper endpoint (exact rational), lo <= hi
    """
    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        lo = to_fraction(self.lo)
        hi = to_fraction(self.hi)
        if lo > hi:
            raise DomainError(f"Enclosure with lo > hi: [{lo}, {hi}]")
        object.__setattr__(self, 'lo', lo)
        object.__setattr__(self, 'hi', hi)

    # ------------------------------------------------------------------
    # constructors and conversions
    # ------------------------------------------------------------------
    @classmethod
    def point(cls, value: Rational) -> 'Enclosure':
        value = to_fraction(value)
        return cls(value, value)

    @classmethod
    def hull_of(cls, *items) -> 'Enclosure':
        encs = [as_enclosure(item) for item in items]
        return cls(min(e.lo for e in encs), max(e.hi for e in encs))

    @classmethod
    def from_json(cls, data: Dict[str, str]) -> 'Enclosure':
        try:
            return cls(to_fraction(data["lo"]), to_fraction(data["hi"]))
        except KeyError as e:
            raise ParseError(f"Enclosure JSON needs 'lo' and 'hi': {data}") from e

    def to_json(self) -> Dict[str, str]:
        return {"lo": format_fraction(self.lo), "hi": format_fraction(self.hi)}

    # ------------------------------------------------------------------
    # queries
    # ------------------------------------------------------------------
    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    @property
    def mid(self) -> Fraction:
        return (self.lo + self.hi) / 2

    @property
    def is_point(self) -> bool:
        return self.lo == self.hi

    def contains(self, other) -> bool:
        other = as_enclosure(other)
        return self.lo <= other.lo and other.hi <= self.hi

    def contains_zero(self) -> bool:
        return self.lo <= 0 <= self.hi

    def overlaps(self, other) -> bool:
        other = as_enclosure(other)
        return self.lo <= other.hi and other.lo <= self.hi

    def certainly_lt(self, other) -> bool:
        return self.hi < as_enclosure(other).lo

    def certainly_gt(self, other) -> bool:
        return self.lo > as_enclosure(other).hi

    def hull(self, other) -> 'Enclosure':
        other = as_enclosure(other)
        return Enclosure(min(self.lo, other.lo), max(self.hi, other.hi))

    def intersect(self, other) -> 'Enclosure':
        other = as_enclosure(other)
        lo, hi = max(self.lo, other.lo), min(self.hi, other.hi)
        if lo > hi:
            raise DomainError(f"Disjoint enclosures {self} and {other}")
        return Enclosure(lo, hi)

    def clamp(self, lo: Rational, hi: Rational) -> 'Enclosure':
        """Intersect with [lo, hi], collapsing to the nearest bound if disjoint."""
        lo, hi = to_fraction(lo), to_fraction(hi)
        new_lo = min(max(self.lo, lo), hi)
        new_hi = max(min(self.hi, hi), lo)
        return Enclosure(new_lo, max(new_lo, new_hi))

    def round_out(self, bits: int) -> 'Enclosure':
        """Outward rounding of both endpoints to multiples of 2**-bits."""
        lo = self.lo if self.lo.denominator == 1 else floor_dyadic(self.lo, bits)
        hi = self.hi if self.hi.denominator == 1 else ceil_dyadic(self.hi, bits)
        return Enclosure(lo, hi)

    def widen(self, radius: Rational) -> 'Enclosure':
        radius = to_fraction(radius)
        return Enclosure(self.lo - radius, self.hi + radius)

    # ------------------------------------------------------------------
    # arithmetic
    # ------------------------------------------------------------------
    def __neg__(self) -> 'Enclosure':
        return Enclosure(-self.hi, -self.lo)

    def __add__(self, other) -> 'Enclosure':
        other = as_enclosure(other)
        return Enclosure(self.lo + other.lo, self.hi + other.hi)

    __radd__ = __add__

    def __sub__(self, other) -> 'Enclosure':
        other = as_enclosure(other)
        return Enclosure(self.lo - other.hi, self.hi - other.lo)

    def __rsub__(self, other) -> 'Enclosure':
        return as_enclosure(other) - self

    def __mul__(self, other) -> 'Enclosure':
        other = as_enclosure(other)
        if self.lo >= 0 and other.lo >= 0:
            return Enclosure(self.lo * other.lo, self.hi * other.hi)
        products = (self.lo * other.lo, self.lo * other.hi,
                    self.hi * other.lo, self.hi * other.hi)
        return Enclosure(min(products), max(products))

    __rmul__ = __mul__

    def __truediv__(self, other) -> 'Enclosure':
        other = as_enclosure(other)
        if other.contains_zero():
            raise DomainError(f"Division by an enclosure containing 0: {other}")
        return self * Enclosure(1 / other.hi, 1 / other.lo)

    def __rtruediv__(self, other) -> 'Enclosure':
        return as_enclosure(other) / self

    def __abs__(self) -> 'Enclosure':
        if self.lo >= 0:
            return self
        if self.hi <= 0:
            return -self
        return Enclosure(Fraction(0), max(-self.lo, self.hi))

    def square(self) -> 'Enclosure':
        a = abs(self)
        return Enclosure(a.lo * a.lo, a.hi * a.hi)

    def __pow__(self, exponent: int) -> 'Enclosure':
        if not isinstance(exponent, int) or exponent < 0:
            raise DomainError("Only non-negative integer powers are supported")
        if exponent % 2 == 0:
            a = abs(self)
            return Enclosure(a.lo ** exponent, a.hi ** exponent)
        return Enclosure(self.lo ** exponent, self.hi ** exponent)

    def __str__(self) -> str:
        return f"[{decimal_string(self.lo, 12)}, {decimal_string(self.hi, 12)}]"


def as_enclosure(value) -> Enclosure:
    if isinstance(value, Enclosure):
        return value
    return Enclosure.point(value)


def enc_min(a, b) -> Enclosure:
    a, b = as_enclosure(a), as_enclosure(b)
    return Enclosure(min(a.lo, b.lo), min(a.hi, b.hi))


def enc_max(a, b) -> Enclosure:
    a, b = as_enclosure(a), as_enclosure(b)
    return Enclosure(max(a.lo, b.lo), max(a.hi, b.hi))


_ARITH_OPS: Dict[str, Callable] = {
    'add': lambda a, b: as_enclosure(a) + b,
    'sub': lambda a, b: as_enclosure(a) - b,
    'mul': lambda a, b: as_enclosure(a) * b,
    'div': lambda a, b: as_enclosure(a) / b,
    'neg': lambda a: -as_enclosure(a),
    'abs': lambda a: abs(as_enclosure(a)),
    'min': enc_min,
    'max': enc_max,
    'hull': lambda a, b: as_enclosure(a).hull(b),
    'width': lambda a: as_enclosure(a).width,
    'contains_zero': lambda a: as_enclosure(a).contains_zero(),
}


def enc_arith(op: str, *args):
    """
    Dispatch an enclosure operation by name.

    Args:
        op: One of add, sub, mul, div, neg, abs, min, max, hull, width,
            contains_zero
        *args: Enclosures or exact rationals

    Returns:
        Enclosure, or Fraction for width, or bool for contains_zero

    Raises:
        DomainError: on division by an enclosure containing 0
        ValueError: for an unknown operation name
    """
    try:
        fn = _ARITH_OPS[op]
    except KeyError:
        raise ValueError(f"Unknown enclosure operation '{op}'")
    return fn(*args)


# ----------------------------------------------------------------------
# certification helpers
# ----------------------------------------------------------------------
def settle(raw: Enclosure, tol: Rational) -> Enclosure:
    """
    Widen a raw enclosure of width <= tol/4 into the published result.

    The padding of tol/4 per side plus rounding to a tol/16 dyadic grid keeps
    the width below tol and nests coarse results around fine ones.
    """
    tol = to_fraction(tol)
    bits = tol_bits(tol) + 4
    pad = tol / 4
    return Enclosure(floor_dyadic(raw.lo - pad, bits), ceil_dyadic(raw.hi + pad, bits))


def certify(name: str, evaluate: Callable[[int], Optional[Enclosure]],
            tol: Rational, extra_bits: int = 0) -> Enclosure:
    """
    Run ``evaluate(bits)`` with doubling precision until it is narrow enough.

    ``evaluate`` returns a raw enclosure of the true value, or None when the
    precision was too low to decide a branch.
    """
    tol = to_fraction(tol)
    bits = tol_bits(tol) + GUARD_BITS + extra_bits
    for attempt in range(MAX_REFINEMENTS):
        raw = evaluate(bits)
        if raw is not None and raw.width <= tol / 4:
            return settle(raw, tol)
        logger.debug(f"{name}: refining from {bits} bits (attempt {attempt + 1})")
        bits *= 2
    raise NonConvergenceError(f"{name} did not reach width {tol} within {MAX_REFINEMENTS} refinements")


def _monotone(name: str, point_eval: Callable[[Fraction, int], Optional[Enclosure]],
              x: Enclosure, tol: Rational, increasing: bool = True) -> Enclosure:
    left = certify(name, lambda bits: point_eval(x.lo, bits), tol)
    if x.is_point:
        return left
    right = certify(name, lambda bits: point_eval(x.hi, bits), tol)
    if increasing:
        return Enclosure(left.lo, right.hi)
    return Enclosure(right.lo, left.hi)


# ----------------------------------------------------------------------
# raw series evaluators (working precision ``bits``)
# ----------------------------------------------------------------------
def sqrt_raw(x: Enclosure, bits: int) -> Enclosure:
    if x.lo < 0:
        raise DomainError(f"sqrt of an enclosure with negative part: {x}")
    scale = 1 << (2 * bits)
    lo_int = math.isqrt((x.lo.numerator * scale) // x.lo.denominator)
    hi_num = -((-x.hi.numerator * scale) // x.hi.denominator)
    hi_int = math.isqrt(hi_num) + 1
    return Enclosure(Fraction(lo_int, 1 << bits), Fraction(hi_int, 1 << bits))


def _atan_taylor(y: Enclosure, bits: int) -> Enclosure:
    """Alternating Taylor series for 0 <= y <= 1/2."""
    y = y.round_out(bits)
    y2 = (y * y).round_out(bits)
    power = y
    total = Enclosure.point(0)
    eps = Fraction(1, 1 << bits)
    k = 0
    while True:
        term = (power / (2 * k + 1)).round_out(bits)
        # outward rounding pins a vanishing term at eps, never below it
        if term.hi <= eps:
            # alternating tail: between 0 and the first neglected term
            tail = Enclosure(-term.hi, Fraction(0)) if k % 2 else Enclosure(Fraction(0), term.hi)
            return total + tail
        total = total - term if k % 2 else total + term
        power = (power * y2).round_out(bits)
        k += 1


@lru_cache(maxsize=64)
def pi_raw(bits: int) -> Enclosure:
    # pi = 4 (arctan 1/2 + arctan 1/3)
    total = _atan_taylor(Enclosure.point(Fraction(1, 2)), bits + 4) \
        + _atan_taylor(Enclosure.point(Fraction(1, 3)), bits + 4)
    return (4 * total).round_out(bits)


def _atan_point(x: Fraction, bits: int) -> Enclosure:
    if x < 0:
        return -_atan_point(-x, bits)
    if x == 0:
        return Enclosure.point(0)
    if x > 1:
        return pi_raw(bits + 2) / 2 - _atan_point(1 / x, bits)
    # halve the angle: arctan y = 2 arctan(y / (1 + sqrt(1 + y^2)))
    y = Enclosure.point(x)
    halvings = 0
    while y.hi > Fraction(1, 16):
        y = (y / (1 + sqrt_raw(1 + y * y, bits + 8))).round_out(bits + 8)
        halvings += 1
    return _atan_taylor(y, bits + 8) * (1 << halvings)


def _sin_cos_raw(theta: Enclosure, bits: int):
    """Taylor series of sin and cos for 0 <= theta <= 2 with Lagrange remainders."""
    theta = theta.round_out(bits)
    power = Enclosure.point(1)
    sin_total = Enclosure.point(0)
    cos_total = Enclosure.point(0)
    eps = Fraction(1, 1 << bits)
    k = 0
    while True:
        term = power.round_out(bits)
        if k > 2 and term.hi <= eps:
            remainder = Enclosure(-term.hi, term.hi)
            return sin_total + remainder, cos_total + remainder
        sign = -1 if (k // 2) % 2 else 1
        if k % 2:
            sin_total = sin_total + term if sign > 0 else sin_total - term
        else:
            cos_total = cos_total + term if sign > 0 else cos_total - term
        k += 1
        power = (power * theta / k).round_out(bits)


def _tan_shifted_point(theta: Fraction, bits: int) -> Optional[Enclosure]:
    """tan(theta - pi/2) = -cot(theta) for 0 < theta < pi."""
    if theta <= Fraction(3, 2):
        s, c = _sin_cos_raw(Enclosure.point(theta), bits)
        if s.lo <= 0:
            return None
        return -c / s
    # reflect: -cot(theta) = cot(pi - theta)
    phi = pi_raw(bits) - theta
    if phi.lo <= 0:
        return None
    s, c = _sin_cos_raw(phi, bits)
    if s.lo <= 0:
        return None
    return c / s


def exp_raw(x: Fraction, bits: int) -> Enclosure:
    if x == 0:
        return Enclosure.point(1)
    if x < 0:
        return (1 / exp_raw(-x, bits + 2)).round_out(bits + 2)
    # scale into [0, 1/256] and square back
    s = max(0, x.numerator.bit_length() - x.denominator.bit_length() + 9)
    work = bits + s + 8 + max(0, x.numerator.bit_length() - x.denominator.bit_length())
    r = x / (1 << s)
    term = Enclosure.point(1)
    total = Enclosure.point(0)
    eps = Fraction(1, 1 << work)
    k = 0
    while term.hi > eps:
        total = total + term
        k += 1
        term = (term * r / k).round_out(work)
    # remainder <= 2 * first neglected term since r <= 1/256
    value = total + Enclosure(Fraction(0), 2 * term.hi)
    for _ in range(s):
        value = (value * value).round_out(work)
    return value


def _coth_point(y: Fraction, bits: int) -> Optional[Enclosure]:
    e = exp_raw(2 * y, bits + 8)
    if e.lo <= 1:
        return None
    return (e + 1) / (e - 1)


# ----------------------------------------------------------------------
# public certified functions
# ----------------------------------------------------------------------
def enc_pi(tol: Rational) -> Enclosure:
    """Enclosure of pi with width <= tol."""
    return certify("pi", pi_raw, tol)


def enc_sqrt(x, tol: Rational) -> Enclosure:
    x = as_enclosure(x)
    if x.lo < 0:
        raise DomainError(f"sqrt requires lo >= 0, got {x}")
    return _monotone("sqrt", lambda v, bits: sqrt_raw(Enclosure.point(v), bits), x, tol)


def enc_arctan(x, tol: Rational) -> Enclosure:
    """Arctangent; odd by construction, so arctan(-x) = -arctan(x) endpoint-for-endpoint."""
    x = as_enclosure(x)
    if x.is_point and x.lo < 0:
        return -enc_arctan(-x, tol)
    return _monotone("arctan", _atan_point, x, tol)


def enc_tan_shifted(theta, tol: Rational) -> Enclosure:
    """
    tan(theta - pi/2) = -cot(theta) for theta strictly inside (0, pi).

    Raises:
        DomainError: if the enclosure is not certified to lie inside (0, pi)
    """
    theta = as_enclosure(theta)
    if theta.lo <= 0 or theta.hi >= pi_raw(tol_bits(tol) + GUARD_BITS).lo:
        if theta.lo <= 0 or theta.hi >= pi_raw(4 * (tol_bits(tol) + GUARD_BITS)).lo:
            raise DomainError(f"tan_shifted needs 0 < theta < pi, got {theta}")
    return _monotone("tan_shifted", _tan_shifted_point, theta, tol)


def enc_exp(x, tol: Rational) -> Enclosure:
    x = as_enclosure(x)
    return _monotone("exp", exp_raw, x, tol)


def enc_coth(y, tol: Rational) -> Enclosure:
    y = as_enclosure(y)
    if y.lo <= 0:
        raise DomainError(f"coth requires y > 0, got {y}")
    return _monotone("coth", _coth_point, y, tol, increasing=False)


def _agm_raw(a: Enclosure, b: Enclosure, bits: int) -> Enclosure:
    # after one step the arithmetic means decrease and the geometric means
    # increase, so the limit lies in [b_k, a_k]
    eps = Fraction(1, 1 << bits)
    while True:
        a, b = ((a + b) / 2).round_out(bits + 16), sqrt_raw(a * b, bits + 16)
        if a.hi - b.lo < eps:
            return Enclosure(min(b.lo, a.lo), max(a.hi, b.hi))


def enc_agm(a: Rational, b: Rational, tol: Rational) -> Enclosure:
    """Arithmetic-geometric mean of two positive rationals."""
    a, b = to_fraction(a), to_fraction(b)
    if a <= 0 or b <= 0:
        raise DomainError("agm needs positive arguments")
    return certify("agm", lambda bits: _agm_raw(Enclosure.point(a), Enclosure.point(b), bits), tol)


def quartic_integral_raw(bits: int) -> Enclosure:
    root2 = sqrt_raw(Enclosure.point(2), bits + 8)
    agm = _agm_raw(root2, Enclosure.point(1), bits + 8)
    return (root2 * pi_raw(bits + 8) / agm).round_out(bits + 4)


@lru_cache(maxsize=32)
def quartic_integral(tol: Fraction) -> Enclosure:
    """Enclosure of the integral of (1 + u^4)^(-1/2) over the real line, sqrt(2) pi / agm(1, sqrt 2)."""
    return certify("quartic_integral", quartic_integral_raw, tol)


_TRANSCENDENTALS = {
    'sqrt': enc_sqrt,
    'arctan': enc_arctan,
    'tan_shifted': enc_tan_shifted,
    'coth': enc_coth,
    'exp': enc_exp,
}


def enc_transcendental(fn: str, x, tol: Rational) -> Enclosure:
    """
    Dispatch a certified transcendental by name.

    Args:
        fn: One of pi, sqrt, arctan, tan_shifted, coth, exp
        x: Argument (ignored for pi)
        tol: Width bound for point arguments

    Returns:
        Enclosure containing the true value

    Raises:
        DomainError: argument outside the function's domain
        NonConvergenceError: width not reached within the refinement budget
    """
    if fn == 'pi':
        return enc_pi(tol)
    try:
        return _TRANSCENDENTALS[fn](x, tol)
    except KeyError:
        raise ValueError(f"Unknown transcendental '{fn}'")
