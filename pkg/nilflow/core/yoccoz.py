"""
The diffeomorphism family phi_{a,b}: [0, a] -> [0, b].

With psi_u(t) = (1/u)(arctan(t/u) + pi/2), u0 = pi/a and u1 = pi/b,
phi_{a,b} = psi_{u1} o psi_{u0}^{-1}. Writing s = tan(pi x / a - pi/2):

    phi(x)  = (b / pi) (arctan((b / a) s) + pi / 2)
    phi'(x) = (s^2 + 1) / (s^2 + (a / b)^2)

phi fixes both endpoints with derivative 1 there, phi(a - x) = b - phi(x),
and phi_{b,c} o phi_{a,b} = phi_{a,c}.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from nilflow.core.certified_reals import (
    Enclosure,
    as_enclosure,
    enc_arctan,
    enc_pi,
    enc_tan_shifted,
    settle,
    to_fraction,
)
from nilflow.core.exceptions import DomainError, NonConvergenceError

# Configure logging
logger = logging.getLogger(__name__)

# points closer than a * ENDPOINT_GAP to an endpoint skip the cot evaluation
ENDPOINT_GAP = Fraction(1, 10 ** 6)
MAX_ATTEMPTS = 6


@dataclass(frozen=True)
class PhiParams:
    """
    Source and target lengths of phi_{a,b}.

    Attributes:
        a: Source length (> 0)
        b: Target length (> 0)
    """
    a: Fraction
    b: Fraction

    def __post_init__(self):
        a, b = to_fraction(self.a), to_fraction(self.b)
        if a <= 0 or b <= 0:
            raise DomainError(f"phi needs positive lengths, got a={a}, b={b}")
        object.__setattr__(self, 'a', a)
        object.__setattr__(self, 'b', b)

    def u0(self, tol) -> Enclosure:
        return enc_pi(to_fraction(tol) / 8) / self.a

    def u1(self, tol) -> Enclosure:
        return enc_pi(to_fraction(tol) / 8) / self.b

    @property
    def envelope(self) -> Enclosure:
        """Exact range [min(1, b^2/a^2), max(1, b^2/a^2)] of phi'."""
        ratio = (self.b / self.a) ** 2
        return Enclosure(min(Fraction(1), ratio), max(Fraction(1), ratio))


def _shifted_tan(a: Fraction, x: Fraction, inner: Fraction) -> Enclosure:
    theta = enc_pi(inner / 8) * (x / a)
    return enc_tan_shifted(theta, inner)


@lru_cache(maxsize=65536)
def _phi_point(a: Fraction, b: Fraction, x: Fraction, tol: Fraction) -> Enclosure:
    if x == 0:
        return Enclosure.point(0)
    if x == a:
        return Enclosure.point(b)
    if 2 * x == a:
        return Enclosure.point(b / 2)
    if 2 * x > a:
        return b - _phi_point(a, b, a - x, tol)
    if x < a * ENDPOINT_GAP:
        # phi' lies between 1 and phi'(eta) on [0, eta]
        slope = Enclosure.point(1).hull(_deriv_point(a, b, a * ENDPOINT_GAP, tol))
        return Enclosure(x * slope.lo, x * slope.hi)
    inner = tol / 8
    for _ in range(MAX_ATTEMPTS):
        pi = enc_pi(inner / 8)
        s = _shifted_tan(a, x, inner)
        angle = enc_arctan(s * (b / a), inner)
        raw = (b / pi) * (angle + pi / 2)
        if raw.width <= tol / 4:
            return settle(raw, tol).clamp(0, b)
        inner = inner / 16
    raise NonConvergenceError(f"phi_{a},{b}({x}) did not reach width {tol}")


@lru_cache(maxsize=65536)
def _deriv_point(a: Fraction, b: Fraction, x: Fraction, tol: Fraction) -> Enclosure:
    envelope = PhiParams(a, b).envelope
    if x == 0 or x == a or a == b:
        return Enclosure.point(1)
    if 2 * x == a:
        return Enclosure.point((b / a) ** 2)
    if 2 * x > a:
        return _deriv_point(a, b, a - x, tol)
    if x < a * ENDPOINT_GAP:
        return Enclosure.point(1).hull(_deriv_point(a, b, a * ENDPOINT_GAP, tol))
    inner = tol / 8
    for _ in range(MAX_ATTEMPTS):
        s2 = _shifted_tan(a, x, inner).square()
        raw = ((s2 + 1) / (s2 + (a / b) ** 2)).intersect(envelope)
        if raw.width <= tol / 4:
            return settle(raw, tol).intersect(envelope)
        inner = inner / 16
    raise NonConvergenceError(f"phi'_{a},{b}({x}) did not reach width {tol}")


def _check_domain(p: PhiParams, x: Enclosure, tol: Fraction) -> Enclosure:
    if x.lo < -tol or x.hi > p.a + tol:
        raise DomainError(f"Point {x} outside [0, {p.a}]")
    return x.clamp(0, p.a)


def phi_apply(p: PhiParams, x, tol) -> Enclosure:
    """
    Enclosure of phi_{a,b}(x).

    Point inputs away from the endpoints give width <= tol; interval inputs
    use monotonicity (image of the endpoints).

    Raises:
        DomainError: if x is outside [0, a] by more than tol
    """
    tol = to_fraction(tol)
    x = _check_domain(p, as_enclosure(x), tol)
    if p.a == p.b:
        return x
    left = _phi_point(p.a, p.b, x.lo, tol)
    if x.is_point:
        return left
    right = _phi_point(p.a, p.b, x.hi, tol)
    return Enclosure(left.lo, right.hi)


def phi_deriv(p: PhiParams, x, tol) -> Enclosure:
    """
    Enclosure of phi'_{a,b}(x), always inside [min(1, b^2/a^2), max(1, b^2/a^2)].

    phi' is monotone on each half of [0, a]; an interval straddling a/2 also
    picks up the midpoint value b^2/a^2.
    """
    tol = to_fraction(tol)
    x = _check_domain(p, as_enclosure(x), tol)
    if p.a == p.b:
        return Enclosure.point(1)
    result = _deriv_point(p.a, p.b, x.lo, tol)
    if x.is_point:
        return result
    result = result.hull(_deriv_point(p.a, p.b, x.hi, tol))
    if x.lo < p.a / 2 < x.hi:
        result = result.hull((p.b / p.a) ** 2)
    return result.intersect(p.envelope)
