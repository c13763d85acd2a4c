"""
Acceptance suite behind ``nilflow verify-all``.

Each check is a function of (settings, rng) returning a CheckResult; a
NilflowError inside a check fails that check only. Quick mode shrinks the
sample counts, not the tolerances.
"""

import logging
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Optional

import mpmath
import numpy as np

from nilflow.core.certified_reals import Enclosure
from nilflow.core.config import load_bundled_demo
from nilflow.core.dynamics import AtomicMeasure, EvaluableMap, tau_report, translation_number
from nilflow.core.exceptions import NilflowError
from nilflow.core.lattice_series import SeriesContext, b_value, downset_mass, total_mass
from nilflow.core.nilaction import (
    ActionContext,
    build_glued_action,
    calibrate_K,
    g_apply,
    glue_residual,
    glue_witness_point,
    halton_deviation,
    midpoint_deviation,
)
from nilflow.core.plmaps import endpoint_character, pl_commutator, pl_compose, random_pl
from nilflow.core.staircase import (
    binomial_exponent,
    exponent_table,
    nilpotency_witness,
    parse_staircase_word,
)
from nilflow.core.tiling import Interior, locate, tiles_in_box
from nilflow.core.unipotent import (
    LatticePoint,
    UnipotentMatrix,
    generators,
    lattice_box,
    lex_successor,
    random_word,
    word_eval,
)
from nilflow.core.yoccoz import PhiParams, phi_apply, phi_deriv

# Configure logging
logger = logging.getLogger(__name__)


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def to_json(self, with_time: bool = False) -> Dict[str, object]:
        data = {"name": self.name, "passed": self.passed, "detail": self.detail}
        if with_time:
            data["seconds"] = round(self.seconds, 3)
        return data


@dataclass
class Settings:
    """Sample counts for one run; ``quick`` shrinks them."""
    quick: bool = False
    seed: int = 0
    counts: Dict[str, int] = field(default_factory=dict)

    def count(self, name: str, full: int, quick: int) -> int:
        value = quick if self.quick else full
        self.counts[name] = value
        return value


def _rational(rng: np.random.Generator, lo: float, hi: float, denominator: int = 1000) -> Fraction:
    value = Fraction(float(rng.uniform(lo, hi))).limit_denominator(denominator)
    return min(max(value, Fraction(lo).limit_denominator(denominator)),
               Fraction(hi).limit_denominator(denominator))


def _mp(value: Fraction) -> mpmath.mpf:
    return mpmath.mpf(value.numerator) / value.denominator


def _encloses(enclosure: Enclosure, value: mpmath.mpf, slack: float = 1e-30) -> bool:
    with mpmath.workdps(50):
        return _mp(enclosure.lo) - slack <= value <= _mp(enclosure.hi) + slack


# ----------------------------------------------------------------------
# the diffeomorphisms phi
# ----------------------------------------------------------------------
def check_phi_cocycle(settings: Settings, rng: np.random.Generator) -> CheckResult:
    triples = settings.count('phi_cocycle', 500, 40)
    points = 5 if not settings.quick else 2
    target = Fraction(1, 10 ** 9)
    worst = Fraction(0)
    for _ in range(triples):
        a, b, c = (_rational(rng, 0.1, 10) for _ in range(3))
        stretch = max(Fraction(1), (c / b) ** 2)
        for _ in range(points):
            x = _rational(rng, 0, 1) * a
            inner = phi_apply(PhiParams(a, b), x, target / (8 * stretch))
            diff = phi_apply(PhiParams(b, c), inner, target / 8) - phi_apply(PhiParams(a, c), x, target / 8)
            worst = max(worst, diff.width)
            if not diff.contains_zero() or diff.width > target:
                return CheckResult('phi_cocycle', False, f"a={a}, b={b}, c={c}, x={x}: {diff}")
    return CheckResult('phi_cocycle', True, f"{triples} triples, widest difference {float(worst):.2e}")


def check_phi_envelope(settings: Settings, rng: np.random.Generator) -> CheckResult:
    pairs = settings.count('phi_envelope', 200, 20)
    samples = 50 if not settings.quick else 10
    slack = Fraction(1, 10 ** 12)
    tol = Fraction(1, 10 ** 9)
    for _ in range(pairs):
        a, b = _rational(rng, 0.1, 10), _rational(rng, 0.1, 10)
        p = PhiParams(a, b)
        envelope = p.envelope
        bound = abs((b / a) ** 2 - 1)
        sup = Fraction(0)
        for _ in range(samples):
            d = phi_deriv(p, _rational(rng, 0, 1) * a, tol)
            if d.lo < envelope.lo - slack or d.hi > envelope.hi + slack:
                return CheckResult('phi_envelope', False, f"a={a}, b={b}: {d} leaves {envelope}")
            sup = max(sup, abs(d.mid - 1))
        if sup > bound + slack:
            return CheckResult('phi_envelope', False, f"a={a}, b={b}: sup {float(sup)} > {float(bound)}")
    return CheckResult('phi_envelope', True, f"{pairs} pairs x {samples} samples inside the envelope")


# ----------------------------------------------------------------------
# series and tiles
# ----------------------------------------------------------------------
def _brute_force_two_dim(radius: int) -> float:
    """sum 1/(1 + q1^4 + q2^2) over |q_i| <= radius, plus midpoint-integral tails."""
    q2 = np.arange(-radius, radius + 1, dtype=np.float64)
    edge = radius + 0.5
    total = 0.0
    for q1 in range(-radius, radius + 1):
        A = 1.0 + float(q1) ** 4
        total += float(np.sum(1.0 / (A + q2 * q2)))
        root = np.sqrt(A)
        total += 2.0 / root * (np.pi / 2 - np.arctan(edge / root))
    # rows |q1| > radius: sum over q2 is pi / sqrt(A) up to e^-pi sqrt(A)
    total += 2.0 * np.pi / edge
    return total


def check_summation_oracle(settings: Settings, rng: np.random.Generator) -> CheckResult:
    tol = Fraction(1, 10 ** 10)
    for K in (1, 4, 9):
        S = total_mass(SeriesContext(1, K), tol)
        root = mpmath.sqrt(K)
        with mpmath.workdps(50):
            exact = mpmath.pi / root * mpmath.coth(mpmath.pi * root)
        if S.width > tol or not _encloses(S, exact):
            return CheckResult('summation_oracle', False, f"n=1, K={K}: {S} misses {mpmath.nstr(exact, 20)}")
    radius = settings.count('summation_box', 2000, 1000)
    S2 = total_mass(SeriesContext(2, 1), tol)
    brute = _brute_force_two_dim(radius)
    gap = abs(float(S2.mid) - brute)
    if gap > 1e-6:
        return CheckResult('summation_oracle', False, f"n=2, K=1: {float(S2.mid)} vs box {brute}")
    return CheckResult('summation_oracle', True, f"n=1 closed forms enclosed; n=2 box gap {gap:.2e}")


def check_tile_lengths(settings: Settings, rng: np.random.Generator) -> CheckResult:
    count = settings.count('tile_lengths', 50, 10)
    tol = Fraction(1, 10 ** 10)
    for n in (2, 3):
        ctx = SeriesContext(n, 10)
        for _ in range(count):
            r = LatticePoint(tuple(int(v) for v in rng.integers(-6, 7, size=n)))
            diff = downset_mass(ctx, lex_successor(r), tol) - downset_mass(ctx, r, tol)
            length = 1 / b_value(ctx, r)
            if not diff.contains(length) or diff.width > Fraction(1, 10 ** 9):
                return CheckResult('tile_lengths', False, f"n={n}, r={r}: {diff} vs {length}")
    return CheckResult('tile_lengths', True, f"{2 * count} tiles match 1/B_K")


def check_locate_roundtrip(settings: Settings, rng: np.random.Generator) -> CheckResult:
    tol = Fraction(1, 10 ** 9)
    radius = settings.count('locate_radius', 3, 2)
    located = 0
    for n in (2, 3):
        ctx = SeriesContext(n, 1)
        for tile in tiles_in_box(ctx, radius, tol):
            where = locate(ctx, tile.midpoint, tol)
            if where != Interior(tile.q):
                return CheckResult('locate_roundtrip', False, f"n={n}: midpoint of {tile.q} -> {where}")
            located += 1
    return CheckResult('locate_roundtrip', True, f"{located} midpoints located")


# ----------------------------------------------------------------------
# the action
# ----------------------------------------------------------------------
def check_action_homomorphism(settings: Settings, rng: np.random.Generator) -> CheckResult:
    pairs = settings.count('homomorphism_pairs', 100, 15)
    points = 10 if not settings.quick else 3
    ac = ActionContext.build(3, 100, Fraction(1, 10 ** 8))
    tiles = tiles_in_box(ac.ctx, 2, ac.tol)
    limit = Fraction(1, 10 ** 6)
    for _ in range(pairs):
        u = random_word(rng, 3, int(rng.integers(1, 6)))
        v = random_word(rng, 3, int(rng.integers(1, 6)))
        uv = word_eval(u + v, 3)
        mu, mv = word_eval(u, 3), word_eval(v, 3)
        for _ in range(points):
            tile = tiles[int(rng.integers(len(tiles)))]
            x = tile.left.mid + _rational(rng, 0.05, 0.95) * tile.length
            direct = g_apply(ac, uv, x)
            composed = g_apply(ac, mu, g_apply(ac, mv, x))
            if not direct.overlaps(composed) or max(direct.width, composed.width) > limit:
                return CheckResult('action_homomorphism', False,
                                   f"u={u}, v={v}, x={float(x)}: {direct} vs {composed}")
    return CheckResult('action_homomorphism', True, f"{pairs} word pairs x {points} points agree")


def check_c1_trend(settings: Settings, rng: np.random.Generator) -> CheckResult:
    samples = settings.count('c1_samples', 200, 40)
    tol = Fraction(1, 10 ** 9)
    slack = Fraction(1, 1000)
    lines = []
    for i in (1, 2):
        alpha = UnipotentMatrix.generator(3, i)
        sups = []
        for K in (10, 100, 1000):
            ctx = SeriesContext(3, K)
            sups.append(max(midpoint_deviation(ctx, [alpha], 3),
                            halton_deviation(ctx, [alpha], samples, settings.seed, 3, tol)))
        if any(later > earlier + slack for earlier, later in zip(sups, sups[1:])):
            return CheckResult('c1_trend', False, f"s{i}: sups {[float(s) for s in sups]} grow with K")
        lines.append(f"s{i}: " + ', '.join(f"{float(s):.3e}" for s in sups))
    result = calibrate_K(3, generators(3), Fraction(1, 10), samples=samples, seed=settings.seed, tol=tol)
    if not result.achieved_sup < Fraction(1, 10):
        return CheckResult('c1_trend', False, f"calibrate_K returned sup {float(result.achieved_sup)}")
    lines.append(f"calibrated K={result.K}")
    return CheckResult('c1_trend', True, '; '.join(lines))


def _lex_violations(images: np.ndarray) -> int:
    """Consecutive pairs (in lex order) whose images are not strictly increasing."""
    diffs = images[1:] - images[:-1]
    nonzero = diffs != 0
    first = np.argmax(nonzero, axis=1)
    leading = diffs[np.arange(len(diffs)), first]
    return int(np.count_nonzero((leading <= 0) | ~nonzero.any(axis=1)))


def check_lex_equivariance(settings: Settings, rng: np.random.Generator) -> CheckResult:
    """
    Every element preserves the lexicographic order on the box.

    The box is listed in lex order, so checking consecutive pairs covers all
    pairs by transitivity.
    """
    n, radius = 3, 3
    points = np.array([q.coords for q in lattice_box(n, radius)], dtype=np.int64)
    elements = generators(n) + [word_eval(random_word(rng, n, int(rng.integers(1, 8))), n)
                                for _ in range(20)]
    for alpha in elements:
        images = points @ alpha.to_array().astype(np.int64).T
        violations = _lex_violations(images)
        if violations:
            return CheckResult('lex_equivariance', False, f"{violations} violations for\n{alpha}")
    return CheckResult('lex_equivariance', True, f"{len(elements)} elements on {len(points)} points")


# ----------------------------------------------------------------------
# staircase, PL maps, translation numbers, gluing
# ----------------------------------------------------------------------
def check_staircase(settings: Settings, rng: np.random.Generator) -> CheckResult:
    samples = settings.count('staircase_samples', 2000, 200)
    tol = Fraction(1, 10 ** 9)
    report = nilpotency_witness(4, tol, samples=samples, seed=settings.seed)
    for relation in report['relations']:
        if not relation['contains_zero'] or Fraction(relation['max_residual']) > tol:
            return CheckResult('staircase', False, f"{relation['relation']}: {relation['max_residual']}")
    for k in range(6):
        for m in range(-15, 16):
            if exponent_table(k, m) != binomial_exponent(k, m):
                return CheckResult('staircase', False, f"H_{k}({m}) differs from the binomial")
    return CheckResult('staircase', True, f"{len(report['relations'])} relations at {samples} points")


def check_pl_character(settings: Settings, rng: np.random.Generator) -> CheckResult:
    pairs = settings.count('pl_pairs', 100, 20)
    one = (Fraction(1), Fraction(1))
    for _ in range(pairs):
        f = random_pl(rng, int(rng.integers(1, 6)))
        g = random_pl(rng, int(rng.integers(1, 6)))
        (f0, f1), (g0, g1) = endpoint_character(f), endpoint_character(g)
        if endpoint_character(pl_compose(f, g)) != (f0 * g0, f1 * g1):
            return CheckResult('pl_character', False, f"character not multiplicative on {f} and {g}")
        if endpoint_character(pl_commutator(f, g)) != one:
            return CheckResult('pl_character', False, f"commutator of {f} and {g} moves endpoint slopes")
    return CheckResult('pl_character', True, f"{pairs} random pairs")


STAIRCASE_WORDS = ('f', 'F', 'h0', 'h1', 'h2', 'H3', 'f h1', 'f f h2', 'F h1 H2', 'h0 h1')


def check_translation_numbers(settings: Settings, rng: np.random.Generator) -> CheckResult:
    tol = Fraction(1, 10 ** 9)
    mu = AtomicMeasure.integers()
    grid_bits = 10 if not settings.quick else 6
    words = [parse_staircase_word(w) for w in STAIRCASE_WORDS]
    report = tau_report(words, mu, tol, grid_bits=grid_bits)
    if not report.passed:
        return CheckResult('translation_numbers', False, "additivity or Fix/tau consistency failed")
    for a in range(-3, 4):
        for tail in ('h1', 'h2 H1', 'h0'):
            text = ' '.join(['f'] * a if a >= 0 else ['F'] * -a) + ' ' + tail
            word = EvaluableMap.of_staircase(parse_staircase_word(text))
            for x in (0, 1, -3, 5, 7):
                tau = translation_number(word, mu, x, tol)
                if tau != Enclosure.point(-a):
                    return CheckResult('translation_numbers', False, f"tau({text}) at {x} = {tau}, expected {-a}")
    return CheckResult('translation_numbers', True, f"{len(words)} words, 5 basepoints")


def check_residual_gluing(settings: Settings, rng: np.random.Generator) -> CheckResult:
    samples = settings.count('gluing_samples', 300, 60)
    glued = build_glued_action(load_bundled_demo(), samples=samples, seed=settings.seed)
    tol = glued.tol
    for m, block in glued.blocks.items():
        if block.sup > Fraction(1, 2 ** m):
            return CheckResult('residual_gluing', False, f"block {m}: sup {float(block.sup)} > 2^-{m}")
    moved = 0
    for word, m in glued.witnesses:
        x = glue_witness_point(glued, word, m)
        if x is None:
            return CheckResult('residual_gluing', False, f"'{word}' acts trivially on block {m}")
        shift = glue_residual(glued, word, x) - x
        if not (shift.lo > 10 * tol or shift.hi < -10 * tol):
            return CheckResult('residual_gluing', False, f"'{word}' moves {float(x)} only by {shift}")
        moved += 1
    return CheckResult('residual_gluing', True,
                       f"{moved} witnesses displaced; K per block: "
                       + ', '.join(f"{m}:{b.action.K}" for m, b in sorted(glued.blocks.items())))


CHECKS: List[Callable[[Settings, np.random.Generator], CheckResult]] = [
    check_phi_cocycle,
    check_phi_envelope,
    check_summation_oracle,
    check_tile_lengths,
    check_locate_roundtrip,
    check_action_homomorphism,
    check_c1_trend,
    check_lex_equivariance,
    check_staircase,
    check_pl_character,
    check_translation_numbers,
    check_residual_gluing,
]


def run_acceptance(quick: bool = False, seed: int = 0, progress: bool = False,
                   only: Optional[List[str]] = None) -> List[CheckResult]:
    """
    Run every check (or those named in ``only``) with a seeded generator each.

    Returns:
        One CheckResult per check, in a fixed order
    """
    settings = Settings(quick=quick, seed=seed)
    results = []
    for index, check in enumerate(CHECKS):
        name = check.__name__[len('check_'):]
        if only and name not in only:
            continue
        rng = np.random.default_rng([seed, index])
        start = time.perf_counter()
        try:
            result = check(settings, rng)
        except NilflowError as e:
            logger.error(f"Check {name} raised {type(e).__name__}: {e}")
            result = CheckResult(name, False, f"{type(e).__name__}: {e}")
        result.seconds = time.perf_counter() - start
        status = 'PASS' if result.passed else 'FAIL'
        logger.info(f"[{status}] {name} ({result.seconds:.1f}s): {result.detail}")
        if progress:
            print(f"[{status}] {name:22s} {result.seconds:7.1f}s  {result.detail}")
        results.append(result)
    return results
