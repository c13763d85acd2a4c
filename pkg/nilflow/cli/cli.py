#!/usr/bin/env python3
"""
nilflow command-line tool

Batch front-end for the certified numerics: tile tables, evaluation of the
unipotent action and its derivative, calibration of K, the staircase group,
residual gluing, translation numbers, PL maps and the acceptance suite.

Data goes to stdout (JSON or CSV) or to the file given by --out; logging goes
to the console only with --verbose.
"""

import argparse
import sys
from fractions import Fraction
from pathlib import Path
from typing import List, Optional

import pandas as pd

from nilflow import __version__
from nilflow.core.certified_reals import Enclosure, decimal_string, format_fraction
from nilflow.core.config import (
    DEFAULT_GRID_BITS,
    GluedActionConfig,
    RunConfig,
    load_bundled_demo,
)
from nilflow.core.dynamics import distortion_probe, parse_measure, tau_report
from nilflow.core.exceptions import ConfigError, NilflowError, ParseError
from nilflow.core.lattice_series import SeriesContext, total_mass
from nilflow.core.log_config import setup_logging
from nilflow.core.nilaction import (
    CALIBRATION_SAMPLES,
    ActionContext,
    build_glued_action,
    calibrate_K,
    g_apply,
    g_deriv,
    glue_residual,
    glue_witness_point,
    unit_action,
    unit_deriv,
)
from nilflow.core.plmaps import (
    endpoint_character,
    format_pl,
    initial_identity_interval,
    parse_pl_lines,
    pl_commutator,
    pl_fixed_points,
)
from nilflow.core.staircase import STRATEGIES, nilpotency_witness, parse_staircase_word, stair_apply
from nilflow.core.tiling import tiles_in_box
from nilflow.core.unipotent import as_matrix, generators
from nilflow.core.yoccoz import PhiParams, phi_apply, phi_deriv
from nilflow.utils.csv_writer import add_decimal_columns, write_csv_file, write_json_file
from nilflow.verification.acceptance import run_acceptance

DEFAULT_TAU_WORDS = ('f', 'h1', 'f h1', 'h2', 'F h2')


def rational(text: str) -> Fraction:
    """argparse type for exact rationals ('1/3', '0.25', '-2')."""
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}")


def enclosure_json(value: Enclosure) -> dict:
    data = value.to_json()
    data["decimal"] = decimal_string(value.mid)
    return data


def read_lines(path: Path) -> List[str]:
    try:
        text = path.read_text(encoding='utf-8')
    except FileNotFoundError as e:
        raise ConfigError(f"File not found: {path}") from e
    return [line.strip() for line in text.splitlines()
            if line.strip() and not line.lstrip().startswith('#')]


# ----------------------------------------------------------------------
# commands
# ----------------------------------------------------------------------
def cmd_tile_table(args) -> int:
    """Tiles I_K(q) for |q_i| <= box with exact endpoint enclosures."""
    config = RunConfig.from_args(args)
    ctx = SeriesContext(config.n, config.K)
    rows = []
    for tile in tiles_in_box(ctx, config.box, config.tol):
        rows.append({
            **{f'q{i}': coordinate for i, coordinate in enumerate(tile.q, start=1)},
            'left_lo': format_fraction(tile.left.lo),
            'left_hi': format_fraction(tile.left.hi),
            'right_lo': format_fraction(tile.right.lo),
            'right_hi': format_fraction(tile.right.hi),
            'length': format_fraction(tile.length),
        })
    frame = add_decimal_columns(pd.DataFrame(rows), ['left_lo', 'right_lo', 'length'])
    write_csv_file(config.out, frame)
    return 0


def _action_eval(args, derivative: bool) -> int:
    config = RunConfig.from_args(args)
    ac = ActionContext.build(config.n, config.K, config.tol)
    alpha = as_matrix(args.word, config.n)
    unit = args.unit or args.mode == 'circle'
    if unit:
        fn = unit_deriv if derivative else unit_action
        value = fn(ac, alpha, args.x, config.tol, mode=args.mode)
    else:
        fn = g_deriv if derivative else g_apply
        value = fn(ac, alpha, args.x, config.tol)
    payload = {
        'n': config.n, 'K': format_fraction(config.K), 'word': args.word,
        'x': format_fraction(args.x), 'domain': args.mode if unit else 'lattice',
        'derivative' if derivative else 'value': enclosure_json(value),
    }
    if not unit:
        payload['S_K'] = enclosure_json(total_mass(ac.ctx, config.tol))
    write_json_file(config.out, payload)
    return 0


def cmd_act_eval(args) -> int:
    """g_alpha(x) on [0, S_K], or Psi(alpha)(x) on [0, 1] with --unit."""
    return _action_eval(args, derivative=False)


def cmd_act_deriv(args) -> int:
    """g_alpha'(x), or the derivative of Psi(alpha) with --unit."""
    return _action_eval(args, derivative=True)


def cmd_calibrate(args) -> int:
    """Smallest K in 1, 2, 4, ... with sampled sup |g' - 1| < eps."""
    config = RunConfig.from_args(args)
    gens = args.generators.split(',') if args.generators else generators(config.n)
    result = calibrate_K(config.n, gens, config.eps, samples=args.samples, seed=config.seed,
                         tol=config.tol, progress=args.verbose)
    write_json_file(config.out, {
        'n': config.n,
        'eps': format_fraction(config.eps),
        'K': format_fraction(result.K),
        'achieved_sup': format_fraction(result.achieved_sup),
        'achieved_sup_decimal': decimal_string(result.achieved_sup),
        'tried': [format_fraction(k) for k in result.tried],
        'samples': result.samples,
    })
    return 0


def cmd_phi_profile(args) -> int:
    """phi_{a,b} and phi'_{a,b} on an even grid of [0, a]."""
    config = RunConfig.from_args(args)
    params = PhiParams(args.a, args.b)
    rows = []
    for j in range(args.points + 1):
        x = params.a * Fraction(j, args.points)
        value = phi_apply(params, x, config.tol)
        slope = phi_deriv(params, x, config.tol)
        rows.append({
            'x': format_fraction(x),
            'phi_lo': format_fraction(value.lo), 'phi_hi': format_fraction(value.hi),
            'deriv_lo': format_fraction(slope.lo), 'deriv_hi': format_fraction(slope.hi),
        })
    write_csv_file(config.out, add_decimal_columns(pd.DataFrame(rows), ['x', 'phi_lo', 'deriv_lo']))
    return 0


def cmd_staircase_eval(args) -> int:
    """Evaluate a staircase word at x."""
    config = RunConfig.from_args(args)
    element = parse_staircase_word(args.word, strategy=args.strategy)
    value = stair_apply(element, args.x, config.tol)
    write_json_file(config.out, {'word': args.word, 'x': format_fraction(args.x),
                                 'strategy': args.strategy, 'value': enclosure_json(value)})
    return 0


def cmd_staircase_verify(args) -> int:
    """Check the staircase relations up to --degree at random points."""
    config = RunConfig.from_args(args)
    report = nilpotency_witness(args.degree, config.tol, samples=args.samples, seed=config.seed,
                                strategy=args.strategy)
    write_json_file(config.out, report)
    return 0 if report['passed'] else 1


def _glued_config(args) -> GluedActionConfig:
    return GluedActionConfig.load(args.config) if args.config else load_bundled_demo()


def cmd_glue_eval(args) -> int:
    """Evaluate a glued residual action; without --x, displace every witness."""
    config = RunConfig.from_args(args)
    glued = build_glued_action(_glued_config(args), tol=config.tol, samples=args.samples,
                               seed=config.seed, progress=args.verbose)
    payload = {
        'blocks': [{'m': m, 'n': b.action.n, 'K': format_fraction(b.action.K),
                    'sampled_sup': format_fraction(b.sup), 'calibrated': b.calibrated}
                   for m, b in sorted(glued.blocks.items())],
    }
    if args.x is not None:
        value = glue_residual(glued, args.word, args.x)
        payload['evaluation'] = {'word': args.word, 'x': format_fraction(args.x),
                                 'value': enclosure_json(value)}
    else:
        witnesses = []
        for word, m in glued.witnesses:
            x = glue_witness_point(glued, word, m)
            entry = {'word': word, 'block': m, 'x': None if x is None else format_fraction(x)}
            if x is not None:
                entry['displacement'] = enclosure_json(glue_residual(glued, word, x) - x)
            witnesses.append(entry)
        payload['witnesses'] = witnesses
    write_json_file(config.out, payload)
    return 0


def cmd_tau(args) -> int:
    """Translation numbers, Fix/tau consistency and additivity of staircase words."""
    config = RunConfig.from_args(args)
    texts = read_lines(config.words) if config.words else list(DEFAULT_TAU_WORDS)
    words = [parse_staircase_word(t) for t in texts]
    report = tau_report(words, parse_measure(config.measure), config.tol,
                        grid_bits=args.grid_bits, progress=args.verbose)
    write_csv_file(config.out, report.words)
    if config.out is not None:
        additivity = config.out.with_name(f"{config.out.stem}_additivity{config.out.suffix or '.csv'}")
        write_csv_file(additivity, report.additivity)
    return 0 if report.passed else 1


def cmd_distortion(args) -> int:
    """Lipschitz estimates of log g_i' along a tile sequence."""
    config = RunConfig.from_args(args)
    ac = ActionContext.build(config.n, config.K, config.tol)
    frame = distortion_probe(ac, args.generator, config.depth, tiles=args.tiles,
                             progress=args.verbose)
    write_csv_file(config.out, frame)
    return 0


def cmd_pl_check(args) -> int:
    """Character, fixed sets and pairwise commutators of PL maps."""
    config = RunConfig.from_args(args)
    lines = read_lines(Path(args.maps)) if args.maps else []
    maps = parse_pl_lines(lines + list(args.map or []))
    entries = []
    for f in maps:
        left, right = endpoint_character(f)
        entries.append({
            'map': format_pl(f),
            'character': [format_fraction(left), format_fraction(right)],
            'fixed_set': [str(c) for c in pl_fixed_points(f)],
            'initial_identity': format_fraction(initial_identity_interval(f)),
        })
    commutators = []
    for i, f in enumerate(maps):
        for j, g in enumerate(maps):
            if i < j:
                c = pl_commutator(f, g)
                commutators.append({'pair': [i, j], 'commutator': format_pl(c),
                                    'character': [format_fraction(s) for s in endpoint_character(c)]})
    write_json_file(config.out, {'maps': entries, 'commutators': commutators})
    return 0


def cmd_verify_all(args) -> int:
    """Run the acceptance suite; exit 1 on any failure."""
    config = RunConfig.from_args(args)
    results = run_acceptance(quick=config.quick, seed=config.seed, progress=True,
                             only=args.only.split(',') if args.only else None)
    passed = all(r.passed for r in results)
    print(f"\n{'=' * 50}")
    print(f"{sum(r.passed for r in results)}/{len(results)} checks passed")
    if config.out is not None:
        write_json_file(config.out, {'quick': config.quick, 'seed': config.seed, 'passed': passed,
                                     'checks': [r.to_json() for r in results]})
        print(f"Report saved to: {config.out}")
    return 0 if passed else 1


def cmd_test(args) -> int:
    """Run the test suite."""
    import pytest

    print("Running test suite...")
    return int(pytest.main(['tests', '-q']))


# ----------------------------------------------------------------------
# parser
# ----------------------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='nilflow',
        description='Certified numerics for nilpotent group actions on the line and the interval',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  %(prog)s tile-table --n 2 --K 1 --box 2
  %(prog)s act-eval --n 3 --K 100 --word "s1 S2" --x 1/3 --unit
  %(prog)s calibrate --n 3 --eps 0.1
  %(prog)s phi-profile --a 1 --b 2 --points 16
  %(prog)s staircase-eval --word "F H1 f h1" --x 5/2
  %(prog)s staircase-verify --degree 4 --samples 2000
  %(prog)s glue-eval
  %(prog)s tau --measure integers --words words.txt --out tau.csv
  %(prog)s distortion --n 3 --K 100 --depth 8
  %(prog)s pl-check --map "bp: 1/2; slopes: 1/2, 3/2"
  %(prog)s verify-all --quick

Rationals may be written as 1/3, 0.25 or 1e-9. NILFLOW_BUDGET caps
summation radii and search lengths (default 2**20).
        """
    )
    parser.add_argument('--version', action='version', version=f"%(prog)s {__version__}")
    parser.add_argument('--verbose', action='store_true', help='Log to the console at DEBUG level')
    parser.add_argument('--log-file', help='Also write logs to this file')

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--n', type=int, default=2, help='Dimension n (default: 2)')
    common.add_argument('--K', default='1', help='Series constant K >= 1 (default: 1)')
    common.add_argument('--tol', default='1e-9', help='Enclosure width target (default: 1e-9)')
    common.add_argument('--seed', type=int, default=0, help='Random seed (default: 0)')
    common.add_argument('--out', help='Output file (default: stdout)')

    subparsers = parser.add_subparsers(dest='command', help='Available commands')

    tile = subparsers.add_parser('tile-table', parents=[common], help='Tile endpoints in a lattice box')
    tile.add_argument('--box', type=int, default=2, help='Box half-width (default: 2)')
    tile.set_defaults(func=cmd_tile_table)

    for name, func, text in (('act-eval', cmd_act_eval, 'Evaluate the action'),
                             ('act-deriv', cmd_act_deriv, 'Evaluate the derivative of the action')):
        sub = subparsers.add_parser(name, parents=[common], help=text)
        sub.add_argument('--word', required=True, help='Group word, e.g. "s1 S2"')
        sub.add_argument('--x', type=rational, required=True, help='Point (rational)')
        sub.add_argument('--unit', action='store_true', help='Use the rescaled action on [0, 1]')
        sub.add_argument('--mode', choices=['interval', 'circle'], default='interval',
                         help='Unit domain: interval or circle (default: interval)')
        sub.set_defaults(func=func)

    calibrate = subparsers.add_parser('calibrate', parents=[common], help='Calibrate K for a C1 target')
    calibrate.add_argument('--eps', default='1/10', help='Target sup |g\' - 1| (default: 1/10)')
    calibrate.add_argument('--samples', type=int, default=CALIBRATION_SAMPLES,
                           help=f'Halton samples (default: {CALIBRATION_SAMPLES})')
    calibrate.add_argument('--generators', help='Comma-separated words (default: all s_i)')
    calibrate.set_defaults(func=cmd_calibrate)

    phi = subparsers.add_parser('phi-profile', parents=[common], help='Tabulate phi_{a,b}')
    phi.add_argument('--a', type=rational, required=True, help='Source length')
    phi.add_argument('--b', type=rational, required=True, help='Target length')
    phi.add_argument('--points', type=int, default=16, help='Grid intervals (default: 16)')
    phi.set_defaults(func=cmd_phi_profile)

    stair_eval = subparsers.add_parser('staircase-eval', parents=[common], help='Evaluate a staircase word')
    stair_eval.add_argument('--word', required=True, help='Word such as "F H1 f h1"')
    stair_eval.add_argument('--x', type=rational, required=True, help='Point (rational)')
    stair_eval.add_argument('--strategy', choices=STRATEGIES, default=STRATEGIES[0])
    stair_eval.set_defaults(func=cmd_staircase_eval)

    stair_verify = subparsers.add_parser('staircase-verify', parents=[common],
                                         help='Check staircase relations')
    stair_verify.add_argument('--degree', type=int, default=4, help='Largest k checked (default: 4)')
    stair_verify.add_argument('--samples', type=int, default=200, help='Sample points (default: 200)')
    stair_verify.add_argument('--strategy', choices=STRATEGIES, default=STRATEGIES[0])
    stair_verify.set_defaults(func=cmd_staircase_verify)

    glue = subparsers.add_parser('glue-eval', parents=[common], help='Evaluate a glued residual action')
    glue.add_argument('--config', help='GluedAction JSON (default: bundled F2 demo)')
    glue.add_argument('--word', default='a b A B', help='Abstract word (default: "a b A B")')
    glue.add_argument('--x', type=rational, help='Point in [0, 1]; omit to displace the witnesses')
    glue.add_argument('--samples', type=int, default=CALIBRATION_SAMPLES, help='Calibration samples')
    glue.set_defaults(func=cmd_glue_eval)

    tau = subparsers.add_parser('tau', parents=[common], help='Translation numbers of staircase words')
    tau.add_argument('--measure', default='integers', help='integers | integers:LO:HI | atoms:p=m,...')
    tau.add_argument('--words', help='File with one staircase word per line')
    tau.add_argument('--grid-bits', type=int, default=DEFAULT_GRID_BITS,
                     help=f'Fixed-point grid 2**-bits (default: {DEFAULT_GRID_BITS})')
    tau.set_defaults(func=cmd_tau)

    distortion = subparsers.add_parser('distortion', parents=[common], help='Distortion probe of log g_i\'')
    distortion.add_argument('--generator', type=int, default=1, help='Generator index i (default: 1)')
    distortion.add_argument('--depth', type=int, default=8, help='Grid depth (default: 8)')
    distortion.add_argument('--tiles', type=int, default=50, help='Tiles along the sequence (default: 50)')
    distortion.set_defaults(func=cmd_distortion)

    pl = subparsers.add_parser('pl-check', parents=[common], help='Inspect PL homeomorphisms')
    pl.add_argument('--maps', help='File with one map per line ("bp: 1/2; slopes: 1/2, 3/2")')
    pl.add_argument('--map', action='append', help='A map in the same text format (repeatable)')
    pl.set_defaults(func=cmd_pl_check)

    verify = subparsers.add_parser('verify-all', parents=[common], help='Run the acceptance suite')
    verify.add_argument('--quick', action='store_true', help='Reduced sample counts')
    verify.add_argument('--only', help='Comma-separated check names')
    verify.set_defaults(func=cmd_verify_all)

    test = subparsers.add_parser('test', help='Run the test suite')
    test.set_defaults(func=cmd_test)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Main CLI entry point."""
    parser = build_parser()
    args = parser.parse_args(argv)

    if not args.command:
        parser.print_help()
        return 0

    setup_logging('nilflow', level='DEBUG' if args.verbose else 'INFO',
                  log_file=args.log_file, console=args.verbose)
    try:
        return args.func(args)
    except KeyboardInterrupt:
        print("\n\nOperation cancelled by user.")
        return 1
    except (ParseError, ConfigError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return 2
    except NilflowError as e:
        print(f"Error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1


if __name__ == '__main__':
    sys.exit(main())
