"""
Tests for tiles of [0, S_K] and the point locator.
"""

from fractions import Fraction

import pytest

from nilflow.core.exceptions import DomainError
from nilflow.core.lattice_series import SeriesContext, total_mass, truncated_mass
from nilflow.core.tiling import (
    BoundaryPair, Interior, Unresolved, locate, tile_interval, tiles_in_box,
)
from nilflow.core.unipotent import LatticePoint, Order, lex_compare

TOL = Fraction(1, 10 ** 9)


@pytest.fixture(scope='module')
def ctx2():
    return SeriesContext(2, 1)


def test_tile_length_is_exact_reciprocal(ctx2):
    tile = tile_interval(ctx2, (1, -1), TOL)
    assert tile.q == LatticePoint.of(1, -1)
    assert tile.length == Fraction(1, 3)
    assert (tile.right - tile.left).contains(tile.length)


def test_tiles_in_box_are_adjacent(ctx2):
    tiles = tiles_in_box(ctx2, 2, TOL)
    assert len(tiles) == 25
    for a, b in zip(tiles, tiles[1:]):
        if a.q[0] == b.q[0]:
            assert a.right == b.left
        else:
            # a whole line of tiles lies between rows
            assert a.right.hi < b.left.lo


def test_tiles_fill_the_line_for_n1():
    ctx = SeriesContext(1, 1)
    total = total_mass(ctx, TOL)
    tiles = tiles_in_box(ctx, 3, TOL)
    assert tiles[0].left.lo > 0
    assert tiles[-1].right.hi < total.hi
    assert sum(t.length for t in tiles) == 1 + 2 * (Fraction(1, 2) + Fraction(1, 5) + Fraction(1, 10))



def test_tiles_follow_lexicographic_order(ctx2):
    tiles = tiles_in_box(ctx2, 2, TOL)
    for a in tiles:
        for b in tiles:
            if lex_compare(a.q, b.q) == Order.LESS:
                assert a.left.certainly_lt(b.left)
                assert a.right.lo <= b.left.hi
    deep = tiles_in_box(SeriesContext(3, 10), 1, TOL)
    for a, b in zip(deep, deep[1:]):
        assert a.left.certainly_lt(b.left)
        assert a.right.lo <= b.left.hi


@pytest.mark.parametrize("n, K, radius", [(2, 1, 4), (3, 10, 1)])
def test_box_lengths_plus_tail_cover_total(n, K, radius):
    ctx = SeriesContext(n, K)
    lengths = sum(tile.length for tile in tiles_in_box(ctx, radius, TOL))
    box, rest = truncated_mass(ctx, radius, TOL)
    assert box.contains(lengths)
    assert (rest + lengths).overlaps(total_mass(ctx, TOL))


def test_tail_shrinks_as_box_grows(ctx2):
    tails = [truncated_mass(ctx2, radius, TOL)[1] for radius in (1, 3, 9)]
    assert tails[0].lo > tails[1].hi
    assert tails[1].lo > tails[2].hi > 0

@pytest.mark.parametrize("q", [(0, 0), (1, -1), (-2, 3), (0, -5)])
def test_locate_midpoints(ctx2, q):
    tile = tile_interval(ctx2, q, TOL)
    assert locate(ctx2, tile.midpoint, TOL) == Interior(LatticePoint(q))


def test_locate_exact_rational_inside_tile():
    ctx = SeriesContext(1, 1)
    tile = tile_interval(ctx, (0,), TOL)
    x = Fraction(tile.left.hi + tile.right.lo) / 2
    assert locate(ctx, x, TOL) == Interior(LatticePoint.of(0))


def test_locate_shared_endpoint_reports_boundary_pair():
    ctx = SeriesContext(1, 1)
    tile = tile_interval(ctx, (0,), TOL)
    result = locate(ctx, tile.right, TOL)
    assert result == BoundaryPair(LatticePoint.of(0), LatticePoint.of(1))


def test_locate_outside_range(ctx2):
    with pytest.raises(DomainError):
        locate(ctx2, -1, TOL)
    with pytest.raises(DomainError):
        locate(ctx2, 100, TOL)


def test_locate_never_misreports(ctx2):
    # any answer must be Interior of the right tile or an honest Unresolved
    tile = tile_interval(ctx2, (0, 2), TOL)
    result = locate(ctx2, tile.left.hi + tile.length / 1000, TOL)
    assert isinstance(result, (Interior, BoundaryPair, Unresolved))
    if isinstance(result, Interior):
        assert result.q == LatticePoint.of(0, 2)
