import math

import pytest

from contactpy import (
    AspectError,
    Edge,
    HalfSpaceError,
    InfiniteRegionError,
    Rect,
    Seed,
    Site,
    as_site,
    ball,
    edge_region,
    format_site,
    parse_site,
    rect,
)


@pytest.mark.parametrize("text, expected", [
    ("3", Site(3, 0)),
    ("-2+5i", Site(-2, 5)),
    ("4i", Site(0, 4)),
    ("i", Site(0, 1)),
    ("7-0i", Site(7, 0)),
    (" 1 + 2i ", Site(1, 2)),
])
def test_parse_site(text, expected):
    assert parse_site(text) == expected


def test_parse_site_rejects_noise():
    with pytest.raises(ValueError):
        parse_site("1.5+2i")
    with pytest.raises(ValueError):
        parse_site("abc")


def test_sites_below_the_bottom_row_raise():
    with pytest.raises(HalfSpaceError):
        Site(0, -1)
    with pytest.raises(HalfSpaceError):
        as_site(3 - 2j)
    with pytest.raises(HalfSpaceError):
        parse_site("-i")


def test_as_site_accepts_site_likes():
    assert as_site(2 + 3j) == Site(2, 3)
    assert as_site(-4) == Site(-4, 0)
    assert as_site((1, 1)) == Site(1, 1)
    with pytest.raises(ValueError):
        as_site(0.5)


def test_format_site():
    assert format_site(3, 0) == "3"
    assert format_site(-2, 5) == "-2+5i"
    assert format_site(1, math.inf) == "1+infi"
    assert str(Site(4, 2)) == "4+2i"


def test_neighbours_stay_in_half_space():
    assert Site(0, 0).neighbours() == [Site(-1, 0), Site(0, 1), Site(1, 0)]
    assert len(Site(5, 3).neighbours()) == 4


def test_rect_normalizes_corners():
    r = rect(2 + 1j, -1)
    assert r.lo == (-1, 0) and r.hi == (2, 1)
    assert len(r.sites()) == 8
    assert str(r) == "-1:2+1i"
    assert r.sites()[0] == Site(-1, 0)
    assert r.sites() == sorted(r.sites())


def test_rect_clips_at_the_bottom_row():
    r = rect((0, -3), (2, 2))
    assert r.lo == (0, 0)
    with pytest.raises(HalfSpaceError):
        rect((0, -3), (1, -1))


def test_infinite_rect_needs_a_window():
    strip = rect(-3, (3, math.inf))
    assert not strip.is_finite
    with pytest.raises(InfiniteRegionError):
        strip.sites()
    cut = strip.sites(rect(-10, (10, 2)))
    assert len(cut) == 7 * 3


def test_rect_intersect_and_expand():
    a = rect(0, 4 + 4j)
    b = rect(2 + 2j, 6 + 6j)
    assert a.intersect(b) == Rect((2, 2), (4, 4))
    assert a.intersect(rect(10, 12)) is None
    grown = rect(0, 1).expanded(2)
    assert grown.lo == (-2, 0) and grown.hi == (3, 2)


def test_rect_edges_count():
    # 3x2 sites: 2*2 horizontal + 3 vertical edges
    edges = rect(0, 2 + 1j).edges()
    assert len(edges) == 7
    assert edges == sorted(edges)


def test_edge_of_orders_endpoints():
    e = Edge.of(1, 0)
    assert e.a == Site(0, 0) and e.b == Site(1, 0)
    assert e.horizontal
    assert not Edge.of(0, 1j).horizontal
    with pytest.raises(ValueError):
        Edge.of(0, 1 + 1j)


def test_wide_region_drops_end_columns():
    region = edge_region(0, 4 + 1j)
    assert region.kind == "wide"
    # 8 horizontal + 5 vertical edges, minus the two end-column verticals
    assert len(region.edges) == 11
    assert Edge.of(0, 1j) not in region
    assert Edge.of(2, 2 + 1j) in region


def test_tall_region_drops_end_rows():
    region = edge_region(0, 1 + 4j)
    assert region.kind == "tall"
    assert len(region.edges) == 11
    assert Edge.of(0, 1) not in region
    assert Edge.of(2j, 1 + 2j) in region


def test_undefined_aspect_ratio():
    with pytest.raises(AspectError):
        edge_region(0, 2 + 2j)


def _region_by_enumeration(a, b, c, d):
    xs = range(min(a, c), max(a, c) + 1)
    ys = range(min(b, d), max(b, d) + 1)
    wide = abs(a - c) >= 2 * abs(b - d)
    out = set()
    for x in xs:
        for y in ys:
            for nx, ny in ((x + 1, y), (x, y + 1)):
                if nx not in xs or ny not in ys:
                    continue
                if wide and {x, nx} <= {a, c}:
                    continue
                if not wide and {y, ny} <= {b, d}:
                    continue
                out.add(Edge.of(complex(x, y), complex(nx, ny)))
    return out


def test_edge_regions_match_enumeration():
    for c in range(-6, 7):
        for b in range(7):
            for d in range(7):
                dx, dy = abs(c), abs(b - d)
                if dx < 2 * dy and 2 * dx > dy:
                    with pytest.raises(AspectError):
                        edge_region(complex(0, b), complex(c, d))
                    continue
                region = edge_region(complex(0, b), complex(c, d))
                assert region.edges == _region_by_enumeration(0, b, c, d), \
                    (b, c, d)


def test_single_point_region_is_empty():
    region = edge_region(3, 3)
    assert region.kind == "wide"
    assert region.edges == frozenset()


def test_ball_is_cut_at_the_half_space():
    b = ball(1j, 2)
    assert b.lo == (-2, 0) and b.hi == (2, 3)
    assert b.n_sites == 20


@pytest.mark.parametrize("x", [Site(0, 0), Site(3, 2), Site(-4, 9)])
def test_ball_sizes_match_enumeration(x):
    for M in range(9):
        expected = [
            Site(a, b)
            for a in range(x.re - M, x.re + M + 1)
            for b in range(x.im - M, x.im + M + 1)
            if b >= 0
        ]
        b = ball(x, M)
        assert sorted(b.sites()) == sorted(expected)
        assert b.n_sites == len(expected)


def test_seed_sites():
    assert Seed(Site(0, 0), 1).sites == [Site(-1, 0), Site(0, 0), Site(1, 0)]
    vertical = Seed(Site(5, 2), 2, "vertical")
    assert vertical.sites == [Site(5, k) for k in range(5)]
    with pytest.raises(HalfSpaceError):
        Seed(Site(0, 0), 1, "vertical").sites
    with pytest.raises(ValueError):
        Seed(Site(0, 0), 1, "diagonal")
