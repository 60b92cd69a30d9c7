"""
Integer geometry of the half-lattice Z x Z+.

Sites are written like complex numbers, ``a+bi`` with ``b >= 0``. Functions
accept anything :func:`as_site` understands: a :class:`Site`, a complex
number, an integer (a site on the bottom row) or an ``(re, im)`` tuple.
"""
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Literal, Optional, Sequence, Tuple, Union

from ._errors import AspectError, HalfSpaceError, InfiniteRegionError


@dataclass(frozen=True, order=True)
class Site:
    re: int
    im: int

    def __post_init__(self) -> None:
        if self.im < 0:
            raise HalfSpaceError(f"site ({self.re}, {self.im})")

    def __add__(self, other: "SiteLike") -> "Site":
        dre, dim = _components(other)
        return Site(self.re + int(dre), self.im + int(dim))

    def __sub__(self, other: "SiteLike") -> "Site":
        dre, dim = _components(other)
        return Site(self.re - int(dre), self.im - int(dim))

    def __complex__(self) -> complex:
        return complex(self.re, self.im)

    def __str__(self) -> str:
        return format_site(self.re, self.im)

    def neighbours(self) -> list["Site"]:
        """ Nearest neighbours inside the half-space, lexicographically """
        out = [Site(self.re - 1, self.im)]
        if self.im > 0:
            out.append(Site(self.re, self.im - 1))
        out.append(Site(self.re, self.im + 1))
        out.append(Site(self.re + 1, self.im))
        return out


SiteLike = Union[Site, complex, int, Tuple[int, int]]
Corner = Tuple[float, float]


def _components(z: object) -> Corner:
    if isinstance(z, Site):
        return z.re, z.im
    if isinstance(z, tuple):
        return float(z[0]), float(z[1])
    if isinstance(z, (int, float)):
        return float(z), 0.0
    if isinstance(z, complex):
        return z.real, z.imag
    raise TypeError(f"cannot read a lattice point from {z!r}")


def as_site(z: SiteLike) -> Site:
    """
    Convert a site-like value to a :class:`Site`.

    Raises
    ------
    HalfSpaceError
        If the imaginary part is negative.

    ValueError
        If a component is not an integer.
    """
    if isinstance(z, Site):
        return z
    a, b = _components(z)
    if not (float(a).is_integer() and float(b).is_integer()):
        raise ValueError(f"{z!r} is not an integer lattice point")
    return Site(int(a), int(b))


def format_site(re_: float, im: float) -> str:
    """ Write a lattice point as ``a+bi`` """
    def fmt(v: float) -> str:
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return str(int(v))

    if im == 0:
        return fmt(re_)
    sign = "-" if im < 0 else "+"
    return f"{fmt(re_)}{sign}{fmt(abs(im))}i"


def _number(text: str, source: str) -> float:
    if text in ("", "+"):
        return 1.0
    if text == "-":
        return -1.0
    if text.lstrip("+-") == "inf":
        return -math.inf if text.startswith("-") else math.inf
    try:
        return float(int(text))
    except ValueError:
        raise ValueError(
            f"'{source}' is not a lattice point like 3-2i or 4i") from None


def parse_corner(text: str) -> Corner:
    """
    Read ``a+bi``, ``a``, ``bi`` or ``a+infi`` into a pair of floats.
    """
    s = text.replace(" ", "")
    if not s:
        raise ValueError("empty lattice point")
    if not s.endswith("i") or s.endswith("inf"):
        return _number(s, text), 0.0
    body = s[:-1]
    cut = max(body.rfind("+"), body.rfind("-"))
    if cut <= 0:
        return 0.0, _number(body, text)
    return _number(body[:cut], text), _number(body[cut:], text)


def parse_site(text: str) -> Site:
    """ Read a site written like ``-3+2i`` """
    a, b = parse_corner(text)
    return as_site((a, b))


@dataclass(frozen=True, order=True)
class Edge:
    """
    Undirected nearest-neighbour edge, stored with ``a < b`` lexicographically.

    Use :meth:`Edge.of` to build one from endpoints in any order.
    """
    a: Site
    b: Site

    @classmethod
    def of(cls, x: SiteLike, y: SiteLike) -> "Edge":
        x, y = as_site(x), as_site(y)
        if abs(x.re - y.re) + abs(x.im - y.im) != 1:
            raise ValueError(f"{x} and {y} are not nearest neighbours")
        return cls(x, y) if x < y else cls(y, x)

    @property
    def horizontal(self) -> bool:
        return self.a.im == self.b.im

    def __str__(self) -> str:
        return f"({self.a}, {self.b})"


@dataclass(frozen=True)
class Rect:
    """
    Axis-aligned rectangle of sites, corners normalized, possibly infinite.

    ``lo`` and ``hi`` are ``(re, im)`` pairs of floats; infinite components
    are ``math.inf`` (``-math.inf`` is allowed on the real axis).
    """
    lo: Corner
    hi: Corner

    @property
    def is_finite(self) -> bool:
        return all(math.isfinite(c) for c in (*self.lo, *self.hi))

    @property
    def width(self) -> float:
        """ Number of columns """
        return self.hi[0] - self.lo[0] + 1

    @property
    def height(self) -> float:
        """ Number of rows """
        return self.hi[1] - self.lo[1] + 1

    @property
    def n_sites(self) -> float:
        return self.width * self.height

    def __contains__(self, z: object) -> bool:
        try:
            a, b = _components(z)
        except TypeError:
            return False
        return (self.lo[0] <= a <= self.hi[0]
                and self.lo[1] <= b <= self.hi[1])

    def __str__(self) -> str:
        return f"{format_site(*self.lo)}:{format_site(*self.hi)}"

    def contains_rect(self, other: "Rect") -> bool:
        return (self.lo[0] <= other.lo[0] and other.hi[0] <= self.hi[0]
                and self.lo[1] <= other.lo[1] and other.hi[1] <= self.hi[1])

    def intersect(self, other: "Rect") -> Optional["Rect"]:
        lo = (max(self.lo[0], other.lo[0]), max(self.lo[1], other.lo[1]))
        hi = (min(self.hi[0], other.hi[0]), min(self.hi[1], other.hi[1]))
        if lo[0] > hi[0] or lo[1] > hi[1]:
            return None
        return Rect(lo, hi)

    def expanded(self, margin: int) -> "Rect":
        """ Grow by ``margin`` on every side, clipped to the half-space """
        return Rect(
            (self.lo[0] - margin, max(0.0, self.lo[1] - margin)),
            (self.hi[0] + margin, self.hi[1] + margin),
        )

    def sites(self, window: Optional["Rect"] = None) -> list[Site]:
        """
        Materialize the sites, sorted lexicographically by ``(re, im)``.

        Parameters
        ----------
        window : Rect, optional
            Bounding window used to cut an infinite rectangle.

        Raises
        ------
        InfiniteRegionError
            If the (cut) rectangle is still infinite.
        """
        region = self if window is None else self.intersect(window)
        if region is None:
            return []
        if not region.is_finite:
            raise InfiniteRegionError(self)
        return [
            Site(a, b)
            for a in range(int(region.lo[0]), int(region.hi[0]) + 1)
            for b in range(int(region.lo[1]), int(region.hi[1]) + 1)
        ]

    def edges(self) -> list[Edge]:
        """ All unit edges with both endpoints inside, sorted """
        out = []
        for s in self.sites():
            if s.re + 1 <= self.hi[0]:
                out.append(Edge(s, Site(s.re + 1, s.im)))
            if s.im + 1 <= self.hi[1]:
                out.append(Edge(s, Site(s.re, s.im + 1)))
        out.sort()
        return out

    def boundary_distance(self, site: Site) -> float:
        return min(site.re - self.lo[0], self.hi[0] - site.re,
                   site.im - self.lo[1], self.hi[1] - site.im)

    @classmethod
    def bounding(cls, sites: Sequence[SiteLike]) -> "Rect":
        """ Smallest rectangle holding every site """
        pts = [as_site(s) for s in sites]
        if not pts:
            raise ValueError("cannot bound an empty set of sites")
        return cls(
            (min(p.re for p in pts), min(p.im for p in pts)),
            (max(p.re for p in pts), max(p.im for p in pts)),
        )


def rect(
    u: Union[SiteLike, Corner],
    v: Union[SiteLike, Corner],
) -> Rect:
    """
    The rectangle of sites with diagonal corners ``u`` and ``v``.

    Corners may carry infinite components, e.g. ``complex(3, math.inf)`` or
    ``(3, math.inf)`` for a half-infinite strip. Finite components must be
    integers.

    Examples
    --------
    ::

        rect(2+1j, -1)            # [-1, 2] x [0, 1], 8 sites
        rect(-3, (3, math.inf))   # the strip [-3, 3] x [0, inf)
    """
    a, b = _components(u)
    c, d = _components(v)
    for value in (a, b, c, d):
        if math.isfinite(value) and not float(value).is_integer():
            raise ValueError(f"corner component {value} is not an integer")
    if b == -math.inf or d == -math.inf:
        raise HalfSpaceError("corner with imaginary part -inf")
    lo = (min(a, c), max(0.0, min(b, d)))
    hi = (max(a, c), max(b, d))
    if hi[1] < 0:
        raise HalfSpaceError(f"rectangle {format_site(a, b)}:{format_site(c, d)}")
    return Rect(lo, hi)


def ball(x: SiteLike, M: int) -> Rect:
    """ Sites within sup-distance ``M`` of ``x``, cut at the half-space """
    if M < 0:
        raise ValueError(f"{M=}, but the radius must be nonnegative")
    x = as_site(x)
    return rect((x.re - M, x.im - M), (x.re + M, x.im + M))


@dataclass(frozen=True)
class EdgeRegion:
    """
    The edge set between two corner sites, with its wide/tall exclusion rule.

    Build it with :func:`edge_region`.
    """
    kind: Literal["wide", "tall"]
    u: Corner
    v: Corner

    @property
    def rect(self) -> Rect:
        return rect(self.u, self.v)

    def __contains__(self, edge: object) -> bool:
        if not isinstance(edge, Edge):
            return False
        box = self.rect
        if edge.a not in box or edge.b not in box:
            return False
        if self.kind == "wide":
            ends = {self.u[0], self.v[0]}
            return not (edge.a.re in ends and edge.b.re in ends)
        ends = {self.u[1], self.v[1]}
        return not (edge.a.im in ends and edge.b.im in ends)

    @cached_property
    def edges(self) -> frozenset:
        """ The resolved finite edge set """
        return frozenset(e for e in self.rect.edges() if e in self)

    def sites(self) -> list[Site]:
        return self.rect.sites()

    def __str__(self) -> str:
        return f"<{format_site(*self.u)}, {format_site(*self.v)}>"


def edge_region(u: SiteLike, v: SiteLike) -> EdgeRegion:
    """
    Edge set spanned by the corners ``u = a+bi`` and ``v = c+di``.

    Wide regions (``|a-c| >= 2|b-d|``) drop the edges whose endpoints both
    sit on the end columns ``Re in {a, c}``; tall regions
    (``2|a-c| <= |b-d|``) drop those whose endpoints both sit on the end rows
    ``Im in {b, d}``. A single point counts as wide.

    Raises
    ------
    AspectError
        If neither aspect inequality holds.
    """
    p, q = as_site(u), as_site(v)
    dx, dy = abs(p.re - q.re), abs(p.im - q.im)
    if dx >= 2 * dy:
        kind: Literal["wide", "tall"] = "wide"
    elif 2 * dx <= dy:
        kind = "tall"
    else:
        raise AspectError(p, q)
    return EdgeRegion(kind, (p.re, p.im), (q.re, q.im))


Orientation = Literal["horizontal", "vertical"]


@dataclass(frozen=True)
class Seed:
    """
    ``2r+1`` sites infected at one instant, centred at ``center``.
    """
    center: Site
    r: int
    orientation: Orientation = "horizontal"
    time: float = 0.0

    def __post_init__(self) -> None:
        if self.r < 0:
            raise ValueError(f"seed radius {self.r} must be nonnegative")
        if self.orientation not in ("horizontal", "vertical"):
            msg = (f"orientation={self.orientation!r}, but it must be "
                   "'horizontal' or 'vertical'")
            raise ValueError(msg)
        if self.time < 0:
            raise ValueError(f"seed time {self.time} must be nonnegative")

    @property
    def sites(self) -> list[Site]:
        return seed_sites(self)

    def __iter__(self) -> Iterator[Site]:
        return iter(seed_sites(self))


def seed_sites(s: Seed) -> list[Site]:
    """
    The ``2r+1`` sites of a seed, in lexicographic order.

    Raises
    ------
    HalfSpaceError
        If a vertical seed would reach below the bottom row.
    """
    x = s.center
    if s.orientation == "horizontal":
        return [Site(x.re + k, x.im) for k in range(-s.r, s.r + 1)]
    if x.im < s.r:
        raise HalfSpaceError(f"vertical seed at {x} with r={s.r}")
    return [Site(x.re, x.im + k) for k in range(-s.r, s.r + 1)]
