"""
Harris graphical representation on a finite space-time window.

A :class:`GraphicalRep` holds every death mark and every infection arrow of a
rectangle of sites during ``[start, horizon]``. The contact process, the
"joined within" relation and infected-time accounting are all read off it by
one forward sweep over the time-sorted marks.

Conventions
-----------
A site is infected on ``[infection, death)``. Marks sharing a time are
processed deaths first, then arrows, each in lexicographic site order.
"""
import heapq
import logging
import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Literal, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import NDArray

from ._environment import EnvLike
from ._errors import ConstraintError, InfiniteRegionError, WindowError
from ._lattice import Edge, EdgeRegion, Rect, Site, SiteLike, as_site
from ._stats import StreamId, derive

logger = logging.getLogger(__name__)

# mark kinds, in tie-breaking order
DEATH = 0
INJECT = 1
ARROW = 2
OPEN = 3
RELEASE = 4


@dataclass(frozen=True, eq=False)
class GraphicalRep:
    """
    Death marks and arrows of one realization on ``region x [start, horizon]``.

    Build it with :func:`sample_rep` or :func:`rep_from_marks`. Marks are
    stored merged and sorted: ``times``, ``kinds`` (``DEATH`` or ``ARROW``),
    ``owners`` (the dying site or the arrow's tail, as an index into
    ``sites``) and ``pairs`` (directed pair index of an arrow, ``-1`` for a
    death).
    """
    region: Rect
    start: float
    horizon: float
    sites: Tuple[Site, ...]
    pair_src: NDArray[np.int64]
    pair_dst: NDArray[np.int64]
    pair_rate: NDArray[np.float64]
    times: NDArray[np.float64]
    kinds: NDArray[np.int8]
    owners: NDArray[np.int64]
    pairs: NDArray[np.int64]
    provenance: Tuple[str, Optional[StreamId]] = ("fixture", None)

    @cached_property
    def index(self) -> dict:
        return {s: i for i, s in enumerate(self.sites)}

    @cached_property
    def pair_index(self) -> dict:
        return {(int(a), int(b)): p
                for p, (a, b) in enumerate(zip(self.pair_src, self.pair_dst))}

    @cached_property
    def _lists(self) -> tuple:
        return (self.times.tolist(), self.kinds.tolist(),
                self.owners.tolist(), self.pairs.tolist(),
                self.pair_dst.tolist())

    @cached_property
    def _coords(self) -> Tuple[NDArray[np.int64], NDArray[np.int64]]:
        return (np.array([s.re for s in self.sites], dtype=np.int64),
                np.array([s.im for s in self.sites], dtype=np.int64))

    @property
    def n_marks(self) -> int:
        return int(self.times.size)

    def deaths(self, x: SiteLike) -> NDArray[np.float64]:
        """ Sorted death times of one site """
        i = self.index[as_site(x)]
        return self.times[(self.kinds == DEATH) & (self.owners == i)]

    def arrows(self, x: SiteLike, y: SiteLike) -> NDArray[np.float64]:
        """ Sorted arrow times from ``x`` to ``y`` """
        p = self.pair_index[(self.index[as_site(x)], self.index[as_site(y)])]
        return self.times[self.pairs == p]

    def covers(self, region: Rect) -> bool:
        return self.region.contains_rect(region)

    def extended(self, env: EnvLike, horizon: float) -> "GraphicalRep":
        """
        The same realization continued up to a later horizon.

        Marks are drawn in unit time slabs from per-slab streams, so every
        mark of ``self`` is also a mark of the extension.
        """
        stream = self.provenance[1]
        if stream is None:
            raise ValueError("fixture reps cannot be extended")
        return sample_rep(env, self.region, horizon, stream, start=self.start)


def _directed_pairs(sites: Sequence[Site], index: dict) -> Tuple[list, list, list]:
    src, dst, edges = [], [], []
    for i, s in enumerate(sites):
        for t in s.neighbours():
            j = index.get(t)
            if j is not None:
                src.append(i)
                dst.append(j)
                edges.append(Edge(s, t) if s < t else Edge(t, s))
    return src, dst, edges


def _assemble(
    region: Rect,
    start: float,
    horizon: float,
    sites: Sequence[Site],
    src: Sequence[int],
    dst: Sequence[int],
    rates: NDArray[np.float64],
    d_times: NDArray[np.float64],
    d_owner: NDArray[np.int64],
    a_times: NDArray[np.float64],
    a_pair: NDArray[np.int64],
    provenance: Tuple[str, Optional[StreamId]],
) -> GraphicalRep:
    src_a = np.asarray(src, dtype=np.int64)
    dst_a = np.asarray(dst, dtype=np.int64)
    times = np.concatenate([d_times, a_times]).astype(np.float64)
    kinds = np.concatenate([
        np.full(d_times.size, DEATH, dtype=np.int8),
        np.full(a_times.size, ARROW, dtype=np.int8)])
    owners = np.concatenate([d_owner, src_a[a_pair]]).astype(np.int64)
    heads = np.concatenate([d_owner, dst_a[a_pair]]).astype(np.int64)
    pairs = np.concatenate([
        np.full(d_times.size, -1, dtype=np.int64), a_pair]).astype(np.int64)
    order = np.lexsort((heads, owners, kinds, times))
    return GraphicalRep(
        region=region,
        start=float(start),
        horizon=float(horizon),
        sites=tuple(sites),
        pair_src=src_a,
        pair_dst=dst_a,
        pair_rate=np.asarray(rates, dtype=np.float64),
        times=times[order],
        kinds=kinds[order],
        owners=owners[order],
        pairs=pairs[order],
        provenance=provenance,
    )


def sample_rep(
    env: EnvLike,
    region: Rect,
    horizon: float,
    stream: StreamId,
    start: float = 0.0,
) -> GraphicalRep:
    """
    Sample all death marks and arrows of ``region`` during ``[start, horizon]``.

    Deaths form a rate-1 Poisson process per site; each ordered pair of
    neighbours carries an independent Poisson process of rate ``env.rate``
    of their edge. Slab ``k`` (times ``[start+k, start+k+1)``) is drawn from
    ``derive(stream, k)``.

    Raises
    ------
    InfiniteRegionError
        If ``region`` is infinite.
    """
    if not region.is_finite:
        raise InfiniteRegionError(region)
    if not horizon > start:
        raise ValueError(f"{horizon=} must exceed {start=}")
    sites = region.sites()
    index = {s: i for i, s in enumerate(sites)}
    src, dst, edges = _directed_pairs(sites, index)
    rates = env.rates(edges) if edges else np.zeros(0)
    n_sites, n_pairs = len(sites), len(src)

    d_times, d_owner, a_times, a_pair = [], [], [], []
    for k in range(int(math.ceil(horizon - start))):
        rng = derive(stream, k).generator()
        t0 = start + k
        counts = rng.poisson(1.0, n_sites)
        d_owner.append(np.repeat(np.arange(n_sites), counts))
        d_times.append(t0 + rng.random(int(counts.sum())))
        counts = rng.poisson(rates) if n_pairs else np.zeros(0, dtype=np.int64)
        a_pair.append(np.repeat(np.arange(n_pairs), counts))
        a_times.append(t0 + rng.random(int(counts.sum())))

    def joined(chunks: list, dtype) -> NDArray:
        return np.concatenate(chunks).astype(dtype) if chunks else np.zeros(0, dtype)

    dt, do = joined(d_times, np.float64), joined(d_owner, np.int64)
    at, ap = joined(a_times, np.float64), joined(a_pair, np.int64)
    keep_d, keep_a = dt <= horizon, at <= horizon
    rep = _assemble(region, start, horizon, sites, src, dst, rates,
                    dt[keep_d], do[keep_d], at[keep_a], ap[keep_a],
                    (getattr(env, "env_id", "?"), stream))
    logger.debug("sampled %d marks on %s x [%g, %g]",
                 rep.n_marks, region, start, horizon)
    return rep


def rep_from_marks(
    region: Rect,
    horizon: float,
    deaths: Iterable[Tuple[SiteLike, float]],
    arrows: Iterable[Tuple[SiteLike, SiteLike, float]],
    start: float = 0.0,
) -> GraphicalRep:
    """
    Build a rep from explicit marks (hand-made fixtures and loaded files).
    """
    sites = region.sites()
    index = {s: i for i, s in enumerate(sites)}
    src, dst, _ = _directed_pairs(sites, index)
    pair_index = {(a, b): p for p, (a, b) in enumerate(zip(src, dst))}
    d_t, d_o = [], []
    for x, t in deaths:
        x = as_site(x)
        if x not in index or not start <= t <= horizon:
            raise WindowError(f"death mark {x} at {t}", region)
        d_t.append(t)
        d_o.append(index[x])
    a_t, a_p = [], []
    for x, y, t in arrows:
        x, y = as_site(x), as_site(y)
        key = (index.get(x), index.get(y))
        if key not in pair_index or not start <= t <= horizon:
            raise WindowError(f"arrow {x}->{y} at {t}", region)
        a_t.append(t)
        a_p.append(pair_index[key])
    return _assemble(
        region, start, horizon, sites, src, dst, np.full(len(src), np.nan),
        np.asarray(d_t, dtype=np.float64), np.asarray(d_o, dtype=np.int64),
        np.asarray(a_t, dtype=np.float64), np.asarray(a_p, dtype=np.int64),
        ("fixture", None))


@dataclass(frozen=True)
class Constraint:
    """
    Where a path may run: anywhere, inside a site set, or along an edge region.

    Use :func:`unconstrained`, :func:`within_sites` or :func:`within_edges`.
    """
    kind: Literal["unconstrained", "site_set", "edge_region"]
    rect: Optional[Rect] = None
    members: Optional[frozenset] = None
    region: Optional[EdgeRegion] = None

    def allows(self, x: Site) -> bool:
        if self.kind == "unconstrained":
            return True
        if self.kind == "edge_region":
            return x in self.region.rect
        if self.members is not None:
            return x in self.members
        return x in self.rect

    def site_mask(self, rep: GraphicalRep) -> NDArray[np.bool_]:
        re_, im = rep._coords
        if self.kind == "unconstrained":
            return np.ones(re_.size, dtype=bool)
        box = self.region.rect if self.kind == "edge_region" else self.rect
        if self.members is not None:
            return np.array([s in self.members for s in rep.sites], dtype=bool)
        return ((box.lo[0] <= re_) & (re_ <= box.hi[0])
                & (box.lo[1] <= im) & (im <= box.hi[1]))

    def pair_mask(self, rep: GraphicalRep) -> NDArray[np.bool_]:
        """ Which directed pairs of ``rep`` may carry infection """
        ok = self.site_mask(rep)
        mask = ok[rep.pair_src] & ok[rep.pair_dst]
        if self.kind != "edge_region":
            return mask
        re_, im = rep._coords
        reg = self.region
        if reg.kind == "wide":
            ends, coord = (reg.u[0], reg.v[0]), re_
        else:
            ends, coord = (reg.u[1], reg.v[1]), im
        on_end = np.isin(coord, ends)
        return mask & ~(on_end[rep.pair_src] & on_end[rep.pair_dst])


def unconstrained() -> Constraint:
    return Constraint("unconstrained")


def within_sites(sites: "Rect | Iterable[SiteLike]") -> Constraint:
    """ Paths whose time-line segments all lie in a site set """
    if isinstance(sites, Rect):
        return Constraint("site_set", rect=sites)
    return Constraint("site_set", members=frozenset(as_site(s) for s in sites))


def within_edges(region: EdgeRegion) -> Constraint:
    """ Paths whose arrows all lie on edges of ``region`` """
    return Constraint("edge_region", region=region)


class Sweep:
    """
    Forward sweep of the percolation dynamics over a rep.

    Iterating yields state changes ``(time, code, site_index)``: ``+1`` for
    an infection, ``-1`` for a recovery and ``0`` when a scheduled target
    opens while its site is infected. The live state stays readable in
    ``infected`` and ``alive`` while iterating, so callers may stop early.

    Parameters
    ----------
    sources : sequence of (site_index, a, b)
        The site is infected at ``a`` and kept infected through ``b``.

    pair_ok : sequence of bool
        Per directed pair, whether an arrow there may infect.

    until : float
        Last time processed.

    opens : sequence of (site_index, time)
        Target openings to report.

    ignore_deaths : bool
        Run the Richardson growth process instead.
    """
    def __init__(
        self,
        rep: GraphicalRep,
        sources: Sequence[Tuple[int, float, float]],
        pair_ok: Sequence[bool],
        until: float,
        opens: Sequence[Tuple[int, float]] = (),
        ignore_deaths: bool = False,
    ) -> None:
        self.rep = rep
        self.until = until
        self.pair_ok = list(pair_ok)
        self.ignore_deaths = ignore_deaths
        self.infected = bytearray(len(rep.sites))
        self.alive = 0
        self.time = rep.start
        self._extras: list = []
        for seq, (i, a, b) in enumerate(sources):
            if a <= until:
                self._extras.append((a, INJECT, i, seq))
                self._extras.append((b, RELEASE, i, seq))
        for seq, (i, t) in enumerate(opens):
            if t <= until:
                self._extras.append((t, OPEN, i, seq))
        heapq.heapify(self._extras)
        self._pending = sum(1 for e in self._extras if e[1] == INJECT)

    @property
    def extinct(self) -> bool:
        return self.alive == 0 and self._pending == 0

    def __iter__(self) -> Iterator[Tuple[float, int, int]]:
        times, kinds, owners, pairs, heads = self.rep._lists
        extras = self._extras
        infected, pair_ok = self.infected, self.pair_ok
        forced = [0] * len(infected)
        first = extras[0][0] if extras else math.inf
        i = bisect_left(times, first)
        n = bisect_right(times, self.until)
        inf = math.inf
        while True:
            if i < n:
                t, k = times[i], kinds[i]
            else:
                t, k = inf, 9
            if extras and (extras[0][0] < t
                           or (extras[0][0] == t and extras[0][1] < k)):
                et, ek, x, _ = heapq.heappop(extras)
                self.time = et
                if ek == INJECT:
                    self._pending -= 1
                    forced[x] += 1
                    if not infected[x]:
                        infected[x] = 1
                        self.alive += 1
                        yield et, 1, x
                elif ek == OPEN:
                    if infected[x]:
                        yield et, 0, x
                else:
                    forced[x] -= 1
                continue
            if i >= n:
                return
            i += 1
            self.time = t
            x = owners[i - 1]
            if k == DEATH:
                if infected[x] and not forced[x] and not self.ignore_deaths:
                    infected[x] = 0
                    self.alive -= 1
                    yield t, -1, x
                    if self.alive == 0 and self._pending == 0:
                        return
            elif infected[x]:
                p = pairs[i - 1]
                y = heads[p]
                if pair_ok[p] and not infected[y]:
                    infected[y] = 1
                    self.alive += 1
                    yield t, 1, y


@dataclass(frozen=True, eq=False)
class Trajectory:
    """
    Event log of one contact-process run.

    ``codes`` holds ``+1`` (infect) or ``-1`` (recover) per event; ``where``
    indexes ``sites``.
    """
    initial: frozenset
    start: float
    until: float
    sites: Tuple[Site, ...]
    times: NDArray[np.float64]
    where: NDArray[np.int64]
    codes: NDArray[np.int8]

    @property
    def events(self) -> list:
        """ ``(time, site, 'infect' | 'recover')`` in time order """
        return [(float(t), self.sites[int(i)], "infect" if c > 0 else "recover")
                for t, i, c in zip(self.times, self.where, self.codes)]

    def infected_at(self, t: float) -> frozenset:
        """
        Infected sites at time ``t``: events at times ``<= t`` applied.
        """
        if not self.start <= t:
            raise ValueError(f"{t=} precedes the start {self.start}")
        if t > self.until:
            raise ValueError(f"{t=} is past the end {self.until}")
        state = set(self._initial_idx)
        stop = int(np.searchsorted(self.times, t, side="right"))
        for i, c in zip(self.where[:stop].tolist(), self.codes[:stop].tolist()):
            if c > 0:
                state.add(i)
            else:
                state.discard(i)
        return frozenset(self.sites[i] for i in state)

    @cached_property
    def _initial_idx(self) -> frozenset:
        index = {s: i for i, s in enumerate(self.sites)}
        return frozenset(index[s] for s in self.initial)

    def states(self) -> Iterator[Tuple[float, frozenset]]:
        """ Yield ``(time, infected set)`` at the start and after each event """
        state = set(self._initial_idx)
        yield self.start, frozenset(self.sites[i] for i in state)
        for t, i, c in zip(self.times.tolist(), self.where.tolist(),
                           self.codes.tolist()):
            if c > 0:
                state.add(i)
            else:
                state.discard(i)
            yield t, frozenset(self.sites[j] for j in state)

    @cached_property
    def _intervals(self) -> dict:
        open_at: dict = {i: self.start for i in self._initial_idx}
        out: dict = {}
        for t, i, c in zip(self.times.tolist(), self.where.tolist(),
                           self.codes.tolist()):
            if c > 0:
                open_at[i] = t
            else:
                out.setdefault(i, []).append((open_at.pop(i), t))
        for i, t in open_at.items():
            out.setdefault(i, []).append((t, self.until))
        return out

    def intervals(self, x: SiteLike) -> list:
        """ Closed infection intervals of one site, truncated at ``until`` """
        x = as_site(x)
        for i, s in enumerate(self.sites):
            if s == x:
                return sorted(self._intervals.get(i, []))
        return []

    @cached_property
    def ever_infected(self) -> frozenset:
        return frozenset(self.sites[i] for i in self._intervals)

    @property
    def final(self) -> frozenset:
        return self.infected_at(self.until)

    @property
    def survived(self) -> bool:
        """ Whether the infection is still alive at ``until`` """
        alive = len(self._initial_idx) + int(self.codes.sum())
        return alive > 0

    @property
    def extinction_time(self) -> Optional[float]:
        if self.survived or self.times.size == 0:
            return None if self.survived else self.start
        return float(self.times[-1])


def _check_initial(
    rep: GraphicalRep,
    initial: Iterable[SiteLike],
    constraint: Constraint,
) -> list:
    sites = sorted({as_site(s) for s in initial})
    bad = [s for s in sites if s not in rep.index or not constraint.allows(s)]
    if bad:
        raise ConstraintError([str(s) for s in bad])
    return sites


def evolve(
    rep: GraphicalRep,
    initial: Iterable[SiteLike],
    constraint: Optional[Constraint] = None,
    until: Optional[float] = None,
    ignore_deaths: bool = False,
) -> Trajectory:
    """
    Run the contact process from ``initial`` (infected at ``rep.start``).

    Parameters
    ----------
    rep : GraphicalRep
    initial : iterable of site-like
    constraint : Constraint, optional
        Arrows only infect when they respect it. Defaults to
        :func:`unconstrained`.
    until : float, optional
        Defaults to the rep horizon.
    ignore_deaths : bool
        Suppress all recoveries (Richardson growth).

    Raises
    ------
    ConstraintError
        If an initial site lies outside the rep or the constraint.
    """
    constraint = constraint or unconstrained()
    until = rep.horizon if until is None else until
    if until > rep.horizon:
        raise WindowError(f"time {until}", f"[{rep.start}, {rep.horizon}]")
    sites = _check_initial(rep, initial, constraint)
    idx = [rep.index[s] for s in sites]
    sweep = Sweep(rep, [(i, rep.start, rep.start) for i in idx],
                  constraint.pair_mask(rep), until, ignore_deaths=ignore_deaths)
    times, where, codes = [], [], []
    initial_set = set(idx)
    for t, code, x in sweep:
        if code == 1 and x in initial_set and t == rep.start:
            continue
        times.append(t)
        where.append(x)
        codes.append(code)
    return Trajectory(
        initial=frozenset(sites),
        start=rep.start,
        until=until,
        sites=rep.sites,
        times=np.asarray(times, dtype=np.float64),
        where=np.asarray(where, dtype=np.int64),
        codes=np.asarray(codes, dtype=np.int8),
    )


@dataclass(frozen=True)
class SpaceTimeSet:
    """
    Union of ``(site, a, b)`` atoms, the site during the closed interval
    ``[a, b]``. A single time is the atom ``(site, t, t)``.
    """
    atoms: Tuple[Tuple[Site, float, float], ...]

    def __or__(self, other: "SpaceTimeSet") -> "SpaceTimeSet":
        return SpaceTimeSet(self.atoms + other.atoms)

    @property
    def sites(self) -> frozenset:
        return frozenset(a[0] for a in self.atoms)


def at_time(sites: Iterable[SiteLike], t: float) -> SpaceTimeSet:
    return SpaceTimeSet(tuple((as_site(s), float(t), float(t)) for s in sites))


def during(sites: Iterable[SiteLike], a: float, b: float) -> SpaceTimeSet:
    if b < a:
        raise ValueError(f"empty interval [{a}, {b}]")
    return SpaceTimeSet(tuple((as_site(s), float(a), float(b)) for s in sites))


@dataclass(frozen=True)
class JoinResult:
    joined: bool
    first_hit: Optional[float] = None
    site: Optional[Site] = None

    def __bool__(self) -> bool:
        return self.joined


def is_joined(
    rep: GraphicalRep,
    source: SpaceTimeSet,
    target: SpaceTimeSet,
    constraint: Optional[Constraint] = None,
) -> JoinResult:
    """
    Whether a path runs from ``source`` to ``target`` inside ``constraint``.

    Paths move up time-lines without crossing a death mark and along arrows.
    ``first_hit`` is the earliest target time reached and ``site`` the
    target site reached then. Source sites outside the rep or the constraint
    start no path; target sites outside the rep are never reached.
    """
    constraint = constraint or unconstrained()
    index = rep.index
    sources = [(index[s], a, b) for s, a, b in source.atoms
               if s in index and constraint.allows(s)]
    targets: dict = {}
    opens = []
    for s, a, b in target.atoms:
        if s in index:
            targets.setdefault(index[s], []).append((a, b))
            opens.append((index[s], a))
    if not sources or not targets:
        return JoinResult(False)
    until = min(rep.horizon, max(b for spans in targets.values()
                                 for _, b in spans))
    sweep = Sweep(rep, sources, constraint.pair_mask(rep), until, opens=opens)
    for t, code, x in sweep:
        if code < 0 or x not in targets:
            continue
        if any(a <= t <= b for a, b in targets[x]):
            return JoinResult(True, t, rep.sites[x])
    return JoinResult(False)


@dataclass(frozen=True)
class IntervalUnion:
    """ Disjoint closed intervals, sorted """
    intervals: Tuple[Tuple[float, float], ...] = ()

    @property
    def measure(self) -> float:
        return float(sum(b - a for a, b in self.intervals))

    def __bool__(self) -> bool:
        return bool(self.intervals)

    def __contains__(self, t: object) -> bool:
        return any(a <= t <= b for a, b in self.intervals)  # type: ignore

    @classmethod
    def merged(cls, spans: Iterable[Tuple[float, float]]) -> "IntervalUnion":
        out: list = []
        for a, b in sorted(spans):
            if out and a <= out[-1][1]:
                out[-1] = (out[-1][0], max(out[-1][1], b))
            else:
                out.append((a, b))
        return cls(tuple(out))


def infected_time(
    rep: GraphicalRep,
    initial: Iterable[SiteLike],
    constraint: Optional[Constraint],
    targets: Iterable[SiteLike],
    until: Optional[float] = None,
) -> IntervalUnion:
    """
    Times at which some target site is infected, as merged closed intervals.
    """
    return trajectory_time(evolve(rep, initial, constraint, until), targets)


def trajectory_time(
    trajectory: Trajectory,
    targets: Iterable[SiteLike],
) -> IntervalUnion:
    """ :func:`infected_time` read off an existing trajectory """
    spans = []
    for x in {as_site(s) for s in targets}:
        spans.extend(trajectory.intervals(x))
    return IntervalUnion.merged(spans)
