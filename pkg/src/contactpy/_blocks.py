"""
Boundary sets and infected-time measures of a box, block-condition
estimators, seed production and the named joining events built on them.

The box of height ``h`` and half-width ``w`` is ``[-w, w] x [0, h]``; the
process starts from the horizontal seed ``[-r, r] x 0`` and runs inside the
box until the truncation horizon.
"""
import logging
from dataclasses import dataclass
from typing import Dict, Iterable, Literal, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import NDArray

from ._environment import EnvLike, Mode
from ._errors import GeomError, WindowError
from ._graphical import (
    Constraint,
    GraphicalRep,
    IntervalUnion,
    Sweep,
    at_time,
    during,
    evolve,
    is_joined,
    sample_rep,
    trajectory_time,
    within_edges,
    within_sites,
)
from ._lattice import (
    EdgeRegion,
    Rect,
    Seed,
    Site,
    SiteLike,
    as_site,
    edge_region,
    rect,
    seed_sites,
)
from ._stats import DYNAMICS, EstimateWithCI, StreamId, derive, map_trials, wilson

logger = logging.getLogger(__name__)

Side = Literal["L", "R", "UL", "UR"]
SIDES: Tuple[Side, ...] = ("L", "UL", "UR", "R")


def default_horizon(h: int, w: int, mean_rate: float) -> float:
    """
    Truncation horizon ``10 (h + w) / min(1, mean rate)``.

    A heuristic; with a zero mean rate nothing spreads and ``10 (h + w)`` is
    used.
    """
    scale = min(1.0, mean_rate)
    return 10.0 * (h + w) / scale if scale > 0 else 10.0 * (h + w)


@dataclass(frozen=True)
class BoxSpec:
    h: int
    w: int
    r: int
    horizon: float

    def __post_init__(self) -> None:
        if self.h < 1 or self.w < 1:
            raise ValueError(f"box needs h, w >= 1, got h={self.h}, w={self.w}")
        if not 0 <= self.r <= self.w:
            raise ValueError(f"seed radius r={self.r} must lie in [0, w]")
        if not self.horizon > 0:
            raise ValueError(f"horizon={self.horizon} must be positive")

    def box(self, origin: SiteLike = 0) -> Rect:
        o = as_site(origin)
        return rect((o.re - self.w, o.im), (o.re + self.w, o.im + self.h))

    def source(self, origin: SiteLike = 0) -> list[Site]:
        o = as_site(origin)
        return seed_sites(Seed(o, self.r, "horizontal"))

    def side(self, side: Side, origin: SiteLike = 0) -> list[Site]:
        """
        Boundary sites of one side: ``R`` is the column ``Re = w``, ``UR``
        the top row for ``0 <= Re <= w``, and the ``L`` sides mirror them.
        """
        o = as_site(origin)
        h, w = self.h, self.w
        if side == "R":
            pts = [(w, k) for k in range(h + 1)]
        elif side == "L":
            pts = [(-w, k) for k in range(h + 1)]
        elif side == "UR":
            pts = [(k, h) for k in range(w + 1)]
        elif side == "UL":
            pts = [(-k, h) for k in range(w + 1)]
        else:
            raise ValueError(f"{side=}, but it must be one of {SIDES}")
        return sorted(Site(o.re + a, o.im + b) for a, b in pts)


@dataclass(frozen=True)
class PhiResult:
    phiL: frozenset
    phiR: frozenset
    phiUL: frozenset
    phiUR: frozenset

    @property
    def phi(self) -> frozenset:
        return self.phiL | self.phiR | self.phiUL | self.phiUR

    def __getitem__(self, side: Side) -> frozenset:
        return getattr(self, "phi" + side)

    @property
    def sizes(self) -> Dict[str, int]:
        return {d: len(self[d]) for d in SIDES}


@dataclass(frozen=True)
class ThetaResult:
    thetaL: IntervalUnion
    thetaR: IntervalUnion
    thetaUL: IntervalUnion
    thetaUR: IntervalUnion

    def __getitem__(self, side: Side) -> IntervalUnion:
        return getattr(self, "theta" + side)

    @property
    def measures(self) -> Dict[str, float]:
        return {d: self[d].measure for d in SIDES}


def _check_window(rep: GraphicalRep, box: Rect, until: float) -> None:
    if not rep.covers(box):
        raise WindowError(f"box {box}", rep.region)
    if until > rep.horizon:
        raise WindowError(f"horizon {until}", f"[{rep.start}, {rep.horizon}]")


def phi_theta(
    rep: GraphicalRep,
    spec: BoxSpec,
    origin: SiteLike = 0,
) -> Tuple[PhiResult, ThetaResult]:
    """
    Boundary sets and infected-time sets of the box from one run.

    Raises
    ------
    WindowError
        If the rep does not cover the box or ends before the horizon.
    """
    box = spec.box(origin)
    until = rep.start + spec.horizon
    _check_window(rep, box, until)
    traj = evolve(rep, spec.source(origin), within_sites(box), until)
    reached = traj.ever_infected
    sides = {d: spec.side(d, origin) for d in SIDES}
    phi_ = PhiResult(*(frozenset(reached.intersection(sides[d]))
                       for d in ("L", "R", "UL", "UR")))
    theta_ = ThetaResult(*(trajectory_time(traj, sides[d])
                           for d in ("L", "R", "UL", "UR")))
    return phi_, theta_


def phi(rep: GraphicalRep, spec: BoxSpec, origin: SiteLike = 0) -> PhiResult:
    """
    Sites of each side reached from the bottom seed inside the box.

    Examples
    --------
    ::

        spec = BoxSpec(h=4, w=16, r=1, horizon=40.0)
        rep = sample_rep(env, spec.box(), spec.horizon, stream)
        phi(rep, spec).phiR      # reached sites of the right column
    """
    return phi_theta(rep, spec, origin)[0]


def theta(rep: GraphicalRep, spec: BoxSpec, origin: SiteLike = 0) -> ThetaResult:
    """ Infected times of each side, as interval unions with measures """
    return phi_theta(rep, spec, origin)[1]


@dataclass(frozen=True)
class BlockEstimate:
    event: str
    side: str
    N: float
    spec: BoxSpec
    mode: str
    estimate: EstimateWithCI

    @property
    def point(self) -> float:
        return self.estimate.point

    def as_row(self) -> dict:
        return {
            "event": self.event,
            "h": self.spec.h,
            "w": self.spec.w,
            "r": self.spec.r,
            "N": self.N,
            "T": self.spec.horizon,
            "mode": self.mode,
            "trials": self.estimate.n,
            "estimate": self.estimate.point,
            "ci_lo": self.estimate.lo,
            "ci_hi": self.estimate.hi,
        }


def _box_sample(
    mode: Mode,
    spec: BoxSpec,
    stream: StreamId,
) -> Tuple[PhiResult, ThetaResult]:
    env = mode.env_for(stream)
    rep = sample_rep(env, spec.box(), spec.horizon, derive(stream, DYNAMICS))
    return phi_theta(rep, spec)


def block_sizes(
    mode: Mode,
    spec: BoxSpec,
    trials: int,
    stream: StreamId,
    parallelism: int = 1,
) -> Tuple[NDArray[np.int64], NDArray[np.float64]]:
    """
    Per trial, the sizes ``|Phi^D|`` and measures ``m(Theta^D)`` in
    :data:`SIDES` order, each array of shape ``(trials, 4)``.
    """
    def trial(s: StreamId) -> Tuple[list, list]:
        p, t = _box_sample(mode, spec, s)
        return [len(p[d]) for d in SIDES], [t[d].measure for d in SIDES]

    rows = map_trials(trial, trials, stream, parallelism)
    sizes = np.array([r[0] for r in rows], dtype=np.int64).reshape(-1, 4)
    measures = np.array([r[1] for r in rows], dtype=np.float64).reshape(-1, 4)
    return sizes, measures


def estimate_block_grid(
    mode: Mode,
    spec: BoxSpec,
    Ns: Sequence[int],
    trials: int,
    stream: StreamId,
    parallelism: int = 1,
) -> list[BlockEstimate]:
    """
    ``P(|Phi^D| > N)`` for every side and every ``N`` from one set of
    realizations, hence exactly monotone in ``N``.
    """
    sizes, _ = block_sizes(mode, spec, trials, stream, parallelism)
    out = []
    for N in Ns:
        for k, d in enumerate(SIDES):
            hits = int((sizes[:, k] > N).sum())
            out.append(BlockEstimate(
                f"|Phi^{d}|>{N}", d, N, spec, mode.label, wilson(hits, trials)))
    logger.info("block estimates for %s over %d trials (%s)",
                spec, trials, mode.label)
    return out


def estimate_block(
    mode: Mode,
    spec: BoxSpec,
    N: int,
    trials: int,
    stream: StreamId,
    parallelism: int = 1,
) -> Dict[str, BlockEstimate]:
    """
    Estimate ``P(|Phi^D(h, w)| > N)`` for each side ``D``.

    Parameters
    ----------
    mode : Mode
        ``annealed``: a fresh environment per trial; ``quenched``: one fixed
        environment, fresh dynamics per trial.

    spec : BoxSpec

    N : int

    trials : int

    stream : StreamId
        Trial ``i`` uses ``derive(stream, i)``.

    Returns
    -------
    estimates : dict
        Side label to :class:`BlockEstimate` with Wilson interval.
    """
    return {e.side: e for e in estimate_block_grid(
        mode, spec, [N], trials, stream, parallelism)}


def estimate_block_mixed(
    mode: Mode,
    spec: BoxSpec,
    U: float,
    V: float,
    trials: int,
    stream: StreamId,
    parallelism: int = 1,
) -> Dict[str, BlockEstimate]:
    """ ``P(|Phi^D| + m(Theta^D) > U + V)`` for each side """
    sizes, measures = block_sizes(mode, spec, trials, stream, parallelism)
    total = sizes + measures
    return {
        d: BlockEstimate(f"|Phi^{d}|+m(Theta^{d})>{U + V}", d, U + V, spec,
                         mode.label, wilson(int((total[:, k] > U + V).sum()),
                                            trials))
        for k, d in enumerate(SIDES)
    }


@dataclass(frozen=True)
class ConditionReport:
    """
    The two alternatives of the block dichotomy at given ``N`` and ``eps``:
    (1) the right side of the ``(h, 4h)`` and ``(h, 8h)`` boxes, (2) the
    top-right of ``(h, 8h)`` and the right side of ``(2h, 8h)``.
    """
    N: int
    eps: float
    estimates: Dict[str, BlockEstimate]

    @property
    def first(self) -> bool:
        return all(self.estimates[k].point > 1 - self.eps
                   for k in ("R(h,4h)", "R(h,8h)"))

    @property
    def second(self) -> bool:
        return all(self.estimates[k].point > 1 - self.eps
                   for k in ("UR(h,8h)", "R(2h,8h)"))

    @property
    def supported(self) -> str:
        flags = [name for name, ok in (("1", self.first), ("2", self.second))
                 if ok]
        return "+".join(flags) if flags else "none"


def block_condition_report(
    mode: Mode,
    h: int,
    r: int,
    N: int,
    eps: float,
    trials: int,
    stream: StreamId,
    horizon: Optional[float] = None,
    parallelism: int = 1,
) -> ConditionReport:
    """
    Estimate the four probabilities behind the block dichotomy.

    Each box shape gets its own derived stream, so the four estimates are
    independent of each other.
    """
    cases = (
        ("R(h,4h)", "R", h, 4 * h),
        ("R(h,8h)", "R", h, 8 * h),
        ("UR(h,8h)", "UR", h, 8 * h),
        ("R(2h,8h)", "R", 2 * h, 8 * h),
    )
    estimates = {}
    for k, (name, side, hh, ww) in enumerate(cases):
        T = horizon or default_horizon(hh, ww, mode.spec.mean)
        spec = BoxSpec(hh, ww, r, T)
        est = estimate_block(mode, spec, N, trials, derive(stream, k),
                             parallelism)[side]
        estimates[name] = BlockEstimate(name, side, N, spec, mode.label,
                                        est.estimate)
    return ConditionReport(N, eps, estimates)


@dataclass(frozen=True)
class SegmentSearch:
    found: list
    extinct: bool


def first_segment(
    rep: GraphicalRep,
    sources: Sequence[Tuple[Site, float, float]],
    constraint: Constraint,
    lines: Sequence[Sequence[Site]],
    width: int,
    until: float,
    stop_on: int = 1,
) -> "SegmentSearch":
    """
    Earliest instants at which ``width`` consecutive sites of a line are
    infected together.

    The forward sweep keeps the infection flags of every line site; a
    segment can only complete when one of its sites gets infected, so only
    infection events are checked.

    Parameters
    ----------
    sources : sequence of (site, a, b)
        Space-time source atoms.

    lines : sequence of site sequences
        Ordered target lines; sites outside the rep are ignored.

    width : int
        Segment length, ``2r+1`` for seeds.

    stop_on : int
        Number of distinct lines that must complete before stopping.

    Returns
    -------
    search : SegmentSearch
        ``found`` holds ``(line, segment sites, time)``, at most one entry per
        line in order of completion; ``extinct`` tells whether the process
        died out before the search ended.
    """
    index = rep.index
    where: Dict[int, list] = {}
    for k, line in enumerate(lines):
        for pos, s in enumerate(line):
            if s in index:
                where.setdefault(index[s], []).append((k, pos))
    srcs = [(index[s], a, b) for s, a, b in sources
            if s in index and constraint.allows(s)]
    if not srcs or not where:
        return SegmentSearch([], not srcs)
    line_idx = [[index.get(s, -1) for s in line] for line in lines]
    sweep = Sweep(rep, srcs, constraint.pair_mask(rep), until)
    flags = sweep.infected
    found: Dict[int, Tuple[int, list, float]] = {}
    for t, code, x in sweep:
        if code != 1 or x not in where:
            continue
        for k, pos in where[x]:
            if k in found:
                continue
            ids = line_idx[k]
            lo = pos
            while lo > 0 and pos - lo < width - 1 and ids[lo - 1] >= 0 \
                    and flags[ids[lo - 1]]:
                lo -= 1
            hi = pos
            while hi < len(ids) - 1 and hi - lo < width - 1 \
                    and ids[hi + 1] >= 0 and flags[ids[hi + 1]]:
                hi += 1
            if hi - lo + 1 >= width:
                found[k] = (k, list(lines[k][lo:lo + width]), t)
        if len(found) >= stop_on:
            break
    return SegmentSearch(sorted(found.values(), key=lambda f: f[2]),
                         sweep.extinct)


def seed_to_seed(
    rep: GraphicalRep,
    src: Seed,
    spec: BoxSpec,
    constraint: EdgeRegion,
    column: Optional[int] = None,
) -> Optional[Tuple[Site, float]]:
    """
    First vertical seed formed on a column by the process from ``src``.

    The process runs inside the edge region from ``src.time`` for at most
    ``spec.horizon``. The target column defaults to the region's right end.

    Returns
    -------
    result : (center, time) or None
        The earliest time at which the ``2r+1`` sites ``center - ri ...
        center + ri`` are infected together.
    """
    box = constraint.rect
    col = int(box.hi[0]) if column is None else column
    line = [Site(col, b) for b in range(int(box.lo[1]), int(box.hi[1]) + 1)]
    until = min(rep.horizon, src.time + spec.horizon)
    sources = [(s, src.time, src.time) for s in seed_sites(src)]
    width = 2 * spec.r + 1
    search = first_segment(rep, sources, within_edges(constraint), [line],
                           width, until)
    if not search.found:
        return None
    _, segment, t = search.found[0]
    return segment[spec.r], t


@dataclass(frozen=True)
class ProbeResult:
    occurred: bool
    time: Optional[float] = None
    site: Optional[Site] = None

    def __bool__(self) -> bool:
        return self.occurred


def _members(*rects: Rect, extra: Iterable[Site] = ()) -> frozenset:
    out = set(extra)
    for r_ in rects:
        out.update(r_.sites())
    return frozenset(out)


def _require(rep: GraphicalRep, sites: Iterable[Site], t: float) -> None:
    missing = [s for s in sites if s not in rep.index]
    if missing:
        raise WindowError(f"template site {missing[0]}", rep.region)
    if t > rep.horizon:
        raise WindowError(f"time {t}", f"[{rep.start}, {rep.horizon}]")


def _infected_at(
    rep: GraphicalRep,
    sources: Sequence[Tuple[Site, float]],
    constraint: Constraint,
    t: float,
) -> frozenset:
    srcs = [(rep.index[s], a, a) for s, a in sources]
    sweep = Sweep(rep, srcs, constraint.pair_mask(rep), t)
    for _ in sweep:
        pass
    return frozenset(rep.sites[i] for i, f in enumerate(sweep.infected) if f)


def _all_at(
    rep: GraphicalRep,
    start: Site,
    t0: float,
    constraint: Constraint,
    targets: Sequence[Site],
    t: float,
) -> ProbeResult:
    infected = _infected_at(rep, [(start, t0)], constraint, t)
    ok = all(z in infected for z in targets)
    return ProbeResult(ok, t if ok else None)


def _probe_e(rep: GraphicalRep, N: int) -> ProbeResult:
    corridor = _members(rect(1, (4 * N, N)), extra=[Site(0, 0)])
    targets = rect(4 * N, (4 * N, N)).sites()
    _require(rep, corridor, 1.0)
    return _all_at(rep, Site(0, 0), 0.0, within_sites(corridor), targets, 1.0)


def _probe_g(rep: GraphicalRep, r: int) -> ProbeResult:
    region = edge_region((-r, 0), (r, 4 * r))
    targets = rect((-r, 4 * r), (r, 4 * r)).sites()
    _require(rep, region.sites(), 1.0)
    return _all_at(rep, Site(0, 0), 0.0, within_edges(region), targets, 1.0)


def _probe_c(rep: GraphicalRep, x: SiteLike, t: float, K: int) -> ProbeResult:
    x = as_site(x)
    corridor = _members(rect(x, (x.re, x.im + 3 * K)),
                        rect((x.re, x.im + 3 * K), (x.re + 3 * K, x.im + 3 * K)))
    goal = Site(x.re + 3 * K, x.im + 3 * K)
    _require(rep, corridor, t + 1)
    res = is_joined(rep, at_time([x], t), at_time([goal], t + 1),
                    within_sites(corridor))
    return ProbeResult(res.joined, t + 1 if res.joined else None,
                       goal if res.joined else None)


def _probe_t(
    rep: GraphicalRep,
    x: SiteLike,
    t: float,
    m: int,
    K: int,
    vertical: bool = False,
) -> ProbeResult:
    x = as_site(x)
    if not vertical and x.im < K:
        raise GeomError(f"column target of T at {x} with K={K} reaches "
                        "below the bottom row")
    if vertical:
        target = rect((x.re - K, x.im + m), (x.re + K, x.im + m))
        body = rect((x.re - K, x.im + 1), (x.re + K, x.im + m))
    else:
        target = rect((x.re + m, x.im - K), (x.re + m, x.im + K))
        body = rect((x.re + 1, x.im - K), (x.re + m, x.im + K))
    corridor = _members(body, extra=[x])
    _require(rep, corridor | set(target.sites()), t)
    res = is_joined(rep, at_time([x], t), during(target.sites(), t, rep.horizon),
                    within_sites(corridor))
    return ProbeResult(res.joined, res.first_hit, res.site)


def _probe_a(
    rep: GraphicalRep,
    x: SiteLike,
    t: float,
    m: int,
    n: int,
    K: int,
) -> ProbeResult:
    x = as_site(x)
    far = (x.re + m + 4 * K, x.im + n + 4 * K)
    target = rect((x.re + m + 2 * K, x.im + n + 2 * K), far)
    corridor = _members(
        rect((x.re + K, x.im + 1), (x.re - K, x.im + 2 * K + n)),
        rect((x.re - K, x.im + 2 * K + n), far),
        extra=[x],
    )
    _require(rep, corridor, t)
    res = is_joined(rep, at_time([x], t), during(target.sites(), t, rep.horizon),
                    within_sites(corridor))
    return ProbeResult(res.joined, res.first_hit, res.site)


def _probe_b(
    rep: GraphicalRep,
    m: int,
    n: int,
    side: Side,
    r: int,
    K: int,
    N1: int,
    t: Optional[float] = None,
) -> ProbeResult:
    span = 3 * K * N1
    if side == "UR":
        target = rect((n, m), (n + span, m))
    elif side == "R":
        target = rect((m, n), (m, n + span))
    elif side == "UL":
        target = rect((-n - span, m), (-n, m))
    elif side == "L":
        target = rect((-m, n), (-m, n + span))
    else:
        raise ValueError(f"{side=}, but it must be one of {SIDES}")
    ball_ = rect((-m, 0), (m, m))
    constraint = within_sites(ball_)
    source = rect(-r, r).sites()
    _require(rep, ball_.sites(), rep.horizon if t is None else t)
    if target.intersect(ball_) != target:
        return ProbeResult(False)
    if t is not None:
        infected = _infected_at(rep, [(s, rep.start) for s in source],
                                constraint, t)
        ok = all(z in infected for z in target.sites())
        return ProbeResult(ok, t if ok else None)
    line = target.sites()
    search = first_segment(rep, [(s, rep.start, rep.start) for s in source],
                           constraint, [line], len(line), rep.horizon)
    if not search.found:
        return ProbeResult(False)
    return ProbeResult(True, search.found[0][2])


_TEMPLATES = {
    "E": _probe_e,
    "G": _probe_g,
    "C": _probe_c,
    "T": _probe_t,
    "A": _probe_a,
    "B": _probe_b,
}


def event_probe(rep: GraphicalRep, template: str, **params) -> ProbeResult:
    """
    Evaluate one of the named joining events on a rep.

    Templates and their parameters:

    ``E(N)``
        ``0 x 0`` reaches every site of ``[4N, 4N+Ni]`` at time exactly 1
        within ``{0}`` and ``[1, 4N+Ni]``.
    ``G(r)``
        ``0 x 0`` reaches every site of ``[-r+4ri, r+4ri]`` at time 1 along
        the edges of ``<-r, r+4ri>``.
    ``C(x, t, K)``
        ``x x t`` joined to ``(x+3K+3Ki) x (t+1)`` within the L-shaped
        corridor up the column of ``x`` and along row ``Im x + 3K``.
    ``T(x, t, m, K, vertical=False)``
        First time ``x x t`` reaches the column ``Re x + m`` (rows
        ``Im x - K ... Im x + K``), or the row ``Im x + m`` when
        ``vertical``; ``time`` and ``site`` report the hit.
    ``A(x, t, m, n, K)``
        ``x x t`` reaches the square ``[x+m+ni+2K+2Ki, x+m+ni+4K+4Ki]``
        through the corridor going up then right.
    ``B(m, n, side, r, K, N1, t=None)``
        The seed ``[-r, r] x 0`` infects a whole boundary segment of the
        ball of radius ``m`` at time ``t`` (or at some common time when
        ``t`` is None).

    Raises
    ------
    WindowError
        If the rep does not cover the template's sites and times.

    GeomError
        If a horizontal ``T`` target would reach below ``Im = 0``.
    """
    try:
        probe = _TEMPLATES[template]
    except KeyError:
        msg = (f"{template=}, but it must be one of "
               f"{sorted(_TEMPLATES)}")
        raise ValueError(msg) from None
    return probe(rep, **params)


def box_rep(
    env: EnvLike,
    spec: BoxSpec,
    stream: StreamId,
    origin: SiteLike = 0,
) -> GraphicalRep:
    """ A rep covering exactly the box, from time 0 to the horizon """
    return sample_rep(env, spec.box(origin), spec.horizon, stream)

