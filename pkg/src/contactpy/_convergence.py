"""
Survival, the upper invariant measure and complete convergence, estimated
on finite space-time windows.

Every estimator here runs the contact process on a finite region standing in
for the half-lattice; the region margin, the burn-in and the survival horizon
are always part of the result so reports can state the truncation used.
"""
import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, Literal, Optional, Sequence, Tuple

import numpy as np
import scipy.stats
from numpy.typing import NDArray

from ._blocks import SIDES, BoxSpec, Side, phi
from ._environment import DistSpec, EnvLike, Mode
from ._errors import NotIncreasingError, PreconditionError, WindowTooLargeError
from ._graphical import (
    Constraint,
    GraphicalRep,
    SpaceTimeSet,
    Trajectory,
    evolve,
    is_joined,
    sample_rep,
    within_sites,
)
from ._lattice import Rect, Site, SiteLike, as_site, ball, rect
from ._stats import (
    DYNAMICS,
    REFERENCE,
    EstimateWithCI,
    MannKendall,
    StreamId,
    bootstrap,
    derive,
    mann_kendall,
    map_trials,
    paired_difference,
    wilson,
)

logger = logging.getLogger(__name__)

MAX_WINDOW = 12
"""int: largest window whose subset law is tabulated exactly"""


def cone_margin(spec: DistSpec, T: float) -> int:
    """
    Margin around the initial set: ``ceil(c T) + 2`` where ``c`` is the
    0.999 quantile of the rate law, the reach of the space-time cone over
    ``[0, T]``.

    The region grows with the square of the margin; pass an explicit margin
    to trade accuracy for speed.
    """
    if T < 0:
        raise ValueError(f"{T=} must be nonnegative")
    fast = float(spec.quantile(np.array([0.999]))[0])
    margin = int(math.ceil(fast * T)) + 2
    logger.debug("cone margin %d for %s up to T=%g", margin, spec, T)
    return margin


def _initial(A: Iterable[SiteLike]) -> list[Site]:
    return sorted({as_site(a) for a in A})


def _describe(A: Sequence[Site]) -> str:
    if not A:
        return "{}"
    if len(A) > 6:
        return f"{len(A)} sites in {Rect.bounding(A)}"
    return "{" + ",".join(str(a) for a in A) + "}"


def slab_rect(k: int, height: int) -> Rect:
    """ The slab ``[-k, k] x [0, height]``, the finite cut of ``<-k, k+inf i>`` """
    if k < 0:
        raise ValueError(f"slab half-width {k=} must be nonnegative")
    return rect((-k, 0), (k, height))


@dataclass(frozen=True)
class SurvivalEstimate:
    initial: str
    T: float
    mode: str
    estimate: EstimateWithCI
    region: Optional[Rect] = None
    slab: Optional[int] = None

    @property
    def point(self) -> float:
        return self.estimate.point

    def as_row(self) -> dict:
        return {
            "initial": self.initial,
            "T": self.T,
            "mode": self.mode,
            "slab": "" if self.slab is None else self.slab,
            "region": "" if self.region is None else str(self.region),
            "trials": self.estimate.n,
            "estimate": self.estimate.point,
            "ci_lo": self.estimate.lo,
            "ci_hi": self.estimate.hi,
        }


def _survival_region(
    A: Sequence[Site],
    T: float,
    spec: DistSpec,
    slab: Optional[int],
    margin: Optional[int],
) -> Rect:
    margin = cone_margin(spec, T) if margin is None else margin
    box = Rect.bounding(A).expanded(margin)
    if slab is None:
        return box
    return slab_rect(slab, int(box.hi[1]))


def survival_times(
    mode: Mode,
    A: Iterable[SiteLike],
    T: float,
    trials: int,
    stream: StreamId,
    slab: Optional[int] = None,
    margin: Optional[int] = None,
    region: Optional[Rect] = None,
    parallelism: int = 1,
) -> Tuple[NDArray[np.float64], Rect]:
    """
    Extinction time of each trial, ``inf`` for runs alive at ``T``.

    Survival up to any ``t <= T`` is read off the same array, so estimates
    at several horizons share their realizations.
    """
    A = _initial(A)
    if not A:
        return np.zeros(trials), region or rect(0, 0)
    region = region or _survival_region(A, T, mode.spec, slab, margin)
    constraint = within_sites(region) if slab is not None else None

    def trial(s: StreamId) -> float:
        rep = sample_rep(mode.env_for(s), region, T, derive(s, DYNAMICS))
        ext = evolve(rep, A, constraint, T).extinction_time
        return math.inf if ext is None else ext

    times = np.array(map_trials(trial, trials, stream, parallelism))
    return times, region


def estimate_survival(
    mode: Mode,
    A: Iterable[SiteLike],
    T: float,
    trials: int,
    stream: StreamId,
    slab: Optional[int] = None,
    margin: Optional[int] = None,
    region: Optional[Rect] = None,
    parallelism: int = 1,
) -> SurvivalEstimate:
    """
    Estimate ``P(xi_T^A != {})``.

    Parameters
    ----------
    mode : Mode
        Annealed or quenched trials.

    A : iterable of site-like
        Initial infected set; the empty set gives exactly ``0``.

    slab : int, optional
        Run the process inside ``[-k, k] x [0, height]``.

    margin : int, optional
        Region margin around ``A``, default :func:`cone_margin`.

    region : Rect, optional
        Use exactly this region instead of the cone.
    """
    sites = _initial(A)
    times, used = survival_times(mode, sites, T, trials, stream, slab, margin,
                                 region, parallelism)
    alive = int((times > T).sum())
    est = SurvivalEstimate(_describe(sites), T, mode.label,
                           wilson(alive, trials), used if sites else None, slab)
    logger.info("survival of %s to T=%g: %d/%d", est.initial, T, alive, trials)
    return est


def survival_curve(
    mode: Mode,
    A: Iterable[SiteLike],
    T_grid: Sequence[float],
    trials: int,
    stream: StreamId,
    slab: Optional[int] = None,
    margin: Optional[int] = None,
    region: Optional[Rect] = None,
    parallelism: int = 1,
) -> list[SurvivalEstimate]:
    """
    Survival estimates along ``T_grid`` from shared realizations, hence
    nonincreasing in ``T``.
    """
    sites = _initial(A)
    T_max = max(T_grid)
    times, used = survival_times(mode, sites, T_max, trials, stream, slab,
                                 margin, region, parallelism)
    return [
        SurvivalEstimate(_describe(sites), T, mode.label,
                         wilson(int((times > T).sum()), trials),
                         used if sites else None, slab)
        for T in T_grid
    ]


def survival_sensitivity(
    mode: Mode,
    A: Iterable[SiteLike],
    T: float,
    pilot: int,
    stream: StreamId,
    slab: Optional[int] = None,
    margin: Optional[int] = None,
    parallelism: int = 1,
) -> Tuple[SurvivalEstimate, SurvivalEstimate]:
    """
    Estimates at ``T`` and ``2T`` on a pilot subsample, to show how much
    the finite horizon stands in for survival forever.
    """
    sites = _initial(A)
    region = _survival_region(sites, 2 * T, mode.spec, slab, margin) \
        if sites else None
    at_T, at_2T = survival_curve(mode, sites, [T, 2 * T], pilot, stream, slab,
                                 margin, region, parallelism)
    return at_T, at_2T


def seed_survival_trend(
    mode: Mode,
    r_grid: Sequence[int],
    T: float,
    trials: int,
    stream: StreamId,
    slab: Optional[int] = None,
    margin: Optional[int] = None,
    parallelism: int = 1,
) -> Tuple[list[SurvivalEstimate], NDArray[np.bool_]]:
    """
    Survival of the seeds ``[-r, r] x 0`` for every ``r`` on the same
    realizations.

    Returns
    -------
    estimates : list of SurvivalEstimate

    outcomes : ndarray of shape (trials, len(r_grid))
        Survival flags, nondecreasing along each row.
    """
    r_max = max(r_grid)
    widest = [Site(k, 0) for k in range(-r_max, r_max + 1)]
    region = _survival_region(widest, T, mode.spec, slab, margin)
    constraint = within_sites(region) if slab is not None else None

    def trial(s: StreamId) -> list[bool]:
        rep = sample_rep(mode.env_for(s), region, T, derive(s, DYNAMICS))
        return [evolve(rep, [Site(k, 0) for k in range(-r, r + 1)],
                       constraint, T).survived for r in r_grid]

    outcomes = np.array(map_trials(trial, trials, stream, parallelism),
                        dtype=bool).reshape(trials, len(r_grid))
    estimates = [
        SurvivalEstimate(f"[-{r},{r}]", T, mode.label,
                         wilson(int(outcomes[:, k].sum()), trials), region,
                         slab)
        for k, r in enumerate(r_grid)
    ]
    return estimates, outcomes


@dataclass(frozen=True)
class ConditionRow:
    """ One grid point of a window-hitting estimate """
    t: float
    hit: EstimateWithCI
    survive: Optional[EstimateWithCI] = None
    gap: Optional[EstimateWithCI] = None
    l: Optional[int] = None

    def as_row(self) -> dict:
        row = {"t": self.t}
        if self.l is not None:
            row["l"] = self.l
        row.update({"hit": self.hit.point, "hit_lo": self.hit.lo,
                    "hit_hi": self.hit.hi, "trials": self.hit.n})
        if self.survive is not None:
            row.update({"survive": self.survive.point,
                        "gap": self.gap.point,
                        "gap_lo": self.gap.lo,
                        "gap_hi": self.gap.hi})
        return row


def _hit_during(traj: Trajectory, x: Site, a: float, b: float) -> bool:
    return any(s <= b and e >= a for s, e in traj.intervals(x))


def condition_a(
    env: EnvLike,
    x: SiteLike,
    A: Iterable[SiteLike],
    t_grid: Sequence[float],
    T: float,
    trials: int,
    stream: StreamId,
    margin: Optional[int] = None,
    parallelism: int = 1,
) -> list[ConditionRow]:
    """
    Paired estimates of ``P(x infected during [t, T])`` and ``P(xi^A alive
    at T)`` for one fixed environment.

    The gap ``P(survive) - P(hit)`` carries a paired normal interval.
    """
    x = as_site(x)
    sites = _initial(A)
    if any(t > T for t in t_grid):
        raise ValueError(f"t_grid {list(t_grid)} must not exceed {T=}")
    m = cone_margin(env.spec, T) if margin is None else margin
    region = Rect.bounding(sites + [x]).expanded(m)

    def trial(s: StreamId) -> list:
        traj = evolve(sample_rep(env, region, T, derive(s, DYNAMICS)), sites,
                      until=T)
        return [traj.survived] + [_hit_during(traj, x, t, T) for t in t_grid]

    flags = np.array(map_trials(trial, trials, stream, parallelism),
                     dtype=bool).reshape(trials, len(t_grid) + 1)
    alive = flags[:, 0]
    survive = wilson(int(alive.sum()), trials)
    rows = []
    for k, t in enumerate(t_grid):
        hits = flags[:, k + 1]
        rows.append(ConditionRow(t, wilson(int(hits.sum()), trials), survive,
                                 paired_difference(alive, hits)))
    return rows


def condition_b(
    env: EnvLike,
    x: SiteLike,
    l: int,
    t_grid: Sequence[float],
    trials: int,
    stream: StreamId,
    margin: Optional[int] = None,
    region: Optional[Rect] = None,
    parallelism: int = 1,
) -> list[ConditionRow]:
    """
    Estimate ``P(xi_t^B intersects B)`` for the ball ``B = B_x(l)``.

    Passing the same ``region`` and ``stream`` for several ``l`` couples the
    runs, see :func:`condition_b_trend`.
    """
    x = as_site(x)
    B = ball(x, l)
    inside = B.sites()
    T = max(t_grid)
    if region is None:
        m = cone_margin(env.spec, T) if margin is None else margin
        region = B.expanded(m)
    if not T > 0:
        return [ConditionRow(t, wilson(trials, trials), l=l) for t in t_grid]

    def trial(s: StreamId) -> list[bool]:
        traj = evolve(sample_rep(env, region, T, derive(s, DYNAMICS)), inside,
                      until=T)
        return [bool(traj.infected_at(t) & frozenset(inside)) for t in t_grid]

    flags = np.array(map_trials(trial, trials, stream, parallelism),
                     dtype=bool).reshape(trials, len(t_grid))
    return [ConditionRow(t, wilson(int(flags[:, k].sum()), trials), l=l)
            for k, t in enumerate(t_grid)]


def condition_b_trend(
    env: EnvLike,
    x: SiteLike,
    l_grid: Sequence[int],
    t: float,
    trials: int,
    stream: StreamId,
    margin: Optional[int] = None,
    parallelism: int = 1,
) -> list[ConditionRow]:
    """
    :func:`condition_b` at one time for growing balls, on shared
    realizations so each trial's outcome is nondecreasing in ``l``.
    """
    m = cone_margin(env.spec, t) if margin is None else margin
    region = ball(as_site(x), max(l_grid)).expanded(m)
    return [condition_b(env, x, l, [t], trials, stream, region=region,
                        parallelism=parallelism)[0] for l in l_grid]


@dataclass(frozen=True)
class WindowLaw:
    """
    Empirical law of ``xi ∩ W`` over subsets of the window ``W``.

    ``frequencies`` maps a frozenset of sites to its relative frequency.
    """
    window: Rect
    frequencies: Dict[frozenset, float]
    samples: int
    time: float
    margin: int

    @property
    def empty_mass(self) -> float:
        return self.frequencies.get(frozenset(), 0.0)

    def as_rows(self) -> list[dict]:
        return [{"subset": "{" + ",".join(str(s) for s in sorted(k)) + "}",
                 "frequency": v}
                for k, v in sorted(self.frequencies.items(),
                                   key=lambda kv: (len(kv[0]), sorted(kv[0])))]


def _encode(sites: frozenset, order: Dict[Site, int]) -> int:
    return sum(1 << order[s] for s in sites if s in order)


def _window_codes(
    env: EnvLike,
    W: Rect,
    burn: float,
    trials: int,
    stream: StreamId,
    margin: int,
    parallelism: int,
) -> NDArray[np.int64]:
    window = W.sites()
    order = {s: k for k, s in enumerate(window)}
    if burn == 0:
        return np.full(trials, (1 << len(window)) - 1, dtype=np.int64)
    region = W.expanded(margin)
    everything = region.sites()

    def trial(s: StreamId) -> int:
        rep = sample_rep(env, region, burn, derive(s, DYNAMICS))
        return _encode(evolve(rep, everything, until=burn).final, order)

    return np.array(map_trials(trial, trials, stream, parallelism),
                    dtype=np.int64)


def _law(codes: NDArray[np.int64], window: Sequence[Site]) -> Dict[frozenset, float]:
    values, counts = np.unique(codes, return_counts=True)
    return {
        frozenset(s for k, s in enumerate(window) if int(v) >> k & 1):
            float(c) / codes.size
        for v, c in zip(values, counts)
    }


def upper_invariant_sample(
    env: EnvLike,
    W: Rect,
    burn: float,
    trials: int,
    stream: StreamId,
    margin: int = 10,
    parallelism: int = 1,
) -> WindowLaw:
    """
    Sample ``xi_burn ∩ W`` started from every site of ``W`` grown by
    ``margin`` (the finite stand-in for the whole half-lattice).

    ``burn = 0`` gives the point mass on the full window.
    """
    if burn < 0:
        raise ValueError(f"{burn=} must be nonnegative")
    codes = _window_codes(env, W, burn, trials, stream, margin, parallelism)
    law = WindowLaw(W, _law(codes, W.sites()), trials, burn, margin)
    logger.info("upper invariant sample on %s after burn %g: mass %.4g on {}",
                W, burn, law.empty_mass)
    return law


@dataclass(frozen=True)
class MixtureDistance:
    """
    Total-variation distance between the law of ``xi_t^A ∩ W`` and
    ``p nu|W + (1-p) delta_{}``.
    """
    t: float
    distance: float
    estimate: EstimateWithCI
    p_hat: float

    def as_row(self) -> dict:
        return {
            "t": self.t,
            "distance": self.distance,
            "ci_lo": self.estimate.lo,
            "ci_hi": self.estimate.hi,
            "p_hat": self.p_hat,
        }


@dataclass(frozen=True)
class ConvergenceReport:
    distances: Tuple[MixtureDistance, ...]
    trend: MannKendall
    window: Rect
    burn: float
    margin: int
    survival_horizon: float

    @property
    def decreasing(self) -> bool:
        """ No upward trend and the last distance below the first """
        d = [m.distance for m in self.distances]
        return self.trend.nonincreasing and d[-1] <= d[0]


def _tv(law: NDArray[np.float64], nu: NDArray[np.float64], p: float) -> float:
    mixture = p * nu
    mixture[0] += 1.0 - p
    return float(0.5 * np.abs(law - mixture).sum())


def cc_distance(
    env: EnvLike,
    A: Iterable[SiteLike],
    t_grid: Sequence[float],
    W: Rect,
    burn: float,
    trials: int,
    stream: StreamId,
    margin: int = 10,
    survival_horizon: Optional[float] = None,
    n_resamples: int = 200,
    parallelism: int = 1,
) -> ConvergenceReport:
    """
    Distance of ``xi_t^A ∩ W`` to the complete-convergence mixture along
    ``t_grid``.

    ``nu`` is sampled by :func:`upper_invariant_sample` on the ``REFERENCE``
    substream; ``p`` is the fraction of runs alive at
    ``survival_horizon`` (default the last grid time). Intervals are
    percentile bootstraps over both samples.

    Raises
    ------
    WindowTooLargeError
        If ``W`` has more than 12 sites.
    """
    window = W.sites()
    if len(window) > MAX_WINDOW:
        raise WindowTooLargeError(len(window), MAX_WINDOW)
    sites = _initial(A)
    order = {s: k for k, s in enumerate(window)}
    atoms = 1 << len(window)
    horizon = max(max(t_grid), survival_horizon or 0.0)
    s_hor = survival_horizon or max(t_grid)
    nu_codes = _window_codes(env, W, burn, trials, derive(stream, REFERENCE),
                             margin, parallelism)
    region = Rect.bounding(sites + window).expanded(margin) if sites else \
        W.expanded(margin)

    def trial(s: StreamId) -> list[int]:
        rep = sample_rep(env, region, horizon, derive(s, DYNAMICS))
        traj = evolve(rep, sites, until=horizon)
        ext = traj.extinction_time
        alive = int(ext is None or ext > s_hor)
        return [alive] + [_encode(traj.infected_at(t), order) for t in t_grid]

    rows = np.array(map_trials(trial, trials, derive(stream, DYNAMICS),
                               parallelism), dtype=np.int64)
    alive = rows[:, 0]

    def distance(sample: NDArray, nu_sample: NDArray) -> float:
        law = np.bincount(sample[:, 1], minlength=atoms) / sample.shape[0]
        nu = np.bincount(nu_sample, minlength=atoms) / nu_sample.size
        return _tv(law, nu.astype(np.float64), float(sample[:, 0].mean()))

    out = []
    for k, t in enumerate(t_grid):
        sample = np.column_stack([alive, rows[:, k + 1]])
        est = bootstrap([sample, nu_codes], distance,
                        derive(derive(stream, 7), k), n_resamples)
        out.append(MixtureDistance(t, est.point, est, float(alive.mean())))
    trend = mann_kendall([m.distance for m in out])
    logger.info("complete-convergence distances %s, Mann-Kendall S=%d",
                [round(m.distance, 4) for m in out], trend.s)
    return ConvergenceReport(tuple(out), trend, W, burn, margin, s_hor)


def richardson_evolve(
    rep: GraphicalRep,
    A: Iterable[SiteLike],
    until: Optional[float] = None,
    constraint: Optional[Constraint] = None,
) -> Trajectory:
    """
    The growth process on ``rep`` with every recovery suppressed; its
    infected set contains the contact process's at all times.
    """
    return evolve(rep, A, constraint, until, ignore_deaths=True)


def richardson_front(
    rep: GraphicalRep,
    A: Iterable[SiteLike],
    times: Sequence[float],
) -> NDArray[np.float64]:
    """ Right-most infected ``Re`` of the growth process at each time """
    sites = _initial(A)
    if not sites:
        raise ValueError("the growth process needs a nonempty initial set")
    traj = richardson_evolve(rep, sites, max(times))
    re_ = np.array([s.re for s in traj.sites], dtype=np.float64)
    front = np.maximum.accumulate(
        np.concatenate([[max(s.re for s in sites)], re_[traj.where]]))
    stop = np.searchsorted(traj.times, np.asarray(times, dtype=float),
                           side="right")
    return front[stop]


@dataclass(frozen=True)
class GrowthEstimate:
    times: NDArray[np.float64]
    mean_front: NDArray[np.float64]
    slope: float
    slope_se: float


def richardson_growth(
    mode: Mode,
    times: Sequence[float],
    trials: int,
    stream: StreamId,
    half_width: int,
    height: int = 4,
    parallelism: int = 1,
) -> GrowthEstimate:
    """
    Mean front of the growth process from the origin and its linear slope,
    on ``[-half_width, half_width] x [0, height]``.
    """
    region = rect((-half_width, 0), (half_width, height))
    T = max(times)

    def trial(s: StreamId) -> NDArray[np.float64]:
        rep = sample_rep(mode.env_for(s), region, T, derive(s, DYNAMICS))
        return richardson_front(rep, [Site(0, 0)], times)

    fronts = np.array(map_trials(trial, trials, stream, parallelism))
    t = np.asarray(times, dtype=np.float64)
    fit = scipy.stats.linregress(np.repeat(t[None, :], trials, 0).ravel(),
                                 fronts.ravel())
    return GrowthEstimate(t, fronts.mean(axis=0), float(fit.slope),
                          float(fit.stderr))


def coupling_check(
    rep: GraphicalRep,
    A1: Iterable[SiteLike],
    A2: Iterable[SiteLike],
    until: Optional[float] = None,
    constraint: Optional[Constraint] = None,
) -> bool:
    """
    Whether ``xi^{A1} ⊆ xi^{A2}`` at every event time of either run.

    Raises
    ------
    PreconditionError
        If ``A1`` is not a subset of ``A2``.
    """
    s1, s2 = set(_initial(A1)), set(_initial(A2))
    if not s1 <= s2:
        raise PreconditionError(f"{sorted(map(str, s1 - s2))} not in A2")
    t1 = evolve(rep, s1, constraint, until)
    t2 = evolve(rep, s2, constraint, until)
    events = sorted(
        [(t, 0, i, c) for t, i, c in zip(t1.times.tolist(), t1.where.tolist(),
                                         t1.codes.tolist())]
        + [(t, 1, i, c) for t, i, c in zip(t2.times.tolist(),
                                           t2.where.tolist(),
                                           t2.codes.tolist())])
    index = rep.index
    state = ({index[s] for s in s1}, {index[s] for s in s2})
    k = 0
    while k < len(events):
        t = events[k][0]
        while k < len(events) and events[k][0] == t:
            _, which, i, c = events[k]
            (state[which].add if c > 0 else state[which].discard)(i)
            k += 1
        if not state[0] <= state[1]:
            logger.error("coupling violated at t=%g", t)
            return False
    return True


@dataclass(frozen=True)
class IncreasingEvent:
    """
    An event of the graphical representation, built from joining and
    boundary-set primitives with ``&`` and ``|``.

    ``~event`` builds the complement, which is accepted by :meth:`holds`
    but rejected by :func:`fkg_covariance`.
    """
    kind: Literal["joined", "phi", "and", "or", "not", "custom"]
    region: Rect
    horizon: float
    label: str
    test: Optional[Callable[[GraphicalRep], bool]] = None
    parts: Tuple["IncreasingEvent", ...] = ()

    def holds(self, rep: GraphicalRep) -> bool:
        if self.kind == "and":
            return all(p.holds(rep) for p in self.parts)
        if self.kind == "or":
            return any(p.holds(rep) for p in self.parts)
        if self.kind == "not":
            return not self.parts[0].holds(rep)
        return bool(self.test(rep))

    def _combine(self, other: "IncreasingEvent", kind: str) -> "IncreasingEvent":
        return IncreasingEvent(
            kind,  # type: ignore[arg-type]
            Rect.bounding([self.region.lo, self.region.hi, other.region.lo,
                           other.region.hi]),
            max(self.horizon, other.horizon),
            f"({self.label} {'&' if kind == 'and' else '|'} {other.label})",
            parts=(self, other),
        )

    def __and__(self, other: "IncreasingEvent") -> "IncreasingEvent":
        return self._combine(other, "and")

    def __or__(self, other: "IncreasingEvent") -> "IncreasingEvent":
        return self._combine(other, "or")

    def __invert__(self) -> "IncreasingEvent":
        return IncreasingEvent("not", self.region, self.horizon,
                               f"~{self.label}", parts=(self,))

    @property
    def increasing(self) -> bool:
        if self.kind in ("joined", "phi"):
            return True
        if self.kind in ("and", "or"):
            return all(p.increasing for p in self.parts)
        return False

    def __str__(self) -> str:
        return self.label


def joined_event(
    source: SpaceTimeSet,
    target: SpaceTimeSet,
    region: Rect,
    horizon: float,
    constraint: Optional[Constraint] = None,
    label: str = "joined",
) -> IncreasingEvent:
    """ ``source`` joined to ``target`` (within ``constraint``) """
    return IncreasingEvent(
        "joined", region, horizon, label,
        lambda rep: bool(is_joined(rep, source, target, constraint)))


def phi_event(
    spec: BoxSpec,
    side: Side,
    N: int,
    origin: SiteLike = 0,
) -> IncreasingEvent:
    """ ``|Phi^side| > N`` for the box of ``spec`` at ``origin`` """
    if side not in SIDES:
        raise ValueError(f"{side=}, but it must be one of {SIDES}")
    return IncreasingEvent(
        "phi", spec.box(origin), spec.horizon, f"|Phi^{side}|>{N}@{origin}",
        lambda rep: len(phi(rep, spec, origin)[side]) > N)


def custom_event(
    test: Callable[[GraphicalRep], bool],
    region: Rect,
    horizon: float,
    label: str = "custom",
) -> IncreasingEvent:
    """ An arbitrary event; monotonicity is not verified """
    return IncreasingEvent("custom", region, horizon, label, test)


@dataclass(frozen=True)
class CovarianceEstimate:
    covariance: EstimateWithCI
    p_a: float
    p_b: float
    p_ab: float

    @property
    def consistent(self) -> bool:
        """ Not significantly negative: estimate ``>= -3 sigma`` """
        return self.covariance.point >= -3 * self.covariance.sigma


def fkg_covariance(
    event_a: IncreasingEvent,
    event_b: IncreasingEvent,
    mode: Mode,
    trials: int,
    stream: StreamId,
    parallelism: int = 1,
    confidence: float = 0.95,
) -> CovarianceEstimate:
    """
    Estimate ``P(A ∩ B) - P(A) P(B)`` with a delta-method interval.

    Both events are evaluated on one rep per trial covering their union.

    Raises
    ------
    NotIncreasingError
        If an event is built from a complement or a custom test.
    """
    for ev in (event_a, event_b):
        if not ev.increasing:
            raise NotIncreasingError(ev)
    both = event_a | event_b
    region, horizon = both.region, both.horizon

    def trial(s: StreamId) -> Tuple[bool, bool]:
        rep = sample_rep(mode.env_for(s), region, horizon, derive(s, DYNAMICS))
        return event_a.holds(rep), event_b.holds(rep)

    flags = np.array(map_trials(trial, trials, stream, parallelism),
                     dtype=np.float64).reshape(trials, 2)
    a, b = flags[:, 0], flags[:, 1]
    p_a, p_b, p_ab = float(a.mean()), float(b.mean()), float((a * b).mean())
    cov = p_ab - p_a * p_b
    influence = (a - p_a) * (b - p_b) - cov
    se = float(influence.std(ddof=1) / np.sqrt(trials)) if trials > 1 else 0.0
    z = float(scipy.stats.norm.ppf(0.5 + confidence / 2))
    est = EstimateWithCI(cov, cov - z * se, cov + z * se, trials, "normal")
    logger.info("covariance of %s and %s: %.4g ± %.2g", event_a, event_b, cov,
                z * se)
    return CovarianceEstimate(est, p_a, p_b, p_ab)
