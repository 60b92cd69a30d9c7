"""
Dynamic renormalization.

A seed in one cell is carried to two seeds in a neighbouring cell through a
chain of S-boxes and L-boxes; the cells then form an oriented site
percolation explored with priority to the left neighbour. The G and L
algorithms compose these cell-to-cell times into longer routes.

Geometry is planned in a canonical frame ``(p, q)`` where the route heads to
larger ``q`` and zig-zags in ``p``; a :class:`Frame` maps it onto the
lattice for each axis and orientation.
"""
import logging
import math
from dataclasses import dataclass, replace
from typing import Callable, Dict, Literal, Optional, Sequence, Tuple, Union

import numpy as np

from ._blocks import first_segment
from ._environment import EnvLike
from ._errors import GeomError, PreconditionError
from ._graphical import sample_rep, within_edges
from ._histogram import Hist1d
from ._lattice import (
    EdgeRegion,
    Orientation,
    Rect,
    Seed,
    Site,
    SiteLike,
    _components,
    as_site,
    edge_region,
    parse_corner,
)
from ._stats import EstimateWithCI, StreamId, derive, derive_path, map_trials, wilson

logger = logging.getLogger(__name__)

Axis = Literal["up", "right"]
Orient = Tuple[int, int]
Cell = Tuple[int, int]

ORIENTATIONS: Tuple[Orient, ...] = ((1, 1), (1, -1), (-1, 1), (-1, -1))
AXIS_CODE = {"up": 0, "right": 1}


def as_orientation(o: Union[str, complex, Orient]) -> Orient:
    """ Read an orientation ``±1±i`` given as text, complex or sign pair """
    a, b = parse_corner(o) if isinstance(o, str) else _components(o)
    out = (int(a), int(b))
    if out not in ORIENTATIONS:
        raise ValueError(f"orientation {o!r}, but it must be one of ±1±i")
    return out


@dataclass(frozen=True)
class Geometry:
    """
    Box and cell sizes of a renormalization.

    Parameters
    ----------
    h, r : int
        Box height and seed radius.

    M : int
        Cell spacing in units of ``h`` and the box budget of one cell leg.

    kappa : float
        Slack on the box widths: S-boxes need ``4h+4r < 4.0001 h kappa``,
        L-boxes ``8h+4r < 8.0001 h kappa``.

    cell : int, optional
        Cell side, default ``50h``. Turn lines sit at 30% and 70% of it.

    budget : float, optional
        Largest per-box horizon, default ``20h / min(1, mean rate)``.

    Raises
    ------
    GeomError
        If the sizes admit no valid route.
    """
    h: int
    r: int
    M: int = 64
    kappa: float = 1.25
    cell: Optional[int] = None
    budget: Optional[float] = None

    def __post_init__(self) -> None:
        if self.h < 1 or self.r < 0:
            raise GeomError(f"h={self.h}, r={self.r}: need h >= 1, r >= 0")
        if self.h < 2 * self.r:
            raise GeomError(f"a side seed of radius {self.r} does not fit "
                            f"a box of height {self.h}")
        if not self.w_short < 4.0001 * self.h * self.kappa:
            raise GeomError(f"S-box width {self.w_short} exceeds "
                            f"4.0001*h*kappa={4.0001 * self.h * self.kappa:g}")
        if not self.w_long < 8.0001 * self.h * self.kappa:
            raise GeomError(f"L-box width {self.w_long} exceeds "
                            f"8.0001*h*kappa={8.0001 * self.h * self.kappa:g}")
        if self.side < 2 * (self.w_long + self.margin) + 1:
            raise GeomError(f"cell side {self.side} leaves no room for the "
                            "two-seed box")
        if self.spacing < self.side:
            raise GeomError(f"M*h={self.spacing} is smaller than the cell "
                            f"side {self.side}")

    @property
    def w_short(self) -> int:
        return 4 * self.h + 4 * self.r

    @property
    def w_long(self) -> int:
        return 8 * self.h + 4 * self.r

    @property
    def side(self) -> int:
        return 50 * self.h if self.cell is None else self.cell

    @property
    def spacing(self) -> int:
        return self.M * self.h

    @property
    def margin(self) -> int:
        """ Room a seed of the two-seed box needs to keep zig-zagging """
        return self.w_short + 6 * self.h + 1

    def horizon_budget(self, mean_rate: float) -> float:
        if self.budget is not None:
            return self.budget
        scale = min(1.0, mean_rate)
        return 20.0 * self.h / scale if scale > 0 else 20.0 * self.h


@dataclass(frozen=True)
class Frame:
    axis: Axis
    sx: int
    sy: int

    def to_real(self, p: int, q: int) -> Tuple[int, int]:
        if self.axis == "up":
            return p, self.sy * q
        return self.sx * q, p

    def to_canon(self, re_: float, im: float) -> Tuple[int, int]:
        if self.axis == "up":
            return int(re_), int(self.sy * im)
        return int(im), int(self.sx * re_)

    def bounds(self, box: Rect) -> Tuple[int, int, int, int]:
        """ ``(p_lo, p_hi, q_lo, q_hi)`` of a rectangle """
        p1, q1 = self.to_canon(*box.lo)
        p2, q2 = self.to_canon(*box.hi)
        return min(p1, p2), max(p1, p2), min(q1, q2), max(q1, q2)

    def real_orientation(self, along_p: bool) -> Orientation:
        return "horizontal" if along_p == (self.axis == "up") else "vertical"


def grid_anchor(x: SiteLike, geom: Geometry) -> Tuple[int, int]:
    """ Lower-left corner of the cell holding ``x`` """
    x = as_site(x)
    return geom.side * (x.re // geom.side), geom.side * (x.im // geom.side)


def cell_rect(
    anchor: Tuple[int, int],
    cell: Cell,
    orientation: Orient,
    geom: Geometry,
) -> Rect:
    """ Cell ``(m, k)`` of the grid spreading in ``orientation``; may lie
    partly below the half-space """
    sx, sy = orientation
    lo = (anchor[0] + sx * cell[0] * geom.spacing,
          anchor[1] + sy * cell[1] * geom.spacing)
    return Rect((float(lo[0]), float(lo[1])),
                (float(lo[0] + geom.side), float(lo[1] + geom.side)))


def _step(cell: Cell, axis: Axis) -> Cell:
    return (cell[0] + 1, cell[1]) if axis == "right" else (cell[0], cell[1] + 1)


@dataclass(frozen=True)
class PlacedBox:
    """
    One box of a route with its target lines and nominal produced seeds.

    A two-seed box has two lines; ``lines[k]`` produces ``targets[k]``.
    """
    kind: Literal["S", "L", "fork"]
    region: EdgeRegion
    lines: Tuple[Tuple[Site, ...], ...]
    targets: Tuple[Seed, ...]

    @property
    def rect(self) -> Rect:
        return self.region.rect

    def __str__(self) -> str:
        return f"{self.kind}{self.region}"


@dataclass(frozen=True)
class Leg:
    """
    The boxes carrying a seed from cell ``source`` to the next cell along
    ``axis``. ``outward`` is the zig-zag direction in which each produced
    seed leaves the two-seed box.
    """
    source: Cell
    axis: Axis
    start: Seed
    boxes: Tuple[PlacedBox, ...]
    outward: Tuple[int, int]

    @property
    def target(self) -> Cell:
        return _step(self.source, self.axis)

    @property
    def y1(self) -> Seed:
        return self.boxes[-1].targets[0]

    @property
    def y2(self) -> Seed:
        return self.boxes[-1].targets[1]


class _LegBuilder:
    def __init__(self, frame: Frame, geom: Geometry) -> None:
        self.frame = frame
        self.geom = geom
        self.boxes: list = []

    def _line(self, pts: Sequence[Tuple[int, int]]) -> Tuple[Site, ...]:
        return tuple(Site(*self.frame.to_real(p, q)) for p, q in pts)

    def _seed(self, p: int, q: int, along_p: bool) -> Seed:
        return Seed(Site(*self.frame.to_real(p, q)), self.geom.r,
                    self.frame.real_orientation(along_p))

    def add(
        self,
        kind: Literal["S", "L", "fork"],
        u: Tuple[int, int],
        v: Tuple[int, int],
        lines: Sequence[Sequence[Tuple[int, int]]],
        targets: Sequence[Tuple[int, int, bool]],
    ) -> None:
        a, b = self.frame.to_real(*u), self.frame.to_real(*v)
        if min(a[1], b[1]) < 0:
            raise GeomError(f"box {a}:{b} leaves the half-space")
        self.boxes.append(PlacedBox(
            kind,
            edge_region(Site(*a), Site(*b)),
            tuple(self._line(line) for line in lines),
            tuple(self._seed(*t) for t in targets),
        ))


def plan_leg(
    start: Seed,
    source: Cell,
    axis: Axis,
    geom: Geometry,
    orientation: Orient,
    anchor: Tuple[int, int],
    dx: Optional[int] = None,
) -> Leg:
    """
    Place the boxes that carry ``start`` into the neighbouring cell.

    S-boxes alternate between the two seed orientations, heading
    diagonally; when a side seed passes a turn line an L-box pair reverses
    the zig-zag. Once a bottom seed sits at least ``5h`` inside the target
    cell with room on both sides, a double-ended L-box emits the two seeds.

    Parameters
    ----------
    dx : int, optional
        Initial zig-zag direction in the canonical frame; defaults to the
        side of the cell centre.

    Raises
    ------
    GeomError
        If a box leaves the half-space or the cell column, the route
        overshoots the target cell, or more than ``M`` boxes are needed.
    """
    frame = Frame(axis, *orientation)
    h, r = geom.h, geom.r
    back = 4 * h + 1
    src = cell_rect(anchor, source, orientation, geom)
    dst = cell_rect(anchor, _step(source, axis), orientation, geom)
    if src.lo[1] < 0 or dst.lo[1] < 0:
        raise GeomError(f"cells {source} -> {_step(source, axis)} leave the "
                        "half-space")
    p_lo, p_hi, _, _ = frame.bounds(src)
    _, _, q_lo, q_hi = frame.bounds(dst)
    turn_lo = p_lo + 3 * geom.side // 10
    turn_hi = p_lo + 7 * geom.side // 10
    fork_lo = p_lo + geom.w_long + geom.margin
    fork_hi = p_hi - geom.w_long - geom.margin

    cp, cq = frame.to_canon(start.center.re, start.center.im)
    along_p = (start.orientation == "horizontal") == (axis == "up")
    if dx is None:
        dx = 1 if 2 * cp <= p_lo + p_hi else -1
    build = _LegBuilder(frame, geom)
    long_next = False
    while True:
        if len(build.boxes) >= geom.M:
            raise GeomError(f"leg from {start.center} needs more than "
                            f"M={geom.M} boxes")
        if along_p:
            fits = fork_lo <= cp <= fork_hi and cq + h <= q_hi
            if cq >= q_lo + 5 * h and fits:
                wl = geom.w_long
                west = [(cp - wl, q) for q in range(cq, cq + h + 1)]
                east = [(cp + wl, q) for q in range(cq, cq + h + 1)]
                mid = cq + h // 2
                # y1 continues along the grid's "up" axis, y2 along "right"
                east_first = (frame.sy > 0) if axis == "right" else (frame.sx < 0)
                ends = [(east, cp + wl, 1), (west, cp - wl, -1)]
                if not east_first:
                    ends.reverse()
                build.add("fork", (cp - wl, cq), (cp + wl, cq + h),
                          [e[0] for e in ends],
                          [(e[1], mid, False) for e in ends])
                outward = (ends[0][2], ends[1][2])
                break
            if cq + h > q_hi:
                raise GeomError(f"leg from {start.center} overshoots cell "
                                f"{_step(source, axis)}")
            w = geom.w_long if long_next else geom.w_short
            tp = cp + dx * w
            build.add("L" if long_next else "S", (cp - dx * back, cq),
                      (tp, cq + h), [[(tp, q) for q in range(cq, cq + h + 1)]],
                      [(tp, cq + h // 2, False)])
            cp, cq, along_p, long_next = tp, cq + h // 2, False, False
        else:
            turn = (dx > 0 and cp >= turn_hi) or (dx < 0 and cp <= turn_lo)
            w = geom.w_long if turn else geom.w_short
            tq = cq + w
            span = sorted((cp, cp + dx * h))
            build.add("L" if turn else "S", (cp, cq - back),
                      (cp + dx * h, tq),
                      [[(p, tq) for p in range(span[0], span[1] + 1)]],
                      [(cp + dx * (h // 2), tq, True)])
            cp, cq, along_p = cp + dx * (h // 2), tq, True
            if turn:
                dx, long_next = -dx, True

    for box in build.boxes:
        b_lo, b_hi, _, _ = frame.bounds(box.rect)
        if b_lo < p_lo or b_hi > p_hi:
            raise GeomError(f"box {box} leaves the cell column [{p_lo}, {p_hi}]")
    check_disjoint(build.boxes)
    return Leg(source, axis, start, tuple(build.boxes), outward)


def check_disjoint(boxes: Sequence[PlacedBox]) -> None:
    """
    Raises
    ------
    GeomError
        If two boxes share an edge.
    """
    for i, a in enumerate(boxes):
        for b in boxes[i + 1:]:
            if a.rect.intersect(b.rect) is None:
                continue
            shared = a.region.edges & b.region.edges
            if shared:
                raise GeomError(f"boxes {a} and {b} share the edge "
                                f"{min(shared)}")


@dataclass(frozen=True)
class RoutePlan:
    """
    Deterministic route from ``origin`` to the cell ``(n, n)``: ``n`` legs
    up, then ``n`` legs right, the route taken when every cell opens.
    """
    origin: Seed
    orientation: Orient
    n: int
    geom: Geometry
    legs: Tuple[Leg, ...]

    @property
    def anchor(self) -> Tuple[int, int]:
        return grid_anchor(self.origin.center, self.geom)

    @property
    def boxes(self) -> Tuple[PlacedBox, ...]:
        return tuple(b for leg in self.legs for b in leg.boxes)

    def cell_rect(self, cell: Cell) -> Rect:
        return cell_rect(self.anchor, cell, self.orientation, self.geom)

    @property
    def target_cell(self) -> Rect:
        return self.cell_rect((self.n, self.n))

    def as_dict(self) -> dict:
        """ Structured dump of the boxes, leg by leg """
        return {
            "origin": str(self.origin.center),
            "orientation": list(self.orientation),
            "n": self.n,
            "legs": [
                {
                    "source": list(leg.source),
                    "axis": leg.axis,
                    "boxes": [
                        {"kind": b.kind, "region": str(b.region),
                         "targets": [str(t.center) for t in b.targets]}
                        for b in leg.boxes
                    ],
                }
                for leg in self.legs
            ],
        }


def _next_start(prev: "Leg | RouteOutcome", axis: Axis) -> Tuple[Seed, Optional[int]]:
    seed = prev.y1 if axis == "up" else prev.y2
    same = prev.axis == axis
    return seed, (prev.outward[0 if axis == "up" else 1] if same else None)


def route_plan(
    origin: Seed,
    o: Union[str, complex, Orient],
    n: int,
    geom: Geometry,
) -> RoutePlan:
    """
    Plan the all-open route of an ``n x n`` cell grid.

    Raises
    ------
    GeomError
        If the origin lies below ``Im = 10h``, or any leg is invalid, or two
        boxes anywhere on the route share an edge.

    Examples
    --------
    ::

        geom = Geometry(h=4, r=1, M=64)
        plan = route_plan(Seed(Site(100, 60), 1), "1+i", 1, geom)
        len(plan.legs)       # 2: one up, one right
    """
    if n < 1:
        raise ValueError(f"{n=}, but a route crosses at least one cell")
    orientation = as_orientation(o)
    if origin.center.im < 10 * geom.h:
        raise GeomError(f"origin {origin.center} lies below Im = 10h")
    anchor = grid_anchor(origin.center, geom)
    legs: list = []
    cell: Cell = (0, 0)
    for axis in ["up"] * n + ["right"] * n:
        if legs:
            start, dx = _next_start(legs[-1], axis)
        else:
            start, dx = origin, None
        legs.append(plan_leg(start, cell, axis, geom, orientation, anchor, dx))
        cell = _step(cell, axis)
    check_disjoint([b for leg in legs for b in leg.boxes])
    logger.debug("route plan with %d boxes over %d legs",
                 sum(len(leg.boxes) for leg in legs), len(legs))
    return RoutePlan(origin, orientation, n, geom, tuple(legs))


@dataclass(frozen=True)
class RouteOutcome:
    """
    Result of running one leg (or a chain of legs).

    On success ``y1`` and ``y2`` are the produced seeds, their ``time``
    being the route times ``F1`` and ``F2``.
    """
    success: bool
    y1: Optional[Seed] = None
    y2: Optional[Seed] = None
    boxes: int = 0
    reason: str = ""
    failed_box: Optional[int] = None
    marks: int = 0
    axis: Optional[Axis] = None
    outward: Tuple[int, int] = (0, 0)

    def __bool__(self) -> bool:
        return self.success

    @property
    def t1(self) -> Optional[float]:
        return self.y1.time if self.y1 is not None else None

    @property
    def t2(self) -> Optional[float]:
        return self.y2.time if self.y2 is not None else None


def _line_orientation(line: Sequence[Site]) -> Orientation:
    return "vertical" if line[0].re == line[-1].re else "horizontal"


def run_box(
    env: EnvLike,
    stream: StreamId,
    box: PlacedBox,
    seed: Seed,
    geom: Geometry,
) -> Tuple[Optional[Tuple[Seed, ...]], str, int]:
    """
    Run one box from ``seed`` until every target line holds a seed.

    The box's marks are sampled on ``[seed.time, seed.time + H]``; ``H``
    doubles from 1 up to the horizon budget, each extension keeping the
    marks already drawn.

    Returns
    -------
    seeds : tuple of Seed or None
        Produced seeds in line order.

    reason : str
        ``""``, ``"extinct"`` or ``"budget"``.

    marks : int
        Marks of the last sampled window.
    """
    t0 = seed.time
    budget = geom.horizon_budget(env.spec.mean)
    H = min(1.0, budget)
    sources = [(s, t0, t0) for s in seed.sites]
    constraint = within_edges(box.region)
    width = 2 * geom.r + 1
    while True:
        rep = sample_rep(env, box.rect, t0 + H, stream, start=t0)
        search = first_segment(rep, sources, constraint, box.lines, width,
                               t0 + H, stop_on=len(box.lines))
        if len(search.found) == len(box.lines):
            out: list = [None] * len(box.lines)
            for k, segment, t in search.found:
                out[k] = Seed(segment[geom.r], geom.r,
                              _line_orientation(box.lines[k]), t)
            return tuple(out), "", rep.n_marks
        if search.extinct:
            return None, "extinct", rep.n_marks
        if H >= budget:
            return None, "budget", rep.n_marks
        H = min(2 * H, budget)


def run_leg(
    env: EnvLike,
    stream: StreamId,
    leg: Leg,
    geom: Geometry,
    start: Optional[Seed] = None,
) -> RouteOutcome:
    """
    Run the boxes of a leg in order; box ``j`` draws from
    ``derive(stream, j)``.
    """
    seed = start or leg.start
    marks = 0
    for j, box in enumerate(leg.boxes):
        seeds, reason, used = run_box(env, derive(stream, j), box, seed, geom)
        marks += used
        if seeds is None:
            logger.debug("leg %s from %s failed at box %d (%s)",
                         leg.axis, leg.source, j, reason)
            return RouteOutcome(False, boxes=j + 1, reason=reason,
                                failed_box=j, marks=marks, axis=leg.axis)
        seed = seeds[0]
    return RouteOutcome(True, seeds[0], seeds[1], len(leg.boxes), "", None,
                        marks, leg.axis, leg.outward)


def _leg_stream(stream: StreamId, source: Cell, axis: Axis) -> StreamId:
    return derive_path(stream, source[0], source[1], AXIS_CODE[axis])


def run_route(env: EnvLike, stream: StreamId, plan: RoutePlan) -> RouteOutcome:
    """
    Execute a plan leg by leg on freshly sampled box windows.

    Each leg starts from the seed the previous leg actually produced and
    draws from a stream keyed by its source cell and axis, the same stream
    :func:`renorm_grid` uses for that cell step.
    """
    seed = plan.origin
    prev: Optional[RouteOutcome] = None
    boxes = marks = 0
    for leg in plan.legs:
        if prev is not None:
            seed, _ = _next_start(prev, leg.axis)
        out = run_leg(env, _leg_stream(stream, leg.source, leg.axis), leg,
                      plan.geom, seed)
        marks += out.marks
        if not out:
            return replace(out, boxes=boxes + out.boxes,
                           failed_box=boxes + (out.failed_box or 0),
                           marks=marks)
        boxes += out.boxes
        prev = out
    logger.info("route to cell (%d, %d) done: F1=%.4g F2=%.4g",
                plan.n, plan.n, prev.t1, prev.t2)
    return replace(prev, boxes=boxes, marks=marks)


Attempt = Callable[[Cell, Cell, Axis, object], object]


@dataclass(frozen=True)
class GridWalk:
    """
    Exploration of the square ``0 <= m, k <= n`` of an oriented site
    percolation.

    A cell opens if its left neighbour is open and its attempt succeeds;
    or, when the left neighbour is closed or absent, if the cell below is
    open and its attempt succeeds.
    """
    n: int
    status: Dict[Cell, str]
    states: Dict[Cell, object]
    parents: Dict[Cell, Cell]
    attempts: Dict[Tuple[Cell, Cell], object]

    @property
    def route(self) -> Tuple[Cell, ...]:
        """ The priority route to ``(n, n)``, empty if that cell is closed """
        cell = (self.n, self.n)
        if self.status.get(cell) != "open":
            return ()
        out = [cell]
        while cell != (0, 0):
            cell = self.parents[cell]
            out.append(cell)
        return tuple(reversed(out))

    @property
    def has_route(self) -> bool:
        return bool(self.route)

    @property
    def final(self) -> Optional[object]:
        return self.states.get((self.n, self.n))


def explore_grid(n: int, origin_state: object, attempt: Attempt) -> GridWalk:
    """
    Explore cells by anti-diagonals ``m + k = d``, trying the left
    neighbour first.

    Parameters
    ----------
    origin_state : object
        State of cell ``(0, 0)``; a falsy state closes it.

    attempt : callable
        ``attempt(source, target, axis, state)`` returns the target state,
        falsy on failure.
    """
    if n < 0:
        raise ValueError(f"{n=}, but the grid size must be nonnegative")
    status = {(m, k): "unexplored" for m in range(n + 1) for k in range(n + 1)}
    states: Dict[Cell, object] = {}
    parents: Dict[Cell, Cell] = {}
    attempts: Dict[Tuple[Cell, Cell], object] = {}
    status[(0, 0)] = "open" if origin_state else "closed"
    if origin_state:
        states[(0, 0)] = origin_state
    for d in range(1, 2 * n + 1):
        for m in range(max(0, d - n), min(d, n) + 1):
            cell = (m, d - m)
            left, below = (m - 1, d - m), (m, d - m - 1)
            if m >= 1 and status[left] == "open":
                src, axis = left, "right"
            elif d - m >= 1 and status[below] == "open":
                src, axis = below, "up"
            else:
                status[cell] = "closed"
                continue
            result = attempt(src, cell, axis, states[src])
            attempts[(src, cell)] = result
            if result:
                status[cell] = "open"
                states[cell] = result
                parents[cell] = src
            else:
                status[cell] = "closed"
    return GridWalk(n, status, states, parents, attempts)


@dataclass(frozen=True)
class RenormGrid:
    """
    Cell grid of a renormalization run.

    ``outcomes`` holds the produced seeds of every open cell; ``F1`` and
    ``F2`` are the times of the two seeds of cell ``(n, n)``.
    """
    origin: Seed
    orientation: Orient
    walk: GridWalk

    @property
    def n(self) -> int:
        return self.walk.n

    @property
    def status(self) -> Dict[Cell, str]:
        return self.walk.status

    @property
    def outcomes(self) -> Dict[Cell, RouteOutcome]:
        return self.walk.states  # type: ignore[return-value]

    @property
    def route(self) -> Tuple[Cell, ...]:
        return self.walk.route

    @property
    def has_route(self) -> bool:
        return self.walk.has_route

    @property
    def F1(self) -> Optional[float]:
        final = self.walk.final
        return final.t1 if final is not None and self.has_route else None

    @property
    def F2(self) -> Optional[float]:
        final = self.walk.final
        return final.t2 if final is not None and self.has_route else None

    def rows(self) -> list[dict]:
        """ One record per cell, for CSV reports """
        on_route = set(self.route)
        out = []
        for (m, k), st in sorted(self.status.items()):
            o = self.outcomes.get((m, k))
            parent = self.walk.parents.get((m, k))
            out.append({
                "m": m,
                "k": k,
                "status": st,
                "parent": "" if parent is None else f"{parent[0]},{parent[1]}",
                "on_route": (m, k) in on_route,
                "y1": "" if o is None else str(o.y1.center),
                "t1": np.nan if o is None else o.t1,
                "y2": "" if o is None else str(o.y2.center),
                "t2": np.nan if o is None else o.t2,
            })
        return out

    def as_dict(self) -> dict:
        return {
            "origin": str(self.origin.center),
            "orientation": list(self.orientation),
            "n": self.n,
            "route": [list(c) for c in self.route],
            "F1": self.F1,
            "F2": self.F2,
            "open": sum(s == "open" for s in self.status.values()),
            "cells": self.rows(),
        }


def renorm_grid(
    env: Optional[EnvLike],
    stream: StreamId,
    origin: Seed,
    n: int,
    geom: Geometry,
    orientation: Union[str, complex, Orient] = (1, 1),
    attempt: Optional[Attempt] = None,
) -> RenormGrid:
    """
    Explore the renormalized cell grid from ``origin``.

    Cell ``(0, 0)`` is open when the origin lies at least ``10h`` above the
    bottom row. The step from cell ``c`` along ``axis`` uses the seed ``y2``
    of ``c`` for "right" and ``y1`` for "up", and draws from
    ``derive_path(stream, *c, axis code)`` whatever order cells are
    explored in.

    Parameters
    ----------
    attempt : callable, optional
        Replaces the box runs, ``attempt(source, target, axis, outcome)``
        returning a :class:`RouteOutcome`.
    """
    o = as_orientation(orientation)
    anchor = grid_anchor(origin.center, geom)

    def run_cell(src: Cell, dst: Cell, axis: Axis, state: RouteOutcome) -> RouteOutcome:
        seed, dx = _next_start(state, axis)
        try:
            leg = plan_leg(seed, src, axis, geom, o, anchor, dx)
        except GeomError as err:
            logger.warning("cell %s -> %s has no valid leg: %s", src, dst, err)
            return RouteOutcome(False, reason="geometry", axis=axis)
        return run_leg(env, _leg_stream(stream, src, axis), leg, geom, seed)

    valid = origin.center.im >= 10 * geom.h
    start = RouteOutcome(valid, origin, origin) if valid else RouteOutcome(False)
    walk = explore_grid(n, start, attempt or run_cell)
    grid = RenormGrid(origin, o, walk)
    logger.debug("grid n=%d: %d open cells, route %s", n,
                 sum(s == "open" for s in walk.status.values()),
                 "found" if grid.has_route else "absent")
    return grid


FOp = Callable[[int, float, Seed, int, Orient, StreamId], Optional[Seed]]

# (which seed, n offset, orientation) of each G step, for direction i
_U_STEPS = (
    (2, 0, (1, 1)), (1, 0, (1, -1)), (1, 0, (1, 1)),
    (1, 0, (-1, 1)), (2, -1, (-1, -1)), (2, 1, (-1, 1)),
)
_V_STEPS = (
    (2, 0, (1, 1)), (1, 0, (1, -1)), (2, 0, (1, 1)), (1, 0, (1, -1)),
    (1, 0, (1, 1)), (1, 0, (-1, 1)), (2, -1, (-1, -1)), (1, 0, (-1, 1)),
    (2, 0, (-1, -1)), (2, 1, (-1, 1)),
)


def grid_f(env: EnvLike, geom: Geometry) -> FOp:
    """
    ``F1``/``F2`` as seeds: run a renormalization grid from the seed and
    return ``y1`` (``which=1``) or ``y2`` of its last cell.
    """
    def f(which: int, s: float, seed: Seed, n: int, o: Orient,
          stream: StreamId) -> Optional[Seed]:
        grid = renorm_grid(env, stream, replace(seed, time=s), n, geom, o)
        if not grid.has_route:
            return None
        final = grid.outcomes[(n, n)]
        return final.y1 if which == 1 else final.y2
    return f


@dataclass(frozen=True)
class GRoute:
    time: Optional[float]
    seed: Optional[Seed]
    u: int
    v: int
    f_calls: int

    def __bool__(self) -> bool:
        return self.time is not None


def g_route(
    s: float,
    x: Union[Seed, SiteLike],
    n: int,
    direction: Literal["1", "i"],
    env: Optional[EnvLike],
    stream: StreamId,
    geom: Optional[Geometry] = None,
    w_bar: Optional[float] = None,
    f_op: Optional[FOp] = None,
    reflect: Orient = (1, 1),
) -> GRoute:
    """
    Compose ``F1``/``F2`` steps into one long move.

    With ``s' = s mod 100 w_bar n``, ``v = 8`` if ``s' <= 37 w_bar n`` else
    ``0``, and ``u = 9 - v``: the six-step block runs ``u`` times, then the
    ten-step block ``v`` times, each step starting from the seed the last
    one produced. Direction ``"i"`` moves ``18(n+1)`` cells up; ``"1"``
    swaps the step orientations and moves right. ``reflect`` flips the
    orientation signs. Without ``w_bar`` the time scale is calibrated with
    :func:`resolve_w_bar`.

    Returns
    -------
    route : GRoute
        ``time`` is None when a step fails; ``f_calls`` counts the steps
        run, ``6u + 10v`` on success.
    """
    if n < 1:
        raise ValueError(f"{n=}, but n must be at least 1")
    if direction not in ("1", "i"):
        raise ValueError(f"{direction=}, but it must be '1' or 'i'")
    if f_op is None:
        if env is None or geom is None:
            raise ValueError("g_route needs env and geom without an f_op")
        f_op = grid_f(env, geom)
    w_bar = resolve_w_bar(w_bar, env, geom, n, stream)
    seed = x if isinstance(x, Seed) else Seed(as_site(x), geom.r if geom else 0)
    period = 100.0 * w_bar * n
    s_mod = s - period * math.floor(s / period)
    v = 8 if s_mod <= 37.0 * w_bar * n else 0
    u = 9 - v
    t, calls = s, 0
    for block in [_U_STEPS] * u + [_V_STEPS] * v:
        for which, dn, (a, b) in block:
            if direction == "1":
                a, b = b, a
            o = (a * reflect[0], b * reflect[1])
            out = f_op(which, t, seed, n + dn, o, derive(stream, calls))
            calls += 1
            if out is None:
                return GRoute(None, None, u, v, calls)
            t, seed = out.time, out
    return GRoute(t, seed, u, v, calls)


@dataclass(frozen=True)
class LRoute:
    time: Optional[float]
    seed: Optional[Seed]
    walk: GridWalk

    def __bool__(self) -> bool:
        return self.time is not None

    @property
    def legs(self) -> Tuple[GRoute, ...]:
        """ The G moves along the priority route """
        cells = self.walk.route
        return tuple(self.walk.states[c] for c in cells[1:])  # type: ignore


def l_route(
    s: float,
    x: Union[Seed, SiteLike],
    n: int,
    m: int,
    o: Union[str, complex, Orient],
    env: Optional[EnvLike],
    stream: StreamId,
    geom: Optional[Geometry] = None,
    w_bar: Optional[float] = None,
    f_op: Optional[FOp] = None,
) -> LRoute:
    """
    Cross an ``m x m`` grid of super-cells, each G move spanning
    ``18(n+1)`` cells, with priority to the left super-cell.
    """
    if m < 1:
        raise ValueError(f"{m=}, but m must be at least 1")
    sx, sy = as_orientation(o)
    w_bar = resolve_w_bar(w_bar, env, geom, n, stream)
    seed = x if isinstance(x, Seed) else Seed(as_site(x), geom.r if geom else 0)
    seed = replace(seed, time=s)

    def attempt(src: Cell, dst: Cell, axis: Axis, state: GRoute) -> GRoute:
        return g_route(state.time, state.seed, n, "1" if axis == "right" else "i",
                       env, _leg_stream(stream, src, axis), geom, w_bar, f_op,
                       reflect=(sx, sy))

    walk = explore_grid(m, GRoute(s, seed, 0, 0, 0), attempt)
    final = walk.final if walk.has_route else None
    if final is None:
        return LRoute(None, None, walk)
    return LRoute(final.time, final.seed, walk)  # type: ignore[attr-defined]


@dataclass(frozen=True)
class LoopRoute:
    time: Optional[float]
    legs: Tuple[LRoute, ...]

    def __bool__(self) -> bool:
        return self.time is not None


def loop_route(
    s: float,
    x: Union[Seed, SiteLike],
    n: int,
    m: int,
    env: Optional[EnvLike],
    stream: StreamId,
    geom: Optional[Geometry] = None,
    w_bar: Optional[float] = None,
    f_op: Optional[FOp] = None,
) -> LoopRoute:
    """
    Four L moves, north-east, north-west, south-west then south-east, each
    starting where the last one ended; the seed returns near its start.
    """
    w_bar = resolve_w_bar(w_bar, env, geom, n, stream)
    seed: Union[Seed, SiteLike] = x
    t = s
    legs = []
    for k, o in enumerate(((1, 1), (-1, 1), (-1, -1), (1, -1))):
        leg = l_route(t, seed, n, m, o, env, derive(stream, k), geom, w_bar,
                      f_op)
        legs.append(leg)
        if not leg:
            return LoopRoute(None, tuple(legs))
        t, seed = leg.time, leg.seed
    return LoopRoute(t, tuple(legs))


@dataclass(frozen=True)
class FTimeStats:
    """
    Empirical law of the route times to cell ``(n, n)``.

    ``w_hat`` is the per-cell time scale: the mean of ``F1`` is ``1.5
    w_hat n``. ``bracket`` is the share of ``F1`` samples inside
    ``[7/6 w_hat n, 11/6 w_hat n]``.
    """
    n: int
    success: EstimateWithCI
    f1: np.ndarray
    f2: np.ndarray
    w_hat: float
    bracket: float

    @property
    def mean_f1(self) -> float:
        return float(self.f1.mean()) if self.f1.size else math.nan

    @property
    def mean_f2(self) -> float:
        return float(self.f2.mean()) if self.f2.size else math.nan

    @property
    def quantiles(self) -> Dict[float, float]:
        if not self.f1.size:
            return {q: math.nan for q in (0.1, 0.5, 0.9)}
        values = np.quantile(self.f1, [0.1, 0.5, 0.9])
        return dict(zip((0.1, 0.5, 0.9), (float(v) for v in values)))

    @property
    def hist(self) -> Hist1d:
        return Hist1d.from_samples(self.f1, bins=20)

    def as_row(self) -> dict:
        q = self.quantiles
        return {
            "n": self.n,
            "trials": self.success.n,
            "success": self.success.point,
            "success_lo": self.success.lo,
            "success_hi": self.success.hi,
            "mean_F1": self.mean_f1,
            "mean_F2": self.mean_f2,
            "q10_F1": q[0.1],
            "q50_F1": q[0.5],
            "q90_F1": q[0.9],
            "w_hat": self.w_hat,
            "bracket": self.bracket,
        }


def default_origin(geom: Geometry) -> Seed:
    """ A horizontal seed at the centre of the first cell """
    c = geom.side // 2
    return Seed(Site(c, max(c, 10 * geom.h)), geom.r)


def f_time_stats(
    env: Optional[EnvLike],
    geom: Geometry,
    n: int,
    orientation: Union[str, complex, Orient],
    trials: int,
    stream: StreamId,
    origin: Optional[Seed] = None,
    w_bar: Optional[float] = None,
    parallelism: int = 1,
    attempt: Optional[Attempt] = None,
) -> FTimeStats:
    """
    Sample ``F1`` and ``F2`` over independent grids.

    Times are measured from the origin's time. Without ``w_bar`` the time
    scale is calibrated from the sample itself.
    """
    origin = origin or default_origin(geom)

    def trial(s: StreamId) -> Tuple[Optional[float], Optional[float]]:
        grid = renorm_grid(env, s, origin, n, geom, orientation, attempt)
        return grid.F1, grid.F2

    results = map_trials(trial, trials, stream, parallelism)
    ok = [(a, b) for a, b in results if a is not None and b is not None]
    f1 = np.array([a - origin.time for a, _ in ok], dtype=np.float64)
    f2 = np.array([b - origin.time for _, b in ok], dtype=np.float64)
    if w_bar is None:
        w_bar = float(f1.mean()) / (1.5 * n) if f1.size and n else math.nan
    if f1.size and np.isfinite(w_bar):
        lo, hi = 7.0 / 6.0 * w_bar * n, 11.0 / 6.0 * w_bar * n
        bracket = float(np.mean((f1 >= lo) & (f1 <= hi)))
    else:
        bracket = 0.0
    stats = FTimeStats(n, wilson(len(ok), trials), f1, f2, w_bar, bracket)
    logger.info("F times n=%d: %d/%d routes, w_hat=%.4g", n, len(ok), trials,
                w_bar)
    return stats


CALIBRATION_TRIALS = 16


def calibrate_w_bar(
    env: Optional[EnvLike],
    geom: Geometry,
    n: int,
    trials: int,
    stream: StreamId,
    orientation: Union[str, complex, Orient] = (1, 1),
    parallelism: int = 1,
    origin: Optional[Seed] = None,
    attempt: Optional[Attempt] = None,
) -> float:
    """
    Per-cell time scale for :func:`g_route` and :func:`l_route`: the mean
    of ``F1`` over ``trials`` grids of size ``n``, divided by ``1.5 n``.

    NaN when no grid has a route.
    """
    return f_time_stats(env, geom, n, orientation, trials, stream, origin,
                        parallelism=parallelism, attempt=attempt).w_hat


def resolve_w_bar(
    w_bar: Optional[float],
    env: Optional[EnvLike],
    geom: Optional[Geometry],
    n: int,
    stream: StreamId,
) -> float:
    """
    ``w_bar`` itself when given, otherwise calibrated on
    ``CALIBRATION_TRIALS`` grids drawn from ``derive(stream, -1)``.

    Raises
    ------
    ValueError
        If ``w_bar`` is not positive, or is unset with no env and geom to
        calibrate on.

    PreconditionError
        If no calibration grid has a route.
    """
    if w_bar is not None:
        if not w_bar > 0:
            raise ValueError(f"{w_bar=} must be positive")
        return float(w_bar)
    if env is None or geom is None:
        raise ValueError("w_bar is unset and there is no env and geom to "
                         "calibrate it on")
    w = calibrate_w_bar(env, geom, n, CALIBRATION_TRIALS, derive(stream, -1))
    if not w > 0:
        raise PreconditionError(
            f"no route in {CALIBRATION_TRIALS} calibration grids of size {n}; "
            "the time scale w_bar is undefined")
    logger.info("calibrated w_bar=%.4g on %d grids of size %d", w,
                CALIBRATION_TRIALS, n)
    return w
