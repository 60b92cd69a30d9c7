from typing import Literal, NamedTuple, Optional, Sequence

import matplotlib.pyplot as plt
import numpy as np
from matplotlib.axes import Axes
from matplotlib.patches import Rectangle

from ._graphical import Trajectory
from ._histogram import Hist1d
from ._lattice import SiteLike, as_site
from ._renorm import RenormGrid
from ._stats import EstimateWithCI

RED = "#AE1117"
TEAL = "#008081"
BLUE = "#2768F5"
GREEN = "#007F00"
GREY = "#404040"
ORANGE = "#FD8D3C"
PINK = "#D4B9DA"


class _Colors(NamedTuple):
    red: Literal["#AE1117"]
    blue: Literal["#2768F5"]
    orange: Literal["#FD8D3C"]
    pink: Literal["#D4B9DA"]
    green: Literal["#007F00"]
    teal: Literal["#008081"]
    grey: Literal["#404040"]


colors = _Colors(RED, BLUE, ORANGE, PINK, GREEN, TEAL, GREY)

_STATUS_COLORS = {"open": GREEN, "closed": RED, "unexplored": "white"}


def _axes(ax: Optional[Axes]) -> Axes:
    return plt.gca() if ax is None else ax


def plot_spacetime(
    trajectory: Trajectory,
    row: int = 0,
    ax: Optional[Axes] = None,
    color: str = RED,
    **vlines_kwargs
) -> Axes:
    """
    Space-time diagram of one row of sites: a vertical bar per infection
    interval, space on the x-axis and time upward.

    Parameters
    ----------
    trajectory : :class:`.Trajectory`

    row : int, default 0
        Imaginary part of the sites drawn.

    ax : :class:`matplotlib.axes.Axes`, optional
        If None, use the current axes.

    **vlines_kwargs
        Additional :meth:`matplotlib.axes.Axes.vlines` keyword arguments.
    """
    ax = _axes(ax)
    sites = [s for s in trajectory.sites if s.im == row]
    xs, lo, hi = [], [], []
    for s in sites:
        for a, b in trajectory.intervals(s):
            xs.append(s.re)
            lo.append(a)
            hi.append(b)
    vlines_kwargs.setdefault("linewidth", 2.0)
    ax.vlines(xs, lo, hi, colors=color, **vlines_kwargs)
    if sites:
        ax.set_xlim(min(s.re for s in sites) - 0.5,
                    max(s.re for s in sites) + 0.5)
    ax.set_ylim(trajectory.start, trajectory.until)
    ax.set_xlabel("site (Re)")
    ax.set_ylabel("time")
    return ax


def plot_sweep(
    x: Sequence[float],
    estimates: Sequence[EstimateWithCI],
    ax: Optional[Axes] = None,
    color: str = BLUE,
    label: Optional[str] = None,
    **plot_kwargs
) -> Axes:
    """
    Point estimates along a parameter grid with their interval as a band.
    """
    ax = _axes(ax)
    x = np.asarray(x, dtype=float)
    point = np.array([e.point for e in estimates])
    lo = np.array([e.lo for e in estimates])
    hi = np.array([e.hi for e in estimates])
    plot_kwargs.setdefault("marker", "o")
    ax.plot(x, point, color=color, label=label, **plot_kwargs)
    ax.fill_between(x, lo, hi, color=color, alpha=0.25, linewidth=0)
    return ax


def plot_hist(
    hist: Hist1d,
    ax: Optional[Axes] = None,
    color: str = GREY,
    **step_kwargs
) -> Axes:
    """ Step plot of a :class:`.Hist1d` """
    ax = _axes(ax)
    ax.step(*hist.for_step, color=color, **step_kwargs)
    return ax


def plot_grid(
    grid: RenormGrid,
    ax: Optional[Axes] = None,
    route_color: str = BLUE,
) -> Axes:
    """
    Cell statuses of a renormalization grid with the priority route on top.
    """
    ax = _axes(ax)
    for (m, k), status in grid.status.items():
        ax.add_patch(Rectangle((m - 0.45, k - 0.45), 0.9, 0.9,
                               facecolor=_STATUS_COLORS[status],
                               edgecolor=GREY, linewidth=0.5))
    route = grid.route
    if route:
        ax.plot([c[0] for c in route], [c[1] for c in route],
                color=route_color, marker="o", linewidth=2.0)
    ax.set_xlim(-0.6, grid.n + 0.6)
    ax.set_ylim(-0.6, grid.n + 0.6)
    ax.set_aspect("equal")
    ax.set_xlabel("m")
    ax.set_ylabel("k")
    return ax


def mark_sites(
    sites: Sequence[SiteLike],
    t: float,
    ax: Optional[Axes] = None,
    color: str = ORANGE,
) -> Axes:
    """ Mark sites at one instant on a space-time diagram, e.g. a seed """
    ax = _axes(ax)
    xs = [as_site(s).re for s in sites]
    ax.plot(xs, [t] * len(xs), linestyle="none", marker="s", color=color)
    return ax
