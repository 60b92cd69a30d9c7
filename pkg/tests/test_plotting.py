import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pytest  # noqa: E402

from contactpy import (  # noqa: E402
    Geometry,
    Hist1d,
    Seed,
    Site,
    StreamId,
    colors,
    evolve,
    mark_sites,
    plot_grid,
    plot_hist,
    plot_spacetime,
    plot_sweep,
    renorm_grid,
    wilson,
)


@pytest.fixture
def ax():
    fig, ax = plt.subplots()
    yield ax
    plt.close(fig)


def test_spacetime(three_site_rep, ax):
    traj = evolve(three_site_rep, [0])
    plot_spacetime(traj, ax=ax)
    mark_sites([0], 0.0, ax=ax)
    assert ax.get_ylim() == (0.0, 3.0)
    assert ax.get_xlim() == (-0.5, 2.5)


def test_sweep(ax):
    plot_sweep([1, 2], [wilson(3, 10), wilson(5, 10)], ax=ax, label="p")
    assert ax.lines[0].get_label() == "p"


def test_hist(ax):
    hist = Hist1d.from_samples([1.0, 2.0, 2.5], bins=3)
    plot_hist(hist, ax=ax)
    assert len(ax.lines) == 1
    x, y = hist.for_step
    line = ax.lines[0]
    assert np.array_equal(line.get_xdata(), x)
    assert np.array_equal(line.get_ydata(), y)
    assert line.get_drawstyle() == "steps-pre"


def test_grid(ax):
    grid = renorm_grid(None, StreamId(1), Seed(Site(100, 60), 1), 1,
                       Geometry(4, 1), attempt=lambda *args: None)
    plot_grid(grid, ax=ax)
    assert len(ax.patches) == 4
    assert not ax.lines
    assert colors.red == "#AE1117"
