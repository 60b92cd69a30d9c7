from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

import numpy as np
from numpy.typing import NDArray

from . import _io


def get_all_dividers(n: int) -> tuple[int, ...]:
    """ All positive dividers of ``n`` """
    return tuple(k for k in range(1, n + 1) if n % k == 0)


@dataclass
class Hist1d:
    """
    Binned sample of a scalar, e.g. route times.

    Unpacks like the return of :func:`numpy.histogram`::

        h, edges = Hist1d.from_samples(times, bins=20)
    """
    histogram: NDArray[np.float64]
    edges: NDArray[np.float64]

    def __iter__(self) -> Iterator[NDArray[np.float64]]:
        yield self.histogram
        yield self.edges

    @classmethod
    def from_samples(
        cls,
        samples: Sequence[float],
        bins: int = 20,
        range_: Optional[tuple[float, float]] = None,
    ) -> "Hist1d":
        """
        Histogram of ``samples``; an empty sample gives one empty unit bin.
        """
        x = np.asarray(samples, dtype=np.float64)
        if x.size == 0:
            return cls(np.zeros(1), np.array([0.0, 1.0]))
        h, edges = np.histogram(x, bins=bins, range=range_)
        return cls(h.astype(np.float64), edges)

    @property
    def centers(self) -> NDArray[np.float64]:
        """ Return centers of the histogram's bins """
        return self.edges[:-1] + 0.5 * np.diff(self.edges)

    @property
    def total(self) -> float:
        return float(self.histogram.sum())

    def rebinned(self, factor: int) -> "Hist1d":
        """
        Combine ``factor`` neighbouring bins into one.

        Raises
        ------
        ValueError
            If ``factor`` does not divide the number of bins.
        """
        old_n = self.edges.size - 1
        if old_n % factor != 0:
            raise ValueError(
                f"Invalid {factor=}. Possible factors for this "
                f"histogram are {get_all_dividers(old_n)}."
            )
        new_hist = self.histogram.reshape(-1, factor).sum(axis=1)
        new_edges = self.edges[::factor]
        return Hist1d(new_hist, new_edges)

    def save_to_file(self, fname: str, **kwargs) -> None:
        """
        Save bin centers and values as a plot-ready two-column file.

        Other Parameters
        ----------------
        kwargs
            Additional keyword arguments for :obj:`numpy.savetxt`.
        """
        _io.save_1d_as_txt(self.histogram, self.edges, fname, **kwargs)

    @property
    def for_step(self) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        """
        Edges and bin values for :meth:`matplotlib.axes.Axes.step` with the
        default ``where="pre"``.
        """
        return self.edges, np.append(self.histogram[0], self.histogram)

    @property
    def integral(self) -> float:
        """ ``sum(binsizes * histogram_values)`` """
        return float(np.sum(np.diff(self.edges) * self.histogram))

    @property
    def normalized_to_integral(self) -> "Hist1d":
        if self.integral == 0:
            return Hist1d(self.histogram.copy(), self.edges)
        return Hist1d(self.histogram / self.integral, self.edges)

    def fraction_within(self, lo: float, hi: float) -> float:
        """
        Share of the counts in bins whose centers lie in ``[lo, hi]``.
        """
        if self.total == 0:
            return 0.0
        inside = (self.centers >= lo) & (self.centers <= hi)
        return float(self.histogram[inside].sum() / self.total)
