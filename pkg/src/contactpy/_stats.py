"""
Reproducible Monte Carlo harness.

Every random quantity in contactpy is drawn from a :class:`StreamId`: a master
seed plus a path of integer labels. Paths are keyed into numpy's
:class:`~numpy.random.SeedSequence` and feed a Philox counter-based
generator, so trial ``i`` of an experiment sees the same numbers however the
trials are scheduled.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Literal, Sequence, Tuple, TypeVar

import numpy as np
import scipy.stats
from numpy.typing import NDArray

logger = logging.getLogger(__name__)

T = TypeVar("T")

# labels separating the randomness consumers of one trial
ENV = 1
DYNAMICS = 2
REFERENCE = 3


def _zigzag(n: int) -> int:
    return 2 * n if n >= 0 else -2 * n - 1


@dataclass(frozen=True)
class StreamId:
    master: int
    path: Tuple[int, ...] = ()

    def seed_sequence(self) -> np.random.SeedSequence:
        return np.random.SeedSequence(entropy=self.master, spawn_key=self.path)

    def generator(self) -> np.random.Generator:
        """ A fresh Philox generator positioned at the start of the stream """
        return np.random.Generator(np.random.Philox(self.seed_sequence()))

    def integer(self) -> int:
        """ One unsigned 64-bit word of the stream, e.g. to seed an environment """
        return int(self.seed_sequence().generate_state(1, np.uint64)[0])

    def __str__(self) -> str:
        return f"{self.master}/" + "/".join(str(p) for p in self.path)


def derive(parent: StreamId, label: int) -> StreamId:
    """
    Child stream of ``parent`` for an integer label (negative labels allowed).
    """
    return StreamId(parent.master, parent.path + (_zigzag(int(label)),))


def derive_path(parent: StreamId, *labels: int) -> StreamId:
    for label in labels:
        parent = derive(parent, label)
    return parent


@dataclass(frozen=True)
class EstimateWithCI:
    point: float
    lo: float
    hi: float
    n: int
    method: Literal["wilson", "bootstrap", "normal"] = "wilson"

    @property
    def sigma(self) -> float:
        """ Standard error implied by a 95% interval """
        return (self.hi - self.lo) / (2 * 1.959963984540054)

    def overlaps(self, other: "EstimateWithCI") -> bool:
        return self.lo <= other.hi and other.lo <= self.hi


def wilson(
    successes: int,
    n: int,
    confidence: float = 0.95,
) -> EstimateWithCI:
    """
    Wilson score interval for a binomial proportion.

    Returns the uninformative interval ``[0, 1]`` when ``n == 0``.
    """
    if n == 0:
        return EstimateWithCI(0.0, 0.0, 1.0, 0)
    z = float(scipy.stats.norm.ppf(0.5 + confidence / 2))
    p = successes / n
    denom = 1 + z**2 / n
    centre = (p + z**2 / (2 * n)) / denom
    margin = z * np.sqrt(p * (1 - p) / n + z**2 / (4 * n**2)) / denom
    lo = max(0.0, min(p, centre - margin))
    hi = min(1.0, max(p, centre + margin))
    return EstimateWithCI(p, float(lo), float(hi), n)


def binomial_sigma(p: float, n: int) -> float:
    return float(np.sqrt(max(p * (1 - p), 0.0) / max(n, 1)))


def map_trials(
    experiment: Callable[[StreamId], T],
    n: int,
    stream: StreamId,
    parallelism: int = 1,
) -> list[T]:
    """
    Run ``experiment(derive(stream, i))`` for ``i < n``, results in order.

    The worker pool only changes the schedule, never the per-trial streams,
    so the returned list does not depend on ``parallelism``.
    """
    if n < 1:
        raise ValueError(f"{n=}, but at least one trial is needed")
    streams = [derive(stream, i) for i in range(n)]
    if parallelism <= 1:
        return [experiment(s) for s in streams]
    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        return list(pool.map(experiment, streams))


@dataclass(frozen=True)
class TrialResult:
    estimate: EstimateWithCI
    outcomes: NDArray[np.bool_]

    @property
    def successes(self) -> int:
        return int(self.outcomes.sum())


def run_trials(
    experiment: Callable[[StreamId], bool],
    n: int,
    stream: StreamId,
    parallelism: int = 1,
    confidence: float = 0.95,
) -> TrialResult:
    """
    Estimate the success probability of a Bernoulli experiment.

    Parameters
    ----------
    experiment : callable
        Pure function of its :class:`StreamId` returning a bool.

    n : int
        Number of trials, trial ``i`` runs on ``derive(stream, i)``.

    parallelism : int, default 1
        Worker threads. Results are identical for any value.

    Returns
    -------
    result : TrialResult
        Wilson estimate and the raw outcomes in trial order.
    """
    outcomes = np.array(
        map_trials(experiment, n, stream, parallelism), dtype=bool)
    logger.debug("%d/%d successes on stream %s", outcomes.sum(), n, stream)
    return TrialResult(wilson(int(outcomes.sum()), n, confidence), outcomes)


def bootstrap(
    samples: Sequence[NDArray],
    statistic: Callable[..., float],
    stream: StreamId,
    n_resamples: int = 500,
    confidence: float = 0.95,
) -> EstimateWithCI:
    """
    Percentile bootstrap, resampling each sample independently.

    ``statistic`` is called with one array per sample. The returned interval
    is widened to contain the plug-in estimate if needed.
    """
    rng = stream.generator()
    arrays = [np.asarray(s) for s in samples]
    point = float(statistic(*arrays))
    values = np.empty(n_resamples)
    for k in range(n_resamples):
        resampled = [a[rng.integers(0, len(a), len(a))] for a in arrays]
        values[k] = statistic(*resampled)
    alpha = (1 - confidence) / 2
    lo, hi = np.quantile(values, [alpha, 1 - alpha])
    n = min(len(a) for a in arrays)
    return EstimateWithCI(
        point, float(min(lo, point)), float(max(hi, point)), n, "bootstrap")


def paired_difference(
    x: NDArray,
    y: NDArray,
    confidence: float = 0.95,
) -> EstimateWithCI:
    """
    Mean of ``x - y`` over paired trials with a normal interval.
    """
    d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    z = float(scipy.stats.norm.ppf(0.5 + confidence / 2))
    mean = float(d.mean())
    se = float(d.std(ddof=1) / np.sqrt(d.size)) if d.size > 1 else 0.0
    return EstimateWithCI(mean, mean - z * se, mean + z * se, d.size, "normal")


@dataclass(frozen=True)
class MannKendall:
    s: int
    tau: float
    p_value: float

    @property
    def nonincreasing(self) -> bool:
        """ No significant upward trend at the 5% level """
        return self.s <= 0 or self.p_value > 0.05


def mann_kendall(values: Sequence[float]) -> MannKendall:
    """
    Mann-Kendall trend test of a series against its index.

    ``S`` is the sum of ``sign(x_j - x_i)`` over ``i < j``; the p-value is
    the two-sided Kendall tau test from :func:`scipy.stats.kendalltau`.
    """
    x = np.asarray(values, dtype=float)
    s = int(sum(np.sign(x[j] - x[i])
                for i in range(x.size) for j in range(i + 1, x.size)))
    if x.size < 2 or np.all(x == x[0]):
        return MannKendall(s, 0.0, 1.0)
    tau, p_value = scipy.stats.kendalltau(np.arange(x.size), x)
    return MannKendall(s, float(tau), float(p_value))
