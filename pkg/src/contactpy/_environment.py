"""
The quenched random environment: one i.i.d. infection rate per edge.

Rates are never stored for the whole lattice. Each rate is the inverse CDF of
a uniform variate keyed by the master seed and the canonical edge
coordinates, so any window of the infinite environment is reproducible.
"""
import logging
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Literal, Optional, Union

import numpy as np
import scipy.stats
from numpy.typing import NDArray

from ._errors import FormatError, SpecError, WindowError
from ._lattice import Edge, Rect, Site, parse_corner, rect
from ._stats import ENV, StreamId, derive

logger = logging.getLogger(__name__)

DistKind = Literal["point", "two_point", "zero_or", "uniform", "exponential"]

_ARITY = {
    "point": 1,
    "two_point": 3,
    "zero_or": 2,
    "uniform": 2,
    "exponential": 1,
}

_EDGE_KEY = 0xED6E
"""int: spawn-key tag separating edge rates from dynamics streams"""

MAX_SEED = 2**64 - 1

EDGE_CACHE_SIZE = 1 << 18
"""int: edge variates kept by :func:`edge_uniform`, shared by all environments"""


@dataclass(frozen=True)
class DistSpec:
    """
    Law of a single edge rate.

    ``two_point(a, b, p)`` puts mass ``p`` on ``a`` and ``1-p`` on ``b``;
    ``zero_or(c, p)`` puts mass ``p`` on ``0`` and ``1-p`` on ``c``.
    """
    kind: DistKind
    params: tuple

    def __post_init__(self) -> None:
        if self.kind not in _ARITY:
            raise SpecError(str(self), f"unknown kind '{self.kind}'")
        if len(self.params) != _ARITY[self.kind]:
            raise SpecError(
                str(self), f"{self.kind} takes {_ARITY[self.kind]} parameters")
        if any(not np.isfinite(p) or p < 0 for p in self.params):
            raise SpecError(str(self), "parameters must be finite and >= 0")
        reason = self._violation()
        if reason:
            raise SpecError(str(self), reason)

    def _violation(self) -> str:
        p = self.params
        if self.kind == "two_point":
            if not 0 < p[0] < p[1]:
                return "two_point needs 0 < a < b"
            if not 0 <= p[2] <= 1:
                return "probability must lie in [0, 1]"
        elif self.kind == "zero_or":
            if not p[0] > 0:
                return "zero_or needs c > 0"
            if not 0 <= p[1] <= 1:
                return "probability must lie in [0, 1]"
        elif self.kind == "uniform" and not p[0] < p[1]:
            return "uniform needs lo < hi"
        elif self.kind == "exponential" and not p[0] > 0:
            return "exponential needs mean > 0"
        return ""

    def __str__(self) -> str:
        args = ",".join(repr(float(p)) for p in self.params)
        return f"{self.kind}({args})"

    @property
    def mean(self) -> float:
        p = self.params
        if self.kind == "point":
            return float(p[0])
        if self.kind == "two_point":
            return p[2] * p[0] + (1 - p[2]) * p[1]
        if self.kind == "zero_or":
            return (1 - p[1]) * p[0]
        if self.kind == "uniform":
            return 0.5 * (p[0] + p[1])
        return float(p[0])

    @property
    def is_atomic(self) -> bool:
        return self.kind in ("point", "two_point", "zero_or")

    def law(self):
        """
        The rate law as a frozen :mod:`scipy.stats` distribution.
        """
        p = self.params
        if self.kind == "point":
            return scipy.stats.rv_discrete(values=([p[0]], [1.0]))
        if self.kind == "two_point":
            return scipy.stats.rv_discrete(
                values=([p[0], p[1]], [p[2], 1 - p[2]]))
        if self.kind == "zero_or":
            return scipy.stats.rv_discrete(
                values=([0.0, p[0]], [p[1], 1 - p[1]]))
        if self.kind == "uniform":
            return scipy.stats.uniform(loc=p[0], scale=p[1] - p[0])
        return scipy.stats.expon(scale=p[0])

    def quantile(self, u: NDArray[np.float64]) -> NDArray[np.float64]:
        """
        Inverse CDF applied to uniform variates in ``[0, 1)``.

        Atoms are resolved by comparing ``u`` with the atom's mass, so a zero
        rate is exactly ``0.0``.
        """
        u = np.asarray(u, dtype=np.float64)
        p = self.params
        if self.kind == "point":
            return np.full(u.shape, float(p[0]))
        if self.kind == "two_point":
            return np.where(u < p[2], float(p[0]), float(p[1]))
        if self.kind == "zero_or":
            return np.where(u < p[1], 0.0, float(p[0]))
        return np.asarray(self.law().ppf(u), dtype=np.float64)


def point(c: float) -> DistSpec:
    return DistSpec("point", (float(c),))


def two_point(a: float, b: float, p: float) -> DistSpec:
    return DistSpec("two_point", (float(a), float(b), float(p)))


def zero_or(c: float, p: float) -> DistSpec:
    return DistSpec("zero_or", (float(c), float(p)))


def uniform(lo: float, hi: float) -> DistSpec:
    return DistSpec("uniform", (float(lo), float(hi)))


def exponential(mean: float) -> DistSpec:
    return DistSpec("exponential", (float(mean),))


_SPEC_RE = re.compile(r"^\s*([a-z_]+)\s*\(([^()]*)\)\s*$")


def parse_spec(text: str) -> DistSpec:
    """
    Read a spec string such as ``two_point(1,2,0.25)``.

    Raises
    ------
    SpecError
    """
    match = _SPEC_RE.match(text)
    if match is None:
        raise SpecError(text, "expected kind(param, ...)")
    kind, args = match.groups()
    try:
        params = tuple(float(a) for a in args.split(",") if a.strip())
    except ValueError:
        raise SpecError(text, "parameters must be numbers") from None
    return DistSpec(kind, params)  # type: ignore[arg-type]


def _zigzag(n: int) -> int:
    return 2 * n if n >= 0 else -2 * n - 1


@lru_cache(maxsize=EDGE_CACHE_SIZE)
def edge_uniform(master_seed: int, e: Edge) -> float:
    """
    The keyed uniform variate of one edge, in ``[0, 1)`` with 53 bits.

    Values are a pure function of the key; the most recently used
    ``EDGE_CACHE_SIZE`` of them are cached.
    """
    key = (_EDGE_KEY, _zigzag(e.a.re), e.a.im, _zigzag(e.b.re), e.b.im)
    word = np.random.SeedSequence(
        entropy=master_seed, spawn_key=key).generate_state(1, np.uint64)[0]
    return float(word >> np.uint64(11)) * 2.0**-53


@dataclass(frozen=True)
class Environment:
    """
    Edge rates derived on demand from ``(spec, master_seed)``.

    Build it with :func:`make_env`. Instances are immutable and hold no
    rates; see :func:`edge_uniform` for the shared cache.
    """
    spec: DistSpec
    master_seed: int

    @property
    def env_id(self) -> str:
        return f"{self.spec}@{self.master_seed}"

    def rate(self, e: Edge) -> float:
        """ Infection rate of edge ``e`` (either endpoint order) """
        return float(self.rates([e])[0])

    def rates(self, edges: Iterable[Edge]) -> NDArray[np.float64]:
        """ Rates of several edges, in the given order """
        u = np.array([edge_uniform(self.master_seed, e) for e in edges],
                     dtype=np.float64)
        return self.spec.quantile(u)


def make_env(spec: DistSpec, master_seed: int) -> Environment:
    """
    Environment with i.i.d. rates of law ``spec``.

    Parameters
    ----------
    spec : DistSpec
        Validated on construction; invalid parameters raise
        :class:`SpecError` there.

    master_seed : int
        Unsigned 64-bit seed.

    Examples
    --------
    ::

        env = make_env(point(1.7), 42)
        env.rate(Edge.of(0, 1))   # 1.7
    """
    if not isinstance(spec, DistSpec):
        spec = parse_spec(str(spec))
    if not 0 <= int(master_seed) <= MAX_SEED:
        raise SpecError(str(spec), f"master seed {master_seed} is not a u64")
    return Environment(spec, int(master_seed))


@dataclass(frozen=True)
class FrozenEnvironment:
    """
    Rates read back from an environment file; only its window is known.
    """
    spec: DistSpec
    master_seed: int
    window: Rect
    table: dict

    @property
    def env_id(self) -> str:
        return f"{self.spec}@{self.master_seed}"

    def rate(self, e: Edge) -> float:
        try:
            return self.table[e]
        except KeyError:
            raise WindowError(e, self.window) from None

    def rates(self, edges: Iterable[Edge]) -> NDArray[np.float64]:
        return np.array([self.rate(e) for e in edges], dtype=np.float64)


EnvLike = Union[Environment, FrozenEnvironment]


def export_env(env: EnvLike, window: Rect) -> str:
    """
    Write the rates of every edge inside ``window`` as a text document.

    Rates are printed with :func:`repr`, the shortest decimal that reads back
    to the same float.
    """
    if not window.is_finite:
        raise WindowError("export window", window)
    edges = window.edges()
    lines = [
        "dim=1",
        f"spec={env.spec}",
        f"seed={env.master_seed}",
        f"window={window}",
    ]
    for e, value in zip(edges, env.rates(edges)):
        lines.append(f"{e.a.re} {e.a.im} {e.b.re} {e.b.im} {float(value)!r}")
    logger.debug("exported %d edge rates of %s", len(edges), env.env_id)
    return "\n".join(lines) + "\n"


def import_env(document: str, source: str = "<env>") -> FrozenEnvironment:
    """
    Read a document written by :func:`export_env`.

    Raises
    ------
    FormatError
        On a missing header, a malformed line, an edge outside the window,
        or a missing edge (truncated document).
    """
    lines = document.splitlines()
    header = {}
    for lineno, key in enumerate(("dim", "spec", "seed", "window"), start=1):
        if lineno > len(lines) or not lines[lineno - 1].startswith(key + "="):
            raise FormatError(source, lineno, f"expected '{key}=' header")
        header[key] = lines[lineno - 1].split("=", 1)[1].strip()
    if header["dim"] != "1":
        raise FormatError(source, 1, "only dim=1 environments exist")
    try:
        spec = parse_spec(header["spec"])
        seed = int(header["seed"])
        lo, hi = header["window"].split(":")
        window = rect(parse_corner(lo), parse_corner(hi))
    except (SpecError, ValueError) as err:
        raise FormatError(source, 2, f"bad header: {err}") from None

    expected = set(window.edges())
    table = {}
    for lineno, line in enumerate(lines[4:], start=5):
        if not line.strip():
            continue
        fields = line.split()
        if len(fields) != 5:
            raise FormatError(source, lineno, "expected 'a b a2 b2 rate'")
        try:
            a, b, c, d = (int(f) for f in fields[:4])
            e = Edge.of(Site(a, b), Site(c, d))
            value = float(fields[4])
        except ValueError as err:
            raise FormatError(source, lineno, str(err)) from None
        if e not in expected:
            raise FormatError(source, lineno, f"edge {e} outside {window}")
        table[e] = value
    if len(table) != len(expected):
        raise FormatError(
            source, len(lines),
            f"{len(expected) - len(table)} edges of {window} are missing")
    return FrozenEnvironment(spec, seed, window, table)


@dataclass(frozen=True)
class Mode:
    """
    How trials see the environment.

    ``annealed``: a fresh environment of law ``spec`` per trial, seeded from
    the trial's stream. ``quenched``: one fixed environment for all trials.
    """
    kind: Literal["annealed", "quenched"]
    spec: DistSpec
    env: Optional[EnvLike] = None

    @property
    def label(self) -> str:
        if self.kind == "annealed":
            return "annealed"
        return f"quenched({self.env.env_id})"

    def env_for(self, stream: StreamId) -> EnvLike:
        """ The environment of the trial running on ``stream`` """
        if self.kind == "quenched":
            return self.env
        return make_env(self.spec, derive(stream, ENV).integer())


def annealed(spec: DistSpec) -> Mode:
    return Mode("annealed", spec)


def quenched(env: EnvLike) -> Mode:
    return Mode("quenched", env.spec, env)
