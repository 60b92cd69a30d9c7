"""
Experiment configuration: a text document of ``key = value`` lines.

Sites are written ``a+bi``, rectangles ``u:v`` and lists comma separated.
``#`` starts a comment. Every problem in a document is collected before
:class:`ConfigError` is raised, so one run reports them all.
"""
import logging
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Any, Callable, Dict, Literal, Optional, Tuple, Union

from ._environment import MAX_SEED, DistSpec, parse_spec
from ._errors import ConfigError, ContactpyError
from ._lattice import Rect, Site, parse_corner, parse_site, rect
from ._renorm import Orient, as_orientation

logger = logging.getLogger(__name__)

MAX_WINDOW_SITES = 12

EXECUTION_KEYS = ("out", "parallelism")
"""Keys that change where and how fast a run goes, not what it computes"""


@dataclass(frozen=True)
class Config:
    """
    A validated experiment definition.

    Attributes
    ----------
    experiment : str
        Variant of the subcommand, empty for its default. ``blocks``:
        ``grid`` or ``conditions``; ``survival``: ``curve`` or ``seeds``;
        ``cc``: ``distance``, ``condition_a`` or ``condition_b``;
        ``simulate``: ``trajectory`` or ``richardson``.

    dim : int
        Lattice dimension, only ``1`` is implemented.

    spec : DistSpec
        Law of the edge rates, the only mandatory key.

    seed : int
        Master seed, an unsigned 64-bit integer.

    mode : {"annealed", "quenched"}
        Fresh environment per trial, or one environment of master seed
        ``seed`` for all trials. ``renorm`` and ``cc`` always use the fixed
        environment.

    h, w, r : int
        Box height, half-width and seed radius.

    M, kappa, cell, box_budget
        Renormalization geometry, see :class:`.Geometry`.

    horizon : float, optional
        Truncation horizon; defaults depend on the experiment.

    t_grid, l_grid, N_grid : tuple
        Time grid, segment lengths (seed radii for ``survival`` with
        ``experiment = seeds``) and block thresholds.

    eps : float
        Tolerance of the block dichotomy report.

    slab : int, optional
        Half-width of the slab survival runs are confined to.

    trials, parallelism : int

    out : str
        Output directory.

    initial : tuple of Site
        Initially infected sites.

    x : Site
        Target site of the window-hitting conditions.

    window : Rect
        Observation window of complete convergence, at most 12 sites.

    burn : float
        Burn-in time of the upper invariant measure sample.

    margin : int
        Spatial margin of simulation regions.

    n : int
        Renormalization grid size.

    orientation : tuple of int
        Grid orientation ``±1±i``.

    env_seeds : tuple of int
        Master seeds of the environments written by ``env``; empty means
        ``(seed,)``.

    pilot : int
        Trials of the ``T`` versus ``2T`` survival check, 0 to skip it.

    plot : bool
        Also write PNG figures.

    wall_time : bool
        Record wall time and execution keys in the summary. Turn it off for
        byte-identical reports.
    """
    spec: DistSpec
    experiment: str = ""
    dim: int = 1
    seed: int = 0
    mode: Literal["annealed", "quenched"] = "annealed"
    h: int = 4
    w: int = 16
    r: int = 1
    M: int = 64
    kappa: float = 1.25
    cell: Optional[int] = None
    horizon: Optional[float] = None
    box_budget: Optional[float] = None
    t_grid: Tuple[float, ...] = (5.0, 10.0, 20.0, 40.0)
    l_grid: Tuple[int, ...] = (2, 4, 6)
    N_grid: Tuple[int, ...] = (1,)
    eps: float = 0.05
    slab: Optional[int] = None
    trials: int = 1000
    parallelism: int = 1
    out: str = "out"
    initial: Tuple[Site, ...] = (Site(0, 0),)
    x: Site = Site(0, 0)
    window: Rect = Rect((0.0, 0.0), (2.0, 1.0))
    burn: float = 20.0
    margin: int = 10
    n: int = 2
    orientation: Orient = (1, 1)
    env_seeds: Tuple[int, ...] = ()
    pilot: int = 0
    plot: bool = False
    wall_time: bool = True

    def echo(self, include_execution: bool = False) -> Dict[str, Any]:
        """
        Every experiment-defining key with its resolved value, as text and
        numbers ready for a JSON summary.
        """
        out: Dict[str, Any] = {}
        for f in fields(self):
            if f.name in EXECUTION_KEYS and not include_execution:
                continue
            value = getattr(self, f.name)
            if isinstance(value, (DistSpec, Rect, Site)):
                value = str(value)
            elif f.name == "initial":
                value = [str(s) for s in value]
            elif f.name == "orientation":
                value = _format_orientation(value)
            elif isinstance(value, tuple):
                value = list(value)
            out[f.name] = value
        return out

    def with_overrides(self, **changes: Any) -> "Config":
        return replace(self, **changes)


def _format_orientation(o: Orient) -> str:
    return f"{'-' if o[0] < 0 else ''}1{'-' if o[1] < 0 else '+'}i"


def _int(text: str) -> int:
    return int(text)


def _float(text: str) -> float:
    return float(text)


def _optional(parse: Callable[[str], Any]) -> Callable[[str], Any]:
    def inner(text: str) -> Any:
        return None if text.lower() in ("", "none", "default") else parse(text)
    return inner


def _list(parse: Callable[[str], Any]) -> Callable[[str], tuple]:
    def inner(text: str) -> tuple:
        return tuple(parse(p.strip()) for p in text.split(",") if p.strip())
    return inner


def _bool(text: str) -> bool:
    value = text.lower()
    if value in ("true", "yes", "on", "1"):
        return True
    if value in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"'{text}' is not a boolean (true/false)")


def _window(text: str) -> Rect:
    try:
        lo, hi = text.split(":")
    except ValueError:
        raise ValueError(f"'{text}' is not a rectangle u:v") from None
    return rect(parse_corner(lo), parse_corner(hi))


def _mode(text: str) -> str:
    if text not in ("annealed", "quenched"):
        raise ValueError(f"'{text}', but it must be annealed or quenched")
    return text


_PARSERS: Dict[str, Callable[[str], Any]] = {
    "experiment": str,
    "dim": _int,
    "spec": parse_spec,
    "seed": _int,
    "mode": _mode,
    "h": _int,
    "w": _int,
    "r": _int,
    "M": _int,
    "kappa": _float,
    "cell": _optional(_int),
    "horizon": _optional(_float),
    "box_budget": _optional(_float),
    "t_grid": _list(_float),
    "l_grid": _list(_int),
    "N_grid": _list(_int),
    "eps": _float,
    "slab": _optional(_int),
    "trials": _int,
    "parallelism": _int,
    "out": str,
    "initial": _list(parse_site),
    "x": parse_site,
    "window": _window,
    "burn": _float,
    "margin": _int,
    "n": _int,
    "orientation": as_orientation,
    "env_seeds": _list(_int),
    "pilot": _int,
    "plot": _bool,
    "wall_time": _bool,
}


def _check(cfg: Dict[str, Any]) -> list:
    """ Cross-field rules on already parsed values """
    problems = []
    if cfg.get("dim", 1) != 1:
        problems.append(f"dim={cfg['dim']}: only d=1 implemented")
    seeds = [cfg.get("seed", 0), *cfg.get("env_seeds", ())]
    for s in seeds:
        if not 0 <= s <= MAX_SEED:
            problems.append(f"seed {s} is not an unsigned 64-bit integer")
    for key in ("trials", "parallelism", "h", "w", "M", "n"):
        if key in cfg and cfg[key] < 1:
            problems.append(f"{key}={cfg[key]} must be at least 1")
    for key in ("r", "margin", "pilot"):
        if key in cfg and cfg[key] < 0:
            problems.append(f"{key}={cfg[key]} must be nonnegative")
    if cfg.get("r", 1) > cfg.get("w", 16):
        problems.append(f"r={cfg['r']} must not exceed w={cfg['w']}")
    for key in ("horizon", "box_budget", "kappa"):
        if cfg.get(key) is not None and not cfg[key] > 0:
            problems.append(f"{key}={cfg[key]} must be positive")
    if "eps" in cfg and not 0 < cfg["eps"] < 1:
        problems.append(f"eps={cfg['eps']} must lie in (0, 1)")
    if cfg.get("slab") is not None and cfg["slab"] < 0:
        problems.append(f"slab={cfg['slab']} must be nonnegative")
    if cfg.get("burn", 0.0) < 0:
        problems.append(f"burn={cfg['burn']} must be nonnegative")
    for key in ("t_grid", "l_grid", "N_grid"):
        if key in cfg and not cfg[key]:
            problems.append(f"{key} must not be empty")
    if any(t <= 0 for t in cfg.get("t_grid", ())):
        problems.append("t_grid times must be positive")
    if any(v < 0 for v in cfg.get("l_grid", ())):
        problems.append("l_grid values must be nonnegative")
    if "window" in cfg:
        n_sites = cfg["window"].n_sites
        if n_sites > MAX_WINDOW_SITES:
            problems.append(f"window {cfg['window']} has {n_sites:g} sites, "
                            f"at most {MAX_WINDOW_SITES} are supported")
    return problems


def parse_config(document: str, source: str = "<config>") -> Config:
    """
    Read and validate a configuration document.

    Raises
    ------
    ConfigError
        With one diagnostic per problem found, e.g. ``line 3: unknown key
        'trails'`` or ``dim=2: only d=1 implemented``.

    Examples
    --------
    ::

        cfg = parse_config("spec = point(2.0)\\ntrials = 500\\n")
        cfg.h, cfg.trials   # (4, 500)
    """
    problems: list = []
    values: Dict[str, Any] = {}
    seen: Dict[str, int] = {}
    for lineno, raw in enumerate(document.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            problems.append(f"{source}:{lineno}: expected 'key = value'")
            continue
        key, text = (p.strip() for p in line.split("=", 1))
        if key not in _PARSERS:
            problems.append(f"{source}:{lineno}: unknown key '{key}'")
            continue
        if key in seen:
            problems.append(f"{source}:{lineno}: '{key}' already set on line "
                            f"{seen[key]}")
            continue
        seen[key] = lineno
        try:
            values[key] = _PARSERS[key](text)
        except (ValueError, ContactpyError) as err:
            problems.append(f"{source}:{lineno}: {key}: {err}")
    if "spec" not in values and "spec" not in seen:
        problems.append(f"{source}: missing mandatory key 'spec'")
    problems.extend(_check(values))
    if problems:
        raise ConfigError(problems)
    cfg = Config(**values)
    logger.debug("configuration from %s: %s", source, cfg.echo())
    return cfg


def load_config(fname: Union[str, Path]) -> Config:
    path = Path(fname)
    return parse_config(path.read_text(encoding="utf-8"), str(path))
