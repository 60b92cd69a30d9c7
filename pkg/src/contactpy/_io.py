from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any, Literal, Mapping, Optional, Sequence, Union, overload

import numpy as np
import pandas as pd
from numpy.typing import NDArray

from . import _histogram
from ._environment import EnvLike, FrozenEnvironment, export_env, import_env
from ._errors import FormatError, WindowError
from ._graphical import ARROW, DEATH, GraphicalRep, rep_from_marks
from ._lattice import Rect, parse_corner, rect

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def save_1d_as_txt(
    histogram: NDArray[np.float64],
    edges: NDArray[np.float64],
    fname: PathLike,
    **savetxt_kwargs
) -> None:
    """
    Save a 1d histogram to a file.

    Saves the centers of the bin, not the edges.

    Parameters
    ----------
    histogram : ndarray, shape(n,)
        The histogram values.

    edges : ndarray, shape(n+1,)
        Edges of histogram.

    **savetxt_kwargs
        :func:`numpy.savetxt` keyword arguments. Useful to, e.g., set a header
        with the ``header`` keyword.

    Examples
    --------
    .. code-block:: python

        grid = renorm_grid(env, stream, origin, 2, geom)
        h, edges = Hist1d.from_samples(route_times, 20)
        save_1d_as_txt(h, edges, "F1.txt")
    """
    bincenters = edges[:-1] + 0.5 * np.diff(edges)
    save_sweep_as_txt(bincenters, histogram, fname, **savetxt_kwargs)


def save_sweep_as_txt(
    x: Sequence[float],
    values: Sequence[float],
    fname: PathLike,
    **savetxt_kwargs
) -> None:
    """
    Save a parameter sweep as two tab-separated columns, e.g. survival
    estimates along a time grid.
    """
    x, values = np.asarray(x, dtype=float), np.asarray(values, dtype=float)
    if x.shape != values.shape:
        errmsg = f"{x.shape=} and {values.shape=} must agree"
        raise ValueError(errmsg)
    output = np.zeros((len(x), 2))
    output[:, 0] = x
    output[:, 1] = values
    savetxt_kwargs.setdefault("header", "x\tvalues")
    savetxt_kwargs.setdefault("delimiter", "\t")
    np.savetxt(fname, output, **savetxt_kwargs)


def work_out_bin_edges(
    centers: NDArray[np.float64],
    lower: Optional[float] = None,
    upper: Optional[float] = None,
) -> NDArray[np.float64]:
    """
    Bin edges from bin centers.

    Equally spaced centers need no limits; otherwise give ``lower`` (or
    ``upper``) and the edges are built outward from it.
    """
    if centers.size == 1:
        lo = centers[0] - 0.5 if lower is None else lower
        return np.array([lo, 2 * centers[0] - lo])
    if lower is None and upper is None:
        step = np.diff(centers)
        if not np.allclose(step, step[0]):
            errmsg = "centers are not equally spaced, give lower or upper"
            raise ValueError(errmsg)
        return np.append(centers - 0.5 * step[0], centers[-1] + 0.5 * step[0])
    edges = np.zeros(centers.size + 1)
    if lower is not None:
        edges[0] = lower
        for i, c in enumerate(centers):
            edges[i + 1] = 2 * c - edges[i]
    else:
        edges[-1] = upper
        for i in range(centers.size - 1, -1, -1):
            edges[i] = 2 * centers[i] - edges[i + 1]
    return edges


@overload
def load_1d_from_txt(
    fname: PathLike,
    output_format: Literal["ndarray"] = "ndarray",
    **loadtxt_kwargs
) -> NDArray[np.float64]: ...


@overload
def load_1d_from_txt(
    fname: PathLike,
    output_format: Literal["Hist1d"] = "ndarray",  # type: ignore
    **loadtxt_kwargs
) -> _histogram.Hist1d: ...


def load_1d_from_txt(
    fname: PathLike,
    output_format: Literal["ndarray", "Hist1d"] = "ndarray",
    **loadtxt_kwargs
) -> Union[NDArray[np.float64], _histogram.Hist1d]:
    """
    Load a two-column file written by :func:`save_1d_as_txt`.

    Returns
    -------
    output : ndarray or :class:`.Hist1d`
        ``"ndarray"``: ``output[0]`` are the bin centers, ``output[1]`` the
        values. ``"Hist1d"``: the histogram with edges rebuilt from the
        centers.
    """
    valid_output_formats = ("ndarray", "Hist1d")
    if output_format not in valid_output_formats:
        errmsg = (
            f"{output_format=}, but it must be one of {valid_output_formats}"
        )
        raise ValueError(errmsg)
    output = np.atleast_2d(np.loadtxt(fname, **loadtxt_kwargs)).T
    if output_format == "ndarray":
        return output
    return _histogram.Hist1d(output[1], work_out_bin_edges(output[0]))


def save_env(env: EnvLike, window: Rect, fname: PathLike) -> None:
    """ Write the edge rates inside ``window`` to an environment file """
    Path(fname).write_text(export_env(env, window), encoding="utf-8")
    logger.info("environment %s written to %s", env.env_id, fname)


def load_env(fname: PathLike) -> FrozenEnvironment:
    """
    Raises
    ------
    FormatError
        If the file is malformed or truncated.
    """
    path = Path(fname)
    return import_env(path.read_text(encoding="utf-8"), str(path))


def _time(text: str, source: str, lineno: int) -> float:
    try:
        return float(text)
    except ValueError:
        raise FormatError(source, lineno, f"'{text}' is not a time") from None


def parse_rep(document: str, source: str = "<rep>") -> GraphicalRep:
    """
    Read a rep fixture.

    The document starts with ``region=u:v`` and ``horizon=T`` (optionally
    ``start=t``), followed by one mark per line: ``D a b t`` for a death at
    ``a+bi`` or ``A a b a' b' t`` for an arrow from ``a+bi`` to ``a'+b'i``.
    ``#`` starts a comment. Marks must be sorted by time.

    Raises
    ------
    FormatError
        On a malformed line, unsorted times, or a mark outside the window.
    """
    header: dict = {}
    deaths, arrows = [], []
    last = -np.inf
    for lineno, raw in enumerate(document.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" in line:
            key, value = (p.strip() for p in line.split("=", 1))
            if key not in ("region", "horizon", "start"):
                raise FormatError(source, lineno, f"unknown header '{key}'")
            header[key] = (value, lineno)
            continue
        fields = line.split()
        if (fields[0], len(fields)) in (("D", 4), ("A", 6)):
            *xy, t = fields[1:]
        else:
            raise FormatError(source, lineno,
                              "expected 'D a b t' or 'A a b a2 b2 t'")
        try:
            coords = [int(v) for v in xy]
        except ValueError:
            raise FormatError(source, lineno, "coordinates must be integers") \
                from None
        t = _time(t, source, lineno)
        if t < last:
            raise FormatError(source, lineno, f"time {t} is out of order")
        last = t
        if fields[0] == "D":
            deaths.append(((coords[0], coords[1]), t))
        else:
            arrows.append(((coords[0], coords[1]), (coords[2], coords[3]), t))
    for key in ("region", "horizon"):
        if key not in header:
            raise FormatError(source, 1, f"missing '{key}=' header")
    try:
        lo, hi = header["region"][0].split(":")
        region = rect(parse_corner(lo), parse_corner(hi))
    except ValueError as err:
        raise FormatError(source, header["region"][1], str(err)) from None
    horizon = _time(header["horizon"][0], source, header["horizon"][1])
    start = _time(header["start"][0], source, header["start"][1]) \
        if "start" in header else 0.0
    try:
        return rep_from_marks(region, horizon, deaths, arrows, start)
    except WindowError as err:
        raise FormatError(source, 0, str(err)) from None


def load_rep(fname: PathLike) -> GraphicalRep:
    path = Path(fname)
    return parse_rep(path.read_text(encoding="utf-8"), str(path))


def format_rep(rep: GraphicalRep) -> str:
    """ Write a rep in the fixture format read by :func:`parse_rep` """
    lines = [f"region={rep.region}", f"horizon={rep.horizon!r}"]
    if rep.start:
        lines.append(f"start={rep.start!r}")
    for t, k, owner, p in zip(rep.times.tolist(), rep.kinds.tolist(),
                              rep.owners.tolist(), rep.pairs.tolist()):
        x = rep.sites[owner]
        if k == DEATH:
            lines.append(f"D {x.re} {x.im} {t!r}")
        elif k == ARROW:
            y = rep.sites[int(rep.pair_dst[p])]
            lines.append(f"A {x.re} {x.im} {y.re} {y.im} {t!r}")
    return "\n".join(lines) + "\n"


def save_rep(rep: GraphicalRep, fname: PathLike) -> None:
    Path(fname).write_text(format_rep(rep), encoding="utf-8")


def write_table(rows: Sequence[Mapping[str, Any]], fname: PathLike) -> pd.DataFrame:
    """
    Write report rows as CSV, columns in first-row order, floats in their
    shortest round-trip form.
    """
    df = pd.DataFrame(list(rows))
    df.to_csv(fname, index=False, float_format=None, lineterminator="\n")
    logger.debug("wrote %d rows to %s", len(df), fname)
    return df


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    if isinstance(obj, Rect):
        return str(obj)
    if isinstance(obj, (str, int, float, bool)) or obj is None:
        return obj
    return str(obj)


def write_summary(
    config: Mapping[str, Any],
    results: Any,
    diagnostics: Mapping[str, Any],
    fname: PathLike,
) -> None:
    """ JSON summary ``{config, results, diagnostics}`` with sorted keys """
    payload = {
        "config": _jsonable(dict(config)),
        "results": _jsonable(results),
        "diagnostics": _jsonable(dict(diagnostics)),
    }
    Path(fname).write_text(
        json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False) + "\n",
        encoding="utf-8")
