"""
Command line entry point: ``contactpy <command> CONFIG``.

Every command writes CSV tables, plot-ready two-column text files and a
``summary.json`` of shape ``{config, results, diagnostics}`` to the output
directory. Exit status is 0 on success, 1 when the experiment ran but failed
(e.g. no renormalization route was found) and 2 on a configuration error.
"""
import argparse
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
from matplotlib.figure import Figure

from . import _io, _plotting
from ._blocks import (
    SIDES,
    BoxSpec,
    block_condition_report,
    default_horizon,
    estimate_block_grid,
)
from ._config import Config, load_config
from ._convergence import (
    cc_distance,
    condition_a,
    condition_b_trend,
    richardson_growth,
    seed_survival_trend,
    survival_curve,
    survival_sensitivity,
)
from ._environment import Environment, Mode, annealed, make_env, quenched
from ._errors import ConfigError, ContactpyError
from ._graphical import evolve, sample_rep
from ._lattice import Rect, rect
from ._renorm import (
    Geometry,
    default_origin,
    f_time_stats,
    renorm_grid,
    route_plan,
)
from ._stats import DYNAMICS, REFERENCE, StreamId, derive
from ._version import __version__

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2


@dataclass
class Report:
    """ Collects the outputs of one command inside ``out`` """
    out: Path
    plot: bool = False
    results: Dict[str, Any] = field(default_factory=dict)
    files: List[str] = field(default_factory=list)
    failed: bool = False

    def table(self, name: str, rows: Sequence[Dict[str, Any]]) -> None:
        fname = self.out / f"{name}.csv"
        _io.write_table(rows, fname)
        self.files.append(fname.name)

    def sweep(self, name: str, x: Sequence[float], y: Sequence[float],
              header: str = "x\tvalues") -> None:
        fname = self.out / f"{name}.txt"
        _io.save_sweep_as_txt(x, y, fname, header=header)
        self.files.append(fname.name)

    def figure(self, name: str, draw: Callable[[Any], Any]) -> None:
        if not self.plot:
            return
        fig = Figure(figsize=(6.4, 4.8))
        draw(fig.subplots())
        fname = self.out / f"{name}.png"
        fig.savefig(fname, dpi=150)
        self.files.append(fname.name)


def _stream(cfg: Config) -> StreamId:
    return StreamId(cfg.seed)


def _mode(cfg: Config) -> Mode:
    if cfg.mode == "quenched":
        return quenched(make_env(cfg.spec, cfg.seed))
    return annealed(cfg.spec)


def _fixed_env(cfg: Config) -> Environment:
    if cfg.mode == "annealed":
        logger.info("this command runs in the fixed environment of seed %d",
                    cfg.seed)
    return make_env(cfg.spec, cfg.seed)


def _experiment(cfg: Config, choices: Sequence[str]) -> str:
    name = cfg.experiment or choices[0]
    if name not in choices:
        raise ConfigError([f"experiment={name!r}, but it must be one of "
                           f"{', '.join(choices)}"])
    return name


def _box_rect(cfg: Config) -> Rect:
    return rect((-cfg.w, 0), (cfg.w, cfg.h))


def run_env(cfg: Config, report: Report) -> None:
    """ Write the edge rates of the ``(h, w)`` box for every env seed """
    window = _box_rect(cfg)
    rows = []
    for seed in cfg.env_seeds or (cfg.seed,):
        env = make_env(cfg.spec, seed)
        fname = report.out / f"env_{seed}.env"
        _io.save_env(env, window, fname)
        report.files.append(fname.name)
        rates = env.rates(window.edges())
        values, counts = np.unique(rates, return_counts=True)
        if len(values) <= 16:
            for v, c in zip(values.tolist(), counts.tolist()):
                rows.append({"seed": seed, "rate": v, "count": c,
                             "frequency": c / rates.size})
        else:
            rows.append({"seed": seed, "rate": "mean", "count": rates.size,
                         "frequency": float(rates.mean())})
    report.table("rates", rows)
    report.results["window"] = str(window)
    report.results["edges"] = len(window.edges())
    report.results["mean_rate"] = cfg.spec.mean


def run_simulate(cfg: Config, report: Report) -> None:
    """ One trajectory with its rep, or the growth-process front speed """
    stream = _stream(cfg)
    mode = _mode(cfg)
    if _experiment(cfg, ("trajectory", "richardson")) == "richardson":
        growth = richardson_growth(mode, cfg.t_grid, cfg.trials, stream,
                                   half_width=cfg.w, height=cfg.h,
                                   parallelism=cfg.parallelism)
        report.table("front", [{"t": t, "mean_front": f} for t, f in
                               zip(growth.times.tolist(),
                                   growth.mean_front.tolist())])
        report.sweep("front", growth.times, growth.mean_front, "t\tmean_front")
        report.results.update(slope=growth.slope, slope_se=growth.slope_se)
        return
    T = cfg.horizon or max(cfg.t_grid)
    region = Rect.bounding(list(cfg.initial)).expanded(cfg.margin)
    env = mode.env_for(derive(stream, 0))
    rep = sample_rep(env, region, T, derive(derive(stream, 0), DYNAMICS))
    traj = evolve(rep, cfg.initial, until=T)
    _io.save_rep(rep, report.out / "rep.txt")
    report.files.append("rep.txt")
    report.table("intervals", [
        {"site": str(s), "infected": a, "recovered": b}
        for s in traj.sites for a, b in traj.intervals(s)
    ])
    grid = [t for t in cfg.t_grid if t <= T]
    report.sweep("size", grid, [len(traj.infected_at(t)) for t in grid],
                 "t\tinfected")
    report.results.update(
        region=str(region), horizon=T, marks=rep.n_marks,
        survived=traj.survived, extinction_time=traj.extinction_time,
        final=sorted(str(s) for s in traj.final),
    )
    report.figure("spacetime", lambda ax: _plotting.plot_spacetime(traj, ax=ax))


def run_blocks(cfg: Config, report: Report) -> None:
    """ Block estimates over ``N_grid``, or the block dichotomy report """
    stream = _stream(cfg)
    mode = _mode(cfg)
    if _experiment(cfg, ("grid", "conditions")) == "conditions":
        cond = block_condition_report(mode, cfg.h, cfg.r, cfg.N_grid[0],
                                      cfg.eps, cfg.trials, stream, cfg.horizon,
                                      cfg.parallelism)
        report.table("conditions", [e.as_row() | {"box": name}
                                    for name, e in cond.estimates.items()])
        report.results.update(first=cond.first, second=cond.second,
                              supported=cond.supported)
        return
    T = cfg.horizon or default_horizon(cfg.h, cfg.w, cfg.spec.mean)
    spec = BoxSpec(cfg.h, cfg.w, cfg.r, T)
    estimates = estimate_block_grid(mode, spec, cfg.N_grid, cfg.trials,
                                    stream, cfg.parallelism)
    rows = [e.as_row() | {"side": e.side} for e in estimates]
    report.table("blocks", rows)
    for side in SIDES:
        mine = [e for e in estimates if e.side == side]
        report.sweep(f"blocks_{side}", [e.N for e in mine],
                     [e.point for e in mine], "N\testimate")
    report.results["horizon"] = T
    report.results["estimates"] = rows


def run_renorm(cfg: Config, report: Report) -> None:
    """
    Route plan, one explored grid and the law of the route times ``F1``,
    ``F2``; fails when no trial reaches cell ``(n, n)``.
    """
    stream = _stream(cfg)
    env = _fixed_env(cfg)
    geom = Geometry(cfg.h, cfg.r, cfg.M, cfg.kappa, cfg.cell, cfg.box_budget)
    origin = default_origin(geom)
    plan = route_plan(origin, cfg.orientation, cfg.n, geom)
    report.results["plan"] = plan.as_dict()
    # trial 0 of f_time_stats explores exactly this grid
    grid = renorm_grid(env, derive(stream, 0), origin, cfg.n, geom,
                       cfg.orientation)
    report.results["grid"] = grid.as_dict()
    report.table("cells", grid.rows())
    stats = f_time_stats(env, geom, cfg.n, cfg.orientation, cfg.trials,
                         stream, origin, parallelism=cfg.parallelism)
    report.table("f_times", [stats.as_row()])
    report.results["f_times"] = stats.as_row()
    report.results["w_bar"] = (float(stats.w_hat) if np.isfinite(stats.w_hat)
                               else None)
    if stats.f1.size:
        stats.hist.save_to_file(str(report.out / "F1.txt"),
                                header="F1\tcount", delimiter="\t")
        report.files.append("F1.txt")
    report.figure("grid", lambda ax: _plotting.plot_grid(grid, ax=ax))
    if stats.success.point == 0:
        logger.error("no route reached cell (%d, %d) in %d trials",
                     cfg.n, cfg.n, cfg.trials)
        report.failed = True


def run_cc(cfg: Config, report: Report) -> None:
    """ Complete-convergence distance or the window-hitting conditions """
    stream = _stream(cfg)
    env = _fixed_env(cfg)
    kind = _experiment(cfg, ("distance", "condition_a", "condition_b"))
    if kind == "condition_a":
        T = cfg.horizon or max(cfg.t_grid)
        rows = condition_a(env, cfg.x, cfg.initial, cfg.t_grid, T, cfg.trials,
                           stream, cfg.margin, cfg.parallelism)
        report.table("condition_a", [r.as_row() for r in rows])
        report.sweep("condition_a", cfg.t_grid, [r.hit.point for r in rows],
                     "t\thit")
        report.results["horizon"] = T
        return
    if kind == "condition_b":
        table = []
        for k, t in enumerate(cfg.t_grid):
            rows = condition_b_trend(env, cfg.x, cfg.l_grid, t, cfg.trials,
                                     derive(stream, k), cfg.margin,
                                     cfg.parallelism)
            table.extend(r.as_row() for r in rows)
            report.sweep(f"condition_b_{k}", cfg.l_grid,
                         [r.hit.point for r in rows], f"l\thit at t={t:g}")
        report.table("condition_b", table)
        return
    cc = cc_distance(env, cfg.initial, cfg.t_grid, cfg.window, cfg.burn,
                     cfg.trials, stream, cfg.margin, cfg.horizon,
                     parallelism=cfg.parallelism)
    report.table("cc", [m.as_row() for m in cc.distances])
    report.sweep("cc", [m.t for m in cc.distances],
                 [m.distance for m in cc.distances], "t\tdistance")
    report.results.update(
        window=str(cc.window), burn=cc.burn, margin=cc.margin,
        survival_horizon=cc.survival_horizon, decreasing=cc.decreasing,
        mann_kendall={"s": cc.trend.s, "tau": cc.trend.tau,
                      "p_value": cc.trend.p_value},
    )
    report.figure("cc", lambda ax: _plotting.plot_sweep(
        [m.t for m in cc.distances], [m.estimate for m in cc.distances],
        ax=ax))


def run_survival(cfg: Config, report: Report) -> None:
    """ Survival along ``t_grid``, or of growing seeds at one horizon """
    stream = _stream(cfg)
    mode = _mode(cfg)
    if _experiment(cfg, ("curve", "seeds")) == "seeds":
        T = cfg.horizon or max(cfg.t_grid)
        estimates, _ = seed_survival_trend(mode, cfg.l_grid, T, cfg.trials,
                                           stream, cfg.slab, cfg.margin,
                                           cfg.parallelism)
        report.table("survival", [e.as_row() | {"r": r} for r, e in
                                  zip(cfg.l_grid, estimates)])
        report.sweep("survival", cfg.l_grid,
                     [e.estimate.point for e in estimates], "r\testimate")
        return
    estimates = survival_curve(mode, cfg.initial, cfg.t_grid, cfg.trials,
                               stream, cfg.slab, cfg.margin,
                               parallelism=cfg.parallelism)
    report.table("survival", [e.as_row() for e in estimates])
    report.sweep("survival", cfg.t_grid,
                 [e.estimate.point for e in estimates], "T\testimate")
    if cfg.pilot:
        T = max(cfg.t_grid)
        at_T, at_2T = survival_sensitivity(mode, cfg.initial, T, cfg.pilot,
                                           derive(stream, REFERENCE), cfg.slab,
                                           cfg.margin, cfg.parallelism)
        report.results["sensitivity"] = {
            "T": T, "at_T": at_T.estimate.point,
            "at_2T": at_2T.estimate.point, "pilot": cfg.pilot,
        }
    report.figure("survival", lambda ax: _plotting.plot_sweep(
        cfg.t_grid, [e.estimate for e in estimates], ax=ax))


COMMANDS: Dict[str, Callable[[Config, Report], None]] = {
    "env": run_env,
    "simulate": run_simulate,
    "blocks": run_blocks,
    "renorm": run_renorm,
    "cc": run_cc,
    "survival": run_survival,
}


def run_command(name: str, cfg: Config) -> int:
    """
    Run one command and write its reports to ``cfg.out``.

    Returns
    -------
    status : int
        0 on success, 1 on experiment failure, 2 on a configuration error.
    """
    if name not in COMMANDS:
        logger.error("unknown command '%s', expected one of %s", name,
                     ", ".join(COMMANDS))
        return EXIT_CONFIG
    out = Path(cfg.out)
    report = Report(out, plot=cfg.plot)
    start = time.perf_counter()
    try:
        out.mkdir(parents=True, exist_ok=True)
        COMMANDS[name](cfg, report)
    except ConfigError as err:
        logger.error("%s", err)
        return EXIT_CONFIG
    except ContactpyError as err:
        logger.error("%s failed: %s", name, err)
        report.failed = True
        report.results["error"] = str(err)
    except OSError as err:
        logger.error("cannot write %s: %s", err.filename or out, err.strerror)
        return EXIT_FAILED
    elapsed = time.perf_counter() - start
    diagnostics: Dict[str, Any] = {
        "command": name,
        "version": __version__,
        "seed": cfg.seed,
        "failed": report.failed,
        "files": sorted(report.files),
    }
    if cfg.wall_time:
        diagnostics["wall_time"] = elapsed
        diagnostics["execution"] = {"out": str(out),
                                    "parallelism": cfg.parallelism}
    try:
        _io.write_summary(cfg.echo(), report.results, diagnostics,
                          out / "summary.json")
    except OSError as err:
        logger.error("cannot write %s: %s", err.filename, err.strerror)
        return EXIT_FAILED
    logger.info("%s finished in %.2f s, reports in %s", name, elapsed, out)
    return EXIT_FAILED if report.failed else EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("config", type=Path, metavar="CONFIG",
                        help="Experiment configuration (key = value lines)")
    common.add_argument("--out", type=str,
                        help="Output directory, overrides the 'out' key")
    common.add_argument("--parallelism", type=int,
                        help="Worker threads, overrides the 'parallelism' key")
    common.add_argument("-v", "--verbose", action="count", default=0,
                        help="-v for progress, -vv for per-box detail")
    parser = argparse.ArgumentParser(
        prog="contactpy",
        description="Contact process in a random environment: experiments "
                    "on survival, block events, renormalization and "
                    "complete convergence.")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND",
                                required=True)
    for name, func in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=func.__doc__.strip())
    return parser


def _configure_logging(verbosity: int) -> None:
    level = (logging.WARNING, logging.INFO, logging.DEBUG)[min(verbosity, 2)]
    logging.basicConfig(
        level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    _configure_logging(args.verbose)
    try:
        cfg = load_config(args.config)
    except ConfigError as err:
        logger.error("%s", err)
        return EXIT_CONFIG
    except OSError as err:
        logger.error("cannot read %s: %s", args.config, err.strerror)
        return EXIT_CONFIG
    overrides: Dict[str, Any] = {}
    if args.out is not None:
        overrides["out"] = args.out
    if args.parallelism is not None:
        if args.parallelism < 1:
            logger.error("--parallelism=%d must be at least 1",
                         args.parallelism)
            return EXIT_CONFIG
        overrides["parallelism"] = args.parallelism
    cfg = cfg.with_overrides(**overrides)
    logger.info("running %s with output in %s", args.command, cfg.out)
    return run_command(args.command, cfg)
