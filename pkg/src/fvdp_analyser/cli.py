"""Command line interface.

Every subcommand writes its primary output (CSV tables and a JSON report)
plus a static SVG figure to the output directory, prints a short summary
table and exits with

    0  success
    2  usage error or invalid input
    3  numerical failure
    4  inconclusive verdict
"""
from __future__ import annotations

import argparse
import json
import logging
import math
from collections.abc import Sequence
from pathlib import Path
from typing import Any, Callable, Optional

import numpy as np
import pandas as pd

from fvdp_analyser import __version__
from fvdp_analyser.chaos import (
    HORSESHOE_QUADRILATERAL,
    Quadrilateral,
    divergence_profile,
    horseshoe_check,
)
from fvdp_analyser.config import RunConfig, read_config_file
from fvdp_analyser.errors import ConfigError, NumericalError
from fvdp_analyser.integrator import FIGURE, SWEEP, IntegratorConfig
from fvdp_analyser.model import FIGURE_PARAMS, Params, State
from fvdp_analyser.plotting import (
    plot_divergence,
    plot_edge_images,
    plot_iterates,
    plot_periods,
    plot_slow_flow,
    plot_sweep,
    plot_trajectory,
)
from fvdp_analyser.returnmap import (
    SectionPoint,
    TransitConfig,
    basin_sample,
    detect_period,
    iterate_map,
    run_transit,
)
from fvdp_analyser.slowflow import (
    SINGULAR_PERIOD,
    CanardPolicy,
    desing_phase_portrait,
    folded_equilibria,
    folded_equilibria_frame,
    hybrid_flow_forced,
    printed_folded_phase,
    singular_orbit_unforced,
)
from fvdp_analyser.survey import (
    SweepOptions,
    singular_period_quadrature,
    sweep_cells,
    sweep_frame,
    vdp_period,
)
from fvdp_analyser.utils import output_dir, reduce_phase, save_frame

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERICAL = 3
EXIT_INCONCLUSIVE = 4

_NUMBER = (int, float)
_NULLABLE_NUMBER = (int, float, type(None))
_HEAD: dict[str, tuple[type, ...]] = {"schema_version": (int,), "config": (dict,)}

# Top level keys of each command's JSON report and the JSON types of their
# values; null stands for a missing or non-finite value.
REPORT_SCHEMAS: dict[str, dict[str, tuple[type, ...]]] = {
    "canard": {
        **_HEAD,
        "outcomes": (list,),
        "kinds": (list,),
        "common_prefix": (list,),
        "divergence": (dict,),
    },
    "horseshoe": {
        **_HEAD,
        "quadrilateral": (list,),
        "edges": (list,),
        "failures": (list,),
        "partial": (bool,),
        "evidence": (bool,),
        "aspect_ok": (bool,),
    },
    "foldedeq": {
        **_HEAD,
        "equilibria": (list,),
        "derived_phase": _NULLABLE_NUMBER,
        "printed_phase": _NULLABLE_NUMBER,
    },
    "slowflow": {
        **_HEAD,
        "singular_period": _NUMBER,
        "equilibria": (list,),
        "hybrid": (dict, type(None)),
    },
    "period": {
        **_HEAD,
        "eps": _NUMBER,
        "period": _NUMBER,
        "reference": _NUMBER,
        "quadrature": _NUMBER,
        "gap": _NUMBER,
        "periods": (list,),
        "half_period_asymmetry": _NULLABLE_NUMBER,
        "digest": (str,),
    },
    "sweep": {
        **_HEAD,
        "n_cells": (int,),
        "statuses": (dict,),
        "coexisting": (list,),
        "even": (list,),
    },
    "returnmap": {
        **_HEAD,
        "n_iterates": (int,),
        "error": (str, type(None)),
        "verdict": (dict, type(None)),
        "basin": (dict, type(None)),
    },
}

# Flags shared by all subcommands; everything else is a command option.
_COMMON = {
    "command",
    "config",
    "verbose",
    "out",
    "seed",
    "a",
    "omega",
    "eps",
    "rtol",
    "atol",
    "h_max",
    "max_steps",
    "method",
    "handler",
    "preset",
}


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def validate_report(command: str, report: dict[str, Any]) -> None:
    """Check a JSON ready report against the published schema of its command."""
    expected = REPORT_SCHEMAS[command]
    missing = [key for key in expected if key not in report]
    extra = [key for key in report if key not in expected]
    if missing or extra:
        msg = f"Report for {command!r} does not match its schema: missing {missing}, extra {extra}."
        raise ValueError(msg)
    wrong = [
        f"{key} ({type(report[key]).__name__})"
        for key, types in expected.items()
        if not isinstance(report[key], types)
    ]
    if wrong:
        msg = f"Report for {command!r} has values of the wrong type: {', '.join(wrong)}."
        raise ValueError(msg)


def write_report(command: str, report: dict[str, Any], directory: Path) -> Path:
    ready = _jsonable(report)
    validate_report(command, ready)
    path = directory / f"{command}.json"
    text = json.dumps(ready, indent=2, sort_keys=True, allow_nan=False)
    path.write_text(text + "\n", encoding="utf-8")
    logging.debug("Wrote %s", path)
    return path


def _print_table(df: pd.DataFrame) -> None:
    print(df.to_markdown(index=False, floatfmt=".10g"))


def _report_head(config: RunConfig) -> dict[str, Any]:
    return {"schema_version": SCHEMA_VERSION, "config": config.echo()}


def _state_dict(s: Optional[State]) -> Optional[dict[str, float]]:
    if s is None:
        return None
    return {"x": s.x, "y": s.y, "theta": s.theta}


def _parse_vertices(text: str) -> Quadrilateral:
    try:
        pairs = [tuple(float(v) for v in part.split(",")) for part in text.split(";")]
    except ValueError as e:
        msg = f"Vertices must be numbers, got {text!r}."
        raise argparse.ArgumentTypeError(msg) from e
    if len(pairs) != 4 or any(len(pair) != 2 for pair in pairs):
        msg = f"Expected four theta,y pairs separated by ';', got {text!r}."
        raise argparse.ArgumentTypeError(msg)
    try:
        return Quadrilateral(*pairs)  # type: ignore[arg-type]
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from e


def _parse_exits(text: str) -> tuple[str, ...]:
    exits = tuple(part.strip() for part in text.split(",") if part.strip())
    if not exits or any(e not in ("dip", "slice") for e in exits):
        msg = f"Exits must be a comma separated list of dip/slice, got {text!r}."
        raise argparse.ArgumentTypeError(msg)
    return exits


def cmd_integrate(args: argparse.Namespace, config: RunConfig, directory: Path) -> int:
    p = config.params
    s0 = State(args.x0, args.y0, args.theta0)
    trajectory, events, _ = run_transit(
        s0, p, config.integrator, TransitConfig(), section=False, t_max=args.t_max
    )
    samples = trajectory.samples[["t", "x", "y", "theta"]]
    events = events[["t", "label", "x", "y", "theta"]]
    save_frame(samples, str(directory / "trajectory.csv"), "")
    save_frame(events, str(directory / "events.csv"), "")
    plot_trajectory(samples, events, directory / "trajectory.svg")
    summary = events["label"].value_counts().sort_index().rename_axis("label").reset_index()
    _print_table(summary)
    return EXIT_OK


def cmd_canard(args: argparse.Namespace, config: RunConfig, directory: Path) -> int:
    p = config.params
    s0a = State(args.x0, args.y0, args.theta0)
    s0b = State(args.x0, args.y0, args.theta0_b)
    profile = divergence_profile(s0a, s0b, p, config.integrator, TransitConfig())
    outcomes = profile.outcomes
    common = 0
    for label_a, label_b in zip(outcomes[0].labels, outcomes[1].labels):
        if label_a != label_b:
            break
        common += 1
    report = _report_head(config)
    report.update(
        outcomes=[
            {
                "kind": o.kind,
                "jump_state": _state_dict(o.jump_state),
                "duration": o.duration,
                "exit_time": o.exit_time,
                "labels": list(o.labels),
            }
            for o in outcomes
        ],
        kinds=sorted({o.kind for o in outcomes}),
        common_prefix=list(outcomes[0].labels[:common]),
        divergence={
            "first_exceed": profile.first_exceed,
            "exit_time": profile.exit_time,
            "separation_at_exit": profile.separation_at_exit,
        },
    )
    write_report("canard", report, directory)
    save_frame(profile.separation, str(directory / "divergence.csv"), "")
    plot_divergence(profile.separation, directory / "divergence.svg")
    _print_table(
        pd.DataFrame(
            {
                "theta0": [s0a.theta, s0b.theta],
                "kind": [o.kind for o in outcomes],
                "duration": [o.duration for o in outcomes],
            }
        )
    )
    return EXIT_OK


def cmd_horseshoe(args: argparse.Namespace, config: RunConfig, directory: Path) -> int:
    q = args.vertices
    report_ = horseshoe_check(
        q, config.params, args.n_samples, config.integrator, TransitConfig(), args.jobs
    )
    report = _report_head(config)
    report.update(
        quadrilateral=[list(v) for v in q.vertices],
        edges=report_.edges.to_dict(orient="records"),
        failures=[list(f) for f in report_.failures],
        partial=report_.partial,
        evidence=report_.evidence,
        aspect_ok=report_.aspect_ok,
    )
    write_report("horseshoe", report, directory)
    save_frame(report_.images, str(directory / "edge_images.csv"), "")
    plot_edge_images(q, report_.images, directory / "horseshoe.svg")
    _print_table(report_.edges)
    return EXIT_OK


def _equilibria_records(p: Params) -> list[dict[str, Any]]:
    return [
        {
            "x": eq.x,
            "theta": eq.theta,
            "kind": eq.kind,
            "eigenvalues": [[v.real, v.imag] for v in eq.eigenvalues],
        }
        for eq in folded_equilibria(p)
    ]


def cmd_foldedeq(args: argparse.Namespace, config: RunConfig, directory: Path) -> int:
    p = config.params
    table = folded_equilibria_frame(p, save=str(directory / "folded_equilibria.csv"))
    derived = printed = None
    if abs(p.a) >= 1.0:
        derived = reduce_phase(math.asin(1.0 / p.a) / (2.0 * math.pi))
    if abs(p.a) >= 1.0 / (2.0 * math.pi):
        printed = printed_folded_phase(p.a)
    report = _report_head(config)
    report.update(
        equilibria=_equilibria_records(p),
        derived_phase=derived,
        printed_phase=printed,
    )
    write_report("foldedeq", report, directory)
    if len(table):
        _print_table(table[["x", "theta", "kind", "residual"]])
    else:
        print(f"No folded equilibria for |a| = {abs(p.a)} < 1.")
    return EXIT_OK


def cmd_slowflow(args: argparse.Namespace, config: RunConfig, directory: Path) -> int:
    p = config.params
    equilibria = folded_equilibria(p)
    seeds = [
        (x, theta)
        for x in np.linspace(-2.0, 2.0, args.n_seeds)
        for theta in np.linspace(0.0, 1.0, args.n_seeds, endpoint=False)
    ]
    portrait = desing_phase_portrait(p, seeds, (0.0, args.s_max))
    save_frame(portrait, str(directory / "desing_portrait.csv"), "")
    plot_slow_flow(portrait, equilibria, directory / "slowflow.svg")
    singular, period = singular_orbit_unforced()
    save_frame(singular.to_frame(), str(directory / "singular_orbit.csv"), "")
    hybrid = None
    if args.t_max > 0:
        policy = None
        if args.canard_s_max is not None:
            policy = CanardPolicy(args.canard_s_max, args.canard_exits)
        trajectory = hybrid_flow_forced(
            State(args.x0, args.y0, args.theta0), p, args.t_max, policy
        )
        save_frame(trajectory.to_frame(), str(directory / "hybrid.csv"), "")
        hybrid = {
            "n_arcs": len(trajectory.arcs),
            "jumps": trajectory.jumps_frame().to_dict(orient="records"),
            "termination": trajectory.termination,
        }
    report = _report_head(config)
    report.update(
        singular_period=period,
        equilibria=_equilibria_records(p),
        hybrid=hybrid,
    )
    write_report("slowflow", report, directory)
    _print_table(pd.DataFrame({"quantity": ["singular period"], "value": [period]}))
    return EXIT_OK


def cmd_period(args: argparse.Namespace, config: RunConfig, directory: Path) -> int:
    result = vdp_period(config.params.eps, config.integrator)
    report = _report_head(config)
    report.update(
        eps=result.eps,
        period=result.period,
        reference=SINGULAR_PERIOD,
        quadrature=singular_period_quadrature(),
        gap=result.gap,
        periods=list(result.periods),
        half_period_asymmetry=result.half_period_asymmetry,
        digest=result.digest,
    )
    write_report("period", report, directory)
    table = pd.DataFrame(
        {"eps": [result.eps], "period": [result.period], "gap": [result.gap]}
    )
    save_frame(table, str(directory / "period.csv"), "")
    plot_periods(table, directory / "period.svg")
    _print_table(table)
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace, config: RunConfig, directory: Path) -> int:
    options = SweepOptions(
        eps=config.params.eps,
        cfg=config.integrator,
        settle_periods=args.settle_periods,
        n_starts=args.n_starts,
        n_detect=args.n_detect,
        tol=args.tol,
        seed=config.seed,
    )
    cells = sweep_cells(
        (args.a_min, args.a_max),
        (args.omega_min, args.omega_max),
        (args.grid_a, args.grid_omega),
        options,
        args.jobs,
    )
    table = sweep_frame(cells)
    save_frame(table, str(directory / "sweep.csv"), "")
    plot_sweep(table, directory / "sweep.svg")
    statuses = table["status"].value_counts().sort_index()
    report = _report_head(config)
    report.update(
        n_cells=len(table),
        statuses={str(k): int(v) for k, v in statuses.items()},
        coexisting=[[c.a, c.omega, list(c.subharmonics)] for c in cells if c.coexisting],
        even=[[c.a, c.omega, list(c.subharmonics)] for c in cells if not c.odd],
    )
    write_report("sweep", report, directory)
    _print_table(statuses.rename_axis("status").reset_index(name="cells"))
    return EXIT_OK


def cmd_returnmap(args: argparse.Namespace, config: RunConfig, directory: Path) -> int:
    p = config.params
    transit = TransitConfig()
    start = SectionPoint(args.theta0, args.y0)
    run = iterate_map(start, args.n, p, config.integrator, transit)
    iterates = run.frame(save=str(directory / "iterates.csv"))
    plot_iterates(iterates, directory / "iterates.svg")
    verdict = None
    status = EXIT_OK if run.error is None else EXIT_NUMERICAL
    if args.detect and run.error is None:
        v = detect_period(
            start, p, config.integrator, transit, args.n_transient, args.n_detect, args.tol
        )
        verdict = {
            "status": v.status,
            "map_period": v.map_period,
            "n_sub": v.n_sub,
            "n_wraps": v.n_wraps,
            "deviation": v.deviation,
            "cycle": [[pt.theta, pt.y] for pt in v.cycle],
        }
        if v.status == "inconclusive":
            status = EXIT_INCONCLUSIVE
    basin = None
    if args.basin > 0:
        table = basin_sample(
            p,
            args.basin,
            config.seed,
            config.integrator,
            transit,
            args.n_transient,
            args.n_detect,
            args.tol,
            args.jobs,
            save=str(directory / "basin.csv"),
        )
        basin = {
            "n_points": len(table),
            "n_orbits": int(table["orbit"].max() + 1) if len(table) else 0,
            "statuses": {str(k): int(v) for k, v in table["status"].value_counts().items()},
        }
    report = _report_head(config)
    report.update(
        n_iterates=run.count,
        error=None if run.error is None else f"{type(run.error).__name__}: {run.error}",
        verdict=verdict,
        basin=basin,
    )
    write_report("returnmap", report, directory)
    _print_table(iterates)
    return status


def _add_common(parser: argparse.ArgumentParser, eps: float, preset: IntegratorConfig) -> None:
    parser.add_argument("--config", help="key=value file of flag defaults; flags override it")
    parser.add_argument("--verbose", action="store_true", help="log debug messages")
    parser.add_argument(
        "--out", help="output directory (default: $FVDP_OUTPUT_DIR or ./fvdp_output)"
    )
    parser.add_argument("--seed", type=int, default=0, help="seed of random sampling")
    parser.add_argument("--a", type=float, default=FIGURE_PARAMS.a, help="forcing amplitude")
    parser.add_argument(
        "--omega", type=float, default=FIGURE_PARAMS.omega, help="forcing frequency"
    )
    parser.add_argument("--eps", type=float, default=eps, help="time scale ratio")
    parser.add_argument("--rtol", type=float, default=preset.rtol, help="relative tolerance")
    parser.add_argument("--atol", type=float, default=preset.atol, help="absolute tolerance")
    parser.add_argument("--h-max", type=float, default=preset.h_max, help="maximum step")
    parser.add_argument("--max-steps", type=int, default=preset.max_steps, help="step budget")
    parser.add_argument(
        "--method", choices=("Radau", "DOP853"), default=preset.method, help="stepper"
    )


def _add_start(parser: argparse.ArgumentParser, x0: float, y0: float, theta0: float) -> None:
    parser.add_argument("--x0", type=float, default=x0, help="initial x")
    parser.add_argument("--y0", type=float, default=y0, help="initial y")
    parser.add_argument("--theta0", type=float, default=theta0, help="initial phase")


def _add_detection(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--n-detect", type=int, default=40, help="iterates examined")
    parser.add_argument("--tol", type=float, default=1e-6, help="periodicity tolerance")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fvdp-analyser",
        description="Slow-fast analysis of the forced van der Pol system.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True, metavar="command")

    def add(
        name: str,
        handler: Callable[[argparse.Namespace, RunConfig, Path], int],
        help_: str,
        eps: float = FIGURE_PARAMS.eps,
        preset: IntegratorConfig = FIGURE,
    ) -> argparse.ArgumentParser:
        sub = commands.add_parser(name, help=help_, description=help_)
        _add_common(sub, eps, preset)
        sub.set_defaults(handler=handler)
        return sub

    sub = add("integrate", cmd_integrate, "Integrate the forced system and log its events.")
    _add_start(sub, 0.0, -0.6752, 0.41732694)
    sub.add_argument("--t-max", type=float, default=10.0, help="time span")

    sub = add("canard", cmd_canard, "Classify the canards of two nearby starts.")
    _add_start(sub, 0.0, -0.6752, 0.41732694)
    sub.add_argument("--theta0-b", type=float, default=0.41732695, help="second phase")

    sub = add("horseshoe", cmd_horseshoe, "Map the edges of a quadrilateral on the section.")
    sub.add_argument(
        "--vertices",
        type=_parse_vertices,
        default=HORSESHOE_QUADRILATERAL,
        help="four theta,y pairs separated by ';' (top edge v0 v1, bottom edge v2 v3)",
    )
    sub.add_argument("--n-samples", type=int, default=200, help="samples per edge")
    sub.add_argument("--jobs", type=int, default=1, help="worker processes")

    add("foldedeq", cmd_foldedeq, "List and classify the folded equilibria.")

    sub = add("slowflow", cmd_slowflow, "Desingularized slow flow and singular orbits.")
    sub.add_argument("--n-seeds", type=int, default=8, help="portrait seeds per axis")
    sub.add_argument("--s-max", type=float, default=2.0, help="portrait time span")
    _add_start(sub, 2.0, 2.0 / 3.0, 0.0)
    sub.add_argument("--t-max", type=float, default=0.0, help="hybrid flow time span")
    sub.add_argument("--canard-s-max", type=float, help="canard arc length (enables canards)")
    sub.add_argument(
        "--canard-exits", type=_parse_exits, default=("dip",), help="e.g. dip,slice"
    )

    add("period", cmd_period, "Period of the unforced relaxation oscillation.", eps=1e-2)

    sub = add("sweep", cmd_sweep, "Sweep (a, omega) for periodic attractors.", 1e-2, SWEEP)
    sub.add_argument("--a-min", type=float, default=2.5, help="smallest a")
    sub.add_argument("--a-max", type=float, default=4.0, help="largest a")
    sub.add_argument("--omega-min", type=float, default=1.0, help="smallest omega")
    sub.add_argument("--omega-max", type=float, default=2.0, help="largest omega")
    sub.add_argument("--grid-a", type=int, default=4, help="grid points along a")
    sub.add_argument("--grid-omega", type=int, default=4, help="grid points along omega")
    sub.add_argument("--settle-periods", type=int, default=20, help="forcing periods discarded")
    sub.add_argument("--n-starts", type=int, default=8, help="random starts per cell")
    _add_detection(sub)
    sub.add_argument("--jobs", type=int, default=1, help="worker processes")

    sub = add("returnmap", cmd_returnmap, "Iterate the return map.", preset=SWEEP)
    sub.add_argument("--theta0", type=float, default=0.0, help="initial phase")
    sub.add_argument("--y0", type=float, default=-0.7, help="initial y (negative)")
    sub.add_argument("--n", type=int, default=10, help="number of iterates")
    sub.add_argument("--detect", action="store_true", help="run period detection")
    sub.add_argument("--n-transient", type=int, default=20, help="iterates discarded")
    _add_detection(sub)
    sub.add_argument("--basin", type=int, default=0, help="random starts to sample")
    sub.add_argument("--jobs", type=int, default=1, help="worker processes")
    return parser


def _file_defaults(
    parser: argparse.ArgumentParser, argv: Optional[Sequence[str]]
) -> None:
    """Apply a --config file as defaults of the chosen subcommand."""
    args, _ = parser.parse_known_args(argv)
    if not getattr(args, "config", None):
        return
    values = read_config_file(args.config)
    subparsers = next(
        a for a in parser._actions if isinstance(a, argparse._SubParsersAction)
    )
    sub = subparsers.choices[args.command]
    actions = {a.dest: a for a in sub._actions}
    defaults: dict[str, Any] = {}
    for key, value in values.items():
        dest = key.replace("-", "_")
        if dest not in actions or dest in ("help", "config"):
            msg = f"Unknown key {key!r} in {args.config} for {args.command!r}."
            raise ConfigError(msg)
        action = actions[dest]
        if isinstance(action, argparse._StoreTrueAction):
            defaults[dest] = value.lower() in ("1", "true", "yes")
        else:
            defaults[dest] = value
    sub.set_defaults(**defaults)


def _run_config(args: argparse.Namespace) -> RunConfig:
    preset = SWEEP if args.command in ("sweep", "returnmap") else FIGURE
    integrator = IntegratorConfig(
        rtol=args.rtol,
        atol=args.atol,
        h_max=args.h_max,
        max_steps=args.max_steps,
        method=args.method,
        cap_band=preset.cap_band,
        cap_factor=preset.cap_factor,
        event_tol=preset.event_tol,
    )
    options = tuple(
        (key, _option_text(value))
        for key, value in sorted(vars(args).items())
        if key not in _COMMON and key != "jobs"
    )
    return RunConfig(
        command=args.command,
        params=Params(args.a, args.omega, args.eps),
        integrator=integrator,
        options=options,
        output_dir=str(args.out) if args.out else "",
        seed=args.seed,
    )


def _option_text(value: Any) -> str:
    if isinstance(value, Quadrilateral):
        return ";".join(f"{t!r},{y!r}" for t, y in value.vertices)
    if isinstance(value, tuple):
        return ",".join(str(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        _file_defaults(parser, argv)
    except ConfigError as e:
        parser.exit(EXIT_USAGE, f"fvdp-analyser: error: {e}\n")
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        config = _run_config(args)
        directory = output_dir(args.out)
        return args.handler(args, config, directory)
    except ValueError as e:
        logging.error("%s", e)
        return EXIT_USAGE
    except NumericalError as e:
        logging.error("%s: %s", type(e).__name__, e)
        return EXIT_NUMERICAL
