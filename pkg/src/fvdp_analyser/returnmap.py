"""The return map to the section {x = 0, x decreasing} and period detection.

A transit from the section back to it is integrated with the full event set
of the forced system:

    section  x = 0 with x decreasing (terminal)
    wrap     theta crosses an integer
    fold+    x = 1 near C
    fold-    x = -1 near C
    C        the critical residual y + x - x**3/3 changes sign
    jump     |y + x - x**3/3| grows past the jump threshold 10 sqrt(eps)

Fold crossings are only logged while |residual| < `TransitConfig.fold_band`.
A jump from one fold crosses the opposite fold line with |residual| close to
4/3, so those crossings are not fold visits and are left out.
"""
from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from functools import partial
from typing import Optional

import numpy as np
import pandas as pd

from fvdp_analyser.errors import (
    ConfigError,
    FvdpError,
    InvalidStateError,
    NoReturnError,
    NumericalError,
    StepBudgetExhausted,
    TangencyError,
)
from fvdp_analyser.integrator import (
    SWEEP,
    EventSpec,
    IntegratorConfig,
    Trajectory,
    integrate_with_events,
    theta_wrap_event,
)
from fvdp_analyser.model import (
    FIGURE_PARAMS,
    Params,
    State,
    critical_residual,
    fvdp_vector_field,
)
from fvdp_analyser.utils import (
    circle_distance,
    parallel_map,
    reduce_phase,
    save_frame,
)

EVENT_COLUMNS = ["t", "label", "direction", "x", "y", "theta"]
CANARD_COLUMNS = [
    "t_entry",
    "t_exit",
    "duration",
    "origin",
    "exit",
    "kind",
    "x_exit",
    "y_exit",
    "theta_exit",
]
# Standard start on the section for sweeps and basin sampling.
STANDARD_POINT_Y = -0.7
BASIN_Y_RANGE = (-0.9, -0.1)


@dataclass(frozen=True)
class SectionPoint:
    """A point (theta, y) of the section x = 0; theta is stored reduced."""

    theta: float
    y: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.theta) and math.isfinite(self.y)):
            msg = f"Section point must be finite, got {(self.theta, self.y)}."
            raise InvalidStateError(msg)
        object.__setattr__(self, "theta", reduce_phase(float(self.theta)))
        object.__setattr__(self, "y", float(self.y))


def section_point_from_state(s: State) -> SectionPoint:
    return SectionPoint(s.theta, s.y)


def state_from_section_point(pt: SectionPoint) -> State:
    return State(0.0, pt.y, pt.theta)


@dataclass(frozen=True)
class TransitConfig:
    """Thresholds of the transit event set.

    Attributes:
        fold_band: Fold crossings count only while |residual| is below this.
        canard_time: Slow time between entering |x| < 1 at a fold and first
            leaving it above which the visit counts as a canard.
        jump_scale: The jump threshold is jump_scale * sqrt(eps).
        tangency_tol: Minimum |dx/dt| at an accepted section crossing.
        t_max: Longest transit before giving up.
    """

    fold_band: float = 1.25
    canard_time: float = 0.05
    jump_scale: float = 10.0
    tangency_tol: float = 1e-8
    t_max: float = 50.0

    def __post_init__(self) -> None:
        for name in ("fold_band", "canard_time", "jump_scale", "tangency_tol", "t_max"):
            if not getattr(self, name) > 0:
                msg = f"{name} must be positive, got {getattr(self, name)}."
                raise ConfigError(msg)

    def jump_threshold(self, eps: float) -> float:
        return self.jump_scale * math.sqrt(eps)


@dataclass(frozen=True)
class TransitRecord:
    """What happened between two section crossings.

    Attributes:
        transit_time: Time from the start to the section crossing.
        labels: Event labels in time order, with a "canard" entry after the
            fold crossing that starts each canard.
        canard: Whether the transit contains a canard.
        theta_in: Starting phase.
        theta_out: Phase at the section crossing.
        events: The full event log (columns t, label, direction, x, y, theta).
        canards: One row per canard (see `canard_segments`).
    """

    transit_time: float
    labels: tuple[str, ...]
    canard: bool
    theta_in: float
    theta_out: float
    events: pd.DataFrame = field(repr=False, compare=False)
    canards: pd.DataFrame = field(repr=False, compare=False)

    @property
    def n_wraps(self) -> int:
        return self.labels.count("wrap")

    def count(self, label: str) -> int:
        return self.labels.count(label)


def fvdp_events(p: Params, transit: TransitConfig, section: bool = True) -> list[EventSpec]:
    """The transit event set."""
    delta = transit.jump_threshold(p.eps)
    band = transit.fold_band

    def near_c(_t: float, u: np.ndarray) -> bool:
        return abs(critical_residual(u[0], u[1])) < band

    events = [
        theta_wrap_event(2),
        EventSpec(lambda _t, u: u[0] - 1.0, "fold+", guard=near_c),
        EventSpec(lambda _t, u: u[0] + 1.0, "fold-", guard=near_c),
        EventSpec(lambda _t, u: critical_residual(u[0], u[1]), "C"),
        EventSpec(
            lambda _t, u: critical_residual(u[0], u[1]) ** 2 - delta**2, "jump", "rising"
        ),
    ]
    if section:
        events.append(EventSpec(lambda _t, u: u[0], "section", "falling", terminal=True))
    return events


def _entry(row: pd.Series) -> Optional[int]:
    """The fold (+1 or -1) through which an event enters |x| < 1, if any."""
    if row["label"] == "fold+" and row["direction"] < 0:
        return 1
    if row["label"] == "fold-" and row["direction"] > 0:
        return -1
    return None


def _exit(row: pd.Series) -> Optional[int]:
    """The side (+1 or -1) toward which an event leaves |x| < 1, if any.

    A jump leaves in the direction of its residual; the section is crossed
    with x decreasing.
    """
    if row["label"] == "fold+" and row["direction"] > 0:
        return 1
    if row["label"] in ("fold-", "section") and row["direction"] < 0:
        return -1
    if row["label"] == "jump":
        return 1 if critical_residual(row["x"], row["y"]) > 0 else -1
    return None


def canard_segments(events: pd.DataFrame, transit: TransitConfig) -> pd.DataFrame:
    """Find canards in an event log.

    A canard is a visit to the strip |x| < 1, entered at a fold, that lasts
    longer than `transit.canard_time` before the first exit from the strip.
    The exit is a jump or a slow crossing of a fold line out of the strip,
    whichever comes first. The visit is a dip if it leaves toward the sheet it
    came from and a slice otherwise. A jump from inside the strip to the sheet
    it came from crosses the fold line near C, so a dip usually ends at a fold
    crossing rather than at a jump event.

    Returns:
        A table with columns t_entry, t_exit, duration, origin, exit,
        kind, x_exit, y_exit, theta_exit.
    """
    rows = []
    entry = None
    for _, row in events.iterrows():
        fold = _entry(row)
        if fold is not None:
            if entry is None:
                entry = (row["t"], fold)
            continue
        exit_side = _exit(row)
        if exit_side is None or entry is None:
            continue
        t_entry, fold = entry
        entry = None
        duration = row["t"] - t_entry
        if duration <= transit.canard_time:
            continue
        rows.append(
            {
                "t_entry": t_entry,
                "t_exit": row["t"],
                "duration": duration,
                "origin": fold,
                "exit": exit_side,
                "kind": "dip" if exit_side == fold else "slice",
                "x_exit": row["x"],
                "y_exit": row["y"],
                "theta_exit": row["theta"],
            }
        )
    return pd.DataFrame(rows, columns=CANARD_COLUMNS)


def mark_canards(
    events: pd.DataFrame, transit: TransitConfig
) -> tuple[pd.DataFrame, pd.DataFrame]:
    """Insert a "canard" row right after each fold crossing that starts one.

    Returns:
        The marked event log and the canard table.
    """
    canards = canard_segments(events, transit)
    if canards.empty:
        return events, canards
    starts = set(canards["t_entry"])
    rows = []
    for _, row in events.iterrows():
        rows.append(row.to_dict())
        if _entry(row) is not None and row["t"] in starts:
            marker = row.to_dict()
            marker.update(label="canard", direction=0)
            rows.append(marker)
    return pd.DataFrame(rows, columns=EVENT_COLUMNS), canards


def run_transit(
    s0: State,
    p: Params,
    cfg: IntegratorConfig = SWEEP,
    transit: TransitConfig = TransitConfig(),
    section: bool = True,
    t_max: Optional[float] = None,
) -> tuple[Trajectory, pd.DataFrame, pd.DataFrame]:
    """Integrate from s0 with the transit event set.

    Args:
        s0: The initial state.
        p: Parameters.
        cfg: Integrator settings.
        transit: Event thresholds.
        section: Whether to stop at the next section crossing.
        t_max: Time span. Optional, by default transit.t_max.

    Returns:
        The trajectory, the event log with canard markers, and the canard
        table.
    """
    p.require_positive_eps()
    vector_field = fvdp_vector_field(p)
    delta = transit.jump_threshold(p.eps)
    span = (0.0, transit.t_max if t_max is None else t_max)
    trajectory = integrate_with_events(
        vector_field, s0, fvdp_events(p, transit, section), span, cfg
    )
    events = trajectory.events[EVENT_COLUMNS]
    if span[1] > span[0] and abs(critical_residual(s0.x, s0.y)) >= delta:
        # Starting mid-jump.
        first = pd.DataFrame(
            [(0.0, "jump", 1, s0.x, s0.y, s0.theta)], columns=EVENT_COLUMNS
        )
        events = pd.concat([first, events], ignore_index=True) if len(events) else first
    marked, canards = mark_canards(events, transit)
    return trajectory, marked, canards


def return_map(
    pt: SectionPoint,
    p: Params,
    cfg: IntegratorConfig = SWEEP,
    transit: TransitConfig = TransitConfig(),
) -> tuple[SectionPoint, TransitRecord]:
    """Follow a section point to its next crossing of {x = 0, x decreasing}.

    Args:
        pt: The starting point; y < 0 so that x is decreasing there.
        p: Parameters, eps > 0.
        cfg: Integrator settings.
        transit: Event thresholds.

    Returns:
        The image point and the transit record.

    Raises:
        InvalidStateError: If pt.y >= 0.
        NoReturnError: If the section is not reached within transit.t_max.
        TangencyError: If the crossing is too close to tangential.
        StepBudgetExhausted: If the step budget runs out; the partial record
            is logged.
    """
    if not pt.y < 0:
        msg = f"x is not decreasing at the section point {pt}; y must be negative."
        raise InvalidStateError(msg)
    s0 = state_from_section_point(pt)
    try:
        trajectory, events, canards = run_transit(s0, p, cfg, transit)
    except StepBudgetExhausted as e:
        partial_events = e.partial.events if e.partial is not None else pd.DataFrame()
        logging.warning(
            "Step budget exhausted from %s; partial record: %s",
            pt,
            list(partial_events.get("label", [])),
        )
        raise
    if trajectory.termination != "event:section":
        msg = f"No return to the section from {pt} within t = {transit.t_max}."
        raise NoReturnError(msg)
    hit = trajectory.events.iloc[-1]
    dxdt = critical_residual(hit["x"], hit["y"]) / p.eps
    if abs(dxdt) <= transit.tangency_tol:
        msg = f"Tangential section crossing at t = {hit['t']!r} (dx/dt = {dxdt:.3g})."
        raise TangencyError(msg)
    image = SectionPoint(hit["theta"], hit["y"])
    labels = tuple(events["label"])
    record = TransitRecord(
        transit_time=float(hit["t"]),
        labels=labels,
        canard=not canards.empty,
        theta_in=pt.theta,
        theta_out=image.theta,
        events=events,
        canards=canards,
    )
    logging.debug("Return map %s -> %s after %.12g", pt, image, record.transit_time)
    return image, record


@dataclass
class MapIterates:
    """Successive images of a section point.

    Attributes:
        start: The starting point.
        points: The images, in order.
        records: One transit record per image.
        error: The error that stopped the iteration early, if any.
    """

    start: SectionPoint
    points: list[SectionPoint]
    records: list[TransitRecord]
    error: Optional[FvdpError] = None

    @property
    def count(self) -> int:
        return len(self.points)

    def frame(self, save: bool | str = False) -> pd.DataFrame:
        """The iterates as a table, one row per image."""
        df = pd.DataFrame(
            {
                "n": np.arange(1, self.count + 1),
                "theta": [pt.theta for pt in self.points],
                "y": [pt.y for pt in self.points],
                "transit_time": [r.transit_time for r in self.records],
                "n_wraps": [r.n_wraps for r in self.records],
                "canard": [r.canard for r in self.records],
            }
        )
        save_frame(df, save, "data/iterates.csv")
        return df


def iterate_map(
    pt: SectionPoint,
    n: int,
    p: Params,
    cfg: IntegratorConfig = SWEEP,
    transit: TransitConfig = TransitConfig(),
) -> MapIterates:
    """Apply the return map n times.

    Iteration stops early at the first numerical failure; the failure is kept
    in `error` and the images computed so far are returned.
    """
    if n < 1:
        msg = f"n must be at least 1, got {n}."
        raise ValueError(msg)
    result = MapIterates(start=pt, points=[], records=[])
    current = pt
    for _ in range(n):
        try:
            current, record = return_map(current, p, cfg, transit)
        except (NumericalError, InvalidStateError) as e:
            logging.warning("Map iteration stopped after %d images: %s", result.count, e)
            result.error = e
            break
        result.points.append(current)
        result.records.append(record)
    return result


@dataclass(frozen=True)
class PeriodVerdict:
    """Outcome of period detection.

    Attributes:
        status: "periodic", "aperiodic" or "inconclusive".
        map_period: Smallest q with iterate j+q within tol of iterate j.
        n_sub: Forcing periods per map period, omega times the summed
            transit times over one map period, rounded.
        n_wraps: Phase wraps over one map period.
        deviation: Largest distance between iterates j and j+map_period.
        cycle: The points of the detected cycle.
    """

    status: str
    map_period: Optional[int] = None
    n_sub: Optional[int] = None
    n_wraps: Optional[int] = None
    deviation: float = math.nan
    cycle: tuple[SectionPoint, ...] = ()

    @property
    def periodic(self) -> bool:
        return self.status == "periodic"


def _deviation(points: Sequence[SectionPoint], q: int) -> float:
    theta = np.array([pt.theta for pt in points])
    y = np.array([pt.y for pt in points])
    return float(np.max(circle_distance(theta[q:], theta[:-q], y[q:], y[:-q])))


def period_from_iterates(
    points: Sequence[SectionPoint],
    transit_times: Sequence[float],
    omega: float,
    tol: float = 1e-6,
    n_wraps: Optional[Sequence[int]] = None,
) -> PeriodVerdict:
    """Decide periodicity from a run of post-transient iterates.

    The map period is the smallest q <= len(points)/2 for which every iterate
    returns within tol of itself after q steps. A smaller q that misses by less
    than 2 tol, or no passing q with one missing by less than 2 tol, makes the
    verdict inconclusive.
    """
    n = len(points)
    if n < 2:
        msg = f"Need at least 2 iterates, got {n}."
        raise ValueError(msg)
    deviations = {q: _deviation(points, q) for q in range(1, n // 2 + 1)}
    passing = [q for q, dev in deviations.items() if dev <= tol]
    if not passing:
        if any(dev <= 2 * tol for dev in deviations.values()):
            return PeriodVerdict("inconclusive", deviation=min(deviations.values()))
        return PeriodVerdict("aperiodic", deviation=min(deviations.values()))
    q = passing[0]
    if any(tol < deviations[r] <= 2 * tol for r in range(1, q)):
        return PeriodVerdict("inconclusive", map_period=q, deviation=deviations[q])
    # Average the period time over all complete windows.
    times = np.asarray(transit_times, dtype=float)
    windows = [times[j : j + q].sum() for j in range(n - q + 1)]
    n_sub = int(round(omega * float(np.mean(windows))))
    wraps = int(sum(n_wraps[-q:])) if n_wraps is not None else None
    return PeriodVerdict(
        "periodic",
        map_period=q,
        n_sub=n_sub,
        n_wraps=wraps,
        deviation=deviations[q],
        cycle=tuple(points[-q:]),
    )


def detect_period(
    pt: SectionPoint,
    p: Params,
    cfg: IntegratorConfig = SWEEP,
    transit: TransitConfig = TransitConfig(),
    n_transient: int = 20,
    n_detect: int = 40,
    tol: float = 1e-6,
) -> PeriodVerdict:
    """Iterate the return map and decide whether the orbit is periodic.

    Args:
        pt: The starting point.
        p: Parameters.
        cfg: Integrator settings.
        transit: Event thresholds.
        n_transient: Iterates discarded first.
        n_detect: Iterates examined; periods up to n_detect/2 are detectable.
        tol: Matching distance in (theta, y), theta measured on the circle.

    Returns:
        The verdict.

    Raises:
        NumericalError: If an iterate fails.
    """
    if n_detect < 2:
        msg = f"n_detect must be at least 2, got {n_detect}."
        raise ValueError(msg)
    if n_transient < 0:
        msg = f"n_transient must be non-negative, got {n_transient}."
        raise ValueError(msg)
    start = pt
    if n_transient:
        settled = iterate_map(pt, n_transient, p, cfg, transit)
        if settled.error is not None:
            raise settled.error
        start = settled.points[-1]
    run = iterate_map(start, n_detect, p, cfg, transit)
    if run.error is not None:
        raise run.error
    verdict = period_from_iterates(
        run.points,
        [r.transit_time for r in run.records],
        p.omega,
        tol,
        [r.n_wraps for r in run.records],
    )
    if verdict.status == "inconclusive":
        logging.warning("Inconclusive period verdict from %s at %s", pt, p)
    else:
        logging.debug("Period verdict from %s: %s", pt, verdict.status)
    return verdict


def same_orbit(v1: PeriodVerdict, v2: PeriodVerdict, tol: float = 1e-5) -> bool:
    """Whether two periodic verdicts describe the same periodic orbit."""
    if not (v1.periodic and v2.periodic) or v1.map_period != v2.map_period:
        return False
    ref = v1.cycle[0]
    return any(
        circle_distance(ref.theta, other.theta, ref.y, other.y) <= tol for other in v2.cycle
    )


def distinct_orbits(verdicts: Sequence[PeriodVerdict], tol: float = 1e-5) -> list[PeriodVerdict]:
    """One representative per distinct periodic orbit, in order of first appearance."""
    found: list[PeriodVerdict] = []
    for verdict in verdicts:
        if verdict.periodic and not any(same_orbit(f, verdict, tol) for f in found):
            found.append(verdict)
    return found


def random_section_points(
    n_points: int, seed: int | Sequence[int], y_range: tuple[float, float] = BASIN_Y_RANGE
) -> list[SectionPoint]:
    """Uniform random section points, reproducible from the seed."""
    rng = np.random.default_rng(seed)
    theta = rng.uniform(0.0, 1.0, n_points)
    y = rng.uniform(y_range[0], y_range[1], n_points)
    return [SectionPoint(t, v) for t, v in zip(theta, y)]


def _verdict_or_error(
    pt: SectionPoint,
    p: Params,
    cfg: IntegratorConfig,
    transit: TransitConfig,
    n_transient: int,
    n_detect: int,
    tol: float,
) -> tuple[Optional[PeriodVerdict], str]:
    try:
        return detect_period(pt, p, cfg, transit, n_transient, n_detect, tol), ""
    except (NumericalError, InvalidStateError) as e:
        return None, f"{type(e).__name__}: {e}"


def basin_sample(
    p: Params = FIGURE_PARAMS,
    n_points: int = 20,
    seed: int = 0,
    cfg: IntegratorConfig = SWEEP,
    transit: TransitConfig = TransitConfig(),
    n_transient: int = 20,
    n_detect: int = 40,
    tol: float = 1e-6,
    jobs: int = 1,
    save: bool | str = False,
) -> pd.DataFrame:
    """Run period detection from seeded random section points.

    Returns:
        One row per start with columns start_theta, start_y, status,
        map_period, n_sub, theta, y, orbit (index of the distinct periodic
        orbit reached, -1 if none) and error.
    """
    starts = random_section_points(n_points, seed)
    work = partial(
        _verdict_or_error,
        p=p,
        cfg=cfg,
        transit=transit,
        n_transient=n_transient,
        n_detect=n_detect,
        tol=tol,
    )
    results = parallel_map(work, starts, jobs)
    orbits = distinct_orbits([v for v, _ in results if v is not None], tol=100 * tol)
    rows = []
    for start, (verdict, error) in zip(starts, results):
        orbit = -1
        if verdict is not None and verdict.periodic:
            orbit = next(i for i, o in enumerate(orbits) if same_orbit(o, verdict, 100 * tol))
        rows.append(
            {
                "start_theta": start.theta,
                "start_y": start.y,
                "status": verdict.status if verdict is not None else "error",
                "map_period": verdict.map_period if verdict is not None else None,
                "n_sub": verdict.n_sub if verdict is not None else None,
                "theta": verdict.cycle[0].theta if verdict and verdict.cycle else math.nan,
                "y": verdict.cycle[0].y if verdict and verdict.cycle else math.nan,
                "orbit": orbit,
                "error": error,
            }
        )
    df = pd.DataFrame(rows)
    logging.info("Basin sample: %d starts, %d distinct periodic orbits", n_points, len(orbits))
    save_frame(df, save, "data/basin_sample.csv")
    return df
