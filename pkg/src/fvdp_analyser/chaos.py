"""Canard divergence and horseshoe evidence.

Nearby trajectories that follow a canard along the repelling sheet leave it
in opposite fast directions: a dip jumps back to the sheet it came from, a
slice jumps across to the other one. Images of the edges of a thin
quadrilateral on the section are stretched across it and folded back, the
picture of a horseshoe.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import partial
from typing import Optional

import numpy as np
import pandas as pd

from fvdp_analyser.errors import ConfigError, InvalidStateError, NumericalError
from fvdp_analyser.integrator import FIGURE, IntegratorConfig, integrate
from fvdp_analyser.model import Params, State, fvdp_vector_field
from fvdp_analyser.returnmap import (
    SectionPoint,
    TransitConfig,
    return_map,
    run_transit,
)
from fvdp_analyser.utils import parallel_map, phase_difference, save_frame

# Smallest area of a usable quadrilateral.
_MIN_AREA = 1e-15
# Image points further apart than this in theta get a sample in between.
REFINE_TOL = 1e-3
_MAX_REFINE_ROUNDS = 12
ASPECT_THRESHOLD = 100.0

IMAGE_COLUMNS = ["edge", "index", "s", "theta_in", "y_in", "theta", "y", "error"]


@dataclass(frozen=True)
class CanardOutcome:
    """How a trajectory leaves the first canard it follows.

    Attributes:
        kind: "dip", "slice" or "regular" (no canard).
        jump_state: The state where the canard leaves the strip |x| < 1, at
            jump onset or on a fold line.
        duration: Slow time spent in the strip before leaving it.
        exit_time: Time the canard leaves the strip, NaN if regular.
        labels: The full event label sequence of the transit.
        events: The event log.
    """

    kind: str
    jump_state: Optional[State]
    duration: float
    exit_time: float
    labels: tuple[str, ...]
    events: pd.DataFrame = field(repr=False, compare=False)

    def prefix(self, label: str = "canard") -> tuple[str, ...]:
        """Labels up to and including the first occurrence of `label`."""
        if label not in self.labels:
            return self.labels
        return self.labels[: self.labels.index(label) + 1]


def classify_canard(
    s0: State,
    p: Params,
    cfg: IntegratorConfig = FIGURE,
    transit: TransitConfig = TransitConfig(),
) -> CanardOutcome:
    """Follow s0 to the section and classify its first canard, if any.

    Args:
        s0: The initial state.
        p: Parameters, eps > 0.
        cfg: Integrator settings.
        transit: Event and canard thresholds.

    Returns:
        The outcome; kind "regular" when no canard is found.
    """
    _, events, canards = run_transit(s0, p, cfg, transit)
    labels = tuple(events["label"])
    if canards.empty:
        logging.debug("No canard from %s", s0)
        return CanardOutcome("regular", None, 0.0, math.nan, labels, events)
    first = canards.iloc[0]
    jump_state = State(first["x_exit"], first["y_exit"], first["theta_exit"])
    logging.debug("%s from %s after %.6g in the strip", first["kind"], s0, first["duration"])
    return CanardOutcome(
        first["kind"],
        jump_state,
        float(first["duration"]),
        float(first["t_exit"]),
        labels,
        events,
    )


@dataclass(frozen=True)
class DivergenceProfile:
    """Separation of two synchronized trajectories.

    Attributes:
        separation: Columns t and separation, the distance in (x, y, theta)
            with theta measured on the circle.
        first_exceed: First sampled time the separation exceeds 1, NaN if never.
        exit_time: The earlier canard exit of the two, NaN without canards.
        separation_at_exit: Separation at `exit_time`.
        outcomes: The two canard outcomes.
    """

    separation: pd.DataFrame
    first_exceed: float
    exit_time: float
    separation_at_exit: float
    outcomes: tuple[CanardOutcome, CanardOutcome] = field(repr=False)


def _separation(ua: np.ndarray, ub: np.ndarray) -> np.ndarray:
    d_theta = phase_difference(ua[2], ub[2])
    return np.sqrt((ua[0] - ub[0]) ** 2 + (ua[1] - ub[1]) ** 2 + d_theta**2)


def divergence_profile(
    s0a: State,
    s0b: State,
    p: Params,
    cfg: IntegratorConfig = FIGURE,
    transit: TransitConfig = TransitConfig(),
    n_samples: int = 2001,
) -> DivergenceProfile:
    """Measure how two nearby trajectories separate.

    Both are integrated over the longer of their two transits to the section
    and compared on a common time grid.
    """
    outcomes = (classify_canard(s0a, p, cfg, transit), classify_canard(s0b, p, cfg, transit))
    horizon = max(float(o.events["t"].iloc[-1]) if len(o.events) else 0.0 for o in outcomes)
    vector_field = fvdp_vector_field(p)
    trajectories = [integrate(vector_field, s, (0.0, horizon), cfg) for s in (s0a, s0b)]
    t = np.linspace(0.0, horizon, n_samples)
    if horizon > 0:
        ua, ub = (np.asarray(tr.solution(t), dtype=float) for tr in trajectories)
        separation = _separation(ua, ub)
    else:
        separation = np.full_like(t, float(_separation(s0a.as_array(), s0b.as_array())))
    df = pd.DataFrame({"t": t, "separation": separation})
    above = np.nonzero(separation > 1.0)[0]
    first_exceed = float(t[above[0]]) if len(above) else math.nan
    exit_times = [o.exit_time for o in outcomes if o.kind != "regular"]
    exit_time = min(exit_times) if exit_times else math.nan
    at_exit = math.nan
    if exit_times:
        ua, ub = (np.asarray(tr.solution(exit_time), dtype=float) for tr in trajectories)
        at_exit = float(_separation(ua, ub))
    return DivergenceProfile(df, first_exceed, exit_time, at_exit, outcomes)


@dataclass(frozen=True)
class Quadrilateral:
    """Four vertices (theta, y) on the section.

    The top edge runs from v0 to v1 and the bottom edge from v2 to v3, so the
    boundary in order is v0, v1, v3, v2.
    """

    v0: tuple[float, float]
    v1: tuple[float, float]
    v2: tuple[float, float]
    v3: tuple[float, float]

    def __post_init__(self) -> None:
        if not all(math.isfinite(c) for v in self.vertices for c in v):
            msg = f"Quadrilateral vertices must be finite, got {self.vertices}."
            raise InvalidStateError(msg)
        if self.area < _MIN_AREA:
            msg = f"Quadrilateral {self.vertices} has zero area."
            raise InvalidStateError(msg)

    @property
    def vertices(self) -> tuple[tuple[float, float], ...]:
        return (self.v0, self.v1, self.v2, self.v3)

    @property
    def boundary(self) -> np.ndarray:
        return np.array([self.v0, self.v1, self.v3, self.v2], dtype=float)

    @property
    def area(self) -> float:
        theta, y = self.boundary.T
        return 0.5 * abs(float(np.dot(theta, np.roll(y, -1)) - np.dot(y, np.roll(theta, -1))))

    @property
    def theta_min(self) -> float:
        return float(self.boundary[:, 0].min())

    @property
    def theta_max(self) -> float:
        return float(self.boundary[:, 0].max())

    @property
    def y_extent(self) -> float:
        return float(np.ptp(self.boundary[:, 1]))

    @property
    def theta_centre(self) -> float:
        return 0.5 * (self.theta_min + self.theta_max)

    def edge_point(self, edge: str, s: float) -> SectionPoint:
        start, end = (self.v0, self.v1) if edge == "top" else (self.v2, self.v3)
        return SectionPoint(
            start[0] + s * (end[0] - start[0]), start[1] + s * (end[1] - start[1])
        )

    def shifted(self, d_theta: float) -> Quadrilateral:
        return Quadrilateral(*((v[0] + d_theta, v[1]) for v in self.vertices))


# Folded across itself by the return map at FIGURE_PARAMS.
HORSESHOE_QUADRILATERAL = Quadrilateral(
    (0.4174, -0.67509216),
    (0.4274, -0.67657616),
    (0.41737, -0.675137708),
    (0.42737, -0.676621708),
)


def _map_sample(
    pt: SectionPoint, p: Params, cfg: IntegratorConfig, transit: TransitConfig
) -> tuple[float, float, str]:
    try:
        image, _ = return_map(pt, p, cfg, transit)
    except (NumericalError, InvalidStateError) as e:
        return math.nan, math.nan, f"{type(e).__name__}: {e}"
    return image.theta, image.y, ""


def _map_edge(
    q: Quadrilateral,
    edge: str,
    s_values: np.ndarray,
    work: partial,
    jobs: int,
) -> dict[float, tuple[float, float, str]]:
    results = parallel_map(work, [q.edge_point(edge, s) for s in s_values], jobs)
    return dict(zip((float(s) for s in s_values), results))


def edge_images(
    q: Quadrilateral,
    p: Params,
    n_samples: int = 200,
    cfg: IntegratorConfig = FIGURE,
    transit: TransitConfig = TransitConfig(),
    jobs: int = 1,
    refine_tol: float = REFINE_TOL,
    save: bool | str = False,
) -> pd.DataFrame:
    """Map the top and bottom edges of a quadrilateral through the return map.

    Each edge is sampled uniformly and refined where consecutive images lie
    more than `refine_tol` apart in theta. Image phases are unwrapped around
    the quadrilateral's centre.

    Returns:
        One row per sample with columns edge, index, s, theta_in, y_in,
        theta, y and error (empty when the sample mapped).
    """
    work = partial(_map_sample, p=p, cfg=cfg, transit=transit)
    frames = []
    for edge in ("top", "bottom"):
        logging.info("Mapping the %s edge with %d samples", edge, n_samples)
        results = _map_edge(q, edge, np.linspace(0.0, 1.0, n_samples), work, jobs)
        for _ in range(_MAX_REFINE_ROUNDS):
            s_sorted = sorted(results)
            midpoints = []
            for s_a, s_b in zip(s_sorted, s_sorted[1:]):
                theta_a, _, err_a = results[s_a]
                theta_b, _, err_b = results[s_b]
                if err_a or err_b:
                    continue
                if abs(float(phase_difference(theta_b, theta_a))) > refine_tol:
                    midpoints.append(0.5 * (s_a + s_b))
            if not midpoints:
                break
            logging.debug("Refining the %s edge with %d samples", edge, len(midpoints))
            results.update(_map_edge(q, edge, np.array(midpoints), work, jobs))
        rows = []
        for index, s in enumerate(sorted(results)):
            theta, y, error = results[s]
            pt = q.edge_point(edge, s)
            if not error:
                theta = q.theta_centre + float(phase_difference(theta, q.theta_centre))
            rows.append((edge, index, s, pt.theta, pt.y, theta, y, error))
        frames.append(pd.DataFrame(rows, columns=IMAGE_COLUMNS))
    df = pd.concat(frames, ignore_index=True)
    save_frame(df, save, "data/edge_images.csv")
    return df


def monotone_segments(values: np.ndarray, hysteresis: float = 1e-9) -> int:
    """Number of maximal monotone runs, ignoring reversals smaller than `hysteresis`."""
    values = np.asarray(values, dtype=float)
    if len(values) < 2:
        return len(values)
    segments = 1
    direction = 0
    extreme = values[0]
    for value in values[1:]:
        if direction == 0:
            if abs(value - extreme) > hysteresis:
                direction = 1 if value > extreme else -1
                extreme = value
            continue
        if (value - extreme) * direction > 0:
            extreme = value
        elif abs(value - extreme) > hysteresis:
            segments += 1
            direction = -direction
            extreme = value
    return segments


def image_aspect(images: pd.DataFrame) -> float:
    """theta extent over y extent of an image polyline."""
    ok = images[images["error"] == ""]
    y_extent = float(np.ptp(ok["y"].to_numpy())) if len(ok) else 0.0
    theta_extent = float(np.ptp(ok["theta"].to_numpy())) if len(ok) else 0.0
    return theta_extent / y_extent if y_extent > 0 else math.inf


@dataclass(frozen=True)
class HorseshoeReport:
    """Evidence that the return map folds a quadrilateral across itself.

    Attributes:
        quadrilateral: The quadrilateral.
        images: The sampled edge images (see `edge_images`).
        edges: One row per edge with columns edge, covers, fold_theta,
            fold_left, monotone_segments, theta_extent, y_extent, aspect.
        failures: (edge, index) of samples whose return failed.
        evidence: Every edge covers the quadrilateral in theta, folds to
            its left and has exactly two monotone segments, and no sample
            failed.
    """

    quadrilateral: Quadrilateral
    images: pd.DataFrame = field(repr=False)
    edges: pd.DataFrame
    failures: tuple[tuple[str, int], ...]
    evidence: bool

    @property
    def partial(self) -> bool:
        return bool(self.failures)

    @property
    def aspect_ok(self) -> bool:
        return bool((self.edges["aspect"] > ASPECT_THRESHOLD).all())


def _edge_summary(q: Quadrilateral, edge: str, images: pd.DataFrame) -> dict:
    ok = images[images["error"] == ""]
    theta = ok["theta"].to_numpy()
    if len(theta) == 0:
        return {
            "edge": edge,
            "covers": False,
            "fold_theta": math.nan,
            "fold_left": False,
            "monotone_segments": 0,
            "theta_extent": math.nan,
            "y_extent": math.nan,
            "aspect": math.nan,
        }
    fold_theta = float(theta.min())
    return {
        "edge": edge,
        "covers": bool(theta.min() <= q.theta_min and theta.max() >= q.theta_max),
        "fold_theta": fold_theta,
        "fold_left": bool(fold_theta < q.theta_min),
        "monotone_segments": monotone_segments(theta),
        "theta_extent": float(np.ptp(theta)),
        "y_extent": float(np.ptp(ok["y"].to_numpy())),
        "aspect": image_aspect(images),
    }


def horseshoe_check(
    q: Quadrilateral,
    p: Params,
    n_samples: int = 200,
    cfg: IntegratorConfig = FIGURE,
    transit: TransitConfig = TransitConfig(),
    jobs: int = 1,
) -> HorseshoeReport:
    """Check whether the return map stretches and folds a quadrilateral.

    Args:
        q: The quadrilateral.
        p: Parameters, eps > 0.
        n_samples: Uniform samples per edge before refinement, at least 100.
        cfg: Integrator settings.
        transit: Event thresholds.
        jobs: Worker processes for the edge samples.

    Returns:
        The report. Samples whose return fails are listed in `failures` and
        the rest of the report is computed without them.
    """
    if n_samples < 100:
        msg = f"n_samples must be at least 100, got {n_samples}."
        raise ConfigError(msg)
    images = edge_images(q, p, n_samples, cfg, transit, jobs)
    failed = images[images["error"] != ""]
    failures = tuple(zip(failed["edge"], failed["index"].astype(int)))
    for edge, index in failures:
        logging.warning("Return failed for %s edge sample %d", edge, index)
    edges = pd.DataFrame(
        [_edge_summary(q, edge, images[images["edge"] == edge]) for edge in ("top", "bottom")]
    )
    evidence = bool(
        not failures
        and edges["covers"].all()
        and edges["fold_left"].all()
        and (edges["monotone_segments"] == 2).all()
    )
    logging.info("Horseshoe evidence: %s", evidence)
    return HorseshoeReport(q, images, edges, failures, evidence)
