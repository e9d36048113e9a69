"""Parameter studies: the unforced period against eps and the (a, omega) sweep."""
from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from functools import partial
from typing import Optional

import numpy as np
import pandas as pd
from scipy.integrate import quad

from fvdp_analyser.errors import ConvergenceError, FvdpError, InvalidParamsError
from fvdp_analyser.integrator import (
    FIGURE,
    SWEEP,
    EventSpec,
    IntegratorConfig,
    integrate_with_events,
)
from fvdp_analyser.model import Params, unforced_vector_field
from fvdp_analyser.returnmap import (
    STANDARD_POINT_Y,
    PeriodVerdict,
    SectionPoint,
    TransitConfig,
    detect_period,
    distinct_orbits,
    iterate_map,
    random_section_points,
)
from fvdp_analyser.slowflow import SINGULAR_PERIOD
from fvdp_analyser.utils import config_digest, parallel_map, save_frame

EPS_RANGE = (1e-4, 1.0)
SWEEP_COLUMNS = [
    "i",
    "j",
    "a",
    "omega",
    "status",
    "map_period",
    "n_sub",
    "n_attractors",
    "subharmonics",
    "coexisting",
    "odd",
    "mean_transit_time",
    "canard_fraction",
    "error",
]


def singular_period_quadrature() -> float:
    """2 * integral_1^2 (x^2 - 1)/x dx by adaptive quadrature."""
    value, _ = quad(lambda x: (x * x - 1.0) / x, 1.0, 2.0, epsabs=1e-14, epsrel=1e-14)
    return 2.0 * value


@dataclass(frozen=True)
class PeriodResult:
    """The relaxation oscillation period at one eps.

    Attributes:
        eps: The time scale ratio.
        period: Mean of the measured periods.
        singular_period: 3 - 2 ln 2.
        gap: period - singular_period.
        digest: Digest of the integrator configuration.
        periods: The averaged periods.
        half_period_asymmetry: Largest difference between the time from an
            upward to the next downward crossing of x = 0 and the time from
            that to the next upward crossing.
    """

    eps: float
    period: float
    singular_period: float
    gap: float
    digest: str
    periods: tuple[float, ...] = ()
    half_period_asymmetry: float = math.nan


def vdp_period(
    eps: float,
    cfg: IntegratorConfig = FIGURE,
    n_transient: int = 5,
    n_average: int = 3,
    rel_tol: float = 1e-6,
    max_periods: int = 50,
) -> PeriodResult:
    """Measure the period of the unforced relaxation oscillation.

    Integrates from (2, 0), skips `n_transient` upward crossings of x = 0 and
    averages `n_average` consecutive periods between upward crossings. If the
    periods in the window still differ by more than `rel_tol` relative to
    their mean, the window slides on, up to `max_periods` periods.

    Args:
        eps: The time scale ratio, in [1e-4, 1].
        cfg: Integrator settings.
        n_transient: Crossings discarded.
        n_average: Periods averaged.
        rel_tol: Convergence criterion on the window.
        max_periods: Budget of periods.

    Returns:
        The period result.

    Raises:
        InvalidParamsError: If eps is outside [1e-4, 1].
        ConvergenceError: If no window converges within the budget.
    """
    if not EPS_RANGE[0] <= eps <= EPS_RANGE[1]:
        msg = f"eps must lie in [{EPS_RANGE[0]}, {EPS_RANGE[1]}], got {eps}."
        raise InvalidParamsError(msg)
    field_ = unforced_vector_field(eps)
    events = [
        EventSpec(lambda _t, u: u[0], "up", "rising"),
        EventSpec(lambda _t, u: u[0], "down", "falling"),
    ]
    # The period is of order 1 for all supported eps.
    t_chunk = 10.0
    max_time = t_chunk * (max_periods + n_transient + 2)
    up: list[float] = []
    down: list[float] = []
    t, u = 0.0, np.array([2.0, 0.0])
    start = n_transient
    while True:
        needed = start + n_average + 1
        while len(up) < needed:
            if t >= max_time:
                msg = (
                    f"Only {len(up)} of {needed} upward crossings within t = {max_time} "
                    f"at eps = {eps}."
                )
                raise ConvergenceError(msg)
            trajectory = integrate_with_events(field_, u, events, (t, t + t_chunk), cfg)
            labels = trajectory.events["label"]
            up.extend(trajectory.events.loc[labels == "up", "t"])
            down.extend(trajectory.events.loc[labels == "down", "t"])
            t, u = trajectory.t_final, trajectory.final_state()
        window = np.diff(up[start:needed])
        mean = float(window.mean())
        if float(np.ptp(window)) <= rel_tol * mean:
            break
        logging.debug("Period window at crossing %d not settled, sliding on", start)
        start += 1
        if start > n_transient + max_periods:
            msg = f"Period did not settle to {rel_tol:g} within {max_periods} periods at eps = {eps}."
            raise ConvergenceError(msg)
    asymmetry = 0.0
    for k in range(start, needed - 1):
        later = [d for d in down if up[k] < d < up[k + 1]]
        if later:
            asymmetry = max(asymmetry, abs((later[0] - up[k]) - (up[k + 1] - later[0])))
    result = PeriodResult(
        eps=eps,
        period=mean,
        singular_period=SINGULAR_PERIOD,
        gap=mean - SINGULAR_PERIOD,
        digest=config_digest(cfg),
        periods=tuple(float(w) for w in window),
        half_period_asymmetry=asymmetry,
    )
    logging.debug("Period at eps = %g: %.12g (gap %.6g)", eps, result.period, result.gap)
    return result


def period_table(
    eps_values: Sequence[float],
    cfg: IntegratorConfig = FIGURE,
    save: bool | str = False,
) -> pd.DataFrame:
    """Measured period against eps.

    Returns:
        One row per eps with columns eps, period, singular_period, gap,
        half_period_asymmetry and digest.
    """
    rows = []
    for eps in eps_values:
        result = vdp_period(eps, cfg)
        rows.append(
            {
                "eps": result.eps,
                "period": result.period,
                "singular_period": result.singular_period,
                "gap": result.gap,
                "half_period_asymmetry": result.half_period_asymmetry,
                "digest": result.digest,
            }
        )
    df = pd.DataFrame(
        rows,
        columns=["eps", "period", "singular_period", "gap", "half_period_asymmetry", "digest"],
    )
    save_frame(df, save, "data/periods.csv")
    return df


@dataclass(frozen=True)
class SweepOptions:
    """What each sweep cell does.

    Attributes:
        eps: The time scale ratio.
        cfg: Integrator settings.
        transit: Event thresholds.
        settle_periods: Forcing periods discarded before detection.
        n_starts: Extra random section points per cell.
        n_detect: Iterates examined by period detection.
        tol: Period detection tolerance.
        seed: Seed of the random starts.
    """

    eps: float = 1e-2
    cfg: IntegratorConfig = SWEEP
    transit: TransitConfig = field(default_factory=TransitConfig)
    settle_periods: int = 20
    n_starts: int = 8
    n_detect: int = 40
    tol: float = 1e-6
    seed: int = 0


@dataclass(frozen=True)
class SweepCell:
    """The period verdict at one grid point.

    Attributes:
        i: Index along a.
        j: Index along omega.
        a: Forcing amplitude.
        omega: Forcing frequency.
        verdict: Verdict from the standard start.
        attractors: One verdict per distinct periodic orbit found from all
            starts.
        mean_transit_time: Mean transit time of the standard start's iterates.
        canard_fraction: Share of those iterates whose transit had a canard.
        error: Error message if the standard start failed.
    """

    i: int
    j: int
    a: float
    omega: float
    verdict: Optional[PeriodVerdict]
    attractors: tuple[PeriodVerdict, ...] = ()
    mean_transit_time: float = math.nan
    canard_fraction: float = math.nan
    error: str = ""

    @property
    def status(self) -> str:
        return self.verdict.status if self.verdict is not None else "error"

    @property
    def subharmonics(self) -> tuple[int, ...]:
        return tuple(sorted({v.n_sub for v in self.attractors if v.n_sub is not None}))

    @property
    def coexisting(self) -> bool:
        return len(self.attractors) >= 2

    @property
    def odd(self) -> bool:
        return all(n % 2 == 1 for n in self.subharmonics)


def _settle(pt: SectionPoint, p: Params, options: SweepOptions) -> SectionPoint:
    """Iterate until `settle_periods` forcing periods have passed."""
    elapsed = 0.0
    target = options.settle_periods / p.omega
    while elapsed < target:
        run = iterate_map(pt, 1, p, options.cfg, options.transit)
        if run.error is not None:
            raise run.error
        pt = run.points[-1]
        elapsed += run.records[-1].transit_time
    return pt


def _detect_from(
    pt: SectionPoint, p: Params, options: SweepOptions
) -> tuple[PeriodVerdict, SectionPoint]:
    settled = _settle(pt, p, options)
    verdict = detect_period(
        settled, p, options.cfg, options.transit, 0, options.n_detect, options.tol
    )
    return verdict, settled


def sweep_cell(cell: tuple[int, int, float, float], options: SweepOptions) -> SweepCell:
    """Run period detection at one grid point; errors are recorded, not raised."""
    i, j, a, omega = cell
    standard = SectionPoint(0.0, STANDARD_POINT_Y)
    try:
        p = Params(a, omega, options.eps)
        verdict, settled = _detect_from(standard, p, options)
        stats = iterate_map(settled, 5, p, options.cfg, options.transit)
    except FvdpError as e:
        logging.warning("Sweep cell (%g, %g) failed: %s", a, omega, e)
        return SweepCell(i, j, a, omega, None, error=f"{type(e).__name__}: {e}")
    verdicts = [verdict]
    for start in random_section_points(options.n_starts, [options.seed, i, j]):
        try:
            verdicts.append(_detect_from(start, p, options)[0])
        except FvdpError as e:
            logging.debug("Extra start %s at (%g, %g) failed: %s", start, a, omega, e)
    attractors = tuple(distinct_orbits(verdicts, tol=100 * options.tol))
    records = stats.records
    result = SweepCell(
        i,
        j,
        a,
        omega,
        verdict,
        attractors,
        mean_transit_time=float(np.mean([r.transit_time for r in records])) if records else math.nan,
        canard_fraction=float(np.mean([r.canard for r in records])) if records else math.nan,
    )
    if not result.odd:
        logging.warning("Even subharmonic at (a, omega) = (%g, %g): %s", a, omega, result.subharmonics)
    logging.info("Cell (%g, %g): %s %s", a, omega, result.status, result.subharmonics)
    return result


def sweep_cells(
    a_range: tuple[float, float],
    omega_range: tuple[float, float],
    grid_dims: tuple[int, int],
    options: SweepOptions = SweepOptions(),
    jobs: int = 1,
) -> list[SweepCell]:
    """Sweep cells in grid order (a index major)."""
    n_a, n_omega = grid_dims
    if n_a < 1 or n_omega < 1:
        msg = f"grid_dims must be at least 1x1, got {grid_dims}."
        raise InvalidParamsError(msg)
    a_values = np.linspace(a_range[0], a_range[1], n_a) if n_a > 1 else np.array([a_range[0]])
    omega_values = (
        np.linspace(omega_range[0], omega_range[1], n_omega)
        if n_omega > 1
        else np.array([omega_range[0]])
    )
    cells = [
        (i, j, float(a), float(omega))
        for i, a in enumerate(a_values)
        for j, omega in enumerate(omega_values)
    ]
    logging.info("Sweeping %d cells on %d workers", len(cells), jobs)
    return parallel_map(partial(sweep_cell, options=options), cells, jobs)


def sweep(
    a_range: tuple[float, float],
    omega_range: tuple[float, float],
    grid_dims: tuple[int, int],
    options: SweepOptions = SweepOptions(),
    jobs: int = 1,
    save: bool | str = False,
) -> pd.DataFrame:
    """Sweep the (a, omega) plane for periodic attractors.

    Each cell runs period detection from a standard section point and from
    `options.n_starts` seeded random points, after settling for
    `options.settle_periods` forcing periods.

    Args:
        a_range: (a_min, a_max).
        omega_range: (omega_min, omega_max).
        grid_dims: Number of grid points along a and omega.
        options: What each cell does.
        jobs: Worker processes.
        save: If True, save to "data/sweep.csv". If a string, save to that
            path.

    Returns:
        One row per cell in grid order with columns i, j, a, omega, status,
        map_period, n_sub, n_attractors, subharmonics, coexisting, odd,
        mean_transit_time, canard_fraction, error.
    """
    df = sweep_frame(sweep_cells(a_range, omega_range, grid_dims, options, jobs))
    save_frame(df, save, "data/sweep.csv")
    return df


def sweep_frame(cells: Sequence[SweepCell]) -> pd.DataFrame:
    """Sweep cells as a table, one row per cell."""
    return pd.DataFrame(
        [
            {
                "i": c.i,
                "j": c.j,
                "a": c.a,
                "omega": c.omega,
                "status": c.status,
                "map_period": c.verdict.map_period if c.verdict is not None else None,
                "n_sub": c.verdict.n_sub if c.verdict is not None else None,
                "n_attractors": len(c.attractors),
                "subharmonics": ";".join(str(n) for n in c.subharmonics),
                "coexisting": c.coexisting,
                "odd": c.odd,
                "mean_transit_time": c.mean_transit_time,
                "canard_fraction": c.canard_fraction,
                "error": c.error,
            }
            for c in cells
        ],
        columns=SWEEP_COLUMNS,
    )
