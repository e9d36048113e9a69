"""Adaptive integration with dense output and event location.

Steps are taken by scipy's one-step solver classes: `Radau` (implicit, order
5, L-stable, embedded error estimate, analytic Jacobian) by default, and
`DOP853` (explicit, order 8) as a cross-check. Driving the solver step by step
here, rather than through `solve_ivp`, lets the maximum step depend on the
state and gives control over how events are located and logged.
"""
from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Callable, Literal, Optional, Union

import numpy as np
import pandas as pd
from scipy.integrate import DOP853, OdeSolution, Radau
from scipy.optimize import brentq

from fvdp_analyser.errors import (
    ConfigError,
    EventLocationError,
    NonfiniteStateError,
    StepBudgetExhausted,
    StiffnessError,
)
from fvdp_analyser.model import State, VectorField
from fvdp_analyser.utils import reduce_phase

Direction = Literal["rising", "falling", "any"]

_SOLVERS = {"Radau": Radau, "DOP853": DOP853}
_ROOT_XTOL = 1e-14


@dataclass(frozen=True)
class IntegratorConfig:
    """Tolerances and limits of an integration.

    Attributes:
        rtol: Relative tolerance.
        atol: Absolute tolerance, a scalar or one value per component.
        h_init: Initial step. Optional, by default chosen by the solver.
        h_max: Maximum step.
        max_steps: Step budget.
        method: "Radau" (implicit) or "DOP853" (explicit cross-check).
        cap_band: Range of |x| in which the maximum step is reduced.
        cap_factor: Reduction factor of the maximum step inside `cap_band`.
        event_tol: Required |e| at a located event.
    """

    rtol: float = 1e-10
    atol: Union[float, tuple[float, ...]] = 1e-12
    h_init: Optional[float] = None
    h_max: float = 0.05
    max_steps: int = 2_000_000
    method: str = "Radau"
    cap_band: tuple[float, float] = (0.9, 1.1)
    cap_factor: float = 100.0
    event_tol: float = 1e-10

    def __post_init__(self) -> None:
        if not 0 < self.rtol < 1:
            msg = f"rtol must lie in (0, 1), got {self.rtol}."
            raise ConfigError(msg)
        if np.any(np.asarray(self.atol, dtype=float) <= 0):
            msg = f"atol must be positive, got {self.atol}."
            raise ConfigError(msg)
        if not self.h_max > 0:
            msg = f"h_max must be positive, got {self.h_max}."
            raise ConfigError(msg)
        if self.h_init is not None and not 0 < self.h_init <= self.h_max:
            msg = f"h_init must lie in (0, h_max], got {self.h_init}."
            raise ConfigError(msg)
        if self.max_steps < 1:
            msg = f"max_steps must be at least 1, got {self.max_steps}."
            raise ConfigError(msg)
        if self.method not in _SOLVERS:
            msg = f"Unknown method {self.method!r}, expected one of {sorted(_SOLVERS)}."
            raise ConfigError(msg)
        if self.cap_factor < 1:
            msg = f"cap_factor must be at least 1, got {self.cap_factor}."
            raise ConfigError(msg)


# Figure reproduction and parameter sweeps.
FIGURE = IntegratorConfig()
SWEEP = IntegratorConfig(rtol=1e-7, atol=1e-9)


@dataclass(frozen=True)
class EventSpec:
    """An event function to be watched along a trajectory.

    Attributes:
        fun: e(t, u), continuous along trajectories. `u` is the raw integrated
            state, with any phase component unwrapped.
        label: The kind tag written to the event log.
        direction: Which sign changes count.
        terminal: Whether integration stops at the event.
        guard: Optional predicate on (t, u) at the located root; events failing
            it are located but not logged.
    """

    fun: Callable[[float, np.ndarray], float]
    label: str
    direction: Direction = "any"
    terminal: bool = False
    guard: Optional[Callable[[float, np.ndarray], bool]] = None


@dataclass
class Trajectory:
    """Time-stamped samples and an ordered event log.

    Attributes:
        samples: One row per accepted step, columns t and the field's component
            names. The phase component is reduced to [0, 1).
        events: One row per logged event, columns t, label, direction and the
            component names, in time order.
        termination: "completed", "empty" or "event:<label>".
        names: Component names.
        phase_index: Index of the phase component, if any.
        solution: Dense output over the whole span (unwrapped phase).
    """

    samples: pd.DataFrame
    events: pd.DataFrame
    termination: str
    names: tuple[str, ...]
    phase_index: Optional[int] = None
    solution: Optional[OdeSolution] = field(default=None, repr=False)

    @property
    def t_final(self) -> float:
        return float(self.samples["t"].iloc[-1])

    def raw_state_at(self, t: float) -> np.ndarray:
        """The state at time t from dense output, phase unwrapped."""
        if self.solution is None:
            return self.samples[list(self.names)].iloc[0].to_numpy(dtype=float)
        return np.asarray(self.solution(t), dtype=float)

    def state_at(self, t: float) -> np.ndarray:
        """The state at time t from dense output, phase reduced."""
        u = self.raw_state_at(t).copy()
        if self.phase_index is not None:
            u[self.phase_index] = reduce_phase(u[self.phase_index])
        return u

    def final_state(self) -> np.ndarray:
        return self.samples[list(self.names)].iloc[-1].to_numpy(dtype=float)

    def labels(self) -> list[str]:
        return list(self.events["label"])


def _initial_array(s0: State | Sequence[float] | np.ndarray) -> np.ndarray:
    if isinstance(s0, State):
        return s0.as_array()
    return np.array(s0, dtype=float)


def _crossed(g_old: float, g_new: float, direction: Direction) -> bool:
    rising = g_old < 0 <= g_new
    falling = g_old > 0 >= g_new
    if direction == "rising":
        return rising
    if direction == "falling":
        return falling
    return rising or falling


def _locate(
    event: EventSpec, sol: Callable[[float], np.ndarray], t0: float, t1: float, tol: float
) -> float:
    """Refine an event time inside [t0, t1] on the step's dense output."""

    def g(t: float) -> float:
        return float(event.fun(t, sol(t)))

    g0, g1 = g(t0), g(t1)
    if g0 == 0.0:
        return t0
    if g1 == 0.0 or g0 * g1 > 0:
        # The sign change sits at the step end within round-off.
        t_root = t1
    else:
        try:
            t_root = brentq(g, t0, t1, xtol=_ROOT_XTOL, rtol=4 * np.finfo(float).eps)
        except (ValueError, RuntimeError) as e:
            msg = f"Could not refine event {event.label!r} in [{t0!r}, {t1!r}]."
            raise EventLocationError(msg, (t0, t1)) from e
    if abs(g(t_root)) > tol:
        msg = (
            f"Event {event.label!r} refined to |e| = {abs(g(t_root)):.3g} > {tol:g} "
            f"in [{t0!r}, {t1!r}]."
        )
        raise EventLocationError(msg, (t0, t1))
    return t_root


def _max_step(field: VectorField, cfg: IntegratorConfig, u: np.ndarray) -> float:
    if field.fast_index is None:
        return cfg.h_max
    lo, hi = cfg.cap_band
    if lo <= abs(u[field.fast_index]) <= hi:
        return cfg.h_max / cfg.cap_factor
    return cfg.h_max


def _build(
    field: VectorField,
    ts: list[float],
    ys: list[np.ndarray],
    interpolants: list,
    records: list[tuple],
    termination: str,
) -> Trajectory:
    names = field.names
    values = np.array(ys, dtype=float).reshape(len(ys), len(names))
    if field.phase_index is not None:
        values[:, field.phase_index] = reduce_phase(values[:, field.phase_index])
    samples = pd.DataFrame(values, columns=list(names))
    samples.insert(0, "t", np.array(ts, dtype=float))
    events = pd.DataFrame(
        [(t, label, direction, *u) for t, label, direction, u in records],
        columns=["t", "label", "direction", *names],
    )
    if field.phase_index is not None and len(events):
        column = names[field.phase_index]
        events[column] = reduce_phase(events[column].to_numpy(dtype=float))
    events["direction"] = events["direction"].astype(int)
    solution = OdeSolution(ts, interpolants) if interpolants else None
    return Trajectory(
        samples=samples,
        events=events,
        termination=termination,
        names=names,
        phase_index=field.phase_index,
        solution=solution,
    )


def integrate_with_events(
    field: VectorField,
    s0: State | Sequence[float] | np.ndarray,
    events: Sequence[EventSpec],
    t_span: tuple[float, float],
    cfg: IntegratorConfig = FIGURE,
) -> Trajectory:
    """Integrate a field and log the events along the way.

    Every sign change of every event function between two accepted steps is
    refined on the step's dense output with Brent's method (bisection with
    secant and inverse quadratic steps) and logged in time order. Integration
    stops at the first terminal event.

    Args:
        field: The vector field.
        s0: The initial state.
        events: Event specifications.
        t_span: (t0, t1) with t1 >= t0. t1 == t0 gives the initial sample only.
        cfg: Tolerances and limits.

    Returns:
        The trajectory.

    Raises:
        StepBudgetExhausted: If cfg.max_steps steps do not reach t1. The
            partial trajectory is attached.
        StiffnessError: If the step size underflows.
        NonfiniteStateError: If the state becomes non-finite.
        EventLocationError: If an event cannot be refined.
    """
    t0, t1 = float(t_span[0]), float(t_span[1])
    if not t1 >= t0:
        msg = f"t_span must satisfy t1 >= t0, got {t_span}."
        raise ConfigError(msg)
    u0 = _initial_array(s0)
    if not np.all(np.isfinite(u0)):
        msg = f"Initial state {u0} is not finite."
        raise NonfiniteStateError(msg)
    ts: list[float] = [t0]
    ys: list[np.ndarray] = [u0]
    interpolants: list = []
    records: list[tuple] = []
    if t1 == t0:
        return _build(field, ts, ys, interpolants, records, "empty")

    solver_cls = _SOLVERS[cfg.method]
    options = {
        "rtol": cfg.rtol,
        "atol": cfg.atol,
        "max_step": _max_step(field, cfg, u0),
    }
    if cfg.h_init is not None:
        options["first_step"] = min(cfg.h_init, t1 - t0)
    if cfg.method == "Radau" and field.jac is not None:
        options["jac"] = field.jac
    solver = solver_cls(field.fun, t0, u0, t1, **options)

    g_old = [float(ev.fun(t0, u0)) for ev in events]
    termination = "completed"
    n_steps = 0
    while solver.status == "running":
        if n_steps >= cfg.max_steps:
            msg = (
                f"Step budget of {cfg.max_steps} exhausted at t = {ts[-1]!r} "
                f"(target {t1!r})."
            )
            partial = _build(field, ts, ys, interpolants, records, "budget")
            raise StepBudgetExhausted(msg, partial=partial)
        solver.max_step = _max_step(field, cfg, solver.y)
        message = solver.step()
        n_steps += 1
        if solver.status == "failed":
            msg = f"Integration failed at t = {solver.t!r}: {message}"
            partial = _build(field, ts, ys, interpolants, records, "failed")
            raise StiffnessError(msg, partial=partial)
        t_old, t_new, u_new = solver.t_old, solver.t, solver.y.copy()
        if not np.all(np.isfinite(u_new)):
            msg = f"State became non-finite at t = {t_new!r}."
            partial = _build(field, ts, ys, interpolants, records, "failed")
            raise NonfiniteStateError(msg, partial=partial)
        sol = solver.dense_output()

        g_new = [float(ev.fun(t_new, u_new)) for ev in events]
        hits = []
        for i, ev in enumerate(events):
            if _crossed(g_old[i], g_new[i], ev.direction):
                t_root = _locate(ev, sol, t_old, t_new, cfg.event_tol)
                hits.append((t_root, i, 1 if g_new[i] > g_old[i] else -1))
        g_old = g_new
        hits.sort(key=lambda hit: (hit[0], hit[1]))

        stop_at = None
        for t_root, i, direction in hits:
            ev = events[i]
            u_root = np.asarray(sol(t_root), dtype=float)
            if ev.guard is not None and not ev.guard(t_root, u_root):
                continue
            records.append((t_root, ev.label, direction, u_root))
            logging.debug("Event %s at t = %.17g", ev.label, t_root)
            if ev.terminal:
                stop_at = (t_root, u_root, ev.label)
                break

        interpolants.append(sol)
        if stop_at is not None:
            t_root, u_root, label = stop_at
            if t_root > ts[-1]:
                ts.append(t_root)
                ys.append(u_root)
            else:
                interpolants.pop()
            termination = f"event:{label}"
            break
        ts.append(t_new)
        ys.append(u_new)

    logging.debug(
        "Integrated %d steps over [%g, %g] with %s, %d events",
        n_steps,
        t0,
        ts[-1],
        cfg.method,
        len(records),
    )
    return _build(field, ts, ys, interpolants, records, termination)


def integrate(
    field: VectorField,
    s0: State | Sequence[float] | np.ndarray,
    t_span: tuple[float, float],
    cfg: IntegratorConfig = FIGURE,
) -> Trajectory:
    """Integrate a field over t_span without events. See `integrate_with_events`."""
    return integrate_with_events(field, s0, [], t_span, cfg)


def theta_wrap_event(phase_index: int = 2) -> EventSpec:
    """Fires whenever the unwrapped phase crosses an integer."""
    return EventSpec(
        fun=lambda _t, u: math.sin(math.pi * u[phase_index]), label="wrap"
    )
