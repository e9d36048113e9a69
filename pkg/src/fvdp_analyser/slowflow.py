"""The eps = 0 layer: desingularized slow flow, folded equilibria and hybrid flows.

On the critical manifold the slow flow, written in (x, theta) and rescaled by
(x**2 - 1), becomes the desingularized slow flow

    x' = -x + a sin(2 pi theta),   theta' = omega (x**2 - 1)

which is regular across the folds. The rescaling reverses the orientation on
the repelling sheet |x| < 1.
"""
from __future__ import annotations

import dataclasses
import enum
import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
import pandas as pd

from fvdp_analyser.errors import (
    ConfigError,
    InvalidStateError,
    NondeterminismError,
)
from fvdp_analyser.integrator import EventSpec, IntegratorConfig, integrate_with_events
from fvdp_analyser.model import (
    TWO_PI,
    Fold,
    Params,
    Side,
    State,
    VectorField,
    critical_curve,
    fvdp_slow_fast,
    jump_target,
    stable_branch_solve,
)
from fvdp_analyser.utils import phase_difference, reduce_phase, save_frame

# 2 * integral_1^2 (x^2 - 1)/x dx
SINGULAR_PERIOD = 3.0 - 2.0 * math.log(2.0)
# Distance in (y, theta) below which a fold point counts as a folded singularity.
SINGULARITY_TOL = 1e-8
_DETERMINANT_TOL = 1e-12
_RESIDUAL_TOL = 1e-9
# Offset along the stable eigenvector when leaving a folded saddle.
_CANARD_OFFSET = 1e-7
# Desingularized time per integration chunk.
_SIGMA_CHUNK = 50.0

HYBRID_CONFIG = IntegratorConfig(method="DOP853", rtol=1e-10, atol=1e-12, h_max=0.05)


class Sheet(str, enum.Enum):
    """Named sheets of the critical manifold."""

    ATTRACTING_POSITIVE = "attracting+"
    ATTRACTING_NEGATIVE = "attracting-"
    REPELLING = "repelling"

    @classmethod
    def of(cls, side: Side) -> Sheet:
        return cls.ATTRACTING_POSITIVE if side is Side.POSITIVE else cls.ATTRACTING_NEGATIVE


@dataclass(frozen=True)
class FoldedEquilibrium:
    """An equilibrium of the desingularized slow flow on a fold curve."""

    x: float
    theta: float
    eigenvalues: tuple[complex, ...] = ()
    kind: str = "unclassified"

    @property
    def y(self) -> float:
        return critical_curve(self.x)

    @property
    def fold(self) -> Fold:
        return Fold.PLUS if self.x > 0 else Fold.MINUS


@dataclass(frozen=True)
class CanardPolicy:
    """How the hybrid flow continues through a folded saddle.

    Attributes:
        s_max: Arc length in the (x, theta) plane followed on the repelling
            sheet before jumping.
        exits: Jump choice per canard, "dip" (back to the sheet the canard
            came from) or "slice" (to the opposite sheet), used in order and
            cyclically.
        capture: Distance in (y, theta) within which a trajectory is taken
            to follow the stable manifold of the folded saddle.
    """

    s_max: float
    exits: tuple[str, ...] = ("dip",)
    capture: float = SINGULARITY_TOL

    def __post_init__(self) -> None:
        if not self.s_max > 0:
            msg = f"s_max must be positive, got {self.s_max}."
            raise ConfigError(msg)
        if not self.exits or any(e not in ("dip", "slice") for e in self.exits):
            msg = f"exits must be a non-empty sequence of 'dip'/'slice', got {self.exits}."
            raise ConfigError(msg)
        if not self.capture > 0:
            msg = f"capture must be positive, got {self.capture}."
            raise ConfigError(msg)

    def exit_for(self, index: int) -> str:
        return self.exits[index % len(self.exits)]


@dataclass(frozen=True)
class SlowArc:
    """A piece of slow flow on one sheet; samples have columns t, x, y, theta."""

    sheet: Sheet
    samples: pd.DataFrame

    @property
    def start(self) -> State:
        row = self.samples.iloc[0]
        return State(row["x"], row["y"], row["theta"])

    @property
    def end(self) -> State:
        row = self.samples.iloc[-1]
        return State(row["x"], row["y"], row["theta"])

    @property
    def duration(self) -> float:
        return float(self.samples["t"].iloc[-1] - self.samples["t"].iloc[0])


@dataclass(frozen=True)
class JumpRecord:
    """An instantaneous fast jump; kind is "fold", "dip" or "slice"."""

    t: float
    start: State
    end: State
    kind: str


@dataclass
class HybridTrajectory:
    """Slow arcs and jumps of the singular limit, in order."""

    segments: list[Union[SlowArc, JumpRecord]]
    termination: str = "completed"

    @property
    def arcs(self) -> list[SlowArc]:
        return [s for s in self.segments if isinstance(s, SlowArc)]

    @property
    def jumps(self) -> list[JumpRecord]:
        return [s for s in self.segments if isinstance(s, JumpRecord)]

    def to_frame(self) -> pd.DataFrame:
        """All arc samples in one table with columns segment, sheet, t, x, y, theta."""
        frames = []
        for index, segment in enumerate(self.segments):
            if isinstance(segment, SlowArc):
                frame = segment.samples.copy()
                frame.insert(0, "sheet", segment.sheet.value)
                frame.insert(0, "segment", index)
                frames.append(frame)
        if not frames:
            return pd.DataFrame(columns=["segment", "sheet", "t", "x", "y", "theta"])
        return pd.concat(frames, ignore_index=True)

    def jumps_frame(self) -> pd.DataFrame:
        rows = [
            {
                "t": j.t,
                "kind": j.kind,
                "x_start": j.start.x,
                "x_end": j.end.x,
                "y": j.start.y,
                "theta": j.start.theta,
            }
            for j in self.jumps
        ]
        return pd.DataFrame(rows, columns=["t", "kind", "x_start", "x_end", "y", "theta"])


def desing_field(x: float, theta: float, p: Params) -> tuple[float, float]:
    """The desingularized slow flow (-x + a sin 2 pi theta, omega (x^2 - 1))."""
    return -x + p.a * math.sin(TWO_PI * theta), p.omega * (x * x - 1.0)


def desing_jacobian(x: float, theta: float, p: Params) -> np.ndarray:
    return np.array(
        [
            [-1.0, TWO_PI * p.a * math.cos(TWO_PI * theta)],
            [2.0 * p.omega * x, 0.0],
        ]
    )


def slow_field_xtheta(x: float, theta: float, p: Params) -> tuple[float, float]:
    """The slow flow on C in (x, theta) coordinates, defined away from the folds."""
    if abs(x) == 1.0:
        msg = "The slow flow is singular on the fold curves."
        raise InvalidStateError(msg)
    dx, _ = desing_field(x, theta, p)
    return dx / (x * x - 1.0), p.omega


def slow_field(y: float, theta: float, side: Side, p: Params) -> tuple[float, float]:
    """The slow flow d(y, theta)/dt = (-h(y, theta) + a sin 2 pi theta, omega) on a sheet."""
    x = stable_branch_solve(y, side)
    dy, dtheta = fvdp_slow_fast(p).slow(np.array([x]), np.array([y, theta]))
    return float(dy), float(dtheta)


def printed_folded_phase(a: float) -> float:
    """The folded equilibrium phase sin^-1(1/(2 pi a)) in its printed form.

    Substituting it into the desingularized flow does not give an
    equilibrium; `folded_equilibria` uses arcsin(1/a)/(2 pi) instead. This is
    kept for the record.
    """
    return math.asin(1.0 / (TWO_PI * a))


def classify_folded(
    eq: FoldedEquilibrium, p: Params
) -> tuple[str, tuple[complex, ...]]:
    """Classify a folded equilibrium by the eigenvalues of its Jacobian.

    Returns:
        (kind, eigenvalues) with kind one of "saddle", "node", "focus",
        "degenerate", and the eigenvalues sorted by real part.
    """
    residual = p.a * math.sin(TWO_PI * eq.theta) - eq.x
    if abs(residual) > _RESIDUAL_TOL:
        msg = f"({eq.x}, {eq.theta}) is not a folded equilibrium (residual {residual:.3g})."
        raise InvalidStateError(msg)
    jac = desing_jacobian(eq.x, eq.theta, p)
    det = float(np.linalg.det(jac))
    # trace is -1
    discriminant = 1.0 - 4.0 * det
    if abs(det) < _DETERMINANT_TOL:
        kind = "degenerate"
    elif det < 0:
        kind = "saddle"
    elif discriminant >= 0:
        kind = "node"
    else:
        kind = "focus"
    eigenvalues = tuple(
        complex(v) for v in sorted(np.linalg.eigvals(jac), key=lambda v: (v.real, v.imag))
    )
    return kind, eigenvalues


def folded_equilibria(p: Params) -> list[FoldedEquilibrium]:
    """The folded equilibria x = +-1, a sin(2 pi theta) = x.

    There are four for |a| > 1, two degenerate ones for |a| = 1 and none for
    |a| < 1. The x = -1 pair is the x = +1 pair shifted by half a period.
    """
    a = p.a
    if abs(a) < 1.0:
        return []
    base = math.asin(1.0 / a) / TWO_PI
    if abs(a) == 1.0:
        phases_plus = [reduce_phase(base)]
    else:
        phases_plus = sorted({reduce_phase(base), reduce_phase(0.5 - base)})
    logging.debug(
        "Folded phase for a = %g: derived %.12g, printed %.12g",
        a,
        reduce_phase(base),
        printed_folded_phase(a),
    )
    equilibria = []
    for x, phases in ((1.0, phases_plus), (-1.0, [reduce_phase(t + 0.5) for t in phases_plus])):
        for theta in phases:
            raw = FoldedEquilibrium(x=x, theta=theta)
            kind, eigenvalues = classify_folded(raw, p)
            equilibria.append(dataclasses.replace(raw, kind=kind, eigenvalues=eigenvalues))
    return equilibria


def folded_equilibria_frame(p: Params, save: bool | str = False) -> pd.DataFrame:
    """Folded equilibria as a table, one row per equilibrium."""
    rows = [
        {
            "x": eq.x,
            "y": eq.y,
            "theta": eq.theta,
            "kind": eq.kind,
            "eigenvalue_1_real": eq.eigenvalues[0].real,
            "eigenvalue_1_imag": eq.eigenvalues[0].imag,
            "eigenvalue_2_real": eq.eigenvalues[1].real,
            "eigenvalue_2_imag": eq.eigenvalues[1].imag,
            "residual": p.a * math.sin(TWO_PI * eq.theta) - eq.x,
        }
        for eq in folded_equilibria(p)
    ]
    df = pd.DataFrame(
        rows,
        columns=[
            "x",
            "y",
            "theta",
            "kind",
            "eigenvalue_1_real",
            "eigenvalue_1_imag",
            "eigenvalue_2_real",
            "eigenvalue_2_imag",
            "residual",
        ],
    )
    save_frame(df, save, "data/folded_equilibria.csv")
    return df


def _arc_frame(t: np.ndarray, x: np.ndarray, theta: np.ndarray) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "t": t,
            "x": x,
            "y": x**3 / 3.0 - x,
            "theta": reduce_phase(np.asarray(theta, dtype=float)),
        }
    )


def singular_orbit_unforced(n_points: int = 201) -> tuple[HybridTrajectory, float]:
    """The closed singular orbit of the unforced system and its period.

    Two slow arcs on the attracting sheets joined by the horizontal jumps
    (1, -2/3) -> (-2, -2/3) and (-1, 2/3) -> (2, 2/3). Along a sheet
    dt = ((x^2 - 1)/x) dx, so each arc takes 3/2 - ln 2.

    Returns:
        The hybrid trajectory (theta is 0 throughout) and the period
        3 - 2 ln 2.
    """
    half = SINGULAR_PERIOD / 2.0
    x_plus = np.linspace(2.0, 1.0, n_points)
    t_plus = (2.0 - math.log(2.0)) - (x_plus**2 / 2.0 - np.log(x_plus))
    t_plus[0], t_plus[-1] = 0.0, half
    zeros = np.zeros(n_points)
    arc_plus = SlowArc(Sheet.ATTRACTING_POSITIVE, _arc_frame(t_plus, x_plus, zeros))
    arc_minus = SlowArc(
        Sheet.ATTRACTING_NEGATIVE, _arc_frame(half + t_plus, -x_plus, zeros)
    )
    segments: list[Union[SlowArc, JumpRecord]] = [
        arc_plus,
        JumpRecord(half, State(1.0, Fold.PLUS.y, 0.0), jump_target(Fold.PLUS, 0.0), "fold"),
        arc_minus,
        JumpRecord(
            SINGULAR_PERIOD,
            State(-1.0, Fold.MINUS.y, 0.0),
            jump_target(Fold.MINUS, 0.0),
            "fold",
        ),
    ]
    return HybridTrajectory(segments), SINGULAR_PERIOD


def _sheet_field(p: Params, orientation: float) -> VectorField:
    """Desingularized flow on a sheet, oriented along real time, with t and arc length.

    State is (x, theta, time, arc) and the independent variable is the
    desingularized time.
    """
    a, omega = p.a, p.omega

    def fun(_s: float, u: np.ndarray) -> np.ndarray:
        x, theta = u[0], u[1]
        dx = orientation * (-x + a * math.sin(TWO_PI * theta))
        dtheta = orientation * omega * (x * x - 1.0)
        return np.array([dx, dtheta, orientation * (x * x - 1.0), math.hypot(dx, dtheta)])

    return VectorField(fun=fun, names=("x", "theta", "time", "arc"), phase_index=1)


def _distance_to(eq: FoldedEquilibrium, capture: float):
    def distance(_s: float, u: np.ndarray) -> float:
        y = critical_curve(u[0])
        return math.hypot(y - eq.y, float(phase_difference(u[1], eq.theta))) - capture

    return distance


def _canard_start(eq: FoldedEquilibrium, p: Params) -> tuple[float, float]:
    """Leave a folded saddle along the repelling half of its stable manifold."""
    values, vectors = np.linalg.eig(desing_jacobian(eq.x, eq.theta, p))
    stable = vectors[:, int(np.argmin(values.real))].real
    if abs(stable[0]) < 1e-12:
        msg = f"Stable direction of the folded saddle at theta = {eq.theta} is tangent to the fold."
        raise NondeterminismError(msg)
    # Point into the strip |x| < 1.
    if np.sign(stable[0]) == np.sign(eq.x):
        stable = -stable
    stable = stable / np.linalg.norm(stable)
    return eq.x + _CANARD_OFFSET * stable[0], eq.theta + _CANARD_OFFSET * stable[1]


def _through_singularity(
    eq: FoldedEquilibrium, p: Params, canard_policy: Optional[CanardPolicy]
) -> tuple[float, float]:
    if canard_policy is None:
        msg = (
            f"Reached the folded {eq.kind} at (x, theta) = ({eq.x}, {eq.theta:.12g}) "
            "and no canard policy was given; the continuation is not determined."
        )
        raise NondeterminismError(msg)
    if eq.kind != "saddle":
        msg = f"Canard continuation is only defined through folded saddles, got a {eq.kind}."
        raise NondeterminismError(msg)
    logging.debug("Canard through the folded saddle at (%g, %.12g)", eq.x, eq.theta)
    return _canard_start(eq, p)


def _attracting_events(
    fold: Fold, equilibria: list[FoldedEquilibrium], capture: float, t_max: float
) -> list[EventSpec]:
    events = [
        EventSpec(
            lambda _s, u: u[0] - fold.x,
            "fold",
            "falling" if fold is Fold.PLUS else "rising",
            terminal=True,
        ),
        EventSpec(lambda _s, u: u[2] - t_max, "t_max", "rising", terminal=True),
    ]
    events.extend(
        EventSpec(_distance_to(eq, capture), f"singular:{i}", "falling", terminal=True)
        for i, eq in enumerate(equilibria)
        if eq.fold is fold
    )
    return events


def _repelling_events(arc_left: float, t_max: float) -> list[EventSpec]:
    return [
        EventSpec(lambda _s, u: u[3] - arc_left, "arc", "rising", terminal=True),
        EventSpec(lambda _s, u: u[0] - 1.0, "fold+", "rising", terminal=True),
        EventSpec(lambda _s, u: u[0] + 1.0, "fold-", "falling", terminal=True),
        EventSpec(lambda _s, u: u[2] - t_max, "t_max", "rising", terminal=True),
    ]


def hybrid_flow_forced(
    s0: State,
    p: Params,
    t_max: float,
    canard_policy: Optional[CanardPolicy] = None,
    cfg: IntegratorConfig = HYBRID_CONFIG,
    capture: Optional[float] = None,
) -> HybridTrajectory:
    """Follow the singular-limit hybrid flow of the forced system.

    On an attracting sheet the desingularized flow is integrated along real
    time until the trajectory reaches a fold. A generic fold point jumps along
    the fast fiber to the opposite sheet. Near a folded saddle, and only with
    a canard policy, the trajectory continues through the saddle onto the
    repelling sheet (where the desingularized direction is reversed) for
    `canard_policy.s_max` of arc length and then jumps to the sheet named by
    the policy.

    Args:
        s0: The initial state, on or near an attracting sheet (|x| > 1). It is
            projected along the fast fiber onto the sheet on its side.
        p: Parameters; eps is ignored.
        t_max: Slow time to follow.
        canard_policy: How to continue through folded saddles.
        cfg: Integrator settings for the slow arcs.
        capture: Distance to a folded singularity that counts as reaching it.
            Optional, by default the policy's capture or SINGULARITY_TOL.

    Returns:
        The hybrid trajectory.

    Raises:
        NondeterminismError: On reaching a folded singularity without a
            canard policy, or a folded singularity that is not a saddle.
    """
    if abs(s0.x) <= 1.0:
        msg = f"The hybrid flow starts on an attracting sheet, got x = {s0.x}."
        raise InvalidStateError(msg)
    if capture is None:
        capture = canard_policy.capture if canard_policy is not None else SINGULARITY_TOL
    side = Side.POSITIVE if s0.x > 0 else Side.NEGATIVE
    x = stable_branch_solve(s0.y, side)
    if abs(x - s0.x) > 1e-9:
        logging.debug("Projected x = %.12g onto the sheet at x = %.12g", s0.x, x)
    theta, t = s0.theta, 0.0
    sheet = Sheet.of(side)
    equilibria = folded_equilibria(p)
    segments: list[Union[SlowArc, JumpRecord]] = []
    n_canards = 0
    arc_left = 0.0
    origin = side

    while True:
        if sheet is Sheet.REPELLING:
            field = _sheet_field(p, -1.0)
            events = _repelling_events(arc_left, t_max)
        else:
            side = Side.POSITIVE if sheet is Sheet.ATTRACTING_POSITIVE else Side.NEGATIVE
            fold = Fold.PLUS if side is Side.POSITIVE else Fold.MINUS
            field = _sheet_field(p, 1.0)
            events = _attracting_events(fold, equilibria, capture, t_max)
        traj = integrate_with_events(
            field, np.array([x, theta, t, 0.0]), events, (0.0, _SIGMA_CHUNK), cfg
        )
        end = traj.raw_state_at(traj.t_final)
        x, theta, t = float(end[0]), float(end[1]), float(end[2])
        arc = _arc_frame(
            traj.samples["time"].to_numpy(),
            traj.samples["x"].to_numpy(),
            traj.samples["theta"].to_numpy(),
        )
        label = traj.termination.removeprefix("event:")

        if label == "t_max":
            segments.append(SlowArc(sheet, arc))
            break

        if sheet is Sheet.REPELLING:
            segments.append(SlowArc(sheet, arc))
            arc_left -= float(end[3])
            if label == "arc":
                assert canard_policy is not None
                exit_kind = canard_policy.exit_for(n_canards)
                n_canards += 1
                y = critical_curve(x)
                target_side = origin if exit_kind == "dip" else Side(-origin.value)
                landing = State(stable_branch_solve(y, target_side), y, theta)
                segments.append(JumpRecord(t, State(x, y, theta), landing, exit_kind))
                x, sheet = landing.x, Sheet.of(target_side)
                logging.debug("Canard %s exit at t = %.12g", exit_kind, t)
            elif label in ("fold+", "fold-"):
                # Both slow flows point into the fold here, so the fast fiber
                # takes over.
                reached = Fold.PLUS if label == "fold+" else Fold.MINUS
                landing = jump_target(reached, theta)
                segments.append(
                    JumpRecord(t, State(reached.x, reached.y, theta), landing, "fold")
                )
                x, sheet = landing.x, Sheet.of(reached.landing_side)
            continue

        if label == "fold":
            x = fold.x
            arc.loc[arc.index[-1], ["x", "y"]] = [fold.x, fold.y]
            segments.append(SlowArc(sheet, arc))
            near = [
                eq
                for eq in equilibria
                if eq.fold is fold and abs(float(phase_difference(theta, eq.theta))) < capture
            ]
            if near:
                x, theta = _through_singularity(near[0], p, canard_policy)
                sheet, origin = Sheet.REPELLING, side
                assert canard_policy is not None
                arc_left = canard_policy.s_max
                continue
            landing = jump_target(fold, theta)
            segments.append(JumpRecord(t, State(fold.x, fold.y, theta), landing, "fold"))
            x, sheet = landing.x, Sheet.of(fold.landing_side)
            continue

        segments.append(SlowArc(sheet, arc))
        if label.startswith("singular:"):
            eq = equilibria[int(label.split(":")[1])]
            x, theta = _through_singularity(eq, p, canard_policy)
            sheet, origin = Sheet.REPELLING, side
            assert canard_policy is not None
            arc_left = canard_policy.s_max
    return HybridTrajectory(segments, "t_max")


def desing_phase_portrait(
    p: Params,
    seeds: Sequence[tuple[float, float]],
    s_span: tuple[float, float] = (0.0, 5.0),
    cfg: IntegratorConfig = HYBRID_CONFIG,
) -> pd.DataFrame:
    """Trajectories of the desingularized slow flow from a set of (x, theta) seeds.

    Returns:
        A table with columns seed, s, x, theta (theta reduced).
    """
    a, omega = p.a, p.omega

    def fun(_s: float, u: np.ndarray) -> np.ndarray:
        return np.array([-u[0] + a * math.sin(TWO_PI * u[1]), omega * (u[0] ** 2 - 1.0)])

    field = VectorField(fun=fun, names=("x", "theta"), phase_index=1)
    frames = []
    for index, (x0, theta0) in enumerate(seeds):
        traj = integrate_with_events(field, np.array([x0, theta0]), [], s_span, cfg)
        frame = traj.samples.rename(columns={"t": "s"})
        frame.insert(0, "seed", index)
        frames.append(frame)
    if not frames:
        return pd.DataFrame(columns=["seed", "s", "x", "theta"])
    return pd.concat(frames, ignore_index=True)
