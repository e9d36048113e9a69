"""The forced van der Pol vector field and the geometry of its critical manifold.

The system is

    eps * dx/dt = y + x - x**3 / 3
          dy/dt = -x + a * sin(2 pi theta)
      dtheta/dt = omega

with theta on the circle R/Z. The critical manifold C is the zero set of the
fast equation, the cubic y = x**3/3 - x, with fold curves at x = +1, y = -2/3
and x = -1, y = +2/3.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from fvdp_analyser.errors import InvalidParamsError, InvalidStateError, NoBranchError
from fvdp_analyser.utils import reduce_phase

TWO_PI = 2.0 * math.pi
FOLD_Y = 2.0 / 3.0
# Smallest eps the integrator is trusted with.
MIN_SUPPORTED_EPS = 1e-4
# Newton polish steps after the closed form cubic root.
_NEWTON_STEPS = 4

ArrayFunction = Callable[[float, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Params:
    """Parameters (a, omega, eps) of the forced van der Pol field."""

    a: float
    omega: float
    eps: float

    def __post_init__(self) -> None:
        for name in ("a", "omega", "eps"):
            if not math.isfinite(getattr(self, name)):
                msg = f"Parameter {name} must be finite, got {getattr(self, name)}."
                raise InvalidParamsError(msg)
        if self.omega <= 0:
            msg = f"omega must be positive, got {self.omega}."
            raise InvalidParamsError(msg)
        if self.eps < 0:
            msg = f"eps must be non-negative, got {self.eps}."
            raise InvalidParamsError(msg)

    def require_positive_eps(self) -> None:
        if self.eps <= 0:
            msg = f"The full system needs eps > 0, got {self.eps}."
            raise InvalidParamsError(msg)


# Parameters of the two figures.
FIGURE_PARAMS = Params(a=1.1, omega=1.505, eps=0.001)


@dataclass(frozen=True)
class State:
    """A point (x, y, theta); theta is stored reduced to [0, 1)."""

    x: float
    y: float
    theta: float

    def __post_init__(self) -> None:
        if not all(math.isfinite(v) for v in (self.x, self.y, self.theta)):
            msg = f"State components must be finite, got {(self.x, self.y, self.theta)}."
            raise InvalidStateError(msg)
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        object.__setattr__(self, "theta", reduce_phase(float(self.theta)))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.theta])

    @classmethod
    def from_array(cls, values: np.ndarray) -> State:
        return cls(float(values[0]), float(values[1]), float(values[2]))


class Side(enum.Enum):
    """The two attracting sheets of C."""

    NEGATIVE = -1
    POSITIVE = 1


class Fold(enum.Enum):
    """The fold curves S+ (x=1, y=-2/3) and S- (x=-1, y=2/3)."""

    PLUS = 1
    MINUS = -1

    @property
    def x(self) -> float:
        return float(self.value)

    @property
    def y(self) -> float:
        return -self.value * FOLD_Y

    @property
    def landing_side(self) -> Side:
        return Side.NEGATIVE if self is Fold.PLUS else Side.POSITIVE


@dataclass(frozen=True)
class SlowFastSpec:
    """A slow-fast system eps u' = f(u, v), v' = g(u, v)."""

    k: int
    m: int
    fast: Callable[[np.ndarray, np.ndarray], np.ndarray]
    slow: Callable[[np.ndarray, np.ndarray], np.ndarray]

    def layer_field(self, v: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
        """The fast subsystem u' = f(u, v) with the slow variables frozen."""
        return lambda u: self.fast(u, v)


@dataclass(frozen=True)
class VectorField:
    """A right-hand side together with what the integrator needs to know about it.

    Attributes:
        fun: The right-hand side fun(t, u).
        names: Component names, used as column names of sampled trajectories.
        jac: Analytic Jacobian jac(t, u), if available.
        phase_index: Index of a component living on R/Z. It is integrated
            unwrapped and reduced when stored.
        fast_index: Index of the fast component, used for the step cap near
            the folds.
    """

    fun: ArrayFunction
    names: tuple[str, ...]
    jac: Optional[ArrayFunction] = None
    phase_index: Optional[int] = None
    fast_index: Optional[int] = None


def critical_residual(x: float, y: float) -> float:
    """y + x - x**3/3, zero exactly on the critical manifold."""
    return y + x - x**3 / 3.0


def critical_curve(x: float) -> float:
    """The y coordinate of C above x."""
    return x**3 / 3.0 - x


def is_attracting(x: float) -> bool:
    """Whether the sheet of C through x attracts in the fast direction."""
    return 1.0 - x * x < 0.0


def _check_finite(*values: float) -> None:
    if not all(math.isfinite(v) for v in values):
        msg = f"Non-finite state {values}."
        raise InvalidStateError(msg)


def fvdp_field(s: State, p: Params) -> tuple[float, float, float]:
    """Evaluate the forced van der Pol field at a state.

    Args:
        s: The state.
        p: Parameters, with eps > 0.

    Returns:
        (dx/dt, dy/dt, dtheta/dt).
    """
    p.require_positive_eps()
    _check_finite(s.x, s.y, s.theta)
    return (
        critical_residual(s.x, s.y) / p.eps,
        -s.x + p.a * math.sin(TWO_PI * s.theta),
        p.omega,
    )


def unforced_field(x: float, y: float, eps: float) -> tuple[float, float]:
    """The unforced van der Pol field (eps x' = y + x - x^3/3, y' = -x)."""
    if not eps > 0:
        msg = f"eps must be positive, got {eps}."
        raise InvalidParamsError(msg)
    _check_finite(x, y)
    return critical_residual(x, y) / eps, -x


def jacobian_fvdp(s: State, p: Params) -> np.ndarray:
    """Analytic Jacobian of the forced field with respect to (x, y, theta)."""
    p.require_positive_eps()
    return _fvdp_jacobian(s.x, s.theta, p)


def _fvdp_jacobian(x: float, theta: float, p: Params) -> np.ndarray:
    return np.array(
        [
            [(1.0 - x * x) / p.eps, 1.0 / p.eps, 0.0],
            [-1.0, 0.0, TWO_PI * p.a * math.cos(TWO_PI * theta)],
            [0.0, 0.0, 0.0],
        ]
    )


def fvdp_vector_field(p: Params) -> VectorField:
    """The forced field in the form the integrator takes."""
    if p.eps < MIN_SUPPORTED_EPS:
        msg = (
            f"eps = {p.eps} is below the supported range eps >= {MIN_SUPPORTED_EPS}."
        )
        raise InvalidParamsError(msg)
    a, omega, eps = p.a, p.omega, p.eps

    def fun(_t: float, u: np.ndarray) -> np.ndarray:
        x, y, theta = u
        return np.array(
            [(y + x - x**3 / 3.0) / eps, -x + a * math.sin(TWO_PI * theta), omega]
        )

    def jac(_t: float, u: np.ndarray) -> np.ndarray:
        return _fvdp_jacobian(u[0], u[2], p)

    return VectorField(
        fun=fun, names=("x", "y", "theta"), jac=jac, phase_index=2, fast_index=0
    )


def unforced_vector_field(eps: float) -> VectorField:
    """The unforced field in the form the integrator takes."""
    if not eps >= MIN_SUPPORTED_EPS:
        msg = f"eps = {eps} is below the supported range eps >= {MIN_SUPPORTED_EPS}."
        raise InvalidParamsError(msg)

    def fun(_t: float, u: np.ndarray) -> np.ndarray:
        x, y = u
        return np.array([(y + x - x**3 / 3.0) / eps, -x])

    def jac(_t: float, u: np.ndarray) -> np.ndarray:
        x = u[0]
        return np.array([[(1.0 - x * x) / eps, 1.0 / eps], [-1.0, 0.0]])

    return VectorField(fun=fun, names=("x", "y"), jac=jac, fast_index=0)


def fvdp_slow_fast(p: Params) -> SlowFastSpec:
    """The forced field written as a slow-fast system with u = x, v = (y, theta)."""

    def fast(u: np.ndarray, v: np.ndarray) -> np.ndarray:
        return np.array([critical_residual(u[0], v[0])])

    def slow(u: np.ndarray, v: np.ndarray) -> np.ndarray:
        return np.array([-u[0] + p.a * math.sin(TWO_PI * v[1]), p.omega])

    return SlowFastSpec(k=1, m=2, fast=fast, slow=slow)


def fold_curves() -> tuple[Fold, Fold]:
    """The fold curves (S+, S-); each is a point of the (x, y) plane times the circle."""
    return Fold.PLUS, Fold.MINUS


def _cubic_root(y: float, side: Side) -> float:
    """Closed form root of x**3 - 3x - 3y = 0 on the requested sheet."""
    s = 1.5 * y
    if side is Side.POSITIVE:
        if s <= 1.0:
            # Three real roots; k = 0 is the largest.
            return 2.0 * math.cos(math.acos(max(s, -1.0)) / 3.0)
        return 2.0 * math.cosh(math.acosh(s) / 3.0)
    if s >= -1.0:
        # The smallest of the three.
        return 2.0 * math.cos(math.acos(min(s, 1.0)) / 3.0 - 4.0 * math.pi / 3.0)
    return -2.0 * math.cosh(math.acosh(-s) / 3.0)


def stable_branch_solve(y: float, side: Side) -> float:
    """Solve y + x - x**3/3 = 0 for x on an attracting sheet.

    The positive sheet x >= 1 exists for y >= -2/3, the negative sheet
    x <= -1 for y <= 2/3. The fold value itself belongs to the sheet, and
    the double root +-1 is returned there.

    Args:
        y: The slow coordinate.
        side: Which sheet.

    Returns:
        The root x with |x| >= 1 on the requested side.

    Raises:
        NoBranchError: If y lies beyond the fold value of the sheet.
    """
    if not math.isfinite(y):
        msg = f"y must be finite, got {y}."
        raise InvalidStateError(msg)
    fold = Fold.PLUS if side is Side.POSITIVE else Fold.MINUS
    if side.value * (y - fold.y) < 0:
        msg = f"No {side.name.lower()} attracting branch at y = {y}; the fold is at y = {fold.y}."
        raise NoBranchError(msg)
    if y == fold.y:
        return fold.x
    x = _cubic_root(y, side)
    # Safeguarded Newton polish: keep the iterate on the sheet and only accept
    # steps that reduce the residual.
    for _ in range(_NEWTON_STEPS):
        residual = critical_residual(x, y)
        slope = 1.0 - x * x
        if residual == 0.0 or slope == 0.0:
            break
        candidate = x - residual / slope
        if side.value * candidate < 1.0:
            break
        if abs(critical_residual(candidate, y)) >= abs(residual):
            break
        x = candidate
    if side.value * x < 1.0:
        x = fold.x
    return x


def jump_target(fold: Fold, theta: float) -> State:
    """Where a jump from a fold point lands on the opposite attracting sheet.

    (y, theta) are preserved; x is the simple root of the cubic at the fold
    value of y, -2 from S+ and 2 from S-.
    """
    y = fold.y
    return State(stable_branch_solve(y, fold.landing_side), y, theta)
