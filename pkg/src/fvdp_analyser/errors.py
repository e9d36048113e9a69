"""Exceptions raised by fvdp-analyser.

Usage errors also subclass ValueError. Everything that goes wrong inside a
numerical computation subclasses NumericalError, which the command line maps
to its own exit code.
"""
from __future__ import annotations

from typing import Any


class FvdpError(Exception):
    """Base class for all fvdp-analyser errors."""


class InvalidStateError(FvdpError, ValueError):
    """A state has non-finite components."""


class InvalidParamsError(FvdpError, ValueError):
    """Parameters outside the supported range."""


class NoBranchError(FvdpError, ValueError):
    """The requested attracting branch of the critical manifold does not exist."""


class ConfigError(FvdpError, ValueError):
    """An invalid configuration value."""


class NumericalError(FvdpError):
    """A numerical computation failed."""


class IntegrationError(NumericalError):
    """The integrator could not complete the requested span."""

    def __init__(self, msg: str, partial: Any = None) -> None:
        super().__init__(msg)
        self.partial = partial


class StepBudgetExhausted(IntegrationError):
    """The step budget ran out; `partial` holds the trajectory so far."""


class StiffnessError(IntegrationError):
    """The step size underflowed."""


class NonfiniteStateError(IntegrationError):
    """The integrated state became non-finite."""


class EventLocationError(NumericalError):
    """Root refinement of an event function failed."""

    def __init__(self, msg: str, bracket: tuple[float, float]) -> None:
        super().__init__(msg)
        self.bracket = bracket


class NoReturnError(NumericalError):
    """No section crossing was found within the allowed transit time."""


class TangencyError(NumericalError):
    """A section crossing is tangential within tolerance."""


class ConvergenceError(NumericalError):
    """An iteration did not settle within its budget."""


class NondeterminismError(NumericalError):
    """The singular flow reached a folded singularity and no canard policy was given."""
