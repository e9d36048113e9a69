"""Canned event logs, section point sequences and small test fields."""
from __future__ import annotations

import math

import numpy as np
import pandas as pd

from fvdp_analyser.model import VectorField, critical_curve
from fvdp_analyser.returnmap import EVENT_COLUMNS, SectionPoint

CANARD_PAIR_THETA = (0.41732694, 0.41732695)
CANARD_X0 = 0.0
CANARD_Y0 = -0.6752


def _row(t, label, direction, x, y, theta):
    return (t, label, direction, x, y, theta)


def _off_sheet(x: float, residual: float) -> tuple[float, float]:
    """A point (x, y) with the given critical residual y + x - x**3/3."""
    return x, critical_curve(x) + residual


# A transit with a dip from S-, an ordinary fold visit at S+ and a slice from S+.
CANARD_LOG = pd.DataFrame(
    [
        _row(0.0, "jump", 1, 0.0, -0.6752, 0.4),
        _row(0.05, "C", 1, -2.0, 0.6667, 0.48),
        _row(0.6, "fold-", 1, -1.0, 0.6667, 0.9),
        _row(0.8, "jump", 1, *_off_sheet(-0.5, -0.4), 0.2),
        _row(1.4, "fold+", -1, 1.0, -0.6667, 0.1),
        _row(1.41, "jump", 1, *_off_sheet(0.99, -0.4), 0.115),
        _row(2.0, "fold+", 1, 1.0, -0.6667, 0.9),
        _row(2.5, "fold+", -1, 1.0, -0.6667, 0.65),
        _row(2.8, "jump", 1, *_off_sheet(0.2, -0.5), 0.1),
        _row(2.9, "section", -1, 0.0, -0.7, 0.25),
    ],
    columns=EVENT_COLUMNS,
)


def _canard_pair_prefix():
    # Shared history of the canard pair: an ordinary visit to S- and entry at S+.
    return [
        _row(0.0, "jump", 1, 0.0, -0.6752, 0.41732694),
        _row(0.3, "wrap", 1, -1.9, 0.08, 0.0),
        _row(0.8, "fold-", 1, -1.0, 0.6667, 0.62),
        _row(0.81, "jump", 1, *_off_sheet(-0.95, 0.4), 0.63),
        _row(1.2, "wrap", 1, 1.8, 0.1, 0.0),
        _row(1.9, "wrap", 1, 1.2, -0.5, 0.0),
        _row(2.1, "fold+", -1, 1.0, -0.6667, 0.58),
    ]


# Event logs shaped like the two starts of the canard pair at the figure
# parameters: after 0.1104 in the strip the slice jumps to S-, the dip returns
# to the x > 1 sheet through x = 1 and crosses it once more before jumping.
SLICE_LOG = pd.DataFrame(
    [
        *_canard_pair_prefix(),
        _row(2.2104, "jump", 1, *_off_sheet(0.5, -0.4), 0.75),
        _row(2.25, "section", -1, 0.0, -0.7, 0.8),
    ],
    columns=EVENT_COLUMNS,
)

DIP_LOG = pd.DataFrame(
    [
        *_canard_pair_prefix(),
        _row(2.2104, "fold+", 1, 1.0, -0.6666, 0.75),
        _row(2.4, "fold+", -1, 1.0, -0.6667, 0.03),
        _row(2.41, "jump", 1, *_off_sheet(0.9, -0.4), 0.05),
        _row(2.45, "section", -1, 0.0, -0.7, 0.1),
    ],
    columns=EVENT_COLUMNS,
)


# An event log without canards: every fold visit jumps straight away.
REGULAR_LOG = pd.DataFrame(
    [
        _row(0.0, "jump", 1, 0.0, -0.7, 0.1),
        _row(0.7, "fold-", 1, -1.0, 0.6667, 0.8),
        _row(0.7001, "jump", 1, *_off_sheet(-0.99, 0.4), 0.8),
        _row(1.5, "fold+", -1, 1.0, -0.6667, 0.3),
        _row(1.51, "jump", 1, *_off_sheet(0.98, -0.4), 0.31),
    ],
    columns=EVENT_COLUMNS,
)


def periodic_points(cycle: list[tuple[float, float]], n: int) -> list[SectionPoint]:
    """n iterates going round a fixed cycle of section points."""
    return [SectionPoint(*cycle[k % len(cycle)]) for k in range(n)]


def random_points(n: int, seed: int = 1) -> list[SectionPoint]:
    rng = np.random.default_rng(seed)
    return [SectionPoint(t, y) for t, y in zip(rng.uniform(0, 1, n), rng.uniform(-1, -0.1, n))]


def decay_field(rate: float = 1.0) -> VectorField:
    """u' = -rate u."""
    return VectorField(
        fun=lambda _t, u: -rate * u,
        names=("u",),
        jac=lambda _t, _u: np.array([[-rate]]),
    )


def harmonic_field() -> VectorField:
    """x' = v, v' = -x; from (1, 0) x crosses zero at pi/2 + k pi."""
    return VectorField(
        fun=lambda _t, u: np.array([u[1], -u[0]]),
        names=("x", "v"),
        jac=lambda _t, _u: np.array([[0.0, 1.0], [-1.0, 0.0]]),
    )


HARMONIC_ZEROS = [math.pi / 2 + k * math.pi for k in range(4)]
