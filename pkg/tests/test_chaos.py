from __future__ import annotations

import math

import numpy as np
import pandas as pd
import pytest

from fvdp_analyser.chaos import (
    HORSESHOE_QUADRILATERAL,
    IMAGE_COLUMNS,
    CanardOutcome,
    Quadrilateral,
    classify_canard,
    divergence_profile,
    horseshoe_check,
    image_aspect,
    monotone_segments,
)
from fvdp_analyser.errors import ConfigError, InvalidStateError
from fvdp_analyser.integrator import SWEEP, IntegratorConfig
from fvdp_analyser.model import State

UNIT_SQUARE = Quadrilateral((0.0, 1.0), (1.0, 1.0), (0.0, 0.0), (1.0, 0.0))


def test_quadrilateral_geometry():
    assert UNIT_SQUARE.area == pytest.approx(1.0)
    assert (UNIT_SQUARE.theta_min, UNIT_SQUARE.theta_max) == (0.0, 1.0)
    assert UNIT_SQUARE.y_extent == 1.0
    assert UNIT_SQUARE.theta_centre == 0.5
    top = UNIT_SQUARE.edge_point("top", 0.25)
    bottom = UNIT_SQUARE.edge_point("bottom", 0.75)
    assert (top.theta, top.y) == (0.25, 1.0)
    assert (bottom.theta, bottom.y) == (0.75, 0.0)


def test_quadrilateral_shift():
    shifted = UNIT_SQUARE.shifted(0.25)
    assert shifted.v0 == (0.25, 1.0)
    assert shifted.area == pytest.approx(UNIT_SQUARE.area)


def test_degenerate_quadrilateral():
    with pytest.raises(InvalidStateError):
        Quadrilateral((0.0, 0.0), (1.0, 1.0), (0.5, 0.5), (2.0, 2.0))
    with pytest.raises(InvalidStateError):
        Quadrilateral((0.0, math.nan), (1.0, 1.0), (0.0, 0.0), (1.0, 0.0))


def test_figure_quadrilateral():
    q = HORSESHOE_QUADRILATERAL
    assert q.area > 0
    assert q.theta_min == 0.4174
    assert q.theta_max == 0.42737
    # Thin: much wider in theta than in y.
    assert (q.theta_max - q.theta_min) / q.y_extent > 5
    for edge in ("top", "bottom"):
        assert q.edge_point(edge, 0.5).y < 0


def test_monotone_segments():
    assert monotone_segments(np.array([0.0, 1.0, 2.0, 3.0])) == 1
    assert monotone_segments(np.array([0.0, 1.0, 2.0, 1.0, 0.0])) == 2
    assert monotone_segments(np.array([0.0, 1.0, 0.0, 1.0])) == 3
    assert monotone_segments(np.array([3.0, 2.0, 1.0, 1.0 + 1e-12, 0.5])) == 1
    assert monotone_segments(np.array([1.0])) == 1


def test_image_aspect():
    images = pd.DataFrame(
        [
            ("top", 0, 0.0, 0.0, 0.0, 0.0, -0.5, ""),
            ("top", 1, 0.5, 0.0, 0.0, 0.5, -0.501, ""),
            ("top", 2, 1.0, 0.0, 0.0, math.nan, math.nan, "NoReturnError: x"),
        ],
        columns=IMAGE_COLUMNS,
    )
    assert image_aspect(images) == pytest.approx(500.0)


def test_horseshoe_check_needs_samples(figure_params):
    with pytest.raises(ConfigError):
        horseshoe_check(HORSESHOE_QUADRILATERAL, figure_params, n_samples=50)


def test_canard_outcome_prefix():
    outcome = CanardOutcome(
        "slice",
        None,
        0.1,
        1.0,
        ("jump", "fold+", "canard", "jump", "section"),
        pd.DataFrame(),
    )
    assert outcome.prefix() == ("jump", "fold+", "canard")
    assert outcome.prefix("wrap") == outcome.labels


def test_divergence_profile_is_symmetric(sweep_params):
    a, b = State(0.0, -0.7, 0.1), State(0.0, -0.7, 0.1 + 1e-6)
    forward = divergence_profile(a, b, sweep_params, SWEEP, n_samples=201)
    backward = divergence_profile(b, a, sweep_params, SWEEP, n_samples=201)
    pd.testing.assert_frame_equal(forward.separation, backward.separation)
    assert forward.first_exceed == backward.first_exceed or (
        math.isnan(forward.first_exceed) and math.isnan(backward.first_exceed)
    )
    assert [o.kind for o in forward.outcomes] == [o.kind for o in backward.outcomes][::-1]
    assert forward.separation["separation"].iloc[0] == pytest.approx(1e-6)


def test_classify_canard_under_tolerance_refinement(sweep_params):
    s0 = State(0.0, -0.7, 0.1)
    coarse = classify_canard(s0, sweep_params, SWEEP)
    fine = classify_canard(s0, sweep_params, IntegratorConfig(rtol=1e-8, atol=1e-10))
    assert coarse.kind == fine.kind
    assert coarse.labels == fine.labels
