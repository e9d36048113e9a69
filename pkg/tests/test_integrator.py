from __future__ import annotations

import math

import numpy as np
import pandas as pd
import pytest

from fvdp_analyser.errors import ConfigError, StepBudgetExhausted
from fvdp_analyser.integrator import (
    FIGURE,
    SWEEP,
    EventSpec,
    IntegratorConfig,
    integrate,
    integrate_with_events,
    theta_wrap_event,
)
from fvdp_analyser.model import State, fvdp_vector_field
from fvdp_analyser.utils import phase_difference

from .reference_fields import (
    CANARD_PAIR_THETA,
    CANARD_X0,
    CANARD_Y0,
    HARMONIC_ZEROS,
    decay_field,
    harmonic_field,
)


def test_config_validation():
    with pytest.raises(ConfigError):
        IntegratorConfig(rtol=0.0)
    with pytest.raises(ConfigError):
        IntegratorConfig(atol=(1e-12, -1.0))
    with pytest.raises(ConfigError):
        IntegratorConfig(h_init=1.0, h_max=0.1)
    with pytest.raises(ConfigError):
        IntegratorConfig(method="Euler")
    with pytest.raises(ConfigError):
        IntegratorConfig(max_steps=0)


def test_integrate_decay():
    trajectory = integrate(decay_field(), [1.0], (0.0, 1.0), FIGURE)
    assert trajectory.termination == "completed"
    assert set(trajectory.samples.columns) == {"t", "u"}
    assert trajectory.t_final == 1.0
    assert trajectory.final_state()[0] == pytest.approx(math.exp(-1.0), rel=1e-8)
    # Dense output between the steps.
    assert trajectory.state_at(0.5)[0] == pytest.approx(math.exp(-0.5), rel=1e-8)


def test_explicit_method_agrees():
    cfg = IntegratorConfig(method="DOP853")
    trajectory = integrate(decay_field(2.0), [1.0], (0.0, 1.0), cfg)
    assert trajectory.final_state()[0] == pytest.approx(math.exp(-2.0), rel=1e-8)


def test_empty_span():
    trajectory = integrate(decay_field(), [1.0], (0.5, 0.5))
    assert trajectory.termination == "empty"
    assert len(trajectory.samples) == 1
    assert trajectory.events.empty


def test_backwards_span():
    with pytest.raises(ConfigError):
        integrate(decay_field(), [1.0], (1.0, 0.0))


def test_events_are_located_and_ordered():
    events = [
        EventSpec(lambda _t, u: u[0], "down", "falling"),
        EventSpec(lambda _t, u: u[0], "up", "rising"),
    ]
    trajectory = integrate_with_events(harmonic_field(), [1.0, 0.0], events, (0.0, 12.0))
    assert trajectory.labels() == ["down", "up", "down", "up"]
    np.testing.assert_allclose(trajectory.events["t"], HARMONIC_ZEROS, atol=1e-9)
    assert list(trajectory.events["direction"]) == [-1, 1, -1, 1]
    assert set(trajectory.events.columns) == {"t", "label", "direction", "x", "v"}


def test_terminal_event_stops():
    events = [EventSpec(lambda _t, u: u[0], "zero", "rising", terminal=True)]
    trajectory = integrate_with_events(harmonic_field(), [1.0, 0.0], events, (0.0, 10.0))
    assert trajectory.termination == "event:zero"
    assert trajectory.t_final == pytest.approx(HARMONIC_ZEROS[1], abs=1e-9)
    assert trajectory.events["t"].iloc[-1] == trajectory.t_final


def test_guard_filters_events():
    events = [
        EventSpec(lambda _t, u: u[0], "zero", guard=lambda _t, u: u[1] > 0),
    ]
    trajectory = integrate_with_events(harmonic_field(), [1.0, 0.0], events, (0.0, 12.0))
    assert trajectory.labels() == ["zero", "zero"]
    np.testing.assert_allclose(trajectory.events["t"], HARMONIC_ZEROS[1::2], atol=1e-9)


def test_step_budget():
    cfg = IntegratorConfig(max_steps=3)
    with pytest.raises(StepBudgetExhausted) as info:
        integrate(decay_field(), [1.0], (0.0, 10.0), cfg)
    assert info.value.partial is not None
    assert len(info.value.partial.samples) == 4


def test_wrap_events_follow_the_forcing(figure_params):
    s0 = State(CANARD_X0, CANARD_Y0, CANARD_PAIR_THETA[0])
    trajectory = integrate_with_events(
        fvdp_vector_field(figure_params), s0, [theta_wrap_event()], (0.0, 1.5), SWEEP
    )
    expected = [(k - s0.theta) / figure_params.omega for k in (1, 2)]
    np.testing.assert_allclose(trajectory.events["t"], expected, atol=1e-9)
    assert trajectory.samples["theta"].between(0.0, 1.0, inclusive="left").all()


def test_event_log_is_deterministic():
    events = [EventSpec(lambda _t, u: u[0], "zero")]
    runs = [
        integrate_with_events(harmonic_field(), [1.0, 0.0], events, (0.0, 12.0))
        for _ in range(2)
    ]
    pd.testing.assert_frame_equal(runs[0].events, runs[1].events, check_exact=True)


def test_theta_is_exact_over_long_runs(sweep_params):
    s0 = State(CANARD_X0, CANARD_Y0, CANARD_PAIR_THETA[0])
    cfg = IntegratorConfig(rtol=1e-8, atol=1e-10)
    trajectory = integrate(fvdp_vector_field(sweep_params), s0, (0.0, 50.0), cfg)
    assert trajectory.t_final == 50.0
    t = trajectory.samples["t"].to_numpy()
    expected = s0.theta + sweep_params.omega * t
    drift = phase_difference(trajectory.samples["theta"].to_numpy(), expected)
    assert np.abs(drift).max() < 1e-9


@pytest.mark.parametrize("method", ["Radau", "DOP853"])
def test_error_shrinks_with_the_tolerance(method):
    # Tolerance proportionality: the end-state error roughly halves with the tolerance.
    errors = []
    for k in range(8):
        tol = 1e-5 / 2**k
        cfg = IntegratorConfig(rtol=tol, atol=tol, h_max=10.0, method=method)
        trajectory = integrate(harmonic_field(), [1.0, 0.0], (0.0, 20.0), cfg)
        exact = np.array([math.cos(20.0), -math.sin(20.0)])
        errors.append(float(np.linalg.norm(trajectory.final_state() - exact)))
    slope = np.polyfit(np.arange(8), np.log2(errors), 1)[0]
    assert -2.0 < slope < -0.5
