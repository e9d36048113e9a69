from __future__ import annotations

import math

import numpy as np
import pytest

from fvdp_analyser.errors import ConfigError, InvalidStateError, NondeterminismError
from fvdp_analyser.model import (
    Params,
    Side,
    State,
    critical_curve,
    critical_residual,
    fvdp_slow_fast,
)
from fvdp_analyser.slowflow import (
    SINGULAR_PERIOD,
    CanardPolicy,
    FoldedEquilibrium,
    JumpRecord,
    Sheet,
    SlowArc,
    classify_folded,
    desing_field,
    desing_phase_portrait,
    folded_equilibria,
    folded_equilibria_frame,
    hybrid_flow_forced,
    printed_folded_phase,
    slow_field,
    slow_field_xtheta,
    singular_orbit_unforced,
)

UNFORCED = Params(0.0, 1.0, 0.0)


def _saddle_phase(a: float) -> float:
    return math.asin(1.0 / a) / (2.0 * math.pi)


def test_singular_period_value():
    assert SINGULAR_PERIOD == pytest.approx(1.6137056388801094, abs=1e-15)


def test_singular_orbit_unforced():
    orbit, period = singular_orbit_unforced()
    assert period == SINGULAR_PERIOD
    assert [type(s) for s in orbit.segments] == [SlowArc, JumpRecord, SlowArc, JumpRecord]
    first, second = orbit.arcs
    assert first.sheet is Sheet.ATTRACTING_POSITIVE
    assert second.sheet is Sheet.ATTRACTING_NEGATIVE
    assert first.duration == pytest.approx(period / 2, abs=1e-15)
    assert second.duration == pytest.approx(period / 2, abs=1e-15)
    assert (first.start.x, first.end.x) == (2.0, 1.0)
    down, up = orbit.jumps
    assert (down.start.x, down.end.x) == pytest.approx((1.0, -2.0))
    assert (up.start.x, up.end.x) == pytest.approx((-1.0, 2.0))
    assert up.t == period
    # The arcs lie on the critical manifold.
    for arc in orbit.arcs:
        residual = arc.samples["y"] + arc.samples["x"] - arc.samples["x"] ** 3 / 3
        assert residual.abs().max() < 1e-14


def test_desing_flow_on_the_sheets(figure_params):
    dx, dtheta = desing_field(2.0, 0.25, figure_params)
    assert dx == pytest.approx(-2.0 + 1.1)
    assert dtheta == pytest.approx(1.505 * 3.0)
    # Dividing out x^2 - 1 recovers the slow flow on an attracting sheet.
    vx, vtheta = slow_field_xtheta(2.0, 0.25, figure_params)
    assert vx == pytest.approx(dx / 3.0)
    assert vtheta == figure_params.omega
    with pytest.raises(InvalidStateError):
        slow_field_xtheta(1.0, 0.25, figure_params)


def test_slow_field_in_y(figure_params):
    dy, dtheta = slow_field(2.0 / 3.0, 0.25, Side.POSITIVE, figure_params)
    assert dy == pytest.approx(-2.0 + 1.1)
    assert dtheta == 1.505
    # dy/dt = (x^2 - 1) dx/dt along the sheet.
    vx, _ = slow_field_xtheta(2.0, 0.25, figure_params)
    assert dy == pytest.approx(3.0 * vx)


def test_folded_equilibria(figure_params):
    equilibria = folded_equilibria(figure_params)
    assert len(equilibria) == 4
    base = _saddle_phase(figure_params.a)
    plus = [eq for eq in equilibria if eq.x == 1.0]
    minus = [eq for eq in equilibria if eq.x == -1.0]
    assert [eq.theta for eq in plus] == pytest.approx([base, 0.5 - base], abs=1e-14)
    assert [eq.theta for eq in minus] == pytest.approx([base + 0.5, 1.0 - base], abs=1e-14)
    assert [eq.kind for eq in plus] == ["saddle", "focus"]
    assert [eq.kind for eq in minus] == ["saddle", "focus"]
    for eq in equilibria:
        assert desing_field(eq.x, eq.theta, figure_params) == pytest.approx((0.0, 0.0), abs=1e-12)
        assert critical_residual(eq.x, eq.y) == pytest.approx(0.0, abs=1e-15)


def test_saddle_eigenvalues(figure_params):
    saddle = folded_equilibria(figure_params)[0]
    low, high = saddle.eigenvalues
    assert low.real < 0 < high.real
    assert low.real + high.real == pytest.approx(-1.0)


def test_folded_equilibria_degenerate_and_absent():
    assert folded_equilibria(Params(0.5, 1.505, 0.001)) == []
    degenerate = folded_equilibria(Params(1.0, 1.505, 0.001))
    assert [(eq.x, eq.kind) for eq in degenerate] == [(1.0, "degenerate"), (-1.0, "degenerate")]
    assert degenerate[0].theta == pytest.approx(0.25)


def test_printed_phase_is_not_an_equilibrium(figure_params):
    printed = printed_folded_phase(figure_params.a)
    assert printed == pytest.approx(math.asin(1.0 / (2.0 * math.pi * 1.1)))
    with pytest.raises(InvalidStateError):
        classify_folded(FoldedEquilibrium(1.0, printed), figure_params)


def test_folded_equilibria_frame(figure_params, tmp_path):
    path = tmp_path / "folded.csv"
    df = folded_equilibria_frame(figure_params, save=str(path))
    assert len(df) == 4
    assert set(df.columns) == {
        "x",
        "y",
        "theta",
        "kind",
        "eigenvalue_1_real",
        "eigenvalue_1_imag",
        "eigenvalue_2_real",
        "eigenvalue_2_imag",
        "residual",
    }
    assert df["residual"].abs().max() < 1e-12
    assert path.exists()
    assert folded_equilibria_frame(Params(0.5, 1.0, 0.0)).empty


def test_canard_policy():
    policy = CanardPolicy(0.1, ("dip", "slice"))
    assert [policy.exit_for(i) for i in range(3)] == ["dip", "slice", "dip"]
    with pytest.raises(ConfigError):
        CanardPolicy(0.0)
    with pytest.raises(ConfigError):
        CanardPolicy(0.1, ("sideways",))
    with pytest.raises(ConfigError):
        CanardPolicy(0.1, ())


def test_hybrid_flow_unforced_matches_singular_orbit():
    trajectory = hybrid_flow_forced(State(2.0, 2.0 / 3.0, 0.0), UNFORCED, 2.0)
    assert trajectory.termination == "t_max"
    jumps = trajectory.jumps
    assert [j.kind for j in jumps] == ["fold", "fold"]
    assert jumps[0].t == pytest.approx(SINGULAR_PERIOD / 2, abs=1e-8)
    assert jumps[1].t == pytest.approx(SINGULAR_PERIOD, abs=1e-8)
    assert jumps[0].end.x == pytest.approx(-2.0)
    assert jumps[1].end.x == pytest.approx(2.0)
    assert trajectory.arcs[-1].samples["t"].iloc[-1] == pytest.approx(2.0)
    frame = trajectory.to_frame()
    assert set(frame.columns) == {"segment", "sheet", "t", "x", "y", "theta"}
    assert set(trajectory.jumps_frame()["kind"]) == {"fold"}


def test_hybrid_flow_alternates_sheets(figure_params):
    trajectory = hybrid_flow_forced(State(2.0, 2.0 / 3.0, 0.0), figure_params, 6.0)
    sheets = [arc.sheet for arc in trajectory.arcs if arc.duration > 0]
    assert Sheet.REPELLING not in sheets
    for jump in trajectory.jumps:
        assert abs(jump.start.x) == 1.0
        assert abs(jump.end.x) == pytest.approx(2.0)
        assert np.sign(jump.end.x) == -np.sign(jump.start.x)


def test_hybrid_flow_needs_an_attracting_start(figure_params):
    with pytest.raises(InvalidStateError):
        hybrid_flow_forced(State(0.5, 0.0, 0.0), figure_params, 1.0)


def test_hybrid_flow_without_policy_at_a_singularity(figure_params):
    with pytest.raises(NondeterminismError):
        hybrid_flow_forced(State(2.0, 2.0 / 3.0, 0.0), figure_params, 10.0, capture=0.5)


def _start_on_saddle_stable_manifold(p: Params, offset: float) -> State:
    saddle = folded_equilibria(p)[0]
    values, vectors = np.linalg.eig(
        np.array(
            [
                [-1.0, 2.0 * math.pi * p.a * math.cos(2.0 * math.pi * saddle.theta)],
                [2.0 * p.omega, 0.0],
            ]
        )
    )
    stable = vectors[:, int(np.argmin(values))]
    stable = stable / stable[0]
    x = 1.0 + offset
    return State(x, critical_curve(x), saddle.theta + offset * stable[1])


@pytest.mark.parametrize(("exit_kind", "landing_sign"), [("dip", 1.0), ("slice", -1.0)])
def test_hybrid_flow_canard_exits(figure_params, exit_kind, landing_sign):
    s0 = _start_on_saddle_stable_manifold(figure_params, 1e-2)
    policy = CanardPolicy(0.05, (exit_kind,), capture=3e-3)
    trajectory = hybrid_flow_forced(s0, figure_params, 0.06, policy)
    assert trajectory.arcs[1].sheet is Sheet.REPELLING
    canard = trajectory.jumps[0]
    assert canard.kind == exit_kind
    assert abs(canard.start.x) < 1.0
    assert np.sign(canard.end.x) == landing_sign
    assert abs(canard.end.x) > 1.0


def test_desing_phase_portrait(figure_params):
    portrait = desing_phase_portrait(figure_params, [(2.0, 0.0), (-0.5, 0.5)], (0.0, 0.5))
    assert set(portrait.columns) == {"seed", "s", "x", "theta"}
    assert set(portrait["seed"]) == {0, 1}
    assert portrait["theta"].between(0.0, 1.0, inclusive="left").all()
    assert desing_phase_portrait(figure_params, []).empty


def test_eigenvalues_match_finite_differences(figure_params):
    h = 1e-6
    for eq in folded_equilibria(figure_params):
        jac = np.empty((2, 2))
        for column, (dx, dtheta) in enumerate(((h, 0.0), (0.0, h))):
            plus = desing_field(eq.x + dx, eq.theta + dtheta, figure_params)
            minus = desing_field(eq.x - dx, eq.theta - dtheta, figure_params)
            jac[:, column] = (np.array(plus) - np.array(minus)) / (2.0 * h)
        expected = sorted(np.linalg.eigvals(jac), key=lambda v: (v.real, v.imag))
        assert np.allclose(eq.eigenvalues, expected, atol=1e-6)


def test_desing_flow_reverses_orientation_in_the_strip(figure_params):
    rng = np.random.default_rng(3)
    x_values = rng.uniform(-3.0, 3.0, 1000)
    x_values = x_values[np.abs(np.abs(x_values) - 1.0) > 1e-3]
    spec = fvdp_slow_fast(figure_params)
    for x, theta in zip(x_values, rng.uniform(0.0, 1.0, len(x_values))):
        factor = x * x - 1.0
        vx, vtheta = slow_field_xtheta(x, theta, figure_params)
        dx, dtheta = desing_field(x, theta, figure_params)
        assert factor * vx == pytest.approx(dx, rel=1e-12, abs=1e-12)
        assert factor * vtheta == pytest.approx(dtheta, rel=1e-12, abs=1e-12)
        # dy/dt of the slow flow on C is (x^2 - 1) dx/dt.
        dy, _ = spec.slow(np.array([x]), np.array([critical_curve(x), theta]))
        assert factor * vx == pytest.approx(dy, rel=1e-10, abs=1e-12)
        # Time runs backwards in the strip and forwards on the sheets.
        assert (dtheta < 0) == (abs(x) < 1.0)
    assert len(x_values) > 990
