from __future__ import annotations

import math

import numpy as np
import pytest

from fvdp_analyser.errors import InvalidParamsError, InvalidStateError, NoBranchError
from fvdp_analyser.model import (
    Fold,
    Params,
    Side,
    State,
    critical_curve,
    critical_residual,
    fold_curves,
    fvdp_field,
    fvdp_slow_fast,
    fvdp_vector_field,
    is_attracting,
    jacobian_fvdp,
    jump_target,
    stable_branch_solve,
    unforced_field,
    unforced_vector_field,
)


def test_params_validation():
    with pytest.raises(InvalidParamsError):
        Params(1.1, 0.0, 0.001)
    with pytest.raises(InvalidParamsError):
        Params(1.1, 1.505, -0.001)
    with pytest.raises(InvalidParamsError):
        Params(math.nan, 1.505, 0.001)
    with pytest.raises(InvalidParamsError):
        Params(1.1, 1.505, 0.0).require_positive_eps()


def test_state_reduces_theta():
    assert State(0.0, 0.0, 1.25).theta == 0.25
    assert State(0.0, 0.0, -0.25).theta == 0.75
    assert State(0.0, 0.0, 1.0).theta == 0.0
    with pytest.raises(InvalidStateError):
        State(math.inf, 0.0, 0.0)


def test_critical_manifold():
    for x in (-2.0, -1.0, 0.3, 1.0, 2.5):
        assert critical_residual(x, critical_curve(x)) == pytest.approx(0.0, abs=1e-15)
    assert is_attracting(1.5)
    assert is_attracting(-1.5)
    assert not is_attracting(0.5)
    assert not is_attracting(1.0)


def test_folds():
    plus, minus = fold_curves()
    assert (plus.x, plus.y) == (1.0, -2.0 / 3.0)
    assert (minus.x, minus.y) == (-1.0, 2.0 / 3.0)
    assert critical_residual(plus.x, plus.y) == pytest.approx(0.0, abs=1e-15)
    assert plus.landing_side is Side.NEGATIVE
    assert minus.landing_side is Side.POSITIVE


def test_fvdp_field(figure_params):
    dx, dy, dtheta = fvdp_field(State(0.0, -0.6752, 0.25), figure_params)
    assert dx == pytest.approx(-0.6752 / 0.001)
    assert dy == pytest.approx(1.1)
    assert dtheta == 1.505
    with pytest.raises(InvalidParamsError):
        fvdp_field(State(0.0, 0.0, 0.0), Params(1.1, 1.505, 0.0))


def test_unforced_field():
    assert unforced_field(2.0, 2.0 / 3.0, 0.01) == pytest.approx((0.0, -2.0))
    with pytest.raises(InvalidParamsError):
        unforced_field(0.0, 0.0, 0.0)
    with pytest.raises(InvalidStateError):
        unforced_field(math.nan, 0.0, 0.01)


def test_jacobian_matches_finite_differences(figure_params):
    s = State(0.7, -0.2, 0.13)
    jac = jacobian_fvdp(s, figure_params)
    h = 1e-7
    base = np.array(fvdp_field(s, figure_params))
    for j in range(3):
        shifted = s.as_array()
        shifted[j] += h
        column = (np.array(fvdp_field(State.from_array(shifted), figure_params)) - base) / h
        np.testing.assert_allclose(jac[:, j], column, rtol=1e-5, atol=1e-3)


def test_vector_field_range():
    with pytest.raises(InvalidParamsError):
        fvdp_vector_field(Params(1.1, 1.505, 1e-5))
    with pytest.raises(InvalidParamsError):
        unforced_vector_field(1e-5)
    field = fvdp_vector_field(Params(1.1, 1.505, 1e-4))
    assert field.names == ("x", "y", "theta")
    assert field.phase_index == 2


def test_slow_fast_form(figure_params):
    spec = fvdp_slow_fast(figure_params)
    assert (spec.k, spec.m) == (1, 2)
    layer = spec.layer_field(np.array([2.0 / 3.0, 0.0]))
    assert layer(np.array([2.0]))[0] == pytest.approx(0.0)
    assert layer(np.array([0.0]))[0] == pytest.approx(2.0 / 3.0)
    np.testing.assert_allclose(
        spec.slow(np.array([2.0]), np.array([0.0, 0.25])), [-2.0 + 1.1, 1.505]
    )


def test_stable_branch_solve():
    assert stable_branch_solve(2.0 / 3.0, Side.POSITIVE) == pytest.approx(2.0, abs=1e-14)
    assert stable_branch_solve(-2.0 / 3.0, Side.NEGATIVE) == pytest.approx(-2.0, abs=1e-14)
    assert stable_branch_solve(-2.0 / 3.0, Side.POSITIVE) == 1.0
    assert stable_branch_solve(2.0 / 3.0, Side.NEGATIVE) == -1.0
    for y in (-0.6, 0.0, 0.5, 3.0, 40.0):
        x = stable_branch_solve(y, Side.POSITIVE)
        assert x >= 1.0
        assert abs(critical_residual(x, y)) < 1e-12 * max(1.0, abs(y))
        assert stable_branch_solve(-y, Side.NEGATIVE) == pytest.approx(-x, abs=1e-12)


def test_stable_branch_solve_beyond_fold():
    with pytest.raises(NoBranchError):
        stable_branch_solve(-0.7, Side.POSITIVE)
    with pytest.raises(NoBranchError):
        stable_branch_solve(0.7, Side.NEGATIVE)


def test_jump_target():
    landing = jump_target(Fold.PLUS, 0.3)
    assert landing.x == pytest.approx(-2.0, abs=1e-14)
    assert (landing.y, landing.theta) == (-2.0 / 3.0, 0.3)
    landing = jump_target(Fold.MINUS, 0.9)
    assert landing.x == pytest.approx(2.0, abs=1e-14)
    assert landing.y == 2.0 / 3.0


def test_jacobian_at_random_states(figure_params):
    rng = np.random.default_rng(0)
    h = 1e-6
    for x, y, theta in zip(
        rng.uniform(-3.0, 3.0, 100), rng.uniform(-3.0, 3.0, 100), rng.uniform(0.0, 1.0, 100)
    ):
        u = np.array([x, y, theta])
        jac = jacobian_fvdp(State(x, y, theta), figure_params)
        fd = np.empty((3, 3))
        for j in range(3):
            step = np.zeros(3)
            step[j] = h
            plus = fvdp_field(State.from_array(u + step), figure_params)
            minus = fvdp_field(State.from_array(u - step), figure_params)
            fd[:, j] = (np.array(plus) - np.array(minus)) / (2.0 * h)
        # Relative to the largest entry, which is at least 1/eps.
        np.testing.assert_allclose(fd, jac, rtol=0, atol=1e-5 * np.abs(jac).max())


def test_stable_branch_solve_random():
    rng = np.random.default_rng(1)
    near_fold = -2.0 / 3.0 + np.logspace(-15, -1, 1000)
    y_values = np.concatenate([rng.uniform(-2.0 / 3.0, 10.0, 9000), near_fold])
    for y in y_values:
        x = stable_branch_solve(y, Side.POSITIVE)
        assert x >= 1.0
        assert abs(critical_residual(x, y)) < 1e-12
        x = stable_branch_solve(-y, Side.NEGATIVE)
        assert x <= -1.0
        assert abs(critical_residual(x, -y)) < 1e-12


def test_unforced_field_is_odd():
    rng = np.random.default_rng(2)
    for x, y in zip(rng.uniform(-3.0, 3.0, 100), rng.uniform(-3.0, 3.0, 100)):
        dx, dy = unforced_field(x, y, 0.01)
        mx, my = unforced_field(-x, -y, 0.01)
        assert mx == pytest.approx(-dx, rel=1e-14, abs=1e-12)
        assert my == -dy
    assert unforced_field(-1.3, -0.2, 0.01) == pytest.approx(
        tuple(-v for v in unforced_field(1.3, 0.2, 0.01))
    )
