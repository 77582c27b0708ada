"""
Tests for the delay negative feedback lab.

Tests cover:
    - FeedbackProblem validation
    - Exact piecewise-polynomial solution against hand-computed values
    - Sign-change detection and the oscillation threshold
    - Cross-validation of the method-of-steps solver
    - Decay estimates and scaling collapse
"""

import numpy as np
import pytest

from src.exceptions import BracketError, HorizonError
from src.feedback import (
    MAX_INTERVALS,
    ExactFeedbackSolution,
    FeedbackProblem,
    backward_forward_flow_check,
    cross_validate,
    energy_decay_check,
    engine_solve,
    exact_solve,
    first_sign_change,
    oscillation_profile,
    scaling_collapse,
    threshold_bisect,
)
from src.theory import solve_zstar

# Fixtures


@pytest.fixture
def stable_problem():
    """lambda * tau = 0.2 over 5 time units."""
    return FeedbackProblem(lam=1.0, tau=0.2, u0=1.0, t_end=5.0)


# Test: problem definition


class TestFeedbackProblem:
    """Test problem validation and helpers."""

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"lam": 0.0, "tau": 0.1, "u0": 1.0, "t_end": 1.0},
            {"lam": 1.0, "tau": 0.0, "u0": 1.0, "t_end": 1.0},
            {"lam": 1.0, "tau": 0.1, "u0": 0.0, "t_end": 1.0},
            {"lam": 1.0, "tau": 0.1, "u0": 1.0, "t_end": -1.0},
            {"lam": np.nan, "tau": 0.1, "u0": 1.0, "t_end": 1.0},
        ],
    )
    def test_invalid_problem_raises(self, kwargs):
        """Test that gains, delays, data and horizons are validated."""
        with pytest.raises(ValueError):
            FeedbackProblem(**kwargs)

    def test_intervals(self):
        """Test interval counting with round-off tolerance."""
        assert FeedbackProblem(1.0, 0.1, 1.0, 0.3).n_intervals == 3
        assert FeedbackProblem(1.0, 0.1, 1.0, 0.35).n_intervals == 4

    def test_rescaled(self, stable_problem):
        """Test that rescaling keeps lambda * tau."""
        scaled = stable_problem.rescaled(4.0)
        assert scaled.lambda_tau == pytest.approx(stable_problem.lambda_tau)
        assert scaled.t_end == pytest.approx(1.25)


# Test: exact solution


class TestExactSolution:
    """Test the method-of-steps polynomials."""

    def test_first_two_intervals(self):
        """Test u = 1 - t on [0, tau] and the quadratic piece after it."""
        problem = FeedbackProblem(lam=1.0, tau=0.5, u0=1.0, t_end=2.0)
        u = exact_solve(problem, [-0.3, 0.0, 0.25, 0.5, 0.75])
        np.testing.assert_allclose(u, [1.0, 1.0, 0.75, 0.5, 0.28125], atol=1e-15)

    def test_derivative_follows_delayed_value(self, stable_problem):
        """Test u'(t) = -lambda u(t - tau) against a central difference."""
        solution = ExactFeedbackSolution(stable_problem)
        t, eps = np.array([0.33, 1.7, 4.1]), 1e-6
        numeric = (solution(t + eps) - solution(t - eps)) / (2 * eps)
        np.testing.assert_allclose(solution.derivative(t), numeric, rtol=1e-6)

    def test_continuity_at_nodes(self, stable_problem):
        """Test that consecutive polynomials join at the interval ends."""
        solution = ExactFeedbackSolution(stable_problem)
        for left, right in zip(solution.coefficients[:-1], solution.coefficients[1:]):
            assert np.sum(left) == pytest.approx(right[0], abs=1e-15)

    def test_linearity_in_datum(self, stable_problem):
        """Test that u scales with u0."""
        doubled = FeedbackProblem(lam=1.0, tau=0.2, u0=2.0, t_end=5.0)
        t = np.linspace(0, 5, 101)
        np.testing.assert_allclose(exact_solve(doubled, t), 2 * exact_solve(stable_problem, t), rtol=1e-14)

    def test_horizon_limit(self):
        """Test that more than 700 delay intervals are refused."""
        assert MAX_INTERVALS == 700
        with pytest.raises(HorizonError):
            ExactFeedbackSolution(FeedbackProblem(lam=1.0, tau=0.1, u0=1.0, t_end=100.0))

    def test_beyond_t_end_raises(self, stable_problem):
        """Test queries past the solved horizon."""
        with pytest.raises(HorizonError):
            exact_solve(stable_problem, [6.0])

    def test_profile_columns(self, stable_problem):
        """Test the sampled (t, u) table."""
        profile = oscillation_profile(stable_problem, resolution=8)
        assert list(profile.columns) == ["t", "u"]
        assert profile["t"].iloc[-1] == pytest.approx(5.0)
        assert len(profile) == 25 * 8 + 1


# Test: sign changes and threshold


class TestSignChanges:
    """Test first_sign_change and threshold_bisect."""

    def test_non_oscillatory_has_none(self):
        """Test that lambda * tau = 0.2 keeps its sign."""
        problem = FeedbackProblem(lam=1.0, tau=0.2, u0=1.0, t_end=10.0)
        assert first_sign_change(problem) is None

    def test_sign_change_in_second_interval(self):
        """Test the closed-form zero 1.6 - sqrt(0.2) for lambda * tau = 0.6."""
        problem = FeedbackProblem(lam=1.0, tau=0.6, u0=1.0, t_end=10.0)
        assert first_sign_change(problem) == pytest.approx(1.6 - np.sqrt(0.2), abs=1e-10)

    def test_zero_on_grid_node(self):
        """Test lambda * tau = 1, where u = 1 - t vanishes at t = tau."""
        problem = FeedbackProblem(lam=1.0, tau=1.0, u0=1.0, t_end=5.0)
        assert first_sign_change(problem) == pytest.approx(1.0)

    def test_negative_datum(self):
        """Test that the sign of u0 does not matter."""
        problem = FeedbackProblem(lam=1.0, tau=0.6, u0=-3.0, t_end=10.0)
        assert first_sign_change(problem) == pytest.approx(1.6 - np.sqrt(0.2), abs=1e-10)

    def test_threshold_recovers_inverse_e(self):
        """Test that bisection on (0.30, 0.45) lands within 2e-3 of 1/e."""
        estimate = threshold_bisect((0.30, 0.45), horizon=200.0)
        assert abs(estimate - np.exp(-1.0)) < 2e-3
        assert estimate > solve_zstar()

    def test_bracket_without_transition_raises(self):
        """Test a bracket entirely below the threshold."""
        with pytest.raises(BracketError):
            threshold_bisect((0.1, 0.2), horizon=50.0)

    def test_invalid_bracket_raises(self):
        """Test bracket validation."""
        with pytest.raises(ValueError, match="Bracket"):
            threshold_bisect((0.4, 0.3))


# Test: solver cross-validation


class TestCrossValidation:
    """Test the engine against the exact solution."""

    def test_engine_nodes(self):
        """Test the numerical table layout."""
        table = engine_solve(FeedbackProblem(lam=1.0, tau=0.2, u0=1.0, t_end=1.0), m=10)
        assert len(table) == 51
        assert table["u"].iloc[0] == 1.0

    def test_deviation_and_order(self, stable_problem):
        """Test max deviation <= 1e-8 at m = 100 and a fourth-order refinement ratio."""
        result = cross_validate(stable_problem, m=100, refinement=(25, 50, 100))
        assert result["max_deviation"] <= 1e-8
        assert 12.0 <= result["ratios"][-1] <= 20.0
        assert result["orders"][-1] >= 3.5

    def test_first_interval_is_exact(self):
        """Test that a linear first interval is integrated exactly."""
        problem = FeedbackProblem(lam=1.0, tau=0.5, u0=1.0, t_end=0.5)
        table = engine_solve(problem, m=5)
        np.testing.assert_allclose(table["u"], 1.0 - table["t"], atol=1e-14)


# Test: decay estimates and scaling


class TestDecayEstimates:
    """Test the energy and backward-forward estimates below the thresholds."""

    def test_energy_decay_below_zstar(self, stable_problem):
        """Test both decay estimates for lambda * tau = 0.2 < z*."""
        result = energy_decay_check(stable_problem)
        assert result["rate"] < 0
        assert result["current"]["violations"] == 0
        assert result["delayed"]["violations"] == 0
        assert result["current"]["samples"] > 0

    def test_backward_forward_flow(self, stable_problem):
        """Test y(t - s) <= e^{2 e lambda s} y(t) for s up to tau."""
        result = backward_forward_flow_check(stable_problem, shifts=8, resolution=64)
        assert result["pairs"] > 0
        assert result["violations"] == 0
        assert result["worst_margin"] > 0

    def test_flow_check_resolution(self, stable_problem):
        """Test that the resolution must divide into the shifts."""
        with pytest.raises(ValueError, match="multiple"):
            backward_forward_flow_check(stable_problem, shifts=7, resolution=64)

    def test_scaling_collapse(self, stable_problem):
        """Test that (lambda, tau) and (c lambda, tau / c) agree after rescaling time."""
        assert scaling_collapse(stable_problem, c=2.5) <= 1e-10

    def test_scaling_collapse_rejects_bad_factor(self, stable_problem):
        """Test factor validation."""
        with pytest.raises(ValueError):
            scaling_collapse(stable_problem, c=0.0)
