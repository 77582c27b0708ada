"""
Tests for the initial datum builders.
"""

import numpy as np
import pytest

from src.models import constant_datum, linear_ramp, random_cloud


class TestConstantDatum:
    """Test constant data."""

    def test_same_state_everywhere(self):
        """Test that the datum does not depend on s."""
        x0, v0 = np.zeros((2, 1)), np.array([[1.0], [-1.0]])
        datum = constant_datum(x0, v0)
        assert datum.is_constant
        np.testing.assert_array_equal(datum.at(-0.7).v, v0)
        np.testing.assert_array_equal(datum.derivative(-0.2).v, np.zeros((2, 1)))

    def test_returned_states_are_copies(self):
        """Test that mutating a returned state leaves the datum intact."""
        datum = constant_datum(np.zeros((2, 1)), np.ones((2, 1)))
        datum.at(0.0).v[:] = 5.0
        assert datum.at(0.0).v[0, 0] == 1.0

    def test_flat_trajectory(self):
        """Test the flat [x, v] view used by the solver."""
        datum = constant_datum(np.array([[0.0], [2.0]]), np.array([[1.0], [3.0]]))
        np.testing.assert_array_equal(datum.flat_trajectory()(-0.1), [0.0, 2.0, 1.0, 3.0])


class TestRandomCloud:
    """Test seeded random data."""

    def test_reproducible(self):
        """Test that one seed gives one datum."""
        a = random_cloud(10, 2, 1.0, 1.0, seed=5).at(0.0)
        b = random_cloud(10, 2, 1.0, 1.0, seed=5).at(0.0)
        np.testing.assert_array_equal(a.x, b.x)
        np.testing.assert_array_equal(a.v, b.v)

    def test_zero_momentum_and_box(self):
        """Test mean-removed velocities and positions inside the box."""
        state = random_cloud(50, 3, position_box=2.0, velocity_spread=1.0, seed=0).at(0.0)
        np.testing.assert_allclose(state.v.mean(axis=0), 0.0, atol=1e-15)
        assert np.all((state.x >= 0.0) & (state.x <= 2.0))
        assert np.all(np.abs(state.v) <= 2.0)

    def test_kind_label(self):
        """Test the report label."""
        assert random_cloud(3, 1, 1.0, 1.0, seed=0).kind == "random_cloud"

    @pytest.mark.parametrize(
        "args", [(1, 2, 1.0, 1.0), (3, 0, 1.0, 1.0), (3, 2, -1.0, 1.0), (3, 2, 1.0, -1.0)]
    )
    def test_invalid_arguments_raise(self, args):
        """Test validation of N, d, box and spread."""
        with pytest.raises(ValueError):
            random_cloud(*args, seed=0)


class TestLinearRamp:
    """Test the non-constant ramp datum."""

    def test_positions_integrate_velocities(self):
        """Test x' = v on the datum interval."""
        datum = linear_ramp(np.zeros((2, 1)), np.array([[1.0], [-1.0]]), np.array([[2.0], [0.0]]))
        s, eps = -0.3, 1e-6
        dx = (datum.at(s + eps).x - datum.at(s - eps).x) / (2 * eps)
        np.testing.assert_allclose(dx, datum.at(s).v, atol=1e-8)
        np.testing.assert_allclose(datum.derivative(s).x, datum.at(s).v)
        np.testing.assert_allclose(datum.derivative(s).v, [[2.0], [0.0]])

    def test_zero_slope_is_constant(self):
        """Test that a flat ramp is flagged as constant."""
        datum = linear_ramp(np.zeros((2, 1)), np.ones((2, 1)), 0.0)
        assert datum.is_constant

    def test_non_finite_slope_raises(self):
        """Test slope validation."""
        with pytest.raises(ValueError, match="slope"):
            linear_ramp(np.zeros((2, 1)), np.ones((2, 1)), np.array([[np.inf], [0.0]]))
