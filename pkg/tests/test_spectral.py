import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bplab.spectral import CorruptFieldError, Grid, GridError
from tests.conftest import smooth_field


class TestGridValidation:
    """Tests for Grid construction."""

    @pytest.mark.parametrize("n", [4, 12, 100])
    def test_rejects_bad_n(self, n):
        with pytest.raises(GridError, match="power of two"):
            Grid(d=1, n=n)

    def test_rejects_dimension(self):
        with pytest.raises(GridError, match="d must be"):
            Grid(d=3, n=16)

    @pytest.mark.parametrize("gamma", [0.0, -0.5, 1.5])
    def test_rejects_gamma(self, gamma):
        with pytest.raises(GridError, match="gamma"):
            Grid(d=2, n=16, gamma=gamma)

    def test_per_axis_lengths(self):
        g = Grid(d=2, n=16, L=(2 * np.pi, 4 * np.pi))
        assert g.lengths == (2 * np.pi, 4 * np.pi)
        assert g.coords[1][0, 1] == pytest.approx(4 * np.pi / 16)

    def test_check_finite(self, grid1):
        f = np.zeros(grid1.shape)
        f[3] = np.nan
        with pytest.raises(CorruptFieldError):
            grid1.check_finite(f)


class TestDerivatives:
    """Spectral derivatives of trigonometric fields."""

    def test_gradient_of_sine(self, grid1):
        x = grid1.coords[0]
        grad = grid1.grad_gamma(np.sin(3 * x))
        assert grad.shape == (1, 32)
        np.testing.assert_allclose(grad[0], 3 * np.cos(3 * x), atol=1e-12)

    def test_twisted_y_derivative(self, grid2):
        x, y = grid2.coords
        grad = grid2.grad_gamma(np.sin(2 * y) + np.cos(x))
        np.testing.assert_allclose(grad[0], -np.sin(x), atol=1e-12)
        np.testing.assert_allclose(grad[1], 0.7 * 2 * np.cos(2 * y), atol=1e-12)

    def test_nyquist_is_dropped(self, grid1):
        x = grid1.coords[0]
        nyquist = np.cos(16 * x)
        np.testing.assert_allclose(grid1.grad_gamma(nyquist), 0.0, atol=1e-12)

    def test_laplacian_is_div_grad(self, grid2, rng):
        f = smooth_field(grid2, rng)
        np.testing.assert_allclose(grid2.laplacian(f), grid2.div_gamma(grid2.grad_gamma(f)), atol=1e-10)

    def test_perp_grad_is_divergence_free(self, grid2, rng):
        f = smooth_field(grid2, rng)
        np.testing.assert_allclose(grid2.div_gamma(grid2.perp_grad(f)), 0.0, atol=1e-10)

    def test_perp_is_zero_in_one_dimension(self, grid1, rng):
        v = smooth_field(grid1, rng, components=1)
        assert np.all(grid1.perp_div(v) == 0)
        assert grid1.perp_grad(v[0]).shape == (1, 32)

    def test_batch_axes_are_carried(self, grid1, rng):
        batch = smooth_field(grid1, rng, components=3)
        grads = grid1.grad_gamma(batch)
        assert grads.shape == (3, 1, 32)
        np.testing.assert_allclose(grads[1], grid1.grad_gamma(batch[1]), atol=1e-13)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(min_value=0, max_value=2**32 - 1), gamma=st.floats(min_value=0.1, max_value=1.0))
def test_gradient_and_divergence_are_negative_adjoints(seed, gamma):
    """(grad f, v) = -(f, div v) for arbitrary fields."""
    g = Grid(d=2, n=16, gamma=gamma)
    rng = np.random.default_rng(seed)
    f = rng.standard_normal(g.shape)
    v = rng.standard_normal((2,) + g.shape)
    lhs = g.inner(g.grad_gamma(f), v)
    rhs = -g.inner(f, g.div_gamma(v))
    assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(lhs))


class TestMultipliers:
    """Tests for Lambda^s and the mollifier."""

    def test_lambda_zero_is_identity(self, grid1, rng):
        f = smooth_field(grid1, rng)
        np.testing.assert_allclose(grid1.lambda_s(f, 0), f)

    def test_lambda_two(self, grid1, rng):
        f = smooth_field(grid1, rng)
        np.testing.assert_allclose(grid1.lambda_s(f, 2), f - grid1.laplacian(f), atol=1e-12)

    def test_sobolev_norm_of_mode(self, grid1):
        x = grid1.coords[0]
        f = np.cos(2 * x)
        expected = np.sqrt(np.pi) * np.sqrt(1 + 4) ** 3
        assert grid1.sobolev_norm(f, 3) == pytest.approx(expected, rel=1e-12)

    def test_mollifier_powers_cancel(self, grid2, rng):
        f = smooth_field(grid2, rng)
        smoothed = grid2.mollify(f, 1e-2, -2)
        np.testing.assert_allclose(grid2.mollify(smoothed, 1e-2, 2), f, atol=1e-12)

    def test_mollifier_zero_delta_copies(self, grid1, rng):
        f = smooth_field(grid1, rng)
        out = grid1.mollify(f, 0.0, -1)
        assert out is not f
        np.testing.assert_array_equal(out, f)

    @pytest.mark.parametrize("power", [0, 3, -3])
    def test_mollifier_rejects_power(self, grid1, power):
        with pytest.raises(GridError, match="power"):
            grid1.mollify(np.zeros(grid1.shape), 0.1, power)

    def test_mollifier_rejects_negative_delta(self, grid1):
        with pytest.raises(GridError, match="delta"):
            grid1.mollify(np.zeros(grid1.shape), -0.1, 1)


class TestDealiasedProduct:
    """Tests for the 3/2-padded product."""

    def test_resolved_product_is_exact(self, grid1):
        x = grid1.coords[0]
        out = grid1.dealias_mul(np.cos(x), np.cos(2 * x))
        np.testing.assert_allclose(out, 0.5 * (np.cos(x) + np.cos(3 * x)), atol=1e-13)

    def test_unresolved_product_does_not_alias(self, grid1):
        x = grid1.coords[0]
        out = grid1.dealias_mul(np.cos(12 * x), np.cos(12 * x))
        np.testing.assert_allclose(out, 0.5, atol=1e-13)

    def test_scalar_times_vector_broadcasts(self, grid2, rng):
        a = smooth_field(grid2, rng)
        v = smooth_field(grid2, rng, components=2)
        out = grid2.dealias_mul(a, v)
        assert out.shape == v.shape


class TestFlatElliptic:
    """Tests for the flat-bottom elliptic symbol."""

    def test_inverse(self, grid2, rng):
        v = smooth_field(grid2, rng, components=2)
        w = grid2.flat_elliptic_apply(v, 0.3, 0.2)
        np.testing.assert_allclose(grid2.flat_elliptic_inverse(w, 0.3, 0.2), v, atol=1e-12)

    def test_identity_when_coefficients_vanish(self, grid1, rng):
        v = smooth_field(grid1, rng, components=1)
        np.testing.assert_array_equal(grid1.flat_elliptic_inverse(v, 0.0), v)


class TestModes:
    """Tests for mode lookup."""

    def test_coefficient(self):
        g = Grid(d=1, n=64, L=4 * np.pi)
        x = g.coords[0]
        f = 0.3 * np.cos(1.5 * x) + 0.1 * np.sin(1.5 * x) + np.cos(0.5 * x)
        assert g.mode_coefficient(f, 1.5) == pytest.approx(0.3, abs=1e-13)

    def test_unrepresentable(self):
        g = Grid(d=1, n=64, L=2 * np.pi)
        with pytest.raises(GridError, match="not representable"):
            g.mode_index(1.5)
        with pytest.raises(GridError):
            g.mode_index(32)

    def test_two_dimensional_average(self, grid2):
        x, y = grid2.coords
        assert grid2.mode_coefficient(0.4 * np.cos(2 * x) + np.cos(y), 2) == pytest.approx(0.4, abs=1e-13)


def test_l2_norm_of_constant(grid1):
    assert grid1.l2_norm(np.ones(grid1.shape)) == pytest.approx(np.sqrt(2 * np.pi))
