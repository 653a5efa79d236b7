import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bplab.bathymetry import (
    BathymetryError,
    DryStateError,
    LogDomainError,
    NonpositiveDepthError,
    build_bathymetry,
    q_positivity_factor,
    q_to_zeta,
    water_height,
    zeta_to_q,
)
from bplab.spectral import Grid


class TestBuildBathymetry:
    """Tests for build_bathymetry."""

    def test_flat(self, grid1):
        bath = build_bathymetry("flat", 0.0, grid1)
        assert bath.is_flat
        assert bath.h_min == 1.0
        np.testing.assert_array_equal(bath.grad_b, 0.0)

    def test_gaussian_bump_depth(self, grid1):
        bath = build_bathymetry({"name": "gaussian_bump", "width": 1.0, "height": 1.0}, 0.5, grid1)
        assert not bath.is_flat
        assert bath.h_min == pytest.approx(0.5)
        assert bath.h_max <= 1.0
        assert bath.profile == "gaussian_bump"

    def test_gradient_of_hb(self, bump2):
        np.testing.assert_allclose(bump2.grad_hb, -0.5 * bump2.grad_b)
        np.testing.assert_allclose(bump2.grad_b, bump2.grid.grad_gamma(bump2.b))

    def test_beta_zero_is_flat_for_any_profile(self, grid1):
        bath = build_bathymetry({"name": "sinusoidal", "k": 2, "amplitude": 0.3}, 0.0, grid1)
        assert bath.is_flat

    def test_two_bumps(self, grid2):
        bath = build_bathymetry({"name": "two_bumps", "width": 0.8, "heights": [0.5, 0.3]}, 1.0, grid2)
        assert 0 < bath.h_min < 1

    @pytest.mark.parametrize("beta", [-0.1, 1.2])
    def test_beta_out_of_range(self, grid1, beta):
        with pytest.raises(BathymetryError, match="beta"):
            build_bathymetry("flat", beta, grid1)

    def test_unknown_profile(self, grid1):
        with pytest.raises(BathymetryError, match="未知の地形プリセット"):
            build_bathymetry("volcano", 0.5, grid1)

    def test_bad_parameters(self, grid1):
        with pytest.raises(BathymetryError, match="パラメータ"):
            build_bathymetry({"name": "gaussian_bump", "radius": 2.0}, 0.5, grid1)

    def test_unrepresentable_sinusoid(self, grid1):
        with pytest.raises(BathymetryError):
            build_bathymetry({"name": "sinusoidal", "k": 0.5}, 0.5, grid1)

    def test_nonpositive_depth(self, grid1):
        with pytest.raises(NonpositiveDepthError):
            build_bathymetry({"name": "gaussian_bump", "width": 1.0, "height": 1.0}, 1.0, grid1)


class TestWaterHeight:
    """Tests for water_height."""

    def test_height(self, bump1):
        zeta = np.full(bump1.grid.shape, 0.2)
        height = water_height(zeta, 0.5, bump1)
        np.testing.assert_allclose(height.h, bump1.h_b + 0.1)
        assert not height.dry

    def test_dry_is_flagged_not_raised(self, bump1):
        zeta = np.full(bump1.grid.shape, -1.5)
        assert water_height(zeta, 1.0, bump1).dry

    def test_dry_error_is_bathymetry_error(self):
        assert issubclass(DryStateError, BathymetryError)


class TestQTransform:
    """Tests for the log variable q."""

    def test_eps_zero_limit(self, bump1, rng):
        zeta = rng.standard_normal(bump1.grid.shape)
        np.testing.assert_allclose(zeta_to_q(zeta, 0.0, bump1), zeta / bump1.h_b)
        np.testing.assert_allclose(q_to_zeta(zeta_to_q(zeta, 0.0, bump1), 0.0, bump1), zeta)

    def test_log_domain(self, bump1):
        zeta = np.full(bump1.grid.shape, -0.6)
        with pytest.raises(LogDomainError):
            zeta_to_q(zeta, 1.0, bump1)

    def test_small_ratio_uses_series(self, bump1):
        zeta = np.full(bump1.grid.shape, 1e-12)
        np.testing.assert_allclose(q_positivity_factor(zeta, 1.0, bump1), 1.0 / bump1.h_b, rtol=1e-11)

    def test_margin_warning(self, bump1, caplog):
        zeta = np.full(bump1.grid.shape, -0.47)
        with caplog.at_level("WARNING"):
            zeta_to_q(zeta, 1.0, bump1)
        assert "degenerate" in caplog.text


@settings(max_examples=100, deadline=None)
@given(
    seed=st.integers(min_value=0, max_value=2**32 - 1),
    eps=st.floats(min_value=1e-3, max_value=1.0),
    scale=st.floats(min_value=0.01, max_value=0.95),
)
def test_q_transform_round_trip(seed, eps, scale):
    """zeta -> q -> zeta and q -> zeta -> q, q = Q(zeta) zeta and Q > 0 on admissible states."""
    grid = Grid(d=1, n=32)
    bath = build_bathymetry({"name": "gaussian_bump", "width": 1.0, "height": 1.0}, 0.5, grid)
    rng = np.random.default_rng(seed)
    ratio = scale * rng.uniform(-1.0, 1.0, grid.shape)
    zeta = ratio * bath.h_b / eps

    q = zeta_to_q(zeta, eps, bath)
    back = q_to_zeta(q, eps, bath)
    assert np.max(np.abs(back - zeta)) <= 1e-12 * np.max(np.abs(zeta))
    again = zeta_to_q(q_to_zeta(q, eps, bath), eps, bath)
    assert np.max(np.abs(again - q)) <= 1e-12 * np.max(np.abs(q))

    factor = q_positivity_factor(zeta, eps, bath)
    assert np.all(factor > 0)
    assert np.max(np.abs(factor * zeta - q)) <= 1e-12 * np.max(np.abs(q))
