import numpy as np
import pytest

from bplab.bathymetry import build_bathymetry
from bplab.operators import (
    OperatorError,
    OperatorHandle,
    OperatorKind,
    apply_Tb,
    coercivity_report,
    hbA_estimate_report,
    solve_hbA,
    solve_hbB,
    solve_I_plus_muTb,
    symmetry_residual,
    weighted_hbA,
    weighted_I_plus_muTb,
)
from bplab.spectral import CorruptFieldError, Grid
from tests.conftest import smooth_field

MU = 0.1
KINDS = list(OperatorKind)


@pytest.fixture(params=["bump1", "bump2"])
def bath(request):
    return request.getfixturevalue(request.param)


def test_Tb_on_flat_bottom(grid1):
    bath = build_bathymetry("flat", 0.0, grid1)
    x = grid1.coords[0]
    v = np.sin(x)[np.newaxis]
    np.testing.assert_allclose(apply_Tb(v, bath)[0], np.sin(x) / 3.0, atol=1e-12)


def test_weighted_form_is_hb_times_operator(bath, rng):
    g = bath.grid
    v = smooth_field(g, rng, components=g.d)
    expected = g.times(bath.h_b, v + MU * apply_Tb(v, bath))
    np.testing.assert_allclose(weighted_I_plus_muTb(v, MU, bath), expected, atol=1e-12)


@pytest.mark.parametrize("kind", KINDS)
def test_weighted_forms_are_symmetric(bath, rng, kind):
    g = bath.grid
    handle = OperatorHandle(kind, MU, bath)
    for _ in range(5):
        v = rng.standard_normal((g.d,) + g.shape)
        w = rng.standard_normal((g.d,) + g.shape)
        assert symmetry_residual(handle.weighted, v, w, g) <= 1e-10


def test_symmetry_residual_of_zero(grid1, bump1):
    zero = np.zeros((1,) + grid1.shape)
    assert symmetry_residual(lambda v: weighted_hbA(v, MU, bump1), zero, zero, grid1) == 0.0


class TestHandleSelection:
    """Tests for the automatic solve-method choice."""

    def test_mu_zero_is_diagonal(self, bump1):
        assert OperatorHandle(OperatorKind.HB_B, 0.0, bump1).method == "diagonal"

    def test_flat_is_spectral(self, grid2):
        flat = build_bathymetry("flat", 0.0, grid2)
        assert OperatorHandle(OperatorKind.HB_B, MU, flat).method == "spectral"

    def test_small_bump_is_dense(self, bump2):
        assert OperatorHandle(OperatorKind.HB_A, MU, bump2).method == "dense"

    def test_large_bump_is_cg(self):
        g = Grid(d=1, n=2048, L=20 * np.pi)
        bath = build_bathymetry({"name": "gaussian_bump", "width": 4.0, "height": 1.0}, 0.5, g)
        assert OperatorHandle(OperatorKind.HB_A, MU, bath).method == "cg"

    def test_spectral_requires_flat_bottom(self, bump1):
        with pytest.raises(OperatorError, match="flat bottom"):
            OperatorHandle(OperatorKind.HB_A, MU, bump1, method="spectral")

    def test_diagonal_requires_mu_zero(self, bump1):
        with pytest.raises(OperatorError, match="mu = 0"):
            OperatorHandle(OperatorKind.HB_A, MU, bump1, method="diagonal")

    @pytest.mark.parametrize("kwargs", [{"kind": "hb_C"}, {"method": "lu"}, {"mu": -1.0}])
    def test_invalid_arguments(self, bump1, kwargs):
        args = {"kind": OperatorKind.HB_A, "mu": MU, "method": "auto"}
        args.update(kwargs)
        with pytest.raises(OperatorError):
            OperatorHandle(args["kind"], args["mu"], bump1, method=args["method"])


class TestSolve:
    """Tests for OperatorHandle.solve."""

    @pytest.mark.parametrize("kind", KINDS)
    @pytest.mark.parametrize("method", ["dense", "cg"])
    def test_apply_after_solve(self, bath, rng, kind, method):
        g = bath.grid
        handle = OperatorHandle(kind, MU, bath, method=method)
        rhs = smooth_field(g, rng, components=g.d)
        recovered = handle.apply(handle.solve(rhs))
        assert g.l2_norm(recovered - rhs) <= 1e-9 * g.l2_norm(rhs)

    @pytest.mark.parametrize("kind", KINDS)
    @pytest.mark.parametrize("method", ["dense", "cg"])
    def test_weighted_after_solve_weighted(self, bath, rng, kind, method):
        g = bath.grid
        handle = OperatorHandle(kind, MU, bath, method=method)
        b = smooth_field(g, rng, components=g.d)
        recovered = handle.weighted(handle.solve_weighted(b))
        assert g.l2_norm(recovered - b) <= 1e-9 * g.l2_norm(b)

    def test_solve_weighted_takes_the_hb_multiplied_rhs(self, bump1, rng):
        handle = OperatorHandle(OperatorKind.I_PLUS_MU_TB, MU, bump1)
        rhs = smooth_field(bump1.grid, rng, components=1)
        np.testing.assert_allclose(
            handle.solve_weighted(bump1.grid.times(bump1.h_b, rhs)), handle.solve(rhs), rtol=1e-12, atol=1e-12
        )

    def test_solve_weighted_with_mu_zero(self, bump1, rng):
        rhs = rng.standard_normal((1,) + bump1.grid.shape)
        out = OperatorHandle(OperatorKind.I_PLUS_MU_TB, 0.0, bump1).solve_weighted(rhs)
        np.testing.assert_allclose(out, rhs / bump1.h_b)

    @pytest.mark.parametrize("kind", KINDS)
    def test_dense_and_cg_agree(self, bath, rng, kind):
        g = bath.grid
        rhs = rng.standard_normal((g.d,) + g.shape)
        dense = OperatorHandle(kind, MU, bath, method="dense").solve(rhs)
        iterative = OperatorHandle(kind, MU, bath, method="cg", tol=1e-12).solve(rhs)
        assert np.max(np.abs(dense - iterative)) <= 1e-9 * np.max(np.abs(dense))

    @pytest.mark.parametrize("kind", KINDS)
    def test_spectral_matches_dense_on_flat_bottom(self, grid2, rng, kind):
        flat = build_bathymetry("flat", 0.0, grid2)
        rhs = rng.standard_normal((2,) + grid2.shape)
        spectral = OperatorHandle(kind, MU, flat, method="spectral").solve(rhs)
        dense = OperatorHandle(kind, MU, flat, method="dense").solve(rhs)
        np.testing.assert_allclose(spectral, dense, atol=1e-10)

    def test_mu_zero_inverts_depth(self, bump1, rng):
        rhs = rng.standard_normal((1,) + bump1.grid.shape)
        out = OperatorHandle(OperatorKind.HB_A, 0.0, bump1).solve(rhs)
        np.testing.assert_allclose(out, rhs / bump1.h_b)

    def test_shape_mismatch(self, bump1):
        handle = OperatorHandle(OperatorKind.HB_A, MU, bump1)
        with pytest.raises(OperatorError, match="shape"):
            handle.solve(np.zeros(bump1.grid.shape))

    def test_non_finite_rhs(self, bump1):
        handle = OperatorHandle(OperatorKind.HB_A, MU, bump1)
        rhs = np.zeros((1,) + bump1.grid.shape)
        rhs[0, 0] = np.inf
        with pytest.raises(CorruptFieldError):
            handle.solve(rhs)

    def test_kind_is_checked(self, bump1):
        handle = OperatorHandle(OperatorKind.HB_A, MU, bump1)
        rhs = np.zeros((1,) + bump1.grid.shape)
        solve_hbA(rhs, handle)
        with pytest.raises(OperatorError, match="cannot solve"):
            solve_hbB(rhs, handle)
        with pytest.raises(OperatorError, match="cannot solve"):
            solve_I_plus_muTb(rhs, handle)


class TestCoercivityReport:
    """Tests for coercivity_report."""

    @pytest.mark.parametrize("kind", KINDS)
    def test_positive_over_bump(self, bath, kind):
        report = coercivity_report(OperatorHandle(kind, MU, bath), trials=5)
        assert report["status"] == "success"
        assert report["min_quotient"] > 0
        assert report["symmetry_residual"] <= 1e-10
        assert report["inverse_residual"] <= 1e-9
        assert "dense_min_quotient" in report

    def test_flat_bottom_without_dispersion_is_exactly_one(self, grid1):
        flat = build_bathymetry("flat", 0.0, grid1)
        report = coercivity_report(OperatorHandle(OperatorKind.I_PLUS_MU_TB, 0.0, flat), trials=3)
        assert report["min_quotient"] == pytest.approx(1.0, abs=1e-12)
        assert report["max_quotient"] == pytest.approx(1.0, abs=1e-12)

    def test_flat_hbA_matches_X0_gram(self, grid2):
        flat = build_bathymetry("flat", 0.0, grid2)
        report = coercivity_report(OperatorHandle(OperatorKind.HB_A, MU, flat), trials=3)
        assert report["min_quotient"] == pytest.approx(1.0, abs=1e-10)
        assert report["max_quotient"] == pytest.approx(1.0, abs=1e-10)

    def test_flat_dispersive_quotient_range(self, grid1):
        flat = build_bathymetry("flat", 0.0, grid1)
        report = coercivity_report(OperatorHandle(OperatorKind.I_PLUS_MU_TB, MU, flat), trials=3)
        assert report["max_quotient"] == pytest.approx(1.0, abs=1e-10)
        assert 1.0 / 3.0 < report["min_quotient"] < 1.0

    def test_report_is_json_ready(self, bump1):
        import json

        report = coercivity_report(OperatorHandle(OperatorKind.HB_B, MU, bump1), trials=2)
        decoded = json.loads(json.dumps(report))
        assert decoded["kind"] == "hb_B"
        assert decoded["grid"]["n"] == 32


class TestHbAEstimates:
    """Tests for hbA_estimate_report."""

    def test_flat_constants_are_at_most_one(self, grid2):
        flat = build_bathymetry("flat", 0.0, grid2)
        report = hbA_estimate_report(OperatorHandle(OperatorKind.HB_A, MU, flat), N=1, trials=4)
        assert 0 < report["C1"] <= 1.0 + 1e-10
        assert 0 < report["C2"] <= 1.0 + 1e-10

    def test_weighted_gradient_stays_curl_free(self, bump2):
        report = hbA_estimate_report(OperatorHandle(OperatorKind.HB_A, MU, bump2), N=1, trials=3)
        assert report["perp_residual"] <= 1e-8

    def test_requires_hbA_handle(self, bump1):
        with pytest.raises(OperatorError):
            hbA_estimate_report(OperatorHandle(OperatorKind.HB_B, MU, bump1))
