import math

import numpy as np
import pytest

import curvlab as cl

E3 = cl.euclidean(3)
H3 = cl.hyperbolic(3, 1.0)
H4C2 = cl.hyperbolic(4, 2.0)
# the same hyperbolic geometry through the generic expression route
H3_EXPR = cl.from_warp(3, "sinh(r)")
SANDWICH = cl.from_warp(3, "(r + sinh(r))/2")
CUBIC = cl.from_warp(3, "r + r^3/6")


class TestConstruction:
    def test_dimension_guard(self):
        with pytest.raises(cl.InvalidDimension):
            cl.euclidean(2)

    def test_warp_pole_conditions(self):
        with pytest.raises(cl.WarpValidationError):
            cl.from_warp(3, "cosh(r)")          # h(0) = 1
        with pytest.raises(cl.WarpValidationError):
            cl.from_warp(3, "2*r")              # h'(0) = 2

    def test_unit_sphere_areas(self):
        assert cl.sphere_area_unit(3) == pytest.approx(4 * math.pi, rel=1e-15)
        assert cl.sphere_area_unit(2) == pytest.approx(2 * math.pi, rel=1e-15)
        assert cl.sphere_area_unit(4) == pytest.approx(2 * math.pi ** 2, rel=1e-15)
        with pytest.raises(cl.InvalidDimension):
            cl.sphere_area_unit(1)

    def test_ball_constant(self):
        assert E3.omega_ball == pytest.approx(4 * math.pi / 3, rel=1e-15)


class TestGeometry:
    def test_sphere_volume(self):
        assert cl.volume_sphere(E3, 2.0) == pytest.approx(16 * math.pi, rel=1e-12)
        assert cl.volume_sphere(H3, 1.0) == pytest.approx(
            4 * math.pi * math.sinh(1.0) ** 2, rel=1e-12)
        assert cl.volume_sphere(H3, 0.0) == 0.0
        assert cl.volume_sphere(SANDWICH, 0.0) == 0.0

    def test_laplacian(self):
        assert cl.laplacian_r(E3, 2.0) == pytest.approx(1.0, rel=1e-14)
        assert cl.laplacian_r(H3, 1.0) == pytest.approx(2 / math.tanh(1.0),
                                                        rel=1e-12)
        # (n-1)c coth(cr) -> (n-1)c for large r
        assert cl.laplacian_r(H4C2, 50.0) == pytest.approx(6.0, abs=1e-10)
        with pytest.raises(cl.PoleError):
            cl.laplacian_r(E3, 0.0)

    def test_laplacian_generic_path_matches_preset(self):
        for r in (0.1, 0.5, 1.0, 2.0, 5.0, 10.0):
            assert cl.laplacian_r(H3_EXPR, r) == pytest.approx(
                cl.laplacian_r(H3, r), rel=1e-12)

    def test_pole_series_guard(self):
        # below the pole cutoff the series must reproduce (n-1)c coth(cr)
        r = 1e-7
        expected = 2.0 / math.tanh(r)
        assert cl.laplacian_r(H3_EXPR, r) == pytest.approx(expected, rel=1e-9)

    def test_scalar_curvature(self):
        assert cl.scalar_curvature(E3, 1.0) == 0.0
        assert cl.scalar_curvature(H3, 1.0) == pytest.approx(-6.0, rel=1e-12)
        assert cl.scalar_curvature(H4C2, 0.5) == pytest.approx(-48.0, rel=1e-12)

    def test_scalar_curvature_generic_path(self):
        for r in (0.1, 1.0, 5.0):
            assert cl.scalar_curvature(H3_EXPR, r) == pytest.approx(-6.0,
                                                                    rel=1e-11)
        # limit value at the pole
        assert cl.scalar_curvature(H3_EXPR, 0.0) == pytest.approx(-6.0,
                                                                  rel=1e-6)

    def test_ball_volume(self):
        assert cl.ball_volume(E3, 1.0) == pytest.approx(4 * math.pi / 3,
                                                        rel=1e-10)
        assert cl.ball_volume(H3, 1.0) == pytest.approx(
            math.pi * (math.sinh(2.0) - 2.0), rel=1e-10)
        assert cl.ball_volume(E3, 0.0) == 0.0


class TestInvariants:
    @pytest.mark.parametrize("M", [E3, H3, H4C2, SANDWICH, CUBIC],
                             ids=["E3", "H3", "H4c2", "sandwich", "cubic"])
    def test_laplacian_is_log_volume_derivative(self, M):
        for r in (0.2, 0.7, 1.5, 3.0, 8.0):
            h = 1e-6 * max(r, 1.0)
            fd = (math.log(cl.volume_sphere(M, r + h))
                  - math.log(cl.volume_sphere(M, r - h))) / (2 * h)
            assert cl.laplacian_r(M, r) == pytest.approx(fd, abs=1e-8 * (1 + abs(fd)))

    @pytest.mark.parametrize("M", [E3, H3, H4C2, SANDWICH, CUBIC],
                             ids=["E3", "H3", "H4c2", "sandwich", "cubic"])
    def test_laplacian_comparison_lower_bound(self, M):
        for r in np.linspace(0.05, 20.0, 100):
            assert cl.laplacian_r(M, r) >= (M.n - 1) / r - 1e-10

    @pytest.mark.parametrize("M", [E3, H3, SANDWICH, CUBIC],
                             ids=["E3", "H3", "sandwich", "cubic"])
    def test_scalar_curvature_nonpositive(self, M):
        for r in np.linspace(0.05, 15.0, 60):
            assert cl.scalar_curvature(M, r) <= 1e-10

    @pytest.mark.parametrize("M", [E3, H3, SANDWICH, CUBIC],
                             ids=["E3", "H3", "sandwich", "cubic"])
    def test_ball_volume_comparison(self, M):
        for r in (0.5, 1.0, 2.0, 5.0):
            assert cl.ball_volume(M, r) >= r ** M.n * M.omega_ball - 1e-9 * r ** M.n

    @pytest.mark.parametrize("M", [H3, SANDWICH], ids=["H3", "sandwich"])
    def test_pinching_gives_laplacian_sandwich(self, M):
        report = cl.check_curvature(M, 20.0, 128)
        c = report.pinching_c
        assert c is not None and c > 0.0
        for r in np.linspace(0.2, 20.0, 64):
            assert ((M.n - 1) / r - 1e-10 <= cl.laplacian_r(M, r)
                    <= (M.n - 1) * c / math.tanh(c * r) + 1e-10)


class TestCurvatureReport:
    def test_euclidean_valid_zero_pinching(self):
        report = cl.check_curvature(E3, 10.0)
        assert report.valid
        assert report.pinching_c == 0.0

    def test_sin_warp_invalid(self):
        M = cl.from_warp(3, "sin(r)")
        report = cl.check_curvature(M, 3.0)
        assert not report.valid
        assert any(which == "radial" for _, which, _ in report.violations)

    def test_sinh_warp_valid_unit_pinching(self):
        report = cl.check_curvature(cl.from_warp(3, "sinh(r)"), 10.0)
        assert report.valid
        assert report.pinching_c == pytest.approx(1.0, abs=1e-9)

    def test_bounded_pinching_despite_interior_dip(self):
        # h = sinh(r) + r^3 dips below -1 in the middle but settles back
        M = cl.from_warp(3, "sinh(r) + r^3")
        report = cl.check_curvature(M, 30.0)
        assert report.valid
        assert report.pinching_c is not None
        assert report.pinching_c > 1.0

    def test_unbounded_curvature_reports_no_pinching(self):
        # h = r exp(r^2): radial curvature -(6 + 4 r^2) keeps sinking
        M = cl.from_warp(3, "r*exp(r^2)")
        report = cl.check_curvature(M, 10.0)
        assert report.valid
        assert report.pinching_c is None

    def test_grid_validation(self):
        with pytest.raises(ValueError):
            cl.check_curvature(E3, 10.0, n_grid=4)
        with pytest.raises(ValueError):
            cl.check_curvature(E3, -1.0)


class TestSphereAverage:
    def test_radial_function_is_exact(self):
        mean, err = cl.sphere_average(H3, cl.ExprRadial("r^2"), 1.7)
        assert mean == 1.7 ** 2
        assert err == 0.0

    def test_first_harmonic_averages_to_zero(self):
        mean, err = cl.sphere_average(E3, lambda r, xi: xi[2], 2.0,
                                      n_samples=4000, seed=3)
        assert err > 0.0
        assert abs(mean) <= 3.0 * err

    def test_linear_term_drops_out(self):
        f = lambda r, xi: r * r * (1.0 + xi[2])
        mean, err = cl.sphere_average(E3, f, 2.0, n_samples=4000, seed=5)
        assert abs(mean - 4.0) <= 3.0 * err

    def test_deterministic_for_fixed_seed(self):
        f = lambda r, xi: math.exp(xi[0]) + r
        a = cl.sphere_average(E3, f, 1.0, n_samples=500, seed=11)
        b = cl.sphere_average(E3, f, 1.0, n_samples=500, seed=11)
        assert a == b

    def test_sample_floor(self):
        with pytest.raises(ValueError):
            cl.sphere_average(E3, lambda r, xi: 1.0, 1.0, n_samples=10)
