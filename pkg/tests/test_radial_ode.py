import math

import numpy as np
import pytest

import curvlab as cl
from curvlab.manifold import laplacian_r, scalar_curvature
from curvlab.radial_ode import ConformalExponents, Solution

E3 = cl.euclidean(3)
H3 = cl.hyperbolic(3, 1.0)
K24 = cl.ExprRadial("24")
KM6 = cl.ExprRadial("-6")

BUBBLE = cl.ExprRadial("(1 + r^2)^(-1/2)")


def bubble_exact(r):
    return (1.0 + r * r) ** -0.5


def synthetic_solution(grid, u, up, upp, status="completed"):
    grid = np.asarray(grid, dtype=float)
    return Solution(grid=grid, u=np.asarray(u, dtype=float),
                    u_prime=np.asarray(up, dtype=float),
                    u_second=np.asarray(upp, dtype=float), status=status,
                    stop_r=None, u0=float(u[0]), tol=1e-8,
                    fingerprint="synthetic", n_steps=len(grid),
                    n_rejected=0, error_budget=0.0)


class TestExponents:
    def test_three_dimensions(self):
        e = ConformalExponents.for_dimension(3)
        assert (e.c_n, e.sigma, e.alpha) == (8.0, 5.0, -4.0)

    def test_four_dimensions(self):
        e = ConformalExponents.for_dimension(4)
        assert (e.c_n, e.sigma, e.alpha) == (6.0, 3.0, -2.0)

    @pytest.mark.parametrize("n", [3, 4, 5, 7, 12])
    def test_sign_invariants(self, n):
        e = ConformalExponents.for_dimension(n)
        assert e.c_n > 0.0
        assert e.sigma > 1.0
        assert e.alpha < 0.0
        assert e.alpha == 1.0 - e.sigma

    def test_dimension_guard(self):
        with pytest.raises(ValueError):
            ConformalExponents.for_dimension(2)


class TestSolveRadial:
    def test_constant_solution_when_densities_match(self):
        sol = cl.solve_radial(H3, KM6, u0=1.0, r_max=20.0, tol=1e-10)
        assert sol.status == "completed"
        assert np.max(np.abs(sol.u - 1.0)) <= 1e-9

    def test_bubble_reproduction(self):
        sol = cl.solve_radial(E3, K24, u0=1.0, r_max=10.0, tol=1e-10)
        assert sol.status == "completed"
        exact = bubble_exact(sol.grid)
        assert np.max(np.abs(sol.u - exact) / exact) <= 1e-6

    def test_negative_density_blows_up(self):
        sol = cl.solve_radial(E3, cl.ExprRadial("-24"), u0=1.0, r_max=10.0,
                              tol=1e-9)
        assert sol.status == "blow_up"
        assert np.all(np.diff(sol.u) > 0.0)
        assert sol.u[-1] > 1e6  # pole steeper than the float radius grid
        assert sol.stop_r is not None and sol.stop_r < 10.0

    def test_against_fixed_step_rk4_reference(self):
        # independent oracle: classic RK4 at ten times the resolution
        K = cl.ExprRadial("-24")
        sol = cl.solve_radial(E3, K, u0=1.0, r_max=0.8, tol=1e-9)
        exps = ConformalExponents.for_dimension(3)

        def rhs(r, y):
            u, w = y
            k = scalar_curvature(E3, r)
            return np.array([w, (k * u - K.value(r) * u ** exps.sigma)
                             / exps.c_n - laplacian_r(E3, r) * w])

        n_ref = 10 * len(sol.grid)
        r0, r1 = sol.grid[0], 0.8
        h = (r1 - r0) / n_ref
        y = np.array([sol.u[0], sol.u_prime[0]])
        r = r0
        for _ in range(n_ref):
            k1 = rhs(r, y)
            k2 = rhs(r + h / 2, y + h / 2 * k1)
            k3 = rhs(r + h / 2, y + h / 2 * k2)
            k4 = rhs(r + h, y + h * k3)
            y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            r += h
        assert sol.u[-1] == pytest.approx(y[0], rel=1e-6)

    def test_underflow_event(self):
        # negative-curvature decay with no density: u falls like exp(-r/2)
        sol = cl.solve_radial(H3, cl.ExprRadial("0"), u0=1.0, r_max=100.0,
                              tol=1e-8)
        assert sol.status == "underflow"
        assert sol.u[-1] == pytest.approx(1e-12, rel=1e-6)
        assert np.all(sol.u > 0.0)

    def test_grid_strictly_increasing(self):
        sol = cl.solve_radial(E3, K24, u0=1.0, r_max=5.0, tol=1e-8)
        assert np.all(np.diff(sol.grid) > 0.0)

    def test_refinement_within_error_budget(self):
        a = cl.solve_radial(E3, K24, u0=1.0, r_max=10.0, tol=1e-6)
        b = cl.solve_radial(E3, K24, u0=1.0, r_max=10.0, tol=5e-7)
        assert abs(a.u[-1] - b.u[-1]) < 10.0 * a.error_budget

    def test_self_consistency_residual(self):
        for M, K, r_max in ((E3, K24, 10.0), (H3, KM6, 20.0),
                            (H3, cl.ExprRadial("1"), 5.0)):
            sol = cl.solve_radial(M, K, u0=1.0, r_max=r_max, tol=1e-8)
            rep = cl.residual(M, K, sol, sol.grid)
            assert rep.max_abs <= 100.0 * sol.tol

    def test_input_validation(self):
        with pytest.raises(ValueError):
            cl.solve_radial(E3, K24, u0=-1.0, r_max=5.0)
        with pytest.raises(ValueError):
            cl.solve_radial(E3, K24, u0=1.0, r_max=1e-6)


class TestResidual:
    def test_closed_form_bubble_is_solution(self):
        grid = np.linspace(0.01, 10.0, 300)
        rep = cl.residual(E3, K24, BUBBLE, grid)
        assert rep.classification == "solution"
        assert rep.max_abs <= 1e-8

    def test_constant_on_hyperbolic_without_density(self):
        grid = np.linspace(0.1, 10.0, 100)
        rep = cl.residual(H3, cl.ExprRadial("0"), cl.ExprRadial("1"), grid)
        assert rep.classification == "subsolution"
        assert rep.max_abs == pytest.approx(6.0, rel=1e-12)

    def test_constant_solution(self):
        grid = np.linspace(0.1, 10.0, 100)
        rep = cl.residual(H3, KM6, cl.ExprRadial("1"), grid)
        assert rep.classification == "solution"
        assert rep.max_abs <= 1e-10

    def test_supersolution_classification(self):
        # u = exp(-r^2/10) on flat space with K = 0: residual = 8 lap u < 0
        # near the pole; stays negative on a short grid
        grid = np.linspace(0.05, 1.0, 50)
        rep = cl.residual(E3, cl.ExprRadial("0"),
                          cl.ExprRadial("exp(-r^2/10)"), grid)
        assert rep.classification == "supersolution"

    def test_positive_required(self):
        grid = [1.0, 2.0]
        with pytest.raises(ValueError):
            cl.residual(E3, K24, cl.ExprRadial("r - 1.5"), grid)


class TestSupersolutionBound:
    def test_bubble_margin(self):
        sol = cl.solve_radial(E3, K24, u0=1.0, r_max=10.0, tol=1e-10)
        rep = cl.verify_supersolution_bound(E3, K24, sol)
        assert rep.passed
        # analytic margin: (1+r^2)^2 - 2 r^2 = 1 + r^4, minimized near 0
        assert rep.margin_min == pytest.approx(1.0, abs=1e-6)
        for r, v, bound in rep.trace[::40]:
            assert v - bound == pytest.approx(1.0 + r ** 4, rel=1e-5)

    def test_constant_on_hyperbolic_with_negative_density(self):
        sol = cl.solve_radial(H3, KM6, u0=1.0, r_max=20.0, tol=1e-9)
        rep = cl.verify_supersolution_bound(H3, KM6, sol)
        assert rep.passed
        assert rep.margin_min > 1.0  # bound is negative, v is one

    def test_origin_limit_is_trivial(self):
        sol = cl.solve_radial(E3, K24, u0=1.0, r_max=1.0, tol=1e-9)
        rep = cl.verify_supersolution_bound(E3, K24, sol)
        r0, v0, bound0 = rep.trace[0]
        # the bound vanishes at the pole; at the start radius it is O(r0^2)
        assert bound0 == pytest.approx(0.0, abs=1e-7)
        assert v0 >= bound0


class TestConformalLength:
    def test_constant_is_complete(self):
        sol = cl.solve_radial(H3, KM6, u0=1.0, r_max=20.0, tol=1e-9)
        res = cl.conformal_length(H3, sol, a=0.0)
        assert res.tail == "infinite"
        assert res.length == pytest.approx(20.0, rel=1e-6)

    def test_bubble_half_pi(self):
        sol = cl.solve_radial(E3, K24, u0=1.0, r_max=600.0, tol=1e-10)
        res = cl.conformal_length(E3, sol, a=0.0)
        assert res.tail == "finite"
        assert res.length == pytest.approx(math.pi / 2.0, abs=1e-6)

    def test_synthetic_reciprocal_decay(self):
        grid = np.linspace(1e-4, 400.0, 20000)
        u = 1.0 / (1.0 + grid)
        up = -1.0 / (1.0 + grid) ** 2
        upp = 2.0 / (1.0 + grid) ** 3
        sol = synthetic_solution(grid, u, up, upp)
        res = cl.conformal_length(E3, sol, a=0.0)
        assert res.tail == "finite"
        # int_0^inf (1+r)^-2 dr = 1
        assert res.length == pytest.approx(1.0, abs=1e-4)

    def test_a_beyond_grid_rejected(self):
        sol = cl.solve_radial(E3, K24, u0=1.0, r_max=2.0, tol=1e-8)
        with pytest.raises(ValueError):
            cl.conformal_length(E3, sol, a=5.0)


class TestInfEstimate:
    def test_bubble_decreases_to_zero(self):
        sol = cl.solve_radial(E3, K24, u0=1.0, r_max=50.0, tol=1e-9)
        est = cl.inf_estimate(sol)
        assert est.trend == "decreasing_to_zero"
        assert est.inf_on_grid == pytest.approx(bubble_exact(50.0), rel=1e-5)

    def test_constant_bounded_below(self):
        sol = cl.solve_radial(H3, KM6, u0=1.0, r_max=20.0, tol=1e-9)
        est = cl.inf_estimate(sol)
        assert est.trend == "bounded_below"
        assert est.inf_on_grid == 1.0

    def test_oscillatory_inconclusive(self):
        grid = np.linspace(0.1, 40.0, 2000)
        u = 1.0 + 0.5 * np.sin(grid)
        up = 0.5 * np.cos(grid)
        upp = -0.5 * np.sin(grid)
        est = cl.inf_estimate(synthetic_solution(grid, u, up, upp))
        assert est.trend == "inconclusive"


class TestSolutionJet:
    def test_node_values_exact(self):
        sol = cl.solve_radial(E3, K24, u0=1.0, r_max=5.0, tol=1e-8)
        fn = sol.jet_fn()
        i = len(sol.grid) // 2
        jet = fn.jet(float(sol.grid[i]))
        assert jet.value == sol.u[i]
        assert jet.d1 == sol.u_prime[i]
        assert jet.d2 == sol.u_second[i]

    def test_interpolation_accuracy(self):
        sol = cl.solve_radial(E3, K24, u0=1.0, r_max=5.0, tol=1e-10)
        for r in (0.313, 1.777, 4.444):
            jet = sol.jet_fn().jet(r)
            assert jet.value == pytest.approx(bubble_exact(r), rel=1e-7)

    def test_out_of_range_rejected(self):
        sol = cl.solve_radial(E3, K24, u0=1.0, r_max=2.0, tol=1e-8)
        with pytest.raises(ValueError):
            sol.jet_fn().jet(3.0)
