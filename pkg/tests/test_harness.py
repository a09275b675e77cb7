"""Checks of the estimate harness itself: every check must confirm the truths
on faithful data and flag the constructed violations."""

import numpy as np
import pytest

from pmelab import harness
from pmelab.analytic import (BarenblattSpec, barenblatt_constant_for_mass, barenblatt_field,
                             barenblatt_trajectory, heat_kernel)
from pmelab.fields import Field, Grid
from pmelab.solver import PMEProblem, SchemeConfig, solve_pme

SPEC = BarenblattSpec(m=2.0, n=1, C=1.0 / 12.0)


class TestMassCheck:
    def test_zero_flux_run_passes(self, regression_run):
        rep = harness.check_mass(regression_run.fields)
        assert rep.passed
        assert rep.statistic <= 1e-12

    def test_leaky_boundary_fails(self):
        grid = Grid(1, 2.0, 201)
        prob = PMEProblem(m=2.0, initial={"kind": "bump", "radius": 1.9},
                          t0=0.0, t1=1.0, snapshot_times=(0.0, 0.5, 1.0))
        traj = solve_pme(prob, grid, SchemeConfig(boundary="zero-value"))
        rep = harness.check_mass(traj.fields)
        assert not rep.passed
        assert rep.statistic > 1e-6

    def test_heat_run_passes(self):
        grid = Grid(1, 15.0, 301)
        prob = PMEProblem(m=1.0, initial={"kind": "gaussian"}, t0=0.0, t1=0.5,
                          snapshot_times=(0.0, 0.5))
        traj = solve_pme(prob, grid, SchemeConfig())
        assert harness.check_mass(traj.fields).passed


class TestTimeDerivativeCheck:
    def test_source_solution_passes(self, regression_run):
        rep = harness.check_time_derivative(regression_run.fields, 2.0)
        assert rep.passed

    def test_constant_state_trivially_passes(self):
        grid = Grid(1, 2.0, 51)
        fields = [Field(grid, t, np.full(grid.shape, 0.3)) for t in (1.0, 1.5, 2.0)]
        rep = harness.check_time_derivative(fields, 2.0)
        assert rep.passed and rep.statistic >= 0.0

    def test_mislabeled_exponent_fails(self, regression_run):
        rep = harness.control_mislabeled_exponent(regression_run.fields, 2.0, 5.0)
        assert not rep.passed
        # worst cell is the center at t=1: the forward difference of C t^(-1/3)
        # over dt=0.1 plus the mislabeled allowance u/(4t)
        expected = SPEC.C * ((1.1 ** (-1.0 / 3.0) - 1.0) / 0.1 + 0.25)
        assert rep.statistic == pytest.approx(expected, rel=0.02)

    def test_needs_degenerate_exponent(self, regression_run):
        with pytest.raises(ValueError):
            harness.check_time_derivative(regression_run.fields, 1.0)


class TestPressureCheck:
    def test_analytic_equality_calibration(self):
        grid = Grid(1, 4.0, 401)
        for t in (1.0, 2.0, 4.0):
            res = harness.pressure_laplacian_residual(
                barenblatt_field(grid, t, SPEC), 2.0, 1)
            assert res["max_abs"] <= 5.0 * grid.dx**2

    def test_solver_trajectory_passes(self, regression_run):
        rep = harness.check_pressure_laplacian(regression_run.fields, 2.0, 1)
        assert rep.passed

    def test_constant_field_passes(self):
        grid = Grid(1, 2.0, 51)
        fields = [Field(grid, 1.0, np.full(grid.shape, 0.3))]
        rep = harness.check_pressure_laplacian(fields, 2.0, 1)
        assert rep.passed
        assert rep.statistic == pytest.approx(1.0 / 3.0, rel=1e-12)  # lap p = 0

    def test_mislabel_shifts_bound(self, regression_run):
        # wrong m makes the shift n/((n(m-1)+2)t) inconsistent with the data;
        # with m labeled 1.2 the pressure is u^0.2 whose interior laplacian
        # is strongly negative near the center
        rep = harness.check_pressure_laplacian(regression_run.fields, 1.2, 1)
        assert not rep.passed


class TestGradientDecayCheck:
    def test_bound_holds_across_decade(self):
        grid = Grid(1, 12.0, 801)
        fields = barenblatt_trajectory(grid, (1.0, 2.0, 5.0, 10.0), SPEC)
        M = fields[0].sup()
        rep = harness.check_gradient_decay(fields, 2.0, 1.5, M)
        assert rep.passed
        # closed form: statistic = t^{-2/3}/12, largest at t=1
        assert rep.statistic == pytest.approx(1.0 / 12.0, rel=0.01)

    def test_constant_field_scores_zero(self):
        grid = Grid(1, 2.0, 51)
        rep = harness.check_gradient_decay(
            [Field(grid, 1.0, np.full(grid.shape, 0.3))], 2.0, 1.5, 0.3)
        assert rep.passed and rep.statistic == 0.0

    def test_frozen_snapshot_fails(self, regression_run):
        M = regression_run.diagnostics["initial_sup"]
        rep = harness.control_frozen_snapshot(regression_run.fields[0], 2.0, 1.5, M)
        assert not rep.passed
        assert rep.statistic > 1.0


class TestSupDecayCheck:
    def test_source_solution_is_the_equality_case(self, regression_run):
        rep = harness.check_sup_decay(regression_run.fields, 2.0, 1)
        assert rep.passed
        # sup u * t^(1/3) is exactly C along the source solution
        assert rep.statistic == pytest.approx(SPEC.C, rel=1e-3)

    def test_heat_kernel_analogue(self):
        # kernel data labeled by its own age: sup v * t^(n/2) is constant
        # (domain sized so the kernel tail stays under the boundary monitor)
        grid = Grid(1, 24.0, 961)
        prob = PMEProblem(m=1.0, initial={"kind": "gaussian", "sigma": np.sqrt(2.0),
                                          "amplitude": (4.0 * np.pi) ** -0.5},
                          t0=1.0, t1=4.0, snapshot_times=(1.0, 2.0, 4.0))
        traj = solve_pme(prob, grid, SchemeConfig())
        rep = harness.check_sup_decay(traj.fields, 1.0, 1)
        assert rep.passed
        assert rep.statistic == pytest.approx((4.0 * np.pi) ** -0.5, rel=1e-3)

    def test_bump_settles_to_decay(self):
        grid = Grid(1, 10.0, 401)
        prob = PMEProblem(m=2.0, initial={"kind": "bump", "radius": 0.5},
                          t0=0.0, t1=8.0, snapshot_times=(1.0, 2.0, 4.0, 8.0))
        traj = solve_pme(prob, grid, SchemeConfig())
        rep = harness.check_sup_decay(traj.fields, 2.0, 1)
        assert rep.passed


class TestPropagationCheck:
    def test_unit_mass_ratio(self):
        c = barenblatt_constant_for_mass(1.0, 2.0, 1)
        spec = BarenblattSpec(m=2.0, n=1, C=c)
        grid = Grid(1, 12.0, 801)
        fields = barenblatt_trajectory(grid, (1.0, 8.0, 64.0), spec)
        rep = harness.check_propagation(fields, 2.0, 1, 1.0)
        assert rep.passed
        for ratio in rep.params["radius_over_bound"]:
            assert ratio == pytest.approx(18.0 ** (1.0 / 3.0), rel=0.03)

    def test_bump_run_passes(self):
        grid = Grid(1, 10.0, 401)
        prob = PMEProblem(m=2.0, initial={"kind": "bump", "radius": 0.5},
                          t0=0.0, t1=4.0, snapshot_times=(1.0, 2.0, 4.0))
        traj = solve_pme(prob, grid, SchemeConfig())
        rep = harness.check_propagation(traj.fields, 2.0, 1,
                                        traj.diagnostics["initial_mass"])
        assert rep.passed

    def test_narrow_data_short_time(self):
        # radius >= delta while the bound vanishes as t -> 0+
        grid = Grid(1, 4.0, 801)
        prob = PMEProblem(m=2.0, initial={"kind": "bump", "radius": 0.3},
                          t0=0.0, t1=0.01, snapshot_times=(0.005, 0.01))
        traj = solve_pme(prob, grid, SchemeConfig())
        rep = harness.check_propagation(traj.fields, 2.0, 1,
                                        traj.diagnostics["initial_mass"])
        assert rep.passed


class TestHolderScan:
    def test_constant_trajectory_scores_zero(self):
        grid = Grid(1, 2.0, 101)
        fields = [Field(grid, t, np.full(grid.shape, 0.3)) for t in (1.0, 2.0)]
        est = harness.holder_quotient(fields, 2.5, n_random=1000, seed=0)
        assert est.nu_hat == 0.0
        assert est.sample_count >= 1000

    def test_admissible_exponent_is_stable(self):
        spec3 = BarenblattSpec(m=3.0, n=1, C=1.0 / 12.0)
        levels = [barenblatt_trajectory(Grid(1, 4.0, n), (1.0, 2.0, 4.0), spec3)
                  for n in (201, 401, 801, 1601)]
        rep = harness.check_holder_stability(levels, h=2.5, seed=7)
        assert rep.passed
        assert rep.statistic < 0.05

    def test_supercritical_exponent_grows(self):
        spec3 = BarenblattSpec(m=3.0, n=1, C=1.0 / 12.0)
        levels = [barenblatt_trajectory(Grid(1, 4.0, n), (1.0, 2.0, 4.0), spec3)
                  for n in (201, 401, 801, 1601)]
        rep = harness.control_supercritical_exponent(levels, inv_h=0.6, seed=7)
        assert not rep.passed
        nus = rep.params["nu_hats"]
        # growth per refinement is ~2^0.1 (interface exponent 1/2 vs 0.6)
        for a, b in zip(nus, nus[1:]):
            assert b / a == pytest.approx(2.0 ** 0.1, rel=0.02)

    def test_deterministic_given_seed(self, regression_run):
        est1 = harness.holder_quotient(regression_run.fields, 1.5, n_random=5000, seed=3)
        est2 = harness.holder_quotient(regression_run.fields, 1.5, n_random=5000, seed=3)
        assert est1.nu_hat == est2.nu_hat

    def test_window_restriction_reduces_pairs(self, regression_run):
        wide = harness.holder_quotient(regression_run.fields, 1.5, n_random=2000, seed=1)
        narrow = harness.holder_quotient(regression_run.fields, 1.5, K=0.5,
                                         n_random=2000, seed=1)
        assert narrow.sample_count < wide.sample_count
        assert 0.0 < narrow.nu_hat <= wide.nu_hat * (1.0 + 1e-12)

    def test_2d_scan_runs_adjacency_and_interface_families(self):
        spec2 = BarenblattSpec(m=2.0, n=2, C=1.0 / 16.0)
        fields = barenblatt_trajectory(Grid(2, 3.0, 61), (1.0, 2.0), spec2)
        est = harness.holder_quotient(fields, 1.5, n_random=5000, seed=2)
        assert np.isfinite(est.nu_hat) and est.nu_hat > 0
        # adjacency on both axes plus the cell x interface family
        assert est.sample_count > 2 * 60 * 61 * 2 + 5000


@pytest.fixture(scope="module")
def sweep():
    grid = Grid(1, 15.0, 601)
    prob = PMEProblem(m=1.5, initial={"kind": "gaussian"}, t0=0.0, t1=1.0,
                      snapshot_times=(0.0, 0.25, 0.5, 0.75, 1.0))
    return harness.heat_closeness_sweep([1.5, 1.25, 1.1, 1.0], 10.0, prob,
                                        grid, SchemeConfig())


class TestHeatCloseness:
    def test_identical_equations_give_zero(self, sweep):
        reports, _ = sweep
        by_m = {r.params["m"]: r for r in reports}
        assert by_m[1.0].statistic == 0.0

    def test_strictly_decreasing_toward_heat(self, sweep):
        _, trend = sweep
        assert trend.passed
        stats = trend.params["statistics"]
        assert all(b < a for a, b in zip(stats, stats[1:]))

    def test_fitted_constant_covers_sweep(self, sweep):
        reports, _ = sweep
        for r in reports:
            assert r.passed

    def test_rejects_unsorted_sweep(self):
        grid = Grid(1, 15.0, 301)
        prob = PMEProblem(m=1.5, initial={"kind": "gaussian"}, t0=0.0, t1=0.5,
                          snapshot_times=(0.5,))
        with pytest.raises(ValueError):
            harness.heat_closeness_sweep([1.1, 1.5], 10.0, prob, grid, SchemeConfig())

    def test_affine_fit_has_small_residual(self):
        grid = Grid(1, 15.0, 301)
        prob = PMEProblem(m=1.5, initial={"kind": "gaussian"}, t0=0.0, t1=0.5,
                          snapshot_times=(0.0, 0.25, 0.5))
        rep = harness.heat_closeness_affine_fit([1.5, 1.25, 1.1], [5.0, 10.0, 14.0],
                                                prob, grid, SchemeConfig())
        assert rep.passed
        assert rep.statistic < 0.10
        # the (m-1) coefficient carries the signal and must be positive
        assert rep.params["coefficients"][0] > 0

    def test_affine_fit_needs_a_grid(self):
        grid = Grid(1, 15.0, 301)
        prob = PMEProblem(m=1.5, initial={"kind": "gaussian"}, t0=0.0, t1=0.5,
                          snapshot_times=(0.5,))
        with pytest.raises(ValueError):
            harness.heat_closeness_affine_fit([1.5], [5.0, 10.0], prob, grid,
                                              SchemeConfig())


def test_reports_are_deterministic(regression_run):
    a = harness.check_gradient_decay(regression_run.fields, 2.0, 1.5,
                                     regression_run.diagnostics["initial_sup"])
    b = harness.check_gradient_decay(regression_run.fields, 2.0, 1.5,
                                     regression_run.diagnostics["initial_sup"])
    assert a.record() == b.record()
