import math

import numpy as np
import pytest

from declaw.errors import AnalysisError, ConfigurationError, DomainError, ValidationError
from declaw.grid import FarField, GridFunction, LatticeSpec, Periodic
from declaw.harness import (
    Check,
    DecaySeries,
    PropertyReport,
    bump_initial,
    burgers_box_exact,
    check_dyadic_blocks,
    check_properties,
    check_truncation_convergence,
    dyadic_blocks_initial,
    run_contraction_suite,
    run_kplus_suite,
    run_maxmin_suite,
    run_periodic_decay,
    run_sandwich_decay,
    run_whole_space_decay,
    schedule_snapshots,
    threshold_decay_check,
)
from declaw.model import burgers_model, linear_model
from declaw.solver import SolverConfig, solve, solve_pair, truncation_sequence

LAT = LatticeSpec(np.array([[1.0]]))


class TestExactSolution:
    def test_plateau_point(self):
        # 0.5 < 1.2 <= 1.25, inside the moving plateau
        assert burgers_box_exact(0.5, np.array([1.2]))[0] == 1.0

    def test_fan_point(self):
        assert burgers_box_exact(1.0, np.array([0.5]))[0] == pytest.approx(0.5, abs=1e-15)

    def test_beyond_late_shock(self):
        # mass conservation places the late shock at sqrt(2 t) = 4 < 5
        assert burgers_box_exact(8.0, np.array([5.0]))[0] == 0.0

    def test_negative_time_rejected(self):
        with pytest.raises(DomainError):
            burgers_box_exact(-0.1, np.array([0.0]))

    @pytest.mark.parametrize("t", [0.5, 1.0, 2.0, 3.0, 7.0])
    def test_mass_is_conserved(self, t):
        dx = 1e-6
        lo, hi = -0.5, max(1 + t / 2, math.sqrt(2 * t)) + 0.5
        total = 0.0
        n = int((hi - lo) / dx)
        chunk = 2_000_000
        for s in range(0, n, chunk):
            e = min(s + chunk, n)
            xs = lo + (np.arange(s, e) + 0.5) * dx
            total += burgers_box_exact(t, xs).sum() * dx
        assert total == pytest.approx(1.0, abs=1e-6)

    def test_profile_continuous_at_the_regime_change(self):
        xs = np.linspace(-0.5, 3.5, 2001)
        below = burgers_box_exact(2.0 - 1e-9, xs)
        above = burgers_box_exact(2.0 + 1e-9, xs)
        # the shock sits at x = 2 in both regimes; compare away from it
        away = np.abs(xs - 2.0) > 1e-6
        assert np.abs((below - above)[away]).max() < 1e-6


class TestBlocksInitial:
    def test_single_block(self):
        g = dyadic_blocks_initial(1, (0, 10), 1000)
        assert g.mass() == pytest.approx(1.0, abs=1e-12)
        xs = g.axis_centers(0)
        inner = g.values[(xs > 2.1) & (xs < 2.9)]
        assert np.abs(inner - 1.0).max() < 1e-12

    def test_three_blocks_total_mass(self):
        g = dyadic_blocks_initial(3, (0, 40), 4000)
        assert g.mass() == pytest.approx(6.0, abs=1e-12)

    def test_zero_blocks_rejected(self):
        with pytest.raises(ValidationError):
            dyadic_blocks_initial(0, (0, 10), 100)

    def test_small_domain_rejected(self):
        with pytest.raises(ConfigurationError):
            dyadic_blocks_initial(3, (0, 9), 100)


class TestBlockPersistence:
    def test_initial_norm_with_zero_horizon(self):
        report, series, _ = check_dyadic_blocks(1, 1000, 0.0, 0.9, domain=(0, 10))
        assert series.x_norms[0] >= 1.0 - 10.0 / 1000 - 1e-12
        assert report.get("block_persistence").passed

    def test_moderate_run_passes(self):
        report, series, _ = check_dyadic_blocks(3, 1500, 1.0, 0.9, domain=(0, 40))
        assert report.passed
        assert min(series.x_norms) > 0.9

    def test_impossible_threshold_fails(self):
        # threshold above the window capacity 2 * max|u| exercises the fail path
        report, _, _ = check_dyadic_blocks(3, 800, 0.5, 2.5, domain=(0, 40))
        assert not report.get("block_persistence").passed

    def test_finer_grids_keep_more_mass(self):
        _, coarse, _ = check_dyadic_blocks(3, 600, 1.0, 0.5, domain=(0, 40))
        _, fine, _ = check_dyadic_blocks(3, 1200, 1.0, 0.5, domain=(0, 40))
        assert min(fine.x_norms) >= min(coarse.x_norms) - 1e-9

    def test_horizon_precondition(self):
        with pytest.raises(ConfigurationError):
            check_dyadic_blocks(3, 500, 5.0, 0.9, domain=(0, 40))


class TestPeriodicDecay:
    def test_quadratic_flux_decays(self):
        n = 256
        u0 = GridFunction.from_callable([0.0], 1 / n, n, Periodic(),
                                        lambda x: 0.5 * np.sin(2 * np.pi * x))
        cfg = SolverConfig(cfl=0.45, t_end=8.0, snapshot_times=schedule_snapshots(8.0, 16))
        series, report = run_periodic_decay(burgers_model(urange=(-1, 1)), u0, LAT, cfg,
                                            fraction=0.2)
        assert report.passed
        assert series.l1_norms[-1] < 0.2 * series.l1_norms[0]

    def test_constant_data_gives_zero_series(self):
        u0 = GridFunction([0.0], 1 / 64, np.full(64, 0.3), Periodic())
        cfg = SolverConfig(cfl=0.45, t_end=1.0, snapshot_times=(0.5, 1.0))
        series, report = run_periodic_decay(burgers_model(urange=(-1, 1)), u0, LAT, cfg,
                                            fraction=0.5)
        assert max(series.l1_norms) == 0.0
        assert max(series.x_norms) == 0.0

    def test_affine_flux_is_flagged_and_does_not_decay(self):
        n = 512
        u0 = GridFunction.from_callable([0.0], 1 / n, n, Periodic(),
                                        lambda x: 0.5 * np.sin(2 * np.pi * x))
        cfg = SolverConfig(cfl=0.5, t_end=2.0, snapshot_times=(1.0, 2.0))
        series, report = run_periodic_decay(linear_model(1.0, urange=(-1, 1)), u0, LAT, cfg,
                                            fraction=0.05)
        assert not report.get("decay_hypothesis").passed
        assert report.get("decay_hypothesis").details["note"] == "hypothesis unverified"
        assert not report.get("mean_distance_decay").passed
        assert series.l1_norms[-1] > 0.9 * series.l1_norms[0]


class TestSandwich:
    def setup_method(self):
        h = 1 / 32
        self.u0 = bump_initial(-8.0, h, int(16 / h), mass=1.0, half_width=1.0)
        self.cfg = SolverConfig(cfl=0.45, t_end=4.0, snapshot_times=(0.5, 1.0, 2.0, 4.0))
        self.model = burgers_model(urange=(-1, 1))

    def test_orderings_and_bound_hold(self):
        series, report = run_sandwich_decay(self.u0, self.model, LAT, 4.0, self.cfg)
        assert report.passed
        assert report.get("sandwich_upper").slack >= -1e-10
        assert report.get("sandwich_lower").slack >= -1e-10
        assert report.get("window_bound").slack >= -1e-10
        assert series["whole"].bound_rhs is not None
        finals = series["final_snapshots"]
        assert np.all(finals["lower"].values <= finals["middle"].values + 1e-10)
        assert np.all(finals["middle"].values <= finals["upper"].values + 1e-10)

    def test_doubling_the_period_shrinks_the_bound(self):
        s4, _ = run_sandwich_decay(self.u0, self.model, LAT, 4.0, self.cfg)
        s8, _ = run_sandwich_decay(self.u0, self.model, LAT, 8.0, self.cfg)
        assert s8["whole"].bound_rhs[0] < s4["whole"].bound_rhs[0]

    def test_degenerate_model_rejected_before_solving(self):
        with pytest.raises(AnalysisError):
            run_sandwich_decay(self.u0, linear_model(1.0, urange=(-1, 1)), LAT, 4.0, self.cfg)

    def test_zero_data_collapses_to_constants(self):
        h = 1 / 32
        z = GridFunction([-8.0], h, np.zeros(int(16 / h)), FarField(0.0))
        series, report = run_sandwich_decay(z, self.model, LAT, 4.0, self.cfg)
        assert report.passed
        assert max(series["whole"].x_norms) == 0.0

    def test_two_dimensional_sandwich(self):
        from declaw.poly import PiecewisePoly
        from declaw.model import ScalarModel

        span = (-2.0, 2.0)
        f1 = PiecewisePoly.from_poly([0.0, 0.0, 0.5], span)
        f2 = PiecewisePoly.from_poly([0.0, 0.0, 1.0 / 3.0], span)
        zero = PiecewisePoly.zero(span)
        model = ScalarModel.build(2, (f1, f2), ((zero, zero), (zero, zero)), (-1, 1))
        h = 1 / 8
        n = int(8 / h)

        def bump2(x, y):
            sx = np.clip(1 - x * x, 0.0, None)
            sy = np.clip(1 - y * y, 0.0, None)
            return 0.5 * sx * sy

        u0 = GridFunction.from_callable([-4.0, -4.0], h, (n, n), FarField(0.0), bump2)
        lat2 = LatticeSpec(np.eye(2))
        cfg = SolverConfig(cfl=0.3, t_end=0.5, snapshot_times=(0.25, 0.5))
        series, report = run_sandwich_decay(u0, model, lat2, 2.0, cfg)
        assert report.passed
        finals = series["final_snapshots"]
        assert finals["middle"].dim == 2
        assert np.all(finals["lower"].values <= finals["middle"].values + 1e-10)
        assert np.all(finals["middle"].values <= finals["upper"].values + 1e-10)


class TestPeriodicUniqueness:
    def setup_method(self):
        n = 128
        self.u0 = GridFunction.from_callable([0.0], 1 / n, n, Periodic(),
                                             lambda x: 0.4 * np.sin(2 * np.pi * x))
        self.model = burgers_model(urange=(-1, 1))
        self.cfg = SolverConfig(cfl=0.45, t_end=3.0, snapshot_times=(1.0, 2.0, 3.0))

    def test_routes_from_above_and_below_coincide(self):
        from declaw.harness import check_periodic_uniqueness

        rep, gap = check_periodic_uniqueness(self.u0, self.model, self.cfg,
                                             above=0.6, below=-0.6,
                                             inner_periods=2, total_periods=4)
        assert rep.passed
        assert gap <= 1e-8

    def test_gap_shrinks_with_the_truncation_radius(self):
        from declaw.harness import check_periodic_uniqueness

        _, gap1 = check_periodic_uniqueness(self.u0, self.model, self.cfg,
                                            above=0.6, below=-0.6,
                                            inner_periods=1, total_periods=4,
                                            gap_tol=1.0)
        _, gap2 = check_periodic_uniqueness(self.u0, self.model, self.cfg,
                                            above=0.6, below=-0.6,
                                            inner_periods=2, total_periods=4,
                                            gap_tol=1.0)
        assert gap1 > 0.1  # the close truncation is felt at the center
        assert gap2 < gap1

    def test_levels_must_bracket_the_data(self):
        from declaw.harness import check_periodic_uniqueness

        with pytest.raises(ConfigurationError):
            check_periodic_uniqueness(self.u0, self.model, self.cfg,
                                      above=0.3, below=-0.6)


class TestWholeSpaceDecay:
    def test_bump_decays_well_past_half(self):
        # triangle-profile decay puts the half-way crossing near t = 47 for
        # this mass, so a horizon of 60 leaves margin
        h = 0.1
        n = int(60 / h)
        u0 = bump_initial(-30.0, h, n, mass=0.5, half_width=1.0)
        cfg = SolverConfig(cfl=0.45, t_end=60.0, snapshot_times=schedule_snapshots(60.0, 12))
        series, report = run_whole_space_decay(u0, burgers_model(urange=(-1, 1)), cfg,
                                               fraction=0.5)
        assert report.passed
        assert series.x_norms[-1] < 0.5 * series.x_norms[0]


class TestPropertyChecks:
    def test_identical_pair_has_zero_slack(self):
        m = burgers_model(urange=(-1, 1))
        g = GridFunction([0.0], 1 / 100, np.sin(np.linspace(0, 2 * np.pi, 100)) * 0.4,
                         Periodic())
        cfg = SolverConfig(cfl=0.45, t_end=0.2, snapshot_times=(0.1, 0.2))
        a, b = solve_pair(g, g, m, cfg)
        rep = check_properties(a, b)
        assert rep.get("l1_contraction").passed
        assert rep.get("comparison").slack == 0.0

    def test_one_sided_bounds_for_far_field_runs(self):
        m = burgers_model(urange=(-1, 1))
        g = GridFunction.from_callable([-3.0], 6 / 300, 300, FarField(0.0),
                                       lambda x: 0.5 * np.exp(-4 * x ** 2))
        cfg = SolverConfig(cfl=0.45, t_end=0.5, snapshot_times=(0.25, 0.5))
        rep = check_properties(solve(g, m, cfg))
        assert rep.get("k_plus_bound").passed
        assert rep.get("k_minus_bound").passed
        assert rep.get("max_min_principle").passed

    def test_mass_below_the_far_level_cannot_grow(self):
        # a dip refilling from the sides must not deepen in the one-sided sense
        m = burgers_model(urange=(-1, 1))
        g = GridFunction.from_callable([-3.0], 6 / 300, 300, FarField(0.3),
                                       lambda x: 0.3 - 0.25 * np.exp(-4 * x ** 2))
        cfg = SolverConfig(cfl=0.45, t_end=0.5, snapshot_times=(0.25, 0.5))
        rep = check_properties(solve(g, m, cfg))
        assert rep.get("k_minus_bound").passed

    def test_mismatched_grids_rejected(self):
        m = burgers_model(urange=(-1, 1))
        g1 = GridFunction([0.0], 1 / 64, np.zeros(64), Periodic())
        g2 = GridFunction([0.0], 1 / 32, np.zeros(32), Periodic())
        cfg = SolverConfig(t_end=0.1)
        t1, t2 = solve(g1, m, cfg), solve(g2, m, cfg)
        with pytest.raises(ConfigurationError):
            check_properties(t1, t2)


class TestTruncationConvergence:
    def test_family_converges_inside(self):
        m = burgers_model(urange=(-1, 1))
        h = 0.02
        u0 = bump_initial(-22.0, h, int(44 / h), mass=0.3, half_width=1.0)
        u0 = GridFunction(u0.origin, u0.cell_size, np.minimum(u0.values, 0.2), FarField(0.0))
        cfg = SolverConfig(cfl=0.45, t_end=14.0, snapshot_times=(2.0, 8.0, 14.0))
        trajs = truncation_sequence(u0, m, cfg, [0.5, 0.4, 0.3], [5.0, 10.0, 15.0])
        rep = check_truncation_convergence(trajs, inner_half_width=2.0)
        assert rep.passed

    def test_needs_at_least_three(self):
        with pytest.raises(ConfigurationError):
            check_truncation_convergence([None, None])


class TestSuites:
    def test_seeded_suites_pass_quickly(self):
        assert run_maxmin_suite(cases=8, seed=1).passed
        assert run_contraction_suite(pairs=4, seed=2).passed
        assert run_kplus_suite(cases=4, seed=3).passed


class TestReportsAndSeries:
    def test_check_pass_iff_slack_at_least_minus_tolerance(self):
        assert Check.from_slack("x", -1e-13, 1e-12).passed
        assert not Check.from_slack("x", -1e-11, 1e-12).passed

    def test_report_json_round_trip_fields(self, tmp_path):
        rep = PropertyReport()
        rep.add(Check.from_slack("alpha", 0.5, 1e-10, note="fine"))
        p = tmp_path / "report.json"
        rep.save(p)
        import json

        data = json.loads(p.read_text())
        assert data["passed"] is True
        assert data["checks"][0]["name"] == "alpha"
        assert float(data["checks"][0]["slack"]) == 0.5

    def test_decay_series_round_trip(self, tmp_path):
        s = DecaySeries([0.0, 1.0], [1.0, 0.5], [2.0, 1.0], [0.0, 0.0], [1.0, 0.9],
                        bound_rhs=[3.0, 2.0])
        p = tmp_path / "decay.csv"
        s.to_csv(p)
        s2 = DecaySeries.from_csv(p)
        assert s2.times == s.times
        assert s2.bound_rhs == s.bound_rhs

    def test_series_validation(self):
        with pytest.raises(ValidationError):
            DecaySeries([0.0, 0.0], [1.0, 1.0], [1.0, 1.0], [0.0, 0.0], [1.0, 1.0])

    def test_threshold_decay_crossing(self):
        ok, when, slack = threshold_decay_check([0, 1, 2, 3], [1.0, 0.4, 0.2, 0.1], 0.25)
        assert ok and when == 2
        ok2, when2, _ = threshold_decay_check([0, 1, 2], [1.0, 0.1, 0.9], 0.25)
        assert not ok2 and when2 is None
