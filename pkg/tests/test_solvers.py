import numpy as np
import pytest
from numpy.testing import assert_allclose

from mograd.problems import InvalidConfig, get_problem, kkt_residual, quadratic_pair
from mograd.solvers import (
    ACCG_CONST,
    ACCG_LS,
    CONVERGED,
    KMAX,
    MFISC_CONST,
    MFISC_LS,
    STEEPEST_LS,
    VARIANTS,
    SolverConfig,
    SolverState,
    line_search_backtracking,
    mfisc_momentum,
    run_solver,
    trace_csv_rows,
)

from conftest import single_objective_problem, spd_quadratic_problem


class TestMomentum:
    def test_first_iteration_is_zero(self):
        state = SolverState(np.array([1.0, 2.0]), np.array([1.0, 2.0]), 1, 0.0)
        assert_allclose(mfisc_momentum(state, 7.0, np.array([5.0, -1.0])), [0.0, 0.0])

    def test_alpha_three_drops_correction(self, rng):
        x_prev, x_curr = rng.normal(size=2), rng.normal(size=2)
        state = SolverState(x_prev, x_curr, 5, 0.0)
        pi = mfisc_momentum(state, 3.0, rng.normal(size=2))
        assert_allclose(pi, (4.0 / 7.0) * (x_curr - x_prev), atol=0)

    def test_hand_worked_value(self):
        # m = 1, f = ||x||^2/2, x_prev = (1,0), x_curr = (0.9,0), k = 2,
        # alpha = 4: pi = (1/5)(-0.1,0) - (1/5)(0.1/0.9)(0.9,0) = (-0.04, 0)
        state = SolverState(np.array([1.0, 0.0]), np.array([0.9, 0.0]), 2, 0.0)
        pi = mfisc_momentum(state, 4.0, np.array([0.9, 0.0]))
        assert_allclose(pi, [-0.04, 0.0], atol=1e-15)

    def test_zero_gap_kills_correction_for_any_u(self):
        state = SolverState(np.ones(3), np.ones(3), 9, 0.0)
        pi = mfisc_momentum(state, 50.0, np.full(3, 1e300))
        assert_allclose(pi, np.zeros(3))


class TestLineSearch:
    def test_zero_direction_returns_initial(self):
        prob = single_objective_problem(lambda x: 0.5 * float(x @ x), lambda x: x, 2)
        s, capped = line_search_backtracking(prob, np.array([3.0, 1.0]), 10.0, 0.8, np.zeros(2))
        assert s == 10.0 and not capped

    def test_quadratic_accepts_eleventh_candidate(self):
        # for f = ||x||^2/2 along d = -grad the test accepts the first s <= 1;
        # the smallest j with 10 * 0.8^j <= 1 is j = 11 (verified by the loop)
        prob = single_objective_problem(lambda x: 0.5 * float(x @ x), lambda x: x, 2)
        w = np.array([3.0, -1.0])
        s, capped = line_search_backtracking(prob, w, 10.0, 0.8, -w)
        j = 0
        while 10.0 * 0.8**j > 1.0:
            j += 1
        assert j == 11
        assert s == pytest.approx(10.0 * 0.8**11, rel=0, abs=0)
        assert not capped

    def test_accepted_step_satisfies_inequality(self, rng):
        prob = quadratic_pair()
        for _ in range(20):
            w = rng.uniform(-2.0, 2.0, 2)
            d = rng.normal(size=2)
            s, capped = line_search_backtracking(prob, w, 10.0, 0.8, d)
            if capped:
                continue
            gain = prob.objectives(w + s * d) - prob.objectives(w)
            gain -= s * (prob.gradient_columns(w).T @ d)
            assert float(np.min(gain)) <= 0.5 * s * float(d @ d) + 1e-12

    def test_cap_flag_when_test_cannot_hold(self):
        # unit jump at the start point: the convexity-gap test fails for
        # every candidate below 2, so the shrink loop runs out
        prob = single_objective_problem(
            lambda x: float(x[0] > 0.0), lambda x: np.zeros(1), 1
        )
        s, capped = line_search_backtracking(prob, np.zeros(1), 1.0, 0.5, np.ones(1))
        assert capped
        assert s == pytest.approx(0.5**200, rel=1e-12)


class TestConfigValidation:
    def test_alpha_floor(self):
        with pytest.raises(InvalidConfig):
            SolverConfig(variant=MFISC_CONST, alpha=2.9)

    def test_variant_names(self):
        with pytest.raises(InvalidConfig):
            SolverConfig(variant="newton")
        assert set(VARIANTS) == {
            "mfisc_const",
            "accg_const",
            "mfisc_ls",
            "accg_ls",
            "steepest_ls",
        }

    def test_sigma_range(self):
        with pytest.raises(InvalidConfig):
            SolverConfig(variant=MFISC_LS, sigma=1.0)

    def test_constant_step_must_beat_lipschitz(self):
        prob = quadratic_pair()  # L = 2
        cfg = SolverConfig(variant=MFISC_CONST, step=0.6, epsilon=1e-4)
        with pytest.raises(InvalidConfig):
            run_solver(prob, cfg, np.zeros(2))

    def test_constant_step_required_without_lipschitz(self):
        prob = single_objective_problem(lambda x: float(x @ x), lambda x: 2 * x, 2)
        with pytest.raises(InvalidConfig):
            run_solver(prob, SolverConfig(variant=MFISC_CONST), np.zeros(2))

    def test_default_step_is_fraction_of_lipschitz(self):
        prob = quadratic_pair()
        trace = run_solver(
            prob, SolverConfig(variant=MFISC_CONST, epsilon=1e-4, k_max=2000), np.array([-1.0, 0.5])
        )
        assert trace.termination == CONVERGED
        assert trace.steps[0] == pytest.approx(0.45)


class TestConstantStepRuns:
    def test_pareto_start_stops_immediately(self):
        prob = quadratic_pair()
        cfg = SolverConfig(variant=MFISC_CONST, step=0.05, epsilon=1e-6)
        trace = run_solver(prob, cfg, prob.pareto_param(0.5))
        assert trace.termination == CONVERGED
        assert trace.iterations == 0
        assert len(trace.ks) == 1

    @pytest.mark.parametrize("variant", [MFISC_CONST, ACCG_CONST])
    def test_single_objective_matches_reference(self, variant):
        # independent scalar recursions for the two updates
        prob, Q = spd_quadratic_problem(seed=42, n=5)
        rng = np.random.default_rng(1)
        x0 = rng.uniform(-1.0, 1.0, 5)
        s = 0.9 / prob.lipschitz
        alpha = 4.0
        steps = 500

        xp, xc = x0.copy(), x0.copy()
        for k in range(1, steps + 1):
            dx = xc - xp
            if variant == MFISC_CONST:
                pi = ((k - 1.0) / (k + alpha - 1.0)) * dx
                ndx = np.linalg.norm(dx)
                if ndx > 0:
                    g = Q @ xc
                    pi = pi - ((alpha - 3.0) / (k + alpha - 1.0)) * (ndx / np.linalg.norm(g)) * g
            else:
                pi = ((k - 1.0) / (k + 2.0)) * dx
            y = xc + pi
            xp, xc = xc, y - s * (Q @ y)

        cfg = SolverConfig(variant=variant, alpha=alpha, step=s, epsilon=1e-300, k_max=steps + 1)
        trace = run_solver(prob, cfg, x0)
        assert trace.iterations == steps
        assert np.max(np.abs(trace.x_final - xc)) <= 1e-12

    def test_alpha_three_matches_accg_exactly(self):
        prob = quadratic_pair()
        x0 = np.array([-1.5, 1.7])
        a = run_solver(prob, SolverConfig(variant=MFISC_CONST, alpha=3.0, step=0.05, epsilon=1e-9), x0)
        b = run_solver(prob, SolverConfig(variant=ACCG_CONST, alpha=50.0, step=0.05, epsilon=1e-9), x0)
        assert a.iterations == b.iterations
        assert np.max(np.abs(a.x_final - b.x_final)) <= 1e-12
        assert a.kkt_residuals == b.kkt_residuals

    def test_accg_never_reads_alpha(self):
        prob = quadratic_pair()
        x0 = np.array([1.4, -0.3])
        a = run_solver(prob, SolverConfig(variant=ACCG_CONST, alpha=3.0, step=0.05, epsilon=1e-8), x0)
        b = run_solver(prob, SolverConfig(variant=ACCG_CONST, alpha=90.0, step=0.05, epsilon=1e-8), x0)
        assert a.kkt_residuals == b.kkt_residuals
        assert np.array_equal(a.x_final, b.x_final)

    def test_sublevel_monotonic(self, rng):
        for key in ("quad2", "jos1"):
            prob = get_problem(key)
            cfg = SolverConfig(variant=MFISC_CONST, epsilon=1e-8, k_max=20000)
            lo, hi = prob.init_box
            for _ in range(5):
                x0 = rng.uniform(lo, hi)
                trace = run_solver(prob, cfg, x0)
                F = np.array(trace.objective_rows)
                assert np.all(F <= F[0] + 1e-9)

    def test_determinism(self):
        prob = get_problem("lse2")
        cfg = SolverConfig(variant=MFISC_CONST, step=2e-3, epsilon=1e-6, k_max=50000)
        x0 = np.array([2.0, -1.0])
        a = run_solver(prob, cfg, x0)
        b = run_solver(prob, cfg, x0)
        assert a.kkt_residuals == b.kkt_residuals
        assert a.iterate_gaps == b.iterate_gaps
        assert np.array_equal(a.x_final, b.x_final)

    def test_kmax_termination(self):
        prob = quadratic_pair()
        cfg = SolverConfig(variant=ACCG_CONST, step=0.05, epsilon=1e-300, k_max=25)
        trace = run_solver(prob, cfg, np.array([2.0, 2.0]))
        assert trace.termination == KMAX
        assert trace.iterations == 24
        assert trace.ks == list(range(1, 26))

    def test_grad_at_probe_compat_flag(self):
        prob = quadratic_pair()
        x0 = np.array([-1.0, 1.5])
        base = run_solver(prob, SolverConfig(variant=MFISC_CONST, step=0.05, epsilon=1e-8), x0)
        compat = run_solver(
            prob,
            SolverConfig(variant=MFISC_CONST, step=0.05, epsilon=1e-8, grad_at_probe=True),
            x0,
        )
        assert compat.termination == CONVERGED
        assert base.kkt_residuals[1:3] != compat.kkt_residuals[1:3]


class TestLineSearchRuns:
    @pytest.mark.parametrize("variant", [MFISC_LS, ACCG_LS, STEEPEST_LS])
    def test_duplicated_objective_reaches_common_minimum(self, variant):
        # one quadratic duplicated three times: weights are irrelevant and
        # every variant must find the shared minimizer
        from mograd.problems import least_squares_family

        eye = np.eye(4)
        zero = np.zeros(4)
        prob = least_squares_family(
            "ls_identity",
            [eye, eye, eye],
            [zero, zero, zero],
            delta=0.0,
            init_box=(np.full(4, -1.0), np.full(4, 1.0)),
        )
        cfg = SolverConfig(variant=variant, alpha=50.0, epsilon=1e-6, k_max=5000)
        trace = run_solver(prob, cfg, np.array([0.7, -0.4, 0.9, 0.2]))
        assert trace.termination == CONVERGED
        assert np.linalg.norm(trace.x_final) <= 1e-5

    @pytest.mark.parametrize("variant", VARIANTS)
    def test_termination_soundness(self, variant):
        prob = get_problem("ex1:n=8,p=6,seed=2")
        cfg = SolverConfig(variant=variant, alpha=50.0, epsilon=1e-4, k_max=100000, step=None)
        if variant.endswith("_const"):
            cfg = SolverConfig(variant=variant, alpha=50.0, epsilon=1e-4, k_max=100000)
        trace = run_solver(prob, cfg, np.full(8, 1.2))
        assert trace.termination == CONVERGED
        assert kkt_residual(prob, trace.x_final) < 1e-4 + cfg.qp_tol

    def test_step_carryover_shrinks_only(self):
        prob = quadratic_pair()
        cfg = SolverConfig(variant=MFISC_LS, alpha=50.0, epsilon=1e-8, k_max=4000)
        trace = run_solver(prob, cfg, np.array([-1.8, 1.9]))
        steps = [s for s in trace.steps if not np.isnan(s)]
        assert all(b <= a + 1e-15 for a, b in zip(steps, steps[1:]))
        assert trace.termination == CONVERGED

    def test_step_growback_recovers_toward_s0(self):
        prob = quadratic_pair()
        cfg = SolverConfig(variant=MFISC_LS, alpha=50.0, epsilon=1e-8, k_max=4000, step_growback=True)
        trace = run_solver(prob, cfg, np.array([-1.8, 1.9]))
        steps = [s for s in trace.steps if not np.isnan(s)]
        assert trace.termination == CONVERGED
        assert max(steps) <= 10.0 + 1e-12
        assert any(b > a for a, b in zip(steps, steps[1:]))


class TestVariantEntryPoints:
    def test_wrappers_force_their_variant(self):
        from mograd.solvers import (
            accg_const_run,
            accg_ls_run,
            mfisc_const_run,
            mfisc_ls_run,
            steepest_ls_run,
        )

        prob = quadratic_pair()
        x0 = np.array([1.2, -0.8])
        cfg = SolverConfig(variant=MFISC_CONST, alpha=50.0, step=0.05, epsilon=1e-4)
        for runner, variant in (
            (mfisc_const_run, MFISC_CONST),
            (accg_const_run, ACCG_CONST),
        ):
            trace = runner(prob, cfg, x0)
            assert trace.variant == variant
            assert trace.termination == CONVERGED
        ls_cfg = SolverConfig(variant=MFISC_LS, alpha=50.0, epsilon=1e-4)
        for runner, variant in (
            (mfisc_ls_run, MFISC_LS),
            (accg_ls_run, ACCG_LS),
            (steepest_ls_run, STEEPEST_LS),
        ):
            trace = runner(prob, ls_cfg, x0)
            assert trace.variant == variant
            assert trace.termination == CONVERGED


class TestTraceStructure:
    def test_strictly_increasing_k_and_single_termination(self):
        prob = quadratic_pair()
        trace = run_solver(prob, SolverConfig(variant=MFISC_CONST, step=0.05, epsilon=1e-6), np.array([2.0, -2.0]))
        assert trace.ks == list(range(1, len(trace.ks) + 1))
        assert trace.termination in (CONVERGED, KMAX, "qp_failure")
        assert np.isnan(trace.steps[-1])
        assert not any(np.isnan(s) for s in trace.steps[:-1])

    def test_csv_rows_layout(self):
        prob = quadratic_pair()
        trace = run_solver(prob, SolverConfig(variant=MFISC_CONST, step=0.05, epsilon=1e-6), np.array([2.0, -2.0]))
        rows = trace_csv_rows(trace, prob.m)
        assert rows[0] == ["k", "kkt_residual", "iter_gap", "f1", "f2", "step", "qp_gap", "time_s"]
        assert len(rows) == len(trace.ks) + 1
        assert rows[-1][1] < 1e-6

    def test_zero_iteration_run_exports_header_only(self):
        prob = quadratic_pair()
        trace = run_solver(prob, SolverConfig(variant=MFISC_CONST, step=0.05, epsilon=1e-6), prob.pareto_param(0.25))
        assert trace_csv_rows(trace, prob.m) == [
            ["k", "kkt_residual", "iter_gap", "f1", "f2", "step", "qp_gap", "time_s"]
        ]
