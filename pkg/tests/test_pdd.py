import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from radc_ee.fp import surrogate_from_terms
from radc_ee.metrics import energy_efficiency, power_consumption
from radc_ee.pdd import (
    DualVars,
    SolverOptions,
    SolverState,
    augmented_lagrangian,
    dual_update,
    fixed_bits,
    gradient_b,
    greedy_selection,
    penalty_term,
    penalty_update,
    project_bits,
    project_selection,
    refresh_fp,
    round_bits,
    rounding_candidates,
    solve,
    update_b,
    update_ghat,
    update_linear_block,
    update_p,
    violation_eps,
)
from radc_ee.quantization import adc_power_grad

from instances import DESK, TINY, assert_feasible, problem, random_state


def small_penalty_state(G, ghat, rho=10.0, zeta=None, nu=None, varsigma=None):
    S, M = G.shape
    duals = DualVars(
        np.zeros((S, M)) if zeta is None else zeta,
        np.zeros(M) if varsigma is None else varsigma,
        np.zeros((S, M)) if nu is None else nu,
    )
    prob = problem(TINY, 0)
    z = random_state(prob, np.random.default_rng(0)).z
    z.G = np.asarray(G, float)
    return SolverState(z, np.asarray(ghat, float), 0.0, np.zeros(2), np.zeros(2, complex), duals, rho, 1.0)


class TestAugmentedLagrangian:
    def test_single_violated_entry(self):
        G = np.array([[1.0], [0.0]])
        ghat = np.array([[1.0], [-0.5]])
        duals = DualVars.zeros(2, 1)
        assert -penalty_term(G, ghat, duals, 10.0) == pytest.approx(-0.0125)

    def test_feasible_binary_point_has_no_penalty(self):
        prob = problem(DESK, 1)
        state = random_state(prob, np.random.default_rng(1))
        state.z.G = greedy_selection(prob)
        state.ghat = state.z.G.copy()
        state.duals = DualVars.zeros(*state.z.G.shape)
        refresh_fp(state, prob)
        rhat = surrogate_from_terms(prob.terms(state.z), state.z.p, state.phi, state.lam)
        expected = rhat.sum() - state.eta * power_consumption(state.z, DESK)
        assert augmented_lagrangian(state, prob) == pytest.approx(expected, rel=1e-12)
        # at the FP optimum with eta = EE the parametric part is zero
        assert augmented_lagrangian(state, prob) == pytest.approx(0.0, abs=1e-12)

    def test_rejects_nonpositive_rho(self):
        with pytest.raises(ValueError):
            penalty_term(np.zeros((2, 1)), np.zeros((2, 1)), DualVars.zeros(2, 1), 0.0)


class TestPowerUpdate:
    def test_zero_channel_gets_zero_power(self):
        cfg = DESK
        prob = problem(cfg, 2)
        prob.H[:, 1] = 0.0
        prob.__post_init__()
        state = random_state(prob, np.random.default_rng(2))
        assert update_p(state, prob)[1] == 0.0

    def test_budget_clamp(self):
        prob = problem(DESK, 3)
        state = random_state(prob, np.random.default_rng(3))
        state.eta = 0.0  # removes the power price so most users want more than p_max
        p = update_p(state, prob, tol=1e-12)
        clamped = p >= DESK.p_max * (1 - 1e-6)
        assert clamped.any()
        np.testing.assert_allclose(p[clamped], DESK.p_max, rtol=1e-9)
        assert np.all(p <= DESK.p_max * (1 + 1e-9))


class TestLinearBlocks:
    def test_ghat_penalty_only(self):
        state = small_penalty_state(np.ones((1, 1)), np.zeros((1, 1)))
        assert update_ghat(state)[0, 0] == pytest.approx(1.0)

    @settings(max_examples=30, deadline=None)
    @given(hnp.arrays(float, (3, 2), elements=st.floats(-0.5, 1.5)), st.floats(0.1, 20))
    def test_ghat_is_box_constrained_maximiser(self, G, rho):
        state = small_penalty_state(G, np.zeros_like(G), rho=rho)
        best = update_ghat(state)
        assert np.all((best >= 0) & (best <= 1))
        base = penalty_term(state.z.G, best, state.duals, rho)
        for x in np.linspace(0, 1, 11):
            trial = best.copy()
            trial[0, 0] = x
            assert penalty_term(state.z.G, trial, state.duals, rho) >= base - 1e-12

    def test_u_is_mmse_direction_for_one_user(self):
        cfg = TINY.with_(n_users=1, bit_max=60, avg_bits=60.0, bit_min=60)
        prob = problem(cfg, 4)
        state = random_state(prob, np.random.default_rng(4))
        state.z.D = np.eye(cfg.n_rf_chains)
        state.z.b[:] = 60.0
        refresh_fp(state, prob)
        u = update_linear_block(state, "u", prob)[:, 0]
        g = (state.z.G.T @ prob.B)[:, 0]
        cov = state.z.p[0] * np.outer(g, g.conj()) + cfg.noise_power * state.z.G.T @ prob.gram @ state.z.G
        mmse = np.linalg.solve(cov, g)
        cosine = abs(np.vdot(u, mmse)) / (np.linalg.norm(u) * np.linalg.norm(mmse))
        assert cosine == pytest.approx(1.0, abs=1e-9)

    @settings(max_examples=15, deadline=None)
    @given(st.integers(0, 100_000), st.sampled_from(["g", "ghat", "u", "d"]))
    def test_block_update_never_decreases_objective(self, seed, block):
        prob = problem(DESK, seed % 17)
        state = random_state(prob, np.random.default_rng(seed))
        before = augmented_lagrangian(state, prob)
        new = update_linear_block(state, block, prob)
        if block == "ghat":
            state.ghat = new
        elif block == "g":
            state.z.G = new
        elif block == "u":
            state.z.U = new
        else:
            state.z.D = new
        assert augmented_lagrangian(state, prob) >= before - 1e-9 * max(1.0, abs(before))

    @settings(max_examples=15, deadline=None)
    @given(st.integers(0, 100_000))
    def test_selection_rows_stay_within_one(self, seed):
        prob = problem(DESK, seed % 17)
        state = random_state(prob, np.random.default_rng(seed), rho=0.05)
        G = update_linear_block(state, "g", prob)
        assert np.all(G.sum(axis=1) <= 1 + 1e-9)

    def test_unknown_block(self):
        prob = problem(TINY, 0)
        with pytest.raises(ValueError):
            update_linear_block(random_state(prob, np.random.default_rng(0)), "x", prob)


class TestBitGradient:
    def test_only_power_term_without_lambda(self):
        prob = problem(DESK, 5)
        state = random_state(prob, np.random.default_rng(5))
        state.lam[:] = 0
        state.eta = 0.37
        expected = -0.37 * adc_power_grad(state.z.b, DESK.adc_energy_coeff, DESK.sampling_rate)
        np.testing.assert_array_equal(gradient_b(state, prob), expected)

    def test_symmetric_chains_have_equal_gradient(self):
        prob = problem(TINY, 6)
        state = random_state(prob, np.random.default_rng(6))
        state.z.G[:] = 0
        state.z.G[0, :] = 1  # both chains on the same codeword
        state.z.D = np.eye(2)
        state.z.U[1, :] = state.z.U[0, :]
        state.z.b[:] = 2.5
        refresh_fp(state, prob)
        omega = gradient_b(state, prob)
        assert omega[0] == pytest.approx(omega[1], rel=1e-12)


def qp_oracle(bv, omega, w, lo, hi, budget):
    """Exhaustive active-set search for max omega.(b - bv) - w ||b - bv||^2."""
    M = len(bv)
    center = bv + omega / (2 * w)
    best, best_val = None, -np.inf
    for pattern in itertools.product((0, 1, 2), repeat=M):
        pattern = np.array(pattern)
        fixed = np.where(pattern == 1, lo, np.where(pattern == 2, hi, np.nan))
        free = pattern == 0
        for active in (False, True):
            b = fixed.copy()
            if active:
                if not free.any():
                    continue
                shift = (center[free].sum() + np.nansum(fixed) - budget) / free.sum()
                b[free] = center[free] - shift
            else:
                b[free] = center[free]
            if np.any(b < lo - 1e-12) or np.any(b > hi + 1e-12) or b.sum() > budget + 1e-9:
                continue
            val = omega @ (b - bv) - w * np.sum((b - bv) ** 2)
            if val > best_val:
                best, best_val = b, val
    return best


class TestBitUpdate:
    def _state(self, b):
        prob = problem(DESK, 7)
        state = random_state(prob, np.random.default_rng(7))
        state.z.b = np.asarray(b, float)
        return prob, state

    def test_zero_gradient_keeps_bits(self):
        prob, state = self._state([2.0, 3.0, 2.5, 3.5])
        np.testing.assert_allclose(update_b(state, prob, 10.0, omega=np.zeros(4)), state.z.b)

    def test_stationarity_step(self):
        prob, state = self._state([3.0, 3.0, 2.0, 2.0])
        out = update_b(state, prob, 10.0, omega=np.array([40.0, -40.0, 0.0, 0.0]))
        np.testing.assert_allclose(out, [5.0, 1.0, 2.0, 2.0])

    @settings(max_examples=40, deadline=None)
    @given(
        hnp.arrays(float, 4, elements=st.floats(1.0, 8.0)),
        hnp.arrays(float, 4, elements=st.floats(-200.0, 200.0)),
        st.floats(0.5, 50.0),
    )
    def test_matches_active_set_oracle(self, bv, omega, w):
        budget = 4 * DESK.avg_bits
        bv = project_bits(bv, 1.0, 8.0, budget)
        expected = qp_oracle(bv, omega, w, 1.0, 8.0, budget)
        got = project_bits(bv + omega / (2 * w), 1.0, 8.0, budget)
        np.testing.assert_allclose(got, expected, atol=1e-6)

    @given(hnp.arrays(float, 5, elements=st.floats(-10.0, 20.0)), st.floats(5.0, 40.0))
    def test_projection_is_feasible(self, center, budget):
        b = project_bits(center, 1.0, 8.0, budget)
        assert np.all((b >= 1.0) & (b <= 8.0)) and b.sum() <= budget + 1e-9


class TestOuterLoop:
    def test_duals_unchanged_without_residuals(self):
        G = np.array([[1.0], [0.0]])
        state = small_penalty_state(G, G.copy())
        new = dual_update(state)
        np.testing.assert_array_equal(new.zeta, 0)
        np.testing.assert_array_equal(new.nu, 0)
        np.testing.assert_array_equal(new.varsigma, 0)

    def test_dual_step(self):
        state = small_penalty_state(np.array([[1.0]]), np.array([[0.6]]))
        new = dual_update(state)
        assert new.zeta[0, 0] == pytest.approx(0.04)
        assert new.nu[0, 0] == pytest.approx(0.04)
        assert new.varsigma[0] == pytest.approx(0.0)

    def test_penalty_shrink(self):
        assert penalty_update(10.0, 0.7) == pytest.approx(7.0)

    def test_violation(self):
        G = np.array([[1.0], [0.0]])
        assert violation_eps(G, G.copy()) == 0.0
        # 1 - 0.5 on both the copy residual and the binary residual
        assert violation_eps(np.array([[1.0]]), np.array([[0.5]])) == pytest.approx(0.5)
        assert violation_eps(np.array([[0.8], [0.3]]), np.array([[0.8], [0.0]])) == pytest.approx(0.3)


class TestRounding:
    def test_integers_unchanged(self):
        np.testing.assert_array_equal(round_bits([2.0, 3.0, 4.0], 3.0), [2, 3, 4])

    def test_budget_six(self):
        np.testing.assert_array_equal(round_bits([2.3, 3.7], 3.0), [2, 4])

    def test_budget_five(self):
        np.testing.assert_array_equal(round_bits([2.3, 3.7], 2.5), [2, 3])

    def test_candidates_ordered_and_floor_last(self):
        cands = rounding_candidates([2.3, 3.7], 3.0)
        deltas = [d for d, _ in cands]
        assert deltas == sorted(deltas)
        np.testing.assert_array_equal(cands[-1][1], [2, 3])

    @given(hnp.arrays(float, 4, elements=st.floats(1.0, 8.0)), st.floats(1.0, 8.0))
    def test_rounding_feasible(self, b, avg):
        b = project_bits(b, 1.0, 8.0, 4 * avg)
        for _, out in rounding_candidates(b, avg):
            assert out.sum() <= 4 * avg + 1e-9
            assert np.all((out >= np.floor(b - 1e-9)) & (out <= np.ceil(b + 1e-9)))


class TestSelectionProjection:
    @given(hnp.arrays(float, (6, 4), elements=st.floats(-1.0, 2.0)))
    def test_valid_assignment(self, G):
        out = project_selection(G)
        assert set(np.unique(out)) <= {0.0, 1.0}
        np.testing.assert_array_equal(out.sum(axis=0), 1)
        assert np.all(out.sum(axis=1) <= 1)

    def test_binary_input_is_kept(self):
        G = np.zeros((5, 3))
        G[[4, 0, 2], [0, 1, 2]] = 1
        np.testing.assert_array_equal(project_selection(G), G)


class TestSolve:
    @pytest.mark.parametrize("seed", range(3))
    def test_feasible_and_consistent(self, seed):
        prob = problem(DESK, seed)
        z, diag = solve(DESK, prob.H)
        assert_feasible(z, DESK)
        ee = energy_efficiency(z, prob.H, prob.W, DESK)
        assert diag.eta == pytest.approx(ee, rel=1e-10, abs=0)
        if diag.converged:
            assert diag.final_eps <= 1e-4
            G = diag.G_relaxed
            assert np.all(np.minimum(np.abs(G), np.abs(G - 1)) <= 1e-3)

    def test_deterministic(self):
        prob = problem(DESK, 4)
        z1, d1 = solve(DESK, prob.H)
        z2, d2 = solve(DESK, prob.H)
        for a, b in zip((z1.p, z1.G, z1.D, z1.U, z1.b), (z2.p, z2.G, z2.D, z2.U, z2.b)):
            assert np.array_equal(a, b)
        assert d1.trace == d2.trace

    def test_fixed_bits_path(self):
        prob = problem(DESK, 5)
        z, _ = solve(DESK, prob.H, optimize_bits=False)
        np.testing.assert_array_equal(z.b, fixed_bits(DESK))

    def test_smallest_rounding_option(self):
        prob = problem(DESK, 6)
        z, diag = solve(DESK, prob.H, SolverOptions(rounding="smallest"))
        np.testing.assert_array_equal(z.b, round_bits(diag.b_relaxed, DESK.avg_bits))

    def test_best_rounding_never_worse(self):
        prob = problem(DESK, 6)
        _, best = solve(DESK, prob.H)
        _, small = solve(DESK, prob.H, SolverOptions(rounding="smallest"))
        assert best.eta >= small.eta

    def test_dead_channel_is_legal(self):
        prob = problem(DESK, 7)
        H = prob.H.copy()
        H[:, 0] = 0
        z, diag = solve(DESK, H)
        assert z.p[0] == 0.0
        assert np.isfinite(diag.eta)

    def test_trace_layout(self):
        prob = problem(DESK, 8)
        _, diag = solve(DESK, prob.H, SolverOptions(track_blocks=True))
        t, v, J, eps, eta = diag.trace[0]
        assert (t, v) == (0, 0) and eps >= 0
        assert {entry[2] for entry in diag.block_trace} == {"p", "b", "g", "ghat", "u", "d"}

    @pytest.mark.parametrize("changes", [dict(shrink=1.0), dict(tol=0.0), dict(rounding="up")])
    def test_rejects_bad_options(self, changes):
        with pytest.raises(ValueError):
            SolverOptions(**changes)


def test_fixed_bits_floor():
    assert fixed_bits(DESK.with_(avg_bits=2.7)) == 2
    assert fixed_bits(DESK) == 3
