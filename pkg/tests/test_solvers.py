"""Solver steps, schedules, constants, and the lazy/eager equivalence."""

import numpy as np
import pytest

from efglab.evaluate import exploitability
from efglab.game import (PLAYER1, PLAYER2, load_game, to_sequence_form,
                         uniform_profile)
from efglab.regularizers import ENTROPY, EUCLIDEAN
from efglab.solvers import (GameConstants, SolverParams, SolverState,
                            average_profile, cfr_plus_step, cfr_step,
                            check_m_bounds, game_constants, lazy_qfr_step,
                            lr_schedule, mmd_step, os_mccfr_step, pga_step,
                            qfr_full_step, qfr_lazy_eager_step,
                            qfr_stochastic_step, schedule_report)
from efglab.values import (CF, QVALUE, TRAJQ, compute_feedback,
                           sample_trajectory)


def _single_decision_game():
    doc = {
        "name": "single",
        "root": 0,
        "nodes": [
            {"id": 0, "kind": "p1", "infoset": 0, "actions": [
                {"label": "a", "child": 1}, {"label": "b", "child": 2}]},
            {"id": 1, "kind": "terminal", "utility_p1": 0.8},
            {"id": 2, "kind": "terminal", "utility_p1": -0.3},
        ],
    }
    return load_game(doc)


def _zero_utility_game():
    doc = {
        "name": "zeros",
        "root": 0,
        "nodes": [
            {"id": 0, "kind": "p1", "infoset": 0, "actions": [
                {"label": "a", "child": 1}, {"label": "b", "child": 2}]},
            {"id": 1, "kind": "p2", "infoset": 1, "actions": [
                {"label": "x", "child": 3}, {"label": "y", "child": 4}]},
            {"id": 2, "kind": "terminal", "utility_p1": 0.0},
            {"id": 3, "kind": "terminal", "utility_p1": 0.0},
            {"id": 4, "kind": "terminal", "utility_p1": 0.0},
        ],
    }
    return load_game(doc)


# ---------------------------------------------------------------------------
# Full-information QFR


def test_qfr_vanishing_step_is_identity(kuhn):
    params = SolverParams(kuhn, feedback=QVALUE, tau=0.0, eta=1e-12)
    state = SolverState(kuhn, params)
    before = state.cur.copy()
    qfr_full_step(state, kuhn, params)
    assert np.allclose(state.cur, before, atol=1e-9)


def test_qfr_gamma_one_pins_nu(kuhn):
    params = SolverParams(kuhn, feedback=QVALUE, family=ENTROPY, tau=0.01,
                          gamma=1.0, eta=0.1)
    state = SolverState(kuhn, params)
    for _ in range(5):
        qfr_full_step(state, kuhn, params)
    assert np.allclose(state.cur, params.nu_flat, atol=1e-9)
    assert np.allclose(state.bar, params.nu_flat, atol=1e-9)


def test_qfr_optimism_wiring_hand_instance():
    # Single-decision game: feedback equals the terminal utilities, so both
    # prox solves have the closed multiplicative-weights form.
    tree = _single_decision_game()
    eta, alpha = 0.3, 1.0
    params = SolverParams(tree, feedback=CF, family=ENTROPY, tau=0.0,
                          gamma=0.0, eta=eta, alpha=alpha)
    state = SolverState(tree, params)
    q = np.array([0.8, -0.3])
    x0 = np.full(2, 0.5)
    bar2 = x0 * np.exp(eta * q / alpha)
    bar2 /= bar2.sum()
    cur2 = bar2 * np.exp(eta * q / alpha)
    cur2 /= cur2.sum()
    qfr_full_step(state, tree, params)
    assert np.allclose(state.bar, bar2, atol=1e-12)
    assert np.allclose(state.cur, cur2, atol=1e-12)


def test_qfr_full_reduces_exploitability(kuhn):
    params = SolverParams(kuhn, feedback=CF, family=ENTROPY, tau=0.0,
                          gamma=0.0, eta=0.1)
    state = SolverState(kuhn, params)
    initial = exploitability(kuhn, state.profile(kuhn))
    for _ in range(5000):
        qfr_full_step(state, kuhn, params)
    assert exploitability(kuhn, state.profile(kuhn)) < initial


def test_qfr_determinism(kuhn):
    profs = []
    for _ in range(2):
        params = SolverParams(kuhn, feedback=QVALUE, family=ENTROPY,
                              tau=0.01, gamma=0.01, eta=0.05)
        state = SolverState(kuhn, params)
        for _ in range(50):
            qfr_full_step(state, kuhn, params)
        profs.append(state.cur.copy())
    assert np.array_equal(profs[0], profs[1])


def test_qfr_m_bounds_and_stability_monitor(kuhn):
    # A conforming (tiny) step size: m stays within [M1, M2] and moves by
    # at most C^- per step; strategies move at most C^diff * eta in L1.
    tau, gamma0, eta = 0.01, 0.1, 1e-4
    constants = game_constants(kuhn, QVALUE, ENTROPY, tau=tau, gamma0=gamma0)
    report = schedule_report(kuhn, np.full(kuhn.num_infosets, eta), constants)
    assert report.all_ok
    params = SolverParams(kuhn, feedback=QVALUE, family=ENTROPY, tau=tau,
                          gamma=gamma0, eta=eta)
    state = SolverState(kuhn, params)
    prev_m = None
    prev_cur = state.cur.copy()
    eta_anc = eta  # uniform schedule
    for _ in range(100):
        m = qfr_full_step(state, kuhn, params)
        assert check_m_bounds(m, constants) == 0
        for si in range(kuhn.num_infosets):
            off = kuhn.infoset_offset[si]
            na = kuhn.actions_per_infoset[si]
            moved = np.abs(state.cur[off:off + na]
                           - prev_cur[off:off + na]).sum()
            assert moved <= constants.c_diff[si] * eta + 1e-12
        if prev_m is not None:
            assert np.all(np.abs(m - prev_m)
                          <= constants.c_minus * eta_anc + 1e-12)
        prev_m = m
        prev_cur = state.cur.copy()


# ---------------------------------------------------------------------------
# Stochastic QFR


def test_stochastic_unvisited_unchanged(kuhn, rng):
    params = SolverParams(kuhn, feedback=TRAJQ, family=ENTROPY, tau=0.001,
                          gamma=0.01, eta=0.05)
    state = SolverState(kuhn, params)
    before = state.cur.copy()
    traj = sample_trajectory(kuhn, state.cur_views, rng)
    visited = {kuhn.nodes[n].infoset for n in traj.nodes
               if not kuhn.nodes[n].is_chance
               and not kuhn.nodes[n].is_terminal}
    qfr_stochastic_step(state, kuhn, params, traj=traj)
    changed = set()
    for si in range(kuhn.num_infosets):
        off = kuhn.infoset_offset[si]
        na = kuhn.actions_per_infoset[si]
        if not np.array_equal(state.cur[off:off + na],
                              before[off:off + na]):
            changed.add(si)
    assert changed <= visited
    assert len(changed) <= traj.num_steps


def test_stochastic_determinism(kuhn):
    outs = []
    for _ in range(2):
        params = SolverParams(kuhn, feedback=TRAJQ, family=ENTROPY,
                              tau=0.001, gamma=0.01, eta=0.05)
        state = SolverState(kuhn, params)
        rng = np.random.default_rng(42)
        for _ in range(300):
            qfr_stochastic_step(state, kuhn, params, rng)
        outs.append(state.cur.copy())
    assert np.array_equal(outs[0], outs[1])


# ---------------------------------------------------------------------------
# Lazy QFR


def test_lazy_equals_stochastic_at_tau_zero(kuhn):
    params = SolverParams(kuhn, feedback=TRAJQ, family=ENTROPY, tau=0.0,
                          gamma=0.01, eta=0.05)
    s_eager = SolverState(kuhn, params)
    s_lazy = SolverState(kuhn, params)
    r1 = np.random.default_rng(5)
    r2 = np.random.default_rng(5)
    for _ in range(300):
        qfr_stochastic_step(s_eager, kuhn, params, r1)
        lazy_qfr_step(s_lazy, kuhn, params, r2)
        assert np.array_equal(s_eager.cur, s_lazy.cur)
        assert np.array_equal(s_eager.bar, s_lazy.bar)


def test_lazy_eager_equivalence_shared_trajectories(kuhn):
    params = SolverParams(kuhn, feedback=TRAJQ, family=ENTROPY, tau=0.01,
                          gamma=0.05, eta=0.05)
    s_lazy = SolverState(kuhn, params)
    s_eager = SolverState(kuhn, params)
    rng = np.random.default_rng(11)
    for _ in range(200):
        traj = sample_trajectory(kuhn, s_eager.cur_views, rng)
        qfr_lazy_eager_step(s_eager, kuhn, params, traj=traj)
        lazy_qfr_step(s_lazy, kuhn, params, traj=traj)
        # The eager reference state is fully up to date each iteration; the
        # lazy state agrees exactly on every caught-up infoset.
        for si in range(kuhn.num_infosets):
            if s_lazy.last_seen[si] == s_lazy.t:
                off = kuhn.infoset_offset[si]
                na = kuhn.actions_per_infoset[si]
                assert np.array_equal(s_lazy.cur[off:off + na],
                                      s_eager.cur[off:off + na])
    from efglab.solvers import lazy_catch_up
    lazy_catch_up(s_lazy, kuhn, params)
    assert np.array_equal(s_lazy.cur, s_eager.cur)
    assert np.array_equal(s_lazy.bar, s_eager.bar)


def test_lazy_no_pending_steps_single_update(kuhn):
    params = SolverParams(kuhn, feedback=TRAJQ, family=ENTROPY, tau=0.01,
                          gamma=0.05, eta=0.05)
    s1 = SolverState(kuhn, params)
    s2 = SolverState(kuhn, params)
    traj = sample_trajectory(kuhn, s1.cur_views, np.random.default_rng(3))
    lazy_qfr_step(s1, kuhn, params, traj=traj)
    qfr_lazy_eager_step(s2, kuhn, params, traj=traj)
    visited = {kuhn.nodes[n].infoset for n in traj.nodes
               if not kuhn.nodes[n].is_chance
               and not kuhn.nodes[n].is_terminal}
    for si in visited:
        off = kuhn.infoset_offset[si]
        na = kuhn.actions_per_infoset[si]
        assert np.array_equal(s1.cur[off:off + na], s2.cur[off:off + na])


# ---------------------------------------------------------------------------
# PGA


def test_pga_zero_feedback_fixed_point():
    tree = _zero_utility_game()
    params = SolverParams(tree, feedback=CF, family=EUCLIDEAN, tau=0.0,
                          gamma=0.0, eta=0.5)
    state = SolverState(tree, params)
    before = state.cur.copy()
    pga_step(state, tree, params)
    assert np.allclose(state.cur, before, atol=1e-12)


def test_pga_zero_eta_fixed_point(kuhn):
    params = SolverParams(kuhn, feedback=CF, tau=0.0, gamma=0.0, eta=0.0)
    state = SolverState(kuhn, params)
    before = state.cur.copy()
    pga_step(state, kuhn, params)
    assert np.allclose(state.cur, before, atol=1e-12)


def test_pga_depth_schedule_average_converges(kuhn):
    params = SolverParams(kuhn, feedback=CF, tau=0.0, gamma=0.0, eta=0.02,
                          schedule="depth:0.5")
    state = SolverState(kuhn, params)
    seq_sum = np.zeros(kuhn.num_pairs)
    checkpoints = {}
    for t in range(1, 10_001):
        pga_step(state, kuhn, params)
        for p in (PLAYER1, PLAYER2):
            sf = to_sequence_form(kuhn, state.cur_views, p)
            for si in kuhn.infoset_ids(p):
                off = kuhn.infoset_offset[si]
                seq_sum[off:off + kuhn.actions_per_infoset[si]] += sf.seq[si]
        if t in (1000, 10_000):
            avg = []
            for si in range(kuhn.num_infosets):
                off = kuhn.infoset_offset[si]
                na = kuhn.actions_per_infoset[si]
                chunk = seq_sum[off:off + na]
                avg.append(chunk / chunk.sum())
            checkpoints[t] = exploitability(kuhn, avg)
    assert checkpoints[10_000] < checkpoints[1000]


# ---------------------------------------------------------------------------
# CFR / CFR+ / OS-MCCFR baselines


def test_cfr_zero_regrets_plays_uniform(kuhn):
    params = SolverParams(kuhn, feedback=CF, tau=0.0, gamma=0.0)
    state = SolverState(kuhn, params)
    # The iterate used at step 1 (all-zero regrets) is uniform by the
    # regret-matching convention.
    assert np.allclose(state.cur, np.concatenate(uniform_profile(kuhn)))
    cfr_step(state, kuhn, params)
    # Accumulated average after one step is the uniform strategy.
    assert np.allclose(np.concatenate(average_profile(state, kuhn)),
                       np.concatenate(uniform_profile(kuhn)))


def test_cfr_plus_converges_fast(kuhn):
    params = SolverParams(kuhn, feedback=CF, tau=0.0, gamma=0.0)
    state = SolverState(kuhn, params)
    for _ in range(2000):
        cfr_plus_step(state, kuhn, params)
    assert exploitability(kuhn, average_profile(state, kuhn)) <= 1e-3


def test_os_mccfr_full_exploration_uniform_sampling(pennies):
    params = SolverParams(pennies, feedback=CF, tau=0.0, gamma=0.0,
                          explore_eps=1.0)
    rng = np.random.default_rng(17)
    n = 4000
    counts = np.zeros(2)
    for _ in range(n):
        state = SolverState(pennies, params)
        state.cur_views[0][:] = [1.0, 0.0]  # deterministic current policy
        traj = os_mccfr_step(state, pennies, params, rng)
        counts[traj.actions[0]] += 1
    sigma = np.sqrt(n * 0.25)
    assert abs(counts[0] - n / 2) <= 4.0 * sigma


def test_os_mccfr_increment_unbiased(kuhn):
    # Expected sampled regret increment at every (s, a) equals the
    # full-information counterfactual regret increment.
    params = SolverParams(kuhn, feedback=CF, tau=0.0, gamma=0.0,
                          explore_eps=0.5)
    state = SolverState(kuhn, params)
    uniform = np.concatenate(uniform_profile(kuhn))
    fb = compute_feedback(kuhn, uniform_profile(kuhn), CF)
    want = np.concatenate([
        fb.cf[si] - fb.cf[si] @ uniform_profile(kuhn)[si]
        for si in range(kuhn.num_infosets)])
    rng = np.random.default_rng(21)
    n = 60_000
    sums = np.zeros(kuhn.num_pairs)
    sq = np.zeros(kuhn.num_pairs)
    for _ in range(n):
        state.cur[:] = uniform
        state.regret[:] = 0.0
        os_mccfr_step(state, kuhn, params, rng)
        sums += state.regret
        sq += state.regret ** 2
    mean = sums / n
    se = np.sqrt(np.maximum(sq / n - mean ** 2, 1e-12) / n)
    assert np.all(np.abs(mean - want) <= 5.0 * se)


@pytest.mark.slow
def test_os_mccfr_converges_million_iterations(kuhn):
    params = SolverParams(kuhn, feedback=CF, tau=0.0, gamma=0.0,
                          explore_eps=0.1)
    finals = []
    for seed in range(20):
        state = SolverState(kuhn, params)
        rng = np.random.default_rng(seed)
        for _ in range(1_000_000):
            os_mccfr_step(state, kuhn, params, rng)
        finals.append(exploitability(kuhn, average_profile(state, kuhn)))
    assert np.median(finals) <= 0.02


def test_os_mccfr_converges_scaled_down(kuhn):
    params = SolverParams(kuhn, feedback=CF, tau=0.0, gamma=0.0,
                          explore_eps=0.1)
    state = SolverState(kuhn, params)
    rng = np.random.default_rng(1)
    for _ in range(50_000):
        os_mccfr_step(state, kuhn, params, rng)
    assert exploitability(kuhn, average_profile(state, kuhn)) <= 0.1


# ---------------------------------------------------------------------------
# MMD


def test_mmd_is_multiplicative_weights(kuhn):
    params = SolverParams(kuhn, feedback=QVALUE, family=ENTROPY, tau=0.0,
                          gamma=0.0, eta=0.2)
    state = SolverState(kuhn, params)
    fb = compute_feedback(kuhn, state.profile(kuhn), QVALUE)
    mmd_step(state, kuhn, params)
    for si in range(kuhn.num_infosets):
        x0 = uniform_profile(kuhn)[si]
        want = x0 * np.exp(0.2 * np.asarray(fb.q[si]))
        want /= want.sum()
        assert np.allclose(state.cur_views[si], want, atol=1e-12)


def test_mmd_matches_qfr_center_first_step(kuhn):
    kw = dict(feedback=QVALUE, family=ENTROPY, tau=0.01, gamma=0.01, eta=0.1)
    params = SolverParams(kuhn, **kw)
    s_qfr = SolverState(kuhn, params)
    s_mmd = SolverState(kuhn, params)
    qfr_full_step(s_qfr, kuhn, params)
    mmd_step(s_mmd, kuhn, params)
    assert np.allclose(s_qfr.bar, s_mmd.cur, atol=1e-14)


def test_mmd_fixed_point_residual(kuhn):
    params = SolverParams(kuhn, feedback=QVALUE, family=ENTROPY, tau=0.01,
                          gamma=0.01, eta=0.1)
    state = SolverState(kuhn, params)
    for _ in range(20_000):
        mmd_step(state, kuhn, params)
    before = state.cur.copy()
    mmd_step(state, kuhn, params)
    assert np.max(np.abs(state.cur - before)) <= 1e-6


# ---------------------------------------------------------------------------
# Schedules and constants


def test_lr_schedule_uniform(kuhn):
    eta = lr_schedule(kuhn, 0.05, "uniform")
    assert np.all(eta == 0.05)


def test_lr_schedule_two_level_chain():
    doc = {
        "name": "chain",
        "root": 0,
        "nodes": [
            {"id": 0, "kind": "p1", "infoset": 0, "actions": [
                {"label": "a", "child": 1}, {"label": "b", "child": 4}]},
            {"id": 1, "kind": "p1", "infoset": 1, "actions": [
                {"label": "a", "child": 2}, {"label": "b", "child": 3}]},
            {"id": 2, "kind": "terminal", "utility_p1": 1.0},
            {"id": 3, "kind": "terminal", "utility_p1": -1.0},
            {"id": 4, "kind": "terminal", "utility_p1": 0.0},
        ],
    }
    tree = load_game(doc)
    eta = lr_schedule(tree, 0.1, "depth:0.5")
    assert np.allclose(eta, [0.1, 0.2])


def test_lr_schedule_bad_ratio(kuhn):
    with pytest.raises(ValueError):
        lr_schedule(kuhn, 0.1, "depth:0.0")
    with pytest.raises(ValueError):
        lr_schedule(kuhn, 0.1, "depth:1.5")


def _condition_oracle(tree, eta, constants, alpha=1.0):
    """Independent scalar recomputation of the three step-size conditions
    for a uniform schedule on Kuhn."""
    eta0 = float(eta[0])
    gs = constants.gamma_seq
    log1g = np.log(1.0 / gs)
    tau_term = constants.tau / constants.m1 * log1g if constants.tau else 0.0
    max_k = 2.0 * constants.q_bound / alpha + tau_term
    # Condition A: deepest own ancestry has one prior own action, so the
    # cumulative sum eta0 <= eta0 always holds for uniform schedules.
    a_ok = True
    b_ok = 6.0 * eta0 * max_k <= 1.0 + 1e-12
    c_ok = eta0 * (2.0 * constants.q_bound
                   + constants.tau * alpha / constants.m1 * log1g) \
        <= 1.0 + 1e-12
    return a_ok, b_ok, c_ok


def test_schedule_report_flags_match_oracle(kuhn):
    constants = game_constants(kuhn, QVALUE, ENTROPY, tau=0.1, gamma0=0.1)
    for eta0 in (0.1, 1e-2, 1e-3, 1e-6):
        eta = np.full(kuhn.num_infosets, eta0)
        report = schedule_report(kuhn, eta, constants)
        a_ok, b_ok, c_ok = _condition_oracle(kuhn, eta, constants)
        assert report.cond_a_ok == a_ok
        assert report.cond_b_ok == b_ok
        assert report.cond_c_ok == c_ok
    big = schedule_report(kuhn, np.full(kuhn.num_infosets, 0.1), constants)
    small = schedule_report(kuhn, np.full(kuhn.num_infosets, 1e-6),
                            constants)
    assert not big.all_ok
    assert small.all_ok


def test_game_constants_m_values(kuhn):
    c = game_constants(kuhn, TRAJQ, ENTROPY, gamma_seq=0.1)
    assert c.m2 == pytest.approx(10.0)
    assert c.m1 == 1.0
    c = game_constants(kuhn, CF, ENTROPY, gamma0=0.1)
    assert c.m1 == 1.0 and c.m2 == 1.0
    c = game_constants(kuhn, QVALUE, ENTROPY, gamma0=0.1)
    assert c.m1 == pytest.approx(c.gamma_seq * c.min_chance_mass)
    assert c.m2 == 1.0
    assert c.m1 <= c.m2


def test_game_constants_tau_zero_q_bound(kuhn):
    c = game_constants(kuhn, CF, ENTROPY, tau=0.0, gamma0=0.1)
    assert c.q_bound == 1.0
    from efglab.game import exploration_distribution
    nu = exploration_distribution(kuhn)
    floor = 0.1 * min(float(v.min()) for v in nu)
    assert c.q_bound_sampled == pytest.approx(1.0 / floor)


def test_check_m_bounds_counts():
    c = GameConstants(m1=1.0, m2=10.0)
    assert check_m_bounds(np.array([1.0, 5.0, 10.0]), c) == 0
    assert check_m_bounds(np.array([0.5, 5.0, 11.0]), c) == 2
