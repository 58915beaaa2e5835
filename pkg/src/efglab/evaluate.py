"""Exact evaluation: best response, exploitability, regularized gaps.

All routines share one backward-induction engine. For a fixed opponent the
optimizer's infosets are processed deepest-first (in own decisions); each
infoset solves a local perturbed, regularized linear problem and the
resulting policy is folded into the values seen by shallower infosets. The
opponent's regularizer enters linearly (it is weighted by the optimizer's
reach), so it folds into the backed-up values as a per-node bonus.
"""

import numpy as np

from .game import PLAYER1, PLAYER2, flatten_profile
from .regularizers import (ENTROPY, TruncatedSimplex, argmax_regularized,
                           bregman_tree, full_simplex, local_psi)
from .values import QVALUE, reach_flat


def _alpha_arr(tree, alpha):
    if np.isscalar(alpha):
        return np.full(tree.num_infosets, float(alpha))
    return np.asarray(alpha, dtype=np.float64)


def _reg_best_response(tree, profile, player, tau=0.0, alpha=1.0,
                       family=ENTROPY, simplexes=None):
    """Best response of `player` in the perturbed, regularized game.

    Maximizes expected utility minus tau times the player's own
    reach-weighted regularizer plus tau times the opponent's, over local
    policies constrained to the given truncated simplexes. Returns
    (value, policies) with policies a dict over the player's infosets.
    With tau = 0 and full simplexes this is the exact best response
    (ties broken toward the lowest action index).
    """
    alpha = _alpha_arr(tree, alpha)
    if simplexes is None:
        simplexes = [full_simplex(s.num_actions) for s in tree.infosets]
    flat = flatten_profile(tree, profile)
    mu1, mu2, muc = reach_flat(tree, flat)
    opp_mu = mu2 if player == PLAYER1 else mu1
    w = muc * opp_mu

    psi_opp = np.zeros(tree.num_infosets)
    if tau != 0.0:
        for si, s in enumerate(tree.infosets):
            if s.owner != player:
                psi_opp[si] = local_psi(profile[si], alpha[si], family)

    down = np.full(tree.num_nodes, np.nan)
    policies = {}

    def resolve(h):
        if not np.isnan(down[h]):
            return down[h]
        node = tree.nodes[h]
        if node.is_terminal:
            u = node.utility if player == PLAYER1 else -node.utility
            val = w[h] * u
        elif node.is_chance:
            val = sum(resolve(c) for c in node.children)
        elif node.owner != player:
            val = sum(resolve(c) for c in node.children)
            if tau != 0.0:
                val += tau * w[h] * psi_opp[node.infoset]
        else:
            pol = policies[node.infoset]
            val = float(np.dot(pol, [resolve(c) for c in node.children]))
            if tau != 0.0:
                val -= (tau * w[h]
                        * local_psi(pol, alpha[node.infoset], family))
        down[h] = val
        return val

    order = sorted(tree.infoset_ids(player),
                   key=lambda si: -tree.infosets[si].own_depth)
    for si in order:
        s = tree.infosets[si]
        qvec = np.zeros(s.num_actions)
        w_s = 0.0
        for h in s.members:
            w_s += w[h]
            for a, c in enumerate(tree.nodes[h].children):
                qvec[a] += resolve(c)
        x, _ = argmax_regularized(qvec, tau * w_s, alpha[si], family,
                                  simplexes[si])
        policies[si] = x
    return resolve(tree.root), policies


def best_response(tree, profile, player):
    """Exact best-response value and profile against `profile`.

    Returns (value, br_profile) where br_profile copies the opponent's
    strategies and replaces the player's with the (pure, floored-vertex)
    best response; ties break toward the lowest action index.
    """
    value, policies = _reg_best_response(tree, profile, player)
    br = [np.asarray(x, dtype=np.float64).copy() for x in profile]
    for si, x in policies.items():
        br[si] = x
    return value, br


def exploitability(tree, profile):
    """Sum of both players' best-response gains; zero exactly at a Nash
    equilibrium (in the game's stored utility scale)."""
    v1, _ = _reg_best_response(tree, profile, PLAYER1)
    v2, _ = _reg_best_response(tree, profile, PLAYER2)
    return v1 + v2


def perturbed_regularized_gap(tree, profile, tau, alpha=1.0, family=ENTROPY,
                              simplexes=None):
    """Saddle-point gap of the perturbed, regularized game at `profile`.

    The objective is expected utility minus tau times player 1's
    reach-weighted regularizer plus tau times player 2's; each player's
    deviations range over the truncated simplexes. Non-negative, zero only
    at the regularized equilibrium.
    """
    v1, _ = _reg_best_response(tree, profile, PLAYER1, tau, alpha, family,
                               simplexes)
    v2, _ = _reg_best_response(tree, profile, PLAYER2, tau, alpha, family,
                               simplexes)
    return v1 + v2


def bregman_to_reference(tree, profile, reference, alpha=1.0,
                         family=ENTROPY):
    """Dilated Bregman divergence from the reference profile to `profile`,
    summed over both players (reference reach weights)."""
    return (bregman_tree(tree, reference, profile, PLAYER1, alpha, family)
            + bregman_tree(tree, reference, profile, PLAYER2, alpha, family))


def compute_reference(tree, tau, alpha=1.0, family=ENTROPY, gamma=0.0,
                      tol=1e-7, eta=0.05, max_iters=500_000,
                      check_every=100):
    """Solve the perturbed, regularized game to gap <= tol.

    Runs the full-information optimistic solver with q-value feedback and
    returns (reference_profile, gap). Raises if the budget is exhausted.
    """
    from .solvers import SolverParams, SolverState, qfr_full_step
    params = SolverParams(tree, feedback=QVALUE, family=family, alpha=alpha,
                          tau=tau, gamma=gamma, eta=eta)
    state = SolverState(tree, params)
    simplexes = params.simplexes
    for it in range(1, max_iters + 1):
        qfr_full_step(state, tree, params)
        if it % check_every == 0 or it == max_iters:
            prof = state.bar_profile(tree)
            gap = perturbed_regularized_gap(tree, prof, tau, alpha, family,
                                            simplexes)
            if gap <= tol:
                return prof, gap
    raise RuntimeError(
        f"reference solve did not reach gap <= {tol} in {max_iters} "
        f"iterations (last gap {gap})")
