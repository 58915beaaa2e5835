"""Value feedback for extensive-form strategies.

Three interchangeable per-infoset value notions, related through the
multiplier m_s:

    counterfactual (cf): m_s = 1
    q-value (q):         m_s = sum_{h in s} chance(h) * opp_reach(h)
    trajectory-q (tq):   m_s = 1 / own_reach(sigma(s))

so that cf(s, a) = m_s * q(s, a) for every notion. Values may be augmented
with a regularizer bonus: every decision infoset strictly below (s, a)
contributes -tau * psi of its local strategy when it belongs to the same
player and +tau * psi when it belongs to the opponent, weighted by the
probability of reaching it.

The heavy lifting operates on flat "pair" arrays indexed by (infoset,
action) in the tree's canonical order; see game.flatten_profile.
"""

import numpy as np

from .game import PLAYER1, PLAYER2, flatten_profile
from .regularizers import local_psi

CF = "cf"
QVALUE = "q"
TRAJQ = "tq"

FEEDBACK_KINDS = (CF, QVALUE, TRAJQ)

_TINY = 1e-300


class FeedbackBundle:
    """Per-infoset values q, multipliers m, and reach weights."""

    __slots__ = ("kind", "tau", "q", "m", "own_reach", "opp_reach", "cf")

    def __init__(self, kind, tau, q, m, own_reach, opp_reach, cf):
        self.kind = kind
        self.tau = tau
        self.q = q
        self.m = m
        self.own_reach = own_reach
        self.opp_reach = opp_reach
        self.cf = cf

    @property
    def augmented(self):
        """Whether regularizer terms are folded into the values."""
        return self.tau != 0.0


# ---------------------------------------------------------------------------
# Flat-array engine


def edge_weights_flat(tree, flat):
    """Action probability (chance probability) for every tree edge."""
    dec = tree.edge_pair >= 0
    w = tree.edge_chance_prob.copy()
    w[dec] = flat[tree.edge_pair[dec]]
    return w


def reach_flat(tree, flat):
    """Per-node reach contributions (mu1, mu2, muc) from a flat profile."""
    n = tree.num_nodes
    mu1, mu2, muc = np.ones(n), np.ones(n), np.ones(n)
    w = edge_weights_flat(tree, flat)
    for lo, hi in tree.edge_level_slices:
        if lo == hi:
            continue
        par = tree.edge_parent[lo:hi]
        ch = tree.edge_child[lo:hi]
        mu1[ch] = mu1[par]
        mu2[ch] = mu2[par]
        muc[ch] = muc[par]
        own = tree.edge_owner[lo:hi]
        for p, mu in ((PLAYER1, mu1), (PLAYER2, mu2), (0, muc)):
            mask = own == p
            if np.any(mask):
                mu[ch[mask]] *= w[lo:hi][mask]
    return mu1, mu2, muc


def psi_flat(tree, flat, alpha, family):
    """Local regularizer value of every infoset's current distribution."""
    from .regularizers import ENTROPY, EUCLIDEAN
    n_sets = tree.num_infosets
    if family == ENTROPY:
        xs = np.clip(flat, _TINY, None)
        inner = np.bincount(tree.pair_infoset, weights=flat * np.log(xs),
                            minlength=n_sets)
        return alpha * (np.log(tree.actions_per_infoset) + inner)
    if family == EUCLIDEAN:
        return alpha * 0.5 * np.bincount(tree.pair_infoset,
                                         weights=flat * flat,
                                         minlength=n_sets)
    raise ValueError(f"unknown regularizer family {family!r}")


def _value_to_go(tree, flat, tau, psis):
    """Backward sweep of regularizer-augmented values-to-go, per player.

    t[p][h] is the expected downstream payoff of player p from node h under
    the profile, including tau-weighted regularizer bonuses of every
    decision node at or below h (negative at p's own nodes, positive at the
    opponent's).
    """
    n = tree.num_nodes
    t1 = np.zeros(n)
    t2 = np.zeros(n)
    if tau != 0.0:
        sgn = np.where(tree.node_owner[tree.member_node] == PLAYER1,
                       -1.0, 1.0)
        bonus = tau * psis[tree.member_infoset]
        t1[tree.member_node] = sgn * bonus
        t2[tree.member_node] = -sgn * bonus
    t1[tree.terminal_ids] = tree.terminal_utils
    t2[tree.terminal_ids] = -tree.terminal_utils
    w = edge_weights_flat(tree, flat)
    for d in range(len(tree.edge_level_slices) - 1, -1, -1):
        lo, hi = tree.edge_level_slices[d]
        if lo == hi:
            continue
        par = tree.edge_parent[lo:hi]
        ch = tree.edge_child[lo:hi]
        np.add.at(t1, par, w[lo:hi] * t1[ch])
        np.add.at(t2, par, w[lo:hi] * t2[ch])
    return t1, t2


def feedback_flat(tree, flat, kind, tau=0.0, alpha=1.0, family=None):
    """Flat-array core of compute_feedback.

    Returns (q_flat, m, own_reach, opp_reach, cf_flat); the per-infoset
    arrays m, own_reach, opp_reach have length num_infosets.
    """
    if kind not in FEEDBACK_KINDS:
        raise ValueError(f"unknown feedback kind {kind!r}")
    if tau != 0.0 and family is None:
        raise ValueError("tau > 0 requires a regularizer family")
    psis = (psi_flat(tree, flat, alpha, family) if tau != 0.0 else None)

    mu1, mu2, muc = reach_flat(tree, flat)
    t1, t2 = _value_to_go(tree, flat, tau, psis)

    dec = tree.edge_pair >= 0
    par = tree.edge_parent[dec]
    ch = tree.edge_child[dec]
    own_is1 = tree.edge_owner[dec] == PLAYER1
    wpar = muc[par] * np.where(own_is1, mu2[par], mu1[par])
    tval = np.where(own_is1, t1[ch], t2[ch])
    cf_flat = np.bincount(tree.edge_pair[dec], weights=wpar * tval,
                          minlength=tree.num_pairs)

    fm = tree.first_member
    own_reach = np.where(tree.infoset_owner == PLAYER1, mu1[fm], mu2[fm])
    mn = tree.member_node
    mopp = np.where(tree.node_owner[mn] == PLAYER1, mu2[mn], mu1[mn])
    opp_reach = np.bincount(tree.member_infoset, weights=muc[mn] * mopp,
                            minlength=tree.num_infosets)

    if kind == CF:
        q_flat = cf_flat
        m = np.ones(tree.num_infosets)
    elif kind == QVALUE:
        if np.any(opp_reach <= 0.0):
            bad = int(np.argmin(opp_reach))
            raise ValueError(
                f"q-value feedback undefined: infoset {bad} has zero "
                f"opponent reach")
        q_flat = cf_flat / np.repeat(opp_reach, tree.actions_per_infoset)
        m = opp_reach.copy()
    else:  # TRAJQ
        if np.any(own_reach <= 0.0):
            bad = int(np.argmin(own_reach))
            raise ValueError(
                f"trajectory-q feedback undefined: infoset {bad} has zero "
                f"own reach")
        q_flat = cf_flat * np.repeat(own_reach, tree.actions_per_infoset)
        m = 1.0 / own_reach
    return q_flat, m, own_reach, opp_reach, cf_flat


def _split(tree, flat):
    return [flat[o:o + n] for o, n in
            zip(tree.infoset_offset, tree.actions_per_infoset)]


def compute_feedback(tree, profile, kind, tau=0.0, alpha=1.0, family=None):
    """Exact full-information value feedback for both players.

    Returns a FeedbackBundle whose q[s] is the chosen value notion at
    infoset s (for its owner) and m[s] the multiplier relating it to the
    counterfactual value. With tau > 0 a regularizer family must be given
    and values are augmented as described in the module docstring.
    """
    flat = flatten_profile(tree, profile)
    a = alpha if np.isscalar(alpha) else np.asarray(alpha)
    q_flat, m, own_reach, opp_reach, cf_flat = feedback_flat(
        tree, flat, kind, tau, a, family)
    return FeedbackBundle(kind, tau, _split(tree, q_flat), m, own_reach,
                          opp_reach, _split(tree, cf_flat))


def opponent_reach(tree, profile):
    """Per-infoset sum over members of chance reach times opponent reach."""
    flat = flatten_profile(tree, profile)
    mu1, mu2, muc = reach_flat(tree, flat)
    mn = tree.member_node
    mopp = np.where(tree.node_owner[mn] == PLAYER1, mu2[mn], mu1[mn])
    return np.bincount(tree.member_infoset, weights=muc[mn] * mopp,
                       minlength=tree.num_infosets)


# ---------------------------------------------------------------------------
# Sampling


class Trajectory:
    """One root-to-terminal sample path.

    nodes includes the terminal; for step k, actions[k] was taken at
    nodes[k] with sampling probability sample_probs[k] and profile
    probability true_probs[k]. utility is player 1's terminal payoff.
    """

    __slots__ = ("nodes", "actions", "sample_probs", "true_probs", "utility")

    def __init__(self, nodes, actions, sample_probs, true_probs, utility):
        self.nodes = nodes
        self.actions = actions
        self.sample_probs = sample_probs
        self.true_probs = true_probs
        self.utility = utility

    @property
    def num_steps(self):
        return len(self.actions)


def sample_trajectory(tree, profile, rng, explore_eps=0.0):
    """Sample one trajectory. Decision actions are drawn from the profile
    mixed with a uniform exploration component of weight explore_eps."""
    node = tree.root
    nodes, actions, sp, tp = [], [], [], []
    while True:
        nd = tree.nodes[node]
        if nd.is_terminal:
            nodes.append(node)
            return Trajectory(nodes, actions, sp, tp, nd.utility)
        if nd.is_chance:
            probs = nd.chance_probs
            a = _sample_index(rng, probs)
            sprob = tprob = probs[a]
        else:
            probs = np.asarray(profile[nd.infoset], dtype=np.float64)
            if explore_eps > 0.0:
                mix = ((1.0 - explore_eps) * probs
                       + explore_eps / probs.shape[0])
            else:
                mix = probs
            a = _sample_index(rng, mix)
            sprob, tprob = mix[a], probs[a]
        nodes.append(node)
        actions.append(a)
        sp.append(float(sprob))
        tp.append(float(tprob))
        node = nd.children[a]


def _sample_index(rng, probs):
    """Index draw by inverse CDF (cheaper than rng.choice for short probs)."""
    r = rng.random() * probs.sum()
    acc = 0.0
    for i in range(probs.shape[0] - 1):
        acc += probs[i]
        if r < acc:
            return i
    return probs.shape[0] - 1


def estimate_trajectory_q(tree, traj, profile, tau=0.0, alpha=1.0,
                          family=None, dilated=False):
    """One-hot trajectory-q estimates from an on-policy trajectory.

    Walks the trajectory backward. For each visited decision infoset s with
    taken action a the estimate is (W_p + tau * S_p) / pi_p(a | s), where
    W_p is the owner's terminal payoff and S_p accumulates the regularizer
    bonuses of decision infosets visited strictly later: -psi at the owner's
    own infosets and, unless dilated, +psi at the opponent's.

    With dilated=True only own infosets contribute, importance-weighted by
    the inverse product of opponent and chance action probabilities between
    the decision and the contributing infoset (unbiased for reach weights
    that involve only the owner's own strategy).

    Returns {infoset_id: (action, estimate)} over visited infosets. The
    trajectory must have been sampled from `profile` itself.
    """
    if tau != 0.0 and family is None:
        raise ValueError("tau > 0 requires a regularizer family")
    est = {}
    s1 = s2 = 0.0
    u1 = traj.utility
    for k in range(traj.num_steps - 1, -1, -1):
        nd = tree.nodes[traj.nodes[k]]
        pk = traj.true_probs[k]
        if nd.is_chance:
            if dilated:
                s1 /= pk
                s2 /= pk
            continue
        a = traj.actions[k]
        if nd.owner == PLAYER1:
            est[nd.infoset] = (a, (u1 + tau * s1) / pk)
        else:
            est[nd.infoset] = (a, (-u1 + tau * s2) / pk)
        if tau != 0.0:
            al = alpha if np.isscalar(alpha) else alpha[nd.infoset]
            psi = local_psi(profile[nd.infoset], al, family)
        else:
            psi = 0.0
        if nd.owner == PLAYER1:
            s1 -= psi
            if dilated:
                s2 /= pk
            else:
                s2 += psi
        else:
            s2 -= psi
            if dilated:
                s1 /= pk
            else:
                s1 += psi
    return est
