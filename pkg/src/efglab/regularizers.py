"""Regularizers and proximal steps over perturbed simplexes.

A perturbed simplex is {x in simplex : x_a >= gamma * nu_a} for an interior
direction nu. Two local regularizer families are supported, both weighted by
a per-infoset alpha:

    entropy:   psi(x) = alpha * (log n + sum_a x_a log x_a)   (negentropy,
               shifted so psi(uniform) = 0, max log n over the simplex)
    euclidean: psi(x) = (alpha / 2) * sum_a x_a**2

Tree-level (dilated) regularizers weight each infoset's local term by the
owner's sequence-form reach; the bidilated variant additionally weights by
chance-times-opponent reach.
"""

import numpy as np

ENTROPY = "entropy"
EUCLIDEAN = "euclidean"

_TINY = 1e-300


class TruncatedSimplex:
    """Feasible set {x >= gamma * nu, sum x = 1} with nu a distribution."""

    __slots__ = ("gamma", "nu")

    def __init__(self, gamma, nu):
        nu = np.asarray(nu, dtype=np.float64)
        if gamma < 0.0 or gamma > 1.0 + 1e-12:
            raise ValueError(f"gamma {gamma} outside [0, 1]")
        if np.any(nu <= 0.0) and gamma > 0.0:
            raise ValueError("nu must be strictly positive when gamma > 0")
        if gamma * nu.sum() > 1.0 + 1e-9:
            raise ValueError("floor mass gamma * sum(nu) exceeds 1")
        self.gamma = gamma
        self.nu = nu

    @property
    def num_actions(self):
        return self.nu.shape[0]

    def floor(self):
        return self.gamma * self.nu

    def contains(self, x, tol=1e-9):
        x = np.asarray(x)
        return (abs(x.sum() - 1.0) <= tol
                and bool(np.all(x >= self.gamma * self.nu - tol)))


def full_simplex(n):
    return TruncatedSimplex(0.0, np.full(n, 1.0 / n))


# ---------------------------------------------------------------------------
# Local regularizer values, gradients, divergences


def local_psi(x, alpha, family):
    x = np.asarray(x, dtype=np.float64)
    if family == ENTROPY:
        xs = np.clip(x, _TINY, None)
        return alpha * (np.log(x.shape[-1]) + np.sum(x * np.log(xs), axis=-1))
    if family == EUCLIDEAN:
        return alpha * 0.5 * np.sum(x * x, axis=-1)
    raise ValueError(f"unknown regularizer family {family!r}")


def local_psi_grad(x, alpha, family):
    x = np.asarray(x, dtype=np.float64)
    if family == ENTROPY:
        return alpha * (1.0 + np.log(np.clip(x, _TINY, None)))
    if family == EUCLIDEAN:
        return alpha * x
    raise ValueError(f"unknown regularizer family {family!r}")


def bregman_local(x, y, alpha, family):
    """D_psi(x, y) for one simplex."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if family == ENTROPY:
        xs = np.clip(x, _TINY, None)
        ys = np.clip(y, _TINY, None)
        return alpha * (np.sum(x * (np.log(xs) - np.log(ys)), axis=-1)
                        + np.sum(y - x, axis=-1))
    if family == EUCLIDEAN:
        d = x - y
        return alpha * 0.5 * np.sum(d * d, axis=-1)
    raise ValueError(f"unknown regularizer family {family!r}")


def _alpha_at(alpha, si):
    if np.isscalar(alpha):
        return alpha
    return alpha[si]


def dilated_psi(tree, profile, player, alpha, family):
    """Reach-weighted sum of local regularizers over one player's infosets."""
    from .game import to_sequence_form
    sf = to_sequence_form(tree, profile, player)
    total = 0.0
    for si in tree.infoset_ids(player):
        s = tree.infosets[si]
        total += (sf.realization(s.parent_seq)
                  * local_psi(profile[si], _alpha_at(alpha, si), family))
    return total


def bidilated_psi(tree, profile, player, alpha, family):
    """Dilated regularizer additionally weighted by chance-opponent reach.

    Equals the sum over the player's decision nodes of the full reach
    probability of the node times the local regularizer at its infoset.
    """
    from .game import reach_probabilities
    mu1, mu2, muc = reach_probabilities(tree, profile)
    opp = mu2 if player == 1 else mu1
    own = mu1 if player == 1 else mu2
    total = 0.0
    for si in tree.infoset_ids(player):
        psi = local_psi(profile[si], _alpha_at(alpha, si), family)
        w = sum(muc[h] * opp[h] * own[h] for h in tree.infosets[si].members)
        total += w * psi
    return total


def bregman_tree(tree, profile, ref_profile, player, alpha, family):
    """Dilated-regularizer Bregman divergence D(profile, ref) for one player.

    Decomposed form: sum over the player's infosets of the first argument's
    sequence-form reach times the local divergence.
    """
    from .game import to_sequence_form
    sf = to_sequence_form(tree, profile, player)
    total = 0.0
    for si in tree.infoset_ids(player):
        s = tree.infosets[si]
        total += (sf.realization(s.parent_seq)
                  * bregman_local(profile[si], ref_profile[si],
                                  _alpha_at(alpha, si), family))
    return total


def bregman_tree_direct(tree, profile, ref_profile, player, alpha, family):
    """Same divergence evaluated directly in sequence form.

    Computes psi_tree(mu) - psi_tree(mu_ref) - <grad psi_tree(mu_ref),
    mu - mu_ref> where the gradient of the dilated regularizer at sequence
    coordinate (s, a) is the local gradient at s plus, for every child
    infoset hanging off (s, a), the local value minus its linearization.
    """
    from .game import to_sequence_form
    sf = to_sequence_form(tree, profile, player)
    sfr = to_sequence_form(tree, ref_profile, player)
    children = {}
    for si in tree.infoset_ids(player):
        ps = tree.infosets[si].parent_seq
        if ps is not None:
            children.setdefault(ps, []).append(si)

    total = (dilated_psi(tree, profile, player, alpha, family)
             - dilated_psi(tree, ref_profile, player, alpha, family))
    for si in tree.infoset_ids(player):
        a_s = _alpha_at(alpha, si)
        pi_ref = np.asarray(ref_profile[si], dtype=np.float64)
        grad = local_psi_grad(pi_ref, a_s, family)
        for a in range(tree.infosets[si].num_actions):
            g = grad[a]
            for child in children.get((si, a), []):
                a_c = _alpha_at(alpha, child)
                pc = np.asarray(ref_profile[child], dtype=np.float64)
                g += (local_psi(pc, a_c, family)
                      - float(np.dot(local_psi_grad(pc, a_c, family), pc)))
            total -= g * (sf.seq[si][a] - sfr.seq[si][a])
    return total


# ---------------------------------------------------------------------------
# Projections


def project_truncated_simplex(z, simplex):
    """Euclidean projection of z onto a truncated simplex.

    Shifts by the floor, projects onto the scaled simplex of the remaining
    mass by the sort-and-threshold rule, and shifts back.
    """
    z = np.asarray(z, dtype=np.float64)
    floor = simplex.floor()
    slack = 1.0 - floor.sum()
    if slack <= 1e-15:
        return floor / floor.sum()
    y = z - floor
    srt = np.sort(y)[::-1]
    css = np.cumsum(srt) - slack
    ks = np.arange(1, y.shape[0] + 1)
    cond = srt - css / ks > 0.0
    k = ks[cond][-1]
    theta = css[k - 1] / k
    return floor + np.maximum(y - theta, 0.0)


def _project_rows(Y, slack):
    """Row-wise projection onto {p >= 0, sum p = slack_i}."""
    srt = -np.sort(-Y, axis=1)
    css = np.cumsum(srt, axis=1) - slack[:, None]
    ks = np.arange(1, Y.shape[1] + 1)
    cond = srt - css / ks > 0.0
    k = cond.shape[1] - np.argmax(cond[:, ::-1], axis=1)
    theta = css[np.arange(Y.shape[0]), k - 1] / k
    return np.maximum(Y - theta[:, None], 0.0)


# ---------------------------------------------------------------------------
# Proximal steps

# The prox step solves
#     min_x  <g, x> + tau0 * psi(x) + (1/eta) * D_psi(x, x0)
# over the truncated simplex.


def _entropy_floor_fit(xh, gamma, NU):
    """Normalize candidate weights xh subject to floors gamma * nu, row-wise.

    The floored set is found by scanning prefixes of the entries sorted by
    xh_a / nu_a ascending: flooring the k smallest ratios, the scale for the
    rest is Z_k = (remaining weight) / (remaining mass); the unique
    consistent k is the first one whose boundary entries respect the floor
    on both sides.
    """
    m, n = xh.shape
    NU = np.broadcast_to(NU, xh.shape)
    floor = gamma[:, None] * NU
    slack = 1.0 - floor.sum(axis=1)
    out = np.empty_like(xh)

    tight = slack <= 1e-12
    if np.any(tight):
        f = floor[tight]
        out[tight] = f / f.sum(axis=1, keepdims=True)
    rows = ~tight
    if not np.any(rows):
        return out
    xh, NU, fl = xh[rows], NU[rows], floor[rows]
    g = gamma[rows]
    order = np.argsort(xh / NU, axis=1, kind="stable")
    xs = np.take_along_axis(xh, order, axis=1)
    ns = np.take_along_axis(NU, order, axis=1)
    csx = np.cumsum(xs, axis=1)
    csn = np.cumsum(ns, axis=1)
    totx = csx[:, -1][:, None]
    # Candidate k = number of floored entries, k = 0..n-1.
    prevx = np.concatenate([np.zeros((xs.shape[0], 1)), csx[:, :-1]], axis=1)
    prevn = np.concatenate([np.zeros((ns.shape[0], 1)), csn[:, :-1]], axis=1)
    remx = totx - prevx
    denom = 1.0 - g[:, None] * prevn
    with np.errstate(divide="ignore", invalid="ignore"):
        Z = remx / denom
    gn = g[:, None] * ns
    ok_hi = xs >= Z * gn - 1e-18                    # entry k stays unfloored
    prev_below = np.concatenate(
        [np.ones((xs.shape[0], 1), dtype=bool),
         xs[:, :-1] <= Z[:, 1:] * gn[:, :-1] + 1e-18], axis=1)
    valid = ok_hi & prev_below & (denom > 0.0) & (Z > 0.0)
    k = np.argmax(valid, axis=1)
    Zk = Z[np.arange(Z.shape[0]), k]
    res_sorted = np.where(np.arange(xs.shape[1]) < k[:, None],
                          gn, xs / Zk[:, None])
    res = np.empty_like(res_sorted)
    np.put_along_axis(res, order, res_sorted, axis=1)
    # Enforce exact feasibility against roundoff.
    res = np.maximum(res, fl)
    out[rows] = res / res.sum(axis=1, keepdims=True)
    return out


def prox_entropy_batch(X0, G, tau0, eta, alpha, gamma, NU):
    """Row-wise entropy prox step. All row parameters are 1-D arrays."""
    c = 1.0 + eta * tau0
    logx0 = np.log(np.clip(X0, _TINY, None))
    logxh = logx0 / c[:, None] - (eta / (alpha * c))[:, None] * G
    logxh -= logxh.max(axis=1, keepdims=True)
    return _entropy_floor_fit(np.exp(logxh), gamma, NU)


def prox_euclidean_batch(X0, G, tau0, eta, alpha, gamma, NU):
    """Row-wise euclidean prox step. All row parameters are 1-D arrays."""
    xh = (X0 - (eta / alpha)[:, None] * G) / (1.0 + eta * tau0)[:, None]
    NU = np.broadcast_to(NU, xh.shape)
    floor = gamma[:, None] * NU
    slack = 1.0 - floor.sum(axis=1)
    out = np.empty_like(xh)
    tight = slack <= 1e-15
    if np.any(tight):
        f = floor[tight]
        out[tight] = f / f.sum(axis=1, keepdims=True)
    rows = ~tight
    if np.any(rows):
        out[rows] = floor[rows] + _project_rows(xh[rows] - floor[rows],
                                                slack[rows])
    return out


def _as_rows(x0, g, tau0, eta, alpha, simplex):
    X0 = np.asarray(x0, dtype=np.float64)[None, :]
    G = np.asarray(g, dtype=np.float64)[None, :]
    return (X0, G, np.asarray([tau0], dtype=np.float64),
            np.asarray([eta], dtype=np.float64),
            np.asarray([alpha], dtype=np.float64),
            np.asarray([simplex.gamma], dtype=np.float64),
            simplex.nu[None, :])


def prox_entropy(x0, g, tau0, eta, alpha, simplex):
    return prox_entropy_batch(*_as_rows(x0, g, tau0, eta, alpha, simplex))[0]


def prox_euclidean(x0, g, tau0, eta, alpha, simplex):
    return prox_euclidean_batch(*_as_rows(x0, g, tau0, eta, alpha, simplex))[0]


def prox_step(x0, g, tau0, eta, alpha, family, simplex):
    if family == ENTROPY:
        return prox_entropy(x0, g, tau0, eta, alpha, simplex)
    if family == EUCLIDEAN:
        return prox_euclidean(x0, g, tau0, eta, alpha, simplex)
    raise ValueError(f"unknown regularizer family {family!r}")


def prox_batch(family, X0, G, tau0, eta, alpha, gamma, NU):
    if family == ENTROPY:
        return prox_entropy_batch(X0, G, tau0, eta, alpha, gamma, NU)
    if family == EUCLIDEAN:
        return prox_euclidean_batch(X0, G, tau0, eta, alpha, gamma, NU)
    raise ValueError(f"unknown regularizer family {family!r}")


def argmax_regularized(q, tau0, alpha, family, simplex):
    """max_x <q, x> - tau0 * psi(x) over the truncated simplex.

    Returns (x, value). With tau0 = 0 this is the floored vertex at the
    maximizing action (ties broken toward the lowest index).
    """
    q = np.asarray(q, dtype=np.float64)
    if tau0 <= 0.0:
        floor = simplex.floor()
        slack = 1.0 - floor.sum()
        x = floor.copy()
        if slack > 0.0:
            x[np.argmax(q)] += slack
    elif family == ENTROPY:
        logxh = q / (alpha * tau0)
        logxh = logxh - logxh.max()
        x = _entropy_floor_fit(np.exp(logxh)[None, :],
                               np.asarray([simplex.gamma]),
                               simplex.nu[None, :])[0]
    elif family == EUCLIDEAN:
        x = project_truncated_simplex(q / (alpha * tau0), simplex)
    else:
        raise ValueError(f"unknown regularizer family {family!r}")
    value = float(np.dot(q, x)) - tau0 * local_psi(x, alpha, family)
    return x, value
