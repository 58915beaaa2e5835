"""Built-in benchmark games: Kuhn poker, Leduc poker, matching pennies."""

import numpy as np

from .game import CHANCE, PLAYER1, PLAYER2, GameTree, Infoset, Node


class _Builder:
    """Incremental tree construction in depth-first preorder."""

    def __init__(self):
        self.nodes = []
        self.infosets = []
        self._iskey = {}

    def terminal(self, utility):
        self.nodes.append(Node(utility=utility))
        return len(self.nodes) - 1

    def chance(self, labels, probs):
        node = Node(owner=CHANCE, actions=list(labels),
                    chance_probs=np.asarray(probs, dtype=np.float64))
        self.nodes.append(node)
        return len(self.nodes) - 1, node

    def decision(self, owner, key, labels):
        si = self._iskey.get(key)
        if si is None:
            si = len(self.infosets)
            self.infosets.append(Infoset(owner, list(labels)))
            self._iskey[key] = si
        node = Node(owner=owner, infoset=si, actions=list(labels))
        self.nodes.append(node)
        return len(self.nodes) - 1, node

    def build(self, name, utility_scale):
        return GameTree(name, self.nodes, self.infosets,
                        utility_scale=utility_scale)


def build_kuhn():
    """Three-card Kuhn poker, payoffs divided by 2 (utility_scale = 2)."""
    names = ["J", "Q", "K"]
    b = _Builder()

    def showdown(c1, c2, pot):
        return (pot if c1 > c2 else -pot) / 2.0

    def betting(c1, c2, hist):
        # Decision points: "" and "cb" for player 1, "c" and "b" for player 2.
        if hist == "":
            nid, node = b.decision(PLAYER1, (1, c1, hist), ["check", "bet"])
            node.children = [betting(c1, c2, "c"), betting(c1, c2, "b")]
            return nid
        if hist == "c":
            nid, node = b.decision(PLAYER2, (2, c2, hist), ["check", "bet"])
            node.children = [b.terminal(showdown(c1, c2, 1)),
                             betting(c1, c2, "cb")]
            return nid
        if hist == "b":
            nid, node = b.decision(PLAYER2, (2, c2, hist), ["fold", "call"])
            node.children = [b.terminal(0.5),
                             b.terminal(showdown(c1, c2, 2))]
            return nid
        # hist == "cb": player 1 facing a bet.
        nid, node = b.decision(PLAYER1, (1, c1, hist), ["fold", "call"])
        node.children = [b.terminal(-0.5),
                         b.terminal(showdown(c1, c2, 2))]
        return nid

    deals = [(c1, c2) for c1 in range(3) for c2 in range(3) if c1 != c2]
    _, root = b.chance([names[c1] + names[c2] for c1, c2 in deals],
                       [1.0 / 6.0] * 6)
    root.children = [betting(c1, c2, "") for c1, c2 in deals]
    return b.build("kuhn", 2.0)


def build_leduc():
    """Leduc poker: 6 cards (2 suits x 3 ranks), two betting rounds.

    Antes 1 each; raise size 2 in round 1 and 4 in round 2, at most two
    raises per round; fold is legal only when facing a raise. Player 1 acts
    first in both rounds. Payoffs divided by 13 (the largest single-player
    contribution), so utility_scale = 13.
    """
    suits = "sh"
    ranks = "JQK"
    names = [r + s for r in ranks for s in suits]

    def rank(card):
        return card // 2

    b = _Builder()

    def winner_sign(c1, c2, pub):
        """+1 if player 1 wins the showdown, -1 player 2, 0 split."""
        p1_pair, p2_pair = rank(c1) == rank(pub), rank(c2) == rank(pub)
        if p1_pair != p2_pair:
            return 1 if p1_pair else -1
        if rank(c1) != rank(c2):
            return 1 if rank(c1) > rank(c2) else -1
        return 0

    def fold_terminal(folder, contrib):
        loss = contrib[folder - 1]
        return b.terminal((-loss if folder == PLAYER1 else loss) / 13.0)

    def showdown_terminal(c1, c2, pub, contrib):
        sign = winner_sign(c1, c2, pub)
        amount = contrib[1] if sign > 0 else contrib[0] if sign < 0 else 0
        return b.terminal(sign * amount / 13.0)

    def betting(c1, c2, pub, rnd, hist1, hist, to_act, owed, raises, contrib,
                raise_size):
        """One decision point inside a betting round; returns node id."""
        my_card = c1 if to_act == PLAYER1 else c2
        labels = (["fold", "call", "raise"] if owed else ["call", "raise"])
        if raises >= 2:
            labels = labels[:-1]
        key = (to_act, my_card, pub, hist1, hist)
        nid, node = b.decision(to_act, key, labels)
        other = PLAYER1 + PLAYER2 - to_act
        kids = []
        for act in labels:
            nc = list(contrib)
            if act == "fold":
                kids.append(fold_terminal(to_act, contrib))
                continue
            if act == "call":
                nc[to_act - 1] += owed
                # A call closes the round unless it is the round's first act.
                if hist == "":
                    kids.append(betting(c1, c2, pub, rnd, hist1, hist + "c",
                                        other, 0, raises, nc, raise_size))
                else:
                    kids.append(round_over(c1, c2, pub, rnd, hist1, hist + "c",
                                           nc))
                continue
            nc[to_act - 1] += owed + raise_size
            kids.append(betting(c1, c2, pub, rnd, hist1, hist + "r", other,
                                raise_size, raises + 1, nc, raise_size))
        node.children = kids
        return nid

    def round_over(c1, c2, pub, rnd, hist1, hist, contrib):
        if rnd == 2:
            return showdown_terminal(c1, c2, pub, contrib)
        remaining = [c for c in range(6) if c not in (c1, c2)]
        nid, node = b.chance([names[c] for c in remaining],
                             [0.25] * len(remaining))
        node.children = [betting(c1, c2, p, 2, hist, "", PLAYER1, 0, 0,
                                 contrib, 4.0)
                         for p in remaining]
        return nid

    deals = [(c1, c2) for c1 in range(6) for c2 in range(6) if c1 != c2]
    _, root = b.chance([names[c1] + names[c2] for c1, c2 in deals],
                       [1.0 / 30.0] * 30)
    root.children = [betting(c1, c2, None, 1, None, "", PLAYER1, 0, 0,
                             [1.0, 1.0], 2.0)
                     for c1, c2 in deals]
    return b.build("leduc", 13.0)


def build_matching_pennies():
    """Zero-sum matching pennies as a two-level tree (player 1 matches)."""
    b = _Builder()
    _, root = b.decision(PLAYER1, (1,), ["heads", "tails"])
    kids = []
    for p1 in ("heads", "tails"):
        nid, node = b.decision(PLAYER2, (2,), ["heads", "tails"])
        node.children = [b.terminal(1.0 if p1 == p2 else -1.0)
                         for p2 in ("heads", "tails")]
        kids.append(nid)
    root.children = kids
    return b.build("matching_pennies", 1.0)
