"""Finite two-player stage games and the constants derived from them.

Payoffs given as ints, fractions or "p/q" strings are kept as ``Fraction`` so
that indifference conditions can be checked with zero residual.  Float input
falls back to float arithmetic with a 1e-10 tolerance.

Orders on action sets are listed from highest to lowest.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Mapping, Optional, Sequence

import numpy as np
from scipy.optimize import linprog

from .errors import AssumptionViolation, Degenerate, NoPureNE, ValidationError
from .numeric import FLOAT_TOL, all_exact, as_number, basic_solutions, fmt

WEIGHT_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class MixedAction:
    weights: Mapping[str, object]

    def __post_init__(self):
        w = {str(k): as_number(v) for k, v in dict(self.weights).items()}
        if not w:
            raise ValidationError("empty mixed action")
        if any(v < 0 for v in w.values()):
            raise ValidationError(f"negative weight in {w}")
        total = sum(w.values())
        exact = all_exact(w.values())
        if (total != 1) if exact else abs(float(total) - 1.0) > WEIGHT_TOL:
            raise ValidationError(f"weights sum to {total}, not 1")
        object.__setattr__(self, "weights", w)

    @classmethod
    def pure(cls, label):
        return cls({label: Fraction(1)})

    @classmethod
    def mix(cls, label_a, label_b, p):
        """p on label_a and 1-p on label_b."""
        p = as_number(p)
        if label_a == label_b:
            return cls.pure(label_a)
        return cls({label_a: p, label_b: 1 - p})

    def prob(self, label):
        return self.weights.get(label, Fraction(0))

    def support(self):
        return tuple(k for k, v in self.weights.items() if v > 0)

    @property
    def exact(self):
        return all_exact(self.weights.values())

    def __eq__(self, other):
        if not isinstance(other, MixedAction):
            return NotImplemented
        keys = set(self.support()) | set(other.support())
        return all(self.prob(k) == other.prob(k) for k in keys)

    def __repr__(self):
        body = ", ".join(f"{k}: {fmt(v)}" for k, v in self.weights.items() if v > 0)
        return f"MixedAction({{{body}}})"


def _as_mixed(x) -> MixedAction:
    if isinstance(x, MixedAction):
        return x
    if isinstance(x, str):
        return MixedAction.pure(x)
    return MixedAction(x)


@dataclass(frozen=True, eq=False)
class StageGame:
    actions_p1: tuple
    actions_p2: tuple
    u1: tuple
    u2: tuple
    order_p1: Optional[tuple] = None
    order_p2: Optional[tuple] = None
    name: str = ""

    def __post_init__(self):
        A = tuple(str(a) for a in self.actions_p1)
        B = tuple(str(b) for b in self.actions_p2)
        if len(A) < 2 or len(B) < 2:
            raise ValidationError("each player needs at least two actions")
        if len(set(A)) != len(A) or len(set(B)) != len(B):
            raise ValidationError("duplicate action labels")
        mats = []
        for nm, mat in (("u1", self.u1), ("u2", self.u2)):
            if isinstance(mat, np.ndarray):
                mat = mat.tolist()
            rows = list(mat)
            if len(rows) != len(A):
                raise ValidationError(f"{nm} has {len(rows)} rows, expected {len(A)}")
            out = []
            for i, row in enumerate(rows):
                row = list(row)
                if len(row) != len(B):
                    raise ValidationError(f"{nm} row {i} has {len(row)} entries, expected {len(B)}")
                out.append(tuple(as_number(v) for v in row))
            mats.append(tuple(out))
        for nm, order, acts in (("order_p1", self.order_p1, A), ("order_p2", self.order_p2, B)):
            if order is not None:
                order = tuple(str(x) for x in order)
                if sorted(order) != sorted(acts):
                    raise ValidationError(f"{nm} must list every action exactly once")
                object.__setattr__(self, nm, order)
        object.__setattr__(self, "actions_p1", A)
        object.__setattr__(self, "actions_p2", B)
        object.__setattr__(self, "u1", mats[0])
        object.__setattr__(self, "u2", mats[1])

    @cached_property
    def exact(self) -> bool:
        return all_exact(itertools.chain.from_iterable(self.u1 + self.u2))

    @property
    def tol(self) -> float:
        return 0 if self.exact else FLOAT_TOL

    @cached_property
    def U1(self) -> np.ndarray:
        return np.array([[float(v) for v in r] for r in self.u1])

    @cached_property
    def U2(self) -> np.ndarray:
        return np.array([[float(v) for v in r] for r in self.u2])

    def i1(self, a) -> int:
        return self.actions_p1.index(a)

    def i2(self, b) -> int:
        return self.actions_p2.index(b)

    def pay1(self, a, b):
        return self.u1[self.i1(a)][self.i2(b)]

    def pay2(self, a, b):
        return self.u2[self.i1(a)][self.i2(b)]

    def with_orders(self, order_p1, order_p2) -> "StageGame":
        return StageGame(self.actions_p1, self.actions_p2, self.u1, self.u2,
                         tuple(order_p1), tuple(order_p2), self.name)

    def expected_u1(self, alpha, beta):
        alpha, beta = _as_mixed(alpha), _as_mixed(beta)
        return sum(alpha.prob(a) * beta.prob(b) * self.pay1(a, b)
                   for a in self.actions_p1 for b in self.actions_p2)

    def expected_u2(self, alpha, beta):
        alpha, beta = _as_mixed(alpha), _as_mixed(beta)
        return sum(alpha.prob(a) * beta.prob(b) * self.pay2(a, b)
                   for a in self.actions_p1 for b in self.actions_p2)


def _argmax_set(labels, values, tol):
    best = max(values)
    return frozenset(l for l, v in zip(labels, values) if v >= best - tol)


def _tol(game, mix):
    return 0 if (game.exact and mix.exact) else FLOAT_TOL


def best_reply_p2(game: StageGame, alpha) -> frozenset:
    """Player 2's best replies to alpha (all ties included)."""
    alpha = _as_mixed(alpha)
    vals = [sum(alpha.prob(a) * game.pay2(a, b) for a in alpha.support())
            for b in game.actions_p2]
    return _argmax_set(game.actions_p2, vals, _tol(game, alpha))


def best_reply_p1(game: StageGame, beta) -> frozenset:
    beta = _as_mixed(beta)
    vals = [sum(beta.prob(b) * game.pay1(a, b) for b in beta.support())
            for a in game.actions_p1]
    return _argmax_set(game.actions_p1, vals, _tol(game, beta))


def _unique(s: frozenset, what: str):
    if len(s) != 1:
        raise AssumptionViolation(f"{what} is not a singleton: {sorted(s)}")
    return next(iter(s))


def stackelberg(game: StageGame):
    """Pure Stackelberg action, player 2's reply and the payoff."""
    cands = []
    for a in game.actions_p1:
        b = _unique(best_reply_p2(game, a), f"BR2({a})")
        cands.append((a, b, game.pay1(a, b)))
    best = max(c[2] for c in cands)
    top = [c for c in cands if c[2] >= best - game.tol]
    if len(top) > 1:
        raise AssumptionViolation(f"Stackelberg action is not unique: {[c[0] for c in top]}")
    return top[0]


def pure_nash(game: StageGame):
    out = []
    for a in game.actions_p1:
        for b in game.actions_p2:
            if b in best_reply_p2(game, a) and a in best_reply_p1(game, b):
                out.append((a, b))
    return out


def worst_pure_ne_p1(game: StageGame):
    """(a', b', u1(a', b')): the pure equilibrium player 1 likes least."""
    ne = pure_nash(game)
    if not ne:
        raise NoPureNE("stage game has no pure-strategy Nash equilibrium")
    a, b = min(ne, key=lambda ab: (game.pay1(*ab), game.pay2(*ab)))
    return a, b, game.pay1(a, b)


def worst_pure_ne_p2(game: StageGame):
    """(a'', b'', u2(a'', b'')): the pure equilibrium player 2 likes least."""
    ne = pure_nash(game)
    if not ne:
        raise NoPureNE("stage game has no pure-strategy Nash equilibrium")
    a, b = min(ne, key=lambda ab: (game.pay2(*ab), game.pay1(*ab)))
    return a, b, game.pay2(a, b)


# ---------------------------------------------------------------------------
# best-reply regions and the minmax payoff

def _br_region(game: StageGame, support):
    """Constraints on alpha making every b in ``support`` a best reply.

    Returns (E, e, G, h) for {alpha : E alpha = e, G alpha <= h}.
    """
    n = len(game.actions_p1)
    one, zero = (Fraction(1), Fraction(0)) if game.exact else (1.0, 0.0)
    E = [[one] * n]
    e = [one]
    idx = [game.i2(b) for b in support]
    b0 = idx[0]
    for j in idx[1:]:
        E.append([game.u2[i][j] - game.u2[i][b0] for i in range(n)])
        e.append(zero)
    G, h = [], []
    for j in range(len(game.actions_p2)):
        if j in idx:
            continue
        G.append([game.u2[i][j] - game.u2[i][b0] for i in range(n)])
        h.append(zero)
    for i in range(n):
        row = [zero] * n
        row[i] = -one
        G.append(row)
        h.append(zero)
    return E, e, G, h


def _small(game):
    return len(game.actions_p1) <= 4 and len(game.actions_p2) <= 4


def _minmax_on_pair(game: StageGame, S, cols):
    """min over p in [0,1] of max_a (p u1(a, S0) + (1-p) u1(a, S1)).

    The upper envelope is convex and piecewise linear, so the minimum sits at
    an endpoint or where two lines cross.
    """
    one = Fraction(1) if game.exact else 1.0
    lines = [(row[cols[0]] - row[cols[1]], row[cols[1]]) for row in game.u1]   # slope, intercept
    cands = {0 * one, one}
    for (s1, c1), (s2, c2) in itertools.combinations(lines, 2):
        if s1 != s2:
            p = (c2 - c1) / (s1 - s2)
            if 0 < p < 1:
                cands.add(p)
    best = None
    for p in sorted(cands):
        v = max(s * p + c for s, c in lines)
        if best is None or v < best[0]:
            best = (v, p)
    v, p = best
    return v, {S[0]: p, S[1]: one - p}


def region_point(game: StageGame, support):
    """Some alpha under which every action in ``support`` is a best reply, or None."""
    E, e, G, h = _br_region(game, support)
    if _small(game):
        for x in basic_solutions(E, e, G, h, exact=game.exact):
            return x
        return None
    res = linprog(np.zeros(len(E[0])), A_ub=np.array(G, float), b_ub=np.array(h, float),
                  A_eq=np.array(E, float), b_eq=np.array(e, float),
                  bounds=[(0, None)] * len(E[0]), method="highs")
    return list(res.x) if res.status == 0 else None


def realizable_supports(game: StageGame):
    """Supports S of player 2 such that some alpha makes all of S best replies."""
    B = game.actions_p2
    out = []
    for k in range(1, len(B) + 1):
        for S in itertools.combinations(B, k):
            if region_point(game, S) is not None:
                out.append(S)
    return out


def in_b_star(game: StageGame, beta) -> bool:
    """Whether beta best-replies to some mixed action of player 1."""
    beta = _as_mixed(beta)
    return region_point(game, tuple(b for b in game.actions_p2 if b in beta.support())) is not None


def _minmax_on_support(game: StageGame, S):
    """min over beta in Delta(S) of max_a u1(a, beta); returns (value, beta)."""
    m = len(S)
    cols = [game.i2(b) for b in S]
    if m == 1:
        one = Fraction(1) if game.exact else 1.0
        return max(row[cols[0]] for row in game.u1), {S[0]: one}
    if m == 2:
        return _minmax_on_pair(game, S, cols)
    if _small(game):
        one, zero = (Fraction(1), Fraction(0)) if game.exact else (1.0, 0.0)
        # variables: beta_S..., v
        E = [[one] * m + [zero]]
        e = [one]
        G, h = [], []
        for i in range(len(game.actions_p1)):
            G.append([game.u1[i][j] for j in cols] + [-one])
            h.append(zero)
        for k in range(m):
            row = [zero] * (m + 1)
            row[k] = -one
            G.append(row)
            h.append(zero)
        best = None
        for x in basic_solutions(E, e, G, h, exact=game.exact):
            if best is None or x[-1] < best[-1]:
                best = x
        return best[-1], dict(zip(S, best[:-1]))
    c = np.zeros(m + 1)
    c[-1] = 1.0
    A_ub = np.hstack([game.U1[:, cols], -np.ones((len(game.actions_p1), 1))])
    res = linprog(c, A_ub=A_ub, b_ub=np.zeros(len(game.actions_p1)),
                  A_eq=np.array([[1.0] * m + [0.0]]), b_eq=[1.0],
                  bounds=[(0, None)] * m + [(None, None)], method="highs")
    return float(res.x[-1]), dict(zip(S, (float(v) for v in res.x[:-1])))


def minmax_detail(game: StageGame):
    """(value, beta) attaining min over B* of max_a u1(a, beta)."""
    best = None
    for S in realizable_supports(game):
        v, beta = _minmax_on_support(game, S)
        if best is None or v < best[0]:
            best = (v, beta)
    return best[0], MixedAction(_clean(best[1], game.exact))


def _clean(w, exact):
    if exact:
        return w
    w = {k: max(0.0, float(v)) for k, v in w.items()}
    s = sum(w.values())
    return {k: v / s for k, v in w.items()}


def minmax_p1(game: StageGame):
    return minmax_detail(game)[0]


def minmax_actions(game: StageGame):
    """Candidate minmax actions: vertices of {beta in Delta(S) : max_a u1(a,beta) <= v} per
    realizable support S."""
    v = minmax_p1(game)
    out = []
    one, zero = (Fraction(1), Fraction(0)) if game.exact else (1.0, 0.0)
    tol = 0 if game.exact else 1e-9
    for S in realizable_supports(game):
        m = len(S)
        cols = [game.i2(b) for b in S]
        E = [[one] * m]
        e = [one]
        G = [[game.u1[i][j] for j in cols] for i in range(len(game.actions_p1))]
        h = [v + tol] * len(game.actions_p1)
        for k in range(m):
            row = [zero] * m
            row[k] = -one
            G.append(row)
            h.append(zero)
        for x in basic_solutions(E, e, G, h, exact=game.exact):
            w = {b: p for b, p in zip(S, x) if p > (0 if game.exact else 1e-12)}
            if set(w) == set(S):
                out.append(MixedAction(_clean(w, game.exact)))
    return out


# ---------------------------------------------------------------------------
# indifference thresholds

def _threshold(game, a_hi, a_lo, keep):
    """Largest q in [0,1] such that ``keep`` is a best reply to q a_hi + (1-q) a_lo.

    Returns (q, competitor) where competitor ties with ``keep`` at q.
    """
    best_q, comp = None, None
    for b in game.actions_p2:
        if b == keep:
            continue
        f0 = game.pay2(a_lo, keep) - game.pay2(a_lo, b)
        f1 = game.pay2(a_hi, keep) - game.pay2(a_hi, b)
        if f1 >= 0:
            continue
        q = f0 / (f0 - f1)
        if best_q is None or q < best_q:
            best_q, comp = q, b
    return best_q, comp


def indifference_q_star(game: StageGame):
    """q*: the largest weight on a* keeping b' a best reply against a* vs a'."""
    a_s, b_s, _ = stackelberg(game)
    a_p, b_p, _ = worst_pure_ne_p1(game)
    if a_p == a_s:
        raise Degenerate("a' equals a*; q* is undefined")
    q, comp = _threshold(game, a_s, a_p, b_p)
    if q is None:
        raise Degenerate(f"{b_p} best replies to {a_s} itself")
    return q


def b_starstar(game: StageGame):
    """b**: a reply other than b' that ties with b' at q*."""
    a_s, _, _ = stackelberg(game)
    a_p, b_p, _ = worst_pure_ne_p1(game)
    q = indifference_q_star(game)
    alpha = MixedAction.mix(a_s, a_p, q)
    others = [b for b in game.actions_p2 if b != b_p and b in best_reply_p2(game, alpha)]
    return others[0]


def a_dprime(game: StageGame):
    """BR1(b*)."""
    _, b_s, _ = stackelberg(game)
    return _unique(best_reply_p1(game, b_s), f"BR1({b_s})")


def indifference_p_star(game: StageGame):
    """p*: the largest p with {b*} != BR2(p a* + (1-p) a''), a'' = BR1(b*).

    Returns (p*, b'') with b'' a competing best reply at p*.
    """
    a_s, b_s, _ = stackelberg(game)
    a_dd = a_dprime(game)
    if a_dd == a_s:
        raise Degenerate("a'' equals a*; p* is undefined")
    best_p, comp = None, None
    for b in game.actions_p2:
        if b == b_s:
            continue
        h0 = game.pay2(a_dd, b_s) - game.pay2(a_dd, b)
        h1 = game.pay2(a_s, b_s) - game.pay2(a_s, b)
        if h0 > 0:
            continue  # b never weakly beats b* on the segment
        if h1 <= 0:
            raise Degenerate(f"{b} best replies to {a_s}")
        p = h0 / (h0 - h1)
        if best_p is None or p > best_p:
            best_p, comp = p, b
    if best_p is None:
        raise Degenerate(f"{b_s} best replies to {a_dd}")
    return best_p, comp


def delta_thresholds(game: StageGame):
    """(delta_low, delta_low_prime) as exact fractions for exact games."""
    a_s, b_s, u_star = stackelberg(game)
    top = max(game.pay1(a, b_s) for a in game.actions_p1)

    def thresh(a_lo, b_lo):
        v = game.pay1(a_lo, b_lo)
        if v >= u_star:
            return Fraction(0) if game.exact else 0.0
        first = (top - u_star) / (top - v)
        second = (v - game.pay1(a_s, b_lo)) / (u_star - game.pay1(a_s, b_lo))
        return max(first, second)

    a_p, b_p, _ = worst_pure_ne_p1(game)
    a_dd, b_dd, _ = worst_pure_ne_p2(game)
    return thresh(a_p, b_p), thresh(a_dd, b_dd)


def pi0_bar(q_star, K: int):
    """Prior cutoff with odds (q*/(2-q*))^(K+1)."""
    q = as_number(q_star)
    if not 0 < q < 1:
        raise ValidationError("q_star must lie in (0,1)")
    if K < 0:
        raise ValidationError("K must be nonnegative")
    odds = (q / (2 - q)) ** (K + 1)
    return odds / (1 + odds)


def odds(p):
    return p / (1 - p)


def prob_from_odds(o):
    return o / (1 + o)


# ---------------------------------------------------------------------------
# classification

@dataclass
class GameClass:
    satisfies_A1: bool
    satisfies_A2: bool
    strict_benefit: bool
    monotone_supermodular: bool
    condition3: bool
    strict_lack_of_commitment: bool
    generalized_coordination: bool
    condition3_alpha: Optional[MixedAction] = None
    condition3_beta: Optional[MixedAction] = None
    notes: list = field(default_factory=list)

    FLAGS = ("satisfies_A1", "satisfies_A2", "strict_benefit", "monotone_supermodular",
             "condition3", "strict_lack_of_commitment", "generalized_coordination")

    def as_dict(self):
        return {k: getattr(self, k) for k in self.FLAGS}


def check_assumption1(game: StageGame) -> bool:
    try:
        for b in game.actions_p2:
            _unique(best_reply_p1(game, b), "BR1")
        stackelberg(game)
    except AssumptionViolation:
        return False
    return True


def _infer_orders(game: StageGame):
    """Orders under which u1 is decreasing in a and increasing in b, read off
    the first column/row.  Ties mean no strict order exists."""
    col = [game.u1[i][0] for i in range(len(game.actions_p1))]
    row = list(game.u1[0])
    if len(set(col)) < len(col) or len(set(row)) < len(row):
        return None
    order_a = tuple(a for _, a in sorted(zip(col, game.actions_p1)))  # low u1 = high a
    order_b = tuple(b for _, b in sorted(zip(row, game.actions_p2), reverse=True))
    return order_a, order_b


def is_monotone_supermodular(game: StageGame, order_p1=None, order_p2=None) -> bool:
    if order_p1 is None:
        order_p1 = game.order_p1
    if order_p2 is None:
        order_p2 = game.order_p2
    if order_p1 is None or order_p2 is None:
        inferred = _infer_orders(game)
        if inferred is None:
            return False
        order_p1 = order_p1 or inferred[0]
        order_p2 = order_p2 or inferred[1]
    tol = game.tol
    # index lists from low to high
    A = [game.i1(a) for a in reversed(order_p1)]
    B = [game.i2(b) for b in reversed(order_p2)]
    u1, u2 = game.u1, game.u2
    for j in B:
        for lo, hi in zip(A, A[1:]):
            if not u1[hi][j] < u1[lo][j] - tol:
                return False
    for i in A:
        for lo, hi in zip(B, B[1:]):
            if not u1[i][hi] > u1[i][lo] + tol:
                return False
    for alo, ahi in zip(A, A[1:]):
        for blo, bhi in zip(B, B[1:]):
            if u1[ahi][bhi] - u1[alo][bhi] > u1[ahi][blo] - u1[alo][blo] + tol:
                return False
            if not u2[ahi][bhi] - u2[alo][bhi] > u2[ahi][blo] - u2[alo][blo] + tol:
                return False
    try:
        a_s = stackelberg(game)[0]
    except AssumptionViolation:
        return False
    return a_s != order_p1[-1]


def strict_lack_of_commitment(game: StageGame) -> bool:
    try:
        a_s, b_s, u_star = stackelberg(game)
        a_p, b_p, _ = worst_pure_ne_p1(game)
        if a_s in best_reply_p1(game, b_s):
            return False
        a_dd = a_dprime(game)
        _, b_dd = indifference_p_star(game)
        b_ss = b_starstar(game)
    except (AssumptionViolation, NoPureNE, Degenerate):
        return False
    u = game.pay1
    return (u(a_dd, b_dd) >= u(a_s, b_dd)
            and u(a_p, b_ss) >= u(a_s, b_ss)
            and u(a_dd, b_s) - u_star >= u(a_p, b_ss) - u(a_s, b_ss))


def generalized_coordination(game: StageGame) -> bool:
    try:
        a_s, b_s, _ = stackelberg(game)
    except AssumptionViolation:
        return False
    return a_s in best_reply_p1(game, b_s)


def condition3_witness(game: StageGame):
    """(alpha, beta) for the minmax-action condition, with alpha putting as much
    weight as possible on a*.  None when no candidate minmax action works."""
    a_s, b_s, _ = stackelberg(game)
    n = len(game.actions_p1)
    k_star = game.i1(a_s)
    best = None
    one, zero = (Fraction(1), Fraction(0)) if game.exact else (1.0, 0.0)
    for beta in minmax_actions(game):
        supp = beta.support()
        if b_s in supp:
            continue
        E, e, G, h = _br_region(game, supp)
        # u1(alpha, beta) >= u1(a*, beta)  <=>  -(sum_a alpha_a u1(a,beta)) + u1(a*,beta) <= 0
        ub = [sum(beta.prob(b) * game.pay1(a, b) for b in supp) for a in game.actions_p1]
        G = G + [[-x + ub[k_star] for x in ub]]
        h = h + [zero]
        for x in basic_solutions(E, e, G, h, exact=game.exact):
            if x[k_star] <= (0 if game.exact else 1e-12):
                continue
            if best is None or x[k_star] > best[0][k_star]:
                best = (x, beta)
    if best is None:
        return None
    x, beta = best
    alpha = MixedAction(_clean({a: p for a, p in zip(game.actions_p1, x)
                                if p > (0 if game.exact else 1e-14)}, game.exact))
    return alpha, beta


def classify(game: StageGame) -> GameClass:
    notes = []
    a1 = check_assumption1(game)
    a2 = bool(pure_nash(game))
    sb = False
    if a1 and a2:
        sb = stackelberg(game)[2] > worst_pure_ne_p1(game)[2]
    msm = is_monotone_supermodular(game) if a1 else False
    w = None
    if a1 and a2:
        try:
            w = condition3_witness(game)
        except (AssumptionViolation, NoPureNE) as exc:  # pragma: no cover - guarded above
            notes.append(str(exc))
    slc = strict_lack_of_commitment(game) if a1 and a2 else False
    gc = generalized_coordination(game) if a1 and a2 else False
    return GameClass(a1, a2, sb, msm, w is not None, slc, gc,
                     condition3_alpha=w[0] if w else None,
                     condition3_beta=w[1] if w else None, notes=notes)


# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DerivedGameConstants:
    a_star: str
    b_star: str
    u_star: object
    a_prime: str
    b_prime: str
    a_dprime: Optional[str]
    b_dprime: Optional[str]
    b_starstar: Optional[str]
    q_star: object
    p_star: object
    v1_low: object
    v1_minmax: object
    delta_low: object
    delta_low_prime: object
    pi0_bar: object
    worst_ne_p2: tuple = ()

    def as_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def derive_constants(game: StageGame, K: int = 1) -> DerivedGameConstants:
    a_s, b_s, u_star = stackelberg(game)
    a_p, b_p, v1 = worst_pure_ne_p1(game)
    a_dd2, b_dd2, _ = worst_pure_ne_p2(game)
    q = p = b_ss = b_dd = None
    pbar = None
    if a_p != a_s:
        q = indifference_q_star(game)
        b_ss = b_starstar(game)
        if 0 < q < 1:
            pbar = pi0_bar(q, K)
    a_dd = a_dprime(game)
    if a_dd != a_s:
        try:
            p, b_dd = indifference_p_star(game)
        except Degenerate:
            pass
    dl, dlp = delta_thresholds(game)
    return DerivedGameConstants(a_s, b_s, u_star, a_p, b_p, a_dd, b_dd, b_ss, q, p, v1,
                                minmax_p1(game), dl, dlp, pbar, (a_dd2, b_dd2))
