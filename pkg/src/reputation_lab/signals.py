"""Private signals about player 1's current action.

Signal structures, informativeness and MLRP checks, bounds on how much the
responder's action reveals about the commitment type, payoff floors, the
bounded-signal bad equilibrium and the three-action counterexample.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Mapping, Optional, Sequence, Tuple

import numpy as np

from . import games as G
from .automaton import PhaseAutomaton, Rule, pure, simple_state
from .bounded_memory import build_theorem1
from .errors import (DegenerateG, DomainError, InfeasiblePi, PreconditionFail, UnboundedSignal,
                     ValidationError)
from .games import MixedAction, StageGame
from .numeric import as_number, fmt, kl_divergence

SUM_TOL = 1e-12


@dataclass(frozen=True)
class SignalStructure:
    """``f[a][s]`` = probability of signal s when player 1 plays a.

    ``order`` lists signals from highest to lowest when one is fixed.
    """
    signals: Tuple[str, ...]
    f: Mapping[str, Mapping[str, object]]
    order: Optional[Tuple[str, ...]] = None

    def __post_init__(self):
        sig = tuple(self.signals)
        if len(set(sig)) != len(sig):
            raise ValidationError("duplicate signal labels")
        clean = {}
        for a, row in self.f.items():
            bad = set(row) - set(sig)
            if bad:
                raise ValidationError(f"row {a} uses undefined signals {sorted(bad)}")
            r = {s: as_number(row.get(s, 0)) for s in sig}
            if any(v < 0 for v in r.values()):
                raise ValidationError(f"row {a} has a negative probability")
            tot = sum(r.values())
            if abs(tot - 1) > SUM_TOL:
                raise ValidationError(f"row {a} sums to {fmt(tot)}, not 1")
            clean[a] = r
        object.__setattr__(self, "signals", sig)
        object.__setattr__(self, "f", clean)
        if self.order is not None and sorted(self.order) != sorted(sig):
            raise ValidationError("signal order must list every signal once")

    @classmethod
    def from_pair(cls, pair, order=None):
        signals, f = pair
        return cls(tuple(signals), f, order)

    def prob(self, s, a):
        return self.f[a][s]

    def row(self, a):
        return np.array([float(self.f[a][s]) for s in self.signals])

    @property
    def actions(self):
        return tuple(self.f)


def _sig(f) -> SignalStructure:
    if isinstance(f, SignalStructure):
        return f
    if isinstance(f, tuple) and len(f) == 2:
        return SignalStructure.from_pair(f)
    raise ValidationError("expected a SignalStructure or (signals, rows) pair")


def is_unboundedly_informative(f, a_star) -> Tuple[bool, Optional[str]]:
    """(True, s) when signal s has positive probability exactly under a_star."""
    f = _sig(f)
    for s in f.signals:
        if f.prob(s, a_star) > 0 and all(f.prob(s, a) == 0 for a in f.actions if a != a_star):
            return True, s
    return False, None


def _mlrp_under(f: SignalStructure, order_A, order_S) -> bool:
    for i, a in enumerate(order_A):
        for a2 in order_A[i + 1:]:
            for j, s in enumerate(order_S):
                for s2 in order_S[j + 1:]:
                    # cross-multiplied form keeps zero denominators harmless
                    if f.prob(s, a) * f.prob(s2, a2) < f.prob(s, a2) * f.prob(s2, a):
                        return False
    return True


def check_mlrp(f, order_A: Sequence[str], order_S: Optional[Sequence[str]] = None) -> bool:
    """MLRP with actions and signals listed from highest to lowest.

    Without ``order_S`` every order on the signals is tried.
    """
    f = _sig(f)
    order_A = tuple(order_A)
    if order_S is not None:
        return _mlrp_under(f, order_A, tuple(order_S))
    return any(_mlrp_under(f, order_A, perm) for perm in itertools.permutations(f.signals))


def mlrp_orders(f, order_A) -> list:
    f = _sig(f)
    return [p for p in itertools.permutations(f.signals) if _mlrp_under(f, tuple(order_A), p)]


def likelihood_bound(f, a_star, a_prime):
    """l*: the largest likelihood ratio f(s|a*) / f(s|a') over signals."""
    f = _sig(f)
    best = None
    for s in f.signals:
        num, den = f.prob(s, a_star), f.prob(s, a_prime)
        if num == 0:
            continue
        if den == 0:
            raise UnboundedSignal(f"signal {s} occurs only under {a_star}")
        v = num / den
        if best is None or v > best:
            best = v
    return best


# ---------------------------------------------------------------------------
# responder analysis with two actions for player 1

@dataclass
class ResponderAnalysis:
    g: object
    g_commit: object
    r: object
    cutoff_index: int
    posteriors: Dict[str, object]
    tau: Dict[str, object]
    C: object
    p_star_belief: object
    plays_b_star: Dict[str, bool] = field(default_factory=dict)

    def __post_init__(self):
        for name in ("g", "g_commit", "r"):
            v = getattr(self, name)
            if not -1e-12 <= v <= 1 + 1e-12:
                raise ValidationError(f"{name} = {v} outside [0,1]")


def cutoff_belief(game: StageGame):
    """Belief on a* above which b* is player 2's strict best reply (|A| = 2)."""
    if len(game.actions_p1) != 2:
        raise ValidationError("cutoff belief needs exactly two actions for player 1")
    a_s, b_s, _ = G.stackelberg(game)
    a_o = next(a for a in game.actions_p1 if a != a_s)
    best = Fraction(0) if game.exact else 0.0
    for b in game.actions_p2:
        if b == b_s:
            continue
        h1 = game.pay2(a_s, b_s) - game.pay2(a_s, b)
        h0 = game.pay2(a_o, b_s) - game.pay2(a_o, b)
        if h0 >= 0:
            continue
        p = -h0 / (h1 - h0)
        best = max(best, p)
    return best


def responsiveness_constant(game: StageGame):
    """C with 1 - r >= C (1 - g): any signal after which b* is not played has
    posterior at most the cutoff belief p, so 1 - r >= (1 - p)(1 - g)."""
    return 1 - cutoff_belief(game)


def analyze_responder(game: StageGame, f, r) -> ResponderAnalysis:
    """Exact myopic responder given weight r on a* and signal structure f.

    Ties at the cutoff belief go against b* (the unfavourable split).
    """
    f = _sig(f)
    a_s, b_s, _ = G.stackelberg(game)
    a_o = next(a for a in game.actions_p1 if a != a_s)
    r = as_number(r)
    p_cut = cutoff_belief(game)
    tau, post, plays = {}, {}, {}
    g = gc = 0
    for s in f.signals:
        ts = r * f.prob(s, a_s) + (1 - r) * f.prob(s, a_o)
        tau[s] = ts
        if ts == 0:
            continue
        post[s] = r * f.prob(s, a_s) / ts
        alpha = MixedAction({a_s: post[s], a_o: 1 - post[s]}) if 0 < post[s] < 1 else pure(a_s if post[s] == 1 else a_o)
        br = G.best_reply_p2(game, alpha)
        plays[s] = br == frozenset({b_s})
        if plays[s]:
            g += ts
            gc += f.prob(s, a_s)
    k = 1 + sum(plays.values())
    return ResponderAnalysis(g, gc, r, k, post, tau, responsiveness_constant(game), p_cut, plays)


def responder_bounds(analysis, f_star, C):
    """(upper bound on (1 - g_c)/(1 - g), lower bound on g_c/g).

    The lower bound is the one implied by the upper bound,
    g_c >= 1 - U (1 - g).
    """
    g = analysis.g if hasattr(analysis, "g") else as_number(analysis)
    f_star, C = as_number(f_star), as_number(C)
    if g == 1:
        raise DegenerateG("g = 1: both ratios are 1")
    upper = (1 - f_star) / (1 - f_star + C * f_star * (1 - g))
    lower = (1 - upper * (1 - g)) / g if g > 0 else float("inf")
    return upper, lower


def printed_ratio_bound(g, f_star, C):
    """The lower bound on g_c/g in its closed form with the r-bound substituted;
    kept for comparison (it can exceed 1/g, see the tests)."""
    den = g - f_star * (1 - C * (1 - g))
    return 1 + f_star * (1 - g) / den if den > 0 else float("inf")


def kl_floor(g, f_star, C):
    """2 gap^2 with gap = (1 - g)(1 - U) the total-variation distance on the
    event {b*} implied by the ratio bound U; of order (1 - g)^2."""
    g = as_number(g)
    if not 0 <= g <= 1:
        raise ValidationError("g must lie in [0,1]")
    if g == 1:
        return 0 * g
    upper, _ = responder_bounds(g, f_star, C)
    gap = (1 - g) * (1 - upper)
    return 2 * gap * gap


def rho_star(epsilon, pi0, C):
    e, p, C = as_number(epsilon), as_number(pi0), as_number(C)
    if C * e >= 1:
        raise DomainError(f"C * epsilon = {fmt(C * e)} >= 1")
    return e * p / (1 - C * e)


@dataclass(frozen=True)
class PayoffFloorInputs:
    epsilon: object
    pi0: object
    f_star: object
    C: object
    u_star: object
    u_min: object
    rho_star: object = None

    def __post_init__(self):
        if not 0 < as_number(self.epsilon) < 1:
            raise ValidationError("epsilon must lie in (0,1)")
        if not 0 < as_number(self.f_star) <= 1:
            raise ValidationError("f_star must lie in (0,1]")


def payoff_floor(x: PayoffFloorInputs):
    e, p = as_number(x.epsilon), as_number(x.pi0)
    bad = e + e * (1 - p) / (1 - p * e)
    return (1 - bad) * as_number(x.u_star) + bad * as_number(x.u_min) - e


# ---------------------------------------------------------------------------
# bounded signals: the low-payoff equilibrium

def q_hat(q_star, l_star):
    q, l = as_number(q_star), as_number(l_star)
    return q / (q + (1 - q) * l)


def build_theorem4_stmt2(game: StageGame, delta, pi0, K: int, f) -> PhaseAutomaton:
    """Low-payoff equilibrium when the signal is boundedly informative about a*.

    K >= 1: the bounded-memory construction with pooled building weight q-hat,
    so that no signal pushes the responder's posterior on a* above q*.
    K = 0: (a', b') at every history.
    """
    f = _sig(f)
    if len(game.actions_p1) != 2:
        raise ValidationError("this construction needs exactly two actions for player 1")
    c = G.derive_constants(game, max(K, 1))
    a_s, a_p, b_p = c.a_star, c.a_prime, c.b_prime
    ub, s = is_unboundedly_informative(f, a_s)
    if ub:
        raise UnboundedSignal(f"signal {s} reveals {a_s}; the low-payoff equilibrium does not apply")
    if a_p == a_s:
        st = simple_state("S", "maintenance", pure(a_s), pure(c.b_star), [Rule("*", "*", "S")])
        return PhaseAutomaton("signal_pooling", game, {"S": st}, "S", a_s, {"delta": delta}, None, K)
    l = likelihood_bound(f, a_s, a_p)
    qh = q_hat(c.q_star, l)
    if K == 0:
        st = simple_state("P", "punishment", pure(a_p), pure(b_p), [Rule("*", "*", "P")],
                          beliefs=(0, pi0))
        return PhaseAutomaton("signal_static", game, {"P": st}, "P", a_s,
                              {"delta": delta, "l_star": l, "q_hat": qh}, None, 0)
    bound = qh ** K
    if as_number(pi0) >= bound:
        raise PreconditionFail(f"pi0 = {fmt(as_number(pi0))} >= q_hat^K = {fmt(bound)}", bound=bound,
                               value=pi0)
    aut = build_theorem1(game, delta, pi0, K, mode="calibrated", q_used=qh)
    aut.params.update(l_star=l, q_hat=qh)
    return aut


def max_signal_posterior(pooled, f, a_star, a_prime):
    """Largest posterior on a* over signals when the prior weight is ``pooled``."""
    f = _sig(f)
    p = as_number(pooled)
    best = 0 * p
    for s in f.signals:
        num = p * f.prob(s, a_star)
        den = num + (1 - p) * f.prob(s, a_prime)
        if den > 0:
            best = max(best, num / den)
    return best


# ---------------------------------------------------------------------------
# three actions: responses uninformative about the type

@dataclass
class CounterexampleReport:
    alpha: MixedAction
    stage_payoffs: Dict[str, object]
    b_star_prob: Dict[str, object]
    policy: Dict[str, str]
    value: object
    p2_strict: Dict[str, bool]


def counterexample_2x3(pi, game: Optional[StageGame] = None, f=None) -> CounterexampleReport:
    """Strategic mix alpha(pi) making the pooled action 1/2 a*, 1/4 each other.

    The responder plays b* unless the signal is the one most likely under the
    lowest action; each type then meets b* with probability 2/3.
    """
    from .library import three_action_signal_game, uninformative_mlrp_failure
    game = game or three_action_signal_game()
    f = _sig(f or uninformative_mlrp_failure())
    pi = as_number(pi)
    if not 0 <= pi <= Fraction(1, 2):
        raise InfeasiblePi(f"pi = {fmt(pi)} > 1/2 leaves no feasible mix", bound=Fraction(1, 2), value=pi)
    a_hi, a_s, a_lo = game.order_p1
    b_s, b_p = game.order_p2
    half, quarter = Fraction(1, 2), Fraction(1, 4)
    target = {a_hi: quarter, a_s: half, a_lo: quarter}
    if pi == 1:
        raise InfeasiblePi("pi = 1")
    alpha = MixedAction({a: (target[a] - (pi if a == a_s else 0)) / (1 - pi) for a in target})
    # responder policy against the pooled mix
    policy, strict = {}, {}
    for s in f.signals:
        w = {a: target[a] * f.prob(s, a) for a in target}
        tot = sum(w.values())
        if tot == 0:
            policy[s] = b_s
            continue
        gain = sum(w[a] * (game.pay2(a, b_s) - game.pay2(a, b_p)) for a in w) / tot
        policy[s] = b_s if gain > 0 else b_p
        strict[s] = gain != 0
    pb = {a: sum(f.prob(s, a) for s in f.signals if policy[s] == b_s) for a in target}
    stage = {a: pb[a] * game.pay1(a, b_s) + (1 - pb[a]) * game.pay1(a, b_p) for a in target}
    b_commit = pb[a_s]
    b_strat = sum(alpha.prob(a) * pb[a] for a in target)
    value = sum(alpha.prob(a) * stage[a] for a in target)
    return CounterexampleReport(alpha, stage, {"commitment": b_commit, "strategic": b_strat},
                                policy, value, strict)


# ---------------------------------------------------------------------------
# divergence between equilibrium and commitment response distributions

def best_reply_policy(game: StageGame, f, alpha) -> Dict[str, str]:
    """Pure best reply after each signal; ties go to the lowest-ranked action."""
    f = _sig(f)
    alpha = alpha if isinstance(alpha, MixedAction) else MixedAction(alpha)
    order = game.order_p2 or game.actions_p2
    out = {}
    for s in f.signals:
        w = {a: alpha.prob(a) * f.prob(s, a) for a in alpha.support()}
        tot = sum(w.values())
        if tot == 0:
            continue
        post = MixedAction({a: v / tot for a, v in w.items() if v > 0})
        br = G.best_reply_p2(game, post)
        out[s] = [b for b in order if b in br][-1]
    return out


def response_distribution(game: StageGame, f, alpha, policy) -> np.ndarray:
    f = _sig(f)
    alpha = alpha if isinstance(alpha, MixedAction) else MixedAction(alpha)
    out = np.zeros(len(game.actions_p2))
    for a in alpha.support():
        for s in f.signals:
            p = float(alpha.prob(a)) * float(f.prob(s, a))
            if p == 0:
                continue
            rep = policy.get(s)
            if rep is None:
                continue
            if isinstance(rep, MixedAction):
                for b in rep.support():
                    out[game.i2(b)] += p * float(rep.prob(b))
            else:
                out[game.i2(rep)] += p
    return out


def _simplex_grid(n, step):
    m = int(round(1 / step))
    for c in itertools.product(range(m + 1), repeat=n - 1):
        if sum(c) <= m:
            yield np.array(list(c) + [m - sum(c)]) / m


def divergence_constant(game: StageGame, f, step: float = 0.01):
    """Grid estimate of min d(pi(alpha, beta) || pi(a*, beta)) / (1 - P(b*))^2
    over alpha with a* in the support and beta a best reply to alpha.

    Returns (C, witness alpha); C = 0 means some grid point has no divergence
    while b* is not certain.
    """
    f = _sig(f)
    a_s, b_s, _ = G.stackelberg(game)
    acts = game.actions_p1
    best, wit = float("inf"), None
    for w in _simplex_grid(len(acts), step):
        if w[acts.index(a_s)] == 0:
            continue
        alpha = MixedAction({a: float(x) for a, x in zip(acts, w) if x > 0})
        pol = best_reply_policy(game, f, alpha)
        p = response_distribution(game, f, alpha, pol)
        miss = 1 - p[game.i2(b_s)]
        if miss <= 1e-12:
            continue
        d = max(0.0, kl_divergence(p, response_distribution(game, f, pure(a_s), pol)))
        ratio = d / miss ** 2
        if ratio < best:
            best, wit = ratio, alpha
    return best, wit


@dataclass
class DivergenceCheck:
    ok: bool
    divergence: float
    b_star_prob: float
    threshold: float
    alpha: MixedAction


def divergence_gap_check(game: StageGame, f, alpha, responder_policy=None, epsilon=0.05,
                         C: Optional[float] = None, safety: float = 0.5) -> DivergenceCheck:
    """d(pi(alpha, beta) || pi(a*, beta)) > C eps^2 whenever P(b*) < 1 - eps.

    ``C`` defaults to ``safety`` times the grid estimate from
    ``divergence_constant``; a zero estimate fails every non-vacuous check.
    """
    f = _sig(f)
    alpha = alpha if isinstance(alpha, MixedAction) else MixedAction(alpha)
    a_s, b_s, _ = G.stackelberg(game)
    pol = responder_policy if responder_policy is not None else best_reply_policy(game, f, alpha)
    p = response_distribution(game, f, alpha, pol)
    pc = response_distribution(game, f, pure(a_s), pol)
    d = max(0.0, kl_divergence(p, pc))
    pb = float(p[game.i2(b_s)])
    if C is None:
        C = safety * max(0.0, divergence_constant(game, f)[0])
    thr = float(C) * float(epsilon) ** 2
    if pb >= 1 - float(epsilon):
        return DivergenceCheck(True, d, pb, thr, alpha)
    return DivergenceCheck(bool(d > thr), d, pb, thr, alpha)
