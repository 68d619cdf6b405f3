"""Posterior beliefs about the commitment type.

Odds-form Bayes updates, an exact forward filter for K-bounded public
histories generated by a phase automaton, and player 2's conditional
distribution over player 1's hidden action indicators under network sampling.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, Optional, Sequence

import numpy as np

from .errors import BothZero, CapExceeded, InconsistentHistory, ValidationError
from .games import MixedAction
from .numeric import all_exact, as_number

T_MAX = 20


@dataclass(frozen=True)
class TypeSpace:
    pi0: object
    commitment_action: str

    def __post_init__(self):
        p = as_number(self.pi0)
        if not 0 < p < 1:
            raise ValidationError("pi0 must lie strictly between 0 and 1")
        object.__setattr__(self, "pi0", p)


@dataclass(frozen=True)
class BeliefState:
    pi: object
    chi_dist: Optional[dict] = None

    def __post_init__(self):
        if not 0 <= self.pi <= 1:
            raise ValidationError(f"belief {self.pi} outside [0,1]")

    @property
    def odds(self):
        return self.pi / (1 - self.pi) if self.pi != 1 else float("inf")


def update_odds(prior, lik_commit, lik_strategic) -> BeliefState:
    """Posterior after an observation with the given likelihood under each type."""
    pi = prior.pi if isinstance(prior, BeliefState) else as_number(prior)
    lc, ls = as_number(lik_commit), as_number(lik_strategic)
    if lc < 0 or ls < 0:
        raise ValidationError("likelihoods must be nonnegative")
    if lc == 0 and ls == 0:
        raise BothZero("observation has probability zero under both types; "
                       "the construction must supply an off-path belief")
    if pi in (0, 1):
        return BeliefState(pi)
    if ls == 0:
        return BeliefState(type(pi)(1))
    if lc == 0:
        return BeliefState(type(pi)(0))
    odds = pi / (1 - pi) * (lc / ls)
    return BeliefState(odds / (1 + odds))


def calibrated_mix(target: MixedAction, a_star: str, pi) -> MixedAction:
    """Strategic mix alpha with (1 - pi) alpha + pi a* = target."""
    if pi == 0:
        return target
    w = {}
    for a, p in target.weights.items():
        v = (p - (pi if a == a_star else 0)) / (1 - pi)
        if v < 0:
            if v > -1e-13 and not isinstance(v, Fraction):
                v = 0.0
            else:
                raise ValidationError(f"belief {pi} too high to calibrate {target}")
        w[a] = v
    if a_star not in w:
        raise ValidationError(f"belief {pi} too high to calibrate {target}")
    return MixedAction(w)


# ---------------------------------------------------------------------------
# exact filter over K-bounded public histories

class PublicFilter:
    """Forward filter for player 2's belief under a K-memory phase automaton.

    Hidden state: (type, automaton state, window of player 1's last K actions).
    Past public draws are integrated out; only b's and the visible window are
    conditioned on.
    """

    def __init__(self, automaton, pi0, exact: Optional[bool] = None):
        self.aut = automaton
        self.K = automaton.K
        pi0 = as_number(pi0)
        if exact is None:
            exact = isinstance(pi0, Fraction) and automaton._numbers_exact(Fraction(1, 2))
        self.exact = exact
        if not exact:
            pi0 = float(pi0)
        self.mass = {("c", automaton.initial, ()): pi0, ("s", automaton.initial, ()): 1 - pi0}
        self.t = 0

    def belief_by_window(self):
        tot: Dict[tuple, list] = {}
        for (typ, _, w), m in self.mass.items():
            acc = tot.setdefault(w, [0, 0])
            acc[0 if typ == "c" else 1] += m
        return {w: (c / (c + s) if c + s > 0 else None) for w, (c, s) in tot.items()}

    def belief(self, window=None):
        c = s = 0
        for (typ, _, w), m in self.mass.items():
            if window is not None and w != tuple(window):
                continue
            if typ == "c":
                c += m
            else:
                s += m
        if c + s == 0:
            return None
        return c / (c + s)

    def step(self, b_obs=None, a_obs=None):
        aut = self.aut
        bel = self.belief_by_window()
        new: Dict[tuple, object] = {}
        for (typ, st_name, w), m in self.mass.items():
            if m == 0:
                continue
            st = aut.states[st_name]
            for br, pb in zip(st.branches, aut.branch_probs(st)):
                if pb == 0:
                    continue
                if typ == "c":
                    p1 = MixedAction.pure(aut.a_star)
                elif br.calibrated:
                    pi = bel.get(w) or 0
                    p1 = calibrated_mix(br.p1, aut.a_star, pi if self.exact else float(pi))
                else:
                    p1 = br.p1
                for a in p1.support():
                    if a_obs is not None and a != a_obs:
                        continue
                    for b in br.p2.support():
                        if b_obs is not None and b != b_obs:
                            continue
                        wt = m * pb * p1.prob(a) * br.p2.prob(b)
                        if not self.exact:
                            wt = float(wt)
                        nw = (w + (a,))[-self.K:] if self.K > 0 else ()
                        key = (typ, br.next_state(a, b), nw)
                        new[key] = new.get(key, 0) + wt
        self.mass = new
        self.t += 1
        # keep floats well scaled on long runs
        if not self.exact:
            tot = sum(new.values())
            if tot > 0:
                self.mass = {k: v / tot for k, v in new.items()}


def reputation_after_public_K(automaton, pi0, b_history: Sequence[str], window: Sequence[str]) -> BeliefState:
    """Player 2's belief after observing b_0..b_{t-1} and a_{t-K}..a_{t-1}."""
    t = len(b_history)
    K = automaton.K
    if len(window) != min(t, K):
        raise ValidationError(f"window must hold the last {min(t, K)} actions")
    exact = isinstance(as_number(pi0), Fraction) and t <= 60
    f = PublicFilter(automaton, pi0, exact=exact)
    for s, b in enumerate(b_history):
        a_obs = window[s - (t - len(window))] if s >= t - len(window) else None
        f.step(b, a_obs)
    pi = f.belief()
    if pi is None:
        raise InconsistentHistory("history has probability zero under both types")
    return BeliefState(pi)


def building_belief_table(automaton, pi0, b_building: str, horizon: int):
    """pi_t on the building path: b-history all ``b_building`` and the last
    min(t, K) actions all a*.  Entry t is the belief at the start of period t."""
    f = PublicFilter(automaton, pi0, exact=False)
    K = automaton.K
    a_s = automaton.a_star
    out = np.zeros(horizon + 1)
    for t in range(horizon + 1):
        w = (a_s,) * min(t, K)
        pi = f.belief(w)
        out[t] = 0.0 if pi is None else pi
        if t < horizon:
            f.step(b_building, None)
            # drop hidden states that already left the building phase
            f.mass = {k: v for k, v in f.mass.items()
                      if automaton.states[k[1]].belief_source == "table"}
    return out


# ---------------------------------------------------------------------------
# hidden action indicators under network sampling

def chi_posterior(q_fn: Callable[[tuple], object], t: int, sampled: Dict[int, int],
                  b_lik: Optional[Callable[[tuple], object]] = None):
    """Distribution over chi = (chi_0..chi_{t-1}) for the strategic type.

    ``q_fn(prefix)`` is the probability of a* (chi = 1) given earlier indicators;
    ``sampled`` maps observed periods to their indicator; ``b_lik(chi)`` is an
    optional likelihood of the observed b-history given chi.
    Returns a dict from chi tuples to probabilities (zero paths pruned).
    """
    if t > T_MAX:
        raise CapExceeded(f"t = {t} exceeds the enumeration cap T_max = {T_MAX}")
    for s in sampled:
        if not 0 <= s < t:
            raise ValidationError(f"sampled period {s} outside 0..{t - 1}")
    paths = {(): Fraction(1)}
    for s in range(t):
        nxt = {}
        for pre, m in paths.items():
            q = as_number(q_fn(pre))
            for x, p in ((1, q), (0, 1 - q)):
                if s in sampled and sampled[s] != x:
                    continue
                if p == 0:
                    continue
                nxt[pre + (x,)] = m * p
        paths = nxt
    if b_lik is not None:
        paths = {k: v * b_lik(k) for k, v in paths.items()}
        paths = {k: v for k, v in paths.items() if v != 0}
    tot = sum(paths.values())
    if tot == 0:
        raise InconsistentHistory("sampled indicators impossible under the strategy")
    return {k: v / tot for k, v in paths.items()}


def chi_marginals(dist, t):
    return [sum(p for k, p in dist.items() if k[s] == 1) for s in range(t)]


def hypothetical_observer(pi0, q_seq: Sequence, chi: Sequence[int]):
    """Belief of an observer who sees every past action: odds times 1/q per a*,
    and zero after any non-a*."""
    pi = as_number(pi0)
    for q, x in zip(q_seq, chi):
        if x == 0:
            return type(pi)(0)
        pi = update_odds(BeliefState(pi), 1, q).pi
    return pi
