"""Bounded-memory equilibrium constructions.

Each builder returns a ``PhaseAutomaton``.  The strategic type's continuation
values are solved exactly from the automaton itself; the helpers here only pick
the transition probabilities and mixing weights that make the prescribed
actions optimal.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Optional

from . import games as G
from .automaton import Branch, PhaseAutomaton, Rule, State, pure, simple_state
from .beliefs import building_belief_table
from .errors import Condition3Missing, DeltaTooLow, PreconditionFail, ValidationError
from .games import MixedAction, StageGame
from .numeric import as_number, fmt, truncation_horizon

TABLE_CAP = 50_000


def _check_delta(delta):
    d = as_number(delta)
    if not 0 < d < 1:
        raise ValidationError("delta must lie in (0,1)")
    return d


def entry_probability(game: StageGame, delta, a_lo, b_lo, a_hi=None, b_hi=None):
    """Probability of moving to (a*, b*) after a* that makes a* and a_lo
    equally good when the building phase plays b_lo and is worth u1(a_lo, b_lo)."""
    delta = _check_delta(delta)
    a_s, b_s, u_star = G.stackelberg(game)
    v = game.pay1(a_lo, b_lo)
    num = (1 - delta) * (v - game.pay1(a_s, b_lo))
    den = delta * (u_star - v)
    if den <= 0:
        raise ValidationError("u1(a*,b*) must exceed the building-phase value")
    return num / den


def solve_r(game: StageGame, delta):
    """Entry probability r for the three-phase construction."""
    d = _check_delta(delta)
    c = G.derive_constants(game)
    if c.b_prime == c.b_star:
        raise ValidationError("b' equals b*: no reputation-building phase")
    if d <= c.delta_low:
        raise DeltaTooLow(f"delta = {fmt(d)} <= delta_low = {fmt(c.delta_low)}",
                          bound=c.delta_low, value=d)
    r = entry_probability(game, d, c.a_prime, c.b_prime)
    if not 0 < r < 1:
        raise DeltaTooLow(f"r = {fmt(r)} outside (0,1) at delta = {fmt(d)}",
                          bound=c.delta_low, value=d)
    return r


def _table(aut: PhaseAutomaton, pi0, b_building, delta):
    H = min(max(truncation_horizon(delta), 50 * (aut.K + 1)), TABLE_CAP)
    return building_belief_table(aut, pi0, b_building, H)


def _three_phase(game, a_lo, b_lo, r, p1_build: MixedAction, calibrated, name, K, params):
    a_s, b_s, _ = G.stackelberg(game)
    back = [Rule(a_s, "*", "B1"), Rule("*", "*", "B0")]
    maint = [Rule(a_s, "*", "M"), Rule("*", "*", "Mx")]
    states = {
        "B0": State("B0", "building",
                    (Branch(Fraction(1), p1_build, pure(b_lo), tuple(back), calibrated),),
                    belief_source="table"),
        "B1": State("B1", "building",
                    (Branch(r, pure(a_s), pure(b_s), tuple(maint)),
                     Branch(Fraction(1) if isinstance(r, Fraction) else 1.0,
                            p1_build, pure(b_lo), tuple(back), calibrated)),
                    belief_source="table"),
        "M": simple_state("M", "maintenance", pure(a_s), pure(b_s), maint),
        "Mx": simple_state("Mx", "maintenance", pure(a_lo), pure(b_lo), [Rule("*", "*", "P")],
                           beliefs=(0,), offpath_belief=Fraction(0), belief_source="fixed"),
        "P": simple_state("P", "punishment", pure(a_lo), pure(b_lo), [Rule("*", "*", "P")],
                          beliefs=(0,), offpath_belief=Fraction(0), belief_source="fixed"),
    }
    return PhaseAutomaton(name, game, states, "B0", a_s, params, None, K)


def _attach_beliefs(aut: PhaseAutomaton, pi0, b_lo, delta):
    table = _table(aut, pi0, b_lo, delta)
    aut.belief_table = table
    pi_max = float(table.max())
    for n in ("B0", "B1"):
        aut.states[n].beliefs = (0, pi_max)
    aut.params["pi_max"] = pi_max
    return pi_max


def build_theorem1(game: StageGame, delta, pi0, K: int = 1, mode: str = "half",
                   q_used=None) -> PhaseAutomaton:
    """Three-phase equilibrium holding the strategic type to u1(a', b').

    ``mode="half"``: the strategic type plays a* with probability q*/2 in the
    building phase (needs pi0 < pi0_bar).  ``mode="calibrated"``: its weight on
    a* depends on player 2's belief so the pooled weight is exactly q*; this
    only needs the belief to stay below q*, which is checked on the exact
    building-path belief sequence.
    """
    d = _check_delta(delta)
    pi0 = as_number(pi0)
    if not 0 < pi0 < 1:
        raise ValidationError("pi0 must lie in (0,1)")
    if K < 1:
        raise ValidationError("K must be at least 1")
    c = G.derive_constants(game, K)
    a_s, b_s = c.a_star, c.b_star
    if c.b_prime == b_s:
        st = simple_state("S", "maintenance", pure(a_s), pure(b_s), [Rule("*", "*", "S")])
        return PhaseAutomaton("theorem1_pooling", game, {"S": st}, "S", a_s,
                              {"delta": d, "pi0": pi0, "K": K}, None, K)
    r = solve_r(game, d)
    q = c.q_star if q_used is None else as_number(q_used)
    params = {"delta": d, "pi0": pi0, "K": K, "r": r, "q_star": c.q_star, "mode": mode,
              "a_prime": c.a_prime, "b_prime": c.b_prime}
    if mode == "half":
        if pi0 >= c.pi0_bar:
            raise PreconditionFail(f"pi0 = {fmt(pi0)} >= pi0_bar = {fmt(c.pi0_bar)}",
                                   bound=c.pi0_bar, value=pi0)
        q_mix = q / 2
        params["q_mix"] = q_mix
        aut = _three_phase(game, c.a_prime, c.b_prime, r, MixedAction.mix(a_s, c.a_prime, q_mix),
                           False, "theorem1", K, params)
        pi_max = _attach_beliefs(aut, pi0, c.b_prime, d)
        # player 2 keeps b' while pi + (1 - pi) q/2 <= q
        bound = q / (2 - q)
        if pi_max > float(bound) + 1e-12:
            raise PreconditionFail(f"building belief {pi_max:.6g} exceeds q*/(2-q*) = {fmt(bound)}",
                                   bound=bound, value=pi_max)
        return aut
    if mode == "calibrated":
        if pi0 >= q:
            raise PreconditionFail(f"pi0 = {fmt(pi0)} >= q* = {fmt(q)}", bound=q, value=pi0)
        params["q_mix"] = q
        aut = _three_phase(game, c.a_prime, c.b_prime, r, MixedAction.mix(a_s, c.a_prime, q),
                           True, "theorem1_calibrated", K, params)
        try:
            pi_max = _attach_beliefs(aut, pi0, c.b_prime, d)
        except ValidationError as exc:
            raise PreconditionFail(f"building belief reaches q* = {fmt(q)}: {exc}", bound=q) from exc
        if pi_max >= float(q):
            raise PreconditionFail(f"building belief {pi_max:.6g} reaches q* = {fmt(q)}",
                                   bound=q, value=pi_max)
        return aut
    raise ValidationError(f"unknown mode {mode!r}")


# ---------------------------------------------------------------------------
# welfare calibration

def welfare_r(game: StageGame, delta):
    d = _check_delta(delta)
    c = G.derive_constants(game)
    a2, b2 = c.worst_ne_p2
    if d <= c.delta_low_prime:
        raise DeltaTooLow(f"delta = {fmt(d)} <= delta_low' = {fmt(c.delta_low_prime)}",
                          bound=c.delta_low_prime, value=d)
    return entry_probability(game, d, a2, b2)


def welfare_V2(game: StageGame, delta, delta_s, q_star_used=None):
    """Player 2 welfare in the building phase of the calibrated construction."""
    c = G.derive_constants(game)
    a2, b2 = c.worst_ne_p2
    ds = as_number(delta_s)
    if (a2, b2) == (c.a_star, c.b_star):
        return game.pay2(a2, b2)
    r = welfare_r(game, delta)
    q = c.q_star if q_star_used is None else as_number(q_star_used)
    a_s, b_s = c.a_star, c.b_star
    rhs = ds * q * r * game.pay2(a_s, b_s) + (1 - ds) * (q * game.pay2(a_s, b2) + (1 - q) * game.pay2(a2, b2))
    lhs = 1 - ds * (1 - q) - ds * q * (1 - r)
    return rhs / lhs


def build_welfare(game: StageGame, delta, pi0, K: int = 1, q_used=None) -> PhaseAutomaton:
    """Three-phase construction around player 2's worst equilibrium, with the
    pooled weight on a* calibrated to ``q_used`` in every building period."""
    d = _check_delta(delta)
    pi0 = as_number(pi0)
    c = G.derive_constants(game, K)
    a2, b2 = c.worst_ne_p2
    q = c.q_star if q_used is None else as_number(q_used)
    if not 0 < q <= c.q_star:
        raise ValidationError("q_used must lie in (0, q*]")
    if pi0 >= q:
        raise PreconditionFail(f"pi0 = {fmt(pi0)} >= q = {fmt(q)}", bound=q, value=pi0)
    r = welfare_r(game, d)
    params = {"delta": d, "pi0": pi0, "K": K, "r": r, "q_mix": q, "mode": "calibrated",
              "a_prime": a2, "b_prime": b2}
    aut = _three_phase(game, a2, b2, r, MixedAction.mix(c.a_star, a2, q), True, "welfare", K, params)
    pi_max = _attach_beliefs(aut, pi0, b2, d)
    if pi_max >= float(q):
        raise PreconditionFail(f"building belief {pi_max:.6g} reaches q = {fmt(q)}", bound=q, value=pi_max)
    return aut


# ---------------------------------------------------------------------------
# minmax construction

def minmax_entry_probabilities(game: StageGame, delta, beta: MixedAction):
    """r(a) making every action worth max_a u1(a, beta) in the building phase."""
    d = _check_delta(delta)
    a_s, b_s, u_star = G.stackelberg(game)
    ub = {a: game.expected_u1(MixedAction.pure(a), beta) for a in game.actions_p1}
    top = max(ub.values())
    if u_star <= top:
        raise ValidationError("u1(a*,b*) must exceed the minmax payoff")
    return {a: (1 - d) * (top - ub[a]) / (d * (u_star - top)) for a in game.actions_p1}


def build_theorem1prime(game: StageGame, delta, pi0, K: int = 1) -> PhaseAutomaton:
    """Construction holding the strategic type to the minmax payoff."""
    d = _check_delta(delta)
    pi0 = as_number(pi0)
    if K < 1:
        raise ValidationError("K must be at least 1")
    a_s, b_s, u_star = G.stackelberg(game)
    v_min = G.minmax_p1(game)
    if u_star == v_min:
        st = simple_state("S", "maintenance", pure(a_s), pure(b_s), [Rule("*", "*", "S")])
        return PhaseAutomaton("theorem1prime_pooling", game, {"S": st}, "S", a_s,
                              {"delta": d, "pi0": pi0, "K": K}, None, K)
    w = G.condition3_witness(game)
    if w is None:
        raise Condition3Missing("no minmax action satisfies the three requirements")
    alpha, beta = w
    if len(beta.support()) != 1:
        raise PreconditionFail("building-phase belief tracking needs a pure minmax action",
                               bound="pure beta")
    b_build = beta.support()[0]
    q = alpha.prob(a_s)
    pbar = G.pi0_bar(q, K) if q < 1 else Fraction(1, 2)
    if pi0 >= pbar:
        raise PreconditionFail(f"pi0 = {fmt(pi0)} >= pi0_bar = {fmt(pbar)}", bound=pbar, value=pi0)
    r = minmax_entry_probabilities(game, d, beta)
    bad = {a: x for a, x in r.items() if not 0 <= x < 1}
    if bad:
        a, x = next(iter(bad.items()))
        raise DeltaTooLow(f"r({a}) = {fmt(x)} outside [0,1) at delta = {fmt(d)}", value=d)
    top = max(game.pay1(a, b_s) for a in game.actions_p1)
    if (1 - d) * top + d * v_min > u_star:
        lo = (top - u_star) / (top - v_min)
        raise DeltaTooLow(f"maintenance needs delta >= {fmt(lo)}", bound=lo, value=d)

    one = Fraction(1) if isinstance(d, Fraction) else 1.0
    to_b = [Rule(a, "*", f"B_{a}") for a in game.actions_p1]
    to_pb = [Rule(a, "*", f"PB_{a}") for a in game.actions_p1]
    maint = [Rule(a_s, "*", "M"), Rule("*", "*", "Mx")]
    states = {
        "B_start": State("B_start", "building",
                         (Branch(one, alpha, beta, tuple(to_b), True),), belief_source="table"),
        "M": simple_state("M", "maintenance", pure(a_s), pure(b_s), maint),
        "Mx": simple_state("Mx", "maintenance", alpha, beta, to_pb, beliefs=(0,),
                           offpath_belief=Fraction(0), belief_source="fixed"),
    }
    for a in game.actions_p1:
        for pre, cal, rules, src in (("B", True, to_b, "table"), ("PB", False, to_pb, "fixed")):
            brs = []
            if r[a] > 0:
                brs.append(Branch(r[a], pure(a_s), pure(b_s), tuple(maint)))
            brs.append(Branch(one, alpha, beta, tuple(rules), cal))
            phase = "building" if pre == "B" else "punishment"
            kw = {} if pre == "B" else {"beliefs": (0,), "offpath_belief": Fraction(0)}
            states[f"{pre}_{a}"] = State(f"{pre}_{a}", phase, tuple(brs), belief_source=src, **kw)
    params = {"delta": d, "pi0": pi0, "K": K, "q_mix": q, "beta": b_build,
              **{f"r_{a}": x for a, x in r.items()}}
    aut = PhaseAutomaton("theorem1prime", game, states, "B_start", a_s, params, None, K)
    try:
        table = _table(aut, pi0, b_build, d)
    except ValidationError as exc:
        raise PreconditionFail(f"building belief reaches q = {fmt(q)}: {exc}", bound=q) from exc
    aut.belief_table = table
    pi_max = float(table.max())
    if pi_max >= float(q):
        raise PreconditionFail(f"building belief {pi_max:.6g} reaches q = {fmt(q)}", bound=q, value=pi_max)
    for s in aut.states.values():
        if s.belief_source == "table":
            s.beliefs = (0, pi_max)
    aut.params["pi_max"] = pi_max
    return aut


# ---------------------------------------------------------------------------
# cyclic construction showing the imitation bound is tight

def prop3_delta_bound(game: StageGame, delta, K: int):
    """Per-step total-variation slack that keeps a lower action strictly better."""
    d = _check_delta(delta)
    if K < 1:
        raise ValidationError("K must be at least 1")
    order = game.order_p1 or G._infer_orders(game)[0]
    a_s, _, _ = G.stackelberg(game)
    lower = order[order.index(a_s) + 1:]
    if not lower:
        raise ValidationError("a* is the lowest action; no a below a*")
    # the gap is linear in beta, so its minimum over the simplex is at a pure b
    gap = min(game.pay1(a, b) - game.pay1(a_s, b) for a in lower for b in game.actions_p2)
    span = max(game.U1.ravel()) - min(game.U1.ravel())
    if game.exact:
        span = max(game.pay1(a, b) for a in game.actions_p1 for b in game.actions_p2) - \
            min(game.pay1(a, b) for a in game.actions_p1 for b in game.actions_p2)
    return (1 - d) / (2 * K * d * span) * gap


def imitation_bound(game: StageGame, K: int):
    """K/(K+1) u1(a*,b*) + 1/(K+1) u1(a*,b')."""
    c = G.derive_constants(game, K)
    return (K * c.u_star + game.pay1(c.a_star, c.b_prime)) / (K + 1)


def _prop3_automaton(game, K, delta, pi0):
    c = G.derive_constants(game, K)
    a_s, b_s, a_p, b_p = c.a_star, c.b_star, c.a_prime, c.b_prime
    n = K + 1
    half = Fraction(1, 2)
    states = {}
    states["N0"] = simple_state("N0", "cycle", pure(a_p), pure(b_p),
                                [Rule(a_p, "*", "N1"), Rule(a_s, "*", "N1"), Rule("*", "*", "P")],
                                beliefs=(0, pi0))
    for k in range(1, n):
        nxt = (k + 1) % n
        fail = "D0" if nxt == 0 else "P"
        states[f"N{k}"] = simple_state(f"N{k}", "cycle", pure(a_s), pure(b_s),
                                       [Rule(a_s, "*", f"N{nxt}"), Rule("*", "*", fail)])
    states["D0"] = simple_state("D0", "forgiveness", pure(a_s), pure(b_s),
                                [Rule(a_s, "*", "F"), Rule("*", "*", "P")],
                                beliefs=(0,), offpath_belief=Fraction(0), belief_source="fixed")
    n1 = states["N1"].branches[0]
    states["F"] = State("F", "forgiveness",
                        (Branch(half, pure(a_p), pure(b_p), (Rule("*", "*", "P"),)),
                         Branch(Fraction(1), n1.p1, n1.p2, n1.rules)),
                        beliefs=(0,), offpath_belief=Fraction(0), belief_source="fixed")
    states["P"] = simple_state("P", "punishment", pure(a_p), pure(b_p), [Rule("*", "*", "P")],
                               beliefs=(0,), offpath_belief=Fraction(0), belief_source="fixed")
    params = {"delta": delta, "pi0": pi0, "K": K, "cycle": n}
    return PhaseAutomaton("prop3_tight", game, states, "N0", a_s, params, None, K)


def prop3_min_delta(game: StageGame, K: int, tol: float = 1e-6):
    """Smallest delta (to ``tol``) at which the cyclic construction passes the
    one-shot deviation check, by bisection on the maximal violation."""
    from .verification import one_shot_deviation_check

    def ok(d):
        aut = _prop3_automaton(game, K, d, Fraction(0))
        return one_shot_deviation_check(aut, game, d).max_violation <= 1e-12

    lo, hi = 1e-6, 1 - 1e-9
    if not ok(hi):
        raise PreconditionFail("construction fails even for delta near 1")
    while hi - lo > tol:
        mid = (lo + hi) / 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


def build_prop3_tight(game: StageGame, K: int, delta, pi0) -> PhaseAutomaton:
    d = _check_delta(delta)
    pi0 = as_number(pi0)
    if K < 1:
        raise ValidationError("K must be at least 1")
    if not G.is_monotone_supermodular(game):
        raise PreconditionFail("payoffs are not monotone-supermodular", bound="MSM")
    c = G.derive_constants(game, K)
    # b' must stay a best reply at N0 where the pooled action is pi a* + (1 - pi) a'
    if pi0 >= c.q_star:
        raise PreconditionFail(f"pi0 = {fmt(pi0)} >= {fmt(c.q_star)}", bound=c.q_star, value=pi0)
    d_min = prop3_min_delta(game, K)
    if float(d) < d_min:
        raise DeltaTooLow(f"delta = {fmt(d)} below the construction cutoff {d_min:.6f}",
                          bound=d_min, value=d)
    aut = _prop3_automaton(game, K, d, pi0)
    aut.params["delta_min"] = d_min
    return aut
