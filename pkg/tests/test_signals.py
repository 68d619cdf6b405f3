from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from reputation_lab import games as G
from reputation_lab.errors import (DegenerateG, DomainError, InfeasiblePi, PreconditionFail, UnboundedSignal,
                                   ValidationError)
from reputation_lab.games import MixedAction
from reputation_lab.library import bounded_mlrp_example, three_action_signal_game, uninformative_mlrp_failure
from reputation_lab.signals import (PayoffFloorInputs, SignalStructure, analyze_responder, build_theorem4_stmt2,
                                    check_mlrp, counterexample_2x3, divergence_constant, divergence_gap_check,
                                    is_unboundedly_informative, kl_floor, likelihood_bound, max_signal_posterior,
                                    mlrp_orders, payoff_floor, printed_ratio_bound, q_hat, responder_bounds,
                                    rho_star)
from reputation_lab.verification import one_shot_deviation_check

from conftest import random_msm_game

ORDER = ("high", "star", "low")
NOISY = (("s1", "s2"), {"H": {"s1": F(2, 3), "s2": F(1, 3)}, "L": {"s1": F(1, 3), "s2": F(2, 3)}})
REVEAL = (("s1", "s2"), {"H": {"s1": F(2, 3), "s2": F(1, 3)}, "L": {"s2": F(1)}})


def test_signal_structure_validation():
    with pytest.raises(ValidationError):
        SignalStructure(("x", "y"), {"a": {"x": 0.5, "y": 0.4}})
    with pytest.raises(ValidationError):
        SignalStructure(("x",), {"a": {"z": 1}})
    with pytest.raises(ValidationError):
        SignalStructure(("x", "y"), {"a": {"x": 1}}, order=("x",))


def test_unbounded_verdicts():
    assert is_unboundedly_informative(uninformative_mlrp_failure(), "star") == (True, "s_star")
    assert is_unboundedly_informative(bounded_mlrp_example(), "star") == (False, None)
    assert is_unboundedly_informative(REVEAL, "H") == (True, "s1")


def test_mlrp_verdicts():
    assert not check_mlrp(uninformative_mlrp_failure(), ORDER)
    assert mlrp_orders(uninformative_mlrp_failure(), ORDER) == []
    assert check_mlrp(bounded_mlrp_example(), ORDER)
    assert mlrp_orders(bounded_mlrp_example(), ORDER) == [("s_hi", "s_star", "s_lo")]
    assert not check_mlrp(bounded_mlrp_example(), ORDER, ("s_lo", "s_star", "s_hi"))


def test_likelihood_bound():
    assert likelihood_bound(NOISY, "H", "L") == 2
    with pytest.raises(UnboundedSignal):
        likelihood_bound(REVEAL, "H", "L")


def test_responder_pcg(pcg):
    an = analyze_responder(pcg, REVEAL, F(3, 5))
    assert (an.g, an.g_commit) == (F(2, 5), F(2, 3))
    assert an.p_star_belief == F(1, 2) and an.C == F(1, 2)
    assert an.plays_b_star == {"s1": True, "s2": False}


def test_responder_bounds_values():
    assert responder_bounds(F(3, 5), F(2, 3), 1) == (F(5, 9), F(35, 27))
    with pytest.raises(DegenerateG):
        responder_bounds(F(1), F(2, 3), 1)


def test_responder_bounds_brute_force(pcg):
    rng = np.random.default_rng(0)
    checked = 0
    for _ in range(3000):
        fs = F(int(rng.integers(1, 20)), 20)
        x = F(int(rng.integers(0, 21)), 20)
        y = F(int(rng.integers(0, 11)), 10)
        f = (("s1", "s2", "s3"), {"H": {"s1": fs, "s2": (1 - fs) * x, "s3": (1 - fs) * (1 - x)},
                                  "L": {"s2": y, "s3": 1 - y}})
        an = analyze_responder(pcg, f, F(int(rng.integers(1, 100)), 100))
        if an.g in (0, 1):
            continue
        upper, lower = responder_bounds(an, fs, an.C)
        assert (1 - an.g_commit) / (1 - an.g) <= upper
        assert an.g_commit / an.g >= lower
        checked += 1
    assert checked > 1000


def test_printed_ratio_bound_can_exceed_one_over_g(pcg):
    an = analyze_responder(pcg, REVEAL, F(3, 5))
    printed = printed_ratio_bound(an.g, F(2, 3), an.C)
    # a ratio above 1/g would force g_c > 1
    assert printed > 1 / an.g
    _, lower = responder_bounds(an, F(2, 3), an.C)
    assert lower <= an.g_commit / an.g <= 1 / an.g


def test_kl_floor():
    assert kl_floor(F(3, 5), F(2, 3), 1) == F(128, 2025)
    assert kl_floor(F(1), F(2, 3), 1) == 0


@settings(max_examples=100, deadline=None)
@given(st.fractions(F(0), F(99, 100)), st.fractions(F(1, 100), F(1, 50)))
def test_kl_floor_decreasing_in_g(g, step):
    assert kl_floor(min(g + step, F(1)), F(1, 2), F(1, 2)) <= kl_floor(g, F(1, 2), F(1, 2))


def test_rho_star_and_payoff_floor():
    assert rho_star(F(1, 10), F(1, 5), 1) == F(1, 45)
    with pytest.raises(DomainError):
        rho_star(F(1, 2), F(1, 5), 2)
    x = PayoffFloorInputs(F(1, 10), F(1, 5), F(2, 3), 1, 2, 0)
    # bad = e + e (1 - p)/(1 - p e) = 1/10 + 8/98
    bad = F(1, 10) + F(1, 10) * F(4, 5) / F(49, 50)
    assert payoff_floor(x) == (1 - bad) * 2 - F(1, 10)
    with pytest.raises(ValidationError):
        PayoffFloorInputs(0, F(1, 5), F(2, 3), 1, 2, 0)


def test_q_hat():
    assert q_hat(F(1, 2), 2) == F(1, 3)
    assert q_hat(F(1, 2), 1) == F(1, 2)


@settings(max_examples=100, deadline=None)
@given(st.fractions(F(1, 20), F(19, 20)), st.fractions(F(1), F(20)))
def test_q_hat_caps_posterior(q, l):
    # the highest-likelihood signal moves q-hat exactly to q*
    qh = q_hat(q, l)
    assert qh <= q
    assert qh * l / (qh * l + (1 - qh)) == q


def test_bounded_signal_equilibrium(pcg):
    aut = build_theorem4_stmt2(pcg, F(9, 10), F(1, 20), 1, NOISY)
    assert aut.params["q_hat"] == F(1, 3)
    assert aut.values(F(9, 10))[aut.initial] == 0
    assert one_shot_deviation_check(aut, pcg, F(9, 10)).max_violation <= 1e-9
    assert max_signal_posterior(aut.params["q_hat"], NOISY, "H", "L") == F(1, 2)


def test_bounded_signal_static(pcg):
    aut = build_theorem4_stmt2(pcg, F(9, 10), F(1, 20), 0, NOISY)
    assert aut.values(F(9, 10))[aut.initial] == 0


def test_bounded_signal_rejections(pcg):
    with pytest.raises(UnboundedSignal):
        build_theorem4_stmt2(pcg, F(9, 10), F(1, 20), 1, REVEAL)
    with pytest.raises(PreconditionFail):
        build_theorem4_stmt2(pcg, F(9, 10), F(2, 5), 1, NOISY)


def test_counterexample():
    rep = counterexample_2x3(0)
    assert rep.alpha == MixedAction({"high": F(1, 4), "star": F(1, 2), "low": F(1, 4)})
    assert rep.value == 1
    assert rep.b_star_prob == {"commitment": F(2, 3), "strategic": F(2, 3)}
    assert set(rep.stage_payoffs.values()) == {1}
    assert all(rep.p2_strict.values())


def test_counterexample_prior():
    rep = counterexample_2x3(F(1, 5))
    assert rep.alpha == MixedAction({"high": F(5, 16), "star": F(3, 8), "low": F(5, 16)})
    assert rep.b_star_prob["strategic"] == F(2, 3)
    with pytest.raises(InfeasiblePi):
        counterexample_2x3(F(3, 5))


def test_divergence_witness_on_counterexample():
    game, f = three_action_signal_game(), uninformative_mlrp_failure()
    C, wit = divergence_constant(game, f, step=0.05)
    assert C == 0
    rep = divergence_gap_check(game, f, counterexample_2x3(0).alpha)
    assert not rep.ok
    assert rep.divergence == 0 and rep.b_star_prob == pytest.approx(2 / 3)


def random_mlrp_signal(rng, game):
    """Exponential-family rows (MLRP on the action order) plus a signal only a* sends."""
    a_s = G.stackelberg(game)[0]
    n_s = int(rng.integers(2, 4))
    theta = np.sort(rng.uniform(-2, 2, len(game.order_p1)))[::-1]
    x = np.sort(rng.uniform(-1, 1, n_s))[::-1]
    rows = {}
    for a, th in zip(game.order_p1, theta):
        w = np.exp(th * x)
        rows[a] = {f"s{j}": float(v) for j, v in enumerate(w / w.sum())}
    e = float(rng.uniform(0.05, 0.5))
    rows[a_s] = {k: (1 - e) * v for k, v in rows[a_s].items()}
    rows[a_s]["top"] = e
    return SignalStructure(("top",) + tuple(f"s{j}" for j in range(n_s)), rows)


def random_divergence_instances(n, seed):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        g = random_msm_game(rng)
        f = random_mlrp_signal(rng, g)
        # a* below the top action makes the revealing signal break MLRP
        if not check_mlrp(f, g.order_p1, f.signals):
            continue
        w = rng.dirichlet(np.ones(len(g.actions_p1)))
        out.append((g, f, MixedAction({a: float(v) for a, v in zip(g.actions_p1, w)})))
    return out


def test_divergence_random_instances():
    for g, f, alpha in random_divergence_instances(60, seed=1):
        assert is_unboundedly_informative(f, G.stackelberg(g)[0])[0]
        C, _ = divergence_constant(g, f, step=0.05)
        assert C > 0
        assert divergence_gap_check(g, f, alpha, epsilon=0.05, C=0.5 * C).ok
