from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from reputation_lab.bounded_memory import (build_prop3_tight, build_theorem1, build_theorem1prime, build_welfare,
                                           imitation_bound, prop3_delta_bound, solve_r, welfare_V2)
from reputation_lab.errors import Condition3Missing, DeltaTooLow, PreconditionFail
from reputation_lab.games import StageGame
from reputation_lab.verification import mc_value, one_shot_deviation_check, simulate


def test_solve_r_examples(pcg):
    assert solve_r(pcg, F(9, 10)) == F(1, 18)
    assert solve_r(pcg, F(99, 100)) == F(1, 198)
    with pytest.raises(DeltaTooLow, match="delta_low = 1/3"):
        solve_r(pcg, F(1, 3))
    with pytest.raises(DeltaTooLow):
        solve_r(pcg, F(1, 5))


@settings(max_examples=100, deadline=None)
@given(st.fractions(F(34, 100), F(9999, 10000)), st.fractions(F(1, 10 ** 4), F(1, 10)))
def test_r_decreasing_in_delta(d, step):
    d2 = min(d + step, F(99999, 100000))
    r1, r2 = solve_r(pcg_game(), d), solve_r(pcg_game(), d2)
    assert 0 < r2 <= r1 < 1
    # indifference between a* and a' in the building phase
    assert (1 - d) * (-1) + d * r1 * 2 == 0


def pcg_game():
    from reputation_lab.library import product_choice
    return product_choice()


def test_r_vanishes(pcg):
    assert solve_r(pcg, F(999999, 10 ** 6)) < 1e-5


@pytest.mark.parametrize("delta", [F(2, 5), F(7, 10), F(9, 10), F(99, 100)])
def test_theorem1_value_and_ic(pcg, delta):
    aut = build_theorem1(pcg, delta, F(1, 20), 1)
    V = aut.values(delta)
    assert V["B0"] == 0
    rep = one_shot_deviation_check(aut, pcg, delta)
    assert rep.max_violation <= 1e-9
    # exact indifference of the two building-phase actions
    Q = aut.q_values(delta, V)
    assert Q["B0"][0]["H"] == Q["B0"][0]["L"]


def test_theorem1_pooling_when_stackelberg_is_equilibrium():
    g = StageGame(("x", "y"), ("l", "r"), ((5, 3), (1, 0)), ((3, 0), (1, 0)))
    aut = build_theorem1(g, F(1, 2), F(1, 10), 1)
    assert aut.names == ["S"]
    assert aut.values(F(1, 2))["S"] == 5


def test_theorem1_prior_too_high(pcg):
    with pytest.raises(PreconditionFail, match="pi0_bar = 1/10"):
        build_theorem1(pcg, F(9, 10), F(1, 5), 1)


def test_theorem1_calibrated_large_K(pcg):
    # pi0 = 0.05 is above pi0_bar(K=3) = 1/82, so the half rule is unavailable
    with pytest.raises(PreconditionFail):
        build_theorem1(pcg, F(9, 10), F(1, 20), 3)
    aut = build_theorem1(pcg, F(9, 10), F(1, 20), 3, mode="calibrated")
    assert aut.values(F(9, 10))["B0"] == 0
    assert one_shot_deviation_check(aut, pcg, F(9, 10)).max_violation <= 1e-9
    assert aut.params["pi_max"] < 0.5


def test_low_delta_breaks_maintenance(pcg):
    aut = build_theorem1(pcg, F(9, 10), F(1, 20), 1)
    rep = one_shot_deviation_check(aut, pcg, F(1, 5))
    assert rep.max_violation > 0
    # below delta_low, L is a profitable deviation from maintenance
    assert rep.gaps[("p1", "M", 0, "L")] > 0


def test_theorem1prime_gap_game(gap3):
    d = F(19, 20)
    aut = build_theorem1prime(gap3, d, F(1, 1000), 1)
    assert aut.values(d)[aut.initial] == 0
    assert one_shot_deviation_check(aut, gap3, d).max_violation <= 1e-9


def test_theorem1prime_r_ordering(gap3):
    aut = build_theorem1prime(gap3, F(19, 20), F(1, 1000), 1)
    beta = aut.params["beta"]
    r = {a: aut.params[f"r_{a}"] for a in gap3.actions_p1}
    for a in gap3.actions_p1:
        for b in gap3.actions_p1:
            lower = gap3.pay1(a, beta) <= gap3.pay1(b, beta)
            assert lower == (r[a] >= r[b])


def test_condition3_missing():
    # a* = x, minmax action r, and x is the strict best reply to r
    g = StageGame(("x", "y"), ("l", "r"), ((2, 1), (3, 0)), ((1, 0), (0, 1)))
    with pytest.raises(Condition3Missing):
        build_theorem1prime(g, F(19, 20), F(1, 100), 1)


def test_welfare_v2(pcg):
    assert welfare_V2(pcg, F(9, 10), F(9, 10)) == F(1, 5)
    # q -> 0 sends V2 to u2(a'', b'') = 0
    assert abs(welfare_V2(pcg, F(9, 10), F(9, 10), F(1, 10 ** 9))) < 1e-8


def test_welfare_mc(pcg):
    aut = build_welfare(pcg, F(9, 10), F(1, 20), 1)
    m = mc_value(aut, pcg, F(9, 10), F(1, 20), 10_000, seed=3)
    assert abs(m.welfare - 0.2) <= 3 * m.welfare_se
    assert abs(m.value) <= 3 * m.value_se


def test_prop3_delta_bound(pcg):
    assert prop3_delta_bound(pcg, F(9, 10), 1) == F(1, 72)
    assert prop3_delta_bound(pcg, F(9, 10), 2) == F(1, 144)
    assert prop3_delta_bound(pcg, 1 - 1e-9, 1) < 1e-9


@pytest.mark.parametrize("K,expected", [(1, 0.5), (3, 1.25)])
def test_prop3_time_average(pcg, K, expected):
    assert imitation_bound(pcg, K) == F(expected)
    aut = build_prop3_tight(pcg, K, F(99, 100), F(1, 20))
    sim = simulate(aut, 0.99, 0.05, 50, 4000, np.random.default_rng(K), always_a_star=True, record=True)
    assert abs(sim.records["u1"].mean() - expected) <= 0.02


def test_prop3_ic(pcg):
    aut = build_prop3_tight(pcg, 2, F(99, 100), F(1, 20))
    assert one_shot_deviation_check(aut, pcg, F(99, 100)).max_violation <= 1e-9


def test_prop3_limit(pcg):
    assert abs(float(imitation_bound(pcg, 10 ** 6)) - 2) < 1e-5


def test_prop3_needs_msm(coordination):
    with pytest.raises(PreconditionFail):
        build_prop3_tight(coordination, 1, F(99, 100), F(1, 20))
