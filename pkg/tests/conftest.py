from fractions import Fraction as F

import numpy as np
import pytest

from reputation_lab import library
from reputation_lab.games import StageGame


@pytest.fixture
def pcg():
    return library.product_choice()


@pytest.fixture
def gap3():
    return library.minmax_gap_game()


@pytest.fixture
def signal_game():
    return library.three_action_signal_game()


@pytest.fixture
def coordination():
    # battle-of-the-sexes style: player 1 prefers (A, a), player 2 prefers (B, b)
    return StageGame(("A", "B"), ("a", "b"), ((3, 0), (0, 1)), ((1, 0), (0, 3)), name="bos")


def random_msm_game(rng, max_actions=3, exact=True, tries=200):
    """Random monotone-supermodular game, actions listed from high to low.

    With i the rank of a (0 lowest) and j the rank of b (0 lowest):
    u1 = g(j) - c(i) - k i j  (decreasing in a, increasing in b, differences
    non-increasing) and u2 = l i j + h(j) + e(i) (increasing differences).
    Draws failing Assumption 1 or with a* at the bottom are rejected.
    """
    from reputation_lab.games import check_assumption1, is_monotone_supermodular

    num = (lambda x: F(int(x))) if exact else (lambda x: float(x) + 0.0)
    for _ in range(tries):
        n_a = int(rng.integers(2, max_actions + 1))
        n_b = int(rng.integers(2, max_actions + 1))
        g = np.cumsum(rng.integers(1, 6, size=n_b))
        c = np.cumsum(rng.integers(1, 4, size=n_a))
        k = int(rng.integers(0, 2))
        lam = int(rng.integers(1, 5))
        h = rng.integers(-6, 3, size=n_b)
        e = rng.integers(-3, 4, size=n_a)
        u1 = [[num(g[j] - c[i] - k * i * j) for j in range(n_b)] for i in range(n_a)]
        u2 = [[num(lam * i * j + h[j] + e[i]) for j in range(n_b)] for i in range(n_a)]
        # store rows/columns from high to low
        u1 = [row[::-1] for row in u1[::-1]]
        u2 = [row[::-1] for row in u2[::-1]]
        A = tuple(f"a{i}" for i in range(n_a))
        B = tuple(f"b{j}" for j in range(n_b))
        game = StageGame(A, B, u1, u2, order_p1=A, order_p2=B)
        if check_assumption1(game) and is_monotone_supermodular(game):
            return game
    raise RuntimeError("no monotone-supermodular draw")
