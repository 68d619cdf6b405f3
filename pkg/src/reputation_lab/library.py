"""Built-in games and signal structures used throughout the examples and tests."""
from fractions import Fraction as F

from .games import StageGame


def product_choice() -> StageGame:
    """Seller H/L (high/low effort) against buyer T/N (trust/no trust)."""
    return StageGame(("H", "L"), ("T", "N"),
                     ((2, -1), (3, 0)),
                     ((1, 0), (-1, 0)),
                     order_p1=("H", "L"), order_p2=("T", "N"), name="product_choice")


def minmax_gap_game() -> StageGame:
    """3x3 game whose minmax payoff (0) lies below the worst equilibrium payoff (1/2)."""
    return StageGame(("U", "M", "B"), ("L", "C", "R"),
                     ((1, 0, -2), (2, 0, -1), (0, F(1, 2), 0)),
                     ((1, 0, 0), (0, 0, 1), (0, F(1, 2), 0)),
                     name="minmax_gap")


def three_action_signal_game() -> StageGame:
    """2x3 game with actions high > star > low for player 1 and bs > bp for player 2."""
    return StageGame(("high", "star", "low"), ("bs", "bp"),
                     ((1, -2), (2, -1), (3, 0)),
                     ((4, 0), (1, 0), (-2, 0)),
                     order_p1=("high", "star", "low"), order_p2=("bs", "bp"),
                     name="three_action_signal")


# signal structures: action -> {signal: prob}
def uninformative_mlrp_failure():
    """Signal structure under which responses carry no information about the type."""
    return (("s_hi", "s_star", "s_lo"),
            {"high": {"s_hi": F(1)},
             "star": {"s_star": F(2, 3), "s_lo": F(1, 3)},
             "low": {"s_hi": F(1, 3), "s_lo": F(2, 3)}})


def bounded_mlrp_example():
    """Boundedly informative structure satisfying MLRP under s_hi > s_star > s_lo."""
    return (("s_hi", "s_star", "s_lo"),
            {"high": {"s_hi": F(2, 3), "s_star": F(1, 3)},
             "star": {"s_hi": F(1, 3), "s_star": F(2, 3)},
             "low": {"s_lo": F(1)}})


GAMES = {
    "product_choice": product_choice,
    "minmax_gap": minmax_gap_game,
    "three_action_signal": three_action_signal_game,
}
