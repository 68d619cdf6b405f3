from fractions import Fraction as F
from pathlib import Path

import pytest

from reputation_lab.automaton import (Branch, PhaseAutomaton, Rule, State, from_text, pure, simple_state,
                                      static_automaton)
from reputation_lab.bounded_memory import build_prop3_tight, build_theorem1
from reputation_lab.errors import ParseError, ValidationError

GOLDEN = Path(__file__).parent / "golden"


def test_theorem1_golden(pcg):
    aut = build_theorem1(pcg, F(9, 10), F(1, 20), 1)
    assert aut.to_text() == (GOLDEN / "theorem1_pcg_d0.9_k1.txt").read_text()


def test_prop3_golden(pcg):
    aut = build_prop3_tight(pcg, 1, F(9, 10), F(1, 20))
    assert aut.to_text() == (GOLDEN / "prop3_pcg_k1.txt").read_text()


@pytest.mark.parametrize("fname", ["theorem1_pcg_d0.9_k1.txt", "prop3_pcg_k1.txt"])
def test_golden_round_trip(pcg, fname):
    text = (GOLDEN / fname).read_text()
    aut = from_text(text, pcg)
    assert aut.to_text() == text


def test_parsed_automaton_has_same_values(pcg):
    aut = build_theorem1(pcg, F(9, 10), F(1, 20), 1)
    back = from_text(aut.to_text(), pcg, aut.belief_table)
    assert back.values(F(9, 10)) == aut.values(F(9, 10))


def test_values_theorem1(pcg):
    V = build_theorem1(pcg, F(9, 10), F(1, 20), 1).values(F(9, 10))
    assert V == {"B0": 0, "B1": F(1, 9), "M": 2, "Mx": 0, "P": 0}


def test_static_automaton_value(pcg):
    aut = static_automaton(pcg, "L", "N")
    assert aut.values(F(1, 2))[aut.initial] == 0


def test_bad_threshold_rejected(pcg):
    st = State("S", "x", (Branch(F(1, 2), pure("H"), pure("T"), (Rule("*", "*", "S"),)),))
    with pytest.raises(ValidationError):
        PhaseAutomaton("bad", pcg, {"S": st}, "S", "H")


def test_unknown_target_rejected(pcg):
    st = simple_state("S", "x", pure("H"), pure("T"), [Rule("*", "*", "nowhere")])
    with pytest.raises(ValidationError):
        PhaseAutomaton("bad", pcg, {"S": st}, "S", "H")


def test_parse_error_has_line(pcg):
    text = "automaton x\ninitial S\na_star H\nstate S phase=p beliefs=[0] source=carry\n  branch nonsense\n"
    with pytest.raises(ParseError) as info:
        from_text(text, pcg)
    assert info.value.line == 5
