"""Phase automata: strategy profiles as finite machines over public events.

Each period the machine sits in a state.  A public draw xi ~ U[0,1] selects a
branch (the first branch with ``xi <= upto``).  The branch fixes the strategic
player 1's mixed action and player 2's mixed action as player 1 sees it.  After
actions (a, b) are realised, the first matching rule gives the next state.

Branches marked ``calibrated`` let the strategic type's mixing depend on player
2's belief so that the pooled action equals ``p1``; the ``p1`` field then holds
the belief-free mix, which is also what value computations use.  Continuation
values do not depend on it because the constructions make player 1 indifferent
over its support.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, Optional, Sequence

import numpy as np

from .errors import ParseError, ValidationError
from .games import MixedAction, StageGame
from .numeric import all_exact, as_number, fmt, solve_square


@dataclass(frozen=True)
class Rule:
    a: str
    b: str
    target: str

    def matches(self, a, b) -> bool:
        return _match(self.a, a) and _match(self.b, b)


def _match(pat, x):
    if pat == "*":
        return True
    if pat.startswith("!"):
        return x != pat[1:]
    return x == pat


@dataclass
class Branch:
    upto: object
    p1: MixedAction
    p2: MixedAction
    rules: tuple
    calibrated: bool = False

    def next_state(self, a, b):
        for r in self.rules:
            if r.matches(a, b):
                return r.target
        raise ValidationError(f"no transition for ({a}, {b})")


@dataclass
class State:
    name: str
    phase: str
    branches: tuple
    beliefs: tuple = (0, 1)          # beliefs at which player 2's reply is checked
    offpath_belief: Optional[object] = None
    belief_source: str = "carry"      # carry | table | fixed


@dataclass
class PhaseAutomaton:
    name: str
    game: StageGame
    states: Dict[str, State]
    initial: str
    a_star: str
    params: dict = field(default_factory=dict)
    belief_table: Optional[Sequence] = None   # pi_t on an all-a* window, initial building phase
    K: int = 1

    def __post_init__(self):
        self.validate()

    # -- structure -------------------------------------------------------
    def validate(self):
        if self.initial not in self.states:
            raise ValidationError(f"initial state {self.initial!r} undefined")
        A, B = self.game.actions_p1, self.game.actions_p2
        for s in self.states.values():
            if not s.branches:
                raise ValidationError(f"state {s.name} has no branches")
            prev = 0
            for br in s.branches:
                if br.upto < prev or br.upto > 1:
                    raise ValidationError(f"state {s.name}: thresholds must increase inside [0,1]")
                prev = br.upto
                for lab in br.p1.support():
                    if lab not in A:
                        raise ValidationError(f"state {s.name}: unknown action {lab}")
                for lab in br.p2.support():
                    if lab not in B:
                        raise ValidationError(f"state {s.name}: unknown action {lab}")
                for a in A:
                    for b in B:
                        tgt = br.next_state(a, b)
                        if tgt not in self.states:
                            raise ValidationError(f"state {s.name}: unknown target {tgt}")
            if s.branches[-1].upto != 1:
                raise ValidationError(f"state {s.name}: last threshold must be 1")

    @property
    def names(self):
        return list(self.states)

    def branch_probs(self, state: State):
        out, prev = [], 0
        for br in state.branches:
            out.append(br.upto - prev)
            prev = br.upto
        return out

    # -- values ----------------------------------------------------------
    def _numbers_exact(self, delta):
        vals = [delta]
        for s in self.states.values():
            for br in s.branches:
                vals.append(br.upto)
                vals.extend(br.p1.weights.values())
                vals.extend(br.p2.weights.values())
        return all_exact(vals) and self.game.exact

    def values(self, delta, p1_override: Optional[Callable] = None):
        """Strategic player 1's discounted average value in each state.

        ``p1_override(state, branch_index)`` may return a MixedAction to use
        instead of the prescribed one (used for always-a* evaluations).
        """
        delta = as_number(delta)
        exact = self._numbers_exact(delta)
        if not exact:
            delta = float(delta)
        names = self.names
        idx = {n: i for i, n in enumerate(names)}
        n = len(names)
        zero = Fraction(0) if exact else 0.0
        M = [[zero] * n for _ in range(n)]
        c = [zero] * n
        for s in self.states.values():
            i = idx[s.name]
            for k, (br, pb) in enumerate(zip(s.branches, self.branch_probs(s))):
                if pb == 0:
                    continue
                p1 = p1_override(s, k) if p1_override else br.p1
                for a in p1.support():
                    for b in br.p2.support():
                        w = pb * p1.prob(a) * br.p2.prob(b)
                        if not exact:
                            w = float(w)
                        c[i] += w * (self.game.pay1(a, b) if exact else float(self.game.pay1(a, b)))
                        M[i][idx[br.next_state(a, b)]] += w
        A = [[(1 if i == j else 0) - delta * M[i][j] for j in range(n)] for i in range(n)]
        rhs = [(1 - delta) * c[i] for i in range(n)]
        sol = solve_square(A, rhs)
        if sol is None:
            return None
        return dict(zip(names, sol))

    def q_values(self, delta, V=None):
        """Q[state][k][a]: value of playing a in branch k, given values V."""
        delta = as_number(delta)
        if V is None:
            V = self.values(delta)
        exact = self._numbers_exact(delta)
        out = {}
        for s in self.states.values():
            rows = []
            for br in s.branches:
                q = {}
                for a in self.game.actions_p1:
                    tot = 0
                    for b in br.p2.support():
                        u = self.game.pay1(a, b)
                        pb2 = br.p2.prob(b)
                        if not exact:
                            u, pb2 = float(u), float(pb2)
                            tot += pb2 * ((1 - float(delta)) * u + float(delta) * float(V[br.next_state(a, b)]))
                        else:
                            tot += pb2 * ((1 - delta) * u + delta * V[br.next_state(a, b)])
                    q[a] = tot
                rows.append(q)
            out[s.name] = rows
        return out

    # -- serialisation ---------------------------------------------------
    def to_text(self) -> str:
        lines = [f"automaton {self.name}", f"game {self.game.name or 'custom'}",
                 f"initial {self.initial}", f"a_star {self.a_star}", f"K {self.K}"]
        for k in sorted(self.params):
            lines.append(f"param {k} = {_fmt_param(self.params[k])}")
        for s in self.states.values():
            bel = " ".join(fmt(x) for x in s.beliefs)
            head = f"state {s.name} phase={s.phase} beliefs=[{bel}] source={s.belief_source}"
            if s.offpath_belief is not None:
                head += f" offpath={fmt(s.offpath_belief)}"
            lines.append(head)
            for br in s.branches:
                tag = "p1~" if br.calibrated else "p1="
                lines.append(f"  branch upto={fmt(br.upto)} {tag}{_fmt_mix(br.p1)} p2={_fmt_mix(br.p2)}")
                for r in br.rules:
                    lines.append(f"    on a={r.a} b={r.b} -> {r.target}")
        return "\n".join(lines) + "\n"


def _fmt_mix(m: MixedAction):
    return "{" + ", ".join(f"{k}: {fmt(v)}" for k, v in m.weights.items() if v > 0) + "}"


def _fmt_param(v):
    if isinstance(v, (Fraction, float, int)):
        return fmt(as_number(v) if isinstance(v, int) else v)
    return str(v)


_MIX_RE = re.compile(r"\{([^}]*)\}")


def _num(text):
    """Fractions and integers stay exact; decimals come back as the floats they were written from."""
    t = text.strip()
    if any(c in t for c in ".eE") or t in ("inf", "-inf", "nan"):
        return float(t)
    return as_number(t)


def _parse_mix(text, lineno):
    m = _MIX_RE.fullmatch(text.strip())
    if not m:
        raise ParseError(f"bad mixed action {text!r}", lineno)
    w = {}
    for part in m.group(1).split(","):
        if not part.strip():
            continue
        k, _, v = part.partition(":")
        w[k.strip()] = _num(v)
    return MixedAction(w)


def from_text(text: str, game: StageGame, belief_table=None) -> PhaseAutomaton:
    """Inverse of ``PhaseAutomaton.to_text`` (the game is supplied separately)."""
    name = initial = a_star = None
    K = 1
    params = {}
    states = {}
    cur = None
    br_buf = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.rstrip()
        if not line.strip() or line.strip().startswith("#"):
            continue
        s = line.strip()
        try:
            if s.startswith("automaton "):
                name = s.split(None, 1)[1]
            elif s.startswith("game "):
                pass
            elif s.startswith("initial "):
                initial = s.split()[1]
            elif s.startswith("a_star "):
                a_star = s.split()[1]
            elif s.startswith("K "):
                K = int(s.split()[1])
            elif s.startswith("param "):
                k, _, v = s[6:].partition("=")
                v = v.strip()
                try:
                    params[k.strip()] = _num(v)
                except (ValueError, TypeError):
                    params[k.strip()] = v
            elif s.startswith("state "):
                m = re.fullmatch(r"state (\S+) phase=(\S+) beliefs=\[([^\]]*)\] source=(\S+)(?: offpath=(\S+))?", s)
                if not m:
                    raise ParseError("bad state header", lineno)
                bel = tuple(_num(x) for x in m.group(3).split())
                off = _num(m.group(5)) if m.group(5) else None
                cur = {"name": m.group(1), "phase": m.group(2), "beliefs": bel,
                       "source": m.group(4), "offpath": off, "branches": []}
                states[cur["name"]] = cur
            elif s.startswith("branch "):
                m = re.fullmatch(r"branch upto=(\S+) p1([=~])(\{[^}]*\}) p2=(\{[^}]*\})", s)
                if not m or cur is None:
                    raise ParseError("bad branch line", lineno)
                br_buf = {"upto": _num(m.group(1)), "cal": m.group(2) == "~",
                          "p1": _parse_mix(m.group(3), lineno), "p2": _parse_mix(m.group(4), lineno),
                          "rules": []}
                cur["branches"].append(br_buf)
            elif s.startswith("on "):
                m = re.fullmatch(r"on a=(\S+) b=(\S+) -> (\S+)", s)
                if not m or br_buf is None:
                    raise ParseError("bad rule line", lineno)
                br_buf["rules"].append(Rule(m.group(1), m.group(2), m.group(3)))
            else:
                raise ParseError(f"unrecognised line {s!r}", lineno)
        except ParseError:
            raise
        except (ValueError, TypeError, ValidationError) as exc:
            raise ParseError(str(exc), lineno) from exc
    if name is None or initial is None or a_star is None:
        raise ParseError("missing automaton header")
    built = {}
    for st in states.values():
        brs = tuple(Branch(b["upto"], b["p1"], b["p2"], tuple(b["rules"]), b["cal"])
                    for b in st["branches"])
        built[st["name"]] = State(st["name"], st["phase"], brs, st["beliefs"], st["offpath"], st["source"])
    return PhaseAutomaton(name, game, built, initial, a_star, params, belief_table, K)


# ---------------------------------------------------------------------------
# helpers used by the constructions

def pure(label):
    return MixedAction.pure(label)


def simple_state(name, phase, p1, p2, rules, beliefs=(0, 1), offpath_belief=None, belief_source="carry"):
    return State(name, phase, (Branch(Fraction(1), p1, p2, tuple(rules)),), tuple(beliefs),
                 offpath_belief, belief_source)


def static_automaton(game: StageGame, a, b, a_star=None) -> PhaseAutomaton:
    """Play (a, b) at every history."""
    st = simple_state("S", "static", pure(a), pure(b), [Rule("*", "*", "S")])
    return PhaseAutomaton("static", game, {"S": st}, "S", a_star or a)
