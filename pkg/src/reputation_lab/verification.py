"""Checking and simulating constructed profiles.

One-shot deviation checks on phase automata, seeded Monte Carlo of discounted
payoffs, prediction-error (KL) series under the always-a* deviation, and
detectors for herding and informativeness of player 2's future actions.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from .automaton import PhaseAutomaton
from .beliefs import calibrated_mix
from .errors import NonFiniteValue, ValidationError
from .games import MixedAction, StageGame, stackelberg
from .numeric import as_number, kl_divergence, truncation_horizon

IC_TOL = 1e-9


@dataclass
class ICReport:
    gaps: Dict[tuple, float] = field(default_factory=dict)   # (player, state, branch, action) -> gain
    max_violation: float = 0.0
    worst: Optional[tuple] = None
    values: Dict[str, object] = field(default_factory=dict)
    delta_min: Optional[float] = None

    @property
    def ok(self) -> bool:
        return self.max_violation <= IC_TOL

    def record(self, key, gain):
        g = float(gain)
        self.gaps[key] = g
        if g > self.max_violation:
            self.max_violation, self.worst = g, key


def _pooled(aut: PhaseAutomaton, br, pi):
    """Player 2's forecast of player 1's action at belief pi."""
    a_s = aut.a_star
    if br.calibrated:
        strat = calibrated_mix(br.p1, a_s, pi)
    else:
        strat = br.p1
    w = {a: (1 - pi) * strat.prob(a) for a in aut.game.actions_p1}
    w[a_s] = w.get(a_s, 0) + pi
    return w


def one_shot_deviation_check(aut: PhaseAutomaton, game: StageGame, delta) -> ICReport:
    """Largest gain from a one-period deviation by either player at any state.

    Player 1 (strategic) is checked against continuation values solved from
    the automaton.  Player 2 is myopic and is checked at each belief listed on
    the state (payoffs are linear in the belief, so endpoints suffice).
    """
    rep = ICReport()
    V = aut.values(delta)
    if V is None or any(not math.isfinite(float(v)) for v in V.values()):
        raise NonFiniteValue("continuation values could not be solved")
    rep.values = V
    Q = aut.q_values(delta, V)
    for s in aut.states.values():
        for k, (br, pb) in enumerate(zip(s.branches, aut.branch_probs(s))):
            if pb == 0:
                continue
            q = Q[s.name][k]
            best = max(q.values())
            worst_in_supp = min(q[a] for a in br.p1.support())
            for a in game.actions_p1:
                rep.record(("p1", s.name, k, a), q[a] - worst_in_supp)
            for pi in s.beliefs:
                try:
                    w = _pooled(aut, br, pi)
                except ValidationError:
                    rep.record(("p2", s.name, k, f"infeasible@{float(pi):.4g}"), float("inf"))
                    continue
                u = {b: sum(w[a] * game.pay2(a, b) for a in w) for b in game.actions_p2}
                low = min(u[b] for b in br.p2.support())
                for b in game.actions_p2:
                    rep.record(("p2", s.name, k, b, float(pi)), u[b] - low)
            del best
    return rep


# ---------------------------------------------------------------------------
# simulation

class _Compiled:
    """Array form of an automaton for vectorised simulation.

    Every (state, branch) pair gets a row in flat tables of cumulative action
    probabilities and next states.
    """

    def __init__(self, aut: PhaseAutomaton):
        g = aut.game
        self.aut = aut
        self.names = aut.names
        idx = {n: i for i, n in enumerate(self.names)}
        self.nA, self.nB = len(g.actions_p1), len(g.actions_p2)
        self.a_star = g.i1(aut.a_star)
        self.U1 = np.array(g.U1, dtype=float)
        self.U2 = np.array(g.U2, dtype=float)
        nbr = max(len(s.branches) for s in aut.states.values())
        self.cuts = np.full((len(self.names), nbr), np.inf)
        self.offset = np.zeros(len(self.names), dtype=int)
        p1, p2, cal, nxt = [], [], [], []
        for i, n in enumerate(self.names):
            s = aut.states[n]
            self.offset[i] = len(p1)
            for k, b in enumerate(s.branches):
                self.cuts[i, k] = float(b.upto) if k < len(s.branches) - 1 else np.inf
                p1.append([float(b.p1.prob(a)) for a in g.actions_p1])
                p2.append([float(b.p2.prob(x)) for x in g.actions_p2])
                cal.append(b.calibrated)
                nxt.append([[idx[b.next_state(a, x)] for x in g.actions_p2] for a in g.actions_p1])
        self.p1 = np.array(p1)
        self.cp1 = np.cumsum(self.p1, axis=1)
        self.cp1[:, -1] = 1.0
        self.cp2 = np.cumsum(np.array(p2), axis=1)
        self.cp2[:, -1] = 1.0
        self.cal = np.array(cal)
        self.nxt = np.array(nxt)
        self.source = np.array([{"table": 0, "fixed": 1, "carry": 2}[aut.states[n].belief_source]
                                for n in self.names])
        self.fixed = np.array([float(aut.states[n].offpath_belief or 0.0) for n in self.names])
        self.phase = [aut.states[n].phase for n in self.names]
        self.init = idx[aut.initial]
        self.table = None if aut.belief_table is None else np.asarray(aut.belief_table, dtype=float)


def _draw(u, cum):
    """Inverse-cdf draw per row from cumulative probabilities (n, k)."""
    out = np.zeros(len(u), dtype=np.intp)
    for k in range(cum.shape[1] - 1):
        out += u > cum[:, k]
    return out


@dataclass
class SimResult:
    disc_u1: np.ndarray
    disc_u2: np.ndarray
    commit: np.ndarray
    records: Optional[dict] = None


def simulate(aut: PhaseAutomaton, delta, pi0, n_runs: int, horizon: int, rng,
             commit_prob=0.0, always_a_star=False, delta_s=None, record=False) -> SimResult:
    """Vectorised paths of the automaton.

    ``commit_prob`` is the chance each run is the commitment type;
    ``always_a_star`` forces the a* deviation on strategic runs.  Discounted
    averages use ``delta`` for player 1 and ``delta_s`` (default delta) for
    player 2.
    """
    C = _Compiled(aut)
    d, ds = float(delta), float(delta if delta_s is None else delta_s)
    K = aut.K
    n = n_runs
    commit = rng.random(n) < float(commit_prob)
    state = np.full(n, C.init)
    runlen = np.zeros(n, dtype=int)
    pi = np.full(n, float(pi0))
    u1s, u2s = np.zeros(n), np.zeros(n)
    w1 = w2 = 1.0
    rec = {k: [] for k in ("state", "branch", "a", "b", "xi", "pi", "u1", "u2")} if record else None
    track_pi = record or bool(C.cal.any())
    forced = commit | bool(always_a_star)
    any_forced = bool(forced.any())
    e_star = np.zeros(C.nA)
    e_star[C.a_star] = 1.0
    for t in range(horizon):
        if track_pi:
            # belief at the start of period t
            src = C.source[state]
            if C.table is not None:
                tb = C.table[min(t, len(C.table) - 1)]
                pi = np.where(src == 0, np.where(runlen >= min(t, K), tb, 0.0), pi)
            pi = np.where(src == 1, C.fixed[state], pi)
        xi, ua, ub = rng.random((3, n))
        br_idx = _draw(xi, C.cuts[state])
        row = C.offset[state] + br_idx
        cp1 = C.cp1[row]
        cal = C.cal[row]
        if cal.any():
            pk = pi[cal][:, None]
            adj = np.clip((C.p1[row[cal]] - pk * e_star) / (1 - pk), 0.0, None)
            adj = np.cumsum(adj, axis=1)
            adj /= adj[:, -1:]
            cp1[cal] = adj
        a = _draw(ua, cp1)
        if any_forced:
            a[forced] = C.a_star
        b = _draw(ub, C.cp2[row])
        new_state = C.nxt[row, a, b]
        u1, u2 = C.U1[a, b], C.U2[a, b]
        u1s += w1 * u1
        u2s += w2 * u2
        w1 *= d
        w2 *= ds
        if record:
            for key, val in (("state", state), ("branch", br_idx), ("a", a), ("b", b), ("xi", xi),
                             ("pi", pi), ("u1", u1), ("u2", u2)):
                rec[key].append(np.array(val, copy=True))
        runlen = np.where(a == C.a_star, runlen + 1, 0)
        state = new_state
    return SimResult((1 - d) * u1s, (1 - ds) * u2s, commit,
                     {k: np.array(v) for k, v in rec.items()} if record else None)


@dataclass
class MCResult:
    value: float
    value_se: float
    welfare: float
    welfare_se: float
    n_runs: int


def _mean_se(x):
    x = np.asarray(x, dtype=float)
    if len(x) < 2:
        return float(x.mean()), 0.0
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(len(x)))


def mc_value(aut: PhaseAutomaton, game: StageGame, delta, pi0, n_runs: int, seed: int,
             delta_s=None, welfare: bool = True) -> MCResult:
    """Player 1's value (strategic runs, discount delta) and player 2's
    welfare (type drawn from the prior, discount delta_s)."""
    if n_runs < 1:
        raise ValidationError("n_runs must be at least 1")
    ds = delta if delta_s is None else delta_s
    ss = np.random.SeedSequence(seed)
    r1, r2 = (np.random.default_rng(x) for x in ss.spawn(2))
    sim1 = simulate(aut, delta, pi0, n_runs, truncation_horizon(delta), r1)
    v, vse = _mean_se(sim1.disc_u1)
    w = wse = float("nan")
    if welfare:
        sim2 = simulate(aut, delta, pi0, n_runs, truncation_horizon(ds), r2, commit_prob=pi0, delta_s=ds)
        w, wse = _mean_se(sim2.disc_u2)
    return MCResult(v, vse, w, wse, n_runs)


# ---------------------------------------------------------------------------
# traces

@dataclass
class RunTrace:
    seed: int
    delta: float
    rows: List[dict]
    disc_u1: float
    disc_u2: float

    COLUMNS = ("t", "phase", "a", "b", "xi", "pi", "u1", "u2", "kl")

    def discounted(self, delta=None):
        d = self.delta if delta is None else float(delta)
        u1 = (1 - d) * sum(d ** r["t"] * r["u1"] for r in self.rows)
        u2 = (1 - d) * sum(d ** r["t"] * r["u2"] for r in self.rows)
        return u1, u2

    def to_csv(self, header: str = "") -> str:
        buf = io.StringIO()
        if header:
            for line in header.splitlines():
                buf.write(f"# {line}\n")
        w = csv.DictWriter(buf, fieldnames=self.COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in self.rows:
            w.writerow({k: (repr(r[k]) if isinstance(r[k], float) else r[k]) for k in self.COLUMNS})
        return buf.getvalue()


def run_trace(aut: PhaseAutomaton, delta, pi0, seed: int, horizon: Optional[int] = None,
              commitment=False, always_a_star=False) -> RunTrace:
    """One recorded path; the seed fully determines it."""
    T = truncation_horizon(delta) if horizon is None else horizon
    rng = np.random.default_rng(seed)
    sim = simulate(aut, delta, pi0, 1, T, rng, commit_prob=1.0 if commitment else 0.0,
                   always_a_star=always_a_star, record=True)
    rec = sim.records
    g = aut.game
    names = aut.names
    rows = []
    for t in range(T):
        s = names[rec["state"][t][0]]
        k = int(rec["branch"][t][0])
        pi = float(rec["pi"][t][0])
        rows.append({"t": t, "phase": aut.states[s].phase, "a": g.actions_p1[rec["a"][t][0]],
                     "b": g.actions_p2[rec["b"][t][0]], "xi": float(rec["xi"][t][0]), "pi": pi,
                     "u1": float(rec["u1"][t][0]), "u2": float(rec["u2"][t][0]),
                     "kl": _step_kl(aut, s, k, pi)})
    return RunTrace(seed, float(delta), rows, float(sim.disc_u1[0]), float(sim.disc_u2[0]))


# ---------------------------------------------------------------------------
# prediction errors

def _b_dist_of_state(aut: PhaseAutomaton, name):
    st = aut.states[name]
    out = {}
    for br, pb in zip(st.branches, aut.branch_probs(st)):
        for b in br.p2.support():
            out[b] = out.get(b, 0.0) + float(pb) * float(br.p2.prob(b))
    return out


def _next_b(aut, br, alpha: dict):
    """Distribution of next period's b given this branch and player 1's action mix."""
    out = {}
    for a, pa in alpha.items():
        if pa == 0:
            continue
        for b in br.p2.support():
            w = float(pa) * float(br.p2.prob(b))
            for x, px in _b_dist_of_state(aut, br.next_state(a, b)).items():
                out[x] = out.get(x, 0.0) + w * px
    return out


def _step_kl(aut: PhaseAutomaton, state, k, pi):
    """d(next b | a*  ||  next b | pooled action) at this branch and belief."""
    br = aut.states[state].branches[k]
    try:
        pooled = _pooled(aut, br, pi)
    except ValidationError:
        return float("nan")
    p = _next_b(aut, br, {aut.a_star: 1.0})
    q = _next_b(aut, br, pooled)
    labels = sorted(set(p) | set(q))
    return kl_divergence([p.get(x, 0.0) for x in labels], [q.get(x, 0.0) for x in labels])


def prediction_error_series(aut: PhaseAutomaton, game: StageGame, pi0, horizon: int):
    """Expected one-step prediction errors along the always-a* path.

    Exact forward recursion over (state, belief) pairs: beliefs come from the
    automaton's belief table in building states, the fixed off-path value where
    one is set, and are carried forward otherwise.
    Returns (series, cumulative).
    """
    dist = {(aut.initial, float(pi0)): 1.0}
    table = None if aut.belief_table is None else np.asarray(aut.belief_table, dtype=float)
    series = np.zeros(horizon)
    a_s = aut.a_star
    kl_cache = {}
    pure_star = {n for n, st in aut.states.items()
                 if all(not br.calibrated and br.p1.support() == (a_s,) for br in st.branches)}
    for t in range(horizon):
        tot = 0.0
        new = {}
        for (s, pi_in), m in dist.items():
            st = aut.states[s]
            if st.belief_source == "table" and table is not None:
                pi = float(table[min(t, len(table) - 1)])
            elif st.belief_source == "fixed":
                pi = float(st.offpath_belief or 0.0)
            elif s in pure_star:
                pi = 0.0     # pooled action is a* whatever the belief
            else:
                pi = pi_in
            for k, (br, pb) in enumerate(zip(st.branches, aut.branch_probs(st))):
                if pb == 0:
                    continue
                key = (s, k, pi)
                if key not in kl_cache:
                    kl_cache[key] = _step_kl(aut, s, k, pi)
                tot += m * float(pb) * kl_cache[key]
                for b in br.p2.support():
                    ns = br.next_state(a_s, b)
                    kk = (ns, pi)
                    new[kk] = new.get(kk, 0.0) + m * float(pb) * float(br.p2.prob(b))
        series[t] = tot
        dist = new
    return series, np.cumsum(series)


def building_kl_formula(q_star, delta):
    """ln(1 + (1 - q*)(1 - delta)): the closed form commonly quoted for the
    per-period building-phase error (see the decisions log for how it compares
    with the exact one-step divergence)."""
    return math.log(1 + (1 - float(q_star)) * (1 - float(delta)))


def building_kl_exact(r, pooled_a_star):
    """Exact one-step divergence in the three-phase building phase:
    next b is b* with probability r under a*, and p r under the pooled action."""
    r, p = float(r), float(pooled_a_star)
    return r * math.log(1 / p) + (1 - r) * math.log((1 - r) / (1 - p * r))


# ---------------------------------------------------------------------------
# herding and informativeness

def _reachable(aut: PhaseAutomaton, start, steps):
    """States reachable on path (strategic supports and a*) within ``steps``."""
    seen = {start}
    frontier = {start}
    for _ in range(steps):
        nxt = set()
        for s in frontier:
            st = aut.states[s]
            for br, pb in zip(st.branches, aut.branch_probs(st)):
                if pb == 0:
                    continue
                acts = set(br.p1.support()) | {aut.a_star}
                for a in acts:
                    for b in br.p2.support():
                        ns = br.next_state(a, b)
                        if ns not in seen:
                            nxt.add(ns)
        if not nxt:
            break
        seen |= nxt
        frontier = nxt
    return seen


def detect_herding(aut: PhaseAutomaton, horizon: int = 200):
    """Certificates (state, b) where the belief can be positive yet every on-path
    continuation within ``horizon`` plays the same b != b*."""
    _, b_s, _ = stackelberg(aut.game)
    certs = []
    for name in sorted(_reachable(aut, aut.initial, horizon)):
        st = aut.states[name]
        if max(st.beliefs) <= 0:
            continue
        bs = set()
        for s in _reachable(aut, name, horizon):
            for br, pb in zip(aut.states[s].branches, aut.branch_probs(aut.states[s])):
                if pb > 0:
                    bs |= set(br.p2.support())
        if len(bs) == 1:
            (b,) = bs
            if b != b_s:
                certs.append((name, b))
    return certs


def _future_b(aut: PhaseAutomaton, state, a, K, keep_a_star=False):
    """Distribution over (b_{t+1}, ..., b_{t+K}) when player 1 plays a now and
    follows the strategic prescription afterwards (or a* throughout)."""
    st = aut.states[state]
    cur = {}
    for br, pb in zip(st.branches, aut.branch_probs(st)):
        for b in br.p2.support():
            ns = br.next_state(a, b)
            cur[((), ns)] = cur.get(((), ns), 0.0) + float(pb) * float(br.p2.prob(b))
    for _ in range(K):
        nxt = {}
        for (seq, s), m in cur.items():
            st = aut.states[s]
            for br, pb in zip(st.branches, aut.branch_probs(st)):
                p1 = MixedAction.pure(aut.a_star) if keep_a_star else br.p1
                for a2 in p1.support():
                    for b in br.p2.support():
                        w = m * float(pb) * float(p1.prob(a2)) * float(br.p2.prob(b))
                        key = (seq + (b,), br.next_state(a2, b))
                        nxt[key] = nxt.get(key, 0.0) + w
        cur = nxt
    out = {}
    for (seq, _), m in cur.items():
        out[seq] = out.get(seq, 0.0) + m
    return out


def informativeness_check(aut: PhaseAutomaton, game: StageGame, K: int, state: str) -> bool:
    """True if player 2s' next K actions depend on player 1's current action,
    or if a* now guarantees b* in each of the next K periods."""
    if state not in aut.states:
        raise ValidationError(f"unknown state {state}")
    dists = {a: _future_b(aut, state, a, K) for a in game.actions_p1}
    base = dists[aut.a_star]
    for a, dd in dists.items():
        keys = set(base) | set(dd)
        if sum(abs(base.get(k, 0.0) - dd.get(k, 0.0)) for k in keys) > 1e-12:
            return True
    _, b_s, _ = stackelberg(game)
    # b*-guarantee: along a*-runs b* is played for sure
    base = _future_b(aut, state, aut.a_star, K, keep_a_star=True)
    return all(all(b == b_s for b in seq) for seq, p in base.items() if p > 0)
