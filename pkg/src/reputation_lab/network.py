"""Reputation under stochastic network sampling of player 1's past actions.

Player 2 in period t sees every earlier b and player 1's actions in a random
sample N_t of past periods.  The construction here holds the strategic type to
u1(a', b'): player 1's view of it is a phase automaton (player 2's mixing
averaged over her private sample), and player 2's incentives in the building
phase come from the strategic type's mixing vectors q_t over indicator
histories chi^t, computed exactly for small t.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from . import games as G
from .automaton import Branch, PhaseAutomaton, Rule, State, pure, simple_state
from .errors import (BoxViolated, ComplexRoots, DeltaTooLow, Infeasible, InfeasibleBelief,
                     OutOfRange, PreconditionFail, SpecViolation, ValidationError)
from .games import MixedAction, StageGame
from .numeric import as_number, fmt

T_EXACT = 10


# ---------------------------------------------------------------------------
# sampling networks

@dataclass(frozen=True)
class NetworkSpec:
    """kind: ``last_k`` | ``bernoulli`` | ``uniform_forced`` | ``custom``.

    ``last_k``: N_t = {t-K..t-1}.  ``bernoulli``: each past index enters
    independently with probability ``p``; only the ``K_cap`` most recent kept.
    ``uniform_forced``: with probability ``gamma`` t-1 is included and the rest
    of the K_cap slots are uniform over the other indices; otherwise all K_cap
    slots are uniform.  ``custom``: ``sampler(t, rng)`` returns the set.
    """
    kind: str
    K_cap: int
    gamma: float = 1.0
    p: float = 0.5
    sampler: Optional[Callable] = None

    def __post_init__(self):
        if self.K_cap < 1:
            raise ValidationError("K_cap must be at least 1")
        if self.kind not in ("last_k", "bernoulli", "uniform_forced", "custom"):
            raise ValidationError(f"unknown network kind {self.kind!r}")
        if self.kind == "custom" and self.sampler is None:
            raise ValidationError("custom network needs a sampler")
        if not 0 < self.p_last_bound() <= 1:
            raise ValidationError("probability of sampling t-1 must be positive")

    def p_last(self, t: int) -> float:
        """P(t-1 in N_t)."""
        if t < 1:
            return 0.0
        if self.kind == "last_k":
            return 1.0
        if self.kind == "bernoulli":
            return float(self.p)
        if self.kind == "uniform_forced":
            k = min(self.K_cap, t)
            return float(self.gamma) + (1 - float(self.gamma)) * k / t
        return float(self.gamma)

    def p_last_bound(self) -> float:
        """A lower bound gamma on P(t-1 in N_t) over all t >= 1."""
        if self.kind == "last_k":
            return 1.0
        if self.kind == "bernoulli":
            return float(self.p)
        return float(self.gamma)


def sample_network(spec: NetworkSpec, t: int, rng_seed) -> frozenset:
    """Draw N_t; ``rng_seed`` is an int seed or a numpy Generator."""
    if t < 1:
        raise ValidationError("t must be at least 1")
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    K = spec.K_cap
    if spec.kind == "last_k":
        out = set(range(max(0, t - K), t))
    elif spec.kind == "bernoulli":
        inc = np.flatnonzero(rng.random(t) < spec.p)
        out = set(int(x) for x in inc[-K:])
    elif spec.kind == "uniform_forced":
        k = min(K, t)
        if rng.random() < spec.gamma:
            rest = rng.choice(t - 1, size=k - 1, replace=False) if k > 1 else []
            out = {t - 1} | set(int(x) for x in rest)
        else:
            out = set(int(x) for x in rng.choice(t, size=k, replace=False))
    else:
        out = set(spec.sampler(t, rng))
    if len(out) > K:
        raise SpecViolation(f"sample of size {len(out)} exceeds K_cap = {K}")
    if any(not 0 <= s < t for s in out):
        raise SpecViolation("sample contains indices outside 0..t-1")
    return frozenset(out)


# ---------------------------------------------------------------------------
# maintenance phase

@dataclass(frozen=True)
class MaintenanceSolution:
    beta: float
    V1: float
    X: float
    Y: float
    Z: float
    residuals: tuple


def _labels(game: StageGame):
    c = G.derive_constants(game)
    a2 = c.a_dprime
    p, b2 = G.indifference_p_star(game) if a2 != c.a_star else (None, None)
    return c, a2, b2, p


def solve_maintenance_beta(game: StageGame, delta, gamma) -> MaintenanceSolution:
    """Unconditional b* probability after a deviation, and the matching value."""
    d = float(as_number(delta))
    g = float(gamma)
    c, a2, b2, _ = _labels(game)
    if a2 == c.a_star:
        raise PreconditionFail("a'' equals a*: maintenance needs no mixing", bound="a'' != a*")
    u = lambda a, b: float(game.pay1(a, b))
    a_s, b_s, a_p, b_p = c.a_star, c.b_star, c.a_prime, c.b_prime
    X = d / (1 - d) * (u(a_s, b_s) - (1 - d) * u(a_s, b2) - d * u(a_p, b_p))
    Y = u(a2, b_s) - u(a_s, b_s)
    Z = u(a2, b2) - u(a_s, b2)
    if X <= 0:
        raise DeltaTooLow(f"X = {X:.6g} is not positive at delta = {d}", value=d)
    disc = (X + Z - Y) ** 2 - 4 * X * Z
    if disc < 0:
        raise ComplexRoots(f"discriminant {disc:.6g} < 0 at delta = {d}", value=d)
    beta = (X + Z - Y + math.sqrt(disc)) / (2 * X)
    V1 = u(a_s, b_s) - (1 - d) / d * Y - (1 - d) / d * (1 - beta) / beta * Z
    ub = lambda a: beta * u(a, b_s) + (1 - beta) * u(a, b2)
    r4 = V1 - ((1 - d) * ub(a_s) + d * beta * u(a_s, b_s) + d * (1 - beta) * u(a_p, b_p))
    r5 = V1 - ((1 - d) * ub(a2) + d * beta * V1 + d * (1 - beta) * u(a_p, b_p))
    if not 1 - g < beta < 1:
        raise DeltaTooLow(f"beta = {beta:.6g} not in (1 - gamma, 1) = ({1 - g:.6g}, 1)",
                          bound=1 - g, value=beta)
    return MaintenanceSolution(beta, V1, X, Y, Z, (r4, r5))


def xi_cutoffs(game: StageGame, delta, beta):
    """(xi_bar, xi_bar_prime): the entry lottery cutoffs for the two branches.

    xi_bar_prime is the closed form written with (a', b'); the coordination
    construction itself uses ``coordination_cutoff``.
    """
    d = as_number(delta)
    c, a2, b2, _ = _labels(game)
    a_s, b_s, a_p, b_p, b_ss = c.a_star, c.b_star, c.a_prime, c.b_prime, c.b_starstar
    u = game.pay1
    beta = float(beta)
    num = float(u(a_p, b_ss) - u(a_s, b_ss))
    den = float(u(a2, b_s) - u(a_s, b_s)) + (1 - beta) / beta * float(u(a2, b2) - u(a_s, b2))
    xi = num / den
    xi_p = (1 - d) / d * (u(a_p, b_p) - u(a_s, b_p)) / (u(a_s, b_s) - u(a_p, b_p))
    for name, v in (("xi_bar", xi), ("xi_bar_prime", xi_p)):
        if not 0 <= v <= 1:
            raise OutOfRange(f"{name} = {float(v):.6g} outside [0,1]", bound="[0,1]", value=v)
    return xi, xi_p


def xi_cutoffs_coordination(game: StageGame, delta):
    d = as_number(delta)
    c = G.derive_constants(game)
    u = game.pay1
    return (1 - d) / d * (u(c.a_prime, c.b_prime) - u(c.a_star, c.b_prime)) / (c.u_star - u(c.a_prime, c.b_prime))


def coordination_cutoff(game: StageGame, delta, b_entry):
    """Entry-lottery cutoff that makes a* and a' indifferent after a* in the
    building phase when the entry signal is ``b_entry``."""
    d = as_number(delta)
    c = G.derive_constants(game)
    u = game.pay1
    return (1 - d) / d * (u(c.a_prime, b_entry) - u(c.a_star, b_entry)) / (c.u_star - u(c.a_prime, c.b_prime))


# ---------------------------------------------------------------------------
# building phase

def solve_building_rho(game: StageGame, delta, gamma=None, variant: str = "lack_of_commitment"):
    """(rho, V1') from the building-phase indifference conditions.

    ``variant="coordination"`` uses b* in place of b** in player 1's stage
    payoff, as in the coordination-game branch.
    """
    d = as_number(delta)
    c = G.derive_constants(game)
    a_s, b_s, a_p, b_p = c.a_star, c.b_star, c.a_prime, c.b_prime
    b_hi = c.b_starstar if variant == "lack_of_commitment" else b_s
    if variant not in ("lack_of_commitment", "coordination"):
        raise ValidationError(f"unknown variant {variant!r}")
    u = game.pay1
    V1p = (u(a_p, b_p) - (1 - d) * u(a_s, b_p)) / d
    lhs = (1 - d) * V1p - (1 - d) * u(a_s, b_p)
    coef = (1 - d) * (u(a_s, b_hi) - u(a_s, b_p)) + d * (c.u_star - V1p)
    if coef == 0:
        raise DeltaTooLow("building indifference is degenerate", value=d)
    rho = lhs / coef
    cap = 1 if gamma is None else as_number(gamma)
    if not 0 < rho < cap:
        raise DeltaTooLow(f"rho = {fmt(rho)} not in (0, {fmt(cap)})", bound=cap, value=rho)
    return rho, V1p


def building_residual(game, delta, rho, V1p, variant="lack_of_commitment"):
    d = as_number(delta)
    c = G.derive_constants(game)
    b_hi = c.b_starstar if variant == "lack_of_commitment" else c.b_star
    u = game.pay1
    rhs = (1 - d) * (rho * u(c.a_star, b_hi) + (1 - rho) * u(c.a_star, c.b_prime)) \
        + d * rho * c.u_star + d * (1 - rho) * V1p
    return V1p - rhs


def minimal_M(K: int) -> int:
    """Smallest M with 2^K sum_{j<=K} C(n, j) < 2^n for every n >= M.

    For n >= 2K - 1 the ratio of the two sides is nondecreasing in n, so the
    scan stops at the first success past that point.
    """
    if K < 1:
        raise ValidationError("K must be at least 1")
    last_fail = -1
    n = 0
    while True:
        ok = 2 ** K * sum(math.comb(n, j) for j in range(K + 1)) < 2 ** n
        if not ok:
            last_fail = n
        elif n >= 2 * K - 1:
            return last_fail + 1
        n += 1


def lemma_M_holds(K: int, n: int) -> bool:
    return 2 ** K * sum(math.comb(n, j) for j in range(K + 1)) < 2 ** n


def pi0_eta_bound(eta, q_star, M: int):
    """Prior cutoff with odds(pi) (1/(eta q*))^M = eta q* / (1 - eta q*).

    The defining inequality is strict, so priors must lie strictly below the
    returned value.
    """
    eq = as_number(eta) * as_number(q_star)
    if not 0 < as_number(eta) < Fraction(1, 2):
        raise ValidationError("eta must lie in (0, 1/2)")
    o = eq / (1 - eq) * eq ** M
    return o / (1 + o)


def belief_free_q(q_star, pi_tilde):
    q, p = as_number(q_star), as_number(pi_tilde)
    if p >= q:
        raise InfeasibleBelief(f"pi_tilde = {fmt(p)} >= q* = {fmt(q)}", bound=q, value=p)
    return (q - p) / (1 - p)


# ---------------------------------------------------------------------------
# belief-based mixing

@dataclass
class BeliefBasedSolution:
    q: np.ndarray
    max_dev: float
    residual: float


def _row_array(row, t):
    if isinstance(row, dict):
        v = np.zeros(2 ** t)
        for chi, p in row.items():
            idx = sum(int(x) << s for s, x in enumerate(chi))
            v[idx] += float(p)
        return v
    return np.asarray(row, dtype=float)


def solve_belief_based(kappa_rows: Sequence, pi_values: Sequence, q_star, eta, t: Optional[int] = None):
    """q_t with kappa_i . q_t = (q* - pi_i) / (1 - pi_i) for every row.

    Rows are distributions over chi^t, given as dicts keyed by 0/1 tuples or as
    arrays indexed by the bitmask sum chi_s 2^s.  Among solutions, the one with
    the smallest maximal deviation from q* is chosen, then the smallest total
    deviation (two dual-simplex LPs, deterministic).
    """
    q = float(q_star)
    eta = float(eta)
    if t is None:
        first = kappa_rows[0]
        t = len(next(iter(first))) if isinstance(first, dict) else int(round(math.log2(len(first))))
    n = 2 ** t
    A = np.array([_row_array(r, t) for r in kappa_rows]) if len(kappa_rows) else np.zeros((0, n))
    pis = np.asarray(pi_values, dtype=float)
    if np.any(pis >= eta * q):
        i = int(np.argmax(pis >= eta * q))
        raise InfeasibleBelief(f"row {i}: pi = {pis[i]:.4g} >= eta q* = {eta * q:.4g}",
                               bound=eta * q, value=pis[i])
    rhs = (q - pis) / (1 - pis)
    # variables: d_plus, d_minus (n each) and s; q = q* + d_plus - d_minus
    m = A.shape[0]
    Aeq = np.hstack([A, -A, np.zeros((m, 1))])
    beq = rhs - q * A.sum(axis=1)
    # d_plus_i + d_minus_i <= s bounds |q_i - q*| (only one side is active at an optimum)
    eye = sparse.identity(n, format="csr")
    Aub = sparse.hstack([eye, eye, sparse.csr_matrix(-np.ones((n, 1)))], format="csr")
    Aeq = sparse.csr_matrix(Aeq)
    bub = np.zeros(n)
    bounds = [(0, None)] * (2 * n) + [(0, None)]
    c1 = np.zeros(2 * n + 1)
    c1[-1] = 1.0
    res = linprog(c1, A_ub=Aub, b_ub=bub, A_eq=Aeq, b_eq=beq, bounds=bounds, method="highs-ds")
    if res.status != 0:
        raise Infeasible("belief-based system has no solution", row=_first_bad_row(A, rhs, q))
    s_star = res.x[-1]
    c2 = np.concatenate([np.ones(2 * n), [0.0]])
    bounds2 = bounds[:-1] + [(0, s_star * (1 + 1e-9) + 1e-13)]
    res2 = linprog(c2, A_ub=Aub, b_ub=bub, A_eq=Aeq, b_eq=beq, bounds=bounds2, method="highs-ds")
    x = res2.x if res2.status == 0 else res.x
    sol = q + x[:n] - x[n:2 * n]
    # polish equalities with the minimum-norm correction
    if m:
        r = rhs - A @ sol
        sol = sol + np.linalg.lstsq(A, r, rcond=None)[0]
    resid = float(np.max(np.abs(A @ sol - rhs))) if m else 0.0
    lo, hi = eta * q, 1 - eta * q
    if np.any(sol < lo - 1e-12) or np.any(sol > hi + 1e-12):
        j = int(np.argmax((sol < lo - 1e-12) | (sol > hi + 1e-12)))
        raise BoxViolated(f"entry {j} = {sol[j]:.6g} outside [{lo:.4g}, {hi:.4g}]",
                          bound=(lo, hi), value=sol[j])
    return BeliefBasedSolution(sol, float(np.max(np.abs(sol - q))), resid)


def _first_bad_row(A, rhs, q):
    n = A.shape[1]
    for i in range(1, A.shape[0] + 1):
        Aeq = np.hstack([A[:i], -A[:i]])
        res = linprog(np.zeros(2 * n), A_eq=Aeq, b_eq=rhs[:i] - q * A[:i].sum(axis=1),
                      bounds=[(0, None)] * (2 * n), method="highs-ds")
        if res.status != 0:
            return i - 1
    return None


# ---------------------------------------------------------------------------
# player 2's view of the building phase

def _bit(idx, s):
    return (idx >> s) & 1


class BuildingFilter:
    """Strategic-type probabilities of indicator histories on the building path.

    ``P[t][chi]`` is the probability (strategic type) of chi^t together with
    b_0 = ... = b_{t-1} = b'; ``Q[t][chi]`` is the strategic weight on a* in
    period t.  Periods up to M use the belief-free rule, later ones the
    belief-based solve, up to ``t_exact``; the weight is q* afterwards.
    """

    def __init__(self, q_star, rho, pi0, K, M, eta, t_exact=T_EXACT):
        self.q, self.rho, self.pi0 = float(q_star), float(rho), float(pi0)
        self.K, self.M, self.eta, self.t_exact = K, M, float(eta), t_exact
        self.P = [np.ones(1)]
        self.Q = []
        self.pi_tilde = [self.pi0]          # hypothetical observer on the all-a* path
        self.max_dev = 0.0
        self.max_resid = 0.0
        for t in range(t_exact + 1):
            self.Q.append(self._mixing(t))
            if t < t_exact:
                self._extend(t)

    def _extend(self, t):
        P, Qt = self.P[t], self.Q[t]
        idx = np.arange(2 ** t)
        bfac = 1 - self.rho * _bit(idx, t - 1) if t >= 1 else np.ones(2 ** t)
        new = np.concatenate([P * (1 - Qt) * bfac, P * Qt * bfac])
        self.P.append(new)

    def commit_mass(self, t):
        return (1 - self.rho) ** max(t - 1, 0)

    def rows(self, t, size=None):
        """(N, obs, kappa row, pi) for every sample of the given size."""
        k = min(self.K, t) if size is None else size
        idx = np.arange(2 ** t)
        out = []
        for N in combinations(range(t), k):
            for obs in range(2 ** k):
                mask = np.ones(2 ** t, dtype=bool)
                for j, s in enumerate(N):
                    mask &= _bit(idx, s) == _bit(obs, j)
                ps = np.where(mask, self.P[t], 0.0)
                tot = ps.sum()
                if tot <= 0:
                    continue
                all_one = obs == 2 ** k - 1
                pc = self.pi0 * self.commit_mass(t) if all_one else 0.0
                pi = pc / (pc + (1 - self.pi0) * tot)
                out.append((N, obs, ps / tot, pi))
        return out

    def _mixing(self, t):
        n = 2 ** t
        if t <= self.M:
            q = np.full(n, self.q)
            pt = self.pi_tilde[-1]
            q[n - 1] = belief_free_q(self.q, pt) if pt < self.q else 0.0
            self.pi_tilde.append(self._observer_step(pt, q[n - 1]))
            return q
        rows = self.rows(t)
        sol = solve_belief_based([r[2] for r in rows], [r[3] for r in rows], self.q, self.eta, t=t)
        self.max_dev = max(self.max_dev, sol.max_dev)
        self.max_resid = max(self.max_resid, sol.residual)
        return sol.q

    @staticmethod
    def _observer_step(pi, q_all):
        if q_all <= 0:
            return 1.0
        o = pi / (1 - pi) / q_all
        return o / (1 + o)

    def indifference_error(self, t, N, obs_bits):
        """|P(a_t = a* | h2^t) - q*| at an exactly tracked period."""
        idx = np.arange(2 ** t)
        mask = np.ones(2 ** t, dtype=bool)
        for s, x in zip(N, obs_bits):
            mask &= _bit(idx, s) == x
        ps = np.where(mask, self.P[t], 0.0)
        tot = ps.sum()
        if tot <= 0:
            return 0.0
        pc = self.pi0 * self.commit_mass(t) if all(obs_bits) else 0.0
        pi = pc / (pc + (1 - self.pi0) * tot)
        return abs(pi + (1 - pi) * float(ps @ self.Q[t]) / tot - self.q)

    def q_at(self, t, chi_idx):
        if t > self.t_exact:
            return self.q
        return float(self.Q[t][chi_idx])


# ---------------------------------------------------------------------------
# assembled construction

@dataclass
class NetworkConstruction:
    automaton: PhaseAutomaton
    network: NetworkSpec
    params: dict
    filter: Optional[BuildingFilter] = None
    variant: str = "lack_of_commitment"


def _choose_eta(q, rho, pi0, K, M, t_exact, eta0=0.25, min_eta=1e-4):
    eta = eta0
    last = None
    while eta >= min_eta:
        if pi0 < float(pi0_eta_bound(Fraction(eta).limit_denominator(10 ** 9), Fraction(q).limit_denominator(10 ** 9), M)):
            try:
                return eta, BuildingFilter(q, rho, pi0, K, M, eta, t_exact)
            except (BoxViolated, InfeasibleBelief, Infeasible) as exc:
                last = exc
        eta /= 2
    raise PreconditionFail(f"no eta >= {min_eta} works for pi0 = {pi0:.3g}" + (f" ({last})" if last else ""),
                           bound="pi0 < pi0_bar(eta)", value=pi0)


def build_theorem3(game: StageGame, delta, pi0, network: NetworkSpec, t_exact: int = T_EXACT,
                   eta: Optional[float] = None, entry_cutoff: str = "indifference") -> NetworkConstruction:
    """Three-phase construction under network sampling.

    The automaton is player 1's view: player 2's actions are averaged over her
    sample, the entry lottery uses the current draw, and the strategic mixing
    in the building phase is stored as its belief-free value q* (player 1 is
    indifferent, so values do not depend on it).

    For coordination games ``entry_cutoff="indifference"`` solves the entry
    lottery from player 1's building indifference (and fails when no cutoff in
    [0,1] exists); ``"closed_form"`` uses the (a', b') closed form instead,
    which is kept for inspection with the deviation checker.
    """
    d = as_number(delta)
    pi0 = float(as_number(pi0))
    cls = G.classify(game)
    if not (cls.strict_lack_of_commitment or cls.generalized_coordination):
        raise PreconditionFail("game is neither strict-lack-of-commitment nor generalized coordination",
                               bound="Definition 1 or 2")
    c = G.derive_constants(game, network.K_cap)
    a_s, b_s, a_p, b_p = c.a_star, c.b_star, c.a_prime, c.b_prime
    gamma = network.p_last_bound()
    K = network.K_cap
    if a_p == a_s:
        st = simple_state("S", "maintenance", pure(a_s), pure(b_s), [Rule("*", "*", "S")])
        aut = PhaseAutomaton("theorem3_pooling", game, {"S": st}, "S", a_s, {"delta": d}, None, K)
        return NetworkConstruction(aut, network, {"delta": d, "pi0": pi0}, None, "trivial")
    variant = "lack_of_commitment" if cls.strict_lack_of_commitment else "coordination"
    q = c.q_star
    b_ss = c.b_starstar
    rho, V1p = solve_building_rho(game, d, gamma, variant)
    params = {"delta": d, "pi0": pi0, "gamma": gamma, "K": K, "rho": rho, "V1_prime": V1p,
              "q_star": q, "variant": variant}
    one = Fraction(1) if isinstance(d, Fraction) else 1.0
    states: Dict[str, State] = {}

    def building_rules(after_entry_a_star, after_entry_other):
        return (Rule(a_s, b_ss, after_entry_a_star), Rule("*", b_ss, after_entry_other),
                Rule(a_s, b_p, "B1"), Rule("*", b_p, "B0"), Rule("*", "*", "P"))

    qmix = MixedAction.mix(a_s, a_p, q)
    if variant == "lack_of_commitment":
        ms = solve_maintenance_beta(game, d, gamma)
        xi, _ = xi_cutoffs(game, d, ms.beta)
        p_star, b_dd = G.indifference_p_star(game)
        a_dd = c.a_dprime
        params.update(beta=ms.beta, V1=ms.V1, xi_bar=xi, p_star=p_star, X=ms.X, Y=ms.Y, Z=ms.Z)
        # exact arithmetic is lost through the square root; keep floats from here on
        beta = ms.beta
        maint_rules = (Rule(a_s, b_s, "M"), Rule("*", b_s, "MD"), Rule("*", "*", "P"))
        mix_dev = MixedAction.mix(a_s, a_dd, float(p_star))
        reply_dev = MixedAction.mix(b_s, b_dd, beta)
        states["B0"] = State("B0", "building", (Branch(1.0, qmix, pure(b_p), building_rules("M", "E"), True),),
                             beliefs=(), belief_source="table")
        states["B1"] = State("B1", "building",
                             (Branch(1.0, qmix, MixedAction.mix(b_ss, b_p, float(rho)),
                                     building_rules("M", "E"), True),),
                             beliefs=(), belief_source="table")
        states["E"] = State("E", "maintenance",
                            (Branch(float(xi), mix_dev, reply_dev, maint_rules),
                             Branch(1.0, pure(a_s), pure(b_s), maint_rules)),
                            beliefs=(), belief_source="fixed", offpath_belief=0.0)
        states["M"] = State("M", "maintenance", (Branch(1.0, pure(a_s), pure(b_s), maint_rules),),
                            beliefs=(0, 1))
        states["MD"] = State("MD", "maintenance", (Branch(1.0, mix_dev, reply_dev, maint_rules),),
                             beliefs=(0,), offpath_belief=0.0, belief_source="fixed")
    else:
        if entry_cutoff == "closed_form":
            xi_c = xi_cutoffs_coordination(game, d)
        else:
            xi_c = coordination_cutoff(game, d, b_s)
        if not 0 <= xi_c <= 1:
            raise OutOfRange(f"coordination entry cutoff {float(xi_c):.6g} outside [0,1]",
                             bound="[0,1]", value=xi_c)
        params.update(xi_bar_prime=xi_c)
        states["B0"] = State("B0", "building", (Branch(one, qmix, pure(b_p), building_rules("M1", "E"), True),),
                             beliefs=(), belief_source="table")
        states["B1"] = State("B1", "building",
                             (Branch(one, qmix, MixedAction.mix(b_ss, b_p, rho), building_rules("M1", "E"), True),),
                             beliefs=(), belief_source="table")
        first = (Rule("*", b_s, "M"), Rule("*", "*", "P"))
        states["M1"] = simple_state("M1", "maintenance", pure(a_s), pure(b_s), first)
        states["E"] = State("E", "maintenance",
                            (Branch(xi_c, pure(a_p), pure(b_p), (Rule("*", "*", "P"),)),
                             Branch(one, pure(a_s), pure(b_s), first)),
                            beliefs=(0,), offpath_belief=Fraction(0), belief_source="fixed")
        states["M"] = simple_state("M", "maintenance", pure(a_s), pure(b_s), [Rule("*", "*", "M")])
    states["P"] = simple_state("P", "punishment", pure(a_p), pure(b_p), [Rule("*", "*", "P")],
                               beliefs=(0,), offpath_belief=Fraction(0), belief_source="fixed")
    aut = PhaseAutomaton(f"theorem3_{variant}", game, states, "B0", a_s, params, None, K)
    M = minimal_M(K)
    if eta is None:
        eta, filt = _choose_eta(float(q), float(rho), pi0, K, M, t_exact)
    else:
        if pi0 >= float(pi0_eta_bound(Fraction(eta), Fraction(q), M)):
            raise PreconditionFail("pi0 >= pi0_bar(eta)", bound=pi0_eta_bound(Fraction(eta), Fraction(q), M), value=pi0)
        filt = BuildingFilter(q, rho, pi0, K, M, eta, t_exact)
    params.update(eta=eta, M=M, pi0_bar_eta=float(pi0_eta_bound(Fraction(eta).limit_denominator(10 ** 9),
                                                                Fraction(q).limit_denominator(10 ** 9), M)))
    return NetworkConstruction(aut, network, params, filt, variant)


# ---------------------------------------------------------------------------
# simulation with private samples

@dataclass
class NetworkSimResult:
    phase_counts: Dict[str, int]
    disc_u1: np.ndarray
    max_pi_tilde: float
    ic_samples: np.ndarray        # indifference errors at sampled player-2 histories


def simulate_network(con: NetworkConstruction, n_runs: int, horizon: int, seed: int,
                     commit_prob: Optional[float] = None, n_ic_samples: int = 0) -> NetworkSimResult:
    """Paths under the equilibrium measure with player 2's private samples.

    Only whether t-1 is sampled matters for player 2's action; the full sample
    is drawn for the indifference checks at periods up to ``t_exact``.
    """
    aut, net, prm, filt = con.automaton, con.network, con.params, con.filter
    g = aut.game
    rng = np.random.default_rng(seed)
    pi0 = prm["pi0"] if commit_prob is None else commit_prob
    A, B = g.actions_p1, g.actions_p2
    ia = {a: i for i, a in enumerate(A)}
    ib = {b: i for i, b in enumerate(B)}
    c = G.derive_constants(g)
    a_s, b_s, a_p, b_p, b_ss = ia[c.a_star], ib[c.b_star], ia[c.a_prime], ib[c.b_prime], ib[c.b_starstar]
    U1 = np.array(g.U1, dtype=float)
    d = float(prm["delta"])
    n = n_runs
    commit = rng.random(n) < pi0
    # phases: 0 building, 1 entry (s*+1), 2 maintenance, 3 punishment
    phase = np.zeros(n, dtype=int)
    prev_a = np.full(n, -1)
    chi = np.zeros(n, dtype=np.int64)
    chi_ok = np.ones(n, dtype=bool)       # still tracking chi (t <= t_exact)
    pi_t = np.full(n, float(prm["pi0"]))
    max_pi_tilde = 0.0
    disc = np.zeros(n)
    w = 1.0
    rho = float(prm["rho"])
    lc = con.variant == "lack_of_commitment"
    if lc:
        beta, xi_bar, p_star = prm["beta"], float(prm["xi_bar"]), float(prm["p_star"])
        a_dd = ia[c.a_dprime]
        _, b_dd = G.indifference_p_star(g)
        b_dd = ib[b_dd]
    else:
        xi_bar = float(prm["xi_bar_prime"])
    ic = []
    cache = {}
    ic_left = n_ic_samples
    for t in range(horizon):
        gl = net.p_last(t)
        sampled = rng.random(n) < gl
        xi = rng.random(n)
        u = rng.random(n)
        v = rng.random(n)
        a = np.empty(n, dtype=int)
        b = np.empty(n, dtype=int)
        # --- building
        m = phase == 0
        if m.any():
            if t <= filt.t_exact:
                qs = filt.Q[t][np.where(chi_ok, chi, 0)]
            else:
                qs = np.full(n, float(filt.q))
            qs = qs[m]
            am = np.where(commit[m] | (u[m] < qs), a_s, a_p)
            saw_star = sampled[m] & (prev_a[m] == a_s) & (t >= 1)
            rt = rho / gl if gl > 0 else 0.0
            bm = np.where(saw_star & (v[m] < rt), b_ss, b_p)
            a[m], b[m] = am, bm
            if t <= filt.M:
                max_pi_tilde = max(max_pi_tilde, float(filt.pi_tilde[t]))
        # --- entry period (decided by the current draw)
        m = phase == 1
        if m.any():
            if lc:
                lott = xi[m] <= xi_bar
                am = np.where(lott & ~commit[m], np.where(u[m] < p_star, a_s, a_dd), a_s)
                bt = 1 - (1 - beta) / gl
                bm = np.where(lott & sampled[m] & (v[m] >= bt), b_dd, b_s)
            else:
                lott = xi[m] <= xi_bar
                am = np.where(lott & ~commit[m], a_p, a_s)
                bm = np.where(lott, b_p, b_s)
            a[m], b[m] = am, bm
        # --- maintenance
        m = phase == 2
        if m.any():
            if lc:
                dev = prev_a[m] != a_s
                am = np.where(dev & ~commit[m], np.where(u[m] < p_star, a_s, a_dd), a_s)
                bt = 1 - (1 - beta) / gl
                bm = np.where(dev & sampled[m] & (v[m] >= bt), b_dd, b_s)
            else:
                am = np.full(m.sum(), a_s)
                bm = np.full(m.sum(), b_s)
            a[m], b[m] = am, bm
        # --- punishment
        m = phase == 3
        a[m], b[m] = a_p, b_p
        a[commit] = a_s
        if ic_left > 0 and 1 <= t <= filt.t_exact:
            bidx = np.flatnonzero(phase == 0)[:ic_left]
            for i in bidx:
                N = tuple(sorted(sample_network(net, t, rng)))
                obs = tuple(int(_bit(int(chi[i]), s)) for s in N) if not commit[i] else (1,) * len(N)
                key = (t, N, obs)
                if key not in cache:
                    cache[key] = filt.indifference_error(t, N, obs)
                ic.append(cache[key])
            ic_left -= len(bidx)
        disc += w * U1[a, b]
        w *= d
        # --- transitions: entry after a* goes straight to maintenance, entry
        # after anything else meets the lottery first
        newp = phase.copy()
        m0 = phase == 0
        ent = m0 & (b == b_ss)
        newp[ent] = np.where(a[ent] == a_s, 2, 1)
        newp[m0 & (b != b_ss) & (b != b_p)] = 3
        m1 = phase == 1
        newp[m1 & (b == b_s)] = 2
        newp[m1 & (b != b_s)] = 3
        if lc:
            newp[(phase == 2) & (b != b_s)] = 3
        if t < filt.t_exact:
            chi = np.where(m0, chi | ((a == a_s).astype(np.int64) << t), chi)
        else:
            chi_ok[:] = False
        prev_a = a
        phase = newp
    names = {0: "building", 1: "entry", 2: "maintenance", 3: "punishment"}
    counts = {names[k]: int((phase == k).sum()) for k in names}
    return NetworkSimResult(counts, (1 - d) * disc, max_pi_tilde, np.array(ic))
