"""Small exact/float numeric helpers shared by the solvers.

Values are either ``Fraction`` (exact path) or ``float``.  Helpers here accept
both and keep exact inputs exact.
"""
from __future__ import annotations

import itertools
import math
from fractions import Fraction
from numbers import Rational
from typing import Sequence

import numpy as np

FLOAT_TOL = 1e-10


def as_number(x):
    """Parse ints, Fractions, floats and strings like ``"3/4"`` or ``"0.25"``.

    Integers, fractions and strings come back as ``Fraction``; floats stay
    floats.
    """
    if isinstance(x, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(x, Fraction):
        return x
    if isinstance(x, Rational):
        return Fraction(x)
    if isinstance(x, (float, np.floating)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return Fraction(int(x))
    if isinstance(x, str):
        s = x.strip()
        try:
            return Fraction(s)
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"not a number: {x!r}") from exc
    raise TypeError(f"not a number: {x!r}")


def is_exact(*values) -> bool:
    return all(isinstance(v, Fraction) for v in values)


def all_exact(values) -> bool:
    return all(isinstance(v, Fraction) for v in values)


def tol_for(*values) -> float:
    return 0 if is_exact(*values) else FLOAT_TOL


def to_float(x) -> float:
    return float(x)


def fmt(x) -> str:
    """Short text form: fractions as p/q, floats with repr precision."""
    if isinstance(x, Fraction):
        return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    if isinstance(x, float) and x.is_integer() and abs(x) < 1e15:
        return f"{x:.1f}"
    return repr(float(x))


def solve_square(A: Sequence[Sequence], b: Sequence):
    """Solve ``A x = b``.  Returns None when singular.

    Fractions use exact Gauss-Jordan elimination, anything else goes to numpy.
    """
    n = len(A)
    if n == 0:
        return []
    if all_exact(itertools.chain(itertools.chain.from_iterable(A), b)):
        M = [list(row) + [b[i]] for i, row in enumerate(A)]
        for col in range(n):
            piv = next((r for r in range(col, n) if M[r][col] != 0), None)
            if piv is None:
                return None
            M[col], M[piv] = M[piv], M[col]
            p = M[col][col]
            M[col] = [v / p for v in M[col]]
            for r in range(n):
                if r != col and M[r][col] != 0:
                    f = M[r][col]
                    M[r] = [vr - f * vc for vr, vc in zip(M[r], M[col])]
        return [M[i][n] for i in range(n)]
    Af = np.array(A, dtype=float)
    bf = np.array(b, dtype=float)
    if np.linalg.matrix_rank(Af) < n:
        return None
    return [float(v) for v in np.linalg.solve(Af, bf)]


def basic_solutions(E, e, G, h, exact: bool, tol: float = 1e-9):
    """Yield every basic feasible point of ``{x : E x = e, G x <= h}``.

    Brute force over subsets of inequalities made tight; only meant for the
    tiny polytopes that show up in 4x4 stage games.
    """
    n = len(E[0]) if E else len(G[0])
    k = n - len(E)
    if k < 0:
        return
    seen = set()
    for rows in itertools.combinations(range(len(G)), k):
        A = [list(r) for r in E] + [list(G[i]) for i in rows]
        rhs = list(e) + [h[i] for i in rows]
        x = solve_square(A, rhs)
        if x is None:
            continue
        ok = True
        for gi, hi in zip(G, h):
            lhs = sum(g * xi for g, xi in zip(gi, x))
            if (lhs > hi) if exact else (lhs > hi + tol):
                ok = False
                break
        if not ok:
            continue
        key = tuple(x) if exact else tuple(round(v, 12) for v in x)
        if key in seen:
            continue
        seen.add(key)
        yield x


def kl_divergence(p, q) -> float:
    """Relative entropy d(p||q) in nats with 0 log 0 = 0; returns inf when
    p puts mass where q has none."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError("shape mismatch")
    mask = p > 0
    if np.any(q[mask] <= 0):
        return math.inf
    with np.errstate(over="ignore", divide="ignore"):
        return float(np.sum(p[mask] * np.log(p[mask] / q[mask])))


def total_variation(p, q) -> float:
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    return 0.5 * float(np.abs(p - q).sum())


def truncation_horizon(delta, tol: float = 1e-10) -> int:
    """Smallest T with delta**T < tol (remaining discounted weight)."""
    d = float(delta)
    if d <= 0:
        return 1
    if d >= 1:
        raise ValueError("delta must be below 1")
    return max(1, int(math.ceil(math.log(tol) / math.log(d))))
