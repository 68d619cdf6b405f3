"""Command line entry point: ``reputation-lab <command> --config FILE``.

Exit codes: 0 success, 2 invalid input, 3 violated precondition, 4 internal.
"""
from __future__ import annotations

import argparse
import csv
import io
import logging
import os
import sys
from fractions import Fraction
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import bounded_memory as BM
from . import games as G
from . import network as NW
from . import signals as SG
from . import verification as V
from .config import ExperimentConfig, load
from .errors import PreconditionFail, ReputationLabError, ValidationError
from .numeric import as_number, fmt

log = logging.getLogger("reputation_lab")

THEOREMS = ("1", "1prime", "prop3", "welfare", "3", "4")
SWEEP_PARAMS = ("delta", "pi0", "K", "gamma", "q_star")


# ---------------------------------------------------------------------------
# output helpers

def _cell(v):
    if isinstance(v, Fraction):
        return fmt(v)
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return "" if v is None else str(v)


class Table:
    def __init__(self, columns: Sequence[str], rows: List[Sequence] = None, meta: Dict[str, object] = None):
        self.columns = list(columns)
        self.rows = [list(r) for r in (rows or [])]
        self.meta = dict(meta or {})

    def add(self, *row):
        self.rows.append(list(row))

    def to_csv(self) -> str:
        buf = io.StringIO()
        for k, v in self.meta.items():
            buf.write(f"# {k}={_cell(v)}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([_cell(x) for x in r])
        return buf.getvalue()

    def to_text(self) -> str:
        cells = [self.columns] + [[_cell(x) for x in r] for r in self.rows]
        widths = [max(len(r[i]) for r in cells) for i in range(len(self.columns))]
        lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in cells]
        lines.insert(1, "  ".join("-" * w for w in widths))
        return "\n".join(lines) + "\n"

    def render(self, style: str) -> str:
        return self.to_csv() if style == "csv" else self.to_text()


def _emit(args, table: Table, filename: str):
    out = sys.stdout
    out.write(table.render(args.format))
    if args.out_dir:
        os.makedirs(args.out_dir, exist_ok=True)
        with open(os.path.join(args.out_dir, filename), "w") as fh:
            fh.write(table.to_csv())


def _meta(cfg: ExperimentConfig, seed=None):
    return {"config_hash": cfg.hash(), "seed": cfg.seed if seed is None else seed}


# ---------------------------------------------------------------------------
# construction dispatch

def _need_delta(cfg):
    if cfg.delta is None:
        raise ValidationError("run.delta is required for this command")
    return cfg.delta


def build(cfg: ExperimentConfig, theorem: str, mode: Optional[str] = None):
    """Build the requested construction; returns (automaton, extra) where
    extra is the network construction for theorem 3."""
    g = cfg.game
    d = _need_delta(cfg)
    K = 1 if cfg.K is None else cfg.K
    mode = mode or cfg.options.get("mode", "half")
    if theorem == "1":
        return BM.build_theorem1(g, d, cfg.pi0, K, mode=mode), None
    if theorem == "1prime":
        return BM.build_theorem1prime(g, d, cfg.pi0, K), None
    if theorem == "prop3":
        return BM.build_prop3_tight(g, K, d, cfg.pi0), None
    if theorem == "welfare":
        return BM.build_welfare(g, d, cfg.pi0, K, cfg.options.get("q_used")), None
    if theorem == "3":
        if cfg.network is None:
            raise ValidationError("theorem 3 needs monitoring.network")
        con = NW.build_theorem3(g, d, cfg.pi0, cfg.network)
        return con.automaton, con
    if theorem == "4":
        if cfg.signals is None:
            raise ValidationError("theorem 4 needs monitoring.signals")
        return SG.build_theorem4_stmt2(g, d, cfg.pi0, K, cfg.signals), None
    raise ValidationError(f"unknown theorem {theorem!r}; choose from {', '.join(THEOREMS)}")


# ---------------------------------------------------------------------------
# commands

def cmd_classify(args, cfg):
    cls = G.classify(cfg.game)
    t = Table(["quantity", "value"], meta=_meta(cfg))
    for k, v in cls.as_dict().items():
        t.add(k, v)
    if cls.condition3_alpha is not None:
        t.add("condition3_alpha", cls.condition3_alpha)
        t.add("condition3_beta", cls.condition3_beta)
    try:
        c = G.derive_constants(cfg.game, 1 if cfg.K in (None, 0) else cfg.K)
        for k, v in c.as_dict().items():
            t.add(k, v)
    except ReputationLabError as exc:
        t.add("constants", f"unavailable: {exc}")
    _emit(args, t, "classify.csv")
    return 0


def cmd_construct(args, cfg):
    aut, con = build(cfg, args.theorem, args.mode)
    d = cfg.delta
    vals = aut.values(d)
    t = Table(["state", "phase", "value"], meta={**_meta(cfg), "automaton": aut.name})
    for name in aut.names:
        t.add(name, aut.states[name].phase, vals[name])
    if args.out_dir:
        os.makedirs(args.out_dir, exist_ok=True)
        with open(os.path.join(args.out_dir, "automaton.txt"), "w") as fh:
            fh.write(aut.to_text())
    _emit(args, t, "construct.csv")
    return 0


def cmd_verify(args, cfg):
    aut, con = build(cfg, args.theorem, args.mode)
    rep = V.one_shot_deviation_check(aut, cfg.game, cfg.delta)
    t = Table(["player", "state", "branch", "action", "belief", "gap"],
              meta={**_meta(cfg), "automaton": aut.name, "max_violation": rep.max_violation,
                    "ok": rep.ok})
    for key, gap in sorted(rep.gaps.items(), key=lambda kv: str(kv[0])):
        belief = key[4] if len(key) > 4 else ""
        t.add(key[0], key[1], key[2], key[3], belief, gap)
    _emit(args, t, "verify.csv")
    return 0


def _runs(args, cfg):
    n = cfg.n_runs if args.runs is None else args.runs
    if n <= 0:
        raise ValidationError("--runs must be positive")
    return n


def cmd_simulate(args, cfg):
    aut, con = build(cfg, args.theorem, args.mode)
    n = _runs(args, cfg)
    seed = cfg.seed if args.seed is None else args.seed
    horizon = args.horizon or cfg.horizon
    t = Table(["quantity", "mean", "std_error"], meta={**_meta(cfg, seed), "runs": n})
    if con is not None:
        res = NW.simulate_network(con, n, horizon or 2000, seed)
        t.add("p1_value", float(res.disc_u1.mean()), float(res.disc_u1.std(ddof=1) / np.sqrt(n)))
        for k, v in res.phase_counts.items():
            t.add(f"share_{k}", v / n, "")
    else:
        mc = V.mc_value(aut, cfg.game, cfg.delta, cfg.pi0, n, seed, delta_s=cfg.delta_s)
        t.add("p1_value", mc.value, mc.value_se)
        t.add("p2_welfare", mc.welfare, mc.welfare_se)
        if args.out_dir:
            tr = V.run_trace(aut, cfg.delta, cfg.pi0, seed, horizon=horizon)
            os.makedirs(args.out_dir, exist_ok=True)
            with open(os.path.join(args.out_dir, "trace.csv"), "w") as fh:
                fh.write(tr.to_csv(f"config_hash={cfg.hash()}\nseed={seed}"))
    _emit(args, t, "simulate.csv")
    return 0


def cmd_metrics(args, cfg):
    aut, _ = build(cfg, args.theorem, args.mode)
    horizon = args.horizon or cfg.horizon or 200
    series, cum = V.prediction_error_series(aut, cfg.game, cfg.pi0, horizon)
    herd = V.detect_herding(aut, min(horizon, 200))
    t = Table(["t", "kl", "cumulative_kl"],
              meta={**_meta(cfg), "gossner_budget": -np.log(float(cfg.pi0)), "herding_certificates": len(herd)})
    for i, (k, c) in enumerate(zip(series, cum)):
        t.add(i, float(k), float(c))
    _emit(args, t, "metrics.csv")
    return 0


def _sweep_point(cfg: ExperimentConfig, param: str, value):
    """Derived quantities at one grid point; errors become the status column."""
    g = cfg.game
    d = cfg.delta
    K = 1 if cfg.K is None else cfg.K
    gamma = cfg.network.p_last_bound() if cfg.network is not None else 1.0
    q_over = None
    if param == "delta":
        d = value
    elif param == "pi0":
        cfg = cfg.replace(pi0=value)
    elif param == "K":
        K = int(value)
    elif param == "gamma":
        gamma = float(value)
    elif param == "q_star":
        q_over = value
    c = G.derive_constants(g, max(K, 1))
    q = c.q_star if q_over is None else q_over
    row = {"q_star": q, "pi0_bar": G.pi0_bar(q, max(K, 1)) if q is not None and 0 < q < 1 else None}
    status = []

    def attempt(name, fn):
        try:
            row[name] = fn()
        except ReputationLabError as exc:
            row[name] = None
            status.append(f"{name}: {exc}")

    if d is not None:
        attempt("r", lambda: BM.solve_r(g, d))
        attempt("beta", lambda: NW.solve_maintenance_beta(g, d, gamma).beta)
        attempt("rho", lambda: NW.solve_building_rho(g, d, gamma)[0])
        if cfg.delta_s is not None:
            attempt("welfare_V2", lambda: BM.welfare_V2(g, d, cfg.delta_s, q_over))
    attempt("M", lambda: NW.minimal_M(max(K, 1)))
    return row, "; ".join(status) or "ok"


def cmd_sweep(args, cfg):
    if args.parameter not in SWEEP_PARAMS:
        raise ValidationError(f"--parameter must be one of {', '.join(SWEEP_PARAMS)}")
    grid = [x for x in (args.grid or "").split(",") if x.strip()]
    cols = ["r", "beta", "rho", "q_star", "pi0_bar", "welfare_V2", "M"]
    t = Table([args.parameter] + cols + ["status"], meta={**_meta(cfg), "parameter": args.parameter})
    for raw in grid:
        v = as_number(raw.strip())
        row, status = _sweep_point(cfg, args.parameter, v)
        t.add(v, *[row.get(c) for c in cols], status)
    _emit(args, t, "sweep.csv")
    return 0


QUANTITIES = ("q_star", "p_star", "delta_low", "delta_low_prime", "pi0_bar", "r", "beta", "rho",
              "xi_bar", "xi_bar_prime", "M", "prop3_delta", "welfare_V2", "q_hat", "stackelberg",
              "worst_ne", "minmax")


def solve_quantity(cfg: ExperimentConfig, name: str):
    g = cfg.game
    K = 1 if cfg.K is None else cfg.K
    gamma = cfg.network.p_last_bound() if cfg.network is not None else 1.0
    c = G.derive_constants(g, max(K, 1))
    simple = {"q_star": lambda: c.q_star, "p_star": lambda: c.p_star, "delta_low": lambda: c.delta_low,
              "delta_low_prime": lambda: c.delta_low_prime, "pi0_bar": lambda: c.pi0_bar,
              "stackelberg": lambda: c.u_star, "worst_ne": lambda: c.v1_low, "minmax": lambda: c.v1_minmax,
              "M": lambda: NW.minimal_M(max(K, 1))}
    if name in simple:
        return simple[name]()
    d = _need_delta(cfg)
    if name == "r":
        return BM.solve_r(g, d)
    if name == "beta":
        return NW.solve_maintenance_beta(g, d, gamma).beta
    if name == "rho":
        return NW.solve_building_rho(g, d, gamma)[0]
    if name in ("xi_bar", "xi_bar_prime"):
        beta = NW.solve_maintenance_beta(g, d, gamma).beta
        xi = NW.xi_cutoffs(g, d, beta)
        return xi[0] if name == "xi_bar" else xi[1]
    if name == "prop3_delta":
        return BM.prop3_delta_bound(g, d, K)
    if name == "welfare_V2":
        if cfg.delta_s is None:
            raise ValidationError("run.delta_s is required for welfare_V2")
        return BM.welfare_V2(g, d, cfg.delta_s)
    if name == "q_hat":
        if cfg.signals is None:
            raise ValidationError("monitoring.signals is required for q_hat")
        return SG.q_hat(c.q_star, SG.likelihood_bound(cfg.signals, c.a_star, c.a_prime))
    raise ValidationError(f"unknown quantity {name!r}; choose from {', '.join(QUANTITIES)}")


def cmd_solve(args, cfg):
    names = args.quantity.split(",") if args.quantity else ["q_star", "pi0_bar", "delta_low"]
    t = Table(["quantity", "value"], meta=_meta(cfg))
    for n in names:
        t.add(n.strip(), solve_quantity(cfg, n.strip()))
    _emit(args, t, "solve.csv")
    return 0


COMMANDS = {"classify": cmd_classify, "construct": cmd_construct, "verify": cmd_verify,
            "simulate": cmd_simulate, "metrics": cmd_metrics, "sweep": cmd_sweep, "solve": cmd_solve}


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="reputation-lab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", required=True)
        s.add_argument("--out-dir")
        s.add_argument("--seed", type=int)
        s.add_argument("--runs", type=int)
        s.add_argument("--horizon", type=int)
        s.add_argument("--format", choices=("csv", "table"), default="table")
        s.add_argument("-v", "--verbose", action="store_true")
        if name in ("construct", "verify", "simulate", "metrics"):
            s.add_argument("--theorem", default="1", choices=THEOREMS)
            s.add_argument("--mode", choices=("half", "calibrated"))
        if name == "sweep":
            s.add_argument("--parameter", required=True)
            s.add_argument("--grid", default="")
        if name == "solve":
            s.add_argument("--quantity")
    return p


def run(command: str, config_path: str, extra: Sequence[str] = ()) -> int:
    return main([command, "--config", config_path, *extra])


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load(args.config)
        return COMMANDS[args.command](args, cfg)
    except ReputationLabError as exc:
        kind = type(exc).__name__
        print(f"error ({kind}): {exc}", file=sys.stderr)
        return exc.exit_code
    except Exception as exc:  # pragma: no cover - last resort
        log.debug("internal error", exc_info=True)
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
