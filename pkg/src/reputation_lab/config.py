"""Experiment configuration: YAML blocks for the game, types, monitoring and run.

Numbers may be written as decimals or as exact fractions ``"p/q"``; integers
and fractions feed the exact code paths, decimals the float paths.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, Optional

import yaml

from . import library
from .errors import ParseError, ValidationError
from .games import StageGame
from .network import NetworkSpec
from .numeric import as_number, fmt
from .signals import SignalStructure

TOP_KEYS = {"game", "type", "monitoring", "run", "options"}


def _num(x, where):
    if isinstance(x, str) and x.strip().lower() in ("inf", "nan"):
        raise ValidationError(f"{where}: non-finite value {x!r}")
    try:
        return as_number(x)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{where}: {exc}") from None


def _dump_num(x):
    if isinstance(x, Fraction):
        return int(x) if x.denominator == 1 else fmt(x)
    return x


@dataclass
class ExperimentConfig:
    game: StageGame
    pi0: Any
    commitment_action: Optional[str] = None
    K: Optional[int] = None
    network: Optional[NetworkSpec] = None
    signals: Optional[SignalStructure] = None
    delta: Any = None
    delta_s: Any = None
    seed: int = 0
    n_runs: int = 10_000
    horizon: Optional[int] = None
    options: Dict[str, Any] = field(default_factory=dict)
    builtin: Optional[str] = None

    def __post_init__(self):
        if self.K is not None and self.network is not None:
            raise ValidationError("monitoring: give either K or a network, not both")
        if self.K is not None and self.K < 0:
            raise ValidationError("monitoring.K must be nonnegative")
        if self.commitment_action is not None and self.commitment_action not in self.game.actions_p1:
            raise ValidationError(f"type.commitment_action {self.commitment_action!r} is not an action")
        if self.signals is not None:
            missing = set(self.game.actions_p1) - set(self.signals.actions)
            if missing:
                raise ValidationError(f"monitoring.signals: no row for {sorted(missing)}")
        if not 0 < self.pi0 < 1:
            raise ValidationError("type.pi0 must lie in (0,1)")
        if self.delta is not None and not 0 <= self.delta < 1:
            raise ValidationError("run.delta must lie in [0,1)")
        if self.n_runs < 0:
            raise ValidationError("run.n_runs must be nonnegative")

    @property
    def mode(self) -> str:
        parts = []
        if self.K is not None:
            parts.append("K")
        if self.network is not None:
            parts.append("network")
        if self.signals is not None:
            parts.append("signals")
        return "+".join(parts) or "none"

    # -- serialization
    def to_dict(self) -> dict:
        g = self.game
        if self.builtin:
            game = {"builtin": self.builtin}
        else:
            game = {"actions_p1": list(g.actions_p1), "actions_p2": list(g.actions_p2),
                    "u1": [[_dump_num(v) for v in row] for row in g.u1],
                    "u2": [[_dump_num(v) for v in row] for row in g.u2]}
            if g.order_p1:
                game["order_p1"] = list(g.order_p1)
            if g.order_p2:
                game["order_p2"] = list(g.order_p2)
            if g.name:
                game["name"] = g.name
        typ = {"pi0": _dump_num(self.pi0)}
        if self.commitment_action:
            typ["commitment_action"] = self.commitment_action
        mon: Dict[str, Any] = {}
        if self.K is not None:
            mon["K"] = self.K
        if self.network is not None:
            n = self.network
            mon["network"] = {"kind": n.kind, "K_cap": n.K_cap, "gamma": n.gamma, "p": n.p}
        if self.signals is not None:
            s = self.signals
            mon["signals"] = {"labels": list(s.signals),
                              "rows": {a: [_dump_num(s.f[a][x]) for x in s.signals] for a in s.f}}
            if s.order:
                mon["signals"]["order"] = list(s.order)
        run: Dict[str, Any] = {"seed": self.seed, "n_runs": self.n_runs}
        if self.delta is not None:
            run["delta"] = _dump_num(self.delta)
        if self.delta_s is not None:
            run["delta_s"] = _dump_num(self.delta_s)
        if self.horizon is not None:
            run["horizon"] = self.horizon
        out = {"game": game, "type": typ, "monitoring": mon, "run": run}
        if self.options:
            out["options"] = dict(self.options)
        return out

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)

    def hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def __eq__(self, other):
        return isinstance(other, ExperimentConfig) and self.to_dict() == other.to_dict()

    def replace(self, **kw) -> "ExperimentConfig":
        d = dict(self.__dict__)
        d.update(kw)
        return ExperimentConfig(**d)


def _game(block) -> tuple:
    if not isinstance(block, dict):
        raise ValidationError("game: expected a mapping")
    if "builtin" in block:
        name = block["builtin"]
        if name not in library.GAMES:
            raise ValidationError(f"game.builtin: unknown game {name!r}; known: {sorted(library.GAMES)}")
        return library.GAMES[name](), name
    for k in ("actions_p1", "actions_p2", "u1", "u2"):
        if k not in block:
            raise ValidationError(f"game: missing {k}")
    u1 = [[_num(v, "game.u1") for v in row] for row in block["u1"]]
    u2 = [[_num(v, "game.u2") for v in row] for row in block["u2"]]
    try:
        g = StageGame(tuple(map(str, block["actions_p1"])), tuple(map(str, block["actions_p2"])),
                      u1, u2, order_p1=tuple(block["order_p1"]) if block.get("order_p1") else None,
                      order_p2=tuple(block["order_p2"]) if block.get("order_p2") else None,
                      name=block.get("name", ""))
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"game: {exc}") from None
    return g, None


def _network(block) -> NetworkSpec:
    if not isinstance(block, dict) or "kind" not in block:
        raise ValidationError("monitoring.network: expected a mapping with a kind")
    if block["kind"] == "custom":
        raise ValidationError("monitoring.network: custom samplers are not expressible in a config")
    return NetworkSpec(block["kind"], int(block.get("K_cap", 1)),
                       gamma=float(_num(block.get("gamma", 1), "network.gamma")),
                       p=float(_num(block.get("p", 0.5), "network.p")))


def _signals(block) -> SignalStructure:
    if not isinstance(block, dict) or "labels" not in block or "rows" not in block:
        raise ValidationError("monitoring.signals: expected labels and rows")
    labels = tuple(map(str, block["labels"]))
    rows = {}
    for a, row in block["rows"].items():
        if len(row) != len(labels):
            raise ValidationError(f"monitoring.signals.rows.{a}: expected {len(labels)} entries")
        rows[str(a)] = {s: _num(v, f"signals.rows.{a}") for s, v in zip(labels, row)}
    order = tuple(block["order"]) if block.get("order") else None
    return SignalStructure(labels, rows, order)


def from_dict(d: dict) -> ExperimentConfig:
    if not isinstance(d, dict):
        raise ValidationError("config must be a mapping")
    unknown = set(d) - TOP_KEYS
    if unknown:
        raise ValidationError(f"unknown top-level keys {sorted(unknown)}")
    if "game" not in d or "type" not in d:
        raise ValidationError("config needs game and type blocks")
    game, builtin = _game(d["game"])
    typ = d["type"] or {}
    if "pi0" not in typ:
        raise ValidationError("type: missing pi0")
    mon = d.get("monitoring") or {}
    run = d.get("run") or {}
    bad = set(mon) - {"K", "network", "signals"}
    if bad:
        raise ValidationError(f"monitoring: unknown keys {sorted(bad)}")
    return ExperimentConfig(
        game=game, builtin=builtin,
        pi0=_num(typ["pi0"], "type.pi0"),
        commitment_action=typ.get("commitment_action"),
        K=int(mon["K"]) if "K" in mon else None,
        network=_network(mon["network"]) if "network" in mon else None,
        signals=_signals(mon["signals"]) if "signals" in mon else None,
        delta=_num(run["delta"], "run.delta") if "delta" in run else None,
        delta_s=_num(run["delta_s"], "run.delta_s") if "delta_s" in run else None,
        seed=int(run.get("seed", 0)),
        n_runs=int(run.get("n_runs", 10_000)),
        horizon=int(run["horizon"]) if run.get("horizon") is not None else None,
        options=dict(d.get("options") or {}),
    )


def parse(text: str) -> ExperimentConfig:
    try:
        d = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark
        raise ParseError(str(exc.problem or exc), line=mark.line + 1 if mark else None,
                         column=mark.column + 1 if mark else None) from None
    except yaml.YAMLError as exc:
        raise ParseError(str(exc)) from None
    return from_dict(d)


def load(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ValidationError(f"cannot read config: {exc}") from None
    return parse(text)
