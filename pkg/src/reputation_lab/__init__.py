"""Reputation games with bounded memory, network sampling and private signals."""
from .errors import (PreconditionFail, ReputationLabError, ValidationError)
from .games import MixedAction, StageGame, classify, derive_constants
from .automaton import PhaseAutomaton
from . import library

__all__ = ["MixedAction", "StageGame", "PhaseAutomaton", "classify", "derive_constants", "library",
           "ReputationLabError", "ValidationError", "PreconditionFail"]
__version__ = "0.1.0"
