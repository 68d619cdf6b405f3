"""Exception hierarchy.

Every error raised by the library derives from ``ReputationLabError`` so the
command line can map it to an exit code.  Precondition-style failures carry the
name and value of the bound that was violated.
"""


class ReputationLabError(Exception):
    exit_code = 4


class ValidationError(ReputationLabError):
    exit_code = 2


class ParseError(ValidationError):
    def __init__(self, message, line=None, column=None):
        where = ""
        if line is not None:
            where = f" (line {line}" + (f", column {column})" if column is not None else ")")
        super().__init__(message + where)
        self.line = line
        self.column = column


class PreconditionFail(ReputationLabError):
    exit_code = 3

    def __init__(self, message, bound=None, value=None):
        super().__init__(message)
        self.bound = bound
        self.value = value


# stage game
class AssumptionViolation(PreconditionFail):
    pass


class NoPureNE(PreconditionFail):
    pass


class Degenerate(PreconditionFail):
    pass


# beliefs
class BothZero(ReputationLabError):
    pass


class InconsistentHistory(ValidationError):
    pass


class CapExceeded(PreconditionFail):
    pass


# constructions
class DeltaTooLow(PreconditionFail):
    pass


class Condition3Missing(PreconditionFail):
    pass


class ComplexRoots(PreconditionFail):
    pass


class SpecViolation(ValidationError):
    pass


class OutOfRange(PreconditionFail):
    pass


class InfeasibleBelief(PreconditionFail):
    pass


class Infeasible(PreconditionFail):
    def __init__(self, message, row=None):
        super().__init__(message)
        self.row = row


class BoxViolated(PreconditionFail):
    pass


# signals
class DegenerateG(ReputationLabError):
    pass


class DomainError(ValidationError):
    pass


class UnboundedSignal(PreconditionFail):
    pass


class InfeasiblePi(PreconditionFail):
    pass


# verification
class NonFiniteValue(ReputationLabError):
    pass
