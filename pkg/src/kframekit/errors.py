"""Exception hierarchy.

Two families matter to callers: ``InputError`` (the data violates a
precondition) and ``NumericalFailure`` (an iteration gave up).  The CLI maps
them to distinct exit codes.
"""


class KFrameError(Exception):
    """Base class for every error raised by kframekit."""


class InputError(KFrameError, ValueError):
    pass


class NumericalFailure(KFrameError, ArithmeticError):
    pass


# matrix kernel
class NonFiniteInput(InputError):
    pass


class NonSquare(InputError):
    pass


class AsymmetricInput(InputError):
    pass


class NotPSD(InputError):
    pass


class DimensionMismatch(InputError):
    pass


class LengthMismatch(InputError):
    pass


class ConvergenceFailure(NumericalFailure):
    pass


class IterationCapExceeded(NumericalFailure):
    pass


# scalability
class NotKsFrame(InputError):
    pass


class NotCommuting(InputError):
    pass


class NotCoisometry(InputError):
    pass


class SingularT(InputError):
    pass


# piecewise
class InfeasiblePiece(KFrameError):
    """A restricted scaling problem has no exact solution (a result, not bad input)."""

    def __init__(self, message, piece=None, residual=None):
        super().__init__(message)
        self.piece = piece
        self.residual = residual


class BadIndexSet(InputError):
    pass


class PreconditionFailed(InputError):
    pass


class NotUnitary(InputError):
    pass


class IntertwiningFailed(InputError):
    pass


class NotKps(InputError):
    pass


# variational
class NotCoercive(InputError):
    pass


class NotSymmetric(InputError):
    pass


class SingularFrameOperator(InputError):
    pass


class ZeroTarget(InputError):
    pass


class InvalidConvexSet(InputError):
    pass


class MaxIterExceeded(NumericalFailure):
    """The projected iteration hit its cap before the stopping test passed.

    ``error_bound`` is the a-priori distance bound ``rho**k |v1 - v0| / (1 - rho)``.
    """

    def __init__(self, message, iterate=None, iterations=0, last_step=float("nan"),
                 error_bound=float("nan")):
        super().__init__(message)
        self.iterate = iterate
        self.iterations = iterations
        self.last_step = last_step
        self.error_bound = error_bound


# problem files
class SchemaError(InputError):
    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path


class ProblemSyntaxError(InputError):
    def __init__(self, message, line, column):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column
