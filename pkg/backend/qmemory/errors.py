"""Error hierarchy for qmemory.

Every error carries the CLI exit code it maps to:
0 ok, 1 semantic failure, 2 input failure, 3 numeric failure.
"""


class QMemoryError(Exception):
    """Base class for all qmemory errors."""

    exit_code = 3


class InputError(QMemoryError, ValueError):
    """Malformed input: bad files, labels, shapes or parameters."""

    exit_code = 2


class LabelError(InputError):
    pass


class DimensionError(InputError):
    pass


class NotHermitianError(InputError):
    pass


class GridError(InputError):
    pass


class SemanticError(QMemoryError):
    """An object is well-formed but violates a constraint of its type."""

    exit_code = 1


class InvalidProcessError(SemanticError):
    pass


class InvalidTesterError(SemanticError):
    pass


class InvalidRetrieverError(SemanticError):
    pass


class WitnessRejectedError(SemanticError):
    pass


class FrameError(SemanticError):
    pass


class NumericError(QMemoryError):
    """A numerical procedure failed to deliver a trustworthy result."""

    exit_code = 3


class SolverError(NumericError):
    pass


class CutoffLeakageError(NumericError):
    pass


class QuadratureError(NumericError):
    pass
