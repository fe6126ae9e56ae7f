"""Exception hierarchy shared by every analysis module."""


class FlowClassError(Exception):
    """Base class for all errors raised by flowclass."""


class InvalidDimensionError(FlowClassError, ValueError):
    pass


class InconsistentDimensionError(FlowClassError, ValueError):
    pass


class UnknownModelError(FlowClassError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else "unknown model"


class UnknownParameterError(FlowClassError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else "unknown parameter"


class BoundsError(FlowClassError, ValueError):
    pass


class EvaluationError(FlowClassError, ArithmeticError):
    """Vector field produced a non-finite value (or a malformed output).

    ``index`` holds the offending output component when it is known.
    """

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class NumericalFailure(FlowClassError, ArithmeticError):
    pass


class SingularMatrixError(NumericalFailure):
    pass


class StiffnessError(NumericalFailure):
    """Step size collapsed during adaptive integration."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class NotASaddleError(FlowClassError, ValueError):
    pass


class InvalidOrbitError(FlowClassError, ValueError):
    pass


class ModelParseError(FlowClassError, ValueError):
    """Diagnostic from the model-file parser.

    ``kind`` is one of ``syntax``, ``unknown-identifier``,
    ``duplicate-equation``, ``missing-equation``, ``invalid-bound``,
    ``duplicate-declaration``.
    """

    def __init__(self, kind, message, line, column=None):
        self.kind = kind
        self.line = line
        self.column = column
        loc = f"line {line}" if column is None else f"line {line}, column {column}"
        super().__init__(f"{loc}: {message}")
