"""Exception types shared across the package."""


class AnonError(Exception):
    """Base class for all errors raised by this package."""


class IngestError(AnonError):
    """CSV input could not be turned into a relation."""


class SchemaError(AnonError):
    """An attribute name does not exist in (or conflicts with) a schema."""


class ContractError(AnonError):
    """A call violated a documented precondition (shape mismatch, bad indices)."""


class EvalError(AnonError):
    """A bound expression could not be evaluated (missing variable, zero division)."""


class DslError(AnonError):
    """Base class for constraint-language errors; carries a source position."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        loc = ""
        if line is not None:
            loc = f"line {line}" + (f", col {column}" if column is not None else "")
            loc += ": "
        super().__init__(loc + message)


class ParseError(DslError):
    """The constraint text does not match the grammar."""


class SemanticError(DslError):
    """The constraint text parses but is not a legal constraint."""


class InferenceError(AnonError):
    """An inference operation was applied to an unsuitable constraint set."""


class OracleCapError(AnonError):
    """The exhaustive oracle was asked to handle more rows than its cap allows."""


class LintWarning(UserWarning):
    """Non-fatal constraint smell, e.g. a fixed bound off the k grid."""
