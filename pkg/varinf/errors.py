"""Exceptions raised by varinf. The CLI maps them to exit codes."""


class VarInfError(Exception):
    """Base class for all varinf errors."""

    exit_code = 1


class ConfigError(VarInfError):
    """An experiment or algorithm configuration is invalid."""

    exit_code = 2


class ModelParseError(VarInfError):
    """A model file could not be parsed.

    Parameters:
    - message (str): What went wrong.
    - line (int, optional): 1-based line number of the first malformed entry.
    - field (str, optional): Name of the offending field on that line.
    """

    exit_code = 3

    def __init__(self, message, line=None, field=None):
        self.line = line
        self.field = field
        location = ""
        if line is not None:
            location = f"line {line}"
            if field is not None:
                location += f", field '{field}'"
            location += ": "
        super().__init__(f"{location}{message}")


class EnumerationCapError(VarInfError):
    """The model is too large for exhaustive enumeration."""

    exit_code = 4


class GraphError(VarInfError, ValueError):
    """A graph violates a structural invariant."""


class BoxConstraintError(VarInfError, ValueError):
    """A pseudo-marginal point lies outside the open local polytope."""


class CountingSchemeError(VarInfError):
    """The LS-convex counting-number program did not converge.

    Parameters:
    - message (str): Solver message.
    - objective (float): Final least-squares objective.
    - constraint_residual (float): Largest node-constraint violation.
    """

    def __init__(self, message, objective=float('nan'), constraint_residual=float('nan')):
        self.objective = objective
        self.constraint_residual = constraint_residual
        super().__init__(f"{message} (objective={objective:.3e}, constraint residual={constraint_residual:.3e})")
