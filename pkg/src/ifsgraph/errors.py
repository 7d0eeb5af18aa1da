"""Exception hierarchy shared by every module of the package."""


class IFSGraphError(Exception):
    """Base class; ``code`` is the machine-readable tag used in CLI error JSON."""

    code = "error"

    def to_dict(self):
        return {"error": self.code, "message": str(self)}


class DivisionByZero(IFSGraphError, ZeroDivisionError):
    code = "division_by_zero"


class IndeterminateSign(IFSGraphError):
    code = "indeterminate_sign"


class ContextError(IFSGraphError):
    code = "invalid_context"


class SingletonAttractor(IFSGraphError):
    code = "singleton_attractor"


class InvalidIFS(IFSGraphError):
    code = "invalid_ifs"


class OracleBudgetExceeded(IFSGraphError):
    code = "oracle_budget_exceeded"


class BudgetExceeded(IFSGraphError):
    code = "budget_exceeded"


class TruncatedGraph(IFSGraphError):
    code = "truncated_graph"


class MultipleSinkComponents(IFSGraphError):
    code = "multiple_sink_components"

    def __init__(self, sinks):
        self.sinks = [sorted(s) for s in sinks]
        super().__init__(f"transition graph has {len(self.sinks)} sink components: {self.sinks}")

    def to_dict(self):
        d = super().to_dict()
        d["sinks"] = self.sinks
        return d


class NotAdmissible(IFSGraphError):
    code = "not_admissible"


class NonSquare(IFSGraphError):
    code = "non_square"


class ZeroSpectralRadius(IFSGraphError):
    code = "zero_spectral_radius"


class PathBudgetExceeded(IFSGraphError):
    code = "path_budget_exceeded"


class ParseError(IFSGraphError):
    code = "parse_error"

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        loc = ""
        if line is not None:
            loc = f"line {line}" + (f", column {column}" if column is not None else "") + ": "
        super().__init__(loc + message)

    def to_dict(self):
        d = super().to_dict()
        d["line"] = self.line
        d["column"] = self.column
        return d


class ValidationError(IFSGraphError):
    code = "validation_error"

    def __init__(self, errors):
        if isinstance(errors, str):
            errors = [errors]
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))

    def to_dict(self):
        d = super().to_dict()
        d["errors"] = self.errors
        return d
