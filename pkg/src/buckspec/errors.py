"""Exception hierarchy. Every error carries a stable machine-readable ``code``."""


class BuckspecError(Exception):
    """Base class; ``code`` is the identifier surfaced in CLI error records."""

    code = "ERROR"

    def __init__(self, code=None, message=""):
        if code is not None:
            self.code = code
        self.message = message or self.code
        super().__init__(f"{self.code}: {self.message}")


class ValidationError(BuckspecError, ValueError):
    code = "INVALID_INPUT"


class SolverError(BuckspecError):
    code = "SOLVER_ERROR"


class RuleError(BuckspecError):
    code = "RULE_ERROR"
