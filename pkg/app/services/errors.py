class SolverError(Exception):
    code = "SOLVER_ERROR"

    def __init__(self, message: str, code: str | None = None):
        super().__init__(message)
        self.message = message
        if code:
            self.code = code

    def __str__(self) -> str:
        return f"{self.code}: {self.message}"

    def __reduce__(self):
        # Errors raised inside scan workers travel back through pickle.
        return (type(self), (self.message, self.code))


class ConfigurationError(SolverError):
    code = "CONFIGURATION"


class InputError(SolverError):
    code = "INVALID_INPUT"


class DerivationError(SolverError):
    code = "DERIVATION_FAILED"


class EvaluationError(SolverError):
    code = "EVALUATION_FAILED"


class UnsupportedError(SolverError):
    code = "UNSUPPORTED"


class OutOfScopeError(SolverError):
    code = "OUT_OF_SCOPE"


class ConvergenceError(SolverError):
    code = "INSUFFICIENT_CONVERGENCE"


class BisectionStagnationError(SolverError):
    code = "BISECTION_STAGNATED"

    def __init__(self, message: str, bracket: tuple):
        super().__init__(message)
        self.bracket = bracket

    def __reduce__(self):
        return (type(self), (self.message, self.bracket))


class SingularMinorError(SolverError):
    code = "SINGULAR_MINOR"

    def __init__(self, message: str, stage: int):
        super().__init__(message)
        self.stage = stage

    def __reduce__(self):
        return (type(self), (self.message, self.stage))
