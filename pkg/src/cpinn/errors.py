"""Exception types shared across the package."""


class ContractError(ValueError):
    """An argument violates a documented shape, dimension, or value contract."""


class NumericFailure(ArithmeticError):
    """A computation produced a non-finite value; carries the node that went bad."""

    def __init__(self, message: str, op: str | None = None, index: int | None = None):
        super().__init__(message)
        self.op = op
        self.index = index


class OracleFailure(RuntimeError):
    """A reference solver failed its own convergence or sanity gate."""


class StepRejected(RuntimeError):
    """An optimizer inner solve did not reach its tolerance; carries the residual."""

    def __init__(self, message: str, residual_norm: float, iterations: int):
        super().__init__(message)
        self.residual_norm = residual_norm
        self.iterations = iterations


class ConfigError(ValueError):
    """A run configuration file is malformed or inconsistent."""


class CheckpointError(RuntimeError):
    """A checkpoint file is unreadable or does not match the declared network."""
