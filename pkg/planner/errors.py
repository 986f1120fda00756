class InfeasibleSetupError(ValueError):
    """The instance is infeasible before any solve (e.g. a start inside a collision volume)."""


class NoPlanError(RuntimeError):
    """The solver returned no usable point."""

    def __init__(self, message: str, status: str):
        super().__init__(message)
        self.status = status


class PlanVerificationError(AssertionError):
    """A decoded plan violates the constraints it was decoded from."""
