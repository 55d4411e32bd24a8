"""Shared exception types."""


class SpecError(ValueError):
    """A system description (JSON or constructed) violates the schema or an invariant."""


class NumericalError(RuntimeError):
    """A numerical procedure failed: singular step matrix, non-finite values,
    or a corrector that will not settle at the requested step size."""
