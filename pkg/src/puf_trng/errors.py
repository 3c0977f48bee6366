"""Exception types shared across the package."""


class PufTrngError(Exception):
    """Base class for all package-specific errors."""


class ParameterError(PufTrngError, ValueError):
    """A configuration or parameter value violates its invariants."""


class DimensionError(PufTrngError, ValueError):
    """Mismatched sizes between a challenge, register, or instance."""


class StarvationError(PufTrngError, RuntimeError):
    """Generation exhausted its evaluation budget before emitting enough bits.

    Raised when the dual-arbiter dead zone rejects (nearly) every
    evaluation, e.g. for a zero-variance instance where every delay
    difference is 0.
    """

    def __init__(self, requested_bits: int, emitted_bits: int, evaluations: int):
        self.requested_bits = requested_bits
        self.emitted_bits = emitted_bits
        self.evaluations = evaluations
        super().__init__(
            f"generator starved: {emitted_bits}/{requested_bits} bits after "
            f"{evaluations} evaluations"
        )


class InsufficientLengthError(PufTrngError, ValueError):
    """A statistical test received fewer bits than its hard minimum."""

    def __init__(self, test_name: str, n: int, minimum: int):
        self.test_name = test_name
        self.n = n
        self.minimum = minimum
        super().__init__(f"{test_name}: sequence length {n} below minimum {minimum}")
