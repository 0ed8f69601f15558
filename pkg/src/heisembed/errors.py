"""Exception hierarchy. The CLI maps each family to an exit code."""


class HeisembedError(Exception):
    """Base class for all library errors."""


class ValidationError(HeisembedError, ValueError):
    """Malformed input: bad graph, bad generating set, bad file."""


class DomainError(HeisembedError, ValueError):
    """An argument lies outside the domain of an operation (e.g. not in a ball)."""


class PreconditionError(HeisembedError, ValueError):
    """A transform was handed a wiring that does not satisfy its precondition."""


class ArithmeticOverflow(HeisembedError, OverflowError):
    """A group coordinate left the signed 64-bit range."""

    def __init__(self, component: str, value=None):
        self.component = component
        self.value = value
        msg = f"int64 overflow in component {component!r}"
        if value is not None:
            msg += f" (value {value})"
        super().__init__(msg)


class ResourceError(HeisembedError):
    """A configured memory or radius cap was exceeded."""

    def __init__(self, message: str, reached: int | None = None):
        self.reached = reached
        super().__init__(message)


class AttemptsExhausted(HeisembedError):
    """The randomized wiring found no good sample within max_attempts."""

    def __init__(self, message: str, stats: dict):
        self.stats = stats
        super().__init__(message)
