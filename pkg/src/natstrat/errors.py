"""Exception types shared across the package."""


class NatStratError(Exception):
    """Base class for all errors raised by this package."""


class DefinitionError(NatStratError):
    """A model, strategy or formula refers to something that does not exist,
    or is structurally ill-formed (raised at load/build time)."""


class ParseError(NatStratError):
    """Syntax or semantic error in a .nsm/.nss/.nsq source, with a span."""

    def __init__(self, message, span=None):
        self.span = span
        if span is not None:
            message = f"{span}: {message}"
        super().__init__(message)


class BoundViolationError(NatStratError):
    """An update wrote a value outside the variable's declared bounds."""


class StrategyError(NatStratError):
    """A natural strategy is ill-formed at a reachable state
    (e.g. the final rule's concrete action is unavailable)."""


class ResourceLimitError(NatStratError):
    """A configured cap (state count, enumeration count) was exceeded.

    Distinguishes "unknown" from a definite verdict."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class ExportError(NatStratError):
    """The requested artifact cannot be exported (e.g. nested strategic
    operators in a query, or a network with no agents)."""
