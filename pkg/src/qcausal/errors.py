"""Exception types shared across the package."""


class LayoutError(ValueError):
    """Matrix shape, factor index or party/subsystem reference is inconsistent."""


class DimensionError(LayoutError):
    """A dimension product exceeds what can be addressed on this platform."""


class ContractViolation(ValueError):
    """A caller broke an operation's precondition (bad channel, missing cover, ...)."""


class ParseError(ValueError):
    """A procmat-v1 / DagSpec file could not be read.

    ``context`` names the offending field (``"matrix.entries[12]"``) or line.
    """

    def __init__(self, message, context=None):
        self.context = context
        if context:
            message = f"{message} (at {context})"
        super().__init__(message)


class RejectedInput(ValueError):
    """Discovery refused a process matrix that failed validation."""

    def __init__(self, message, report=None):
        self.report = report
        super().__init__(message)
