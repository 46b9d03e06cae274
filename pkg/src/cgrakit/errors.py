"""Exception hierarchy shared by every stage of the toolchain."""


class CgraError(Exception):
    """Base class for all toolchain errors."""


class SchemaError(CgraError, ValueError):
    """A document does not match its schema (unknown field, kind, bad type)."""


class DanglingPort(CgraError):
    """A connection references a port that does not exist."""


class DirectionMismatch(CgraError):
    """A connection does not run from a driver to a sink."""


class UnknownPreset(CgraError, KeyError):
    pass


class UnreachableMemory(CgraError):
    """A load/store-capable FU has no path to any memory bank."""


class CycleError(CgraError):
    """Non-recurrence edges of a DFG form a cycle."""


class BadDistance(CgraError):
    """Recurrence edge with distance < 1, or a data edge with distance != 0."""


class OutOfBoundsAccess(CgraError):
    pass


class BankOverflow(CgraError):
    pass


class MissingVariable(CgraError):
    pass


class NoPath(CgraError):
    """Route target unreachable even when oversubscription is allowed."""


class Unresolved(CgraError):
    """Conflict resolution ended with resources still oversubscribed."""

    def __init__(self, message, mapping=None):
        super().__init__(message)
        self.mapping = mapping


class MappingFailed(CgraError):
    """No legal mapping found up to ``max_ii``; ``best`` holds the least
    conflicted attempt, if any."""

    def __init__(self, message, best=None, attempts=None):
        super().__init__(message)
        self.best = best
        self.attempts = attempts or []


class ConfigOverflow(CgraError):
    """II instructions do not fit a PE's configuration memory."""


class UnsupportedLatency(CgraError):
    pass


class XbarConflict(CgraError):
    """Two values drive one resource in the same cycle, or a same-cycle
    route forms a combinational loop."""
