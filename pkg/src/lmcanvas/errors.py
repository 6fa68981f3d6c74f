"""Error taxonomy shared by the document core, engine, store, service and CLI.

Every error carries a stable ``name`` (its class name) which the HTTP layer
returns verbatim and the CLI prints in ``--json`` mode.
"""

from __future__ import annotations


class LmCanvasError(Exception):
    """Base class for all canvas errors."""

    name: str = "LmCanvasError"

    def __init_subclass__(cls, **kwargs):
        super().__init_subclass__(**kwargs)
        cls.name = cls.__name__

    def __init__(self, message: str = ""):
        super().__init__(message or self.__class__.name)
        self.message = message or self.__class__.name


class UnknownDocument(LmCanvasError):
    pass


class UnknownBlock(LmCanvasError):
    pass


class UnknownRecord(LmCanvasError):
    pass


class UnknownSeq(LmCanvasError):
    pass


class NotATextBlock(LmCanvasError):
    pass


class WrongBlockKind(LmCanvasError):
    pass


class InvalidParams(LmCanvasError):
    """A model parameter violated its range, or the field does not exist."""

    def __init__(self, field: str, message: str = ""):
        super().__init__(message or f"invalid model parameter: {field}")
        self.field = field


class InvalidGeometry(LmCanvasError):
    pass


class RangeOutOfBounds(LmCanvasError):
    pass


class SplitsCommandToken(LmCanvasError):
    pass


class SourceNested(LmCanvasError):
    pass


class AlreadyNested(LmCanvasError):
    pass


class DuplicateSlot(LmCanvasError):
    pass


class InvalidProngIndex(LmCanvasError):
    pass


class InvalidSinkTarget(LmCanvasError):
    pass


class WouldCreateCycle(LmCanvasError):
    pass


class CycleDetected(LmCanvasError):
    """The pipeline dependency graph contains a cycle."""

    def __init__(self, cycle: list[str], message: str = ""):
        super().__init__(message or "cycle through pipelines: " + " -> ".join(cycle))
        self.cycle = list(cycle)


class UnresolvedProng(LmCanvasError):
    """An input prong has neither an attachment nor a chained feed."""

    def __init__(self, index: int, block: str = "", message: str = ""):
        super().__init__(message or f"prong {index} of {block or '<block>'} is unresolved")
        self.index = index
        self.block = block


class NoSelection(LmCanvasError):
    pass


class ResolutionDepthExceeded(LmCanvasError):
    """Internal: the acyclicity invariant was violated upstream."""


class ProviderError(LmCanvasError):
    pass


class IoError(LmCanvasError):
    pass


class IntegrityError(LmCanvasError):
    pass


class SchemaVersionUnsupported(LmCanvasError):
    pass


class StaleRevision(LmCanvasError):
    pass
