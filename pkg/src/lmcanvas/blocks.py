"""Domain types for the canvas: blocks, sinks, attachments, records, history.

All types are plain dataclasses. Validation helpers raise the shared error
taxonomy; the document-wide validator in :mod:`lmcanvas.document` re-checks
every invariant after each mutation and at load time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from lmcanvas.errors import InvalidGeometry, InvalidParams

# Document-level constants, pinned by tests.
CONCAT_SEPARATOR = "\n"
CONTINUATION_SEPARATOR = ""

TEXT_PREFIX = "t"
MODEL_PREFIX = "m"
PIPELINE_PREFIX = "p"
RECORD_PREFIX = "g"


def id_number(block_id: str) -> int:
    """Numeric part of an id like ``t12``; -1 when malformed."""
    digits = block_id[1:]
    if len(block_id) >= 2 and digits.isdigit():
        return int(digits)
    return -1


def id_sort_key(block_id: str) -> int:
    return id_number(block_id)


@dataclass
class Geometry:
    x: float
    y: float
    width: float
    height: float

    def __post_init__(self):
        self.x = float(self.x)
        self.y = float(self.y)
        self.width = float(self.width)
        self.height = float(self.height)

    def check(self) -> None:
        for name in ("x", "y", "width", "height"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidGeometry(f"geometry.{name} must be finite")
        if self.width <= 0:
            raise InvalidGeometry("geometry.width must be > 0")
        if self.height <= 0:
            raise InvalidGeometry("geometry.height must be > 0")


DEFAULT_GEOMETRY = Geometry(0.0, 0.0, 240.0, 120.0)


@dataclass
class ModelParams:
    """One generation parameter configuration.

    Ranges are enforced at construction and after every reconfigure:
    temperature in [0, 2], top_p in (0, 1], max_tokens >= 1, penalties in
    [-2, 2], stop sequences non-empty strings.
    """

    model_name: str = "default"
    temperature: float = 0.7
    top_p: float = 1.0
    max_tokens: int = 64
    stop_sequences: list[str] = field(default_factory=list)
    presence_penalty: float = 0.0
    frequency_penalty: float = 0.0

    FIELDS = (
        "model_name",
        "temperature",
        "top_p",
        "max_tokens",
        "stop_sequences",
        "presence_penalty",
        "frequency_penalty",
    )

    def check(self) -> None:
        if not isinstance(self.model_name, str) or not self.model_name:
            raise InvalidParams("model_name", "model_name must be a non-empty string")
        self._check_float("temperature", 0.0, 2.0)
        self._check_float("top_p", 0.0, 1.0, min_open=True)
        if isinstance(self.max_tokens, bool) or not isinstance(self.max_tokens, int):
            raise InvalidParams("max_tokens", "max_tokens must be an integer")
        if self.max_tokens < 1:
            raise InvalidParams("max_tokens", "max_tokens must be >= 1")
        if not isinstance(self.stop_sequences, list):
            raise InvalidParams("stop_sequences", "stop_sequences must be a list")
        for seq in self.stop_sequences:
            if not isinstance(seq, str) or not seq:
                raise InvalidParams("stop_sequences", "stop sequences must be non-empty strings")
        self._check_float("presence_penalty", -2.0, 2.0)
        self._check_float("frequency_penalty", -2.0, 2.0)

    def _check_float(self, name: str, lo: float, hi: float, min_open: bool = False) -> None:
        value = getattr(self, name)
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise InvalidParams(name, f"{name} must be a number")
        value = float(value)
        setattr(self, name, value)
        if not math.isfinite(value):
            raise InvalidParams(name, f"{name} must be finite")
        low_ok = value > lo if min_open else value >= lo
        if not (low_ok and value <= hi):
            bracket = "(" if min_open else "["
            raise InvalidParams(name, f"{name} must be in {bracket}{lo}, {hi}], got {value}")

    def set_field(self, name: str, value) -> None:
        if name not in self.FIELDS:
            raise InvalidParams(name, f"unknown model parameter: {name}")
        previous = getattr(self, name)
        setattr(self, name, value)
        try:
            self.check()
        except InvalidParams:
            setattr(self, name, previous)
            raise

    def copy(self) -> ModelParams:
        return replace(self, stop_sequences=list(self.stop_sequences))


@dataclass
class TextBlock:
    id: str
    content: str
    geometry: Geometry

    kind = "text"


@dataclass
class ModelBlock:
    id: str
    params: ModelParams
    geometry: Geometry

    kind = "model"


@dataclass(frozen=True)
class Sink:
    """Routing destination of an output container.

    Exactly one sink per container; ``container`` is the default. Targets
    are TextBlock ids; ``prong_index`` is used by ``input_prong`` only.
    """

    kind: str = "container"
    target: str | None = None
    prong_index: int | None = None

    KINDS = ("container", "continuation", "input_prong", "select")

    @staticmethod
    def container() -> Sink:
        return Sink("container")

    @staticmethod
    def continuation(target: str) -> Sink:
        return Sink("continuation", target=target)

    @staticmethod
    def input_prong(target: str, prong_index: int) -> Sink:
        return Sink("input_prong", target=target, prong_index=prong_index)

    @staticmethod
    def select() -> Sink:
        return Sink("select")


@dataclass
class OutputContainer:
    generations: list[str] = field(default_factory=list)
    sink: Sink = field(default_factory=Sink.container)


@dataclass
class PipelineBlock:
    id: str
    text_slots: list[str]
    model_slots: list[str]
    output: OutputContainer
    geometry: Geometry

    kind = "pipeline"


@dataclass(frozen=True)
class ProngAttachment:
    host: str
    prong_index: int
    source: str


@dataclass(frozen=True)
class Selection:
    block: str
    start: int
    end: int


@dataclass(frozen=True)
class Substitution:
    """Provenance of one template substitution inside a resolved prompt."""

    kind: str  # "prong" or "select"
    index: int
    text: str
    source: str | None = None  # attached block id, or record id for chained feeds
    selection: tuple[str, int, int] | None = None


@dataclass(frozen=True)
class ResolvedPrompt:
    text: str
    provenance: tuple[Substitution, ...] = ()


@dataclass
class GenerationRecord:
    """Immutable provenance of one generation attempt.

    Never deleted from a document; block references inside it are
    historical and may outlive the blocks themselves. ``params_snapshot``
    is a deep copy taken at execution time.
    """

    id: str
    pipeline: str
    text_slot: str
    model_slot: str
    params_snapshot: ModelParams
    output_text: str
    created_at: int
    status: str  # "ok" | "error"
    resolved_prompt: ResolvedPrompt | None = None
    output_block: str | None = None
    error_name: str | None = None
    error_message: str | None = None


HISTORY_KINDS = (
    "created",
    "edited",
    "split_out",
    "split_off",
    "absorbed",
    "continuation",
    "select_replacement",
    "reverted",
)


@dataclass
class HistoryEntry:
    """One append-only history event for a single text block.

    ``ref`` carries the cross-reference: the counterpart block for
    split_out/split_off/absorbed, the generation record for
    continuation/select_replacement. Entries imported from an absorbed
    block keep their origin block id in ``origin``.
    """

    seq: int
    kind: str
    content_after: str
    created_at: int
    ref: str | None = None
    origin: str | None = None
    to_seq: int | None = None
