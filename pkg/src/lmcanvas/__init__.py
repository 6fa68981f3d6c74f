"""LMCanvas: block-based canvas documents compiled into LLM generation pipelines.

Writers arrange text blocks (plain writing, prompt templates with
``[[input]]`` prongs and ``[[select]]`` holes), model blocks (parameter
configurations) and pipeline blocks (text slots x model slots with a routed
output container) on a canvas; the engine turns that arrangement into
executable generation runs with full per-block history and provenance.
"""

from lmcanvas.blocks import (
    CONCAT_SEPARATOR,
    CONTINUATION_SEPARATOR,
    Geometry,
    GenerationRecord,
    HistoryEntry,
    ModelBlock,
    ModelParams,
    OutputContainer,
    PipelineBlock,
    ProngAttachment,
    ResolvedPrompt,
    Selection,
    Sink,
    TextBlock,
)
from lmcanvas.document import CanvasDocument, OpReport, new_document
from lmcanvas.engine import ExecutionPlan, RunResult, generate, plan, route, run
from lmcanvas.errors import LmCanvasError
from lmcanvas.provider import (
    CompletionRequest,
    CompletionResult,
    HttpProvider,
    MockProvider,
    provider_from_env,
)
from lmcanvas.store import list_documents, load, save
from lmcanvas.template import TemplateSegment, parse_template, render, resolve

__version__ = "0.1.0"

__all__ = [
    "CONCAT_SEPARATOR",
    "CONTINUATION_SEPARATOR",
    "CanvasDocument",
    "CompletionRequest",
    "CompletionResult",
    "ExecutionPlan",
    "Geometry",
    "GenerationRecord",
    "HistoryEntry",
    "HttpProvider",
    "LmCanvasError",
    "MockProvider",
    "ModelBlock",
    "ModelParams",
    "OpReport",
    "OutputContainer",
    "PipelineBlock",
    "ProngAttachment",
    "ResolvedPrompt",
    "RunResult",
    "Selection",
    "Sink",
    "TemplateSegment",
    "TextBlock",
    "generate",
    "list_documents",
    "load",
    "new_document",
    "parse_template",
    "plan",
    "provider_from_env",
    "render",
    "resolve",
    "route",
    "run",
    "save",
]
