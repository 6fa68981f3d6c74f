"""Template parsing and prompt resolution.

Text block content is segmented into literal runs, ``[[input]]`` prongs and
``[[select]]`` holes. Parsing is lossless: rendering the segments back
reproduces the source string byte for byte. Resolution substitutes prongs
with attached block content (recursively) or a chained feed, and holes with
the current canvas selection.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Mapping

from lmcanvas import _scan
from lmcanvas._scan import INPUT, INPUT_TOKEN, LITERAL, SELECT, SELECT_TOKEN
from lmcanvas.blocks import ResolvedPrompt, Substitution
from lmcanvas.errors import (
    NoSelection,
    NotATextBlock,
    ResolutionDepthExceeded,
    UnknownBlock,
    UnresolvedProng,
)

if TYPE_CHECKING:
    from lmcanvas.document import CanvasDocument

# Attachment chains deeper than this mean the acyclicity invariant broke upstream.
MAX_RESOLUTION_DEPTH = 64


@dataclass(frozen=True)
class TemplateSegment:
    """One parsed segment: a literal run, an input prong or a select hole.

    ``index`` is the 0-based ordinal of the prong/hole in textual order;
    -1 for literals.
    """

    kind: str  # "literal" | "input" | "select"
    text: str = ""
    index: int = -1


def parse_template(content: str) -> list[TemplateSegment]:
    """Losslessly segment ``content``; near-tokens like ``[[input]`` stay literal."""
    segments: list[TemplateSegment] = []
    prongs = 0
    holes = 0
    for kind, start, end in _scan.scan_spans(content):
        if kind == LITERAL:
            segments.append(TemplateSegment("literal", text=content[start:end]))
        elif kind == INPUT:
            segments.append(TemplateSegment("input", index=prongs))
            prongs += 1
        else:
            segments.append(TemplateSegment("select", index=holes))
            holes += 1
    return segments


def render(segments: list[TemplateSegment]) -> str:
    """Inverse of :func:`parse_template`."""
    parts = []
    for seg in segments:
        if seg.kind == "literal":
            parts.append(seg.text)
        elif seg.kind == "input":
            parts.append(INPUT_TOKEN)
        elif seg.kind == "select":
            parts.append(SELECT_TOKEN)
        else:
            raise ValueError(f"unknown segment kind: {seg.kind}")
    return "".join(parts)


def command_spans(content: str) -> list[tuple[int, int, int]]:
    """(kind, start, end) spans of command tokens only, in textual order."""
    return [(k, s, e) for k, s, e in _scan.scan_spans(content) if k != LITERAL]


def prong_count(content: str) -> int:
    return _scan.prong_count(content)


def select_count(content: str) -> int:
    return _scan.select_count(content)


def resolve(
    document: CanvasDocument,
    block_id: str,
    bindings: Mapping[tuple[str, int], tuple[str, str]] | None = None,
) -> ResolvedPrompt:
    """Resolve a text block into a concrete prompt.

    Each prong is substituted with, in order of precedence, a chained feed
    from ``bindings`` (keyed by (block id, prong index), valid for one
    engine run) or the resolved content of its attached block. Each select
    hole is substituted with the currently selected canvas text. Pure: the
    document is not mutated.

    Raises UnresolvedProng when a prong has neither feed nor attachment,
    NoSelection when a hole exists and nothing is selected.
    """
    return _resolve(document, block_id, bindings, 0, block_id)


def _resolve(document, block_id, bindings, depth, top_id) -> ResolvedPrompt:
    if depth > MAX_RESOLUTION_DEPTH:
        raise ResolutionDepthExceeded(
            f"resolution of {top_id} exceeded depth {MAX_RESOLUTION_DEPTH}; "
            "attachment graph is not acyclic"
        )
    block = document.blocks.get(block_id)
    if block is None:
        raise UnknownBlock(f"no block {block_id}")
    if block.kind != "text":
        raise NotATextBlock(f"{block_id} is a {block.kind} block")

    parts: list[str] = []
    provenance: list[Substitution] = []
    top = depth == 0
    for seg in parse_template(block.content):
        if seg.kind == "literal":
            parts.append(seg.text)
            continue
        if seg.kind == "input":
            bound = bindings.get((block_id, seg.index)) if bindings else None
            if bound is not None:
                text, record_id = bound
                parts.append(text)
                if top:
                    provenance.append(
                        Substitution("prong", seg.index, text, source=record_id)
                    )
                continue
            attachment = document.attachments.get((block_id, seg.index))
            if attachment is None:
                raise UnresolvedProng(seg.index, block_id)
            inner = _resolve(document, attachment.source, bindings, depth + 1, top_id)
            parts.append(inner.text)
            if top:
                provenance.append(
                    Substitution("prong", seg.index, inner.text, source=attachment.source)
                )
            continue
        # select hole
        selection = document.selection
        if selection is None:
            raise NoSelection(f"{block_id} contains [[select]] but nothing is selected")
        host = document.blocks[selection.block]
        text = host.content[selection.start : selection.end]
        parts.append(text)
        if top:
            provenance.append(
                Substitution(
                    "select",
                    seg.index,
                    text,
                    selection=(selection.block, selection.start, selection.end),
                )
            )
    return ResolvedPrompt("".join(parts), tuple(provenance))
