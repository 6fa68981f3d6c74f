"""Per-text-block append-only histories: events, revert, provenance.

Each text block owns an isolated event log of full-content snapshots.
Revert appends a new entry rather than truncating, so a revert can itself
be reverted. Concatenation imports the absorbed block's entries, tagged
with their origin, so generation provenance survives merges.
"""

from __future__ import annotations

from typing import TYPE_CHECKING

from lmcanvas.blocks import GenerationRecord, HistoryEntry
from lmcanvas.errors import UnknownSeq

if TYPE_CHECKING:
    from lmcanvas.document import CanvasDocument


def append_entry(
    document: CanvasDocument,
    block_id: str,
    kind: str,
    content_after: str,
    ref: str | None = None,
    origin: str | None = None,
    to_seq: int | None = None,
) -> HistoryEntry:
    """Append one event to a block's history with the next sequence number."""
    entries = document.histories.setdefault(block_id, [])
    entry = HistoryEntry(
        seq=len(entries),
        kind=kind,
        content_after=content_after,
        created_at=document.tick(),
        ref=ref,
        origin=origin,
        to_seq=to_seq,
    )
    entries.append(entry)
    return entry


def entries_for(document: CanvasDocument, block_id: str) -> list[HistoryEntry]:
    document.require_text_block(block_id)
    return list(document.histories.get(block_id, []))


def find_entry(document: CanvasDocument, block_id: str, seq: int) -> HistoryEntry:
    document.require_text_block(block_id)
    entries = document.histories.get(block_id, [])
    if not isinstance(seq, int) or seq < 0 or seq >= len(entries):
        raise UnknownSeq(f"block {block_id} has no history entry {seq}")
    return entries[seq]


def provenance(document: CanvasDocument, block_id: str, seq: int) -> GenerationRecord | None:
    """The generation record behind a continuation/select_replacement entry.

    Plain edits and structural events carry no generation provenance and
    yield None.
    """
    entry = find_entry(document, block_id, seq)
    if entry.kind in ("continuation", "select_replacement") and entry.ref is not None:
        return document.records.get(entry.ref)
    return None
