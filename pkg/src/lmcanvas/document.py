"""The canvas document: blocks, attachments, selection, histories, records.

All mutations go through methods on :class:`CanvasDocument`. Every method
either completes fully or raises before touching state, so the document is
valid after any call, successful or not. Mutations are expected to be
serialized by the caller (one writer per document); reads are safe to share.

Each mutating method returns an :class:`OpReport` describing side effects a
caller cannot otherwise see: detached attachments, sinks reset to their
container, cascaded deletions, a cleared selection.
"""

from __future__ import annotations

import math
import uuid
from dataclasses import dataclass, field

from lmcanvas import history as history_mod
from lmcanvas import template
from lmcanvas.blocks import (
    CONCAT_SEPARATOR,
    Geometry,
    GenerationRecord,
    HISTORY_KINDS,
    ModelBlock,
    ModelParams,
    OutputContainer,
    PipelineBlock,
    ProngAttachment,
    Selection,
    Sink,
    TextBlock,
    id_number,
)
from lmcanvas.errors import (
    AlreadyNested,
    DuplicateSlot,
    IntegrityError,
    InvalidProngIndex,
    InvalidSinkTarget,
    NotATextBlock,
    RangeOutOfBounds,
    SourceNested,
    SplitsCommandToken,
    UnknownBlock,
    WouldCreateCycle,
    WrongBlockKind,
)

SCHEMA_VERSION = 1

_ID_PREFIXES = {"text": "t", "model": "m", "pipeline": "p"}


@dataclass
class OpReport:
    """Side effects of one document mutation."""

    block_id: str | None = None
    detached: list[tuple[str, int, str]] = field(default_factory=list)
    sink_resets: list[str] = field(default_factory=list)
    deleted: list[str] = field(default_factory=list)
    cascaded: list[str] = field(default_factory=list)
    selection_cleared: bool = False
    routing_errors: list[tuple[str, str, str]] = field(default_factory=list)

    def merge(self, other: OpReport) -> None:
        self.detached.extend(other.detached)
        self.sink_resets.extend(other.sink_resets)
        self.deleted.extend(other.deleted)
        self.cascaded.extend(other.cascaded)
        self.selection_cleared = self.selection_cleared or other.selection_cleared
        self.routing_errors.extend(other.routing_errors)

    def to_dict(self) -> dict:
        return {
            "block_id": self.block_id,
            "detached": [list(item) for item in self.detached],
            "sink_resets": list(self.sink_resets),
            "deleted": list(self.deleted),
            "cascaded": list(self.cascaded),
            "selection_cleared": self.selection_cleared,
            "routing_errors": [list(item) for item in self.routing_errors],
        }


class CanvasDocument:
    """One canvas: all blocks plus their wiring, selection and histories."""

    def __init__(self, doc_id: str, title: str = ""):
        self.id = doc_id
        self.title = title
        self.schema_version = SCHEMA_VERSION
        self.blocks: dict[str, TextBlock | ModelBlock | PipelineBlock] = {}
        self.attachments: dict[tuple[str, int], ProngAttachment] = {}
        self.selection: Selection | None = None
        self.histories: dict[str, list] = {}
        self.records: dict[str, GenerationRecord] = {}
        # Monotone per-document counters. next_seq backs block/record ids and
        # never decreases, so ids are never reused after deletion; clock is a
        # logical timestamp advanced on every recorded event, which keeps
        # identical operation sequences byte-identical when serialized.
        self.next_seq = 1
        self.clock = 0

    # -- id and clock plumbing -------------------------------------------

    def tick(self) -> int:
        self.clock += 1
        return self.clock

    def new_id(self, prefix: str) -> str:
        new = f"{prefix}{self.next_seq}"
        self.next_seq += 1
        return new

    # -- lookups ----------------------------------------------------------

    def require_block(self, block_id: str):
        block = self.blocks.get(block_id)
        if block is None:
            raise UnknownBlock(f"no block {block_id}")
        return block

    def require_text_block(self, block_id: str) -> TextBlock:
        block = self.require_block(block_id)
        if block.kind != "text":
            raise NotATextBlock(f"{block_id} is a {block.kind} block")
        return block

    def require_model_block(self, block_id: str) -> ModelBlock:
        block = self.require_block(block_id)
        if block.kind != "model":
            raise WrongBlockKind(f"{block_id} is a {block.kind} block, expected model")
        return block

    def require_pipeline(self, block_id: str) -> PipelineBlock:
        block = self.require_block(block_id)
        if block.kind != "pipeline":
            raise WrongBlockKind(f"{block_id} is a {block.kind} block, expected pipeline")
        return block

    def nesting_pipeline(self, block_id: str) -> str | None:
        """Id of the pipeline holding this block in a slot, if any."""
        for block in self.blocks.values():
            if block.kind != "pipeline":
                continue
            if block_id in block.text_slots or block_id in block.model_slots:
                return block.id
        return None

    def text_blocks(self) -> list[TextBlock]:
        return [b for b in self.blocks.values() if b.kind == "text"]

    def pipelines(self) -> list[PipelineBlock]:
        return [b for b in self.blocks.values() if b.kind == "pipeline"]

    # -- block creation ---------------------------------------------------

    def create_text_block(self, content: str = "", geometry: Geometry | None = None) -> OpReport:
        geometry = _geometry_or_default(geometry)
        block_id = self._register_text_block(content, geometry, "created", ref=None)
        return OpReport(block_id=block_id)

    def _register_text_block(
        self, content: str, geometry: Geometry, history_kind: str, ref: str | None
    ) -> str:
        block_id = self.new_id("t")
        self.blocks[block_id] = TextBlock(id=block_id, content=content, geometry=geometry)
        history_mod.append_entry(self, block_id, history_kind, content, ref=ref)
        return block_id

    def create_model_block(self, params: ModelParams, geometry: Geometry | None = None) -> OpReport:
        params = params.copy()
        params.check()
        geometry = _geometry_or_default(geometry)
        block_id = self.new_id("m")
        self.blocks[block_id] = ModelBlock(id=block_id, params=params, geometry=geometry)
        return OpReport(block_id=block_id)

    def create_pipeline(
        self, text: str, model: str, geometry: Geometry | None = None
    ) -> OpReport:
        text_block = self.require_block(text)
        if text_block.kind != "text":
            raise WrongBlockKind(f"{text} is a {text_block.kind} block, expected text")
        model_block = self.require_block(model)
        if model_block.kind != "model":
            raise WrongBlockKind(f"{model} is a {model_block.kind} block, expected model")
        for slot in (text, model):
            nest = self.nesting_pipeline(slot)
            if nest is not None:
                raise AlreadyNested(f"{slot} is already nested in pipeline {nest}")
        geometry = _geometry_or_default(geometry)
        block_id = self.new_id("p")
        self.blocks[block_id] = PipelineBlock(
            id=block_id,
            text_slots=[text],
            model_slots=[model],
            output=OutputContainer(),
            geometry=geometry,
        )
        return OpReport(block_id=block_id)

    def expand_pipeline(self, pipeline: str, block_id: str) -> OpReport:
        pipe = self.require_pipeline(pipeline)
        block = self.require_block(block_id)
        if block.kind == "pipeline":
            raise WrongBlockKind("pipelines compose via sinks, not nesting")
        if block_id in pipe.text_slots or block_id in pipe.model_slots:
            raise DuplicateSlot(f"{block_id} is already a slot of {pipeline}")
        nest = self.nesting_pipeline(block_id)
        if nest is not None:
            raise AlreadyNested(f"{block_id} is already nested in pipeline {nest}")
        if block.kind == "text":
            pipe.text_slots.append(block_id)
        else:
            pipe.model_slots.append(block_id)
        return OpReport(block_id=block_id)

    # -- simple mutations ---------------------------------------------------

    def edit_text(self, block_id: str, new_content: str) -> OpReport:
        block = self.require_text_block(block_id)
        report = OpReport(block_id=block_id)
        block.content = new_content
        self._after_content_change(block_id, report)
        history_mod.append_entry(self, block_id, "edited", new_content)
        return report

    def configure_model(self, block_id: str, field_name: str, value) -> OpReport:
        return self.configure_model_fields(block_id, {field_name: value})

    def configure_model_fields(self, block_id: str, updates: dict) -> OpReport:
        """Reconfigure several parameters atomically: all valid or none applied."""
        block = self.require_model_block(block_id)
        params = block.params.copy()
        for field_name, value in updates.items():
            params.set_field(field_name, value)
        block.params = params
        return OpReport(block_id=block_id)

    def set_geometry(self, block_id: str, geometry: Geometry) -> OpReport:
        # Layout changes are not history events (history covers text content
        # and generations only).
        block = self.require_block(block_id)
        geometry.check()
        block.geometry = geometry
        return OpReport(block_id=block_id)

    def set_selection(self, block_id: str, start: int, end: int) -> OpReport:
        block = self.require_text_block(block_id)
        if not _is_offset(start) or not _is_offset(end):
            raise RangeOutOfBounds("selection offsets must be non-negative integers")
        if start > end or end > len(block.content):
            raise RangeOutOfBounds(
                f"selection {start}..{end} out of bounds for block of length {len(block.content)}"
            )
        self.selection = Selection(block=block_id, start=start, end=end)
        return OpReport(block_id=block_id)

    def clear_selection(self) -> OpReport:
        cleared = self.selection is not None
        self.selection = None
        return OpReport(selection_cleared=cleared)

    # -- attachments ---------------------------------------------------------

    def attach(self, host: str, prong_index: int, source: str) -> OpReport:
        host_block = self.require_text_block(host)
        self.require_text_block(source)
        if host == source:
            raise WouldCreateCycle(f"cannot attach {source} into its own prong")
        count = template.prong_count(host_block.content)
        if not _is_offset(prong_index) or prong_index >= count:
            raise InvalidProngIndex(f"{host} has {count} prongs, no prong {prong_index}")
        if _reaches(self._dependency_edges(), host, source):
            raise WouldCreateCycle(f"attaching {source} into {host} would close a feed cycle")
        report = OpReport(block_id=host)
        old = self.attachments.get((host, prong_index))
        if old is not None:
            report.detached.append((old.host, old.prong_index, old.source))
        self.attachments[(host, prong_index)] = ProngAttachment(host, prong_index, source)
        return report

    def detach(self, host: str, prong_index: int) -> OpReport:
        self.require_text_block(host)
        old = self.attachments.pop((host, prong_index), None)
        if old is None:
            raise InvalidProngIndex(f"no attachment at prong {prong_index} of {host}")
        return OpReport(block_id=host, detached=[(old.host, old.prong_index, old.source)])

    # -- output container -----------------------------------------------------

    def connect_output(self, pipeline: str, sink: Sink) -> OpReport:
        pipe = self.require_pipeline(pipeline)
        self.check_sink(sink)
        if sink.kind == "input_prong":
            edges = self._dependency_edges(exclude_sink_of=pipeline)
            if _reaches(edges, sink.target, pipeline):
                raise WouldCreateCycle(
                    f"feeding {sink.target} from {pipeline} would close a feed cycle"
                )
        pipe.output.sink = sink
        return OpReport(block_id=pipeline)

    def check_sink(self, sink: Sink) -> None:
        if sink.kind not in Sink.KINDS:
            raise InvalidSinkTarget(f"unknown sink kind {sink.kind!r}")
        if sink.kind in ("container", "select"):
            if sink.target is not None or sink.prong_index is not None:
                raise InvalidSinkTarget(f"{sink.kind} sink takes no target")
            return
        if sink.target is None:
            raise InvalidSinkTarget(f"{sink.kind} sink requires a target")
        target = self.blocks.get(sink.target)
        if target is None:
            raise UnknownBlock(f"no block {sink.target}")
        if target.kind != "text":
            raise InvalidSinkTarget(f"sink target {sink.target} is not a text block")
        if sink.kind == "continuation":
            if sink.prong_index is not None:
                raise InvalidSinkTarget("continuation sink takes no prong index")
            return
        count = template.prong_count(target.content)
        if not _is_offset(sink.prong_index) or sink.prong_index >= count:
            raise InvalidSinkTarget(
                f"{sink.target} has {count} prongs, no prong {sink.prong_index}"
            )

    # -- concatenate / split ---------------------------------------------------

    def concatenate(self, target: str, source: str) -> OpReport:
        """Merge ``source`` into ``target`` with the document separator.

        Attachments and sinks that referenced the source are rewired to the
        target, prong indices shifted past the target's own prongs; the
        source's history is imported, then the source block is deleted.
        """
        target_block = self.require_text_block(target)
        source_block = self.require_text_block(source)
        if target == source:
            raise SourceNested("cannot concatenate a block into itself")
        nest = self.nesting_pipeline(source)
        if nest is not None:
            raise SourceNested(f"{source} is nested in pipeline {nest}")

        # Any cycle a merge could introduce passes through the merged node.
        merged_edges = []
        for a, b in self._dependency_edges():
            a = target if a == source else a
            b = target if b == source else b
            merged_edges.append((a, b))
        if any(a == target and _reaches(merged_edges, b, target) for a, b in merged_edges):
            raise WouldCreateCycle(f"merging {source} into {target} would close a feed cycle")

        prior_prongs = template.prong_count(target_block.content)
        merged = target_block.content + CONCAT_SEPARATOR + source_block.content

        rewired: dict[tuple[str, int], ProngAttachment] = {}
        for (host, index), att in self.attachments.items():
            new_host, new_index = host, index
            if host == source:
                new_host, new_index = target, index + prior_prongs
            new_source = target if att.source == source else att.source
            rewired[(new_host, new_index)] = ProngAttachment(new_host, new_index, new_source)
        self.attachments = rewired

        for pipe in self.pipelines():
            sink = pipe.output.sink
            if sink.target != source:
                continue
            if sink.kind == "continuation":
                pipe.output.sink = Sink.continuation(target)
            elif sink.kind == "input_prong":
                pipe.output.sink = Sink.input_prong(target, sink.prong_index + prior_prongs)

        if self.selection is not None and self.selection.block == source:
            offset = len(target_block.content) + len(CONCAT_SEPARATOR)
            self.selection = Selection(
                target, self.selection.start + offset, self.selection.end + offset
            )

        target_entries = self.histories[target]
        for entry in self.histories.pop(source, []):
            imported = history_mod.HistoryEntry(
                seq=len(target_entries),
                kind=entry.kind,
                content_after=entry.content_after,
                created_at=entry.created_at,
                ref=entry.ref,
                origin=entry.origin or source,
                to_seq=entry.to_seq,
            )
            target_entries.append(imported)

        del self.blocks[source]
        target_block.content = merged
        history_mod.append_entry(self, target, "absorbed", merged, ref=source)
        return OpReport(block_id=target, deleted=[source])

    def split(self, block_id: str, start: int, end: int, geometry: Geometry | None = None) -> OpReport:
        """Carve ``content[start:end]`` out into a new text block.

        Command tokens must fall entirely inside or outside the range.
        Prongs, their attachments and any input-prong sinks move with their
        tokens and are renumbered on both sides.
        """
        block = self.require_text_block(block_id)
        content = block.content
        if not _is_offset(start) or not _is_offset(end):
            raise RangeOutOfBounds("split offsets must be non-negative integers")
        if not (0 <= start < end <= len(content)):
            raise RangeOutOfBounds(
                f"split range {start}..{end} invalid for block of length {len(content)}"
            )
        geometry = _geometry_or_default(geometry)

        moved_inputs: list[int] = []
        kept_inputs: list[int] = []
        input_ordinal = 0
        for kind, token_start, token_end in template.command_spans(content):
            inside = start <= token_start and token_end <= end
            outside = token_end <= start or token_start >= end
            if not inside and not outside:
                raise SplitsCommandToken(
                    f"range {start}..{end} cuts through a command token at {token_start}"
                )
            if kind == template.INPUT:
                (moved_inputs if inside else kept_inputs).append(input_ordinal)
                input_ordinal += 1

        new_content = content[start:end]
        remaining = content[:start] + content[end:]
        moved_rank = {ordinal: rank for rank, ordinal in enumerate(moved_inputs)}
        kept_rank = {ordinal: rank for rank, ordinal in enumerate(kept_inputs)}

        new_id = self._register_text_block(new_content, geometry, "split_out", ref=block_id)

        rewired: dict[tuple[str, int], ProngAttachment] = {}
        for (host, index), att in self.attachments.items():
            if host != block_id:
                rewired[(host, index)] = att
                continue
            if index in moved_rank:
                new_key = (new_id, moved_rank[index])
            else:
                new_key = (block_id, kept_rank[index])
            rewired[new_key] = ProngAttachment(new_key[0], new_key[1], att.source)
        self.attachments = rewired

        for pipe in self.pipelines():
            sink = pipe.output.sink
            if sink.kind != "input_prong" or sink.target != block_id:
                continue
            if sink.prong_index in moved_rank:
                pipe.output.sink = Sink.input_prong(new_id, moved_rank[sink.prong_index])
            else:
                pipe.output.sink = Sink.input_prong(block_id, kept_rank[sink.prong_index])

        report = OpReport(block_id=new_id)
        selection = self.selection
        if selection is not None and selection.block == block_id:
            if selection.end <= start:
                pass
            elif selection.start >= end:
                self.selection = Selection(
                    block_id, selection.start - (end - start), selection.end - (end - start)
                )
            elif start <= selection.start and selection.end <= end:
                self.selection = Selection(new_id, selection.start - start, selection.end - start)
            else:
                self.selection = None
                report.selection_cleared = True

        block.content = remaining
        history_mod.append_entry(self, block_id, "split_off", remaining, ref=new_id)
        return report

    # -- deletion ----------------------------------------------------------------

    def delete_block(self, block_id: str) -> OpReport:
        self.require_block(block_id)
        report = OpReport(block_id=block_id)
        self._delete(block_id, report, cascaded=False)
        return report

    def _delete(self, block_id: str, report: OpReport, cascaded: bool) -> None:
        block = self.blocks.pop(block_id)
        (report.cascaded if cascaded else report.deleted).append(block_id)

        if block.kind == "text":
            self.histories.pop(block_id, None)
            for key in [
                k
                for k, att in self.attachments.items()
                if att.host == block_id or att.source == block_id
            ]:
                att = self.attachments.pop(key)
                report.detached.append((att.host, att.prong_index, att.source))
            if self.selection is not None and self.selection.block == block_id:
                self.selection = None
                report.selection_cleared = True
            for pipe in self.pipelines():
                if pipe.output.sink.target == block_id:
                    pipe.output.sink = Sink.container()
                    report.sink_resets.append(pipe.id)

        if block.kind in ("text", "model"):
            for pipe in self.pipelines():
                removed = False
                if block_id in pipe.text_slots:
                    pipe.text_slots.remove(block_id)
                    removed = True
                if block_id in pipe.model_slots:
                    pipe.model_slots.remove(block_id)
                    removed = True
                if removed and (not pipe.text_slots or not pipe.model_slots):
                    self._delete(pipe.id, report, cascaded=True)
        # Pipelines carry no inbound references: slots are freed implicitly
        # and generation records are kept as historical provenance.

    # -- history ------------------------------------------------------------------

    def revert(self, block_id: str, to_seq: int) -> OpReport:
        block = self.require_text_block(block_id)
        entry = history_mod.find_entry(self, block_id, to_seq)
        report = OpReport(block_id=block_id)
        block.content = entry.content_after
        self._after_content_change(block_id, report)
        history_mod.append_entry(self, block_id, "reverted", entry.content_after, to_seq=to_seq)
        return report

    def history_entries(self, block_id: str):
        return history_mod.entries_for(self, block_id)

    def provenance(self, block_id: str, seq: int):
        return history_mod.provenance(self, block_id, seq)

    # -- shared cleanup after a content change -------------------------------------

    def _after_content_change(self, block_id: str, report: OpReport) -> None:
        """Detach attachments and reset sinks whose prong vanished."""
        count = template.prong_count(self.blocks[block_id].content)
        for key in [
            k for k in self.attachments if k[0] == block_id and k[1] >= count
        ]:
            att = self.attachments.pop(key)
            report.detached.append((att.host, att.prong_index, att.source))
        for pipe in self.pipelines():
            sink = pipe.output.sink
            if sink.kind == "input_prong" and sink.target == block_id and sink.prong_index >= count:
                pipe.output.sink = Sink.container()
                report.sink_resets.append(pipe.id)
        selection = self.selection
        if selection is not None and selection.block == block_id:
            if selection.end > len(self.blocks[block_id].content):
                self.selection = None
                report.selection_cleared = True

    # -- dependency graph -----------------------------------------------------------

    def _dependency_edges(self, exclude_sink_of: str | None = None) -> list[tuple[str, str]]:
        """Directed feed edges over text blocks and pipelines.

        attachment source -> host; text slot -> its pipeline; pipeline ->
        input-prong sink target. Acyclicity of this graph is a document
        invariant and what makes template resolution and runs terminate.
        """
        edges: list[tuple[str, str]] = [
            (att.source, att.host) for att in self.attachments.values()
        ]
        for pipe in self.pipelines():
            for slot in pipe.text_slots:
                edges.append((slot, pipe.id))
            sink = pipe.output.sink
            if (
                sink.kind == "input_prong"
                and pipe.id != exclude_sink_of
                and sink.target is not None
            ):
                edges.append((pipe.id, sink.target))
        return edges

    # -- validation -------------------------------------------------------------------

    def validate(self) -> None:
        """Check every document invariant; raise IntegrityError on the first failure.

        Run by tests after every mutation and by the store on every load.
        """
        try:
            self._validate()
        except IntegrityError:
            raise
        except Exception as exc:  # malformed payloads surface as integrity errors
            raise IntegrityError(f"document is structurally invalid: {exc}") from exc

    def _validate(self) -> None:
        if not isinstance(self.next_seq, int) or not isinstance(self.clock, int):
            raise IntegrityError("counters must be integers")
        if self.next_seq < 1 or self.clock < 0:
            raise IntegrityError("counters out of range")

        slot_owner: dict[str, str] = {}
        for block_id, block in self.blocks.items():
            if block.id != block_id:
                raise IntegrityError(f"block key {block_id} does not match id {block.id}")
            number = id_number(block_id)
            if number < 0 or block_id[0] != _ID_PREFIXES.get(block.kind):
                raise IntegrityError(f"malformed id {block_id} for {block.kind} block")
            if number >= self.next_seq:
                raise IntegrityError(f"id {block_id} is not covered by the id counter")
            geo = block.geometry
            if not all(math.isfinite(v) for v in (geo.x, geo.y, geo.width, geo.height)):
                raise IntegrityError(f"block {block_id} has non-finite geometry")
            if geo.width <= 0 or geo.height <= 0:
                raise IntegrityError(f"block {block_id} has non-positive extent")

            if block.kind == "model":
                _check_params(block.params, f"block {block_id}")
            elif block.kind == "pipeline":
                self._validate_pipeline(block, slot_owner)

        for (host, index), att in self.attachments.items():
            if (att.host, att.prong_index) != (host, index):
                raise IntegrityError("attachment key does not match its value")
            host_block = self.blocks.get(host)
            source_block = self.blocks.get(att.source)
            if host_block is None or host_block.kind != "text":
                raise IntegrityError(f"attachment host {host} is not a text block")
            if source_block is None or source_block.kind != "text":
                raise IntegrityError(f"attachment source {att.source} is not a text block")
            if host == att.source:
                raise IntegrityError(f"attachment on {host} references itself")
            if not _is_offset(index) or index >= template.prong_count(host_block.content):
                raise IntegrityError(f"attachment prong {index} of {host} does not exist")

        if self.selection is not None:
            sel = self.selection
            block = self.blocks.get(sel.block)
            if block is None or block.kind != "text":
                raise IntegrityError(f"selection references {sel.block}")
            if not (
                _is_offset(sel.start)
                and _is_offset(sel.end)
                and sel.start <= sel.end <= len(block.content)
            ):
                raise IntegrityError("selection offsets out of bounds")

        for record_id, record in self.records.items():
            if record.id != record_id:
                raise IntegrityError(f"record key {record_id} does not match id {record.id}")
            number = id_number(record_id)
            if record_id[0] != "g" or number < 0 or number >= self.next_seq:
                raise IntegrityError(f"malformed record id {record_id}")
            _check_params(record.params_snapshot, f"record {record_id}")
            if record.status not in ("ok", "error"):
                raise IntegrityError(f"record {record_id} has status {record.status!r}")
            if record.status == "error" and record.error_name is None:
                raise IntegrityError(f"error record {record_id} lacks an error name")

        self._validate_histories()

        # Attachment acyclicity is the hard at-rest invariant: it is what
        # makes template resolution terminate. Cycles through pipeline sink
        # edges are representable (expansion can close one) and are rejected
        # by the engine's planner instead.
        attachment_edges = [(att.source, att.host) for att in self.attachments.values()]
        cycle = _find_cycle(attachment_edges)
        if cycle is not None:
            raise IntegrityError("attachment cycle: " + " -> ".join(cycle))

    def _validate_pipeline(self, pipe: PipelineBlock, slot_owner: dict[str, str]) -> None:
        if not pipe.text_slots or not pipe.model_slots:
            raise IntegrityError(f"pipeline {pipe.id} has an empty slot list")
        if len(set(pipe.text_slots)) != len(pipe.text_slots):
            raise IntegrityError(f"pipeline {pipe.id} repeats a text slot")
        if len(set(pipe.model_slots)) != len(pipe.model_slots):
            raise IntegrityError(f"pipeline {pipe.id} repeats a model slot")
        for slot, want in [(s, "text") for s in pipe.text_slots] + [
            (s, "model") for s in pipe.model_slots
        ]:
            block = self.blocks.get(slot)
            if block is None or block.kind != want:
                raise IntegrityError(f"pipeline {pipe.id} slot {slot} is not a {want} block")
            owner = slot_owner.setdefault(slot, pipe.id)
            if owner != pipe.id:
                raise IntegrityError(f"{slot} is nested in both {owner} and {pipe.id}")

        for record_id in pipe.output.generations:
            record = self.records.get(record_id)
            if record is None:
                raise IntegrityError(f"container of {pipe.id} lists unknown record {record_id}")
            if record.pipeline != pipe.id:
                raise IntegrityError(f"record {record_id} belongs to {record.pipeline}")

        sink = pipe.output.sink
        if sink.kind not in Sink.KINDS:
            raise IntegrityError(f"pipeline {pipe.id} has sink kind {sink.kind!r}")
        if sink.kind in ("container", "select"):
            if sink.target is not None or sink.prong_index is not None:
                raise IntegrityError(f"{sink.kind} sink of {pipe.id} carries a target")
        else:
            target = self.blocks.get(sink.target)
            if target is None or target.kind != "text":
                raise IntegrityError(f"sink of {pipe.id} targets {sink.target}")
            if sink.kind == "input_prong":
                count = template.prong_count(target.content)
                if not _is_offset(sink.prong_index) or sink.prong_index >= count:
                    raise IntegrityError(
                        f"sink of {pipe.id} feeds missing prong {sink.prong_index}"
                    )
            elif sink.prong_index is not None:
                raise IntegrityError(f"continuation sink of {pipe.id} carries a prong index")

    def _validate_histories(self) -> None:
        text_ids = {b.id for b in self.text_blocks()}
        if set(self.histories) != text_ids:
            extra = set(self.histories) - text_ids
            missing = text_ids - set(self.histories)
            raise IntegrityError(
                f"histories do not match text blocks (extra={sorted(extra)}, missing={sorted(missing)})"
            )
        for block_id, entries in self.histories.items():
            if not entries:
                raise IntegrityError(f"history of {block_id} is empty")
            for position, entry in enumerate(entries):
                if entry.seq != position:
                    raise IntegrityError(f"history of {block_id} has gap at {position}")
                if entry.kind not in HISTORY_KINDS:
                    raise IntegrityError(f"history of {block_id} has kind {entry.kind!r}")
                if entry.kind in ("continuation", "select_replacement"):
                    if entry.ref not in self.records:
                        raise IntegrityError(
                            f"history of {block_id} references unknown record {entry.ref}"
                        )
                if entry.kind == "reverted":
                    if entry.to_seq is None or not (0 <= entry.to_seq < entry.seq):
                        raise IntegrityError(f"revert entry of {block_id} targets {entry.to_seq}")
            if entries[-1].content_after != self.blocks[block_id].content:
                raise IntegrityError(f"history of {block_id} does not end at live content")


def new_document(title: str = "", doc_id: str | None = None) -> CanvasDocument:
    return CanvasDocument(doc_id or uuid.uuid4().hex, title)


def _geometry_or_default(geometry: Geometry | None) -> Geometry:
    if geometry is None:
        geometry = Geometry(0.0, 0.0, 240.0, 120.0)
    geometry.check()
    return geometry


def _is_offset(value) -> bool:
    return isinstance(value, int) and not isinstance(value, bool) and value >= 0


def _check_params(params: ModelParams, where: str) -> None:
    try:
        params.check()
    except Exception as exc:
        raise IntegrityError(f"{where} has invalid params: {exc}") from exc


def _reaches(edges: list[tuple[str, str]], start: str, goal: str) -> bool:
    """True when ``goal`` is reachable from ``start`` (trivially when equal)."""
    if start == goal:
        return True
    adjacency: dict[str, list[str]] = {}
    for a, b in edges:
        adjacency.setdefault(a, []).append(b)
    seen = {start}
    frontier = [start]
    while frontier:
        node = frontier.pop()
        for neighbour in adjacency.get(node, ()):
            if neighbour == goal:
                return True
            if neighbour not in seen:
                seen.add(neighbour)
                frontier.append(neighbour)
    return False


def _find_cycle(edges: list[tuple[str, str]]) -> list[str] | None:
    """First cycle in a directed edge list, as a node path, else None.

    Iterative DFS with the usual white/grey/black coloring; self-loops count.
    """
    adjacency: dict[str, list[str]] = {}
    for a, b in edges:
        adjacency.setdefault(a, []).append(b)
        adjacency.setdefault(b, [])
    color: dict[str, int] = {}
    for root in adjacency:
        if color.get(root):
            continue
        stack: list[tuple[str, int]] = [(root, 0)]
        path: list[str] = []
        while stack:
            node, edge_index = stack.pop()
            if edge_index == 0:
                color[node] = 1
                path.append(node)
            neighbours = adjacency[node]
            advanced = False
            while edge_index < len(neighbours):
                nxt = neighbours[edge_index]
                edge_index += 1
                state = color.get(nxt, 0)
                if state == 1:
                    return path[path.index(nxt) :]
                if state == 0:
                    stack.append((node, edge_index))
                    stack.append((nxt, 0))
                    advanced = True
                    break
            if not advanced:
                color[node] = 2
                path.pop()
    return None
