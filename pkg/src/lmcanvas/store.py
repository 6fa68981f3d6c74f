"""Document persistence: canonical .lmcanvas files and the library directory.

The format is canonical JSON: fixed key order, schema_version first, blocks
and records sorted by id, two-space indent. Identical documents therefore
serialize to byte-identical files, and ``save(load(save(d))) == save(d)``.
Loading is strict: unknown keys, wrong types or any invariant violation
raise IntegrityError; an unsupported schema_version is rejected, never
migrated.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass
from datetime import datetime, timezone

from lmcanvas.blocks import (
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
    Substitution,
    TextBlock,
    id_sort_key,
)
from lmcanvas.document import SCHEMA_VERSION, CanvasDocument
from lmcanvas.errors import IntegrityError, IoError, SchemaVersionUnsupported

FILE_EXTENSION = ".lmcanvas"


# -- serialization -----------------------------------------------------------


def document_to_dict(document: CanvasDocument) -> dict:
    """Canonical dict form: fixed key order, blocks/records sorted by id."""
    blocks = [
        _block_to_dict(document.blocks[block_id])
        for block_id in sorted(document.blocks, key=id_sort_key)
    ]
    attachments = [
        {"host": att.host, "prong_index": att.prong_index, "source": att.source}
        for att in sorted(
            document.attachments.values(), key=lambda a: (id_sort_key(a.host), a.prong_index)
        )
    ]
    selection = None
    if document.selection is not None:
        selection = {
            "block": document.selection.block,
            "start": document.selection.start,
            "end": document.selection.end,
        }
    records = [
        _record_to_dict(document.records[record_id])
        for record_id in sorted(document.records, key=id_sort_key)
    ]
    histories = {
        block_id: [_entry_to_dict(entry) for entry in document.histories[block_id]]
        for block_id in sorted(document.histories, key=id_sort_key)
    }
    return {
        "schema_version": document.schema_version,
        "id": document.id,
        "title": document.title,
        "next_seq": document.next_seq,
        "clock": document.clock,
        "blocks": blocks,
        "attachments": attachments,
        "selection": selection,
        "records": records,
        "histories": histories,
    }


def dumps(document: CanvasDocument) -> str:
    return json.dumps(document_to_dict(document), indent=2, ensure_ascii=False) + "\n"


def _geometry_to_dict(geometry: Geometry) -> dict:
    return {
        "x": geometry.x,
        "y": geometry.y,
        "width": geometry.width,
        "height": geometry.height,
    }


def _params_to_dict(params: ModelParams) -> dict:
    return {
        "model_name": params.model_name,
        "temperature": params.temperature,
        "top_p": params.top_p,
        "max_tokens": params.max_tokens,
        "stop_sequences": list(params.stop_sequences),
        "presence_penalty": params.presence_penalty,
        "frequency_penalty": params.frequency_penalty,
    }


def _sink_to_dict(sink: Sink) -> dict:
    return {"kind": sink.kind, "target": sink.target, "prong_index": sink.prong_index}


def _block_to_dict(block) -> dict:
    if block.kind == "text":
        return {
            "kind": "text",
            "id": block.id,
            "content": block.content,
            "geometry": _geometry_to_dict(block.geometry),
        }
    if block.kind == "model":
        return {
            "kind": "model",
            "id": block.id,
            "params": _params_to_dict(block.params),
            "geometry": _geometry_to_dict(block.geometry),
        }
    return {
        "kind": "pipeline",
        "id": block.id,
        "text_slots": list(block.text_slots),
        "model_slots": list(block.model_slots),
        "output": {
            "generations": list(block.output.generations),
            "sink": _sink_to_dict(block.output.sink),
        },
        "geometry": _geometry_to_dict(block.geometry),
    }


def _record_to_dict(record: GenerationRecord) -> dict:
    prompt = None
    if record.resolved_prompt is not None:
        prompt = {
            "text": record.resolved_prompt.text,
            "provenance": [
                {
                    "kind": sub.kind,
                    "index": sub.index,
                    "text": sub.text,
                    "source": sub.source,
                    "selection": list(sub.selection) if sub.selection else None,
                }
                for sub in record.resolved_prompt.provenance
            ],
        }
    return {
        "id": record.id,
        "pipeline": record.pipeline,
        "text_slot": record.text_slot,
        "model_slot": record.model_slot,
        "status": record.status,
        "error_name": record.error_name,
        "error_message": record.error_message,
        "resolved_prompt": prompt,
        "params_snapshot": _params_to_dict(record.params_snapshot),
        "output_text": record.output_text,
        "output_block": record.output_block,
        "created_at": record.created_at,
    }


def _entry_to_dict(entry: HistoryEntry) -> dict:
    return {
        "seq": entry.seq,
        "kind": entry.kind,
        "content_after": entry.content_after,
        "created_at": entry.created_at,
        "ref": entry.ref,
        "origin": entry.origin,
        "to_seq": entry.to_seq,
    }


# -- strict parsing ----------------------------------------------------------


def _fail(path: str, message: str):
    raise IntegrityError(f"{path}: {message}")


def _expect_obj(value, path: str, keys: tuple) -> dict:
    if not isinstance(value, dict):
        _fail(path, f"expected object, got {type(value).__name__}")
    actual = set(value)
    expected = set(keys)
    if actual != expected:
        unknown = sorted(actual - expected)
        missing = sorted(expected - actual)
        _fail(path, f"wrong fields (unknown={unknown}, missing={missing})")
    return value


def _get_str(value, path: str) -> str:
    if not isinstance(value, str):
        _fail(path, "expected string")
    return value


def _get_opt_str(value, path: str):
    if value is None:
        return None
    return _get_str(value, path)


def _get_int(value, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        _fail(path, "expected integer")
    return value


def _get_opt_int(value, path: str):
    if value is None:
        return None
    return _get_int(value, path)


def _get_float(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        _fail(path, "expected number")
    return float(value)


def _get_list(value, path: str) -> list:
    if not isinstance(value, list):
        _fail(path, "expected array")
    return value


def _parse_geometry(value, path: str) -> Geometry:
    obj = _expect_obj(value, path, ("x", "y", "width", "height"))
    return Geometry(
        _get_float(obj["x"], path + ".x"),
        _get_float(obj["y"], path + ".y"),
        _get_float(obj["width"], path + ".width"),
        _get_float(obj["height"], path + ".height"),
    )


def _parse_params(value, path: str) -> ModelParams:
    obj = _expect_obj(value, path, ModelParams.FIELDS)
    return ModelParams(
        model_name=_get_str(obj["model_name"], path + ".model_name"),
        temperature=_get_float(obj["temperature"], path + ".temperature"),
        top_p=_get_float(obj["top_p"], path + ".top_p"),
        max_tokens=_get_int(obj["max_tokens"], path + ".max_tokens"),
        stop_sequences=[
            _get_str(item, path + ".stop_sequences[]")
            for item in _get_list(obj["stop_sequences"], path + ".stop_sequences")
        ],
        presence_penalty=_get_float(obj["presence_penalty"], path + ".presence_penalty"),
        frequency_penalty=_get_float(obj["frequency_penalty"], path + ".frequency_penalty"),
    )


def _parse_sink(value, path: str) -> Sink:
    obj = _expect_obj(value, path, ("kind", "target", "prong_index"))
    return Sink(
        kind=_get_str(obj["kind"], path + ".kind"),
        target=_get_opt_str(obj["target"], path + ".target"),
        prong_index=_get_opt_int(obj["prong_index"], path + ".prong_index"),
    )


def _parse_block(value, path: str):
    if not isinstance(value, dict):
        _fail(path, "expected object")
    kind = value.get("kind")
    if kind == "text":
        obj = _expect_obj(value, path, ("kind", "id", "content", "geometry"))
        return TextBlock(
            id=_get_str(obj["id"], path + ".id"),
            content=_get_str(obj["content"], path + ".content"),
            geometry=_parse_geometry(obj["geometry"], path + ".geometry"),
        )
    if kind == "model":
        obj = _expect_obj(value, path, ("kind", "id", "params", "geometry"))
        return ModelBlock(
            id=_get_str(obj["id"], path + ".id"),
            params=_parse_params(obj["params"], path + ".params"),
            geometry=_parse_geometry(obj["geometry"], path + ".geometry"),
        )
    if kind == "pipeline":
        obj = _expect_obj(
            value, path, ("kind", "id", "text_slots", "model_slots", "output", "geometry")
        )
        output = _expect_obj(obj["output"], path + ".output", ("generations", "sink"))
        return PipelineBlock(
            id=_get_str(obj["id"], path + ".id"),
            text_slots=[
                _get_str(item, path + ".text_slots[]")
                for item in _get_list(obj["text_slots"], path + ".text_slots")
            ],
            model_slots=[
                _get_str(item, path + ".model_slots[]")
                for item in _get_list(obj["model_slots"], path + ".model_slots")
            ],
            output=OutputContainer(
                generations=[
                    _get_str(item, path + ".output.generations[]")
                    for item in _get_list(output["generations"], path + ".output.generations")
                ],
                sink=_parse_sink(output["sink"], path + ".output.sink"),
            ),
            geometry=_parse_geometry(obj["geometry"], path + ".geometry"),
        )
    _fail(path, f"unknown block kind {kind!r}")


def _parse_record(value, path: str) -> GenerationRecord:
    obj = _expect_obj(
        value,
        path,
        (
            "id",
            "pipeline",
            "text_slot",
            "model_slot",
            "status",
            "error_name",
            "error_message",
            "resolved_prompt",
            "params_snapshot",
            "output_text",
            "output_block",
            "created_at",
        ),
    )
    prompt = None
    if obj["resolved_prompt"] is not None:
        prompt_obj = _expect_obj(
            obj["resolved_prompt"], path + ".resolved_prompt", ("text", "provenance")
        )
        substitutions = []
        for i, sub in enumerate(
            _get_list(prompt_obj["provenance"], path + ".resolved_prompt.provenance")
        ):
            sub_path = f"{path}.resolved_prompt.provenance[{i}]"
            sub_obj = _expect_obj(sub, sub_path, ("kind", "index", "text", "source", "selection"))
            selection = None
            if sub_obj["selection"] is not None:
                raw = _get_list(sub_obj["selection"], sub_path + ".selection")
                if len(raw) != 3:
                    _fail(sub_path + ".selection", "expected [block, start, end]")
                selection = (
                    _get_str(raw[0], sub_path + ".selection[0]"),
                    _get_int(raw[1], sub_path + ".selection[1]"),
                    _get_int(raw[2], sub_path + ".selection[2]"),
                )
            substitutions.append(
                Substitution(
                    kind=_get_str(sub_obj["kind"], sub_path + ".kind"),
                    index=_get_int(sub_obj["index"], sub_path + ".index"),
                    text=_get_str(sub_obj["text"], sub_path + ".text"),
                    source=_get_opt_str(sub_obj["source"], sub_path + ".source"),
                    selection=selection,
                )
            )
        prompt = ResolvedPrompt(
            text=_get_str(prompt_obj["text"], path + ".resolved_prompt.text"),
            provenance=tuple(substitutions),
        )
    return GenerationRecord(
        id=_get_str(obj["id"], path + ".id"),
        pipeline=_get_str(obj["pipeline"], path + ".pipeline"),
        text_slot=_get_str(obj["text_slot"], path + ".text_slot"),
        model_slot=_get_str(obj["model_slot"], path + ".model_slot"),
        params_snapshot=_parse_params(obj["params_snapshot"], path + ".params_snapshot"),
        output_text=_get_str(obj["output_text"], path + ".output_text"),
        created_at=_get_int(obj["created_at"], path + ".created_at"),
        status=_get_str(obj["status"], path + ".status"),
        resolved_prompt=prompt,
        output_block=_get_opt_str(obj["output_block"], path + ".output_block"),
        error_name=_get_opt_str(obj["error_name"], path + ".error_name"),
        error_message=_get_opt_str(obj["error_message"], path + ".error_message"),
    )


def _parse_entry(value, path: str) -> HistoryEntry:
    obj = _expect_obj(
        value, path, ("seq", "kind", "content_after", "created_at", "ref", "origin", "to_seq")
    )
    return HistoryEntry(
        seq=_get_int(obj["seq"], path + ".seq"),
        kind=_get_str(obj["kind"], path + ".kind"),
        content_after=_get_str(obj["content_after"], path + ".content_after"),
        created_at=_get_int(obj["created_at"], path + ".created_at"),
        ref=_get_opt_str(obj["ref"], path + ".ref"),
        origin=_get_opt_str(obj["origin"], path + ".origin"),
        to_seq=_get_opt_int(obj["to_seq"], path + ".to_seq"),
    )


def document_from_dict(data) -> CanvasDocument:
    """Rebuild a document from its canonical dict; validates everything."""
    if not isinstance(data, dict):
        raise IntegrityError("document payload must be an object")
    keys = list(data.keys())
    if not keys or keys[0] != "schema_version":
        raise IntegrityError("schema_version must be the first field")
    version = data["schema_version"]
    if isinstance(version, bool) or not isinstance(version, int):
        raise IntegrityError("schema_version must be an integer")
    if version != SCHEMA_VERSION:
        raise SchemaVersionUnsupported(
            f"schema_version {version} is not supported (expected {SCHEMA_VERSION})"
        )
    obj = _expect_obj(
        data,
        "document",
        (
            "schema_version",
            "id",
            "title",
            "next_seq",
            "clock",
            "blocks",
            "attachments",
            "selection",
            "records",
            "histories",
        ),
    )

    doc_id = _get_str(obj["id"], "document.id")
    if not doc_id:
        raise IntegrityError("document.id: must not be empty")
    document = CanvasDocument(doc_id, _get_str(obj["title"], "document.title"))
    document.next_seq = _get_int(obj["next_seq"], "document.next_seq")
    document.clock = _get_int(obj["clock"], "document.clock")

    for i, raw in enumerate(_get_list(obj["blocks"], "document.blocks")):
        block = _parse_block(raw, f"document.blocks[{i}]")
        if block.id in document.blocks:
            raise IntegrityError(f"duplicate block id {block.id}")
        document.blocks[block.id] = block

    for i, raw in enumerate(_get_list(obj["attachments"], "document.attachments")):
        path = f"document.attachments[{i}]"
        att_obj = _expect_obj(raw, path, ("host", "prong_index", "source"))
        attachment = ProngAttachment(
            host=_get_str(att_obj["host"], path + ".host"),
            prong_index=_get_int(att_obj["prong_index"], path + ".prong_index"),
            source=_get_str(att_obj["source"], path + ".source"),
        )
        key = (attachment.host, attachment.prong_index)
        if key in document.attachments:
            raise IntegrityError(f"duplicate attachment at {key}")
        document.attachments[key] = attachment

    if obj["selection"] is not None:
        sel_obj = _expect_obj(obj["selection"], "document.selection", ("block", "start", "end"))
        document.selection = Selection(
            block=_get_str(sel_obj["block"], "document.selection.block"),
            start=_get_int(sel_obj["start"], "document.selection.start"),
            end=_get_int(sel_obj["end"], "document.selection.end"),
        )

    for i, raw in enumerate(_get_list(obj["records"], "document.records")):
        record = _parse_record(raw, f"document.records[{i}]")
        if record.id in document.records:
            raise IntegrityError(f"duplicate record id {record.id}")
        document.records[record.id] = record

    histories = obj["histories"]
    if not isinstance(histories, dict):
        raise IntegrityError("document.histories: expected object")
    for block_id, raw_entries in histories.items():
        entries = [
            _parse_entry(raw, f"document.histories[{block_id}][{i}]")
            for i, raw in enumerate(_get_list(raw_entries, f"document.histories[{block_id}]"))
        ]
        document.histories[_get_str(block_id, "document.histories key")] = entries

    document.validate()
    return document


def loads(text: str) -> CanvasDocument:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise IntegrityError(f"file is not valid JSON: {exc}") from exc
    return document_from_dict(data)


# -- files and the library -----------------------------------------------------


def save(document: CanvasDocument, destination) -> None:
    """Write canonically and atomically (temp file + rename)."""
    destination = os.fspath(destination)
    payload = dumps(document)
    directory = os.path.dirname(destination) or "."
    try:
        fd, temp_path = tempfile.mkstemp(dir=directory, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as handle:
                handle.write(payload)
            os.replace(temp_path, destination)
        except BaseException:
            if os.path.exists(temp_path):
                os.unlink(temp_path)
            raise
    except OSError as exc:
        raise IoError(f"cannot write {destination}: {exc}") from exc


def load(source) -> CanvasDocument:
    source = os.fspath(source)
    try:
        with open(source, encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        raise IoError(f"cannot read {source}: {exc}") from exc
    except UnicodeDecodeError as exc:
        raise IntegrityError(f"{source} is not valid UTF-8: {exc}") from exc
    return loads(text)


@dataclass(frozen=True)
class DocumentInfo:
    id: str
    title: str
    modified_at: datetime
    path: str


def list_documents(library_path) -> tuple[list[DocumentInfo], list[str]]:
    """All readable .lmcanvas files, newest first, plus warnings for the rest."""
    library_path = os.fspath(library_path)
    try:
        names = sorted(os.listdir(library_path))
    except OSError as exc:
        raise IoError(f"cannot list {library_path}: {exc}") from exc

    entries: list[DocumentInfo] = []
    warnings: list[str] = []
    for name in names:
        if not name.endswith(FILE_EXTENSION):
            continue
        path = os.path.join(library_path, name)
        try:
            document = load(path)
            modified = datetime.fromtimestamp(os.path.getmtime(path), tz=timezone.utc)
        except Exception as exc:
            warnings.append(f"{name}: {exc}")
            continue
        entries.append(DocumentInfo(document.id, document.title, modified, path))
    entries.sort(key=lambda info: (info.modified_at, info.id), reverse=True)
    return entries, warnings
