"""Persistence: canonical round-trips, strict loading, the library listing."""

from __future__ import annotations

import json
import os
import random

import pytest

from lmcanvas.document import new_document
from lmcanvas.engine import generate
from lmcanvas.errors import IntegrityError, IoError, SchemaVersionUnsupported
from lmcanvas.store import (
    FILE_EXTENSION,
    document_to_dict,
    dumps,
    list_documents,
    load,
    loads,
    save,
)

from conftest import add_model, add_pipeline, add_text
from fuzzing import FuzzDriver


def build_random_document(rng: random.Random, steps=12):
    document = new_document("fuzzed", doc_id="fuzzed")
    FuzzDriver(document, rng).run_sequence(steps)
    return document


class TestRoundTrip:
    def test_empty_document(self, doc):
        text = dumps(doc)
        again = loads(text)
        assert document_to_dict(again) == document_to_dict(doc)
        assert dumps(again) == text

    def test_document_with_everything(self, doc, mock_provider):
        host = add_text(doc, "Rewrite: [[input]] or [[select]]")
        src = add_text(doc, "draft text")
        doc.attach(host, 0, src)
        doc.set_selection(src, 0, 5)
        pipe = add_pipeline(doc, host, add_model(doc, temperature=1.1))
        generate(doc, pipe, mock_provider)
        doc.edit_text(src, "draft text v2")
        text = dumps(doc)
        again = loads(text)
        assert document_to_dict(again) == document_to_dict(doc)
        assert dumps(again) == text

    def test_randomized_semantic_equality(self):
        rng = random.Random(808)
        for _ in range(40):
            document = build_random_document(rng)
            text = dumps(document)
            again = loads(text)
            assert document_to_dict(again) == document_to_dict(document)
            assert dumps(again) == text

    def test_schema_version_is_first_key(self, doc):
        raw = dumps(doc)
        assert list(json.loads(raw))[0] == "schema_version"
        assert raw.startswith('{\n  "schema_version": 1,')


class TestStrictLoading:
    def test_unknown_schema_version(self, doc):
        data = document_to_dict(doc)
        data["schema_version"] = 2
        with pytest.raises(SchemaVersionUnsupported):
            loads(json.dumps(data))

    def test_schema_version_not_first(self, doc):
        data = document_to_dict(doc)
        reordered = {"id": data["id"], **data}
        with pytest.raises(IntegrityError):
            loads(json.dumps(reordered))

    def test_not_json(self):
        with pytest.raises(IntegrityError):
            loads("][ not json")

    def test_unknown_key_rejected(self, doc):
        data = document_to_dict(doc)
        data["surprise"] = 1
        with pytest.raises(IntegrityError):
            loads(json.dumps(data))

    def test_missing_sink_target_rejected(self, doc):
        pipe = add_pipeline(doc, add_text(doc, "x"), add_model(doc))
        data = document_to_dict(doc)
        for block in data["blocks"]:
            if block["id"] == pipe:
                block["output"]["sink"] = {
                    "kind": "continuation",
                    "target": "t404",
                    "prong_index": None,
                }
        with pytest.raises(IntegrityError):
            loads(json.dumps(data))

    def test_dangling_attachment_rejected(self, doc):
        add_text(doc, "a [[input]]")
        data = document_to_dict(doc)
        data["attachments"] = [{"host": "t1", "prong_index": 0, "source": "t999"}]
        with pytest.raises(IntegrityError):
            loads(json.dumps(data))

    def test_history_content_mismatch_rejected(self, doc):
        block_id = add_text(doc, "live")
        data = document_to_dict(doc)
        data["histories"][block_id][-1]["content_after"] = "stale"
        with pytest.raises(IntegrityError):
            loads(json.dumps(data))

    def test_nesting_exclusivity_rejected(self, doc):
        text = add_text(doc, "x")
        model = add_model(doc)
        add_pipeline(doc, text, model)
        data = document_to_dict(doc)
        data["next_seq"] = 99
        data["blocks"].append(
            {
                "kind": "pipeline",
                "id": "p9",
                "text_slots": [text],
                "model_slots": [model],
                "output": {
                    "generations": [],
                    "sink": {"kind": "container", "target": None, "prong_index": None},
                },
                "geometry": {"x": 0.0, "y": 0.0, "width": 10.0, "height": 10.0},
            }
        )
        with pytest.raises(IntegrityError):
            loads(json.dumps(data))

    def test_attachment_cycle_rejected(self, doc):
        a = add_text(doc, "[[input]] a")
        b = add_text(doc, "[[input]] b")
        data = document_to_dict(doc)
        data["attachments"] = [
            {"host": a, "prong_index": 0, "source": b},
            {"host": b, "prong_index": 0, "source": a},
        ]
        with pytest.raises(IntegrityError):
            loads(json.dumps(data))

    def test_wrong_types_rejected(self, doc):
        block_id = add_text(doc, "x")
        data = document_to_dict(doc)
        for block in data["blocks"]:
            if block["id"] == block_id:
                block["content"] = 42
        with pytest.raises(IntegrityError):
            loads(json.dumps(data))

    def test_non_finite_geometry_rejected(self, doc):
        block_id = add_text(doc, "x")
        data = document_to_dict(doc)
        for block in data["blocks"]:
            if block["id"] == block_id:
                block["geometry"]["width"] = float("inf")
        with pytest.raises(IntegrityError):
            loads(json.dumps(data))  # json emits Infinity, loader must reject

    def test_counter_regression_rejected(self, doc):
        add_text(doc, "x")
        data = document_to_dict(doc)
        data["next_seq"] = 0
        with pytest.raises(IntegrityError):
            loads(json.dumps(data))


class TestFiles:
    def test_save_load(self, doc, tmp_path):
        add_text(doc, "content")
        path = tmp_path / ("x" + FILE_EXTENSION)
        save(doc, path)
        again = load(path)
        assert document_to_dict(again) == document_to_dict(doc)

    def test_save_is_canonical_bytes(self, doc, tmp_path):
        path = tmp_path / ("x" + FILE_EXTENSION)
        save(doc, path)
        first = path.read_bytes()
        save(load(path), path)
        assert path.read_bytes() == first

    def test_missing_file(self, tmp_path):
        with pytest.raises(IoError):
            load(tmp_path / "nope.lmcanvas")

    def test_unwritable_destination(self, doc, tmp_path):
        with pytest.raises(IoError):
            save(doc, tmp_path / "no" / "such" / "dir" / "x.lmcanvas")


class TestLibrary:
    def test_empty_directory(self, tmp_path):
        assert list_documents(tmp_path) == ([], [])

    def test_sorted_by_mtime_desc(self, tmp_path):
        older = new_document("older", doc_id="older")
        newer = new_document("newer", doc_id="newer")
        old_path = tmp_path / ("older" + FILE_EXTENSION)
        new_path = tmp_path / ("newer" + FILE_EXTENSION)
        save(older, old_path)
        save(newer, new_path)
        os.utime(old_path, (1_000_000, 1_000_000))
        os.utime(new_path, (2_000_000, 2_000_000))
        entries, warnings = list_documents(tmp_path)
        assert [e.id for e in entries] == ["newer", "older"]
        assert warnings == []

    def test_corrupt_file_reported_not_fatal(self, tmp_path, doc):
        save(doc, tmp_path / ("good" + FILE_EXTENSION))
        (tmp_path / ("bad" + FILE_EXTENSION)).write_text("}{", encoding="utf-8")
        entries, warnings = list_documents(tmp_path)
        assert [e.id for e in entries] == [doc.id]
        assert len(warnings) == 1 and "bad" in warnings[0]

    def test_missing_directory(self, tmp_path):
        with pytest.raises(IoError):
            list_documents(tmp_path / "missing")

    def test_non_lmcanvas_files_ignored(self, tmp_path, doc):
        save(doc, tmp_path / ("a" + FILE_EXTENSION))
        (tmp_path / "notes.txt").write_text("hi", encoding="utf-8")
        entries, warnings = list_documents(tmp_path)
        assert len(entries) == 1
        assert warnings == []
