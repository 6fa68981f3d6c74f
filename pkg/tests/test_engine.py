"""Engine: planning, cross-product generation, routing, chained runs."""

from __future__ import annotations

import random
import threading
import time

import pytest

from lmcanvas.blocks import ProngAttachment, Sink
from lmcanvas.document import new_document
from lmcanvas.engine import generate, plan, route, run
from lmcanvas.errors import CycleDetected, NoSelection, UnknownBlock
from lmcanvas.provider import MockProvider
from lmcanvas.store import dumps, loads

from conftest import add_model, add_pipeline, add_text
from oracles import chain_run, has_cycle, mock_completion, splice


def chained_pair(doc):
    """A -> prong of B's text; returns (pipe_a, pipe_b, text_b)."""
    ta = add_text(doc, "alpha beta")
    pa = add_pipeline(doc, ta, add_model(doc))
    tb = add_text(doc, "Improve: [[input]]")
    pb = add_pipeline(doc, tb, add_model(doc))
    doc.connect_output(pa, Sink.input_prong(tb, 0))
    return pa, pb, tb


class TestPlan:
    def test_single_pipeline(self, doc):
        pipe = add_pipeline(doc, add_text(doc, "x"), add_model(doc))
        result = plan(doc, [pipe])
        assert result.stages == [[pipe]]
        assert result.edges == []

    def test_chain_orders_upstream_first(self, doc):
        pa, pb, _ = chained_pair(doc)
        result = plan(doc, [pb])
        assert result.stages == [[pa], [pb]]
        assert result.edges == [(pa, pb)]

    def test_mutual_cycle_detected(self, doc):
        pa, pb, tb = chained_pair(doc)
        ta = doc.blocks[pa].text_slots[0]
        # Force the reverse edge behind the ops layer.
        doc.blocks[pb].output.sink = Sink.input_prong(ta, 0)
        doc.blocks[ta].content = "back [[input]]"
        doc.histories[ta][-1].content_after = "back [[input]]"
        with pytest.raises(CycleDetected) as err:
            plan(doc, [pa, pb])
        assert set(err.value.cycle) == {pa, pb}
        assert has_cycle([(pa, pb), (pb, pa)])

    def test_unknown_root(self, doc):
        with pytest.raises(UnknownBlock):
            plan(doc, ["p404"])

    def test_expand_can_close_a_chain_cycle_plan_rejects(self, doc):
        # expand_pipeline does not cycle-check, so a self-feeding pipeline is
        # representable; the planner is the gate.
        seed = add_text(doc, "seed")
        pipe = add_pipeline(doc, seed, add_model(doc))
        target = add_text(doc, "loop [[input]]")
        doc.connect_output(pipe, Sink.input_prong(target, 0))
        doc.expand_pipeline(pipe, target)
        doc.validate()  # chain cycles are legal at rest
        with pytest.raises(CycleDetected) as err:
            plan(doc, [pipe])
        assert err.value.cycle == [pipe]

    def test_plan_soundness_on_random_dags(self):
        rng = random.Random(1312)
        for _ in range(80):
            doc = new_document("dag", doc_id="dag")
            pipes = []
            for _ in range(rng.randint(1, 6)):
                text = add_text(doc, "p [[input]]")
                pipes.append(add_pipeline(doc, text, add_model(doc)))
            for upstream in pipes:
                if rng.random() < 0.5:
                    downstream = rng.choice(pipes)
                    if downstream == upstream:
                        continue
                    target = doc.blocks[downstream].text_slots[0]
                    try:
                        doc.connect_output(upstream, Sink.input_prong(target, 0))
                    except Exception:
                        pass
            result = plan(doc, pipes)
            index = {pid: i for i, stage in enumerate(result.stages) for pid in stage}
            for a, b in result.edges:
                assert index[a] < index[b]


class TestGenerate:
    def test_single_pairing(self, doc, mock_provider):
        pipe = add_pipeline(doc, add_text(doc, "a b c"), add_model(doc, temperature=0.7))
        records = generate(doc, pipe, mock_provider).records
        assert len(records) == 1
        assert records[0].status == "ok"
        assert records[0].output_text == "MOCK[t=0.7] c b a"
        doc.validate()

    def test_cross_product_text_major(self, doc, mock_provider):
        t1 = add_text(doc, "one")
        t2 = add_text(doc, "two")
        models = [add_model(doc, temperature=t / 10) for t in range(3)]
        pipe = add_pipeline(doc, t1, models[0])
        doc.expand_pipeline(pipe, t2)
        for model in models[1:]:
            doc.expand_pipeline(pipe, model)
        records = generate(doc, pipe, mock_provider).records
        assert len(records) == 6
        assert [(r.text_slot, r.model_slot) for r in records] == [
            (t1, models[0]),
            (t1, models[1]),
            (t1, models[2]),
            (t2, models[0]),
            (t2, models[1]),
            (t2, models[2]),
        ]

    def test_unresolved_prong_yields_error_records(self, doc, mock_provider):
        text = add_text(doc, "needs [[input]]")
        pipe = add_pipeline(doc, text, add_model(doc))
        doc.expand_pipeline(pipe, add_model(doc))
        records = generate(doc, pipe, mock_provider).records
        assert len(records) == 2
        assert all(r.status == "error" for r in records)
        assert all(r.error_name == "UnresolvedProng" for r in records)
        doc.validate()

    def test_provider_failure_does_not_abort_siblings(self, doc, mock_provider):
        bad = add_text(doc, "[[FAIL]]")
        good = add_text(doc, "fine words")
        pipe = add_pipeline(doc, bad, add_model(doc))
        doc.expand_pipeline(pipe, good)
        records = generate(doc, pipe, mock_provider).records
        assert [r.status for r in records] == ["error", "ok"]
        assert records[0].error_name == "ProviderError"

    def test_records_land_in_container_and_registry(self, doc, mock_provider):
        pipe = add_pipeline(doc, add_text(doc, "x"), add_model(doc))
        records = generate(doc, pipe, mock_provider).records
        container = doc.blocks[pipe].output
        assert container.generations == [records[0].id]
        assert doc.records[records[0].id] is records[0]

    def test_params_snapshot_immutable(self, doc, mock_provider):
        model = add_model(doc, temperature=0.9)
        pipe = add_pipeline(doc, add_text(doc, "x"), model)
        record = generate(doc, pipe, mock_provider).records[0]
        doc.configure_model(model, "temperature", 0.1)
        assert record.params_snapshot.temperature == 0.9


class TestRoute:
    def test_container_materializes_block(self, doc, mock_provider):
        pipe = add_pipeline(doc, add_text(doc, "seed words"), add_model(doc))
        record = generate(doc, pipe, mock_provider).records[0]
        assert record.output_block in doc.blocks
        assert doc.blocks[record.output_block].content == record.output_text
        assert doc.history_entries(record.output_block)[0].ref == record.id
        doc.validate()

    def test_continuation_appends_raw(self, doc, mock_provider):
        prompt = add_text(doc, "a b")
        target = add_text(doc, "Once upon a time")
        pipe = add_pipeline(doc, prompt, add_model(doc))
        doc.connect_output(pipe, Sink.continuation(target))
        record = generate(doc, pipe, mock_provider).records[0]
        assert doc.blocks[target].content == "Once upon a time" + record.output_text
        doc.validate()

    def test_select_splice(self, doc, mock_provider):
        story = add_text(doc, "The worst day")
        doc.set_selection(story, 4, 8)  # "wors"
        prompt = add_text(doc, "best")
        pipe = add_pipeline(doc, prompt, add_model(doc))
        doc.connect_output(pipe, Sink.select())
        record = generate(doc, pipe, mock_provider).records[0]
        expected = splice("The worst day", 4, 8, record.output_text)
        assert doc.blocks[story].content == expected
        assert doc.selection is None
        assert doc.history_entries(story)[-1].kind == "select_replacement"
        doc.validate()

    def test_select_without_selection_is_reported(self, doc, mock_provider):
        prompt = add_text(doc, "words")
        pipe = add_pipeline(doc, prompt, add_model(doc))
        doc.connect_output(pipe, Sink.select())
        result = generate(doc, pipe, mock_provider)
        assert result.records[0].status == "ok"
        assert result.report.routing_errors[0][1] == "NoSelection"
        doc.validate()

    def test_only_first_ok_record_consumes_selection(self, doc, mock_provider):
        story = add_text(doc, "select me")
        doc.set_selection(story, 0, 6)
        prompt = add_text(doc, "one")
        other = add_text(doc, "two")
        pipe = add_pipeline(doc, prompt, add_model(doc))
        doc.expand_pipeline(pipe, other)
        doc.connect_output(pipe, Sink.select())
        result = generate(doc, pipe, mock_provider)
        assert [r.status for r in result.records] == ["ok", "ok"]
        # first output replaced the selection, second stayed in the container
        assert result.records[0].output_text in doc.blocks[story].content
        assert result.records[1].output_text not in doc.blocks[story].content
        assert result.report.routing_errors == []
        doc.validate()

    def test_route_requires_ok_pipeline(self, doc, mock_provider):
        pipe = add_pipeline(doc, add_text(doc, "x"), add_model(doc))
        record = generate(doc, pipe, mock_provider).records[0]
        doc.delete_block(pipe)
        from lmcanvas.errors import InvalidSinkTarget

        with pytest.raises(InvalidSinkTarget):
            route(doc, record)


class TestRun:
    def test_chain_feeds_downstream(self, doc, mock_provider):
        pa, pb, _ = chained_pair(doc)
        result = run(doc, [pb], mock_provider)
        upstream = doc.records[doc.blocks[pa].output.generations[-1]]
        assert len(result.records) == 1
        assert result.records[0].pipeline == pb
        assert upstream.output_text in result.records[0].resolved_prompt.text
        doc.validate()

    def test_chain_matches_manual_execution(self, doc, mock_provider):
        pa, pb, _ = chained_pair(doc)
        upstream_text, _ = mock_completion("alpha beta", 0.7, 64)
        expected_prompt = "Improve: " + upstream_text
        expected_output, _ = mock_completion(expected_prompt, 0.7, 64)
        result = run(doc, [pb], mock_provider)
        assert result.records[0].resolved_prompt.text == expected_prompt
        assert result.records[0].output_text == expected_output

    def test_chain_binding_is_transient(self, doc, mock_provider):
        pa, pb, tb = chained_pair(doc)
        run(doc, [pb], mock_provider)
        assert doc.attachments == {}  # wiring stays declarative

    def test_upstream_executes_once_with_both_roots(self, doc, mock_provider):
        pa, pb, _ = chained_pair(doc)
        result = run(doc, [pa, pb], mock_provider)
        assert len(doc.blocks[pa].output.generations) == 1
        assert [r.pipeline for r in result.records] == [pa, pb]

    def test_empty_roots(self, doc, mock_provider):
        assert run(doc, [], mock_provider).records == []

    def test_cycle_detected_before_any_generation(self, doc):
        pa, pb, tb = chained_pair(doc)
        ta = doc.blocks[pa].text_slots[0]
        doc.blocks[ta].content = "loop [[input]]"
        doc.histories[ta][-1].content_after = "loop [[input]]"
        doc.blocks[pb].output.sink = Sink.input_prong(ta, 0)
        with pytest.raises(CycleDetected):
            run(doc, [pa])
        assert doc.records == {}

    def test_matches_chain_oracle_on_random_documents(self):
        rng = random.Random(515151)
        agreements = 0
        for _ in range(60):
            doc = new_document("chains", doc_id="chains")
            pipes = []
            for _ in range(rng.randint(1, 5)):
                content = rng.choice(["seed words here", "go [[input]] now", "x [[input]]"])
                text = add_text(doc, content)
                pipe = add_pipeline(doc, text, add_model(doc, temperature=rng.choice([0.0, 0.7, 1.5])))
                if "[[input]]" in content and rng.random() < 0.5:
                    src = add_text(doc, "att " + str(rng.randint(0, 9)))
                    doc.attach(text, 0, src)
                pipes.append(pipe)
            for upstream in pipes:
                if rng.random() < 0.6:
                    downstream = rng.choice(pipes)
                    if downstream == upstream:
                        continue
                    target = doc.blocks[downstream].text_slots[0]
                    if "[[input]]" not in doc.blocks[target].content:
                        continue
                    try:
                        doc.connect_output(upstream, Sink.input_prong(target, 0))
                    except Exception:
                        continue
            roots = [p for p in pipes if rng.random() < 0.7] or pipes[:1]
            expected = chain_run(doc, roots)
            assert expected != "cycle"
            result = run(doc, roots, MockProvider())
            got = [
                (r.pipeline, r.text_slot, r.model_slot, r.status, r.output_text)
                for r in result.records
            ]
            assert got == expected
            agreements += 1
            doc.validate()
        assert agreements == 60


class TestConcurrency:
    class CountingProvider:
        """Mock wrapper that tracks how many completions run at once."""

        def __init__(self):
            self.inner = MockProvider()
            self.lock = threading.Lock()
            self.active = 0
            self.peak = 0

        def complete(self, request):
            with self.lock:
                self.active += 1
                self.peak = max(self.peak, self.active)
            time.sleep(0.002)
            try:
                return self.inner.complete(request)
            finally:
                with self.lock:
                    self.active -= 1

    def test_in_flight_cap_enforced(self, doc):
        texts = [add_text(doc, f"w{i} x y") for i in range(4)]
        models = [add_model(doc) for _ in range(4)]
        pipe = add_pipeline(doc, texts[0], models[0])
        for extra in texts[1:] + models[1:]:
            doc.expand_pipeline(pipe, extra)
        provider = self.CountingProvider()
        records = generate(doc, pipe, provider, max_workers=3).records
        assert len(records) == 16
        assert 1 < provider.peak <= 3

    def test_routing_fuzz_keeps_document_valid(self):
        rng = random.Random(777)
        for _ in range(40):
            doc = new_document("route", doc_id="route")
            story = add_text(doc, "a long story block with words")
            for i in range(rng.randint(1, 3)):
                text = add_text(doc, rng.choice(["plain words", "hook [[input]]", "[[FAIL]]"]))
                pipe = add_pipeline(doc, text, add_model(doc))
                sink = rng.choice(["container", "continuation", "select", "input_prong"])
                if sink == "continuation":
                    doc.connect_output(pipe, Sink.continuation(story))
                elif sink == "select":
                    doc.connect_output(pipe, Sink.select())
                    if rng.random() < 0.7:
                        doc.set_selection(story, 2, 8)
                elif sink == "input_prong" and "[[input]]" not in doc.blocks[text].content:
                    target = add_text(doc, "chain [[input]] target")
                    doc.connect_output(pipe, Sink.input_prong(target, 0))
            roots = [p.id for p in doc.pipelines()]
            run(doc, roots, MockProvider())
            doc.validate()


class TestDeterminism:
    def test_identical_runs_identical_bytes(self, doc, mock_provider):
        texts = [add_text(doc, f"t{i} words here") for i in range(3)]
        models = [add_model(doc, temperature=i / 2) for i in range(3)]
        pipe = add_pipeline(doc, texts[0], models[0])
        for extra in texts[1:] + models[1:]:
            doc.expand_pipeline(pipe, extra)
        frozen = dumps(doc)
        outcomes = []
        for _ in range(3):
            copy = loads(frozen)
            run(copy, [pipe], MockProvider(), max_workers=4)
            outcomes.append(dumps(copy))
        assert outcomes[0] == outcomes[1] == outcomes[2]
