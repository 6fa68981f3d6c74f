"""Pipeline execution: planning, cross-product generation, output routing.

A run proceeds in stages over the pipeline dependency graph (induced by
input-prong sinks). Within a stage every prompt is resolved against the
pre-stage document snapshot, provider calls may then run concurrently, and
records are committed in deterministic (stage, pipeline id, text-major)
order, so results are independent of provider call scheduling.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from lmcanvas import history as history_mod
from lmcanvas import template
from lmcanvas.blocks import (
    CONTINUATION_SEPARATOR,
    Geometry,
    GenerationRecord,
    id_sort_key,
)
from lmcanvas.document import CanvasDocument, OpReport, _find_cycle
from lmcanvas.errors import (
    CycleDetected,
    InvalidSinkTarget,
    NoSelection,
    ProviderError,
    UnresolvedProng,
)
from lmcanvas.provider import CompletionRequest, MockProvider

DEFAULT_IN_FLIGHT = 4

# Where container-sink generations materialize, relative to their pipeline.
_OUTPUT_GAP = 24.0
_OUTPUT_PITCH = 140.0
_OUTPUT_SIZE = (240.0, 120.0)


@dataclass
class ExecutionPlan:
    """Stages of pipeline ids (upstream first) plus the dependency edges."""

    stages: list[list[str]]
    edges: list[tuple[str, str]]


@dataclass
class RunResult:
    records: list[GenerationRecord]
    report: OpReport


def pipeline_dependency_edges(document: CanvasDocument) -> list[tuple[str, str]]:
    """Edges (P, Q): P's input-prong sink feeds a block Q's prompts pull from."""
    sources_by_host: dict[str, list[str]] = {}
    for att in document.attachments.values():
        sources_by_host.setdefault(att.host, []).append(att.source)

    closures: dict[str, set[str]] = {}
    pipelines = document.pipelines()
    for pipe in pipelines:
        seen: set[str] = set()
        frontier = list(pipe.text_slots)
        while frontier:
            block_id = frontier.pop()
            if block_id in seen:
                continue
            seen.add(block_id)
            frontier.extend(sources_by_host.get(block_id, ()))
        closures[pipe.id] = seen

    edges = []
    for upstream in pipelines:
        sink = upstream.output.sink
        if sink.kind != "input_prong":
            continue
        for downstream in pipelines:
            if sink.target in closures[downstream.id]:
                edges.append((upstream.id, downstream.id))
    return edges


def plan(document: CanvasDocument, roots) -> ExecutionPlan:
    """Stage every pipeline transitively upstream of ``roots``.

    Raises CycleDetected (listing the cycle) when the upstream dependency
    graph is not acyclic.
    """
    root_ids = sorted(set(roots), key=id_sort_key)
    for root in root_ids:
        document.require_pipeline(root)

    edges = pipeline_dependency_edges(document)
    predecessors: dict[str, list[str]] = {}
    for upstream, downstream in edges:
        predecessors.setdefault(downstream, []).append(upstream)

    covered: set[str] = set()
    frontier = list(root_ids)
    while frontier:
        pipeline_id = frontier.pop()
        if pipeline_id in covered:
            continue
        covered.add(pipeline_id)
        frontier.extend(predecessors.get(pipeline_id, ()))

    sub_edges = [(a, b) for a, b in edges if a in covered and b in covered]
    cycle = _find_cycle(sub_edges)
    if cycle is not None:
        raise CycleDetected(cycle)

    level: dict[str, int] = {}

    def level_of(pipeline_id: str) -> int:
        cached = level.get(pipeline_id)
        if cached is not None:
            return cached
        upstream = [p for p in predecessors.get(pipeline_id, ()) if p in covered]
        value = 1 + max((level_of(p) for p in upstream), default=-1)
        level[pipeline_id] = value
        return value

    stages: list[list[str]] = []
    for pipeline_id in covered:
        depth = level_of(pipeline_id)
        while len(stages) <= depth:
            stages.append([])
        stages[depth].append(pipeline_id)
    for stage in stages:
        stage.sort(key=id_sort_key)
    return ExecutionPlan(stages=stages, edges=sorted(sub_edges))


def generate(
    document: CanvasDocument,
    pipeline: str,
    provider=None,
    bindings=None,
    max_workers: int = DEFAULT_IN_FLIGHT,
) -> RunResult:
    """Run one pipeline: a record per (text slot, model slot) pairing.

    Records come back in text-major order. A slot that fails to resolve
    produces error records for its pairings instead of aborting the rest;
    provider failures are likewise captured per pairing.
    """
    document.require_pipeline(pipeline)
    provider = provider or MockProvider()
    report = OpReport()
    per_pipeline = _execute_stage(
        document, [pipeline], provider, bindings or {}, max_workers, report
    )
    return RunResult(records=per_pipeline[pipeline], report=report)


def run(
    document: CanvasDocument,
    roots,
    provider=None,
    max_workers: int = DEFAULT_IN_FLIGHT,
) -> RunResult:
    """Execute the plan for ``roots`` and return the roots' records in stage order.

    An upstream pipeline's input-prong sink binds its latest ok output to
    the target prong for the remainder of the run; the canvas wiring itself
    is left untouched.
    """
    provider = provider or MockProvider()
    execution_plan = plan(document, roots)
    report = OpReport()
    bindings: dict[tuple[str, int], tuple[str, str]] = {}
    by_pipeline: dict[str, list[GenerationRecord]] = {}

    for stage in execution_plan.stages:
        stage_records = _execute_stage(document, stage, provider, bindings, max_workers, report)
        for pipeline_id in stage:
            records = stage_records[pipeline_id]
            by_pipeline[pipeline_id] = records
            pipe = document.blocks.get(pipeline_id)
            sink = pipe.output.sink
            if sink.kind != "input_prong":
                continue
            ok_records = [r for r in records if r.status == "ok"]
            if ok_records:
                latest = ok_records[-1]
                bindings[(sink.target, sink.prong_index)] = (latest.output_text, latest.id)

    root_set = set(roots)
    ordered: list[GenerationRecord] = []
    for stage in execution_plan.stages:
        for pipeline_id in stage:
            if pipeline_id in root_set:
                ordered.extend(by_pipeline[pipeline_id])
    return RunResult(records=ordered, report=report)


def route(document: CanvasDocument, record: GenerationRecord) -> OpReport:
    """Deliver one ok record to its pipeline's current sink.

    container: materialize the output as a new text block; continuation:
    append to the target (raw append, completions carry their own leading
    whitespace); input_prong: validated here, bound by ``run``; select:
    splice over the current selection and consume it.
    """
    report = OpReport()
    pipe = document.blocks.get(record.pipeline)
    if pipe is None or pipe.kind != "pipeline":
        raise InvalidSinkTarget(f"pipeline {record.pipeline} vanished before routing")
    sink = pipe.output.sink

    if sink.kind == "container":
        generations = pipe.output.generations
        slot = generations.index(record.id) if record.id in generations else len(generations)
        geometry = Geometry(
            pipe.geometry.x,
            pipe.geometry.y + pipe.geometry.height + _OUTPUT_GAP + slot * _OUTPUT_PITCH,
            _OUTPUT_SIZE[0],
            _OUTPUT_SIZE[1],
        )
        block_id = document._register_text_block(
            record.output_text, geometry, "created", ref=record.id
        )
        record.output_block = block_id
        report.block_id = block_id
        return report

    if sink.kind == "continuation":
        target = document.blocks.get(sink.target)
        if target is None or target.kind != "text":
            raise InvalidSinkTarget(f"continuation target {sink.target} vanished")
        target.content = target.content + CONTINUATION_SEPARATOR + record.output_text
        document._after_content_change(sink.target, report)
        history_mod.append_entry(
            document, sink.target, "continuation", target.content, ref=record.id
        )
        report.block_id = sink.target
        return report

    if sink.kind == "input_prong":
        target = document.blocks.get(sink.target)
        if target is None or target.kind != "text":
            raise InvalidSinkTarget(f"chain target {sink.target} vanished")
        if sink.prong_index >= template.prong_count(target.content):
            raise InvalidSinkTarget(
                f"chain target {sink.target} no longer has prong {sink.prong_index}"
            )
        report.block_id = sink.target
        return report

    # select sink
    selection = document.selection
    if selection is None:
        raise NoSelection("select sink requires a selection")
    host = document.blocks[selection.block]
    host.content = (
        host.content[: selection.start] + record.output_text + host.content[selection.end :]
    )
    self_cleared = OpReport()
    document.selection = None
    document._after_content_change(selection.block, self_cleared)
    report.merge(self_cleared)
    history_mod.append_entry(
        document, selection.block, "select_replacement", host.content, ref=record.id
    )
    report.block_id = selection.block
    report.selection_cleared = True
    return report


def _execute_stage(
    document: CanvasDocument,
    stage: list[str],
    provider,
    bindings,
    max_workers: int,
    report: OpReport,
) -> dict[str, list[GenerationRecord]]:
    """Resolve, execute and commit one stage; returns records per pipeline."""
    jobs = []
    for pipeline_id in stage:
        pipe = document.require_pipeline(pipeline_id)
        resolutions = {}
        for text_slot in pipe.text_slots:
            try:
                resolutions[text_slot] = (template.resolve(document, text_slot, bindings), None)
            except (UnresolvedProng, NoSelection) as exc:
                resolutions[text_slot] = (None, exc)
        for text_slot in pipe.text_slots:
            prompt, failure = resolutions[text_slot]
            for model_slot in pipe.model_slots:
                snapshot = document.blocks[model_slot].params.copy()
                jobs.append((pipeline_id, text_slot, model_slot, snapshot, prompt, failure))

    results: list = [None] * len(jobs)
    callable_jobs = [i for i, job in enumerate(jobs) if job[5] is None]
    if callable_jobs:
        with ThreadPoolExecutor(max_workers=max(1, min(max_workers, len(callable_jobs)))) as pool:
            futures = {
                i: pool.submit(
                    provider.complete, CompletionRequest(jobs[i][4].text, jobs[i][3])
                )
                for i in callable_jobs
            }
            for i, future in futures.items():
                try:
                    results[i] = future.result()
                except ProviderError as exc:
                    results[i] = exc

    per_pipeline: dict[str, list[GenerationRecord]] = {pid: [] for pid in stage}
    select_routed: set[str] = set()
    for i, (pipeline_id, text_slot, model_slot, snapshot, prompt, failure) in enumerate(jobs):
        record = GenerationRecord(
            id=document.new_id("g"),
            pipeline=pipeline_id,
            text_slot=text_slot,
            model_slot=model_slot,
            params_snapshot=snapshot,
            output_text="",
            created_at=document.tick(),
            status="ok",
            resolved_prompt=prompt,
        )
        outcome = results[i]
        if failure is not None:
            record.status = "error"
            record.error_name = failure.name
            record.error_message = str(failure)
        elif isinstance(outcome, ProviderError):
            record.status = "error"
            record.error_name = outcome.name
            record.error_message = str(outcome)
        else:
            record.output_text = outcome.text

        document.records[record.id] = record
        pipe = document.blocks[pipeline_id]
        pipe.output.generations.append(record.id)
        per_pipeline[pipeline_id].append(record)

        if record.status != "ok":
            continue
        sink = pipe.output.sink
        if sink.kind == "select" and pipeline_id in select_routed:
            # Only the first ok record replaces the selection; the rest stay
            # in the container.
            continue
        try:
            routed = route(document, record)
        except (NoSelection, InvalidSinkTarget) as exc:
            report.routing_errors.append((record.id, exc.name, str(exc)))
            continue
        report.merge(routed)
        if sink.kind == "select":
            select_routed.add(pipeline_id)
    return per_pipeline
