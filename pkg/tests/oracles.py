"""Independent reference implementations used to check the package.

Everything here is deliberately written from the ground rules rather than
reusing package code: a naive character-by-character template scanner, a
recursive DFS cycle finder, direct string splicing, a re-derivation of the
mock completion formula, and a hand-rolled sequential chain executor.
"""

from __future__ import annotations

INPUT_TOKEN = "[[input]]"
SELECT_TOKEN = "[[select]]"


def naive_segments(content: str) -> list[tuple]:
    """Left-to-right scan, one character at a time.

    Returns [("literal", text) | ("input", ordinal) | ("select", ordinal)].
    """
    segments: list[tuple] = []
    literal: list[str] = []
    inputs = 0
    selects = 0
    i = 0
    while i < len(content):
        if content.startswith(INPUT_TOKEN, i):
            if literal:
                segments.append(("literal", "".join(literal)))
                literal = []
            segments.append(("input", inputs))
            inputs += 1
            i += len(INPUT_TOKEN)
        elif content.startswith(SELECT_TOKEN, i):
            if literal:
                segments.append(("literal", "".join(literal)))
                literal = []
            segments.append(("select", selects))
            selects += 1
            i += len(SELECT_TOKEN)
        else:
            literal.append(content[i])
            i += 1
    if literal:
        segments.append(("literal", "".join(literal)))
    return segments


def naive_render(segments: list[tuple]) -> str:
    parts = []
    for segment in segments:
        if segment[0] == "literal":
            parts.append(segment[1])
        elif segment[0] == "input":
            parts.append(INPUT_TOKEN)
        else:
            parts.append(SELECT_TOKEN)
    return "".join(parts)


def naive_prong_count(content: str) -> int:
    return sum(1 for segment in naive_segments(content) if segment[0] == "input")


def has_cycle(edges: list[tuple[str, str]]) -> bool:
    """Recursive three-color DFS over a directed edge list."""
    adjacency: dict[str, list[str]] = {}
    nodes: set[str] = set()
    for a, b in edges:
        adjacency.setdefault(a, []).append(b)
        nodes.add(a)
        nodes.add(b)

    WHITE, GREY, BLACK = 0, 1, 2
    color = {node: WHITE for node in nodes}

    def visit(node: str) -> bool:
        color[node] = GREY
        for neighbour in adjacency.get(node, ()):
            if color[neighbour] == GREY:
                return True
            if color[neighbour] == WHITE and visit(neighbour):
                return True
        color[node] = BLACK
        return False

    return any(color[node] == WHITE and visit(node) for node in sorted(nodes))


def splice(content: str, start: int, end: int, replacement: str) -> str:
    return content[:start] + replacement + content[end:]


def mock_completion(prompt: str, temperature: float, max_tokens: int) -> tuple[str, str]:
    """(text, finish_reason) of the deterministic mock, derived independently."""
    last_line = prompt.split("\n")[-1]
    reversed_words = last_line.split()[::-1]
    text = "MOCK[t=" + format(temperature, ".1f") + "] " + " ".join(reversed_words)
    words = text.split()
    if len(words) > max_tokens:
        return " ".join(words[:max_tokens]), "length"
    return text, "stop"


# -- hand-rolled chain executor ------------------------------------------------


def _id_num(block_id: str) -> int:
    return int(block_id[1:])


def chain_run(document, roots) -> list[tuple[str, str, str, str, str]] | str:
    """Sequential stage-by-stage execution of input-prong chained pipelines.

    Works only on documents whose sinks are container or input_prong (no
    content mutation mid-run). Returns "cycle" when the upstream dependency
    graph is cyclic, else the roots' records as
    (pipeline, text_slot, model_slot, status, output_text) in stage order.
    """
    pipelines = {b.id: b for b in document.blocks.values() if b.kind == "pipeline"}
    attachments = {(a.host, a.prong_index): a.source for a in document.attachments.values()}
    sources_by_host: dict[str, list[str]] = {}
    for (host, _), source in attachments.items():
        sources_by_host.setdefault(host, []).append(source)

    def closure(pipe) -> set[str]:
        seen: set[str] = set()
        stack = list(pipe.text_slots)
        while stack:
            block_id = stack.pop()
            if block_id not in seen:
                seen.add(block_id)
                stack.extend(sources_by_host.get(block_id, ()))
        return seen

    closures = {pid: closure(pipe) for pid, pipe in pipelines.items()}
    edges = []
    for pid, pipe in pipelines.items():
        sink = pipe.output.sink
        if sink.kind != "input_prong":
            continue
        for other_id in pipelines:
            if sink.target in closures[other_id]:
                edges.append((pid, other_id))

    predecessors: dict[str, list[str]] = {}
    for a, b in edges:
        predecessors.setdefault(b, []).append(a)

    covered: set[str] = set()
    stack = list(roots)
    while stack:
        pid = stack.pop()
        if pid not in covered:
            covered.add(pid)
            stack.extend(predecessors.get(pid, ()))

    sub_edges = [(a, b) for a, b in edges if a in covered and b in covered]
    if has_cycle(sub_edges):
        return "cycle"

    depth: dict[str, int] = {}

    def depth_of(pid: str) -> int:
        if pid not in depth:
            ups = [p for p in predecessors.get(pid, ()) if p in covered]
            depth[pid] = 1 + max((depth_of(p) for p in ups), default=-1)
        return depth[pid]

    stages: dict[int, list[str]] = {}
    for pid in covered:
        stages.setdefault(depth_of(pid), []).append(pid)

    def substitute(block_id: str, bindings) -> str:
        parts = []
        for segment in naive_segments(document.blocks[block_id].content):
            if segment[0] == "literal":
                parts.append(segment[1])
            elif segment[0] == "input":
                key = (block_id, segment[1])
                if key in bindings:
                    parts.append(bindings[key])
                elif key in attachments:
                    parts.append(substitute(attachments[key], bindings))
                else:
                    raise KeyError(key)
            else:
                raise AssertionError("chain oracle does not support [[select]]")
        return "".join(parts)

    bindings: dict[tuple[str, int], str] = {}
    outputs: dict[str, list[tuple[str, str, str, str, str]]] = {}
    for level in sorted(stages):
        stage = sorted(stages[level], key=_id_num)
        prompts: dict[tuple[str, str], tuple[str, str]] = {}
        for pid in stage:
            for text_slot in pipelines[pid].text_slots:
                try:
                    prompts[(pid, text_slot)] = ("ok", substitute(text_slot, bindings))
                except KeyError:
                    prompts[(pid, text_slot)] = ("error", "")
        for pid in stage:
            pipe = pipelines[pid]
            records = []
            for text_slot in pipe.text_slots:
                status, prompt = prompts[(pid, text_slot)]
                for model_slot in pipe.model_slots:
                    if status != "ok":
                        records.append((pid, text_slot, model_slot, "error", ""))
                        continue
                    params = document.blocks[model_slot].params
                    text, _ = mock_completion(prompt, params.temperature, params.max_tokens)
                    records.append((pid, text_slot, model_slot, "ok", text))
            outputs[pid] = records
            sink = pipe.output.sink
            if sink.kind == "input_prong":
                ok = [r for r in records if r[3] == "ok"]
                if ok:
                    bindings[(sink.target, sink.prong_index)] = ok[-1][4]

    result = []
    root_set = set(roots)
    for level in sorted(stages):
        for pid in sorted(stages[level], key=_id_num):
            if pid in root_set:
                result.extend(outputs[pid])
    return result
