"""Pure-Python template token scanner (fallback for the compiled one)."""

from __future__ import annotations

INPUT_TOKEN = "[[input]]"
SELECT_TOKEN = "[[select]]"

LITERAL = 0
INPUT = 1
SELECT = 2

_INPUT_LEN = len(INPUT_TOKEN)
_SELECT_LEN = len(SELECT_TOKEN)


def scan_spans(content: str) -> list[tuple[int, int, int]]:
    """Split ``content`` into (kind, start, end) spans.

    Kinds: 0 literal run, 1 ``[[input]]`` token, 2 ``[[select]]`` token.
    Matching is exact and case-sensitive; near-misses stay literal. Spans
    tile the string: concatenating them reproduces it exactly.
    """
    spans: list[tuple[int, int, int]] = []
    n = len(content)
    i = 0
    lit_start = 0
    while i < n:
        j = content.find("[[", i)
        if j < 0:
            break
        if content.startswith(INPUT_TOKEN, j):
            kind, end = INPUT, j + _INPUT_LEN
        elif content.startswith(SELECT_TOKEN, j):
            kind, end = SELECT, j + _SELECT_LEN
        else:
            i = j + 1
            continue
        if j > lit_start:
            spans.append((LITERAL, lit_start, j))
        spans.append((kind, j, end))
        i = end
        lit_start = end
    if lit_start < n:
        spans.append((LITERAL, lit_start, n))
    return spans
