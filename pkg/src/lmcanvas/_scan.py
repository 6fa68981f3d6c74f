"""Selects the token scanner implementation at import time.

The compiled extension is preferred when present; ``LMCANVAS_PURE=1`` forces
the pure-Python fallback (used by the benchmark and for debugging). Scan
results are memoized per content string: the document validator re-derives
prong lists after every mutation, so identical strings recur constantly.
"""

from __future__ import annotations

import os
from functools import lru_cache

from lmcanvas._scan_py import INPUT, INPUT_TOKEN, LITERAL, SELECT, SELECT_TOKEN
from lmcanvas._scan_py import scan_spans as _scan_spans_py

if os.environ.get("LMCANVAS_PURE") == "1":
    _scan_spans = _scan_spans_py
    BACKEND = "pure"
else:
    try:
        from lmcanvas._speedups import scan_spans as _scan_spans

        BACKEND = "compiled"
    except ImportError:
        _scan_spans = _scan_spans_py
        BACKEND = "pure"


@lru_cache(maxsize=8192)
def scan_spans(content: str) -> tuple[tuple[int, int, int], ...]:
    return tuple(_scan_spans(content))


def prong_count(content: str) -> int:
    """Number of ``[[input]]`` prongs in a content string."""
    return sum(1 for kind, _, _ in scan_spans(content) if kind == INPUT)


def select_count(content: str) -> int:
    """Number of ``[[select]]`` holes in a content string."""
    return sum(1 for kind, _, _ in scan_spans(content) if kind == SELECT)


__all__ = [
    "BACKEND",
    "INPUT",
    "INPUT_TOKEN",
    "LITERAL",
    "SELECT",
    "SELECT_TOKEN",
    "prong_count",
    "scan_spans",
    "select_count",
]
