#!/usr/bin/env python3
"""Compares the compiled and pure-Python template scanners.

Runs both implementations over the same corpus of generated content strings
(mixed literals, tokens and near-tokens, across several length bands) and
prints throughput plus the speedup. The uncached scanner functions are
benchmarked directly; the package-level cache sits above both.

Usage: python benchmarks/bench_scan.py [--repeat N]
"""

from __future__ import annotations

import argparse
import random
import time

from lmcanvas._scan_py import scan_spans as scan_pure

try:
    from lmcanvas._speedups import scan_spans as scan_compiled
except ImportError:
    scan_compiled = None

PARTS = [
    "[[input]]",
    "[[select]]",
    "[[input]",
    "[[",
    "]]",
    "plain words here ",
    "a",
    "\n",
    "é",
    "[",
]


def build_corpus(rng: random.Random, count: int, parts_per_string: int) -> list[str]:
    return [
        "".join(rng.choice(PARTS) for _ in range(parts_per_string)) for _ in range(count)
    ]


def bench(fn, corpus: list[str], repeat: int) -> float:
    timings = []
    for _ in range(repeat):
        start = time.perf_counter()
        for s in corpus:
            fn(s)
        timings.append(time.perf_counter() - start)
    return min(timings)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    rng = random.Random(0xBE7C)
    bands = [
        ("short (~40 chars)", build_corpus(rng, 4000, 5)),
        ("medium (~200 chars)", build_corpus(rng, 1500, 25)),
        ("long (~2k chars)", build_corpus(rng, 300, 250)),
    ]

    for name, corpus in bands:
        for a, b in zip(
            (scan_pure(s) for s in corpus),
            (scan_compiled(s) for s in corpus) if scan_compiled else iter(()),
        ):
            assert a == b, "implementations disagree"

        chars = sum(len(s) for s in corpus)
        pure_time = bench(scan_pure, corpus, args.repeat)
        line = (
            f"{name:22s} pure: {pure_time * 1e3:8.2f} ms "
            f"({chars / pure_time / 1e6:7.1f} Mchar/s)"
        )
        if scan_compiled is not None:
            compiled_time = bench(scan_compiled, corpus, args.repeat)
            line += (
                f"   compiled: {compiled_time * 1e3:8.2f} ms "
                f"({chars / compiled_time / 1e6:7.1f} Mchar/s)"
                f"   speedup: {pure_time / compiled_time:5.2f}x"
            )
        else:
            line += "   compiled: not built"
        print(line)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
