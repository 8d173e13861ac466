#!/usr/bin/env python3
"""Time the spotting search as the biasing list grows.

Builds one trie per entry count over a shared random entry pool, times
spotting over a fixed batch of random matrices (best of N repeats), and
prints a table with the growth ratio relative to the smallest list.

Example:
    python3 scripts/benchmark_scaling.py --entries 100 300 1000
"""

from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from ctcspot import BiasingEntry, LogProbMatrix, SpotterConfig, build_graph, spot

LETTERS = "abcdefghijklmnopqrstuvwxyz"


def _random_matrix(rng, frames: int, width: int) -> LogProbMatrix:
    x = rng.normal(0.0, 2.0, size=(frames, width))
    x -= x.max(axis=1, keepdims=True)
    x -= np.log(np.exp(x).sum(axis=1, keepdims=True))
    return LogProbMatrix(values=x.astype(np.float32), normalized=True)


def _entry_pool(rng, count: int) -> list[BiasingEntry]:
    seen, pool = set(), []
    while len(pool) < count:
        n = int(rng.integers(3, 9))
        word = "".join(LETTERS[int(i)] for i in rng.integers(0, 26, size=n))
        seq = tuple(LETTERS.index(ch) for ch in word)
        if seq in seen:
            continue
        seen.add(seq)
        pool.append(BiasingEntry(canonical=word, transcriptions=(seq,)))
    return pool


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--entries", type=int, nargs="+", default=[100, 200, 400, 1000])
    ap.add_argument("--utterances", type=int, default=10)
    ap.add_argument("--frames", type=int, default=200)
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    width = len(LETTERS) + 2  # letters + space + blank
    rng = np.random.default_rng(args.seed)
    pool = _entry_pool(rng, max(args.entries))
    mats = [_random_matrix(rng, args.frames, width) for _ in range(args.utterances)]
    cfg = SpotterConfig()

    print(f"{'entries':>8} {'nodes':>8} {'seconds':>9} {'ms/utt':>8} {'ratio':>6}")
    base = None
    for count in sorted(args.entries):
        graph = build_graph(pool[:count], blank_id=width - 1)
        best = min(
            _timed_batch(mats, graph, cfg) for _ in range(max(1, args.repeats))
        )
        base = base or best
        print(f"{count:8d} {graph.num_nodes:8d} {best:9.3f} "
              f"{1000.0 * best / len(mats):8.2f} {best / base:6.2f}")
    return 0


def _timed_batch(mats, graph, cfg) -> float:
    t0 = time.perf_counter()
    for lp in mats:
        spot(lp, graph, cfg)
    return time.perf_counter() - t0


if __name__ == "__main__":
    sys.exit(main())
