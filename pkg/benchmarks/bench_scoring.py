#!/usr/bin/env python3
"""Benchmark the numba kernels against their pure-Python fallbacks.

Builds a synthetic two-class corpus, then times tree construction and batch
document scoring on both paths.  The pure path is the same function body
uncompiled (``kernel.py_func``); under STFILTER_DISABLE_NUMBA=1 only that
path exists, so the script reports it alone.

Usage: python benchmarks/bench_scoring.py [--chars 200000] [--depth 8]
"""

import argparse
import random
import time

from stfilter import kernels
from stfilter.flat import FlatTree
from stfilter.scoring import NORM_CODES, PHI_CODES


def synth_texts(rng, total_chars, avg_len=400):
    words = ["viagra", "pills", "offer", "meeting", "grammar", "notes", "click", "http", " zz ", "the "]
    texts = []
    produced = 0
    while produced < total_chars:
        n = rng.randint(avg_len // 2, avg_len * 2)
        t = "".join(rng.choice(words) for _ in range(max(1, n // 6)))[:n]
        texts.append(t)
        produced += len(t)
    return texts


def timed(fn, *args, repeat=3):
    best = float("inf")
    result = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, result


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--chars", type=int, default=200_000, help="corpus size in characters")
    parser.add_argument("--depth", type=int, default=8)
    args = parser.parse_args()

    rng = random.Random(0)
    train = synth_texts(rng, args.chars)
    queries = synth_texts(rng, args.chars // 4)
    codes, bounds = kernels.encode_texts(train)
    qcodes, qbounds = kernels.encode_texts(queries)

    print(f"corpus: {len(train)} docs / {bounds[-1]} chars, depth {args.depth}, "
          f"numba {'on' if kernels.NUMBA_ENABLED else 'OFF (pure path only)'}")

    # warm-up triggers compilation so timings measure steady state
    flat = FlatTree.from_texts(train, args.depth)
    score_args = (
        qcodes, qbounds, args.depth,
        flat.char, flat.freq, flat.first_child, flat.n_children,
        flat.sibling_sum, flat.level_freq_sum,
    )
    kernels.score_documents(*score_args, PHI_CODES["root"], NORM_CODES["none"])

    rows = []
    t, _ = timed(kernels.build_trie, codes, bounds, args.depth)
    rows.append(("build_trie", "jit" if kernels.NUMBA_ENABLED else "pure", t))
    if kernels.NUMBA_ENABLED:
        t_py, _ = timed(kernels.build_trie.py_func, codes, bounds, args.depth, repeat=1)
        rows.append(("build_trie", "pure", t_py))

    for norm in ("none", "permutation", "length"):
        full = (*score_args, PHI_CODES["root"], NORM_CODES[norm])
        t, jit_out = timed(kernels.score_documents, *full)
        rows.append((f"score[{norm}]", "jit" if kernels.NUMBA_ENABLED else "pure", t))
        if kernels.NUMBA_ENABLED:
            t_py, py_out = timed(kernels.score_documents.py_func, *full, repeat=1)
            rows.append((f"score[{norm}]", "pure", t_py))
            drift = abs(jit_out - py_out).max()
            assert drift < 1e-9, f"jit/pure drift {drift}"

    print(f"\n{'kernel':<20}{'path':<8}{'seconds':>10}")
    speedups = {}
    for name, path, t in rows:
        print(f"{name:<20}{path:<8}{t:>10.3f}")
        speedups.setdefault(name, {})[path] = t
    if kernels.NUMBA_ENABLED:
        print()
        for name, d in speedups.items():
            if "jit" in d and "pure" in d:
                print(f"{name:<20}speedup {d['pure'] / d['jit']:>8.1f}x")


if __name__ == "__main__":
    main()
