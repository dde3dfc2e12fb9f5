#!/usr/bin/env python3
"""Compare the compiled and pure-Python Merkle kernels.

Times both backends on the same digest lists and prints per-call means
plus the speedup. Outputs are asserted byte-identical first.

Usage: python benchmarks/compare_backends.py
"""

from __future__ import annotations

import random
import statistics
import time

from ecuchain._kernels import _pure

try:
    from ecuchain._kernels import _native
except ImportError:
    _native = None

RUNS = 10
COUNTS = (10, 100, 1000, 10_000)


def time_per_call(fn, digests, reps: int) -> list[float]:
    samples = []
    fn(digests)  # warmup
    for _ in range(RUNS):
        start = time.perf_counter_ns()
        for _ in range(reps):
            fn(digests)
        samples.append((time.perf_counter_ns() - start) / 1e6 / reps)
    return samples


def main() -> int:
    if _native is None:
        print("native kernel not built; only the pure backend is available")
        return 0
    rng = random.Random(0)
    print(f"{'ecus':>6}  {'pure ms':>10}  {'native ms':>10}  {'speedup':>7}")
    for n in COUNTS:
        digests = [rng.randbytes(32) for _ in range(n)]
        assert _native.merkle_root(digests) == _pure.merkle_root(digests)
        reps = max(1, 2000 // n)
        pure = statistics.fmean(time_per_call(_pure.merkle_root, digests, reps))
        native = statistics.fmean(time_per_call(_native.merkle_root, digests, reps))
        print(f"{n:>6}  {pure:>10.4f}  {native:>10.4f}  {pure / native:>6.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
