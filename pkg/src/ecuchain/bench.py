"""Benchmark harness: block creation, challenge validation, Merkle root
timing and ledger storage, each reported as mean and standard deviation
over ten runs.

Timing series measure the total wall-clock for one batch at each x value
(e.g. registering n vehicles); absolute numbers are hardware-bound, the
trends (linearity, monotone growth) are what the suite asserts.
"""

from __future__ import annotations

import json
import random
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from .crypto import derive_seed, generate_keypair, sha256
from .ecu import EcuRecord, EcuState, compute_state_root
from .ledger import Ledger, MemoryArchive
from .protocol import (
    RoadsideTier,
    external_address,
    initialize_vehicle,
    issue_challenge,
    make_genesis,
    new_authority_tier,
    record_response,
    build_response,
    verify_response,
)
from .transactions import Verdict

RUNS = 10

DEFAULT_VEHICLE_COUNTS = (10, 50, 100, 150, 200)
DEFAULT_ECU_COUNTS = (10, 100, 250, 500, 750, 1000)
DEFAULT_STORAGE_COUNTS = (1_000, 10_000, 50_000, 100_000)
DEFAULT_EXTRAPOLATION = (5_600_000,)

ECUS_PER_VEHICLE = 8


@dataclass(frozen=True)
class SeriesPoint:
    x: int
    mean_ms: float
    stddev_ms: float


@dataclass(frozen=True)
class StoragePoint:
    blocks: int
    bytes: int
    kind: str  # "measured" | "extrapolated"


@dataclass
class MetricsReport:
    benchmark: str
    x_label: str
    runs: int = RUNS
    series: list[SeriesPoint] = field(default_factory=list)
    storage: list[StoragePoint] = field(default_factory=list)
    per_block_bytes: Optional[float] = None

    def to_csv(self) -> str:
        lines = []
        if self.series:
            lines.append(f"{self.x_label},mean_ms,stddev_ms")
            for p in self.series:
                lines.append(f"{p.x},{p.mean_ms:.6f},{p.stddev_ms:.6f}")
        else:
            lines.append("blocks,bytes,kind")
            for s in self.storage:
                lines.append(f"{s.blocks},{s.bytes},{s.kind}")
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        payload: dict = {"benchmark": self.benchmark, "runs": self.runs}
        if self.series:
            payload["series"] = [
                {self.x_label: p.x, "mean_ms": p.mean_ms, "stddev_ms": p.stddev_ms}
                for p in self.series
            ]
        if self.storage:
            payload["storage"] = [
                {"blocks": s.blocks, "bytes": s.bytes, "kind": s.kind}
                for s in self.storage
            ]
        if self.per_block_bytes is not None:
            payload["per_block_bytes"] = self.per_block_bytes
        return json.dumps(payload, indent=2) + "\n"


def linear_fit(xs: Sequence[float], ys: Sequence[float]) -> tuple[float, float, float]:
    """Least-squares line through (xs, ys): returns (slope, intercept, r2)."""
    n = len(xs)
    if n < 2:
        raise ValueError("need at least two points")
    mean_x = sum(xs) / n
    mean_y = sum(ys) / n
    sxx = sum((x - mean_x) ** 2 for x in xs)
    sxy = sum((x - mean_x) * (y - mean_y) for x, y in zip(xs, ys))
    if sxx == 0:
        raise ValueError("degenerate x values")
    slope = sxy / sxx
    intercept = mean_y - slope * mean_x
    ss_res = sum((y - (slope * x + intercept)) ** 2 for x, y in zip(xs, ys))
    ss_tot = sum((y - mean_y) ** 2 for y in ys)
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return slope, intercept, r2


def _stats(samples: Sequence[float]) -> tuple[float, float]:
    return statistics.fmean(samples), statistics.stdev(samples)


def _run_samples(
    one_run: Callable[[int], float], runs: int, threads: int
) -> list[float]:
    """Execute ``one_run(run_index) -> ms`` ``runs`` times, optionally
    sharding independent repetitions across threads (per-thread timing).
    """
    one_run(-1)  # warmup, not recorded
    if threads <= 1:
        return [one_run(i) for i in range(runs)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(one_run, range(runs)))


def _vehicle_material(seed: int, count: int, tag: bytes):
    """Deterministic keys, states and genesis transactions for a batch."""
    seed64 = seed.to_bytes(8, "big")
    maker = generate_keypair(derive_seed(b"bench-maker", seed64, tag))
    out = []
    for v in range(count):
        keys = generate_keypair(
            derive_seed(b"bench-vehicle", seed64, tag, v.to_bytes(8, "big"))
        )
        records = tuple(
            EcuRecord(
                ecu_id=e,
                firmware_digest=sha256(
                    derive_seed(b"bench-fw", seed64, tag, v.to_bytes(8, "big"), bytes([e]))
                ),
                last_write_ts=0,
            )
            for e in range(ECUS_PER_VEHICLE)
        )
        state = EcuState(records=records)
        out.append((keys, state, make_genesis(maker, keys.public, state, ts=0)))
    return maker, out


def bench_create(
    counts: Sequence[int] = DEFAULT_VEHICLE_COUNTS,
    seed: int = 0,
    runs: int = RUNS,
    threads: int = 1,
) -> MetricsReport:
    """Validator-side block creation: verify each genesis transaction,
    open the block, countersign. One batch of n registrations per sample.
    """
    if not counts:
        raise ValueError("counts must be nonempty")
    report = MetricsReport(benchmark="block-creation", x_label="vehicles", runs=runs)
    for n in counts:
        maker, material = _vehicle_material(seed, n, b"create%d" % n)

        def one_run(run_idx: int, _maker=maker, _material=material) -> float:
            authority = new_authority_tier(
                validators=(
                    generate_keypair(derive_seed(b"bench-val", bytes([1]))),
                    generate_keypair(derive_seed(b"bench-val", bytes([2]))),
                ),
                authorized_makers=(_maker.public,),
                authorized_insurers=(),
            )
            roadside = RoadsideTier(archive=MemoryArchive())
            start = time.perf_counter_ns()
            for _, _, genesis in _material:
                initialize_vehicle(authority, roadside, genesis, ts=0)
            return (time.perf_counter_ns() - start) / 1e6

        samples = _run_samples(one_run, runs, threads)
        mean, stddev = _stats(samples)
        report.series.append(SeriesPoint(x=n, mean_ms=mean, stddev_ms=stddev))
    return report


def bench_challenge(
    counts: Sequence[int] = DEFAULT_VEHICLE_COUNTS,
    seed: int = 0,
    runs: int = RUNS,
    threads: int = 1,
) -> MetricsReport:
    """RSU-side challenge evaluation: verify each response and record it.
    One batch of n verifications per sample. Thread sharding is disabled
    here: the runs of a batch share ledger state and must stay ordered.
    """
    if not counts:
        raise ValueError("counts must be nonempty")
    del threads
    report = MetricsReport(
        benchmark="challenge-validation", x_label="vehicles", runs=runs
    )
    for n in counts:
        maker, material = _vehicle_material(seed, n, b"challenge%d" % n)
        rsu = generate_keypair(derive_seed(b"bench-rsu", seed.to_bytes(8, "big")))
        authority = new_authority_tier(
            validators=(generate_keypair(derive_seed(b"bench-val", bytes([3]))),),
            authorized_makers=(maker.public,),
            authorized_insurers=(),
        )
        roadside = RoadsideTier(archive=MemoryArchive())
        for _, _, genesis in material:
            initialize_vehicle(authority, roadside, genesis, ts=0)
        rng = random.Random(seed ^ 0xC4A11E)

        def one_run(run_idx: int, _material=material, _rng=rng, _rsu=rsu) -> float:
            ts = (run_idx + 2) * 1_000  # strictly increasing across runs
            rounds = []
            for keys, state, _ in _material:
                challenge = issue_challenge(
                    _rsu.public, keys.public, len(state), _rng, ts=ts
                )
                rounds.append((challenge, build_response(keys, state, challenge, ts)))
            start = time.perf_counter_ns()
            for challenge, response in rounds:
                verdict = verify_response(roadside, challenge, response)
                if verdict is not Verdict.VALID:
                    raise RuntimeError(f"benchmark round not valid: {verdict}")
                record_response(_rsu, roadside, response)
            return (time.perf_counter_ns() - start) / 1e6

        # warmup uses run_idx=-1 => ts before all measured runs
        samples = _run_samples(one_run, runs, 1)
        mean, stddev = _stats(samples)
        report.series.append(SeriesPoint(x=n, mean_ms=mean, stddev_ms=stddev))
    return report


def bench_merkle(
    counts: Sequence[int] = DEFAULT_ECU_COUNTS,
    seed: int = 0,
    runs: int = RUNS,
    threads: int = 1,
) -> MetricsReport:
    """State-root computation time per ECU count (per-call milliseconds;
    each sample averages an inner repetition loop for timer resolution).
    """
    if not counts:
        raise ValueError("counts must be nonempty")
    report = MetricsReport(benchmark="merkle-root", x_label="ecus", runs=runs)
    seed64 = seed.to_bytes(8, "big")
    for n in counts:
        digests = [
            sha256(derive_seed(b"bench-merkle", seed64, i.to_bytes(8, "big")))
            for i in range(n)
        ]
        state = EcuState(
            records=tuple(
                EcuRecord(ecu_id=i, firmware_digest=d, last_write_ts=0)
                for i, d in enumerate(digests)
            )
        )
        reps = max(3, 3_000 // n)

        def one_run(run_idx: int, _state=state, _reps=reps) -> float:
            start = time.perf_counter_ns()
            for _ in range(_reps):
                compute_state_root(_state)
            return (time.perf_counter_ns() - start) / 1e6 / _reps

        samples = _run_samples(one_run, runs, threads)
        mean, stddev = _stats(samples)
        report.series.append(SeriesPoint(x=n, mean_ms=mean, stddev_ms=stddev))
    return report


def bench_storage(
    counts: Sequence[int] = DEFAULT_STORAGE_COUNTS,
    extrapolate_to: Sequence[int] = DEFAULT_EXTRAPOLATION,
    seed: int = 0,
) -> MetricsReport:
    """Exact serialized ledger size at each materialized block count, plus a
    linear extrapolation to the requested fleet sizes. Blocks hold one
    registration entry each (freshly initialized vehicles).
    """
    if not counts:
        raise ValueError("counts must be nonempty")
    targets = sorted(set(counts))
    report = MetricsReport(benchmark="ledger-storage", x_label="blocks")
    seed64 = seed.to_bytes(8, "big")
    maker = generate_keypair(derive_seed(b"bench-storage-maker", seed64))
    records = tuple(
        EcuRecord(
            ecu_id=e,
            firmware_digest=sha256(derive_seed(b"bench-storage-fw", seed64, bytes([e]))),
            last_write_ts=0,
        )
        for e in range(ECUS_PER_VEHICLE)
    )
    state = EcuState(records=records)
    ledger = Ledger()
    built = 0
    measured: list[tuple[int, int]] = []
    for target in targets:
        while built < target:
            keys = generate_keypair(
                derive_seed(b"bench-storage-vehicle", seed64, built.to_bytes(8, "big"))
            )
            genesis = make_genesis(maker, keys.public, state, ts=0)
            ledger.create_block(keys.public, genesis, 0, external_address(keys.public))
            built += 1
        size = ledger.serialized_size()
        measured.append((target, size))
        report.storage.append(StoragePoint(blocks=target, bytes=size, kind="measured"))
    if len(measured) >= 2:
        slope, intercept, _ = linear_fit(
            [m[0] for m in measured], [m[1] for m in measured]
        )
    else:
        slope, intercept = measured[0][1] / measured[0][0], 0.0
    report.per_block_bytes = slope
    for target in extrapolate_to:
        report.storage.append(
            StoragePoint(
                blocks=target,
                bytes=int(slope * target + intercept),
                kind="extrapolated",
            )
        )
    return report
