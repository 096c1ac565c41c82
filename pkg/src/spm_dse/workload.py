"""Per-operation workload traces: ingestion, validation and derived quantities.

A trace records, for every inference operation, the live bytes held in the
data / weight / accumulator streams, the on-chip access counts per stream,
and the cycle count. Traces are the primary input of the exploration engine;
the analytical estimator in :mod:`spm_dse.estimator` can synthesize one from
a layer list when no measured trace is available.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from typing import Iterable

import jsonschema

from .errors import ValidationError, WorkloadParseError

STREAMS = ("data", "weight", "acc")

#: Plumbing bound on any single usage figure (1 TiB).
MAX_USAGE_BYTES = 2**40

DEFAULT_CLOCK_HZ = 250e6


@dataclass(frozen=True, slots=True)
class OperationProfile:
    """Memory usage, access counts and cycle count of one inference operation."""

    name: str
    usage_data: int
    usage_weight: int
    usage_acc: int
    reads_data: int
    reads_weight: int
    reads_acc: int
    writes_data: int
    writes_weight: int
    writes_acc: int
    cycles: int
    routing_phase: bool = False

    def __post_init__(self):
        if not self.name:
            raise ValidationError("operation name must be non-empty")
        for field in ("usage_data", "usage_weight", "usage_acc",
                      "reads_data", "reads_weight", "reads_acc",
                      "writes_data", "writes_weight", "writes_acc", "cycles"):
            value = getattr(self, field)
            if not isinstance(value, int) or value < 0:
                raise ValidationError(
                    f"operation {self.name!r}: {field} must be a non-negative "
                    f"integer, got {value!r}")
        for field in ("usage_data", "usage_weight", "usage_acc"):
            if getattr(self, field) > MAX_USAGE_BYTES:
                raise ValidationError(
                    f"operation {self.name!r}: {field} exceeds {MAX_USAGE_BYTES} B")

    def usage(self, stream: str) -> int:
        return getattr(self, f"usage_{stream}")

    def reads(self, stream: str) -> int:
        return getattr(self, f"reads_{stream}")

    def writes(self, stream: str) -> int:
        return getattr(self, f"writes_{stream}")

    @property
    def usage_total(self) -> int:
        return self.usage_data + self.usage_weight + self.usage_acc


@dataclass(frozen=True, slots=True)
class WorkloadTrace:
    """An ordered, validated list of operations plus the accelerator clock."""

    network_name: str
    operations: tuple[OperationProfile, ...]
    clock_hz: float = DEFAULT_CLOCK_HZ

    def __post_init__(self):
        if not self.operations:
            raise ValidationError("trace must contain at least one operation")
        names = [op.name for op in self.operations]
        if len(set(names)) != len(names):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise ValidationError(f"duplicate operation names: {dupes}")
        if not self.clock_hz > 0:
            raise ValidationError("clock_hz must be positive")

    def __len__(self) -> int:
        return len(self.operations)

    @property
    def total_cycles(self) -> int:
        return sum(op.cycles for op in self.operations)

    @property
    def runtime_s(self) -> float:
        return self.total_cycles / self.clock_hz


@dataclass(frozen=True, slots=True)
class OffChipProfile:
    """Per-operation off-chip access counts derived from a trace."""

    reads_off: tuple[int, ...]
    writes_off: tuple[int, ...]

    def __post_init__(self):
        if len(self.reads_off) != len(self.writes_off):
            raise ValidationError("reads_off/writes_off length mismatch")
        if any(v < 0 for v in self.reads_off + self.writes_off):
            raise ValidationError("off-chip counts must be non-negative")


@dataclass(frozen=True, slots=True)
class PeakUsage:
    max_data: int
    max_weight: int
    max_acc: int
    max_sum: int


def _schema() -> dict:
    text = resources.files("spm_dse.data").joinpath("workload.schema.json").read_text()
    return json.loads(text)


def trace_from_dict(doc: dict) -> WorkloadTrace:
    """Build a validated trace from an already-parsed workload document."""
    try:
        jsonschema.validate(doc, _schema())
    except jsonschema.ValidationError as exc:
        raise WorkloadParseError(f"workload file malformed: {exc.message}") from exc
    ops = []
    for entry in doc["operations"]:
        ops.append(OperationProfile(
            name=entry["name"],
            usage_data=entry["usage"]["data"],
            usage_weight=entry["usage"]["weight"],
            usage_acc=entry["usage"]["acc"],
            reads_data=entry["reads"]["data"],
            reads_weight=entry["reads"]["weight"],
            reads_acc=entry["reads"]["acc"],
            writes_data=entry["writes"]["data"],
            writes_weight=entry["writes"]["weight"],
            writes_acc=entry["writes"]["acc"],
            cycles=entry["cycles"],
            routing_phase=entry["routing_phase"],
        ))
    return WorkloadTrace(
        network_name=doc["network"],
        operations=tuple(ops),
        clock_hz=float(doc.get("clock_hz", DEFAULT_CLOCK_HZ)),
    )


def load_workload(path) -> WorkloadTrace:
    """Load and validate a workload trace from a JSON file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise WorkloadParseError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise WorkloadParseError(f"{path}: top-level value must be an object")
    return trace_from_dict(doc)


def trace_to_dict(trace: WorkloadTrace, meta: dict | None = None) -> dict:
    doc = {
        "network": trace.network_name,
        "clock_hz": trace.clock_hz,
        "operations": [
            {
                "name": op.name,
                "usage": {"data": op.usage_data, "weight": op.usage_weight,
                          "acc": op.usage_acc},
                "reads": {"data": op.reads_data, "weight": op.reads_weight,
                          "acc": op.reads_acc},
                "writes": {"data": op.writes_data, "weight": op.writes_weight,
                           "acc": op.writes_acc},
                "cycles": op.cycles,
                "routing_phase": op.routing_phase,
            }
            for op in trace.operations
        ],
    }
    if meta:
        doc["meta"] = meta
    return doc


def _routing_blocks(ops: Iterable[OperationProfile]) -> list[tuple[int, int]]:
    """Index ranges [first, last] of maximal consecutive routing-phase runs."""
    blocks = []
    start = None
    for i, op in enumerate(ops):
        if op.routing_phase and start is None:
            start = i
        elif not op.routing_phase and start is not None:
            blocks.append((start, i - 1))
            start = None
    if start is not None:
        blocks.append((start, len(list(ops)) - 1))
    return blocks


def derive_offchip(trace: WorkloadTrace) -> OffChipProfile:
    """Derive off-chip access counts from on-chip ones.

    Non-routing operations read back everything they load on-chip
    (reads_off = writes_data + writes_weight) and write out exactly what the
    next operation reads as input data (writes_off = next op's reads_data).
    Inside a dynamic-routing block the off-chip memory is idle: only the
    block's first operation reads (its own on-chip fill) and only its last
    operation writes (the block's results, consumed by the successor).  The
    final operation of the trace has no successor; its writeback is taken as
    its own data-read count, the closest available proxy for result volume.
    """
    ops = trace.operations
    n = len(ops)
    blocks = _routing_blocks(ops)
    first_of_block = {a for a, _ in blocks}
    last_of_block = {b for _, b in blocks}

    reads = [0] * n
    writes = [0] * n
    for i, op in enumerate(ops):
        if op.routing_phase:
            if i in first_of_block:
                reads[i] = op.writes_data + op.writes_weight
            if i in last_of_block:
                writes[i] = ops[i + 1].reads_data if i + 1 < n else op.reads_data
        else:
            reads[i] = op.writes_data + op.writes_weight
            writes[i] = ops[i + 1].reads_data if i + 1 < n else op.reads_data
    return OffChipProfile(reads_off=tuple(reads), writes_off=tuple(writes))


def peak_usage(trace: WorkloadTrace) -> PeakUsage:
    """Element-wise usage maxima over operations, plus the peak combined usage."""
    return PeakUsage(
        max_data=max(op.usage_data for op in trace.operations),
        max_weight=max(op.usage_weight for op in trace.operations),
        max_acc=max(op.usage_acc for op in trace.operations),
        max_sum=max(op.usage_total for op in trace.operations),
    )
