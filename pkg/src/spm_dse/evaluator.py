"""Evaluate one memory organization against a workload trace.

The pipeline is allocate -> schedule -> price:

* ``allocate`` places each stream's bytes dedicated-first, spilling the
  remainder to the shared memory;
* ``schedule_sectors`` derives how many sector groups each memory keeps
  powered during every operation, and the OFF->ON transitions at operation
  boundaries (sectors are pre-activated during the preceding operation, so
  wakeup latency never costs cycles);
* ``evaluate`` turns the plan and schedule into area plus dynamic / static /
  wakeup / off-chip energy with per-operation and per-memory breakdowns.

Accesses of a stream split between its dedicated memory and the shared
memory proportionally to the bytes placed in each.  Static energy charges an
entry's leakage scaled by the active-sector fraction; a fully gated memory
leaks nothing.  All sectors start OFF, so first-operation activations are
charged as wakeups.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .costmodel import CostTable, SramCostEntry, query
from .errors import EvaluationError, InfeasibleConfigError
from .memconfig import MemoryOrganization, MemorySpec
from .workload import STREAMS, OffChipProfile, WorkloadTrace, derive_offchip

MEMORY_SLOTS = ("shared", "data", "weight", "acc")


@dataclass(frozen=True, slots=True)
class AllocationPlan:
    """Bytes placed per operation and stream: (dedicated, spilled-to-shared)."""

    placed: tuple[tuple[tuple[int, int], ...], ...]  # [op][stream] -> (ded, spill)

    def dedicated(self, op: int, stream_idx: int) -> int:
        return self.placed[op][stream_idx][0]

    def spill(self, op: int, stream_idx: int) -> int:
        return self.placed[op][stream_idx][1]

    def shared_bytes(self, op: int) -> int:
        return sum(pair[1] for pair in self.placed[op])

    def required_shared_ports(self) -> int:
        return max((sum(1 for pair in row if pair[1] > 0) for row in self.placed),
                   default=0)


@dataclass(frozen=True, slots=True)
class SectorSchedule:
    """Active sector-group counts per operation and wakeups per boundary.

    ``wakeups[mem][i]`` counts the OFF->ON transitions needed so that
    operation ``i`` sees its sectors powered; index 0 covers the initial
    power-on from the all-OFF reset state.
    """

    active: dict[str, tuple[int, ...]]
    wakeups: dict[str, tuple[int, ...]]

    def total_wakeups(self, mem: str) -> int:
        return sum(self.wakeups[mem])


def allocate(trace: WorkloadTrace, org: MemoryOrganization) -> AllocationPlan:
    """Dedicated-first greedy placement; raises if any operation does not fit."""
    dedicated = (org.data.size, org.weight.size, org.acc.size)
    rows = []
    for op in trace.operations:
        row = []
        spill_total = 0
        for stream, cap in zip(STREAMS, dedicated):
            usage = op.usage(stream)
            ded = min(usage, cap)
            spill = usage - ded
            spill_total += spill
            row.append((ded, spill))
        if spill_total > org.shared.size:
            raise InfeasibleConfigError(
                f"operation {op.name!r} does not fit in {org.config_id}: "
                f"{spill_total} B spill exceeds {org.shared.size} B shared "
                f"(enumeration bug)")
        rows.append(tuple(row))
    return AllocationPlan(placed=tuple(rows))


def _placed_series(plan: AllocationPlan, org: MemoryOrganization,
                   slot: str) -> list[int]:
    n = len(plan.placed)
    if slot == "shared":
        return [plan.shared_bytes(i) for i in range(n)]
    idx = STREAMS.index(slot)
    return [plan.dedicated(i, idx) for i in range(n)]


def _active_series(placed: list[int], spec: MemorySpec) -> list[int]:
    if spec.sectors == 1:
        return [1] * len(placed)
    capacity = spec.size // spec.sectors
    if capacity * spec.sectors != spec.size:
        raise InfeasibleConfigError(
            f"sector count {spec.sectors} does not divide size {spec.size}")
    return [0 if b == 0 else -(-b // capacity) for b in placed]


def _wakeup_series(active: list[int]) -> list[int]:
    prev = 0
    out = []
    for a in active:
        out.append(max(0, a - prev))
        prev = a
    return out


def schedule_sectors(plan: AllocationPlan,
                     org: MemoryOrganization) -> SectorSchedule:
    """Per-operation active sector groups and boundary wakeups for each memory."""
    active = {}
    wakeups = {}
    for slot, spec in org.named_memories():
        series = _active_series(_placed_series(plan, org, slot), spec)
        if any(a > spec.sectors for a in series):
            raise InfeasibleConfigError(
                f"{slot} memory of {org.config_id} over-commits its sectors")
        active[slot] = tuple(series)
        wakeups[slot] = tuple(_wakeup_series(series))
    return SectorSchedule(active=active, wakeups=wakeups)


def _access_fractions(op_usage: int, ded: int, spill: int,
                      has_dedicated: bool) -> tuple[float, float]:
    """Split of a stream's accesses between dedicated and shared memory."""
    if op_usage > 0:
        return ded / op_usage, spill / op_usage
    return (1.0, 0.0) if has_dedicated else (0.0, 1.0)


def dynamic_cells(trace: WorkloadTrace, plan: AllocationPlan,
                  org: MemoryOrganization, slot: str,
                  entry: SramCostEntry) -> list[float]:
    """Per-operation dynamic energy of one memory under a cost entry."""
    cells = []
    for i, op in enumerate(trace.operations):
        acc = 0.0
        for s_idx, stream in enumerate(STREAMS):
            ded, spill = plan.placed[i][s_idx]
            has_ded = getattr(org, stream).present
            f_ded, f_spill = _access_fractions(op.usage(stream), ded, spill,
                                               has_ded)
            if slot == "shared":
                frac = f_spill
            elif slot == stream:
                frac = f_ded
            else:
                continue
            if frac:
                acc += (op.reads(stream) * frac * entry.read_j
                        + op.writes(stream) * frac * entry.write_j)
        cells.append(acc)
    return cells


def static_cells(trace: WorkloadTrace, active: tuple[int, ...],
                 entry: SramCostEntry) -> list[float]:
    """Per-operation leakage energy: leak * active-fraction * op time."""
    inv_f = 1.0 / trace.clock_hz
    return [entry.leak_w * (a / entry.sectors) * (op.cycles * inv_f)
            for a, op in zip(active, trace.operations)]


def wakeup_cells(wakeups: tuple[int, ...], entry: SramCostEntry) -> list[float]:
    return [entry.wake_j * w for w in wakeups]


@dataclass(frozen=True, slots=True)
class MemoryEvaluation:
    slot: str
    spec: MemorySpec
    entry: SramCostEntry
    area_mm2: float
    dynamic_j: float
    static_j: float
    wakeup_j: float
    dynamic_cells: tuple[float, ...]
    static_cells: tuple[float, ...]
    wakeup_cells: tuple[float, ...]


@dataclass(frozen=True, slots=True)
class EvaluationResult:
    """Area and energy of one organization with full breakdowns.

    Totals accumulate per-memory values in the fixed slot order shared,
    data, weight, acc (absent slots contribute exactly 0.0), so identical
    allocations produce bit-identical results.
    """

    config: MemoryOrganization
    config_id: str
    family: str
    total_area_mm2: float
    dynamic_j: float
    static_j: float
    wakeup_j: float
    offchip_j: float
    required_shared_ports: int
    memories: tuple[MemoryEvaluation, ...]
    plan: AllocationPlan
    schedule: SectorSchedule
    op_names: tuple[str, ...]
    op_cycles: tuple[int, ...]

    @property
    def total_energy_j(self) -> float:
        return (self.dynamic_j + self.static_j) + self.wakeup_j

    def per_op_energy(self) -> list[dict]:
        """Per-operation dynamic/static/wakeup stacks, summed across memories."""
        out = []
        for i, name in enumerate(self.op_names):
            dyn = sta = wak = 0.0
            for mem in self.memories:
                dyn += mem.dynamic_cells[i]
                sta += mem.static_cells[i]
                wak += mem.wakeup_cells[i]
            out.append({"name": name, "cycles": self.op_cycles[i],
                        "dynamic_j": dyn, "static_j": sta, "wakeup_j": wak})
        return out


def _slot_totals(values: dict[str, float]) -> float:
    total = 0.0
    for slot in MEMORY_SLOTS:
        total = total + values.get(slot, 0.0)
    return total


def offchip_energy(offchip: OffChipProfile, table: CostTable) -> float:
    cells = [r * table.dram_read_j + w * table.dram_write_j
             for r, w in zip(offchip.reads_off, offchip.writes_off)]
    return math.fsum(cells)


def evaluate(trace: WorkloadTrace, org: MemoryOrganization, table: CostTable,
             offchip: OffChipProfile | None = None) -> EvaluationResult:
    """Full evaluation of one organization; pure and deterministic."""
    try:
        plan = allocate(trace, org)
        schedule = schedule_sectors(plan, org)
        mem_evals = []
        for slot, spec in org.named_memories():
            entry = query(table, spec)
            dyn = dynamic_cells(trace, plan, org, slot, entry)
            sta = static_cells(trace, schedule.active[slot], entry)
            wak = wakeup_cells(schedule.wakeups[slot], entry)
            mem_evals.append(MemoryEvaluation(
                slot=slot, spec=spec, entry=entry, area_mm2=entry.area_mm2,
                dynamic_j=math.fsum(dyn), static_j=math.fsum(sta),
                wakeup_j=math.fsum(wak),
                dynamic_cells=tuple(dyn), static_cells=tuple(sta),
                wakeup_cells=tuple(wak)))
    except (InfeasibleConfigError, EvaluationError):
        raise
    except Exception as exc:
        raise EvaluationError(f"evaluating {org.config_id}: {exc}") from exc

    by_slot = {m.slot: m for m in mem_evals}
    area = _slot_totals({s: m.area_mm2 for s, m in by_slot.items()})
    dynamic = _slot_totals({s: m.dynamic_j for s, m in by_slot.items()})
    static = _slot_totals({s: m.static_j for s, m in by_slot.items()})
    wakeup = _slot_totals({s: m.wakeup_j for s, m in by_slot.items()})
    if offchip is None:
        offchip = derive_offchip(trace)
    return EvaluationResult(
        config=org, config_id=org.config_id, family=org.family,
        total_area_mm2=area, dynamic_j=dynamic, static_j=static,
        wakeup_j=wakeup, offchip_j=offchip_energy(offchip, table),
        required_shared_ports=plan.required_shared_ports(),
        memories=tuple(mem_evals), plan=plan, schedule=schedule,
        op_names=tuple(op.name for op in trace.operations),
        op_cycles=tuple(op.cycles for op in trace.operations))
