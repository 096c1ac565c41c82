"""Candidate memory organizations and their exhaustive enumeration.

Three organization kinds are explored:

* ``smp`` -- one shared multi-port memory holding all three streams,
* ``sep`` -- separate single-port data / weight / accumulator memories,
* ``hy``  -- a shared memory backing dedicated memories that are too small
  for the per-operation peaks.

Memory sizes are drawn from a fixed pool: every power-of-two number of kiB
plus four extra sizes (25, 108, 450 and 460 kiB) that refine the small end
of the space.  Sizing always rounds a requirement up to the smallest pool
member that satisfies it.  Sector counts for power gating come from
``sigma(size)``: the powers of two in [2, size/128], the lower bound of the
sector-to-size ratio supported by the calibration tooling.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator

from .errors import ValidationError
from .units import KIB, format_size
from .workload import STREAMS, WorkloadTrace, peak_usage

DEFAULT_BANKS = 16
SHARED_PORTS = 3
EXTRA_POOL_SIZES = (25 * KIB, 108 * KIB, 450 * KIB, 460 * KIB)
_POOL_MAX = 2**40

#: Ascending pool universe: powers of two from 1 kiB upward plus the extras.
POOL: tuple[int, ...] = tuple(sorted(
    [1 << k for k in range(10, 41)] + list(EXTRA_POOL_SIZES)))

_POW2_POOL: tuple[int, ...] = tuple(1 << k for k in range(10, 41))

KINDS = ("smp", "sep", "hy")


def round_up_pool(need: int, pool: tuple[int, ...] = POOL) -> int:
    """Smallest pool size >= need. A need of zero maps to the smallest size."""
    if need > _POOL_MAX:
        raise ValidationError(
            f"requirement {need} B exceeds the largest pool size {_POOL_MAX} B")
    for size in pool:
        if size >= need:
            return size
    raise AssertionError("unreachable: pool covers the validated range")


def size_pool(lo: int, hi: int) -> list[int]:
    """Pool sizes covering [lo, hi]: members >= lo, up to the rounded hi."""
    if lo < 0 or hi < 0:
        raise ValidationError("size bounds must be non-negative")
    if lo > hi:
        raise ValidationError(f"size_pool bounds inverted: {lo} > {hi}")
    top = round_up_pool(hi)
    return [v for v in POOL if lo <= v <= top]


def sigma(size: int) -> set[int]:
    """Admissible power-gating sector counts for a memory of `size` bytes."""
    if size <= 0:
        raise ValidationError("sigma() requires a positive memory size")
    out = set()
    count = 2
    while count <= size // 128:
        out.add(count)
        count *= 2
    return out


def size_smp(trace: WorkloadTrace) -> int:
    """Shared-memory size: the rounded peak of combined per-operation usage."""
    return round_up_pool(peak_usage(trace).max_sum)


def size_sep(trace: WorkloadTrace) -> tuple[int, int, int]:
    """Dedicated sizes: rounded per-stream peaks (data, weight, acc)."""
    peaks = peak_usage(trace)
    return (round_up_pool(peaks.max_data),
            round_up_pool(peaks.max_weight),
            round_up_pool(peaks.max_acc))


def _component_axis(lo: int, hi: int, include_extras: bool) -> list[int]:
    """Pool values visited for one dedicated memory: [round(lo), round(hi)].

    Both bounds round up (the only reading under which small dedicated sizes
    observed in practice stay reachable).  A stream that is never used
    contributes the single absent size 0.
    """
    if hi == 0:
        return [0]
    pool = POOL if include_extras else _POW2_POOL
    lo_r = round_up_pool(lo, pool)
    hi_r = round_up_pool(hi, pool)
    return [v for v in pool if lo_r <= v <= hi_r]


def shared_size_for(trace: WorkloadTrace, sz_d: int, sz_w: int, sz_a: int) -> int:
    """Minimal rounded shared size such that every operation fits."""
    need = max(
        max(0, op.usage_data - sz_d)
        + max(0, op.usage_weight - sz_w)
        + max(0, op.usage_acc - sz_a)
        for op in trace.operations)
    return 0 if need == 0 else round_up_pool(need)


def enumerate_hybrid_sizes(
    trace: WorkloadTrace, include_extras: bool = True,
) -> list[tuple[int, int, int, int]]:
    """All hybrid size tuples (sz_s, sz_d, sz_w, sz_a), dedicated axes ascending.

    Dedicated sizes sweep the pool between the rounded per-stream minimum and
    maximum usage; the shared size is the worst-case overflow, rounded.  The
    all-maxima corner yields sz_s = 0 and degenerates to the separated design.
    """
    mins = {s: min(op.usage(s) for op in trace.operations) for s in STREAMS}
    maxs = {s: max(op.usage(s) for op in trace.operations) for s in STREAMS}
    axes = [_component_axis(mins[s], maxs[s], include_extras) for s in STREAMS]
    out = []
    for sz_d, sz_w, sz_a in itertools.product(*axes):
        out.append((shared_size_for(trace, sz_d, sz_w, sz_a), sz_d, sz_w, sz_a))
    return out


def enumerate_sector_counts(
    sizes: tuple[int, int, int, int], power_gated: bool,
) -> list[tuple[int, ...]]:
    """Sector tuples over the present memories of a (sz_s, sz_d, sz_w, sz_a) tuple.

    Without power gating there is exactly one tuple, all ones.  With it, each
    present memory contributes sigma(size); absent memories contribute the
    singleton 1.
    """
    if not power_gated:
        return [tuple(1 for _ in sizes)]
    axes = [sorted(sigma(sz)) if sz > 0 else [1] for sz in sizes]
    return [tuple(combo) for combo in itertools.product(*axes)]


@dataclass(frozen=True, slots=True)
class MemorySpec:
    """Geometry of one SRAM: size 0 means the memory is absent."""

    size: int
    sectors: int = 1
    banks: int = DEFAULT_BANKS
    ports: int = 1

    def __post_init__(self):
        if self.size < 0:
            raise ValidationError("memory size must be non-negative")
        if self.size == 0:
            if self.sectors != 1:
                raise ValidationError("absent memory cannot have sectors")
            return
        if self.size not in POOL:
            raise ValidationError(f"size {self.size} B is not a pool member")
        if self.sectors != 1 and self.sectors not in sigma(self.size):
            raise ValidationError(
                f"sectors {self.sectors} not in sigma({format_size(self.size)})")
        if self.ports not in (1, 2, 3):
            raise ValidationError("ports must be 1, 2 or 3")
        if self.banks < 1:
            raise ValidationError("banks must be positive")

    @property
    def present(self) -> bool:
        return self.size > 0


def absent_spec(banks: int = DEFAULT_BANKS) -> MemorySpec:
    return MemorySpec(size=0, sectors=1, banks=banks, ports=1)


@dataclass(frozen=True, slots=True)
class MemoryOrganization:
    """One candidate scratchpad organization."""

    kind: str
    shared: MemorySpec
    data: MemorySpec
    weight: MemorySpec
    acc: MemorySpec
    power_gated: bool

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown organization kind {self.kind!r}")
        if self.kind == "smp":
            if any(m.present for m in (self.data, self.weight, self.acc)):
                raise ValidationError("smp must not carry dedicated memories")
            if not self.shared.present:
                raise ValidationError("smp requires a shared memory")
        elif self.kind == "sep":
            if self.shared.present:
                raise ValidationError("sep must not carry a shared memory")
        else:
            if not self.shared.present:
                raise ValidationError("hy requires a shared memory")
            if not any(m.present for m in (self.data, self.weight, self.acc)):
                raise ValidationError("hy requires at least one dedicated memory")
        if not self.power_gated:
            for m in self.memories():
                if m.sectors != 1:
                    raise ValidationError("non-power-gated memories use 1 sector")

    def memories(self) -> list[MemorySpec]:
        return [m for m in (self.shared, self.data, self.weight, self.acc)
                if m.present]

    def named_memories(self) -> list[tuple[str, MemorySpec]]:
        return [(name, m) for name, m in
                (("shared", self.shared), ("data", self.data),
                 ("weight", self.weight), ("acc", self.acc)) if m.present]

    @property
    def family(self) -> str:
        label = self.kind + ("-pg" if self.power_gated else "")
        if self.shared.present and self.shared.ports != SHARED_PORTS:
            label += f"-ps{self.shared.ports}"
        return label

    @property
    def sort_key(self) -> tuple:
        return (KINDS.index(self.kind),
                self.shared.size, self.data.size, self.weight.size, self.acc.size,
                self.power_gated,
                self.shared.sectors, self.data.sectors, self.weight.sectors,
                self.acc.sectors, self.shared.ports)

    @property
    def config_id(self) -> str:
        parts = [self.family]
        for tag, m in (("s", self.shared), ("d", self.data),
                       ("w", self.weight), ("a", self.acc)):
            if m.present:
                parts.append(f"{tag}{m.size}x{m.sectors}")
        return ":".join(parts)


@dataclass(frozen=True, slots=True)
class ExplorationConstraints:
    """Optional restrictions on the explored space.

    ``shared_ports`` re-prices every shared memory at the given port count
    and admits a configuration only if its allocation actually needs no more
    ports than that.  ``power_gating`` selects which variants are emitted.
    """

    max_shared_size: int | None = None
    shared_ports: int | None = None
    families: frozenset[str] = frozenset(KINDS)
    power_gating: str = "both"  # both | pg | no-pg
    banks: int = DEFAULT_BANKS
    include_extra_axis_sizes: bool = True

    def __post_init__(self):
        if self.shared_ports is not None and self.shared_ports not in (1, 2, 3):
            raise ValidationError("shared_ports must be 1, 2 or 3")
        unknown = self.families - set(KINDS)
        if unknown:
            raise ValidationError(f"unknown families: {sorted(unknown)}")
        if self.power_gating not in ("both", "pg", "no-pg"):
            raise ValidationError("power_gating must be both, pg or no-pg")
        if self.max_shared_size is not None and self.max_shared_size < 0:
            raise ValidationError("max_shared_size must be non-negative")


def required_shared_ports(trace: WorkloadTrace,
                          sz_d: int, sz_w: int, sz_a: int) -> int:
    """Ports the shared memory needs: the peak count of concurrently spilled streams."""
    worst = 0
    for op in trace.operations:
        spilled = sum(1 for s, cap in zip(STREAMS, (sz_d, sz_w, sz_a))
                      if op.usage(s) > cap)
        worst = max(worst, spilled)
    return worst


@dataclass(frozen=True, slots=True)
class FamilyTemplate:
    """One size tuple plus its sector axes; the unit of batched evaluation.

    ``enumerate_all`` and the fast exploration path both expand templates, so
    they agree on the configuration set by construction.
    """

    kind: str
    sizes: tuple[int, int, int, int]  # (shared, data, weight, acc)
    shared_ports: int
    power_gated: bool
    sector_axes: tuple[tuple[int, ...], ...]  # per slot, ascending
    banks: int = DEFAULT_BANKS

    @property
    def count(self) -> int:
        n = 1
        for axis in self.sector_axes:
            n *= len(axis)
        return n

    def organizations(self) -> Iterator[MemoryOrganization]:
        sz_s, sz_d, sz_w, sz_a = self.sizes
        ports = (self.shared_ports, 1, 1, 1)
        for sectors in itertools.product(*self.sector_axes):
            specs = []
            for size, sc, p in zip(self.sizes, sectors, ports):
                if size == 0:
                    specs.append(MemorySpec(size=0, sectors=1, banks=self.banks,
                                            ports=1))
                else:
                    specs.append(MemorySpec(size=size, sectors=sc,
                                            banks=self.banks, ports=p))
            yield MemoryOrganization(
                kind=self.kind, shared=specs[0], data=specs[1],
                weight=specs[2], acc=specs[3], power_gated=self.power_gated)


def _sector_axes(sizes: tuple[int, int, int, int],
                 power_gated: bool) -> tuple[tuple[int, ...], ...]:
    if not power_gated:
        return tuple((1,) for _ in sizes)
    return tuple(tuple(sorted(sigma(sz))) if sz > 0 else (1,) for sz in sizes)


def iter_family_templates(
    trace: WorkloadTrace,
    constraints: ExplorationConstraints | None = None,
) -> Iterator[FamilyTemplate]:
    """Deterministic template stream: smp, sep, hy; sizes ascending; non-PG first.

    Hybrid tuples whose shared size degenerates to 0 are skipped: they are
    identical to the separated design, which is emitted exactly once by the
    sep family pass.
    """
    cons = constraints or ExplorationConstraints()
    pg_options = {"both": (False, True), "pg": (True,), "no-pg": (False,)}
    banks = cons.banks

    def template(kind, sizes, ports, pg):
        return FamilyTemplate(kind=kind, sizes=sizes, shared_ports=ports,
                              power_gated=pg, banks=banks,
                              sector_axes=_sector_axes(sizes, pg))

    def shared_admitted(size: int, sz_d: int, sz_w: int, sz_a: int) -> bool:
        if cons.max_shared_size is not None and size > cons.max_shared_size:
            return False
        if cons.shared_ports is not None:
            need = required_shared_ports(trace, sz_d, sz_w, sz_a)
            if need > cons.shared_ports:
                return False
        return True

    shared_port_count = (SHARED_PORTS if cons.shared_ports is None
                         else cons.shared_ports)

    if "smp" in cons.families:
        size = size_smp(trace)
        if shared_admitted(size, 0, 0, 0):
            for pg in pg_options[cons.power_gating]:
                yield template("smp", (size, 0, 0, 0), shared_port_count, pg)

    if "sep" in cons.families:
        sz_d, sz_w, sz_a = size_sep(trace)
        for pg in pg_options[cons.power_gating]:
            yield template("sep", (0, sz_d, sz_w, sz_a), 1, pg)

    if "hy" in cons.families:
        tuples = enumerate_hybrid_sizes(trace, cons.include_extra_axis_sizes)
        for sz_s, sz_d, sz_w, sz_a in tuples:
            if sz_s == 0:
                continue  # sep-equivalent corner, emitted by the sep pass
            if not shared_admitted(sz_s, sz_d, sz_w, sz_a):
                continue
            for pg in pg_options[cons.power_gating]:
                yield template("hy", (sz_s, sz_d, sz_w, sz_a),
                               shared_port_count, pg)


def enumerate_all(
    trace: WorkloadTrace,
    constraints: ExplorationConstraints | None = None,
) -> Iterator[MemoryOrganization]:
    """Every candidate organization, in a deterministic duplicate-free order."""
    for tmpl in iter_family_templates(trace, constraints):
        yield from tmpl.organizations()
