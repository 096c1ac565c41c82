"""SRAM area/energy cost model: calibration table plus analytical fallback.

A cost table carries one entry per calibrated SRAM geometry
(size, ports, sectors, banks).  Queries resolve in three stages:

1. exact geometry match;
2. a sector variant of an in-table base geometry: dynamic energies and
   leakage are taken unchanged from the base (dynamic energy does not depend
   on the gating granularity in this model), the area gains a fixed 2.75 %
   sleep-transistor overhead, and the wakeup cost comes from the fitted
   per-byte model;
3. analytical fallback for uncalibrated geometries, with coefficients fitted
   to the table at load time by least squares.

Leakage of a powered-off sector group is zero (deep sleep, non-retentive);
the evaluator scales an entry's leakage by the active-sector fraction.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache

from .errors import CostQueryError, ValidationError, WorkloadParseError
from .memconfig import MemorySpec
from .units import format_size

PG_AREA_OVERHEAD = 1.0275
DEFAULT_WAKE_J = 1.6e-9
DEFAULT_WAKE_S = 7.2e-11
_EXTRAPOLATION_LIMIT = 64


def _port_factor(ports: int) -> float:
    """Multi-port penalty applied to area, access energy and leakage."""
    return float(ports) ** 1.5


@dataclass(frozen=True, slots=True)
class SramCostEntry:
    size: int
    ports: int
    sectors: int
    banks: int
    area_mm2: float
    read_j: float
    write_j: float
    leak_w: float
    wake_j: float
    wake_s: float

    def __post_init__(self):
        for name in ("area_mm2", "read_j", "write_j", "leak_w"):
            if not getattr(self, name) > 0:
                raise ValidationError(
                    f"entry {self.geometry}: {name} must be positive")
        if self.sectors == 1:
            if self.wake_j != 0 or self.wake_s != 0:
                raise ValidationError(
                    f"entry {self.geometry}: wakeup fields must be 0 for 1 sector")
        else:
            if self.wake_j <= 0 or self.wake_s <= 0:
                raise ValidationError(
                    f"entry {self.geometry}: wakeup fields must be positive")

    @property
    def geometry(self) -> tuple[int, int, int, int]:
        return (self.size, self.ports, self.sectors, self.banks)


@dataclass(frozen=True)
class _FallbackFit:
    """Least-squares coefficients of the analytical fallback."""

    area: tuple[float, float]     # a0 + a1 * size * pf
    read: tuple[float, float]     # e0 + e1 * sqrt(size) * pf
    write: tuple[float, float]
    leak: float                   # l1 * size * pf
    wake: float                   # w1 * (size / sectors)
    size_lo: int
    size_hi: int


def _fit_affine(xs: list[float], ys: list[float]) -> tuple[float, float]:
    n = len(xs)
    sx, sy = sum(xs), sum(ys)
    sxx = sum(x * x for x in xs)
    sxy = sum(x * y for x, y in zip(xs, ys))
    denom = n * sxx - sx * sx
    if denom == 0:
        return (sy / n, 0.0)
    slope = (n * sxy - sx * sy) / denom
    intercept = (sy - slope * sx) / n
    if slope < 0:  # keep the model monotone in size
        return (sy / n, 0.0)
    return (max(0.0, intercept), slope)


def _fit_proportional(xs: list[float], ys: list[float]) -> float:
    sxx = sum(x * x for x in xs)
    if sxx == 0:
        return 0.0
    return max(0.0, sum(x * y for x, y in zip(xs, ys)) / sxx)


@dataclass(frozen=True, eq=False)  # identity hash: fits are cached per instance
class CostTable:
    technology: str
    dram_read_j: float
    dram_write_j: float
    entries: dict[tuple[int, int, int, int], SramCostEntry]
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.entries:
            raise ValidationError("cost table must contain at least one entry")
        if not (self.dram_read_j > 0 and self.dram_write_j > 0):
            raise ValidationError("DRAM access energies must be positive")

    def base_entry(self, size: int, ports: int, banks: int) -> SramCostEntry | None:
        return self.entries.get((size, ports, 1, banks))

    @property
    def fit(self) -> _FallbackFit:
        return _fit_table(self)


@lru_cache(maxsize=8)
def _fit_table(table: CostTable) -> _FallbackFit:
    base = [e for e in table.entries.values() if e.sectors == 1]
    if not base:
        base = list(table.entries.values())
    xs_area, xs_rw = [], []
    for e in base:
        pf = _port_factor(e.ports)
        xs_area.append(e.size * pf * (PG_AREA_OVERHEAD if e.sectors > 1 else 1.0))
        xs_rw.append(math.sqrt(e.size) * pf)
    area = _fit_affine(xs_area, [e.area_mm2 for e in base])
    read = _fit_affine(xs_rw, [e.read_j for e in base])
    write = _fit_affine(xs_rw, [e.write_j for e in base])
    leak = _fit_proportional(
        [e.size * _port_factor(e.ports) for e in base],
        [e.leak_w for e in base])
    gated = [e for e in table.entries.values() if e.sectors > 1]
    wake = _fit_proportional(
        [e.size / e.sectors for e in gated],
        [e.wake_j for e in gated]) if gated else 0.0
    sizes = [e.size for e in table.entries.values()]
    return _FallbackFit(area=area, read=read, write=write, leak=leak,
                        wake=wake, size_lo=min(sizes), size_hi=max(sizes))


def load_cost_table(path) -> CostTable:
    """Load a calibration table, rejecting duplicates and non-positive values."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise WorkloadParseError(f"{path}: invalid JSON: {exc}") from exc
    for key in ("technology", "dram", "entries"):
        if key not in doc:
            raise WorkloadParseError(f"{path}: missing top-level key {key!r}")
    entries: dict[tuple[int, int, int, int], SramCostEntry] = {}
    for raw in doc["entries"]:
        try:
            entry = SramCostEntry(
                size=raw["size_b"], ports=raw["ports"], sectors=raw["sectors"],
                banks=raw["banks"], area_mm2=raw["area_mm2"],
                read_j=raw["read_j"], write_j=raw["write_j"],
                leak_w=raw["leak_w"], wake_j=raw.get("wake_j", 0.0),
                wake_s=raw.get("wake_s", 0.0))
        except KeyError as exc:
            raise WorkloadParseError(f"{path}: entry missing field {exc}") from exc
        if entry.geometry in entries:
            raise ValidationError(
                f"{path}: duplicate geometry {entry.geometry}")
        entries[entry.geometry] = entry
    return CostTable(
        technology=doc["technology"],
        dram_read_j=doc["dram"]["read_j"],
        dram_write_j=doc["dram"]["write_j"],
        entries=entries,
        meta=doc.get("meta", {}),
    )


def save_cost_table(table: CostTable, path) -> None:
    doc = {
        "technology": table.technology,
        "dram": {"read_j": table.dram_read_j, "write_j": table.dram_write_j},
        "meta": table.meta,
        "entries": [
            {"size_b": e.size, "ports": e.ports, "sectors": e.sectors,
             "banks": e.banks, "area_mm2": e.area_mm2, "read_j": e.read_j,
             "write_j": e.write_j, "leak_w": e.leak_w, "wake_j": e.wake_j,
             "wake_s": e.wake_s}
            for e in sorted(table.entries.values(), key=lambda e: e.geometry)
        ],
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _fallback_entry(table: CostTable, spec: MemorySpec) -> SramCostEntry:
    fit = table.fit
    if (spec.size > fit.size_hi * _EXTRAPOLATION_LIMIT
            or spec.size * _EXTRAPOLATION_LIMIT < fit.size_lo):
        raise CostQueryError(
            f"size {format_size(spec.size)} is more than {_EXTRAPOLATION_LIMIT}x "
            f"outside the calibrated range "
            f"[{format_size(fit.size_lo)}, {format_size(fit.size_hi)}]")
    pf = _port_factor(spec.ports)
    area = fit.area[0] + fit.area[1] * spec.size * pf
    if spec.sectors > 1:
        area *= PG_AREA_OVERHEAD
    sq = math.sqrt(spec.size) * pf
    read = fit.read[0] + fit.read[1] * sq
    write = fit.write[0] + fit.write[1] * sq
    leak = fit.leak * spec.size * pf
    if leak <= 0:
        leak = 1e-12  # degenerate single-entry fit; keep the entry valid
    wake_j = 0.0
    wake_s = 0.0
    if spec.sectors > 1:
        wake_j = fit.wake * (spec.size / spec.sectors) if fit.wake > 0 \
            else DEFAULT_WAKE_J
        wake_s = DEFAULT_WAKE_S
    return SramCostEntry(
        size=spec.size, ports=spec.ports, sectors=spec.sectors,
        banks=spec.banks, area_mm2=area, read_j=read, write_j=write,
        leak_w=leak, wake_j=wake_j, wake_s=wake_s)


def query(table: CostTable, spec: MemorySpec) -> SramCostEntry:
    """Resolve the cost entry for one memory geometry.

    Resolution order: exact table entry, then a derived sector variant of an
    in-table base geometry, then the fitted analytical fallback.
    """
    if not spec.present:
        raise CostQueryError("cannot price an absent memory")
    exact = table.entries.get((spec.size, spec.ports, spec.sectors, spec.banks))
    if exact is not None:
        return exact
    base = table.base_entry(spec.size, spec.ports, spec.banks)
    if base is not None and spec.sectors > 1:
        fit = table.fit
        wake_j = fit.wake * (spec.size / spec.sectors) if fit.wake > 0 \
            else DEFAULT_WAKE_J
        return SramCostEntry(
            size=spec.size, ports=spec.ports, sectors=spec.sectors,
            banks=spec.banks, area_mm2=base.area_mm2 * PG_AREA_OVERHEAD,
            read_j=base.read_j, write_j=base.write_j, leak_w=base.leak_w,
            wake_j=wake_j, wake_s=DEFAULT_WAKE_S)
    return _fallback_entry(table, spec)
