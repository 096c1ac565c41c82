"""Exhaustive exploration, Pareto extraction and named-solution selection.

Exploration expands the deterministic template stream from
:mod:`spm_dse.memconfig`.  Within one template (a size tuple), dynamic
energy, each memory's per-sector-count static/wakeup energy and areas are
computed once with the same cell arithmetic as :func:`spm_dse.evaluator.
evaluate`, then combined over the sector Cartesian product by broadcast
addition in the same slot order -- so batched rows are bit-identical to
individual evaluations.  Parallel workers split the template list; results
are concatenated in template order, which keeps output independent of the
degree of parallelism.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .costmodel import CostTable, query
from .errors import EvaluationError, ValidationError
from .evaluator import (EvaluationResult, allocate, dynamic_cells, evaluate,
                        offchip_energy, static_cells, wakeup_cells,
                        _active_series, _placed_series, _wakeup_series)
from .memconfig import (KINDS, ExplorationConstraints, FamilyTemplate,
                        MemoryOrganization, MemorySpec, enumerate_all,
                        iter_family_templates)
from .workload import WorkloadTrace, derive_offchip

# key columns: kind, pg, ports, sz_s, sz_d, sz_w, sz_a, sc_s, sc_d, sc_w, sc_a
KEY_COLUMNS = 11
_KIND_CODE = {k: i for i, k in enumerate(KINDS)}


@dataclass
class ExplorationResult:
    """Flat arrays describing every evaluated configuration."""

    keys: np.ndarray            # (n, 11) int64
    area: np.ndarray            # (n,) float64, mm^2
    dynamic: np.ndarray         # J
    static: np.ndarray          # J
    wakeup: np.ndarray          # J
    energy: np.ndarray          # J, (dynamic + static) + wakeup
    ports_required: np.ndarray  # (n,) int64
    offchip_j: float
    banks: int
    summary: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.area)

    def organization(self, i: int) -> MemoryOrganization:
        return org_from_key(self.keys[i], self.banks)

    def config_id(self, i: int) -> str:
        return self.organization(i).config_id

    def family(self, i: int) -> str:
        kind = KINDS[self.keys[i, 0]]
        label = kind + ("-pg" if self.keys[i, 1] else "")
        if self.keys[i, 3] > 0 and self.keys[i, 2] != 3:
            label += f"-ps{self.keys[i, 2]}"
        return label

    def family_labels(self) -> np.ndarray:
        """Per-row family labels, vectorized over the small label alphabet."""
        kind = self.keys[:, 0]
        pg = self.keys[:, 1] == 1
        ports = self.keys[:, 2]
        has_shared = self.keys[:, 3] > 0
        labels = np.empty(len(self), dtype=object)
        for code, name in enumerate(KINDS):
            for pg_flag in (False, True):
                base = name + ("-pg" if pg_flag else "")
                for p in (1, 2, 3):
                    mask = (kind == code) & (pg == pg_flag) & (ports == p)
                    if not mask.any():
                        continue
                    suffix = f"-ps{p}" if p != 3 else ""
                    labels[mask] = np.where(has_shared[mask] & (p != 3),
                                            base + suffix, base)
        return labels


def org_from_key(key, banks: int) -> MemoryOrganization:
    kind = KINDS[int(key[0])]
    pg = bool(key[1])
    ports = int(key[2])
    sizes = [int(v) for v in key[3:7]]
    sectors = [int(v) for v in key[7:11]]
    slot_ports = (ports, 1, 1, 1)
    specs = []
    for size, sc, p in zip(sizes, sectors, slot_ports):
        if size == 0:
            specs.append(MemorySpec(size=0, sectors=1, banks=banks, ports=1))
        else:
            specs.append(MemorySpec(size=size, sectors=sc, banks=banks, ports=p))
    return MemoryOrganization(kind=kind, shared=specs[0], data=specs[1],
                              weight=specs[2], acc=specs[3], power_gated=pg)


def _template_rows(trace: WorkloadTrace, table: CostTable,
                   tmpl: FamilyTemplate) -> dict[str, np.ndarray]:
    """Evaluate every sector combination of one template."""
    probe = next(iter(tmpl.organizations()))
    plan = allocate(trace, probe)
    ports_needed = plan.required_shared_ports()

    slots = ("shared", "data", "weight", "acc")
    slot_ports = (tmpl.shared_ports, 1, 1, 1)
    per_slot = []  # (axis_len, area[], dyn[], static[], wake[]) per slot
    for slot, size, axis, ports in zip(slots, tmpl.sizes, tmpl.sector_axes,
                                       slot_ports):
        areas, dyns, stats, wakes = [], [], [], []
        for sc in axis:
            if size == 0:
                areas.append(0.0)
                dyns.append(0.0)
                stats.append(0.0)
                wakes.append(0.0)
                continue
            spec = MemorySpec(size=size, sectors=sc, banks=tmpl.banks,
                              ports=ports)
            entry = query(table, spec)
            placed = _placed_series(plan, probe, slot)
            active = _active_series(placed, spec)
            dyn = dynamic_cells(trace, plan, probe, slot, entry)
            sta = static_cells(trace, tuple(active), entry)
            wak = wakeup_cells(tuple(_wakeup_series(active)), entry)
            areas.append(entry.area_mm2)
            dyns.append(math.fsum(dyn))
            stats.append(math.fsum(sta))
            wakes.append(math.fsum(wak))
        per_slot.append((np.asarray(areas), np.asarray(dyns),
                         np.asarray(stats), np.asarray(wakes)))

    shape = tuple(len(axis) for axis in tmpl.sector_axes)

    def combine(pick):
        total = np.zeros(shape)
        for dim, vectors in enumerate(per_slot):
            view = [None] * 4
            view[dim] = slice(None)
            total = total + vectors[pick][tuple(view)]
        return total.ravel()

    area = combine(0)
    dynamic = combine(1)
    static = combine(2)
    wakeup = combine(3)
    energy = (dynamic + static) + wakeup

    n = area.size
    keys = np.empty((n, KEY_COLUMNS), dtype=np.int64)
    keys[:, 0] = _KIND_CODE[tmpl.kind]
    keys[:, 1] = int(tmpl.power_gated)
    keys[:, 2] = tmpl.shared_ports
    keys[:, 3:7] = tmpl.sizes
    grids = np.meshgrid(*[np.asarray(a) for a in tmpl.sector_axes],
                        indexing="ij")
    for j, grid in enumerate(grids):
        keys[:, 7 + j] = grid.ravel()

    return {"keys": keys, "area": area, "dynamic": dynamic, "static": static,
            "wakeup": wakeup, "energy": energy,
            "ports": np.full(n, ports_needed, dtype=np.int64)}


def _worker(args):
    trace, table, tmpl = args
    return _template_rows(trace, table, tmpl)


def explore(trace: WorkloadTrace, table: CostTable,
            constraints: ExplorationConstraints | None = None,
            jobs: int = 1) -> ExplorationResult:
    """Evaluate every enumerated configuration exactly once."""
    cons = constraints or ExplorationConstraints()
    started = time.perf_counter()
    templates = list(iter_family_templates(trace, cons))
    if jobs <= 1:
        chunks = [_template_rows(trace, table, t) for t in templates]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_worker,
                                   [(trace, table, t) for t in templates],
                                   chunksize=max(1, len(templates) // (4 * jobs))))
    if chunks:
        keys = np.concatenate([c["keys"] for c in chunks])
        area = np.concatenate([c["area"] for c in chunks])
        dynamic = np.concatenate([c["dynamic"] for c in chunks])
        static = np.concatenate([c["static"] for c in chunks])
        wakeup = np.concatenate([c["wakeup"] for c in chunks])
        energy = np.concatenate([c["energy"] for c in chunks])
        ports = np.concatenate([c["ports"] for c in chunks])
    else:
        keys = np.empty((0, KEY_COLUMNS), dtype=np.int64)
        area = dynamic = static = wakeup = energy = np.empty(0)
        ports = np.empty(0, dtype=np.int64)

    offchip = offchip_energy(derive_offchip(trace), table)
    result = ExplorationResult(
        keys=keys, area=area, dynamic=dynamic, static=static, wakeup=wakeup,
        energy=energy, ports_required=ports, offchip_j=offchip,
        banks=cons.banks)
    # family counts come from template arithmetic, not per-row labels
    counts: dict[str, int] = {}
    for tmpl in templates:
        label = tmpl.kind + ("-pg" if tmpl.power_gated else "")
        if tmpl.sizes[0] > 0 and tmpl.shared_ports != 3:
            label += f"-ps{tmpl.shared_ports}"
        counts[label] = counts.get(label, 0) + tmpl.count
    result.summary = {
        "network": trace.network_name,
        "total_configurations": int(len(result)),
        "family_counts": dict(sorted(counts.items())),
        "wall_time_s": time.perf_counter() - started,
        "jobs": jobs,
        "offchip_j": offchip,
    }
    return result


def count_configurations(trace: WorkloadTrace,
                         constraints: ExplorationConstraints | None = None,
                         ) -> dict[str, int]:
    """Configuration counts per family without evaluating anything."""
    counts: dict[str, int] = {}
    for tmpl in iter_family_templates(trace, constraints):
        label = tmpl.kind + ("-pg" if tmpl.power_gated else "")
        if tmpl.sizes[0] > 0 and tmpl.shared_ports != 3:
            label += f"-ps{tmpl.shared_ports}"
        counts[label] = counts.get(label, 0) + tmpl.count
    counts["total"] = sum(counts.values())
    return counts


@dataclass(frozen=True)
class ParetoSet:
    """Indices of the non-dominated configurations, ascending in area."""

    indices: np.ndarray
    area: np.ndarray
    energy: np.ndarray

    def __len__(self) -> int:
        return len(self.indices)


def _sort_order(result: ExplorationResult) -> np.ndarray:
    cols = [result.keys[:, j] for j in range(KEY_COLUMNS - 1, -1, -1)]
    return np.lexsort(cols + [result.energy, result.area])


def pareto_front(result: ExplorationResult) -> ParetoSet:
    """Exact non-dominated subset in (area, energy) space.

    A point is dominated if some other point is no worse in both dimensions
    and strictly better in at least one; coincident points survive together.
    """
    if len(result) == 0:
        raise ValidationError("cannot take the Pareto front of an empty result")
    order = _sort_order(result)
    area = result.area[order]
    energy = result.energy[order]
    n = len(order)
    group_start = np.empty(n, dtype=bool)
    group_start[0] = True
    group_start[1:] = area[1:] != area[:-1]
    group_id = np.cumsum(group_start) - 1
    group_min = energy[group_start]  # sorted by energy within a group
    best_before = np.empty(len(group_min))
    best_before[0] = np.inf
    if len(group_min) > 1:
        np.minimum.accumulate(group_min[:-1], out=best_before[1:])
    keep = (energy == group_min[group_id]) & (energy < best_before[group_id])
    kept = order[keep]
    return ParetoSet(indices=kept, area=result.area[kept],
                     energy=result.energy[kept])


def select_named(result: ExplorationResult,
                 families: list[str] | None = None) -> dict[str, int]:
    """Per-family minimum-energy pick; ties break on area then key order."""
    labels = np.asarray(result.family_labels())
    wanted = families if families is not None else sorted(set(labels))
    cols = [result.keys[:, j] for j in range(KEY_COLUMNS - 1, -1, -1)]
    order = np.lexsort(cols + [result.area, result.energy])
    selections: dict[str, int] = {}
    ordered_labels = labels[order]
    for fam in wanted:
        hits = order[ordered_labels == fam]
        if hits.size == 0:
            raise ValidationError(f"family {fam!r} absent from results")
        selections[fam] = int(hits[0])
    return selections


def evaluate_selection(trace: WorkloadTrace, table: CostTable,
                       result: ExplorationResult,
                       selections: dict[str, int]) -> dict[str, EvaluationResult]:
    """Full evaluations (with breakdowns) for the selected configurations."""
    offchip = derive_offchip(trace)
    out = {}
    for fam, idx in selections.items():
        org = result.organization(idx)
        out[fam] = evaluate(trace, org, table, offchip)
    return out


def verify_batch_against_evaluator(
        trace: WorkloadTrace, table: CostTable, result: ExplorationResult,
        indices) -> None:
    """Cross-check batched rows against individual evaluations (exact)."""
    offchip = derive_offchip(trace)
    for i in indices:
        org = result.organization(int(i))
        ev = evaluate(trace, org, table, offchip)
        if not (ev.total_area_mm2 == result.area[i]
                and ev.dynamic_j == result.dynamic[i]
                and ev.static_j == result.static[i]
                and ev.wakeup_j == result.wakeup[i]
                and ev.total_energy_j == result.energy[i]):
            raise EvaluationError(
                f"batched row diverges from evaluator for {org.config_id}")
