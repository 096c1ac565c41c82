"""Machine-readable report bundles for exploration results.

Every file is byte-deterministic for identical inputs: floats are rendered
with repr (shortest round-trip decimal), JSON keys are sorted, CSV columns
are fixed, and newlines are always '\\n'.  The manifest is written last and
carries a content hash per file; while a bundle is being produced the
manifest marks the directory incomplete.

Formats are documented in docs/formats.md.
"""

from __future__ import annotations

import hashlib
import io
import json
import os
from pathlib import Path

from .dse import ExplorationResult
from .errors import ReportError
from .evaluator import EvaluationResult
from .workload import STREAMS

MANIFEST_NAME = "manifest.json"

SCATTER_COLUMNS = ("config_id", "family", "power_gated", "area_mm2",
                   "dynamic_j", "static_j", "wakeup_j", "energy_j",
                   "required_shared_ports")

SELECTION_COLUMNS = ("family", "config_id", "memory", "size_b", "sectors",
                     "ports", "banks", "area_mm2", "dynamic_j", "static_j",
                     "wakeup_j")


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _csv_line(values) -> str:
    return ",".join(_fmt(v) for v in values) + "\n"


def _scatter_csv(result: ExplorationResult) -> str:
    buf = io.StringIO()
    buf.write(_csv_line(SCATTER_COLUMNS))
    labels = result.family_labels()
    for i in range(len(result)):
        org = result.organization(i)
        buf.write(_csv_line((
            org.config_id, labels[i], org.power_gated,
            float(result.area[i]), float(result.dynamic[i]),
            float(result.static[i]), float(result.wakeup[i]),
            float(result.energy[i]), int(result.ports_required[i]))))
    return buf.getvalue()


def _selections_csv(evaluations: dict[str, EvaluationResult]) -> str:
    buf = io.StringIO()
    buf.write(_csv_line(SELECTION_COLUMNS))
    for fam in sorted(evaluations):
        ev = evaluations[fam]
        for mem in ev.memories:
            buf.write(_csv_line((
                fam, ev.config_id, mem.slot, mem.spec.size, mem.spec.sectors,
                mem.spec.ports, mem.spec.banks, mem.area_mm2, mem.dynamic_j,
                mem.static_j, mem.wakeup_j)))
        buf.write(_csv_line((
            fam, ev.config_id, "total", "", "", "", "", ev.total_area_mm2,
            ev.dynamic_j, ev.static_j, ev.wakeup_j)))
    return buf.getvalue()


def _breakdown_doc(ev: EvaluationResult) -> dict:
    ops = []
    per_op = ev.per_op_energy()
    for i, name in enumerate(ev.op_names):
        placed = {}
        spilled = {}
        for s_idx, stream in enumerate(STREAMS):
            ded, spill = ev.plan.placed[i][s_idx]
            placed[stream] = ded
            spilled[stream] = spill
        entry = per_op[i]
        ops.append({
            "name": name,
            "cycles": ev.op_cycles[i],
            "dynamic_j": entry["dynamic_j"],
            "static_j": entry["static_j"],
            "wakeup_j": entry["wakeup_j"],
            "placed_dedicated_b": placed,
            "placed_shared_b": spilled,
        })
    return {
        "config_id": ev.config_id,
        "family": ev.family,
        "total_area_mm2": ev.total_area_mm2,
        "dynamic_j": ev.dynamic_j,
        "static_j": ev.static_j,
        "wakeup_j": ev.wakeup_j,
        "offchip_j": ev.offchip_j,
        "required_shared_ports": ev.required_shared_ports,
        "per_memory": {
            mem.slot: {"size_b": mem.spec.size, "sectors": mem.spec.sectors,
                       "ports": mem.spec.ports, "area_mm2": mem.area_mm2,
                       "dynamic_j": mem.dynamic_j, "static_j": mem.static_j,
                       "wakeup_j": mem.wakeup_j}
            for mem in ev.memories
        },
        "operations": ops,
    }


def _schedule_doc(ev: EvaluationResult) -> dict:
    return {
        "config_id": ev.config_id,
        "operations": list(ev.op_names),
        "memories": {
            mem.slot: {
                "size_b": mem.spec.size,
                "sectors": mem.spec.sectors,
                "active_sector_groups": list(ev.schedule.active[mem.slot]),
                "wakeups": list(ev.schedule.wakeups[mem.slot]),
            }
            for mem in ev.memories
        },
    }


def _json_bytes(doc) -> bytes:
    return (json.dumps(doc, sort_keys=True, indent=1) + "\n").encode("utf-8")


def emit(result: ExplorationResult,
         evaluations: dict[str, EvaluationResult],
         out_dir, summary: dict | None = None) -> dict:
    """Write the bundle and return the manifest (also written to disk)."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / MANIFEST_NAME).write_bytes(_json_bytes({"incomplete": True}))

        files: dict[str, bytes] = {}
        files["scatter.csv"] = _scatter_csv(result).encode("utf-8")
        files["selections.csv"] = _selections_csv(evaluations).encode("utf-8")
        for fam in sorted(evaluations):
            ev = evaluations[fam]
            files[f"breakdown_{fam}.json"] = _json_bytes(_breakdown_doc(ev))
            files[f"schedule_{fam}.json"] = _json_bytes(_schedule_doc(ev))

        picked = dict(summary or result.summary)
        # wall time and worker count vary run to run; bundles must not
        picked.pop("wall_time_s", None)
        picked.pop("jobs", None)
        manifest = {
            "incomplete": False,
            "summary": picked,
            "files": [
                {"name": name, "bytes": len(data),
                 "sha256": hashlib.sha256(data).hexdigest()}
                for name, data in sorted(files.items())
            ],
        }
        for name, data in files.items():
            (out / name).write_bytes(data)
        (out / MANIFEST_NAME).write_bytes(_json_bytes(manifest))
        return manifest
    except OSError as exc:
        raise ReportError(f"cannot write report bundle to {out}: {exc}") from exc
