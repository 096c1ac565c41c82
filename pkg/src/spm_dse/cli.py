"""Command-line entry point.

Subcommands: analyze, enumerate, explore, pareto, report, estimate.
Structured logs go to stderr; artifacts go to the --out directory.
Exit codes: 1 usage, 2 validation, 3 evaluation, 4 I/O.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import dse, report
from .costmodel import load_cost_table
from .errors import (CostQueryError, EvaluationError, InfeasibleConfigError,
                     ReportError, SpmDseError, ValidationError,
                     WorkloadParseError)
from .estimator import MAPPING_ASSUMPTIONS, estimate_caps_workload
from .memconfig import (KINDS, ExplorationConstraints, size_sep, size_smp)
from .units import format_size, parse_size
from .workload import load_workload, peak_usage, trace_to_dict

log = logging.getLogger("spm_dse")

EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_EVALUATION = 3
EXIT_IO = 4

ENV_COST_TABLE = "SPM_DSE_COST_TABLE"


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_workload_arg(p):
    p.add_argument("--workload", required=True, help="workload trace JSON file")


def _add_constraint_args(p):
    p.add_argument("--max-shared-size", type=parse_size, default=None,
                   metavar="SIZE", help="cap on shared-memory size, e.g. 4MiB")
    p.add_argument("--shared-ports", type=int, choices=(1, 2, 3), default=None,
                   help="price shared memories at this port count and drop "
                        "configurations needing more")
    p.add_argument("--families", default="smp,sep,hy",
                   help="comma-separated subset of smp,sep,hy")
    p.add_argument("--banks", type=int, default=16,
                   help="banks per memory (default 16, the MAC-array dimension)")
    p.add_argument("--no-power-gating", dest="power_gating",
                   action="store_const", const="no-pg", default="both",
                   help="only non-power-gated variants")
    p.add_argument("--only-power-gating", dest="power_gating",
                   action="store_const", const="pg",
                   help="only power-gated variants")
    p.add_argument("--no-extra-axis-sizes", dest="extra_axis",
                   action="store_false", default=True,
                   help="restrict hybrid size axes to powers of two")


def _constraints(args) -> ExplorationConstraints:
    families = frozenset(f.strip() for f in args.families.split(",") if f.strip())
    unknown = families - set(KINDS)
    if unknown:
        raise ValidationError(f"unknown families: {sorted(unknown)}")
    return ExplorationConstraints(
        max_shared_size=args.max_shared_size,
        shared_ports=args.shared_ports,
        families=families,
        power_gating=args.power_gating,
        banks=args.banks,
        include_extra_axis_sizes=args.extra_axis)


def _cost_path(args) -> str:
    path = args.cost or os.environ.get(ENV_COST_TABLE)
    if not path:
        raise ValidationError(
            f"no cost table: pass --cost or set {ENV_COST_TABLE}")
    return path


def _cmd_analyze(args) -> int:
    trace = load_workload(args.workload)
    peaks = peak_usage(trace)
    sz_d, sz_w, sz_a = size_sep(trace)
    print(f"network:            {trace.network_name}")
    print(f"operations:         {len(trace)}")
    print(f"total cycles:       {trace.total_cycles}")
    print(f"runtime:            {trace.runtime_s * 1e3:.3f} ms "
          f"@ {trace.clock_hz / 1e6:.0f} MHz")
    print(f"peak data usage:    {peaks.max_data} B ({format_size(peaks.max_data)})")
    print(f"peak weight usage:  {peaks.max_weight} B "
          f"({format_size(peaks.max_weight)})")
    print(f"peak acc usage:     {peaks.max_acc} B ({format_size(peaks.max_acc)})")
    print(f"peak combined:      {peaks.max_sum} B ({format_size(peaks.max_sum)})")
    print(f"smp sizing:         {format_size(size_smp(trace))}")
    print(f"sep sizing:         data {format_size(sz_d)}, "
          f"weight {format_size(sz_w)}, acc {format_size(sz_a)}")
    return 0


def _cmd_enumerate(args) -> int:
    trace = load_workload(args.workload)
    cons = _constraints(args)
    counts = dse.count_configurations(trace, cons)
    if args.count_only:
        for family, count in counts.items():
            print(f"{family}: {count}")
        return 0
    from .memconfig import enumerate_all
    for org in enumerate_all(trace, cons):
        print(org.config_id)
    return 0


def _cmd_explore(args) -> int:
    trace = load_workload(args.workload)
    table = load_cost_table(_cost_path(args))
    cons = _constraints(args)
    jobs = args.jobs or os.cpu_count() or 1
    log.info("exploring %s with jobs=%d", trace.network_name, jobs)
    result = dse.explore(trace, table, cons, jobs=jobs)
    log.info("evaluated %d configurations in %.2f s",
             result.summary["total_configurations"],
             result.summary["wall_time_s"])
    front = dse.pareto_front(result)
    selections = dse.select_named(result)
    evaluations = dse.evaluate_selection(trace, table, result, selections)
    summary = dict(result.summary)
    summary["pareto_size"] = int(len(front))
    summary["selections"] = {fam: result.config_id(idx)
                             for fam, idx in selections.items()}
    manifest = report.emit(result, evaluations, args.out, summary)
    log.info("wrote %d files to %s", len(manifest["files"]), args.out)
    print(json.dumps(summary, indent=1, sort_keys=True))
    return 0


def _cmd_pareto(args) -> int:
    bundle = Path(args.indir)
    scatter = bundle / "scatter.csv"
    if not scatter.exists():
        raise ValidationError(f"no scatter.csv under {bundle}")
    rows = scatter.read_text(encoding="utf-8").splitlines()
    header = rows[0].split(",")
    i_area = header.index("area_mm2")
    i_energy = header.index("energy_j")
    points = []
    for line in rows[1:]:
        cells = line.split(",")
        points.append((float(cells[i_area]), float(cells[i_energy]), cells[0]))
    non_dominated = []
    for a, e, cid in points:
        dominated = any(
            (a2 <= a and e2 <= e and (a2 < a or e2 < e))
            for a2, e2, _ in points)
        if not dominated:
            non_dominated.append((a, e, cid))
    non_dominated.sort()
    print("area_mm2,energy_j,config_id")
    for a, e, cid in non_dominated:
        print(f"{a!r},{e!r},{cid}")
    return 0


def _cmd_report(args) -> int:
    bundle = Path(args.indir)
    manifest_path = bundle / report.MANIFEST_NAME
    if not manifest_path.exists():
        raise ValidationError(f"no manifest under {bundle}")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    if manifest.get("incomplete"):
        raise ValidationError(f"bundle {bundle} is marked incomplete")
    print(json.dumps(manifest["summary"], indent=1, sort_keys=True))
    selections = bundle / "selections.csv"
    if selections.exists():
        print(selections.read_text(encoding="utf-8"), end="")
    return 0


def _cmd_estimate(args) -> int:
    try:
        with open(args.net, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise WorkloadParseError(f"{args.net}: invalid JSON: {exc}") from exc
    array = doc.get("array", {})
    trace = estimate_caps_workload(
        doc["layers"],
        array_rows=array.get("rows", 16),
        array_cols=array.get("cols", 16),
        network_name=doc.get("network", "estimated"),
        clock_hz=doc.get("clock_hz", 250e6))
    meta = {"source": "analytical estimator", **MAPPING_ASSUMPTIONS}
    out = trace_to_dict(trace, meta=meta)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(out, fh, indent=1, sort_keys=True)
            fh.write("\n")
        log.info("wrote %s", args.out)
    else:
        print(json.dumps(out, indent=1, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="spm-dse",
                     description="scratchpad-memory design-space exploration")
    parser.add_argument("--verbose", "-v", action="store_true",
                        help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="peak usage and smp/sep sizing")
    _add_workload_arg(p)
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("enumerate", help="list or count configurations")
    _add_workload_arg(p)
    _add_constraint_args(p)
    p.add_argument("--count-only", action="store_true",
                   help="print per-family counts instead of config ids")
    p.set_defaults(func=_cmd_enumerate)

    p = sub.add_parser("explore", help="run the full exploration")
    _add_workload_arg(p)
    _add_constraint_args(p)
    p.add_argument("--cost", default=None,
                   help=f"cost table JSON (default ${ENV_COST_TABLE})")
    p.add_argument("--out", required=True, help="report bundle directory")
    p.add_argument("--jobs", type=int, default=1,
                   help="parallel workers (0 = all cores; default 1)")
    p.set_defaults(func=_cmd_explore)

    p = sub.add_parser("pareto", help="recompute the frontier of a bundle")
    p.add_argument("--in", dest="indir", required=True)
    p.set_defaults(func=_cmd_pareto)

    p = sub.add_parser("report", help="print a bundle's summary and selections")
    p.add_argument("--in", dest="indir", required=True)
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("estimate", help="synthesize a workload from a net file")
    p.add_argument("--net", required=True, help="layer descriptor JSON")
    p.add_argument("--out", default=None, help="output workload JSON path")
    p.set_defaults(func=_cmd_estimate)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    try:
        return args.func(args)
    except (WorkloadParseError, ValidationError) as exc:
        log.error("%s", exc)
        return EXIT_VALIDATION
    except (EvaluationError, InfeasibleConfigError, CostQueryError) as exc:
        log.error("%s", exc)
        return EXIT_EVALUATION
    except (ReportError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_IO
    except SpmDseError as exc:
        log.error("%s", exc)
        return EXIT_VALIDATION


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
