"""Design-space exploration of scratchpad memories for capsule-network accelerators."""

from .costmodel import CostTable, SramCostEntry, load_cost_table, query
from .dse import (ExplorationResult, ParetoSet, count_configurations, explore,
                  pareto_front, select_named)
from .errors import SpmDseError
from .estimator import estimate_caps_workload
from .evaluator import EvaluationResult, allocate, evaluate, schedule_sectors
from .memconfig import (ExplorationConstraints, MemoryOrganization, MemorySpec,
                        enumerate_all, enumerate_hybrid_sizes,
                        enumerate_sector_counts, sigma, size_pool, size_sep,
                        size_smp)
from .workload import (OffChipProfile, OperationProfile, WorkloadTrace,
                       derive_offchip, load_workload, peak_usage)

__version__ = "0.1.0"
