"""Cut planning, primer weights, conflict graphs and recovery."""

from .compose import CutPlan, Feasibility, candidate_cuts, collision_penalty, compose_cuts, compose_units
from .graph import ConflictGraph, build_conflict_graph, primer_capacity
from .greedy import ORDERS, RecoveryPlan, mwis_exact, vl_dna
from .groups import (
    TABLE1_GROUPS,
    GroupAnalysis,
    analyze_group,
    covered_bases,
    full_coverage_threshold,
    phase_penalty,
    reachable_offsets,
)

__all__ = [
    "ConflictGraph", "CutPlan", "Feasibility", "GroupAnalysis", "ORDERS", "RecoveryPlan", "TABLE1_GROUPS",
    "analyze_group", "build_conflict_graph", "candidate_cuts", "collision_penalty", "compose_cuts",
    "compose_units", "covered_bases", "full_coverage_threshold", "mwis_exact", "phase_penalty",
    "primer_capacity", "reachable_offsets", "vl_dna",
]
