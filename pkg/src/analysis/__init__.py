"""
Analysis Module

Linking heuristics, stealth address clusters and anonymity metrics.
"""

from .clusters import ClusterSet, Merge
from .heuristics import (
    HEURISTICS,
    HeuristicConfig,
    LinkageReport,
    LinkFinding,
    combine,
    h1_registrant_reuse,
    h2_same_sender_receiver,
    h3_collector_pattern,
    h4_unique_priority_fee,
    run_all,
)
from .metrics import (
    ActivityHeatmap,
    AnonymityReport,
    WithdrawerDistribution,
    activity_heatmap,
    activity_timeline,
    cluster_uniform_entropy,
    cumulative_usage,
    entropy_from_sizes,
    linkage_stats,
    precision_recall,
    recipient_entropy,
    withdrawer_distribution,
)

__all__ = [
    "HEURISTICS",
    "ActivityHeatmap",
    "AnonymityReport",
    "ClusterSet",
    "HeuristicConfig",
    "LinkageReport",
    "LinkFinding",
    "Merge",
    "WithdrawerDistribution",
    "activity_heatmap",
    "activity_timeline",
    "cluster_uniform_entropy",
    "combine",
    "cumulative_usage",
    "entropy_from_sizes",
    "h1_registrant_reuse",
    "h2_same_sender_receiver",
    "h3_collector_pattern",
    "h4_unique_priority_fee",
    "linkage_stats",
    "precision_recall",
    "recipient_entropy",
    "run_all",
    "withdrawer_distribution",
]
