"""
Anonymity metrics

Linkage counts and percentages, recipient entropy before and after
clustering, the withdrawer histogram, per-address activity heatmaps, the
cumulative usage curve and, for simulated ledgers, precision and recall.
"""

import math
from collections import Counter
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import structlog
from scipy.stats import entropy

from src.analysis.clusters import ClusterSet
from src.analysis.heuristics import HEURISTICS, LinkageReport
from src.ledger.model import GroundTruth, Ledger

logger = structlog.get_logger(__name__)


def _percent(count: int, total: int) -> float:
    return 100.0 * count / total if total else 0.0


@dataclass
class AnonymityReport:
    """
    Per-chain linkage summary. Percentages are in percent (48.25, not 0.4825)
    of the withdrawn stealth payments.
    """
    chain: str
    count_h1: int
    count_h2: int
    total_linked: int
    total_withdrawn: int
    pct_linked: float
    pct_h1: float
    pct_h2: float
    count_h3: int = 0
    count_h4: int = 0
    total_payments: int = 0
    naive_entropy_bits: float = 0.0
    clustered_entropy_bits: float = 0.0
    cluster_uniform_entropy_bits: float = 0.0

    @classmethod
    def from_counts(
        cls,
        chain: str,
        count_h1: int,
        count_h2: int,
        total_linked: int,
        total_withdrawn: int,
        **extra: Any,
    ) -> "AnonymityReport":
        if total_linked > count_h1 + count_h2:
            raise ValueError("total_linked cannot exceed count_h1 + count_h2")
        if total_linked > total_withdrawn:
            raise ValueError("total_linked cannot exceed total_withdrawn")
        return cls(
            chain=chain,
            count_h1=count_h1,
            count_h2=count_h2,
            total_linked=total_linked,
            total_withdrawn=total_withdrawn,
            pct_linked=_percent(total_linked, total_withdrawn),
            pct_h1=_percent(count_h1, total_withdrawn),
            pct_h2=_percent(count_h2, total_withdrawn),
            **extra,
        )

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def entropy_from_sizes(sizes: Sequence[int]) -> float:
    """Shannon entropy in bits of a guess proportional to cluster size"""
    weights = [size for size in sizes if size > 0]
    if not weights:
        return 0.0
    return float(entropy(weights, base=2))


def _padded_sizes(clusters: ClusterSet, n: int) -> List[int]:
    if n <= 0:
        raise ValueError("Entropy needs at least one payment")
    sizes = [weight for weight in clusters.cluster_weights() if weight > 0]
    covered = sum(sizes)
    if covered > n:
        raise ValueError(f"Clusters cover {covered} payments but n = {n}")
    return sizes + [1] * (n - covered)


def recipient_entropy(clusters: ClusterSet, n: int) -> Tuple[float, float]:
    """
    Adversary uncertainty over the recipients of n payments.

    Payments not covered by a cluster count as singletons.

    Args:
        clusters: Payment-weighted clusters
        n: Number of payments

    Returns:
        (naive_bits, clustered_bits) with naive_bits = log2(n)
    """
    sizes = _padded_sizes(clusters, n)
    return math.log2(n), entropy_from_sizes(sizes)


def cluster_uniform_entropy(clusters: ClusterSet, n: int) -> float:
    """log2 of the number of clusters, each cluster equally likely"""
    return math.log2(len(_padded_sizes(clusters, n)))


def linkage_stats(report: LinkageReport, ledger: Ledger) -> AnonymityReport:
    """
    Summarize a linkage report over its ledger.

    Raises:
        ValueError: If the report was computed on a different ledger
    """
    if report.ledger_fingerprint is not None and report.ledger_fingerprint != ledger.fingerprint():
        raise ValueError("Linkage report was computed on a different ledger")

    n = len(ledger.sends)
    extra: Dict[str, Any] = {
        "count_h3": report.counts.get("H3", 0),
        "count_h4": report.counts.get("H4", 0),
        "total_payments": n,
    }
    if n:
        naive, clustered = recipient_entropy(report.clusters, n)
        extra.update(
            naive_entropy_bits=naive,
            clustered_entropy_bits=clustered,
            cluster_uniform_entropy_bits=cluster_uniform_entropy(report.clusters, n),
        )
    return AnonymityReport.from_counts(
        chain=str(ledger.chain),
        count_h1=report.counts.get("H1", 0),
        count_h2=report.counts.get("H2", 0),
        total_linked=report.total_linked,
        total_withdrawn=len(ledger.withdrawn_stealth_addresses),
        **extra,
    )


@dataclass
class WithdrawerDistribution:
    """Number of withdrawer addresses per withdrawal count"""
    histogram: Dict[int, int] = field(default_factory=dict)
    max_withdrawals: int = 0
    max_address: Optional[str] = None

    @property
    def total_withdrawals(self) -> int:
        return sum(k * count for k, count in self.histogram.items())

    def to_rows(self) -> List[Tuple[int, int]]:
        return sorted(self.histogram.items())


def withdrawer_distribution(ledger: Ledger) -> WithdrawerDistribution:
    """Histogram of withdrawals per recipient address, plus the busiest one"""
    per_recipient = Counter(w.recipient for w in ledger.withdrawals)
    if not per_recipient:
        return WithdrawerDistribution()
    histogram = Counter(per_recipient.values())
    max_address, max_withdrawals = max(per_recipient.items(), key=lambda item: (item[1], item[0]))
    return WithdrawerDistribution(dict(sorted(histogram.items())), max_withdrawals, max_address)


def activity_timeline(ledger: Ledger, address: str) -> List[int]:
    """Sorted timestamps of every transaction the address takes part in"""
    timestamps = [r.timestamp for r in ledger.registrations_by(address)]
    timestamps += [s.timestamp for s in ledger.sends if s.sender == address]
    timestamps += [s.timestamp for s in ledger.sends_to(address)]
    timestamps += [w.timestamp for w in ledger.withdrawals_from(address)]
    timestamps += [w.timestamp for w in ledger.withdrawals_to(address)
                   if w.stealth_address != address]
    return sorted(timestamps)


WEEKDAYS = ("Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun")


@dataclass
class ActivityHeatmap:
    """UTC day-of-week (Monday = 0) by hour-of-day transaction counts"""
    address: str
    matrix: np.ndarray

    def to_rows(self) -> List[List[Any]]:
        """One row per weekday: the day name, then counts for hours 0-23"""
        return [[WEEKDAYS[day], *counts] for day, counts in enumerate(self.matrix.astype(int).tolist())]


def activity_heatmap(ledger: Ledger, address: str) -> ActivityHeatmap:
    matrix = np.zeros((7, 24), dtype=np.int64)
    timestamps = activity_timeline(ledger, address)
    if not timestamps:
        logger.warning("Address has no activity in ledger", address=address)
    for timestamp in timestamps:
        moment = datetime.fromtimestamp(timestamp, tz=timezone.utc)
        matrix[moment.weekday(), moment.hour] += 1
    return ActivityHeatmap(address, matrix)


def cumulative_usage(ledger: Ledger) -> List[Dict[str, Any]]:
    """
    Per-day cumulative distinct senders and registrants, and payment count.

    Returns:
        One row per day with activity, in date order
    """
    events = [(r.timestamp, "registrant", r.registrant) for r in ledger.registrations]
    events += [(s.timestamp, "sender", s.sender) for s in ledger.sends]
    events.sort(key=lambda event: event[0])

    senders, registrants, payments = set(), set(), 0
    rows: Dict[str, Dict[str, Any]] = {}
    for timestamp, role, address in events:
        if role == "sender":
            senders.add(address)
            payments += 1
        else:
            registrants.add(address)
        day = datetime.fromtimestamp(timestamp, tz=timezone.utc).date().isoformat()
        rows[day] = {
            "day": day,
            "senders": len(senders),
            "registrants": len(registrants),
            "payments": payments,
        }
    return list(rows.values())


def _ratio(numerator: int, denominator: int) -> Optional[float]:
    return numerator / denominator if denominator else None


def precision_recall(report: LinkageReport, ground_truth: Optional[GroundTruth]) -> Dict[str, Dict[str, Any]]:
    """
    Score each heuristic against simulator ground truth.

    H1/H2 precision counts attributions naming the stealth address owner;
    H3/H4 precision counts clustered stealth addresses owned by their
    cluster's majority entity. Recall divides correct results on eligible
    payments by the eligible payments. Undefined ratios are None.

    Raises:
        ValueError: If ground truth is missing
    """
    if ground_truth is None:
        raise ValueError("Precision and recall need ground truth")

    eligible = {h: set() for h in HEURISTICS}
    for label in ground_truth.payments:
        for heuristic_id in label.eligible:
            eligible.setdefault(heuristic_id, set()).add(label.stealth_address)

    scores: Dict[str, Dict[str, Any]] = {}
    for heuristic_id in ("H1", "H2"):
        attributions = [f for f in report.findings if f.heuristic_id == heuristic_id]
        correct = {
            f.stealth_address for f in attributions
            if ground_truth.entity_of(f.attributed_identity) is not None
            and ground_truth.entity_of(f.attributed_identity) == ground_truth.stealth_to_entity.get(f.stealth_address)
        }
        scores[heuristic_id] = {
            "attributions": len(attributions),
            "correct": len(correct),
            "eligible": len(eligible[heuristic_id]),
            "precision": _ratio(len(correct), len(attributions)),
            "recall": _ratio(len(correct & eligible[heuristic_id]), len(eligible[heuristic_id])),
        }

    for heuristic_id in ("H3", "H4"):
        cluster_set = report.cluster_sets.get(heuristic_id, ClusterSet())
        members, correct = [], set()
        for cluster in cluster_set.clusters():
            stealth = [m for m in cluster if cluster_set.weights[m] > 0]
            if len(stealth) < 2:
                continue
            owners = Counter(ground_truth.stealth_to_entity.get(m) for m in stealth)
            majority, _ = max(owners.items(), key=lambda item: (item[1], str(item[0])))
            members.extend(stealth)
            correct.update(m for m in stealth if majority is not None
                           and ground_truth.stealth_to_entity.get(m) == majority)
        scores[heuristic_id] = {
            "attributions": len(members),
            "correct": len(correct),
            "eligible": len(eligible[heuristic_id]),
            "precision": _ratio(len(correct), len(members)),
            "recall": _ratio(len(correct & eligible[heuristic_id]), len(eligible[heuristic_id])),
        }
    return scores
