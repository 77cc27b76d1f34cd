"""
Linking heuristics over an Umbra ledger

H1  full withdrawal to a registrant address links the stealth address to
    that registrant.
H2  full withdrawal back to the payment's sender links the stealth address
    to the sender.
H3  stealth addresses fully withdrawn to the same address form a cluster
    together with that address.
H4  native withdrawals sharing a rarely used maxPriorityFeePerGas value
    form a cluster.

All four are pure functions of the ledger and order their output by first
appearance in the ledger.
"""

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional

import structlog
from pydantic import BaseModel, ConfigDict, Field

from src.analysis.clusters import ClusterSet
from src.ledger.model import Ledger, full_withdrawals

logger = structlog.get_logger(__name__)

HEURISTICS = ("H1", "H2", "H3", "H4")


class HeuristicConfig(BaseModel):
    """Tunables of the heuristics"""
    model_config = ConfigDict(frozen=True)

    fee_uniqueness_threshold: int = Field(default=5, ge=1)


@dataclass(frozen=True)
class LinkFinding:
    """A stealth address attributed to a public identity"""
    stealth_address: str
    attributed_identity: str
    identity_kind: str
    heuristic_id: str

    def to_dict(self) -> Dict[str, str]:
        return {
            "stealth_address": self.stealth_address,
            "attributed_identity": self.attributed_identity,
            "identity_kind": self.identity_kind,
            "heuristic_id": self.heuristic_id,
        }


def _payment_weight(ledger: Ledger, stealth_address: str) -> int:
    return max(len(ledger.sends_to(stealth_address)), 1)


def h1_registrant_reuse(ledger: Ledger) -> List[LinkFinding]:
    """
    Link fully withdrawn stealth addresses whose recipient is a registrant.

    Registrations at any time count, before or after the withdrawal.
    """
    registrants = ledger.registrants
    return [
        LinkFinding(stealth_address, withdrawal.recipient, "registrant", "H1")
        for stealth_address, withdrawal in full_withdrawals(ledger).items()
        if withdrawal.recipient in registrants
    ]


def h2_same_sender_receiver(ledger: Ledger) -> List[LinkFinding]:
    """Link fully withdrawn stealth addresses paid out to one of their senders"""
    findings = []
    for stealth_address, withdrawal in full_withdrawals(ledger).items():
        senders = {send.sender for send in ledger.sends_to(stealth_address)}
        if withdrawal.recipient in senders:
            findings.append(LinkFinding(stealth_address, withdrawal.recipient, "sender", "H2"))
    return findings


def h3_collector_pattern(ledger: Ledger) -> ClusterSet:
    """
    Cluster fully withdrawn stealth addresses by their withdrawal recipient.

    Args:
        ledger: Ledger to analyze

    Returns:
        ClusterSet over every fully withdrawn stealth address; recipients
        shared by two or more of them join their cluster as weight-0 anchors
    """
    clusters = ClusterSet(name="H3")
    by_recipient = defaultdict(list)
    for stealth_address, withdrawal in full_withdrawals(ledger).items():
        clusters.add(stealth_address, _payment_weight(ledger, stealth_address))
        by_recipient[withdrawal.recipient].append(stealth_address)

    for recipient, members in by_recipient.items():
        if len(members) < 2:
            continue
        clusters.add(recipient, weight=0)
        for member in members:
            clusters.union(recipient, member, "H3")
    return clusters


def h4_unique_priority_fee(ledger: Ledger, config: Optional[HeuristicConfig] = None) -> ClusterSet:
    """
    Cluster stealth addresses whose native withdrawals share a rare fee.

    Relayed token withdrawals carry the relayer's fee and are ignored. A fee
    value links when it occurs at least twice and at most
    fee_uniqueness_threshold times in this ledger.

    Args:
        ledger: Ledger to analyze
        config: Heuristic settings

    Returns:
        ClusterSet over the stealth addresses of the considered withdrawals
    """
    config = config or HeuristicConfig()
    clusters = ClusterSet(name="H4")
    by_fee = defaultdict(list)
    for withdrawal in ledger.withdrawals:
        if withdrawal.asset.is_token or withdrawal.via_relayer:
            continue
        clusters.add(withdrawal.stealth_address, _payment_weight(ledger, withdrawal.stealth_address))
        by_fee[withdrawal.max_priority_fee_per_gas].append(withdrawal.stealth_address)

    for fee, members in by_fee.items():
        if not 2 <= len(members) <= config.fee_uniqueness_threshold:
            continue
        first = members[0]
        for member in members[1:]:
            clusters.union(first, member, "H4")
    return clusters


@dataclass
class LinkageReport:
    """Consolidated output of all heuristics for one ledger"""
    chain: str
    findings: List[LinkFinding] = field(default_factory=list)
    counts: Dict[str, int] = field(default_factory=lambda: {h: 0 for h in HEURISTICS})
    total_linked: int = 0
    total_clustered: int = 0
    identities: Dict[str, Dict[str, str]] = field(default_factory=dict)
    clusters: ClusterSet = field(default_factory=ClusterSet)
    cluster_sets: Dict[str, ClusterSet] = field(default_factory=dict)
    ledger_fingerprint: Optional[str] = None

    def linked_by(self, heuristic_id: str) -> List[str]:
        """Stealth addresses linked by one heuristic, in report order"""
        if heuristic_id in self.cluster_sets:
            return self.cluster_sets[heuristic_id].linked_members()
        seen = dict.fromkeys(f.stealth_address for f in self.findings if f.heuristic_id == heuristic_id)
        return list(seen)

    def findings_dict(self) -> Dict[str, Any]:
        return {
            "chain": self.chain,
            "ledger_fingerprint": self.ledger_fingerprint,
            "counts": dict(self.counts),
            "total_linked": self.total_linked,
            "findings": [f.to_dict() for f in self.findings],
            "identities": self.identities,
        }

    def clusters_dict(self) -> Dict[str, Any]:
        return {
            "chain": self.chain,
            "ledger_fingerprint": self.ledger_fingerprint,
            "total_clustered": self.total_clustered,
            "combined": self.clusters.to_dict(),
            "by_heuristic": {name: cs.to_dict() for name, cs in self.cluster_sets.items()},
        }


def combine(
    findings: Iterable[LinkFinding],
    *cluster_sets: ClusterSet,
    ledger: Optional[Ledger] = None,
) -> LinkageReport:
    """
    Merge heuristic outputs into one report.

    A stealth address linked by several heuristics counts once in
    total_linked (H1 and H2 attributions) but once per heuristic in counts.
    The consolidated identity prefers the registrant found by H1.

    Args:
        findings: H1/H2 findings
        cluster_sets: H3/H4 ClusterSets, merged as a union of partitions
        ledger: Ledger the inputs were computed on, for the fingerprint

    Returns:
        LinkageReport
    """
    findings = list(findings)
    report = LinkageReport(
        chain=str(ledger.chain) if ledger is not None else "",
        findings=findings,
        ledger_fingerprint=ledger.fingerprint() if ledger is not None else None,
    )

    attributed = defaultdict(set)
    for finding in findings:
        attributed[finding.heuristic_id].add(finding.stealth_address)
    for heuristic_id, addresses in attributed.items():
        report.counts[heuristic_id] = len(addresses)

    for finding in sorted(findings, key=lambda f: f.heuristic_id != "H1"):
        report.identities.setdefault(finding.stealth_address, {
            "identity": finding.attributed_identity,
            "kind": finding.identity_kind,
            "heuristic": finding.heuristic_id,
        })
    report.total_linked = len(report.identities)

    merged = ClusterSet(name="combined")
    for cluster_set in cluster_sets:
        if cluster_set.name:
            report.cluster_sets[cluster_set.name] = cluster_set
            report.counts[cluster_set.name] = len(cluster_set.linked_members())
        merged.merge_from(cluster_set)
    report.clusters = merged
    report.total_clustered = len(merged.linked_members())
    return report


def run_all(ledger: Ledger, config: Optional[HeuristicConfig] = None) -> LinkageReport:
    """
    Run H1-H4 and combine them.

    Args:
        ledger: Ledger to analyze
        config: Heuristic settings

    Returns:
        LinkageReport bound to the ledger's fingerprint
    """
    config = config or HeuristicConfig()
    findings = h1_registrant_reuse(ledger) + h2_same_sender_receiver(ledger)
    report = combine(
        findings,
        h3_collector_pattern(ledger),
        h4_unique_priority_fee(ledger, config),
        ledger=ledger,
    )
    logger.info(
        "Heuristics finished",
        chain=report.chain,
        h1=report.counts["H1"],
        h2=report.counts["H2"],
        h3=report.counts["H3"],
        h4=report.counts["H4"],
        total_linked=report.total_linked,
    )
    return report
