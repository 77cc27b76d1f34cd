"""
Disjoint-set clustering of stealth addresses

Union-find with path compression and union by rank. Members carry a payment
weight (stealth addresses count their payments, H3 anchor addresses count
zero) and every successful union records which heuristic caused it.
"""

from collections import defaultdict
from dataclasses import dataclass
from typing import Any, Dict, Iterable, List, Optional


@dataclass(frozen=True)
class Merge:
    """One union: the two members joined and the heuristic that joined them"""
    a: str
    b: str
    heuristic: str

    def to_dict(self) -> Dict[str, str]:
        return {"a": self.a, "b": self.b, "heuristic": self.heuristic}


class ClusterSet:
    """
    Partition over stealth addresses and H3 anchor addresses.

    Clusters come out in order of their earliest-added member, members in
    insertion order, so output does not depend on union order.
    """

    def __init__(self, members: Iterable[str] = (), weight: int = 1, name: Optional[str] = None):
        self.name = name
        self.parent: Dict[str, str] = {}
        self.rank: Dict[str, int] = {}
        self.weights: Dict[str, int] = {}
        self.merges: List[Merge] = []
        for member in members:
            self.add(member, weight)

    def add(self, member: str, weight: int = 1) -> None:
        """Add a singleton; re-adding keeps the member's first weight"""
        if member in self.parent:
            return
        self.parent[member] = member
        self.rank[member] = 0
        self.weights[member] = weight

    def __contains__(self, member: object) -> bool:
        return member in self.parent

    def __len__(self) -> int:
        return len(self.parent)

    # find with path compression
    def find(self, member: str) -> str:
        root = member
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[member] != root:
            self.parent[member], member = root, self.parent[member]
        return root

    # union by rank
    def union(self, a: str, b: str, heuristic: str) -> bool:
        """
        Join the clusters of a and b, adding either if missing.

        Returns:
            True if two distinct clusters were merged
        """
        self.add(a)
        self.add(b)
        root_a, root_b = self.find(a), self.find(b)
        if root_a == root_b:
            return False
        if self.rank[root_a] < self.rank[root_b]:
            root_a, root_b = root_b, root_a
        self.parent[root_b] = root_a
        if self.rank[root_a] == self.rank[root_b]:
            self.rank[root_a] += 1
        self.merges.append(Merge(a, b, heuristic))
        return True

    def clusters(self) -> List[List[str]]:
        groups = defaultdict(list)
        for member in self.parent:
            groups[self.find(member)].append(member)
        return list(groups.values())

    def cluster_of(self, member: str) -> List[str]:
        root = self.find(member)
        return [m for m in self.parent if self.find(m) == root]

    def cluster_weights(self) -> List[int]:
        """Payment weight of every cluster, in clusters() order"""
        return [sum(self.weights[m] for m in cluster) for cluster in self.clusters()]

    def linked_members(self) -> List[str]:
        """Weighted members sharing a cluster with at least one other weighted member"""
        linked = []
        for cluster in self.clusters():
            weighted = [m for m in cluster if self.weights[m] > 0]
            if len(weighted) >= 2:
                linked.extend(weighted)
        return linked

    def merge_from(self, other: "ClusterSet") -> None:
        """Union of partitions: replay the other set's members and merges"""
        for member in other.parent:
            self.add(member, other.weights[member])
        for merge in other.merges:
            self.union(merge.a, merge.b, merge.heuristic)

    def partition(self) -> frozenset:
        return frozenset(frozenset(cluster) for cluster in self.clusters())

    def to_dict(self, provenance: Optional[bool] = True) -> Dict[str, Any]:
        clusters = [
            {"members": cluster, "weight": sum(self.weights[m] for m in cluster)}
            for cluster in self.clusters()
        ]
        data: Dict[str, Any] = {"clusters": clusters}
        if provenance:
            data["merges"] = [merge.to_dict() for merge in self.merges]
        return data
