"""
Tests for anonymity metrics
"""

import math
from datetime import datetime, timezone

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from builders import LedgerBuilder, addr
from src.analysis import (
    AnonymityReport,
    ClusterSet,
    activity_heatmap,
    cumulative_usage,
    entropy_from_sizes,
    h3_collector_pattern,
    linkage_stats,
    precision_recall,
    recipient_entropy,
    run_all,
    withdrawer_distribution,
)
from src.ledger import GroundTruth, PaymentLabel
from src.simulation import SimConfig, simulate

TABLE_COUNTS = {
    "mainnet": (4671, 253, 4696, 9680, 48.5, 48.25),
    "polygon": (15075, 670, 15084, 58454, 25.8, 25.79),
    "arbitrum": (12488, 356, 12513, 19033, 65.7, 65.61),
    "optimism": (8391, 135, 8403, 15963, 52.6, 52.57),
}


def _clusters(sizes):
    """ClusterSet whose clusters hold the given payment counts"""
    clusters = ClusterSet()
    counter = 0
    for size in sizes:
        members = [f"m{counter + i}" for i in range(size)]
        counter += size
        for member in members:
            clusters.add(member)
        for member in members[1:]:
            clusters.union(members[0], member, "H3")
    return clusters


class TestAnonymityReport:
    """Test suite for linkage percentages"""

    @pytest.mark.parametrize("chain", sorted(TABLE_COUNTS))
    def test_published_percentages(self, chain):
        """Test published per-chain counts give the published percentages"""
        h1, h2, total, withdrawn, pct_linked, pct_h1 = TABLE_COUNTS[chain]

        report = AnonymityReport.from_counts(chain, h1, h2, total, withdrawn)

        assert report.pct_linked == pytest.approx(pct_linked, abs=0.05)
        assert report.pct_h1 == pytest.approx(pct_h1, abs=0.05)

    def test_zero_findings(self):
        """Test nothing linked is 0%"""
        report = AnonymityReport.from_counts("mainnet", 0, 0, 0, 10)
        assert report.pct_linked == 0.0

    def test_inconsistent_counts_rejected(self):
        """Test total_linked above h1 + h2 is refused"""
        with pytest.raises(ValueError):
            AnonymityReport.from_counts("mainnet", 1, 1, 3, 10)


class TestLinkageStats:
    """Test suite for linkage_stats"""

    def setup_method(self):
        """Setup test fixtures"""
        b = LedgerBuilder()
        b.register(addr(0xA))
        b.paid_and_withdrawn(addr(0xB), addr(1), addr(0xA))
        b.paid_and_withdrawn(addr(0xB), addr(2), addr(0xC), fee=5)
        b.paid_and_withdrawn(addr(0xB), addr(3), addr(0xC), fee=6)
        b.send(addr(0xB), addr(4), 100)
        self.ledger = b.build()

    def test_counts_and_entropy(self):
        """Test counts, percentages and entropies of a small ledger"""
        stats = linkage_stats(run_all(self.ledger), self.ledger)

        assert stats.count_h1 == 1
        assert stats.total_withdrawn == 3
        assert stats.pct_linked == pytest.approx(100 / 3)
        assert stats.count_h3 == 2
        assert stats.total_payments == 4
        assert stats.naive_entropy_bits == pytest.approx(2.0)
        assert stats.clustered_entropy_bits == pytest.approx(1.5)
        assert stats.cluster_uniform_entropy_bits == pytest.approx(math.log2(3))

    def test_mismatched_ledger_rejected(self):
        """Test a report from another ledger is refused"""
        report = run_all(self.ledger)
        other = LedgerBuilder()
        other.send(addr(0xB), addr(9), 100)

        with pytest.raises(ValueError, match="different ledger"):
            linkage_stats(report, other.build())

    def test_empty_ledger(self):
        """Test an empty ledger reports zeros"""
        ledger = LedgerBuilder().build()
        stats = linkage_stats(run_all(ledger), ledger)

        assert stats.pct_linked == 0.0
        assert stats.naive_entropy_bits == 0.0


class TestRecipientEntropy:
    """Test suite for recipient_entropy"""

    def test_all_singletons(self):
        """Test 8 unlinked payments carry 3 bits"""
        naive, clustered = recipient_entropy(ClusterSet(), 8)
        assert naive == pytest.approx(3.0, abs=1e-9)
        assert clustered == pytest.approx(3.0, abs=1e-9)

    def test_full_linkage(self):
        """Test one cluster of all payments carries no uncertainty"""
        naive, clustered = recipient_entropy(_clusters([4]), 4)
        assert naive == pytest.approx(2.0, abs=1e-9)
        assert clustered == pytest.approx(0.0, abs=1e-9)

    def test_hand_computed(self):
        """Test cluster sizes {2, 1, 1} of 4 give 1.5 bits"""
        naive, clustered = recipient_entropy(_clusters([2, 1, 1]), 4)
        assert naive == pytest.approx(2.0, abs=1e-9)
        assert clustered == pytest.approx(1.5, abs=1e-9)

    def test_zero_payments_rejected(self):
        """Test n = 0 is refused"""
        with pytest.raises(ValueError):
            recipient_entropy(ClusterSet(), 0)

    def test_anchor_weight_ignored(self):
        """Test zero-weight anchors do not count as payments"""
        clusters = _clusters([2])
        clusters.add("anchor", weight=0)
        clusters.union("anchor", "m0", "H3")

        assert recipient_entropy(clusters, 2)[1] == pytest.approx(0.0, abs=1e-9)

    @settings(max_examples=100, deadline=None)
    @given(sizes=st.lists(st.integers(min_value=1, max_value=20), min_size=2, max_size=12))
    def test_merging_lowers_entropy(self, sizes):
        """Test merging two clusters strictly decreases entropy"""
        before = entropy_from_sizes(sizes)
        after = entropy_from_sizes([sizes[0] + sizes[1]] + sizes[2:])

        assert after < before
        assert before <= math.log2(sum(sizes)) + 1e-9

    def test_collector_clustering_reduces_entropy(self):
        """Test H3 on a collector population lowers entropy below log2(n)"""
        ledger, _ = simulate(SimConfig(num_entities=10, num_payments=200, seed=5,
                                       profile_weights={"collector": 1.0}))

        naive, clustered = recipient_entropy(h3_collector_pattern(ledger), len(ledger.sends))

        assert clustered < naive


class TestWithdrawerDistribution:
    """Test suite for withdrawer_distribution"""

    def test_whale(self):
        """Test one address receiving 481 withdrawals tops the histogram"""
        b = LedgerBuilder()
        for n in range(481):
            b.paid_and_withdrawn(addr(0xB), addr(1 + n), addr(0xC))
        b.paid_and_withdrawn(addr(0xB), addr(1000), addr(0xD))

        distribution = withdrawer_distribution(b.build())

        assert distribution.histogram == {1: 1, 481: 1}
        assert distribution.max_withdrawals == 481
        assert distribution.max_address == addr(0xC)
        assert distribution.total_withdrawals == 482

    def test_distinct_recipients(self):
        """Test all-distinct recipients fill bucket 1 only"""
        b = LedgerBuilder()
        for n in range(4):
            b.paid_and_withdrawn(addr(0xB), addr(1 + n), addr(0x100 + n))
        assert withdrawer_distribution(b.build()).histogram == {1: 4}

    def test_two_and_three(self):
        """Test recipients with 2 and 3 withdrawals"""
        b = LedgerBuilder()
        for n in range(2):
            b.paid_and_withdrawn(addr(0xB), addr(1 + n), addr(0xC))
        for n in range(3):
            b.paid_and_withdrawn(addr(0xB), addr(10 + n), addr(0xD))

        distribution = withdrawer_distribution(b.build())

        assert distribution.histogram == {2: 1, 3: 1}
        assert distribution.to_rows() == [(2, 1), (3, 1)]

    def test_empty(self):
        """Test an empty ledger has an empty histogram"""
        assert withdrawer_distribution(LedgerBuilder().build()).histogram == {}


class TestActivityHeatmap:
    """Test suite for activity_heatmap"""

    def test_buckets_by_weekday_and_hour(self):
        """Test every transaction lands in its UTC weekday/hour cell"""
        b = LedgerBuilder()
        b.register(addr(0xA))
        b.send(addr(0xA), addr(1), 100)
        b.paid_and_withdrawn(addr(0xB), addr(2), addr(0xA))
        ledger = b.build()

        heatmap = activity_heatmap(ledger, addr(0xA))

        assert heatmap.matrix.shape == (7, 24)
        assert heatmap.matrix.sum() == 3
        moment = datetime.fromtimestamp(ledger.registrations[0].timestamp, tz=timezone.utc)
        assert heatmap.matrix[moment.weekday(), moment.hour] >= 1

    def test_epoch_is_thursday_midnight(self):
        """Test timestamp 0 is Thursday 00:00 UTC"""
        b = LedgerBuilder()
        b.timestamp = -12
        b.send(addr(0xA), addr(1), 100)

        heatmap = activity_heatmap(b.build(), addr(0xA))

        assert heatmap.matrix[3, 0] == 1

    def test_unknown_address(self):
        """Test an address without activity gives an empty heatmap"""
        heatmap = activity_heatmap(LedgerBuilder().build(), addr(0xF))
        assert heatmap.matrix.sum() == 0


class TestCumulativeUsage:
    """Test suite for cumulative_usage"""

    def test_running_totals(self):
        """Test distinct senders and registrants accumulate per day"""
        b = LedgerBuilder()
        b.register(addr(0xA))
        b.send(addr(0xB), addr(1), 100)
        b.send(addr(0xB), addr(2), 100)
        b.timestamp += 86_400
        b.send(addr(0xC), addr(3), 100)

        rows = cumulative_usage(b.build())

        assert [(r["senders"], r["registrants"], r["payments"]) for r in rows] == [(1, 1, 2), (2, 1, 3)]


class TestPrecisionRecall:
    """Test suite for precision_recall"""

    def setup_method(self):
        """Setup test fixtures"""
        b = LedgerBuilder()
        self.registrants = [addr(0xA0 + n) for n in range(4)]
        for n, registrant in enumerate(self.registrants):
            b.register(registrant)
            b.paid_and_withdrawn(addr(0xB), addr(1 + n), registrant, fee=100 + n)
        self.ledger = b.build()
        self.report = run_all(self.ledger)

    def _truth(self, wrong=0):
        stealth = {addr(1 + n): f"E{n}" for n in range(4)}
        owners = {registrant: f"E{n}" for n, registrant in enumerate(self.registrants)}
        for registrant in self.registrants[:wrong]:
            owners[registrant] = "E9"
        labels = [PaymentLabel(addr(1 + n), "E8", f"E{n}", "registrant", ["H1"]) for n in range(4)]
        return GroundTruth(stealth, owners, {}, labels)

    def test_all_correct(self):
        """Test correct attributions give precision and recall 1.0"""
        scores = precision_recall(self.report, self._truth())
        assert scores["H1"]["precision"] == 1.0
        assert scores["H1"]["recall"] == 1.0

    def test_one_wrong(self):
        """Test one wrong attribution of four gives precision 0.75"""
        scores = precision_recall(self.report, self._truth(wrong=1))
        assert scores["H1"]["precision"] == 0.75
        assert scores["H1"]["recall"] == 0.75

    def test_no_eligible_payments(self):
        """Test recall is undefined without eligible payments"""
        scores = precision_recall(self.report, self._truth())
        assert scores["H2"]["recall"] is None
        assert scores["H2"]["precision"] is None

    def test_missing_ground_truth(self):
        """Test scoring needs ground truth"""
        with pytest.raises(ValueError):
            precision_recall(self.report, None)

    def test_countermeasure_population(self):
        """Test fresh-address users leave every recall undefined"""
        ledger, truth = simulate(SimConfig(num_entities=6, num_payments=50, seed=8,
                                           profile_weights={"countermeasure": 1.0}))

        scores = precision_recall(run_all(ledger), truth)

        for heuristic_id in ("H1", "H2", "H3", "H4"):
            assert scores[heuristic_id]["eligible"] == 0
            assert scores[heuristic_id]["recall"] is None
