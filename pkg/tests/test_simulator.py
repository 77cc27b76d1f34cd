"""
Tests for behavior profiles and the ledger simulator
"""

import math

import pytest
from pydantic import ValidationError

from src.analysis import activity_timeline, h1_registrant_reuse, h2_same_sender_receiver, h3_collector_pattern
from src.crypto.stealth import scan_announcements
from src.ledger import NATIVE, Asset, full_withdraw_set, ledger_to_records
from src.simulation import (
    BehaviorProfile,
    Burstiness,
    FeeHabit,
    SimConfig,
    Simulator,
    simulate,
)
from src.simulation.profiles import collector_profile, preset_profiles


def _config(**overrides):
    base = {"num_entities": 8, "num_payments": 60, "seed": 3}
    base.update(overrides)
    return SimConfig(**base)


class TestSimConfig:
    """Test suite for configuration validation"""

    def test_rejects_degenerate_sizes(self):
        """Test zero payments and a single entity are refused"""
        with pytest.raises(ValidationError):
            SimConfig(num_payments=0)
        with pytest.raises(ValidationError):
            SimConfig(num_entities=1)

    def test_rejects_unknown_profile_weight(self):
        """Test weights must name configured profiles"""
        with pytest.raises(ValidationError, match="unknown profiles"):
            SimConfig(profile_weights={"whale": 1.0})

    def test_rejects_bad_assignment(self):
        """Test an explicit assignment needs one known profile per entity"""
        with pytest.raises(ValidationError):
            SimConfig(num_entities=2, profile_assignment=["collector"])
        with pytest.raises(ValidationError):
            SimConfig(num_entities=2, profile_assignment=["collector", "nobody"])

    def test_rejects_inverted_amounts(self):
        """Test amount_max below amount_min is refused"""
        with pytest.raises(ValidationError):
            SimConfig(amount_min=10**18, amount_max=10**17)

    def test_fee_habit_values(self):
        """Test automatic fee habits take no fixed value"""
        with pytest.raises(ValidationError):
            FeeHabit(mode="auto", value=5)
        assert FeeHabit(mode="manual", value=5).value == 5

    def test_presets(self):
        """Test the preset profiles exist and the countermeasure never reuses"""
        presets = preset_profiles()
        assert set(presets) == {"default", "collector", "registrant_reuse", "manual_fee", "countermeasure"}
        assert presets["countermeasure"].collector_degree is None
        assert presets["countermeasure"].p_withdraw_to_registrant == 0.0


class TestSimulate:
    """Test suite for simulate()"""

    def test_minimal_run(self):
        """Test two entities and one payment"""
        ledger, truth = simulate(_config(num_entities=2, num_payments=1, profile_weights={"collector": 1.0}))

        assert len(ledger.registrations) == 2
        assert len(ledger.sends) == 1
        assert len(ledger.withdrawals) == 1
        assert len(truth.payments) == 1
        assert truth.payments[0].withdraw_kind == "collector"

    def test_same_seed_same_output(self):
        """Test a config fully determines ledger and ground truth"""
        first_ledger, first_truth = simulate(_config())
        second_ledger, second_truth = simulate(_config())

        assert ledger_to_records(first_ledger) == ledger_to_records(second_ledger)
        assert first_truth.to_dict() == second_truth.to_dict()

    def test_different_seed_differs(self):
        """Test the seed changes the output"""
        first, _ = simulate(_config(seed=1))
        second, _ = simulate(_config(seed=2))
        assert first.fingerprint() != second.fingerprint()

    def test_registrant_reuse_population(self):
        """Test every payment goes fully back to its recipient's registrant"""
        ledger, truth = simulate(_config(profile_weights={"registrant_reuse": 1.0}))

        assert full_withdraw_set(ledger) == set(ledger.withdrawn_stealth_addresses)
        assert len(ledger.withdrawn_stealth_addresses) == len(ledger.sends)
        for withdrawal in ledger.withdrawals:
            assert withdrawal.recipient in ledger.registrants
            assert truth.entity_of(withdrawal.recipient) == truth.stealth_to_entity[withdrawal.stealth_address]

    def test_balances_conserved(self):
        """Test no stealth address pays out more than it received"""
        ledger, _ = simulate(_config(num_payments=200, profile_weights={"default": 1.0}))
        assert ledger.check_balances() == []

    def test_gas_charged_withdrawal_still_full(self):
        """Test amount plus gas empties the address when gas is charged"""
        ledger, _ = simulate(_config(profile_weights={"collector": 1.0}, asset_mix=0.0, charge_gas=True))

        assert all(w.gas_paid > 0 for w in ledger.withdrawals)
        assert full_withdraw_set(ledger) == set(ledger.withdrawn_stealth_addresses)

    def test_relayers_only_for_tokens(self):
        """Test token withdrawals are relayed and native ones are not"""
        ledger, _ = simulate(_config(num_payments=100, asset_mix=0.5))

        assert any(w.asset.is_token for w in ledger.withdrawals)
        for withdrawal in ledger.withdrawals:
            assert withdrawal.via_relayer == withdrawal.asset.is_token

    def test_countermeasure_population_exposes_nothing(self):
        """Test fresh-address users trigger none of H1-H3"""
        ledger, _ = simulate(_config(num_payments=100, profile_weights={"countermeasure": 1.0}))

        assert h1_registrant_reuse(ledger) == []
        assert h2_same_sender_receiver(ledger) == []
        assert h3_collector_pattern(ledger).merges == []

    def test_registrant_recall_calibration(self):
        """Test the registrant withdrawal rate matches the profile probability"""
        profile = BehaviorProfile(p_withdraw_to_registrant=0.5, collector_degree=2)
        config = _config(
            num_entities=20,
            num_payments=2000,
            asset_mix=0.0,
            profiles={"half": profile},
            profile_weights={"half": 1.0},
        )
        ledger, truth = simulate(config)

        eligible = [p for p in truth.payments if "H1" in p.eligible]
        linked = {f.stealth_address for f in h1_registrant_reuse(ledger)}
        rate = sum(p.stealth_address in linked for p in eligible) / len(eligible)

        assert len(eligible) == 2000
        assert abs(rate - 0.5) <= 3 * math.sqrt(0.25 / len(eligible))


class TestSimulator:
    """Test suite for the step-by-step Simulator"""

    def setup_method(self):
        """Setup test fixtures"""
        self.sim = Simulator(SimConfig(seed=9, num_entities=3))

    def test_recipients_detect_exactly_their_payments(self):
        """Test every announcement is found by its recipient and nobody else"""
        entities = [self.sim.add_entity("collector", collector_profile()) for _ in range(3)]
        for entity in entities:
            self.sim.register(entity)
        for i in range(30):
            sender, recipient = entities[i % 3], entities[(i + 1 + i // 3) % 3]
            self.sim.send_payment(sender, recipient, NATIVE, 10**17, 1_650_000_000 + i)
        ledger, truth = self.sim.build()
        announcements = [send.announcement for send in ledger.sends]

        for entity in entities:
            found = scan_announcements(self.sim.group, entity.keys.v, entity.keys.pk_spend, announcements)
            expected = [i for i, send in enumerate(ledger.sends)
                        if truth.stealth_to_entity[send.stealth_address] == entity.entity_id]
            assert found == expected

    def test_activity_stays_in_window(self):
        """Test a bursty sender transacts only inside its active window"""
        profile = BehaviorProfile(burstiness=Burstiness(active_window_days=7, payments_in_window=10))
        sender = self.sim.add_entity("bursty", profile)
        recipient = self.sim.add_entity("collector", collector_profile())
        for _ in range(50):
            self.sim.send_payment(sender, recipient, NATIVE, 10**17, self.sim.draw_activity_time(sender))
        ledger, _ = self.sim.build()

        timestamps = activity_timeline(ledger, sender.sender)
        window_end = sender.window_start + sender.window_seconds
        assert len(timestamps) == 50
        assert all(sender.window_start <= t < window_end for t in timestamps)

    def test_manual_fees_are_entity_exclusive(self):
        """Test manual-fee entities each get their own fee"""
        manual = BehaviorProfile(collector_degree=None, fee_habit=FeeHabit(mode="manual"))
        first = self.sim.add_entity("manual", manual)
        second = self.sim.add_entity("manual", manual)
        fixed = self.sim.add_entity("fixed", BehaviorProfile(fee_habit=FeeHabit(mode="manual", value=777)))

        assert first.manual_fee != second.manual_fee
        assert fixed.manual_fee == 777

    def test_partial_withdrawal(self):
        """Test a partial withdrawal splits the payment and is not full"""
        profile = BehaviorProfile(p_partial_withdraw=1.0)
        owner = self.sim.add_entity("partial", profile)
        payer = self.sim.add_entity("collector", collector_profile())
        payment = self.sim.send_payment(payer, owner, NATIVE, 10**18, 1_650_000_000)
        self.sim.withdraw(payment)
        ledger, truth = self.sim.build()

        assert payment.withdraw_kind == "partial"
        assert len(ledger.withdrawals_from(payment.stealth_address)) == 2
        assert sum(w.amount for w in ledger.withdrawals) == 10**18
        assert full_withdraw_set(ledger) == set()
        assert truth.payments[0].eligible == ["H3"]

    def test_token_payment_withdrawn_whole(self):
        """Test tokens are withdrawn in one relayed transaction"""
        profile = BehaviorProfile(p_partial_withdraw=1.0)
        owner = self.sim.add_entity("partial", profile)
        payer = self.sim.add_entity("collector", collector_profile())
        payment = self.sim.send_payment(payer, owner, Asset.token("DAI"), 5 * 10**18, 1_650_000_000)
        self.sim.withdraw(payment)
        ledger, _ = self.sim.build()

        withdrawals = ledger.withdrawals_from(payment.stealth_address)
        assert len(withdrawals) == 1
        assert withdrawals[0].via_relayer
        assert withdrawals[0].amount == 5 * 10**18

    def test_blocks_follow_time(self):
        """Test blocks are assigned from timestamps with per-block positions"""
        a = self.sim.add_entity("collector", collector_profile())
        b = self.sim.add_entity("collector", collector_profile())
        ts = self.sim.config.start_timestamp + 1200
        self.sim.send_payment(a, b, NATIVE, 10**17, ts)
        self.sim.send_payment(b, a, NATIVE, 10**17, ts + 1)
        ledger, _ = self.sim.build()

        assert [s.block for s in ledger.sends] == [self.sim.config.genesis_block + 100] * 2
        assert [s.position for s in ledger.sends] == [0, 1]
