"""
Ground-truth-labeled Umbra ledger simulator

Plays the protocol for a population of entities: key registration, stealth
payments with real announcements, and withdrawals that follow each
recipient's BehaviorProfile. Every random choice comes from one seeded numpy
Generator, so a SimConfig fully determines the (Ledger, GroundTruth) pair.
"""

import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import structlog

from src.crypto.group import Group, get_group
from src.crypto.stealth import StealthMetaKeyPair, generate_stealth_payment
from src.ledger.model import (
    NATIVE,
    Asset,
    ChainId,
    GroundTruth,
    Ledger,
    PaymentLabel,
    RegistrationTx,
    SendTx,
    WithdrawTx,
)
from src.simulation.profiles import GWEI, BehaviorProfile, SimConfig

logger = structlog.get_logger(__name__)

DAY = 86_400
ROUND_FEE_LEVELS = (GWEI // 10, GWEI // 2, GWEI, 3 * GWEI // 2, 2 * GWEI)
# hand-set fees sit below the smallest automatic level
MANUAL_FEE_BASE = 1_234_567
MANUAL_FEE_STEP = 9_973
RELAYER_FEE_BASE = 3 * GWEI
BASE_FEE = 20 * GWEI
TRANSFER_GAS = 21_000


@dataclass
class Entity:
    """One simulated user and every address it controls"""
    entity_id: str
    index: int
    profile_name: str
    profile: BehaviorProfile
    keys: StealthMetaKeyPair
    registrant: str
    sender: str
    collectors: List[str]
    manual_fee: Optional[int]
    window_start: int
    window_seconds: int


@dataclass
class Payment:
    """A stealth payment as the simulator knows it"""
    stealth_address: str
    sender: Entity
    recipient: Entity
    asset: Asset
    amount: int
    timestamp: int
    tx_id: str = ""
    withdraw_kind: str = "none"
    withdrawals: List[Dict[str, Any]] = field(default_factory=list)

    @property
    def self_test(self) -> bool:
        return self.sender.entity_id == self.recipient.entity_id


class Simulator:
    """
    Step-by-step protocol driver.

    add_entity, register, send_payment and withdraw queue transactions;
    build assigns blocks and positions and returns the ledger with its
    ground truth.
    """

    def __init__(self, config: SimConfig, rng: Optional[np.random.Generator] = None):
        self.config = config
        self.rng = rng if rng is not None else np.random.default_rng(config.seed)
        self.group: Group = get_group(config.group)
        self.chain = ChainId.parse(config.chain)
        self.entities: List[Entity] = []
        self.payments: List[Payment] = []
        self.address_to_entity: Dict[str, str] = {}
        self.relayer_fees = [RELAYER_FEE_BASE + i * GWEI // 4 for i in range(config.num_relayers)]
        self._drafts: List[Tuple[int, int, str, Dict[str, Any]]] = []
        self._jitter = 0
        self.logger = structlog.get_logger(self.__class__.__name__)

    # ==================== Randomness ====================

    def _address(self, entity: Optional[Entity] = None) -> str:
        address = "0x" + self.rng.bytes(20).hex()
        if entity is not None:
            self.address_to_entity[address] = entity.entity_id
        return address

    def _tx_id(self) -> str:
        return "0x" + self.rng.bytes(32).hex()

    def draw_amount(self) -> int:
        """Log-uniform over [amount_min, amount_max]"""
        low, high = math.log(self.config.amount_min), math.log(self.config.amount_max)
        amount = int(round(math.exp(self.rng.uniform(low, high))))
        return min(max(amount, self.config.amount_min), self.config.amount_max)

    def draw_activity_time(self, entity: Entity) -> int:
        return entity.window_start + int(self.rng.integers(0, entity.window_seconds))

    def _delay(self) -> int:
        return int(self.rng.integers(600, 3 * DAY))

    def _auto_fee(self) -> int:
        level = ROUND_FEE_LEVELS[int(self.rng.integers(len(ROUND_FEE_LEVELS)))]
        if self.rng.random() < self.config.auto_round_share:
            return level
        self._jitter += 1
        return level + self._jitter

    def _queue(self, timestamp: int, kind: str, fields: Dict[str, Any]) -> None:
        self._drafts.append((timestamp, len(self._drafts), kind, fields))

    # ==================== Protocol steps ====================

    def add_entity(self, profile_name: str, profile: BehaviorProfile) -> Entity:
        """Create an entity with fresh keys and addresses"""
        index = len(self.entities)
        entity_id = f"E{index:04d}"
        keys = StealthMetaKeyPair.generate(self.group, self.rng)
        window_seconds = profile.burstiness.active_window_days * DAY
        slack = (self.config.horizon_days - profile.burstiness.active_window_days) * DAY
        window_start = self.config.start_timestamp + DAY + int(self.rng.integers(0, slack + 1))
        manual_fee = None
        if profile.fee_habit.mode == "manual":
            manual_fee = profile.fee_habit.value or MANUAL_FEE_BASE + index * MANUAL_FEE_STEP

        entity = Entity(
            entity_id=entity_id,
            index=index,
            profile_name=profile_name,
            profile=profile,
            keys=keys,
            registrant="",
            sender="",
            collectors=[],
            manual_fee=manual_fee,
            window_start=window_start,
            window_seconds=window_seconds,
        )
        entity.registrant = self._address(entity)
        entity.sender = self._address(entity)
        entity.collectors = [self._address(entity) for _ in range(profile.collector_degree or 0)]
        self.entities.append(entity)
        return entity

    def register(self, entity: Entity, timestamp: Optional[int] = None) -> None:
        """Publish the entity's meta keys from its registrant address"""
        if timestamp is None:
            timestamp = self.config.start_timestamp + entity.index
        self._queue(timestamp, "registration", {
            "registrant": entity.registrant,
            "pk_view": entity.keys.pk_view,
            "pk_spend": entity.keys.pk_spend,
            "tx_id": self._tx_id(),
        })

    def send_payment(
        self,
        sender: Entity,
        recipient: Entity,
        asset: Asset,
        amount: int,
        timestamp: int,
    ) -> Payment:
        """
        Pay a recipient through a freshly generated stealth address.

        Args:
            sender: Paying entity; its sender address signs the send
            recipient: Entity whose registered keys receive the payment
            asset: Native currency or token
            amount: Base units
            timestamp: Send time

        Returns:
            The queued Payment
        """
        r = self.group.random_scalar(self.rng)
        stealth = generate_stealth_payment(self.group, recipient.keys.public_keys, r)
        tx_id = self._tx_id()
        self._queue(timestamp, "send", {
            "tx_id": tx_id,
            "sender": sender.sender,
            "stealth_address": stealth.stealth_address,
            "R": stealth.R,
            "pk_stealth": stealth.pk_stealth,
            "asset": asset,
            "amount": amount,
        })
        payment = Payment(stealth.stealth_address, sender, recipient, asset, amount, timestamp, tx_id)
        self.payments.append(payment)
        return payment

    def _withdraw_target(self, payment: Payment) -> Tuple[str, str]:
        entity, profile = payment.recipient, payment.recipient.profile
        if payment.self_test:
            return "sender", entity.sender
        if self.rng.random() < profile.p_withdraw_to_registrant:
            return "registrant", entity.registrant
        if profile.collector_degree is None:
            return "fresh", self._address(entity)
        return "collector", entity.collectors[int(self.rng.integers(len(entity.collectors)))]

    def _fee(self, entity: Entity, asset: Asset) -> Tuple[int, bool]:
        if asset.is_token:
            return self.relayer_fees[int(self.rng.integers(len(self.relayer_fees)))], True
        if entity.manual_fee is not None:
            return entity.manual_fee, False
        return self._auto_fee(), False

    def _gas(self, fee: int, via_relayer: bool) -> int:
        if not self.config.charge_gas or via_relayer:
            return 0
        return TRANSFER_GAS * (BASE_FEE + fee)

    def _queue_withdrawal(self, payment: Payment, recipient: str, amount: int, fee: int,
                          via_relayer: bool, gas_paid: int, timestamp: int) -> None:
        fields = {
            "tx_id": self._tx_id(),
            "stealth_address": payment.stealth_address,
            "recipient": recipient,
            "asset": payment.asset,
            "amount": amount,
            "max_priority_fee_per_gas": fee,
            "via_relayer": via_relayer,
            "gas_paid": gas_paid,
        }
        payment.withdrawals.append(fields)
        self._queue(timestamp, "withdraw", fields)

    def withdraw(self, payment: Payment) -> None:
        """Empty a stealth address the way its owner's profile dictates"""
        entity, profile = payment.recipient, payment.recipient.profile
        kind, target = self._withdraw_target(payment)
        timestamp = payment.timestamp + self._delay()
        partial = not payment.asset.is_token and self.rng.random() < profile.p_partial_withdraw

        fee, via_relayer = self._fee(entity, payment.asset)
        gas = self._gas(fee, via_relayer)
        if not partial:
            self._queue_withdrawal(payment, target, payment.amount - gas, fee, via_relayer, gas, timestamp)
            payment.withdraw_kind = kind
            return

        first = int(payment.amount * self.rng.uniform(0.2, 0.8))
        self._queue_withdrawal(payment, target, first, fee, via_relayer, gas, timestamp)
        second_fee, _ = self._fee(entity, payment.asset)
        second_gas = self._gas(second_fee, False)
        self._queue_withdrawal(
            payment, self._address(entity), payment.amount - first - gas - second_gas,
            second_fee, False, second_gas, timestamp + self._delay(),
        )
        payment.withdraw_kind = "partial"

    # ==================== Output ====================

    @staticmethod
    def eligibility(payment: Payment) -> List[str]:
        """
        Heuristics the recipient's habits expose a withdrawn payment to.

        Derived from profile flags, not from the draws, so recall measures
        how often a habit actually leaks.
        """
        if not payment.withdrawals:
            return []
        entity, profile = payment.recipient, payment.recipient.profile
        tags = []
        if payment.self_test:
            tags.append("H2")
        elif profile.p_withdraw_to_registrant > 0:
            tags.append("H1")
        if payment.self_test or profile.p_withdraw_to_registrant > 0 or profile.collector_degree is not None:
            tags.append("H3")
        if entity.manual_fee is not None and not payment.asset.is_token:
            tags.append("H4")
        return tags

    def build(self) -> Tuple[Ledger, GroundTruth]:
        """
        Assign blocks and intra-block positions and freeze the ledger.

        Returns:
            (Ledger, GroundTruth)
        """
        registrations, sends, withdrawals = [], [], []
        positions: Dict[int, int] = defaultdict(int)
        for timestamp, _, kind, fields in sorted(self._drafts, key=lambda d: d[:2]):
            block = self.config.genesis_block + max(timestamp - self.config.start_timestamp, 0) // self.config.block_time
            position = positions[block]
            positions[block] += 1
            if kind == "registration":
                registrations.append(RegistrationTx(block=block, timestamp=timestamp, position=position, **fields))
            elif kind == "send":
                sends.append(SendTx(block=block, timestamp=timestamp, position=position, **fields))
            else:
                withdrawals.append(WithdrawTx(block=block, timestamp=timestamp, position=position, **fields))

        ground_truth = GroundTruth(
            stealth_to_entity={p.stealth_address: p.recipient.entity_id for p in self.payments},
            address_to_entity=dict(self.address_to_entity),
            entity_profiles={e.entity_id: e.profile_name for e in self.entities},
            payments=[
                PaymentLabel(
                    stealth_address=p.stealth_address,
                    sender_entity=p.sender.entity_id,
                    recipient_entity=p.recipient.entity_id,
                    withdraw_kind=p.withdraw_kind,
                    eligible=self.eligibility(p),
                )
                for p in self.payments
            ],
        )
        ledger = Ledger(self.chain, registrations, sends, withdrawals, group_name=self.group.name)
        self.logger.info(
            "Simulation built",
            entities=len(self.entities),
            sends=len(ledger.sends),
            withdrawals=len(ledger.withdrawals),
        )
        return ledger, ground_truth


def _assign_profiles(config: SimConfig, rng: np.random.Generator) -> List[str]:
    if config.profile_assignment is not None:
        return list(config.profile_assignment)
    names = sorted(config.profile_weights)
    weights = np.array([config.profile_weights[name] for name in names], dtype=float)
    picks = rng.choice(len(names), size=config.num_entities, p=weights / weights.sum())
    return [names[int(i)] for i in picks]


def simulate(config: SimConfig) -> Tuple[Ledger, GroundTruth]:
    """
    Simulate a population of Umbra users.

    Args:
        config: Validated simulation settings

    Returns:
        (Ledger, GroundTruth); identical configs give identical results
    """
    rng = np.random.default_rng(config.seed)
    sim = Simulator(config, rng)
    entities = [sim.add_entity(name, config.profiles[name]) for name in _assign_profiles(config, rng)]
    for entity in entities:
        sim.register(entity)

    n = len(entities)
    activity = np.array([e.profile.burstiness.payments_in_window for e in entities], dtype=float)
    activity /= activity.sum()
    symbols = config.token_symbols

    for _ in range(config.num_payments):
        sender_index = int(rng.choice(n, p=activity))
        sender = entities[sender_index]
        if rng.random() < sender.profile.p_self_test_payment:
            recipient = sender
        else:
            other = int(rng.integers(n - 1))
            recipient = entities[other + 1 if other >= sender_index else other]
        asset = Asset.token(symbols[int(rng.integers(len(symbols)))]) if rng.random() < config.asset_mix else NATIVE
        payment = sim.send_payment(sender, recipient, asset, sim.draw_amount(), sim.draw_activity_time(sender))
        if rng.random() < recipient.profile.p_withdraw:
            sim.withdraw(payment)

    logger.info("Simulation finished", seed=config.seed, payments=config.num_payments)
    return sim.build()
