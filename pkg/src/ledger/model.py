"""
Ledger data model

Registrations, stealth sends and withdrawals of one chain, ordered by
(block, intra-block position), with the lookups the heuristics need.
"""

import hashlib
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Sequence, Set, Tuple

import structlog

from src.crypto.group import ChainAddress, GroupElement

logger = structlog.get_logger(__name__)

KNOWN_CHAINS = ("mainnet", "polygon", "arbitrum", "optimism")


@dataclass(frozen=True)
class ChainId:
    """One of the four studied chains or a named custom chain"""
    name: str

    @classmethod
    def parse(cls, name: str) -> "ChainId":
        cleaned = (name or "").strip().lower()
        if cleaned.startswith("custom:"):
            cleaned = cleaned[len("custom:"):]
        if not cleaned:
            raise ValueError("Chain name must not be empty")
        return cls(cleaned)

    @property
    def is_custom(self) -> bool:
        return self.name not in KNOWN_CHAINS

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Asset:
    """Native currency or an ERC-20 token identified by symbol"""
    kind: str = "native"
    symbol: Optional[str] = None

    def __post_init__(self):
        if self.kind not in ("native", "token"):
            raise ValueError(f"Unknown asset kind: {self.kind}")
        if self.kind == "token" and not self.symbol:
            raise ValueError("Token assets need a symbol")

    @classmethod
    def token(cls, symbol: str) -> "Asset":
        return cls("token", symbol)

    @property
    def is_token(self) -> bool:
        return self.kind == "token"

    def to_text(self) -> str:
        return f"token:{self.symbol}" if self.is_token else "native"

    @classmethod
    def from_text(cls, text: str) -> "Asset":
        if text == "native":
            return NATIVE
        if text.startswith("token:") and len(text) > len("token:"):
            return cls.token(text[len("token:"):])
        raise ValueError(f"Unknown asset: {text!r}")


NATIVE = Asset()


@dataclass(frozen=True)
class RegistrationTx:
    """A write of stealth meta public keys into the registry"""
    registrant: ChainAddress
    pk_view: GroupElement
    pk_spend: GroupElement
    block: int
    timestamp: int
    position: int = 0
    tx_id: Optional[str] = None


@dataclass(frozen=True)
class SendTx:
    """A stealth payment and its Announcement (R, pk_stealth)"""
    tx_id: str
    sender: ChainAddress
    stealth_address: ChainAddress
    R: GroupElement
    pk_stealth: Optional[GroupElement]
    asset: Asset
    amount: int
    block: int
    timestamp: int
    position: int = 0

    @property
    def announcement(self) -> Tuple[GroupElement, Optional[GroupElement]]:
        return self.R, self.pk_stealth


@dataclass(frozen=True)
class WithdrawTx:
    """Funds leaving a stealth address for a recipient address"""
    tx_id: str
    stealth_address: ChainAddress
    recipient: ChainAddress
    asset: Asset
    amount: int
    max_priority_fee_per_gas: int
    via_relayer: bool
    block: int
    timestamp: int
    position: int = 0
    gas_paid: int = 0

    def __post_init__(self):
        if self.via_relayer and not self.asset.is_token:
            raise ValueError(f"Relayed withdrawal {self.tx_id} must move a token")


@dataclass(frozen=True)
class Diagnostic:
    """A data problem found while loading; never fatal"""
    message: str
    line: Optional[int] = None
    severity: str = "warning"

    def to_dict(self) -> Dict[str, Any]:
        return {"line": self.line, "message": self.message, "severity": self.severity}


def _ordered(entries: Iterable[Any]) -> Tuple[Any, ...]:
    return tuple(sorted(entries, key=lambda tx: (tx.block, tx.position)))


class Ledger:
    """
    Immutable view of one chain's Umbra activity.

    Entries are sorted by (block, position); the sort is stable, so ties keep
    their insertion order.
    """

    def __init__(
        self,
        chain: ChainId,
        registrations: Iterable[RegistrationTx] = (),
        sends: Iterable[SendTx] = (),
        withdrawals: Iterable[WithdrawTx] = (),
        group_name: str = "production",
        diagnostics: Optional[Sequence[Diagnostic]] = None,
        metadata: Optional[Dict[str, Any]] = None,
    ):
        self.chain = chain
        self.group_name = group_name
        self.registrations: Tuple[RegistrationTx, ...] = _ordered(registrations)
        self.sends: Tuple[SendTx, ...] = _ordered(sends)
        self.withdrawals: Tuple[WithdrawTx, ...] = _ordered(withdrawals)
        self.diagnostics: List[Diagnostic] = list(diagnostics or [])
        self.metadata: Dict[str, Any] = dict(metadata or {})
        self._build_indexes()

    def _build_indexes(self) -> None:
        by_registrant = defaultdict(list)
        for reg in self.registrations:
            by_registrant[reg.registrant].append(reg)
        sends_by_stealth = defaultdict(list)
        for send in self.sends:
            sends_by_stealth[send.stealth_address].append(send)
        by_stealth = defaultdict(list)
        by_recipient = defaultdict(list)
        for withdrawal in self.withdrawals:
            by_stealth[withdrawal.stealth_address].append(withdrawal)
            by_recipient[withdrawal.recipient].append(withdrawal)

        self._registrations_by_registrant = {k: tuple(v) for k, v in by_registrant.items()}
        self._sends_by_stealth = {k: tuple(v) for k, v in sends_by_stealth.items()}
        self._withdrawals_by_stealth = {k: tuple(v) for k, v in by_stealth.items()}
        self._withdrawals_by_recipient = {k: tuple(v) for k, v in by_recipient.items()}

    # ==================== Lookups ====================

    @property
    def registrants(self) -> Set[ChainAddress]:
        return set(self._registrations_by_registrant)

    def registrations_by(self, registrant: ChainAddress) -> Tuple[RegistrationTx, ...]:
        return self._registrations_by_registrant.get(registrant, ())

    def current_registration(self, registrant: ChainAddress) -> Optional[RegistrationTx]:
        """Latest registration wins; the registry overwrites keys"""
        history = self.registrations_by(registrant)
        return history[-1] if history else None

    def sends_to(self, stealth_address: ChainAddress) -> Tuple[SendTx, ...]:
        return self._sends_by_stealth.get(stealth_address, ())

    def withdrawals_from(self, stealth_address: ChainAddress) -> Tuple[WithdrawTx, ...]:
        return self._withdrawals_by_stealth.get(stealth_address, ())

    def withdrawals_to(self, recipient: ChainAddress) -> Tuple[WithdrawTx, ...]:
        return self._withdrawals_by_recipient.get(recipient, ())

    @property
    def stealth_addresses(self) -> List[ChainAddress]:
        """Stealth addresses in order of their first incoming payment"""
        return list(self._sends_by_stealth)

    @property
    def withdrawn_stealth_addresses(self) -> List[ChainAddress]:
        """Stealth addresses with at least one withdrawal, by first withdrawal"""
        return list(self._withdrawals_by_stealth)

    def received_amount(self, stealth_address: ChainAddress, asset: Optional[Asset] = None) -> int:
        return sum(
            send.amount for send in self.sends_to(stealth_address)
            if asset is None or send.asset == asset
        )

    # ==================== Integrity ====================

    def check_balances(self) -> List[Diagnostic]:
        """
        Report withdrawals that the recorded sends cannot explain.

        Returns:
            Warning diagnostics; the ledger itself is left untouched
        """
        problems = []
        for stealth_address, withdrawals in self._withdrawals_by_stealth.items():
            if stealth_address not in self._sends_by_stealth:
                problems.append(Diagnostic(
                    f"Withdrawal {withdrawals[0].tx_id} from unknown stealth address {stealth_address}"
                ))
                continue
            for asset in {w.asset for w in withdrawals}:
                withdrawn = sum(w.amount + (0 if w.asset.is_token else w.gas_paid)
                                for w in withdrawals if w.asset == asset)
                received = self.received_amount(stealth_address, asset)
                if withdrawn > received:
                    problems.append(Diagnostic(
                        f"Stealth address {stealth_address} withdrew {withdrawn} "
                        f"{asset.to_text()} but received {received}"
                    ))
        return problems

    def fingerprint(self) -> str:
        """sha-256 over the canonical serialization"""
        from src.ledger.loader import record_to_line, ledger_to_records

        digest = hashlib.sha256()
        digest.update(f"{self.chain}|{self.group_name}\n".encode())
        for record in ledger_to_records(self):
            digest.update(record_to_line(record).encode())
        return digest.hexdigest()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Ledger):
            return NotImplemented
        return (
            self.chain == other.chain
            and self.group_name == other.group_name
            and self.registrations == other.registrations
            and self.sends == other.sends
            and self.withdrawals == other.withdrawals
        )

    def __repr__(self) -> str:
        return (
            f"Ledger(chain={self.chain}, registrations={len(self.registrations)}, "
            f"sends={len(self.sends)}, withdrawals={len(self.withdrawals)})"
        )


@dataclass
class PaymentLabel:
    """Ground-truth facts about one simulated payment"""
    stealth_address: ChainAddress
    sender_entity: str
    recipient_entity: str
    withdraw_kind: str
    eligible: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "stealth_address": self.stealth_address,
            "sender_entity": self.sender_entity,
            "recipient_entity": self.recipient_entity,
            "withdraw_kind": self.withdraw_kind,
            "eligible": list(self.eligible),
        }


@dataclass
class GroundTruth:
    """Evaluation oracle produced by the simulator; absent for real data"""
    stealth_to_entity: Dict[ChainAddress, str] = field(default_factory=dict)
    address_to_entity: Dict[ChainAddress, str] = field(default_factory=dict)
    entity_profiles: Dict[str, str] = field(default_factory=dict)
    payments: List[PaymentLabel] = field(default_factory=list)

    def entity_of(self, address: ChainAddress) -> Optional[str]:
        return self.stealth_to_entity.get(address) or self.address_to_entity.get(address)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "stealth_to_entity": dict(sorted(self.stealth_to_entity.items())),
            "address_to_entity": dict(sorted(self.address_to_entity.items())),
            "entity_profiles": dict(sorted(self.entity_profiles.items())),
            "payments": [label.to_dict() for label in self.payments],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "GroundTruth":
        return cls(
            stealth_to_entity=dict(data.get("stealth_to_entity", {})),
            address_to_entity=dict(data.get("address_to_entity", {})),
            entity_profiles=dict(data.get("entity_profiles", {})),
            payments=[PaymentLabel(**item) for item in data.get("payments", [])],
        )


def full_withdrawals(ledger: Ledger) -> Dict[ChainAddress, WithdrawTx]:
    """
    Stealth addresses emptied by exactly one withdrawal, with that withdrawal.

    Token payments are always withdrawn whole, so a single token withdrawal
    qualifies. A single native withdrawal qualifies when amount plus gas_paid
    equals everything the address received in the native asset.

    Args:
        ledger: Ledger to inspect

    Returns:
        Ordered mapping stealth address -> its single withdrawal
    """
    result = {}
    for stealth_address in ledger.withdrawn_stealth_addresses:
        withdrawals = ledger.withdrawals_from(stealth_address)
        if len(withdrawals) != 1:
            continue
        withdrawal = withdrawals[0]
        if withdrawal.asset.is_token:
            result[stealth_address] = withdrawal
            continue
        received = ledger.received_amount(stealth_address, NATIVE)
        if received > 0 and withdrawal.amount + withdrawal.gas_paid == received:
            result[stealth_address] = withdrawal
    return result


def full_withdraw_set(ledger: Ledger) -> Set[ChainAddress]:
    """Stealth addresses whose single withdrawal emptied them"""
    return set(full_withdrawals(ledger))
