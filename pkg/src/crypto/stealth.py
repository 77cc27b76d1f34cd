"""
Dual-key stealth addresses

Generation, the naive linear detection scan, and the stealth spending secret.
The secret c + s follows from pk_stealth = c·G + pk_spend.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
import structlog

from .group import ChainAddress, DecodeError, Group, GroupElement, Scalar

logger = structlog.get_logger(__name__)

Announcement = Tuple[GroupElement, GroupElement]


@dataclass(frozen=True)
class StealthMetaKeyPair:
    """Viewing and spending keys of one recipient"""
    v: Scalar
    s: Scalar
    pk_view: GroupElement
    pk_spend: GroupElement

    @classmethod
    def generate(cls, group: Group, rng: np.random.Generator) -> "StealthMetaKeyPair":
        v, pk_view = group.keygen(rng)
        s, pk_spend = group.keygen(rng)
        return cls(v=v, s=s, pk_view=pk_view, pk_spend=pk_spend)

    @classmethod
    def from_secrets(cls, group: Group, v: Scalar, s: Scalar) -> "StealthMetaKeyPair":
        v, s = group.scalar(v), group.scalar(s)
        if v == 0 or s == 0:
            raise ValueError("Viewing and spending secrets must be nonzero")
        return cls(v=v, s=s, pk_view=group.base_mul(v), pk_spend=group.base_mul(s))

    @property
    def public_keys(self) -> Tuple[GroupElement, GroupElement]:
        """What the registry publishes: (pk_view, pk_spend)"""
        return self.pk_view, self.pk_spend


@dataclass(frozen=True)
class StealthPayment:
    """Announcement (R, pk_stealth) plus the derived stealth address"""
    R: GroupElement
    pk_stealth: GroupElement
    stealth_address: ChainAddress

    @property
    def announcement(self) -> Announcement:
        return self.R, self.pk_stealth


def _expected_stealth_key(
    group: Group,
    v: Scalar,
    pk_spend: GroupElement,
    R: GroupElement,
) -> GroupElement:
    c = group.hash_to_scalar(group.scalar_mul(v, R))
    return group.add(group.base_mul(c), pk_spend)


def generate_stealth_payment(
    group: Group,
    recipient: Tuple[GroupElement, GroupElement],
    ephemeral_r: Scalar,
) -> StealthPayment:
    """
    Generate a stealth payment for a recipient's published keys.

    Args:
        group: Group the keys live in
        recipient: (pk_view, pk_spend)
        ephemeral_r: Sender's ephemeral secret, nonzero

    Returns:
        StealthPayment with R = r·G and pk_stealth = H(r·pk_view)·G + pk_spend
    """
    r = group.scalar(ephemeral_r)
    if r == 0:
        raise ValueError("Ephemeral scalar must be nonzero")

    pk_view, pk_spend = recipient
    R = group.base_mul(r)
    c = group.hash_to_scalar(group.scalar_mul(r, pk_view))
    pk_stealth = group.add(group.base_mul(c), pk_spend)
    return StealthPayment(R=R, pk_stealth=pk_stealth, stealth_address=group.derive_address(pk_stealth))


def scan_announcements(
    group: Group,
    v: Scalar,
    pk_spend: GroupElement,
    announcements: Sequence[Announcement],
    max_workers: Optional[int] = None,
    malformed: Optional[List[int]] = None,
) -> List[int]:
    """
    Check every announcement against the recipient's keys.

    Args:
        group: Group the keys live in
        v: Viewing secret
        pk_spend: Spending public key
        announcements: (R_i, pk_stealth_i) pairs in ledger order
        max_workers: Scan with a thread pool when > 1
        malformed: If given, indices of undecodable announcements are appended

    Returns:
        Indices i with H(v·R_i)·G + pk_spend == pk_stealth_i, in input order
    """
    def check(item: Tuple[int, Announcement]) -> Optional[bool]:
        index, (R, pk_stealth) = item
        try:
            return _expected_stealth_key(group, v, pk_spend, R) == pk_stealth
        except DecodeError as e:
            logger.warning("Skipping malformed announcement", index=index, error=str(e))
            return None

    items = list(enumerate(announcements))
    if max_workers and max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            outcomes = list(pool.map(check, items))
    else:
        outcomes = [check(item) for item in items]

    detected = []
    for index, outcome in enumerate(outcomes):
        if outcome is None:
            if malformed is not None:
                malformed.append(index)
        elif outcome:
            detected.append(index)
    return detected


def derive_stealth_secret(group: Group, v: Scalar, s: Scalar, R: GroupElement) -> Scalar:
    """
    Spending secret of a detected stealth payment.

    Args:
        group: Group the keys live in
        v: Viewing secret
        s: Spending secret
        R: Ephemeral public key of the payment

    Returns:
        sk_st = H(v·R) + s mod p, so that sk_st·G = pk_stealth
    """
    return group.scalar(group.hash_to_scalar(group.scalar_mul(v, R)) + s)
