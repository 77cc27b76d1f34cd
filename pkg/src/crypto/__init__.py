"""Crypto module - prime-order groups and the dual-key stealth scheme"""

from .group import (
    DecodeError,
    Group,
    GroupElement,
    ProductionGroup,
    ToyGroup,
    get_group,
)
from .stealth import (
    StealthMetaKeyPair,
    StealthPayment,
    derive_stealth_secret,
    generate_stealth_payment,
    scan_announcements,
)

__all__ = [
    "DecodeError",
    "Group",
    "GroupElement",
    "ProductionGroup",
    "ToyGroup",
    "get_group",
    "StealthMetaKeyPair",
    "StealthPayment",
    "derive_stealth_secret",
    "generate_stealth_payment",
    "scan_announcements",
]
