"""
Ledger Module

Transaction model, NDJSON ledger format and explorer ingestion.
"""

from .explorer import fetch_from_explorer
from .loader import RecordError, dump_ledger, ledger_to_records, load_ledger
from .model import (
    NATIVE,
    Asset,
    ChainId,
    Diagnostic,
    GroundTruth,
    Ledger,
    PaymentLabel,
    RegistrationTx,
    SendTx,
    WithdrawTx,
    full_withdraw_set,
    full_withdrawals,
)

__all__ = [
    "NATIVE",
    "Asset",
    "ChainId",
    "Diagnostic",
    "GroundTruth",
    "Ledger",
    "PaymentLabel",
    "RecordError",
    "RegistrationTx",
    "SendTx",
    "WithdrawTx",
    "dump_ledger",
    "fetch_from_explorer",
    "full_withdraw_set",
    "full_withdrawals",
    "ledger_to_records",
    "load_ledger",
]
