"""
Newline-delimited JSON ledger format

One flat record per line with a `kind` discriminator:
registration | send | withdraw (plus an optional leading `manifest`).
Amounts and fees are decimal strings of integer base units, addresses are
0x-prefixed lowercase hex (decimal integers in toy mode), group elements use
the group's text encoding.
"""

import json
import re
from pathlib import Path
from typing import Any, Dict, Iterable, Iterator, List, Optional, Tuple, Union

import structlog

from src.crypto.group import ChainAddress, DecodeError, Group, get_group
from src.ledger.model import (
    Asset,
    ChainId,
    Diagnostic,
    Ledger,
    RegistrationTx,
    SendTx,
    WithdrawTx,
)

logger = structlog.get_logger(__name__)

RECORD_KINDS = ("registration", "send", "withdraw")
_KIND_RANK = {kind: rank for rank, kind in enumerate(RECORD_KINDS)}
_HEX_ADDRESS = re.compile(r"^0x[0-9a-f]{40}$")
_TOY_ADDRESS = re.compile(r"^\d+$")

LedgerSource = Union[str, Path, Iterable[Union[str, Dict[str, Any]]]]
Transaction = Union[RegistrationTx, SendTx, WithdrawTx]


class RecordError(ValueError):
    """A single record could not be parsed"""


def _address(record: Dict[str, Any], key: str) -> ChainAddress:
    value = str(_field(record, key)).strip().lower()
    if not (_HEX_ADDRESS.match(value) or _TOY_ADDRESS.match(value)):
        raise RecordError(f"Field {key!r} is not an address: {value!r}")
    return value


def _field(record: Dict[str, Any], key: str) -> Any:
    if key not in record or record[key] is None:
        raise RecordError(f"Missing field {key!r}")
    return record[key]


def _integer(record: Dict[str, Any], key: str, default: Optional[int] = None) -> int:
    if default is not None and record.get(key) is None:
        return default
    value = _field(record, key)
    if isinstance(value, bool):
        raise RecordError(f"Field {key!r} must be an integer")
    try:
        number = int(value)
    except (TypeError, ValueError):
        raise RecordError(f"Field {key!r} must be an integer, got {value!r}") from None
    if number < 0:
        raise RecordError(f"Field {key!r} must not be negative")
    return number


def _element(record: Dict[str, Any], key: str, group: Group, optional: bool = False):
    if optional and record.get(key) is None:
        return None
    try:
        return group.decode_text(str(_field(record, key)))
    except DecodeError as e:
        raise RecordError(f"Field {key!r}: {e}") from None


def _asset(record: Dict[str, Any]) -> Asset:
    try:
        return Asset.from_text(str(record.get("asset", "native")))
    except ValueError as e:
        raise RecordError(str(e)) from None


def parse_record(record: Dict[str, Any], group: Group) -> Transaction:
    """
    Turn one decoded JSON object into a transaction.

    Args:
        record: Object with a `kind` field
        group: Group used to decode element fields

    Returns:
        RegistrationTx, SendTx or WithdrawTx
    """
    kind = record.get("kind")
    if kind == "registration":
        return RegistrationTx(
            registrant=_address(record, "registrant"),
            pk_view=_element(record, "pk_view", group),
            pk_spend=_element(record, "pk_spend", group),
            block=_integer(record, "block"),
            timestamp=_integer(record, "timestamp"),
            position=_integer(record, "position", default=0),
            tx_id=record.get("tx_id"),
        )
    if kind == "send":
        return SendTx(
            tx_id=str(_field(record, "tx_id")),
            sender=_address(record, "sender"),
            stealth_address=_address(record, "stealth_address"),
            R=_element(record, "R", group),
            pk_stealth=_element(record, "pk_stealth", group, optional=True),
            asset=_asset(record),
            amount=_integer(record, "amount"),
            block=_integer(record, "block"),
            timestamp=_integer(record, "timestamp"),
            position=_integer(record, "position", default=0),
        )
    if kind == "withdraw":
        via_relayer = record.get("via_relayer", False)
        if not isinstance(via_relayer, bool):
            raise RecordError("Field 'via_relayer' must be a boolean")
        try:
            return WithdrawTx(
                tx_id=str(_field(record, "tx_id")),
                stealth_address=_address(record, "stealth_address"),
                recipient=_address(record, "recipient"),
                asset=_asset(record),
                amount=_integer(record, "amount"),
                max_priority_fee_per_gas=_integer(record, "max_priority_fee_per_gas", default=0),
                via_relayer=via_relayer,
                block=_integer(record, "block"),
                timestamp=_integer(record, "timestamp"),
                position=_integer(record, "position", default=0),
                gas_paid=_integer(record, "gas_paid", default=0),
            )
        except ValueError as e:
            if isinstance(e, RecordError):
                raise
            raise RecordError(str(e)) from None
    raise RecordError(f"Unknown record kind: {kind!r}")


def transaction_to_record(tx: Transaction, group: Group) -> Dict[str, Any]:
    """Inverse of parse_record"""
    if isinstance(tx, RegistrationTx):
        record = {
            "kind": "registration",
            "registrant": tx.registrant,
            "pk_view": group.encode_text(tx.pk_view),
            "pk_spend": group.encode_text(tx.pk_spend),
            "block": tx.block,
            "timestamp": tx.timestamp,
            "position": tx.position,
        }
        if tx.tx_id is not None:
            record["tx_id"] = tx.tx_id
        return record
    if isinstance(tx, SendTx):
        return {
            "kind": "send",
            "tx_id": tx.tx_id,
            "sender": tx.sender,
            "stealth_address": tx.stealth_address,
            "R": group.encode_text(tx.R),
            "pk_stealth": None if tx.pk_stealth is None else group.encode_text(tx.pk_stealth),
            "asset": tx.asset.to_text(),
            "amount": str(tx.amount),
            "block": tx.block,
            "timestamp": tx.timestamp,
            "position": tx.position,
        }
    return {
        "kind": "withdraw",
        "tx_id": tx.tx_id,
        "stealth_address": tx.stealth_address,
        "recipient": tx.recipient,
        "asset": tx.asset.to_text(),
        "amount": str(tx.amount),
        "max_priority_fee_per_gas": str(tx.max_priority_fee_per_gas),
        "gas_paid": str(tx.gas_paid),
        "via_relayer": tx.via_relayer,
        "block": tx.block,
        "timestamp": tx.timestamp,
        "position": tx.position,
    }


def ledger_to_records(ledger: Ledger) -> List[Dict[str, Any]]:
    """
    Canonical record order: (block, position, kind) with ties kept stable.

    Args:
        ledger: Ledger to serialize

    Returns:
        List of JSON-ready records
    """
    group = get_group(ledger.group_name)
    entries: List[Tuple[int, int, int, Transaction]] = []
    for kind, txs in (("registration", ledger.registrations),
                      ("send", ledger.sends),
                      ("withdraw", ledger.withdrawals)):
        entries.extend((tx.block, tx.position, _KIND_RANK[kind], tx) for tx in txs)
    entries.sort(key=lambda entry: entry[:3])
    return [transaction_to_record(entry[3], group) for entry in entries]


def record_to_line(record: Dict[str, Any]) -> str:
    return json.dumps(record, sort_keys=True, separators=(",", ":")) + "\n"


def dump_ledger(ledger: Ledger, path: Union[str, Path], manifest: Optional[Dict[str, Any]] = None) -> Path:
    """
    Write a ledger as NDJSON.

    Args:
        ledger: Ledger to write
        path: Destination file
        manifest: Written first as a `manifest` record when given

    Returns:
        The written path
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        if manifest is not None:
            f.write(record_to_line({"kind": "manifest", **manifest}))
        for record in ledger_to_records(ledger):
            f.write(record_to_line(record))
    logger.info("Ledger written", path=str(path), sends=len(ledger.sends))
    return path


def read_manifest(path: Union[str, Path]) -> Dict[str, Any]:
    """Manifest fields of a ledger file, or {} when it has none"""
    with open(path, "r", encoding="utf-8") as f:
        first = f.readline()
    try:
        record = json.loads(first)
    except json.JSONDecodeError:
        return {}
    if not isinstance(record, dict) or record.get("kind") != "manifest":
        return {}
    return {k: v for k, v in record.items() if k != "kind"}


def _iter_lines(source: LedgerSource) -> Iterator[Tuple[int, Union[str, Dict[str, Any]]]]:
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as f:
            for number, line in enumerate(f, 1):
                yield number, line
    else:
        for number, item in enumerate(source, 1):
            yield number, item


def load_ledger(
    source: LedgerSource,
    chain: Union[ChainId, str] = "mainnet",
    group_name: str = "production",
) -> Ledger:
    """
    Load and index a ledger.

    Args:
        source: NDJSON file path, or an iterable of lines / decoded records
        chain: Chain the records belong to
        group_name: Group used to decode element fields

    Returns:
        Indexed Ledger; malformed lines end up in `ledger.diagnostics`

    Raises:
        OSError: If the source file cannot be read
    """
    chain = chain if isinstance(chain, ChainId) else ChainId.parse(chain)
    group = get_group(group_name)
    registrations, sends, withdrawals = [], [], []
    diagnostics: List[Diagnostic] = []
    metadata: Dict[str, Any] = {}

    try:
        for number, item in _iter_lines(source):
            if isinstance(item, str):
                if not item.strip():
                    continue
                try:
                    item = json.loads(item)
                except json.JSONDecodeError as e:
                    diagnostics.append(Diagnostic(f"Invalid JSON: {e.msg}", line=number, severity="error"))
                    continue
            if not isinstance(item, dict):
                diagnostics.append(Diagnostic("Record is not an object", line=number, severity="error"))
                continue
            if item.get("kind") == "manifest":
                metadata.update({k: v for k, v in item.items() if k != "kind"})
                continue
            try:
                tx = parse_record(item, group)
            except RecordError as e:
                diagnostics.append(Diagnostic(str(e), line=number, severity="error"))
                continue
            if isinstance(tx, RegistrationTx):
                registrations.append(tx)
            elif isinstance(tx, SendTx):
                sends.append(tx)
            else:
                withdrawals.append(tx)
    except OSError as e:
        logger.error("Failed to read ledger source", source=str(source), error=str(e))
        raise

    ledger = Ledger(chain, registrations, sends, withdrawals,
                    group_name=group_name, diagnostics=diagnostics, metadata=metadata)
    ledger.diagnostics.extend(ledger.check_balances())

    for diagnostic in ledger.diagnostics:
        logger.warning("Ledger diagnostic", line=diagnostic.line, message=diagnostic.message)
    logger.info(
        "Ledger loaded",
        chain=str(chain),
        registrations=len(ledger.registrations),
        sends=len(ledger.sends),
        withdrawals=len(ledger.withdrawals),
        diagnostics=len(ledger.diagnostics),
    )
    return ledger
