"""
Explorer ingestion

Turns Etherscan-style transaction lists of the stealth key registry and the
Umbra contract into ledger records. Registrations and stealth sends come from
the contracts' calldata; native withdrawals come from the stealth addresses'
own outgoing transfers, with the priority fee read through the proxy module.
"""

from collections import defaultdict
from typing import Any, Dict, Iterator, List, Optional, Tuple

import structlog
from eth_utils import function_signature_to_4byte_selector

from src.utils.explorer_client import EtherscanClient, ExplorerError

logger = structlog.get_logger(__name__)

SIGNATURES = {
    "setStealthKeys": "setStealthKeys(uint256,uint256,uint256,uint256)",
    "setStealthKeysOnBehalf": (
        "setStealthKeysOnBehalf(address,uint256,uint256,uint256,uint256,uint8,bytes32,bytes32)"
    ),
    "sendEth": "sendEth(address,uint256,bytes32,bytes32)",
    "sendToken": "sendToken(address,address,uint256,bytes32,bytes32)",
    "withdrawToken": "withdrawToken(address,address)",
    "withdrawTokenOnBehalf": (
        "withdrawTokenOnBehalf(address,address,address,address,uint256,uint8,bytes32,bytes32)"
    ),
}
SELECTORS = {function_signature_to_4byte_selector(sig): name for name, sig in SIGNATURES.items()}


def decode_call(input_hex: str) -> Optional[Tuple[str, List[bytes]]]:
    """
    Split calldata into a known method name and its 32-byte argument words.

    Args:
        input_hex: 0x-prefixed calldata

    Returns:
        (method name, words) or None for unknown or truncated calldata
    """
    body = input_hex[2:] if input_hex.startswith("0x") else input_hex
    try:
        data = bytes.fromhex(body)
    except ValueError:
        return None
    name = SELECTORS.get(data[:4])
    if name is None:
        return None
    args = data[4:]
    words = [args[i:i + 32] for i in range(0, len(args) - len(args) % 32, 32)]
    if len(words) < SIGNATURES[name].count(",") + 1:
        return None
    return name, words


def _word_address(word: bytes) -> str:
    return "0x" + word[12:].hex()


def _word_int(word: bytes) -> int:
    return int.from_bytes(word, "big")


def _compressed_key(prefix_word: bytes, x_word: bytes) -> str:
    return "0x" + bytes([_word_int(prefix_word)]).hex() + x_word.hex()


def _common(row: Dict[str, Any]) -> Dict[str, Any]:
    return {
        "tx_id": row["hash"],
        "block": int(row["blockNumber"]),
        "timestamp": int(row["timeStamp"]),
        "position": int(row.get("transactionIndex") or 0),
    }


def _succeeded(row: Dict[str, Any]) -> bool:
    return str(row.get("isError", "0")) == "0" and str(row.get("txreceipt_status", "1")) != "0"


def normalize_registry_row(row: Dict[str, Any]) -> Optional[Dict[str, Any]]:
    """Registration record for a successful registry call, else None"""
    if not _succeeded(row):
        return None
    decoded = decode_call(row.get("input", "0x"))
    if decoded is None:
        return None
    name, words = decoded
    if name == "setStealthKeys":
        registrant = row["from"].lower()
    elif name == "setStealthKeysOnBehalf":
        registrant = _word_address(words[0])
        words = words[1:]
    else:
        return None
    return {
        "kind": "registration",
        "registrant": registrant,
        "pk_spend": _compressed_key(words[0], words[1]),
        "pk_view": _compressed_key(words[2], words[3]),
        **_common(row),
    }


def normalize_umbra_row(row: Dict[str, Any], received_tokens: Dict[Tuple[str, str], int]) -> Optional[Dict[str, Any]]:
    """
    Send or token-withdraw record for a successful Umbra call.

    Args:
        row: Explorer transaction row
        received_tokens: Running (stealth address, token) -> received amount,
            updated by token sends and read by token withdrawals

    Returns:
        Record dict or None when the call is not a stealth send or withdrawal
    """
    if not _succeeded(row):
        return None
    decoded = decode_call(row.get("input", "0x"))
    if decoded is None:
        return None
    name, words = decoded
    caller = row["from"].lower()

    if name == "sendEth":
        toll = _word_int(words[1])
        return {
            "kind": "send",
            "sender": caller,
            "stealth_address": _word_address(words[0]),
            # only the x-coordinate is announced; the even point stands in for R
            "R": "0x02" + words[2].hex(),
            "pk_stealth": None,
            "asset": "native",
            "amount": str(max(int(row.get("value", "0")) - toll, 0)),
            **_common(row),
        }
    if name == "sendToken":
        stealth_address = _word_address(words[0])
        token = _word_address(words[1])
        amount = _word_int(words[2])
        received_tokens[(stealth_address, token)] += amount
        return {
            "kind": "send",
            "sender": caller,
            "stealth_address": stealth_address,
            "R": "0x02" + words[3].hex(),
            "pk_stealth": None,
            "asset": f"token:{token}",
            "amount": str(amount),
            **_common(row),
        }
    if name == "withdrawToken":
        stealth_address, recipient, token = caller, _word_address(words[0]), _word_address(words[1])
        sponsor_fee, via_relayer = 0, False
    elif name == "withdrawTokenOnBehalf":
        stealth_address, recipient = _word_address(words[0]), _word_address(words[1])
        token = _word_address(words[2])
        sponsor_fee, via_relayer = _word_int(words[4]), True
    else:
        return None
    received = received_tokens.pop((stealth_address, token), 0)
    return {
        "kind": "withdraw",
        "stealth_address": stealth_address,
        "recipient": recipient,
        "asset": f"token:{token}",
        "amount": str(max(received - sponsor_fee, 0)),
        "max_priority_fee_per_gas": "0",
        "gas_paid": "0",
        "via_relayer": via_relayer,
        **_common(row),
    }


def _priority_fee(client: EtherscanClient, tx_hash: str, row: Dict[str, Any]) -> int:
    tx = client.get_transaction(tx_hash)
    fee = tx.get("maxPriorityFeePerGas")
    if fee is None:
        # legacy transaction
        fee = tx.get("gasPrice") or row.get("gasPrice") or "0"
    return int(fee, 16) if isinstance(fee, str) and fee.startswith("0x") else int(fee)


def normalize_native_withdrawal(
    row: Dict[str, Any], stealth_address: str, client: EtherscanClient
) -> Optional[Dict[str, Any]]:
    """Withdraw record for an outgoing native transfer of a stealth address"""
    if not _succeeded(row) or row.get("from", "").lower() != stealth_address:
        return None
    value = int(row.get("value", "0"))
    if value <= 0 or not row.get("to"):
        return None
    return {
        "kind": "withdraw",
        "stealth_address": stealth_address,
        "recipient": row["to"].lower(),
        "asset": "native",
        "amount": str(value),
        "max_priority_fee_per_gas": str(_priority_fee(client, row["hash"], row)),
        "gas_paid": str(int(row.get("gasUsed", "0")) * int(row.get("gasPrice", "0"))),
        "via_relayer": False,
        **_common(row),
    }


def fetch_from_explorer(
    endpoint: str,
    api_key: Optional[str],
    registry_address: str,
    umbra_address: str,
    start_block: int = 0,
    end_block: int = 99999999,
    client: Optional[EtherscanClient] = None,
    rate_limit_rps: float = 5.0,
    page_size: int = 1000,
) -> Iterator[Dict[str, Any]]:
    """
    Stream normalized ledger records from an Etherscan-compatible explorer.

    Args:
        endpoint: Explorer API URL
        api_key: Explorer API key (ETHERSCAN_API_KEY when None)
        registry_address: Stealth key registry contract
        umbra_address: Umbra payment contract
        start_block: First block, inclusive
        end_block: Last block, inclusive
        client: Preconfigured client (replay sessions, tests)
        rate_limit_rps: Requests per second when a client is created here
        page_size: Rows per page when a client is created here

    Returns:
        Iterator of records in the load_ledger format

    Raises:
        ExplorerError: If a page cannot be fetched after retries or is malformed
    """
    if client is None:
        client = EtherscanClient(endpoint, api_key, rate_limit_rps=rate_limit_rps, page_size=page_size)
    registry_address = registry_address.lower()
    umbra_address = umbra_address.lower()

    registrations = 0
    for row in client.txlist(registry_address, start_block, end_block):
        if row.get("to", "").lower() != registry_address:
            continue
        record = normalize_registry_row(row)
        if record is not None:
            registrations += 1
            yield record

    received_tokens: Dict[Tuple[str, str], int] = defaultdict(int)
    native_stealth: Dict[str, None] = {}
    umbra_records = 0
    for row in client.txlist(umbra_address, start_block, end_block):
        if row.get("to", "").lower() != umbra_address:
            continue
        record = normalize_umbra_row(row, received_tokens)
        if record is None:
            continue
        umbra_records += 1
        if record["kind"] == "send" and record["asset"] == "native" :
            native_stealth.setdefault(record["stealth_address"])
        yield record

    native_withdrawals = 0
    for stealth_address in native_stealth:
        for row in client.txlist(stealth_address, start_block, end_block):
            record = normalize_native_withdrawal(row, stealth_address, client)
            if record is not None:
                native_withdrawals += 1
                yield record

    logger.info(
        "Explorer ingestion finished",
        endpoint=endpoint,
        registrations=registrations,
        umbra_records=umbra_records,
        native_withdrawals=native_withdrawals,
    )


__all__ = [
    "ExplorerError",
    "SELECTORS",
    "decode_call",
    "fetch_from_explorer",
    "normalize_native_withdrawal",
    "normalize_registry_row",
    "normalize_umbra_row",
]
