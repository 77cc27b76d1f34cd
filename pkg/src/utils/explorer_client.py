"""
Etherscan API Wrapper

Provides clean, reusable methods for talking to Etherscan-compatible
explorers (etherscan.io, polygonscan, arbiscan, optimistic.etherscan).
Handles authentication, paging, rate limits, retries, and recording or
replaying responses for offline runs.
"""

import json
import os
import time
from pathlib import Path
from typing import Any, Callable, Dict, Iterator, List, Optional, Union

import requests
import structlog

logger = structlog.get_logger(__name__)

NO_RESULT_MESSAGES = ("no transactions found", "no records found")


class ExplorerError(RuntimeError):
    """Explorer request failed; `page` names the request that broke"""

    def __init__(self, message: str, page: Optional[str] = None):
        super().__init__(message)
        self.page = page


class _ReplayResponse:
    """Just enough of requests.Response for the client"""

    def __init__(self, body: Any, status_code: int = 200):
        self._body = body
        self.status_code = status_code

    def raise_for_status(self) -> None:
        if self.status_code >= 400:
            raise requests.HTTPError(f"{self.status_code} replayed error")

    def json(self) -> Any:
        if isinstance(self._body, str):
            return json.loads(self._body)
        return self._body


class RecordedSession:
    """
    Replays responses captured by a recording client.

    An entry matches a request when every recorded parameter equals the
    request's parameter (the API key is ignored); the most specific match
    wins. Unrecorded requests replay as an empty result page unless
    `strict` is set.
    """

    def __init__(self, entries: List[Dict[str, Any]], strict: bool = False):
        self.entries = entries
        self.strict = strict
        self.requests: List[Dict[str, str]] = []

    @classmethod
    def from_file(cls, path: Union[str, Path], strict: bool = False) -> "RecordedSession":
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
        entries = data["entries"] if isinstance(data, dict) else data
        return cls(entries, strict=strict)

    def get(self, url: str, params: Optional[Dict[str, Any]] = None, timeout: Optional[float] = None):
        query = {k: str(v) for k, v in (params or {}).items() if k != "apikey"}
        self.requests.append(query)
        best, best_size = None, -1
        for entry in self.entries:
            wanted = {k: str(v) for k, v in entry.get("params", {}).items()}
            if all(query.get(k) == v for k, v in wanted.items()) and len(wanted) > best_size:
                best, best_size = entry, len(wanted)
        if best is None:
            if self.strict:
                return _ReplayResponse({"error": "not recorded"}, status_code=404)
            return _ReplayResponse({"status": "0", "message": "No transactions found", "result": []})
        return _ReplayResponse(best.get("response"), status_code=int(best.get("status_code", 200)))


class EtherscanClient:
    """
    Wrapper for Etherscan-style explorer APIs.
    Handles paging, the requests-per-second cap, retries with backoff and
    rate-limit responses.
    """

    def __init__(
        self,
        endpoint: str,
        api_key: Optional[str] = None,
        rate_limit_rps: float = 5.0,
        page_size: int = 1000,
        max_retries: int = 3,
        backoff_seconds: float = 1.0,
        session: Optional[Any] = None,
        sleep: Callable[[float], None] = time.sleep,
        clock: Callable[[], float] = time.monotonic,
        record: bool = False,
    ):
        """
        Initialize the explorer wrapper.

        Args:
            endpoint: API base URL, e.g. https://api.etherscan.io/api
            api_key: Explorer API key. If None, uses ETHERSCAN_API_KEY env var.
            rate_limit_rps: Maximum requests per second
            page_size: `offset` used when paging list endpoints
            max_retries: Attempts after the first failure before giving up
            backoff_seconds: First retry delay, doubled on every retry
            session: requests.Session or a RecordedSession
            sleep: Sleep function (replaced in tests)
            clock: Monotonic clock (replaced in tests)
            record: Keep every response for save_recording()
        """
        if rate_limit_rps <= 0:
            raise ValueError("rate_limit_rps must be positive")
        self.endpoint = endpoint
        self.api_key = api_key or os.getenv("ETHERSCAN_API_KEY")
        self.rate_limit_rps = rate_limit_rps
        self.page_size = page_size
        self.max_retries = max_retries
        self.backoff_seconds = backoff_seconds
        self.sleep = sleep
        self.clock = clock
        self.session = session
        if self.session is None:
            self.session = requests.Session()
            self.session.headers.update({"User-Agent": "umbra-anonymity-toolkit"})
        self.recording: Optional[List[Dict[str, Any]]] = [] if record else None
        self._last_request: Optional[float] = None
        self.logger = structlog.get_logger(self.__class__.__name__)
        self.logger.info("Explorer client initialized", endpoint=endpoint, rate_limit_rps=rate_limit_rps)

    # ==================== Transport ====================

    def _throttle(self) -> None:
        interval = 1.0 / self.rate_limit_rps
        now = self.clock()
        if self._last_request is not None:
            wait = self._last_request + interval - now
            if wait > 0:
                self.sleep(wait)
                now += wait
        self._last_request = now

    @staticmethod
    def _is_rate_limited(body: Dict[str, Any]) -> bool:
        result = body.get("result")
        return (
            str(body.get("status")) == "0"
            and isinstance(result, str)
            and "rate limit" in result.lower()
        )

    def _request(self, params: Dict[str, Any], page_label: str) -> Any:
        """
        Perform one GET and unwrap the response envelope.

        Args:
            params: Query parameters without the API key
            page_label: Human-readable name of the request for errors

        Returns:
            The envelope's `result`
        """
        query = {k: str(v) for k, v in params.items()}
        if self.api_key:
            query["apikey"] = self.api_key

        failures = 0
        rate_limited = 0
        while True:
            self._throttle()
            try:
                response = self.session.get(self.endpoint, params=query, timeout=30)
                response.raise_for_status()
            except requests.RequestException as e:
                failures += 1
                if failures > self.max_retries:
                    self.logger.error("Explorer request failed", page=page_label, error=str(e))
                    raise ExplorerError(
                        f"Request for {page_label} failed after {failures} attempts: {e}",
                        page=page_label,
                    ) from e
                wait = self.backoff_seconds * 2 ** (failures - 1)
                self.logger.warning("Explorer request failed, retrying", page=page_label, wait=wait, error=str(e))
                self.sleep(wait)
                continue

            try:
                body = response.json()
            except ValueError as e:
                raise ExplorerError(f"Malformed response body for {page_label}", page=page_label) from e
            if not isinstance(body, dict) or "result" not in body:
                raise ExplorerError(f"Malformed response body for {page_label}", page=page_label)

            if self._is_rate_limited(body):
                rate_limited += 1
                if rate_limited > 10 * max(self.max_retries, 1):
                    raise ExplorerError(f"Rate limit never cleared for {page_label}", page=page_label)
                wait = max(1.0 / self.rate_limit_rps, self.backoff_seconds)
                self.logger.warning("Explorer rate limit hit, waiting", page=page_label, wait=wait)
                self.sleep(wait)
                continue

            if self.recording is not None:
                self.recording.append({
                    "params": {k: v for k, v in query.items() if k != "apikey"},
                    "response": body,
                })
            return self._unwrap(body, page_label)

    @staticmethod
    def _unwrap(body: Dict[str, Any], page_label: str) -> Any:
        if "status" not in body:
            # proxy module answers in JSON-RPC form
            if body.get("error"):
                raise ExplorerError(f"Explorer RPC error for {page_label}: {body['error']}", page=page_label)
            return body["result"]
        if str(body["status"]) == "1":
            return body["result"]
        message = str(body.get("message", ""))
        if message.lower() in NO_RESULT_MESSAGES or body.get("result") == []:
            return []
        raise ExplorerError(f"Explorer error for {page_label}: {message} {body.get('result')}", page=page_label)

    # ==================== List endpoints ====================

    def iter_pages(self, params: Dict[str, Any], label: str) -> Iterator[List[Dict[str, Any]]]:
        """
        Yield result pages until a short page ends the listing.

        Args:
            params: Query parameters of the list endpoint
            label: Request name used in logs and errors

        Returns:
            Iterator over lists of rows
        """
        page = 1
        while True:
            page_label = f"{label} page {page}"
            result = self._request({**params, "page": page, "offset": self.page_size}, page_label)
            if not isinstance(result, list):
                raise ExplorerError(f"Malformed response body for {page_label}: result is not a list", page=page_label)
            self.logger.debug("Explorer page fetched", page=page_label, rows=len(result))
            yield result
            if len(result) < self.page_size:
                return
            page += 1

    def txlist(self, address: str, start_block: int = 0, end_block: int = 99999999) -> Iterator[Dict[str, Any]]:
        """Normal transactions sent or received by an address"""
        params = {
            "module": "account",
            "action": "txlist",
            "address": address,
            "startblock": start_block,
            "endblock": end_block,
            "sort": "asc",
        }
        for rows in self.iter_pages(params, f"txlist {address}"):
            yield from rows

    def get_transaction(self, tx_hash: str) -> Dict[str, Any]:
        """Full transaction object, including EIP-1559 fee fields"""
        result = self._request(
            {"module": "proxy", "action": "eth_getTransactionByHash", "txhash": tx_hash},
            f"eth_getTransactionByHash {tx_hash}",
        )
        if not isinstance(result, dict):
            raise ExplorerError(f"Transaction {tx_hash} not found", page=tx_hash)
        return result

    # ==================== Recording ====================

    def save_recording(self, path: Union[str, Path]) -> Path:
        """Write recorded responses in the RecordedSession format"""
        if self.recording is None:
            raise ValueError("Client was not created with record=True")
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps({"entries": self.recording}, indent=2, sort_keys=True))
        self.logger.info("Explorer recording saved", path=str(path), entries=len(self.recording))
        return path
