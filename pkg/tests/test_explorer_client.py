"""
Tests for the Etherscan client: paging, retries, rate limits and replay
"""

import itertools
import json
import os
import shutil
import tempfile
from pathlib import Path
from unittest.mock import MagicMock

import pytest
import requests

from src.utils.explorer_client import EtherscanClient, ExplorerError, RecordedSession

ADDRESS = "0x" + "ab" * 20


def _response(body=None, error=None, bad_json=False):
    response = MagicMock()
    if error is not None:
        response.raise_for_status.side_effect = error
    if bad_json:
        response.json.side_effect = ValueError("Expecting value")
    else:
        response.json.return_value = body
    return response


def _ok(rows):
    return _response({"status": "1", "message": "OK", "result": rows})


class TestEtherscanClient:
    """Test suite for EtherscanClient"""

    def setup_method(self):
        """Setup test fixtures"""
        self.session = MagicMock()
        self.sleep = MagicMock()
        self.temp_dir = tempfile.mkdtemp()

    def teardown_method(self):
        """Cleanup after tests"""
        if os.path.exists(self.temp_dir):
            shutil.rmtree(self.temp_dir)

    def _client(self, **kwargs):
        kwargs.setdefault("page_size", 2)
        kwargs.setdefault("rate_limit_rps", 1000.0)
        kwargs.setdefault("clock", itertools.count(0, 60).__next__)
        return EtherscanClient(
            "https://explorer.test/api",
            api_key="KEY",
            session=self.session,
            sleep=self.sleep,
            **kwargs,
        )

    def test_two_pages(self):
        """Test a full page is followed by the next one"""
        self.session.get.side_effect = [_ok([{"n": 1}, {"n": 2}]), _ok([{"n": 3}])]

        rows = list(self._client().txlist(ADDRESS))

        assert [r["n"] for r in rows] == [1, 2, 3]
        pages = [call.kwargs["params"]["page"] for call in self.session.get.call_args_list]
        assert pages == ["1", "2"]
        assert self.session.get.call_args_list[0].kwargs["params"]["apikey"] == "KEY"

    def test_no_transactions_found(self):
        """Test the explorer's empty-result envelope is an empty list"""
        self.session.get.return_value = _response(
            {"status": "0", "message": "No transactions found", "result": []})

        assert list(self._client().txlist(ADDRESS)) == []

    def test_malformed_body_names_the_page(self):
        """Test a non-JSON body fails with the offending page"""
        self.session.get.side_effect = [_ok([{"n": 1}, {"n": 2}]), _response(bad_json=True)]

        with pytest.raises(ExplorerError) as excinfo:
            list(self._client().txlist(ADDRESS))

        assert excinfo.value.page == f"txlist {ADDRESS} page 2"
        assert "page 2" in str(excinfo.value)

    def test_retries_with_backoff(self):
        """Test transient HTTP failures back off exponentially"""
        self.session.get.side_effect = [
            _response(error=requests.HTTPError("502")),
            _response(error=requests.ConnectionError("reset")),
            _ok([{"n": 1}]),
        ]

        rows = list(self._client(backoff_seconds=1.0).txlist(ADDRESS))

        assert rows == [{"n": 1}]
        assert [call.args[0] for call in self.sleep.call_args_list] == [1.0, 2.0]

    def test_gives_up_after_max_retries(self):
        """Test persistent failures raise ExplorerError"""
        self.session.get.return_value = _response(error=requests.HTTPError("503"))

        with pytest.raises(ExplorerError, match="after 3 attempts"):
            list(self._client(max_retries=2).txlist(ADDRESS))
        assert self.session.get.call_count == 3

    def test_rate_limit_response_waits(self):
        """Test a NOTOK rate-limit answer is retried after a pause"""
        self.session.get.side_effect = [
            _response({"status": "0", "message": "NOTOK", "result": "Max rate limit reached"}),
            _ok([{"n": 1}]),
        ]

        rows = list(self._client(backoff_seconds=1.5).txlist(ADDRESS))

        assert rows == [{"n": 1}]
        self.sleep.assert_called_once_with(1.5)

    def test_explorer_error_message(self):
        """Test other NOTOK answers raise"""
        self.session.get.return_value = _response(
            {"status": "0", "message": "NOTOK", "result": "Invalid API Key"})

        with pytest.raises(ExplorerError, match="Invalid API Key"):
            list(self._client().txlist(ADDRESS))

    def test_requests_per_second_cap(self):
        """Test consecutive requests are spaced by 1 / rate_limit_rps"""
        self.session.get.side_effect = [_ok([{"n": 1}, {"n": 2}]), _ok([])]

        list(self._client(rate_limit_rps=4.0, clock=lambda: 0.0).txlist(ADDRESS))

        self.sleep.assert_called_once_with(0.25)

    def test_get_transaction_proxy(self):
        """Test JSON-RPC proxy answers are unwrapped"""
        self.session.get.return_value = _response(
            {"jsonrpc": "2.0", "id": 1, "result": {"maxPriorityFeePerGas": "0x3b9aca00"}})

        tx = self._client().get_transaction("0xfeed")

        assert tx["maxPriorityFeePerGas"] == "0x3b9aca00"

    def test_missing_transaction(self):
        """Test a null proxy result raises"""
        self.session.get.return_value = _response({"jsonrpc": "2.0", "id": 1, "result": None})

        with pytest.raises(ExplorerError):
            self._client().get_transaction("0xfeed")

    def test_record_then_replay(self):
        """Test a recording replays to the same rows offline"""
        self.session.get.side_effect = [_ok([{"n": 1}, {"n": 2}]), _ok([{"n": 3}])]
        client = self._client(record=True)
        original = list(client.txlist(ADDRESS))
        path = client.save_recording(Path(self.temp_dir) / "recording.json")

        saved = json.loads(path.read_text())
        assert all("apikey" not in entry["params"] for entry in saved["entries"])

        replay = EtherscanClient("https://explorer.test/api", session=RecordedSession.from_file(path),
                                 sleep=self.sleep, page_size=2, rate_limit_rps=1000.0)
        assert list(replay.txlist(ADDRESS)) == original

    def test_save_without_recording(self):
        """Test save_recording needs record=True"""
        with pytest.raises(ValueError):
            self._client().save_recording(Path(self.temp_dir) / "x.json")


class TestRecordedSession:
    """Test suite for RecordedSession matching"""

    def test_most_specific_entry_wins(self):
        """Test the entry matching the most parameters is replayed"""
        session = RecordedSession([
            {"params": {"action": "txlist"}, "response": {"status": "1", "result": ["generic"]}},
            {"params": {"action": "txlist", "page": "2"}, "response": {"status": "1", "result": ["second"]}},
        ])

        assert session.get("u", params={"action": "txlist", "page": 2}).json()["result"] == ["second"]
        assert session.get("u", params={"action": "txlist", "page": 1}).json()["result"] == ["generic"]
        assert session.requests[0] == {"action": "txlist", "page": "2"}

    def test_unrecorded_request(self):
        """Test unmatched requests replay as empty, or 404 when strict"""
        assert RecordedSession([]).get("u", params={"action": "txlist"}).json()["result"] == []

        response = RecordedSession([], strict=True).get("u", params={"action": "txlist"})
        with pytest.raises(requests.HTTPError):
            response.raise_for_status()
