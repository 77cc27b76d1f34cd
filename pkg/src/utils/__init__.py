"""
Utils Module

Explorer API wrapper and artifact writers.
"""

from .artifacts import build_manifest, config_hash, write_csv, write_json
from .explorer_client import EtherscanClient, ExplorerError, RecordedSession

__all__ = [
    "EtherscanClient",
    "ExplorerError",
    "RecordedSession",
    "build_manifest",
    "config_hash",
    "write_csv",
    "write_json",
]
