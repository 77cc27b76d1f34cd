"""
Output artifacts

JSON and CSV writers that stamp every file with the reproducibility manifest
(tool version, config hash, seed). No wall-clock time goes into a file, so
reruns with the same configuration are byte-identical.
"""

import csv
import hashlib
import json
from pathlib import Path
from typing import Any, Dict, Iterable, Sequence, Union

import structlog

from src import __version__

logger = structlog.get_logger(__name__)


def config_hash(payload: Dict[str, Any]) -> str:
    """sha-256 of the canonical JSON form of a configuration"""
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canonical.encode()).hexdigest()


def build_manifest(payload: Dict[str, Any], seed: int) -> Dict[str, Any]:
    return {
        "tool_version": __version__,
        "config_hash": config_hash(payload),
        "seed": seed,
    }


def write_json(path: Union[str, Path], payload: Dict[str, Any], manifest: Dict[str, Any]) -> Path:
    """
    Write a JSON artifact with its manifest.

    Args:
        path: Destination file
        payload: Artifact content
        manifest: Reproducibility manifest

    Returns:
        The written path
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps({"manifest": manifest, **payload}, indent=2, sort_keys=True) + "\n")
    logger.info("Artifact written", file=str(path))
    return path


def write_csv(
    path: Union[str, Path],
    header: Sequence[str],
    rows: Iterable[Sequence[Any]],
    manifest: Dict[str, Any],
) -> Path:
    """Write CSV plot data; the manifest goes into leading '#' comment lines"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        for key in sorted(manifest):
            f.write(f"# {key}={manifest[key]}\n")
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    logger.info("Artifact written", file=str(path))
    return path
