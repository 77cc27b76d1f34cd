"""
Run configuration

A JSON config file may supply any of
{seed, chain, group, out, simulation, heuristics, explorer, game, strategy,
heatmap_addresses};
command-line flags override file values. The top-level seed, chain and group
flow into the simulation and game sections unless those set their own.
"""

import json
import os
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

import structlog
from pydantic import BaseModel, ConfigDict, Field

from src.analysis.heuristics import HeuristicConfig
from src.game.privacy_game import GameConfig
from src.simulation.profiles import SimConfig

logger = structlog.get_logger(__name__)

UMBRA_CONTRACT = "0xfb2dc580eed955b528407b4d36ffafe3da685401"
STEALTH_KEY_REGISTRY = "0x31fe56609c65cd0c510e7125f051d440424d38ba"

PATH_FIELDS = {"out", "ledger", "ground_truth", "replay", "record", "raw_export"}


class ExplorerSettings(BaseModel):
    """Where and how fast to fetch from an Etherscan-compatible explorer"""
    model_config = ConfigDict(frozen=True)

    endpoint: str = "https://api.etherscan.io/api"
    api_key: Optional[str] = None
    rate_limit_rps: float = Field(default=5.0, gt=0)
    page_size: int = Field(default=1000, ge=1)
    max_retries: int = Field(default=3, ge=0)
    backoff_seconds: float = Field(default=1.0, ge=0)
    registry_address: str = STEALTH_KEY_REGISTRY
    umbra_address: str = UMBRA_CONTRACT
    start_block: int = Field(default=0, ge=0)
    end_block: int = Field(default=99999999, ge=0)


class RunConfig(BaseModel):
    """Fully resolved settings of one CLI command"""
    model_config = ConfigDict(frozen=True)

    command: Literal["simulate", "ingest", "analyze", "game"]
    seed: int = Field(default=0, ge=0)
    chain: str = "mainnet"
    group: Literal["production", "toy101"] = "production"
    out: Optional[Path] = None
    ledger: Optional[Path] = None
    ground_truth: Optional[Path] = None
    replay: Optional[Path] = None
    record: Optional[Path] = None
    raw_export: Optional[Path] = None
    strategy: str = "random"
    heatmap_addresses: List[str] = Field(default_factory=list)
    verbose: bool = False
    simulation: SimConfig = SimConfig()
    heuristics: HeuristicConfig = HeuristicConfig()
    explorer: ExplorerSettings = ExplorerSettings()
    game: GameConfig = GameConfig()

    def hashable(self) -> Dict[str, Any]:
        """Settings that determine artifact content; paths and secrets excluded"""
        data = self.model_dump(mode="json", exclude=PATH_FIELDS | {"verbose"})
        data["explorer"].pop("api_key", None)
        return data


def load_config_file(path: Union[str, Path]) -> Dict[str, Any]:
    """
    Read a JSON config file.

    Raises:
        OSError: If the file cannot be read
        ValueError: If it is not a JSON object
    """
    with open(path, "r", encoding="utf-8") as f:
        data = json.load(f)
    if not isinstance(data, dict):
        raise ValueError(f"Config file {path} must contain a JSON object")
    logger.info("Config file loaded", path=str(path), keys=sorted(data))
    return data


def _section(data: Dict[str, Any], key: str) -> Dict[str, Any]:
    section = data.get(key) or {}
    if not isinstance(section, dict):
        raise ValueError(f"Config section {key!r} must be an object")
    return dict(section)


def _apply(section: Dict[str, Any], mapping: Dict[str, str], flags: Dict[str, Any]) -> None:
    for flag, key in mapping.items():
        if flags.get(flag) is not None:
            section[key] = flags[flag]


def build_run_config(command: str, file_data: Optional[Dict[str, Any]] = None, **flags: Any) -> RunConfig:
    """
    Merge config-file values with command-line flags.

    Args:
        command: CLI subcommand
        file_data: Parsed config file, if any
        flags: Parsed flags; None means "not given"

    Returns:
        Validated RunConfig
    """
    data = dict(file_data or {})
    top: Dict[str, Any] = {}
    for key in ("seed", "chain", "group", "out", "strategy"):
        if flags.get(key) is not None:
            top[key] = flags[key]
        elif data.get(key) is not None:
            top[key] = data[key]

    inherited = {key: top[key] for key in ("seed", "chain", "group") if key in top}
    overridden = {key for key in ("seed", "chain", "group") if flags.get(key) is not None}

    simulation = _section(data, "simulation")
    game = _section(data, "game")
    for section, keys in ((simulation, ("seed", "chain", "group")), (game, ("seed", "group"))):
        for key in keys:
            if key in inherited and (key in overridden or key not in section):
                section[key] = inherited[key]
    _apply(simulation, {"entities": "num_entities", "payments": "num_payments"}, flags)
    _apply(game, {"trials": "trials", "profile": "profile"}, flags)

    heuristics = _section(data, "heuristics")
    _apply(heuristics, {"fee_threshold": "fee_uniqueness_threshold"}, flags)

    explorer = _section(data, "explorer")
    _apply(explorer, {
        "endpoint": "endpoint",
        "registry": "registry_address",
        "umbra": "umbra_address",
        "start_block": "start_block",
        "end_block": "end_block",
    }, flags)
    if not explorer.get("api_key") and os.getenv("ETHERSCAN_API_KEY"):
        explorer["api_key"] = os.getenv("ETHERSCAN_API_KEY")

    paths = {key: flags[key] for key in PATH_FIELDS - {"out"} if flags.get(key) is not None}
    heatmap = flags.get("heatmap_address") or data.get("heatmap_addresses") or []
    return RunConfig(
        command=command,
        verbose=bool(flags.get("verbose")),
        heatmap_addresses=[str(address).lower() for address in heatmap],
        simulation=SimConfig(**simulation),
        heuristics=HeuristicConfig(**heuristics),
        explorer=ExplorerSettings(**explorer),
        game=GameConfig(**game),
        **top,
        **paths,
    )
