"""
Main Orchestrator / Dispatcher

Command-line entry point of the toolkit. Its job is to:
1. Read the subcommand (simulate, ingest, analyze, game) and the config file
2. Merge file values with flags into one RunConfig
3. Run the matching pipeline
4. Log failures and write the artifacts with their reproducibility manifest
"""

import argparse
import sys
import time
from dataclasses import asdict, dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Optional, Sequence

import structlog
from dotenv import load_dotenv

from src.config import RunConfig, build_run_config, load_config_file

# Load environment variables
load_dotenv()

logger = structlog.get_logger(__name__)


class CommandType(Enum):
    """Supported command types"""
    SIMULATE = "simulate"
    INGEST = "ingest"
    ANALYZE = "analyze"
    GAME = "game"


@dataclass
class ExecutionContext:
    """Execution context for a command"""
    command: CommandType
    config: RunConfig

    @property
    def out(self) -> Path:
        return Path(self.config.out)

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary"""
        return {"command": self.command.value, "config": self.config.hashable()}


@dataclass
class ExecutionResult:
    """Result of command execution"""
    success: bool
    command: str
    output: Dict[str, Any]
    error: Optional[str] = None
    duration_seconds: float = 0

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary"""
        return asdict(self)


class Orchestrator:
    """
    Coordinates simulation, ingestion, analysis and the privacy game.
    Handles command routing and artifact output.
    """

    def __init__(self):
        """Initialize the orchestrator"""
        self.logger = structlog.get_logger(__name__)

    def _manifest(self, context: ExecutionContext) -> Dict[str, Any]:
        from src.utils.artifacts import build_manifest

        return build_manifest(context.config.hashable(), context.config.seed)

    def _failure(self, command: str, error: Exception, start_time: float) -> ExecutionResult:
        self.logger.error(f"{command.capitalize()} command failed", error=str(error), exc_info=True)
        return ExecutionResult(
            success=False,
            command=command,
            output={},
            error=str(error),
            duration_seconds=time.monotonic() - start_time,
        )

    # ==================== Command Handlers ====================

    def handle_simulate_command(self, context: ExecutionContext) -> ExecutionResult:
        """
        Handle 'simulate': write a synthetic ledger and its ground truth.

        Args:
            context: Execution context

        Returns:
            ExecutionResult
        """
        start_time = time.monotonic()
        config = context.config
        self.logger.info("Handling SIMULATE command", seed=config.simulation.seed,
                         entities=config.simulation.num_entities, payments=config.simulation.num_payments)
        try:
            from src.ledger.loader import dump_ledger
            from src.simulation.simulator import simulate
            from src.utils.artifacts import write_json

            ledger, ground_truth = simulate(config.simulation)
            manifest = self._manifest(context)
            ledger_path = dump_ledger(ledger, context.out / "ledger.ndjson",
                                      manifest={**manifest, "group": ledger.group_name, "chain": str(ledger.chain)})
            truth_path = write_json(context.out / "ground_truth.json", ground_truth.to_dict(), manifest)

            return ExecutionResult(
                success=True,
                command="simulate",
                output={
                    "ledger": str(ledger_path),
                    "ground_truth": str(truth_path),
                    "sends": len(ledger.sends),
                    "withdrawals": len(ledger.withdrawals),
                },
                duration_seconds=time.monotonic() - start_time,
            )
        except Exception as e:
            return self._failure("simulate", e, start_time)

    def handle_ingest_command(self, context: ExecutionContext) -> ExecutionResult:
        """
        Handle 'ingest': normalize explorer data or a raw export into a ledger.

        Network mode honors the configured rate limit; --replay consumes a
        recorded session; --raw-export reads an NDJSON export.
        """
        start_time = time.monotonic()
        config = context.config
        self.logger.info("Handling INGEST command", chain=config.chain)
        try:
            from src.ledger.explorer import fetch_from_explorer
            from src.ledger.loader import dump_ledger, load_ledger
            from src.utils.artifacts import write_json
            from src.utils.explorer_client import EtherscanClient, RecordedSession

            settings = config.explorer
            client = None
            if config.raw_export is not None:
                source = config.raw_export
                mode = "raw_export"
            else:
                session = RecordedSession.from_file(config.replay) if config.replay is not None else None
                client = EtherscanClient(
                    settings.endpoint,
                    settings.api_key,
                    rate_limit_rps=settings.rate_limit_rps,
                    page_size=settings.page_size,
                    max_retries=settings.max_retries,
                    backoff_seconds=settings.backoff_seconds,
                    session=session,
                    record=config.record is not None,
                )
                source = list(fetch_from_explorer(
                    settings.endpoint,
                    settings.api_key,
                    settings.registry_address,
                    settings.umbra_address,
                    settings.start_block,
                    settings.end_block,
                    client=client,
                ))
                mode = "replay" if session is not None else "network"

            ledger = load_ledger(source, chain=config.chain, group_name=config.group)
            if client is not None and config.record is not None:
                client.save_recording(config.record)

            manifest = self._manifest(context)
            ledger_path = dump_ledger(ledger, context.out / "ledger.ndjson",
                                      manifest={**manifest, "group": ledger.group_name, "chain": str(ledger.chain)})
            summary = {
                "mode": mode,
                "registrations": len(ledger.registrations),
                "sends": len(ledger.sends),
                "withdrawals": len(ledger.withdrawals),
                "warnings": len(ledger.diagnostics),
                "diagnostics": [d.to_dict() for d in ledger.diagnostics],
            }
            write_json(context.out / "ingest_summary.json", summary, manifest)
            return ExecutionResult(
                success=True,
                command="ingest",
                output={"ledger": str(ledger_path), **{k: v for k, v in summary.items() if k != "diagnostics"}},
                duration_seconds=time.monotonic() - start_time,
            )
        except Exception as e:
            return self._failure("ingest", e, start_time)

    def handle_analyze_command(self, context: ExecutionContext) -> ExecutionResult:
        """
        Handle 'analyze': run H1-H4 and write findings, clusters and reports.

        Precision and recall are added when ground truth is given or sits
        next to the ledger as ground_truth.json.
        """
        start_time = time.monotonic()
        config = context.config
        try:
            import json

            from src.analysis.heuristics import run_all
            from src.analysis.metrics import (
                activity_heatmap,
                cumulative_usage,
                linkage_stats,
                precision_recall,
                withdrawer_distribution,
            )
            from src.ledger.loader import load_ledger, read_manifest
            from src.ledger.model import GroundTruth
            from src.utils.artifacts import write_csv, write_json

            if config.ledger is None:
                raise ValueError("analyze needs --ledger")
            stored = read_manifest(config.ledger)
            ledger = load_ledger(
                config.ledger,
                chain=stored.get("chain", config.chain),
                group_name=stored.get("group", config.group),
            )
            self.logger.info("Handling ANALYZE command", ledger=str(config.ledger), sends=len(ledger.sends))

            report = run_all(ledger, config.heuristics)
            stats = linkage_stats(report, ledger)
            distribution = withdrawer_distribution(ledger)
            manifest = self._manifest(context)

            write_json(context.out / "findings.json", report.findings_dict(), manifest)
            write_json(context.out / "clusters.json", report.clusters_dict(), manifest)
            write_json(context.out / "report.json", {
                "anonymity": stats.to_dict(),
                "withdrawers": {
                    "histogram": {str(k): v for k, v in distribution.to_rows()},
                    "max_withdrawals": distribution.max_withdrawals,
                    "max_address": distribution.max_address,
                },
                "diagnostics": len(ledger.diagnostics),
            }, manifest)
            write_csv(context.out / "report.csv", ["metric", "value"], sorted(stats.to_dict().items()), manifest)
            write_csv(context.out / "withdrawers.csv", ["withdrawals", "addresses"], distribution.to_rows(), manifest)
            usage = cumulative_usage(ledger)
            write_csv(
                context.out / "cumulative_usage.csv",
                ["day", "senders", "registrants", "payments"],
                [[row["day"], row["senders"], row["registrants"], row["payments"]] for row in usage],
                manifest,
            )

            heatmaps = []
            for address in config.heatmap_addresses:
                heatmap = activity_heatmap(ledger, address)
                path = write_csv(
                    context.out / f"heatmap_{address}.csv",
                    ["weekday", *(str(hour) for hour in range(24))],
                    heatmap.to_rows(),
                    manifest,
                )
                heatmaps.append(str(path))

            output = {"total_linked": stats.total_linked, "pct_linked": stats.pct_linked, "heatmaps": heatmaps}
            truth_path = config.ground_truth or config.ledger.parent / "ground_truth.json"
            if truth_path.exists():
                ground_truth = GroundTruth.from_dict(json.loads(truth_path.read_text()))
                scores = precision_recall(report, ground_truth)
                write_json(context.out / "precision_recall.json", {"scores": scores}, manifest)
                output["precision_recall"] = scores
            elif config.ground_truth is not None:
                raise FileNotFoundError(f"Ground truth not found: {truth_path}")

            return ExecutionResult(
                success=True,
                command="analyze",
                output=output,
                duration_seconds=time.monotonic() - start_time,
            )
        except Exception as e:
            return self._failure("analyze", e, start_time)

    def handle_game_command(self, context: ExecutionContext) -> ExecutionResult:
        """Handle 'game': estimate a strategy's recipient unlinkability advantage"""
        start_time = time.monotonic()
        config = context.config
        self.logger.info("Handling GAME command", strategy=config.strategy, trials=config.game.trials)
        try:
            from src.game.privacy_game import run_ru_game
            from src.game.strategies import get_strategy
            from src.utils.artifacts import write_json

            strategy = get_strategy(config.strategy)
            result = run_ru_game(strategy, config.game)
            write_json(context.out / "game.json", result.to_dict(), self._manifest(context))
            return ExecutionResult(
                success=True,
                command="game",
                output=result.to_dict(),
                duration_seconds=time.monotonic() - start_time,
            )
        except Exception as e:
            return self._failure("game", e, start_time)

    # ==================== Main Execution ====================

    def execute(self, context: ExecutionContext) -> ExecutionResult:
        """
        Execute a command with the given context.

        Args:
            context: Execution context

        Returns:
            ExecutionResult
        """
        self.logger.info("Starting execution", command=context.command.value)
        handlers = {
            CommandType.SIMULATE: self.handle_simulate_command,
            CommandType.INGEST: self.handle_ingest_command,
            CommandType.ANALYZE: self.handle_analyze_command,
            CommandType.GAME: self.handle_game_command,
        }
        return handlers[context.command](context)


def build_parser() -> argparse.ArgumentParser:
    # global flags are accepted before or after the subcommand
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", type=Path, help="JSON config file")
    common.add_argument("--seed", type=int, help="Random seed")
    common.add_argument("--out", type=Path, help="Output directory")
    common.add_argument("--chain", help="Chain name (mainnet, polygon, arbitrum, optimism, or custom)")
    common.add_argument("--group", choices=["production", "toy101"], help="Group instantiation")
    common.add_argument("--verbose", action="store_true", help="JSON logging")

    parser = argparse.ArgumentParser(
        description="Umbra stealth address anonymity toolkit",
        parents=[common],
    )
    commands = parser.add_subparsers(dest="command", required=True)

    simulate = commands.add_parser("simulate", parents=[common], help="Simulate a labeled ledger")
    simulate.add_argument("--entities", type=int, help="Number of entities")
    simulate.add_argument("--payments", type=int, help="Number of payments")

    ingest = commands.add_parser("ingest", parents=[common], help="Normalize explorer data into a ledger")
    ingest.add_argument("--endpoint", help="Explorer API URL")
    ingest.add_argument("--replay", type=Path, help="Recorded explorer session to replay")
    ingest.add_argument("--record", type=Path, help="Save every explorer response here")
    ingest.add_argument("--raw-export", type=Path, help="NDJSON export to normalize")
    ingest.add_argument("--registry", help="Stealth key registry address")
    ingest.add_argument("--umbra", help="Umbra contract address")
    ingest.add_argument("--start-block", type=int, help="First block")
    ingest.add_argument("--end-block", type=int, help="Last block")

    analyze = commands.add_parser("analyze", parents=[common], help="Run the heuristics and metrics")
    analyze.add_argument("--ledger", type=Path, help="Ledger NDJSON file")
    analyze.add_argument("--ground-truth", type=Path, help="Ground truth JSON")
    analyze.add_argument("--fee-threshold", type=int, help="H4 fee uniqueness threshold")
    analyze.add_argument("--heatmap-address", action="append", help="Write a weekday/hour activity heatmap for this address (repeatable)")

    game = commands.add_parser("game", parents=[common], help="Play the recipient unlinkability game")
    game.add_argument("--strategy", help="Adversary strategy")
    game.add_argument("--trials", type=int, help="Number of trials")
    game.add_argument("--profile", help="Behavior profile of the target recipients")
    return parser


def run(argv: Optional[Sequence[str]] = None) -> int:
    """
    Parse arguments and run one command.

    Returns:
        Process exit code: 0 on success, 1 on failure, 2 on usage errors
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    # Setup logging
    if getattr(args, "verbose", False):
        structlog.configure(
            wrapper_class=structlog.BoundLogger,
            processors=[
                structlog.processors.add_log_level,
                structlog.processors.JSONRenderer()
            ]
        )

    try:
        file_data = load_config_file(args.config) if getattr(args, "config", None) else None
        flags = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
        config = build_run_config(args.command, file_data, **flags)
    except Exception as e:
        logger.error("Invalid configuration", error=str(e))
        print(f"error: {e}", file=sys.stderr)
        return 2
    if config.out is None:
        print("error: --out is required", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 2

    context = ExecutionContext(command=CommandType(args.command), config=config)
    result = Orchestrator().execute(context)
    if not result.success:
        print(f"error: {result.error}", file=sys.stderr)
    return 0 if result.success else 1


def main():
    """Main entry point"""
    sys.exit(run())


if __name__ == "__main__":
    main()
