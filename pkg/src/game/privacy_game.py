"""
Recipient unlinkability game runner

Per trial: two target recipients and a sender join a small simulated
population; the sender pays r_c, then pays r_c again (b = 0) or r_{1-c}
(b = 1); recipients withdraw per their profile; the strategy sees the public
transcript and guesses b. Advantage is |Pr[guess = b] - 1/2|.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Any, Dict, Literal, Optional, Tuple

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.stats import binomtest

from src.game.strategies import AdversaryStrategy, Transcript
from src.ledger.model import NATIVE, Asset
from src.simulation.profiles import PRESET_PROFILES, SimConfig, preset_profiles
from src.simulation.simulator import Simulator

logger = structlog.get_logger(__name__)


class GameConfig(BaseModel):
    """Settings of a game run; the seed fixes every trial"""
    model_config = ConfigDict(frozen=True)

    trials: int = Field(default=1000, ge=1)
    profile: str = "collector"
    background_profile: str = "default"
    background_entities: int = Field(default=4, ge=0)
    background_payments: int = Field(default=8, ge=0)
    seed: int = Field(default=0, ge=0)
    group: Literal["production", "toy101"] = "production"
    observe_withdrawals: bool = True
    confidence_level: float = Field(default=0.95, gt=0.0, lt=1.0)
    max_workers: Optional[int] = Field(default=None, ge=1)

    @model_validator(mode="after")
    def _consistent(self) -> "GameConfig":
        for name in (self.profile, self.background_profile):
            if name not in PRESET_PROFILES:
                raise ValueError(f"Unknown profile {name!r}; available: {', '.join(sorted(PRESET_PROFILES))}")
        if self.background_payments and self.background_entities < 2:
            raise ValueError("Background payments need at least two background entities")
        return self


@dataclass
class GameResult:
    """Outcome of a game run"""
    strategy: str
    trials: int
    successes: int
    success_rate: float
    advantage: float
    ci_low: float
    ci_high: float
    challenge_ones: int
    seed: int
    profile: str

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _advantage_interval(low: float, high: float) -> Tuple[float, float]:
    distances = (abs(low - 0.5), abs(high - 0.5))
    if low <= 0.5 <= high:
        return 0.0, max(distances)
    return min(distances), max(distances)


def play_trial(config: GameConfig, trial: int) -> Tuple[Transcript, int]:
    """
    Run the challenger side of one trial.

    Args:
        config: Game settings
        trial: Trial index; randomness derives from (seed, trial)

    Returns:
        (transcript, b)
    """
    rng = np.random.default_rng([config.seed, trial])
    c, b = int(rng.integers(2)), int(rng.integers(2))
    profiles = preset_profiles()
    sim = Simulator(SimConfig(seed=config.seed, group=config.group), rng)

    targets = [sim.add_entity(config.profile, profiles[config.profile]) for _ in range(2)]
    sender = sim.add_entity("countermeasure", profiles["countermeasure"])
    background = [sim.add_entity(config.background_profile, profiles[config.background_profile])
                  for _ in range(config.background_entities)]
    for entity in targets + [sender] + background:
        sim.register(entity)

    def asset() -> Asset:
        if rng.random() < sim.config.asset_mix:
            symbols = sim.config.token_symbols
            return Asset.token(symbols[int(rng.integers(len(symbols)))])
        return NATIVE

    for _ in range(config.background_payments):
        i, j = rng.choice(len(background), size=2, replace=False)
        payer, payee = background[int(i)], background[int(j)]
        payment = sim.send_payment(payer, payee, asset(), sim.draw_amount(), sim.draw_activity_time(payer))
        if rng.random() < payee.profile.p_withdraw:
            sim.withdraw(payment)

    first_time = sim.draw_activity_time(sender)
    challenge = [
        sim.send_payment(sender, targets[c], asset(), sim.draw_amount(), first_time),
        sim.send_payment(sender, targets[c if b == 0 else 1 - c], asset(), sim.draw_amount(), first_time + 600),
    ]
    if config.observe_withdrawals:
        for payment in challenge:
            if rng.random() < payment.recipient.profile.p_withdraw:
                sim.withdraw(payment)

    ledger, _ = sim.build()
    index = {send.tx_id: i for i, send in enumerate(ledger.sends)}
    transcript = Transcript(
        ledger=ledger,
        challenge_indices=(index[challenge[0].tx_id], index[challenge[1].tx_id]),
        targets=(targets[0].registrant, targets[1].registrant),
        sender=sender.sender,
    )
    return transcript, b


def run_ru_game(strategy: AdversaryStrategy, config: GameConfig) -> GameResult:
    """
    Estimate a strategy's advantage in the recipient unlinkability game.

    Args:
        strategy: Adversary under test
        config: Game settings

    Returns:
        GameResult with a Wilson confidence interval on the advantage
    """
    def trial_outcome(trial: int) -> Tuple[bool, int]:
        transcript, b = play_trial(config, trial)
        guess = strategy.guess(transcript, np.random.default_rng([config.seed, trial, 1]))
        return guess == b, b

    trials = range(config.trials)
    if config.max_workers and config.max_workers > 1:
        with ThreadPoolExecutor(max_workers=config.max_workers) as pool:
            outcomes = list(pool.map(trial_outcome, trials))
    else:
        outcomes = [trial_outcome(trial) for trial in trials]

    successes = sum(1 for won, _ in outcomes if won)
    interval = binomtest(successes, config.trials).proportion_ci(
        confidence_level=config.confidence_level, method="wilson"
    )
    ci_low, ci_high = _advantage_interval(interval.low, interval.high)
    success_rate = successes / config.trials
    result = GameResult(
        strategy=strategy.name,
        trials=config.trials,
        successes=successes,
        success_rate=success_rate,
        advantage=abs(success_rate - 0.5),
        ci_low=ci_low,
        ci_high=ci_high,
        challenge_ones=sum(b for _, b in outcomes),
        seed=config.seed,
        profile=config.profile,
    )
    logger.info(
        "Game finished",
        strategy=strategy.name,
        trials=config.trials,
        success_rate=round(success_rate, 4),
        advantage=round(result.advantage, 4),
    )
    return result
