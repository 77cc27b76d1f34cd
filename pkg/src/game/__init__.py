"""
Game Module

Recipient unlinkability game and adversary strategies.
"""

from .privacy_game import GameConfig, GameResult, play_trial, run_ru_game
from .strategies import (
    STRATEGIES,
    AdversaryStrategy,
    Transcript,
    available_strategies,
    get_strategy,
)

__all__ = [
    "STRATEGIES",
    "AdversaryStrategy",
    "GameConfig",
    "GameResult",
    "Transcript",
    "available_strategies",
    "get_strategy",
    "play_trial",
    "run_ru_game",
]
