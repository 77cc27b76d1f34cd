"""
Simulation Module

Behavior profiles and the ground-truth-labeled ledger simulator.
"""

from .profiles import (
    BehaviorProfile,
    Burstiness,
    FeeHabit,
    SimConfig,
    collector_profile,
    countermeasure_profile,
    default_profile,
    manual_fee_profile,
    preset_profiles,
    registrant_reuse_profile,
)
from .simulator import Entity, Payment, Simulator, simulate

__all__ = [
    "BehaviorProfile",
    "Burstiness",
    "Entity",
    "FeeHabit",
    "Payment",
    "SimConfig",
    "Simulator",
    "collector_profile",
    "countermeasure_profile",
    "default_profile",
    "manual_fee_profile",
    "preset_profiles",
    "registrant_reuse_profile",
    "simulate",
]
