"""
Behavior profiles and simulation configuration

Each simulated entity follows one BehaviorProfile that decides how it
withdraws its stealth payments, and therefore which linking heuristics its
payments expose.
"""

from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

GWEI = 10**9
ETHER = 10**18


class FeeHabit(BaseModel):
    """How an entity sets maxPriorityFeePerGas on native withdrawals"""
    model_config = ConfigDict(frozen=True)

    mode: Literal["auto", "manual"] = "auto"
    value: Optional[int] = Field(default=None, gt=0)

    @model_validator(mode="after")
    def _auto_has_no_value(self) -> "FeeHabit":
        if self.mode == "auto" and self.value is not None:
            raise ValueError("Automatic fee habit takes no fixed value")
        return self


class Burstiness(BaseModel):
    """Activity concentrated in a window; payments_in_window weights sender choice"""
    model_config = ConfigDict(frozen=True)

    active_window_days: int = Field(default=30, ge=1)
    payments_in_window: int = Field(default=10, ge=1)


class BehaviorProfile(BaseModel):
    """
    Withdrawal and payment habits of one kind of user.

    collector_degree None means a fresh collection address for every
    withdrawal. A manual fee habit without a value gets an entity-exclusive
    value from the simulator.
    """
    model_config = ConfigDict(frozen=True)

    p_withdraw: float = Field(default=1.0, ge=0.0, le=1.0)
    p_withdraw_to_registrant: float = Field(default=0.0, ge=0.0, le=1.0)
    p_self_test_payment: float = Field(default=0.0, ge=0.0, le=1.0)
    collector_degree: Optional[int] = Field(default=1, ge=1)
    p_partial_withdraw: float = Field(default=0.0, ge=0.0, le=1.0)
    fee_habit: FeeHabit = FeeHabit()
    burstiness: Burstiness = Burstiness()


def default_profile() -> BehaviorProfile:
    """A mixed user that exposes every heuristic now and then"""
    return BehaviorProfile(
        p_withdraw=0.9,
        p_withdraw_to_registrant=0.4,
        p_self_test_payment=0.05,
        collector_degree=3,
        p_partial_withdraw=0.1,
    )


def collector_profile() -> BehaviorProfile:
    """Withdraws every payment to one reused address"""
    return BehaviorProfile(
        p_withdraw_to_registrant=0.0,
        p_self_test_payment=0.0,
        collector_degree=1,
        p_partial_withdraw=0.0,
    )


def registrant_reuse_profile() -> BehaviorProfile:
    """Withdraws everything back to the address that registered the keys"""
    return BehaviorProfile(
        p_withdraw_to_registrant=1.0,
        p_self_test_payment=0.0,
        collector_degree=1,
        p_partial_withdraw=0.0,
    )


def manual_fee_profile() -> BehaviorProfile:
    """Fresh addresses, but a hand-set priority fee on every withdrawal"""
    return BehaviorProfile(
        collector_degree=None,
        fee_habit=FeeHabit(mode="manual"),
    )


def countermeasure_profile() -> BehaviorProfile:
    """Never reuses an address and never withdraws to the registrant"""
    return BehaviorProfile(
        p_withdraw_to_registrant=0.0,
        p_self_test_payment=0.0,
        collector_degree=None,
        p_partial_withdraw=0.0,
        fee_habit=FeeHabit(mode="auto"),
    )


PRESET_PROFILES = {
    "default": default_profile,
    "collector": collector_profile,
    "registrant_reuse": registrant_reuse_profile,
    "manual_fee": manual_fee_profile,
    "countermeasure": countermeasure_profile,
}


def preset_profiles() -> Dict[str, BehaviorProfile]:
    return {name: factory() for name, factory in PRESET_PROFILES.items()}


class SimConfig(BaseModel):
    """Everything a simulation run depends on; the seed fixes the output"""
    model_config = ConfigDict(frozen=True)

    num_entities: int = Field(default=20, ge=2)
    num_payments: int = Field(default=100, ge=1)
    seed: int = Field(default=0, ge=0)
    chain: str = "mainnet"
    group: Literal["production", "toy101"] = "production"
    asset_mix: float = Field(default=0.3, ge=0.0, le=1.0)
    token_symbols: List[str] = Field(default_factory=lambda: ["USDC", "DAI"], min_length=1)
    profiles: Dict[str, BehaviorProfile] = Field(default_factory=preset_profiles)
    profile_weights: Dict[str, float] = Field(default_factory=lambda: {"default": 1.0})
    profile_assignment: Optional[List[str]] = None
    num_relayers: int = Field(default=3, ge=1)
    amount_min: int = Field(default=10**16, ge=10**16)
    amount_max: int = Field(default=10 * ETHER, ge=10**16)
    charge_gas: bool = False
    auto_round_share: float = Field(default=0.9, ge=0.0, le=1.0)
    start_timestamp: int = Field(default=1_640_995_200, ge=0)
    horizon_days: int = Field(default=365, ge=1)
    block_time: int = Field(default=12, ge=1)
    genesis_block: int = Field(default=14_000_000, ge=0)

    @model_validator(mode="after")
    def _consistent(self) -> "SimConfig":
        if self.amount_max < self.amount_min:
            raise ValueError("amount_max must not be below amount_min")
        unknown = [name for name in self.profile_weights if name not in self.profiles]
        if unknown:
            raise ValueError(f"Weights reference unknown profiles: {unknown}")
        if any(weight < 0 for weight in self.profile_weights.values()):
            raise ValueError("Profile weights must not be negative")
        if sum(self.profile_weights.values()) <= 0:
            raise ValueError("Profile weights must not all be zero")
        if self.profile_assignment is not None:
            if len(self.profile_assignment) != self.num_entities:
                raise ValueError("profile_assignment needs one profile per entity")
            unknown = [name for name in self.profile_assignment if name not in self.profiles]
            if unknown:
                raise ValueError(f"Assignment references unknown profiles: {unknown}")
        for name, profile in self.profiles.items():
            if profile.burstiness.active_window_days > self.horizon_days:
                raise ValueError(f"Profile {name!r} is active longer than the horizon")
        return self
