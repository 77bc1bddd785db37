"""Scripted human-like traders for hybrid-market experiments.

Each scripted trader submits at most one single-share buy per iteration,
arriving with probability ``aggressiveness / 100`` (orders per hundred
iterations).  A value trader buys whichever side is priced below its own
prior by at least its margin; a momentum trader follows the direction of
the last observed price move.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .market import AssetSide


class Strategy(Enum):
    VALUE_TRADER = "ValueTrader"
    MOMENTUM = "Momentum"


@dataclass
class ScriptedTrader:
    trader_id: str
    prior_probability: float
    aggressiveness: float  # expected orders per 100 iterations
    strategy: Strategy
    margin: float = 0.05

    def __post_init__(self):
        if not 0.0 < self.prior_probability < 1.0:
            raise ValueError("prior_probability must lie strictly inside (0,1)")
        if not 0.0 <= self.aggressiveness <= 100.0:
            raise ValueError("aggressiveness must lie in [0,100]")
        if not 0.0 <= self.margin < 0.5:
            raise ValueError("margin must lie in [0,0.5)")

    @property
    def arrival_probability(self) -> float:
        return self.aggressiveness / 100.0

    def decide_side(self, price_yes: float, previous_price_yes: float | None) -> AssetSide | None:
        """Which side to buy at the observed price, or None to sit out."""
        if self.strategy is Strategy.VALUE_TRADER:
            if price_yes < self.prior_probability - self.margin:
                return AssetSide.WILL_REPLICATE
            if price_yes > self.prior_probability + self.margin:
                return AssetSide.WILL_NOT_REPLICATE
            return None
        if previous_price_yes is None:
            return None
        if price_yes > previous_price_yes:
            return AssetSide.WILL_REPLICATE
        if price_yes < previous_price_yes:
            return AssetSide.WILL_NOT_REPLICATE
        return None
