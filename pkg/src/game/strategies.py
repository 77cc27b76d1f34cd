"""
Adversary strategies for the recipient unlinkability game

A strategy sees only a Transcript: the public ledger, which two sends are
the challenge payments, the two target recipients' registrant addresses and
the sender's address. It answers 0 for "same recipient" and 1 for
"different recipients".
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Dict, List, Tuple, Type

import numpy as np

from src.analysis.heuristics import h1_registrant_reuse, h3_collector_pattern, run_all
from src.ledger.model import Ledger

SAME, DIFFERENT = 0, 1


@dataclass(frozen=True)
class Transcript:
    """Everything an observer of the chain knows about one game trial"""
    ledger: Ledger
    challenge_indices: Tuple[int, int]
    targets: Tuple[str, str]
    sender: str

    @property
    def challenge_addresses(self) -> Tuple[str, str]:
        first, second = self.challenge_indices
        return self.ledger.sends[first].stealth_address, self.ledger.sends[second].stealth_address


class AdversaryStrategy(ABC):
    """Decision procedure mapping a transcript to a guess bit"""

    name: str = ""

    @abstractmethod
    def guess(self, transcript: Transcript, rng: np.random.Generator) -> int:
        """Return 0 (same recipient) or 1 (different recipients)"""


class RandomStrategy(AdversaryStrategy):
    """Coin flip baseline"""

    name = "random"

    def guess(self, transcript: Transcript, rng: np.random.Generator) -> int:
        return int(rng.integers(2))


class CryptoOnlyStrategy(AdversaryStrategy):
    """Looks only at the two announcements and ignores withdrawals"""

    name = "crypto_only"

    def guess(self, transcript: Transcript, rng: np.random.Generator) -> int:
        first, second = (transcript.ledger.sends[i] for i in transcript.challenge_indices)
        if first.pk_stealth is None or second.pk_stealth is None:
            return int(rng.integers(2))
        same_parity = first.pk_stealth.encoding[:1] == second.pk_stealth.encoding[:1]
        return SAME if same_parity else DIFFERENT


class RegistrantStrategy(AdversaryStrategy):
    """Compares the registrants H1 attributes the challenge payments to"""

    name = "h1_registrant"

    def guess(self, transcript: Transcript, rng: np.random.Generator) -> int:
        identities = {f.stealth_address: f.attributed_identity for f in h1_registrant_reuse(transcript.ledger)}
        first, second = transcript.challenge_addresses
        if first in identities and second in identities:
            return SAME if identities[first] == identities[second] else DIFFERENT
        return int(rng.integers(2))


class CollectorStrategy(AdversaryStrategy):
    """Same H3 cluster means same recipient"""

    name = "h3_collector"

    def guess(self, transcript: Transcript, rng: np.random.Generator) -> int:
        clusters = h3_collector_pattern(transcript.ledger)
        first, second = transcript.challenge_addresses
        if first in clusters and second in clusters and clusters.find(first) == clusters.find(second):
            return SAME
        return DIFFERENT


class CombinedStrategy(AdversaryStrategy):
    """Shared H1/H2 identity or shared H3/H4 cluster means same recipient"""

    name = "combined"

    def guess(self, transcript: Transcript, rng: np.random.Generator) -> int:
        report = run_all(transcript.ledger)
        first, second = transcript.challenge_addresses
        identity_a = report.identities.get(first, {}).get("identity")
        identity_b = report.identities.get(second, {}).get("identity")
        if identity_a is not None and identity_a == identity_b:
            return SAME
        clusters = report.clusters
        if first in clusters and second in clusters and clusters.find(first) == clusters.find(second):
            return SAME
        return DIFFERENT


STRATEGIES: Dict[str, Type[AdversaryStrategy]] = {
    cls.name: cls
    for cls in (RandomStrategy, CryptoOnlyStrategy, RegistrantStrategy, CollectorStrategy, CombinedStrategy)
}


def available_strategies() -> List[str]:
    return sorted(STRATEGIES)


def get_strategy(name: str) -> AdversaryStrategy:
    """
    Instantiate a strategy by name.

    Raises:
        ValueError: Unknown name; the message lists the available strategies
    """
    try:
        return STRATEGIES[name]()
    except KeyError:
        raise ValueError(
            f"Unknown strategy {name!r}; available: {', '.join(available_strategies())}"
        ) from None
