"""
Prime-order group abstraction

Two instantiations share one interface:
- ProductionGroup: secp256k1 (the Ethereum curve), backed by libsecp256k1
  through coincurve, hashing with keccak-256.
- ToyGroup: integers mod 101 under addition with G = 1 and H the identity
  map, small enough to check every stealth computation by hand.

Elements are immutable canonical byte encodings, so equality of elements is
equality of encodings. Scalars are plain ints reduced modulo the group order.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass
from functools import lru_cache
from typing import Tuple

import numpy as np
import structlog
from coincurve import PublicKey
from eth_utils import keccak

logger = structlog.get_logger(__name__)

Scalar = int
ChainAddress = str

SECP256K1_ORDER = 0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEBAAEDCE6AF48A03BBFD25E8CD0364141
TOY_ORDER = 101


class DecodeError(ValueError):
    """Raised when bytes or text do not encode an element of the group"""


@dataclass(frozen=True)
class GroupElement:
    """Canonical encoding of a group element"""
    encoding: bytes

    def hex(self) -> str:
        return "0x" + self.encoding.hex()


class Group(ABC):
    """Prime-order cyclic group written additively"""

    name: str
    order: int
    generator: GroupElement
    identity: GroupElement

    def scalar(self, value: int) -> Scalar:
        """Reduce an integer into [0, order)"""
        return value % self.order

    @abstractmethod
    def decode(self, data: bytes) -> GroupElement:
        """Validate raw bytes and return the canonical element"""

    @abstractmethod
    def scalar_mul(self, k: Scalar, P: GroupElement) -> GroupElement:
        """Return k·P"""

    @abstractmethod
    def add(self, P: GroupElement, Q: GroupElement) -> GroupElement:
        """Return P + Q"""

    @abstractmethod
    def neg(self, P: GroupElement) -> GroupElement:
        """Return -P"""

    @abstractmethod
    def hash_to_scalar(self, P: GroupElement) -> Scalar:
        """Deterministically map an element to a scalar"""

    @abstractmethod
    def derive_address(self, pk: GroupElement) -> ChainAddress:
        """Chain address controlled by the holder of pk's secret"""

    @abstractmethod
    def encode_text(self, P: GroupElement) -> str:
        """Text form used by the ledger record format"""

    @abstractmethod
    def decode_text(self, text: str) -> GroupElement:
        """Inverse of encode_text"""

    def base_mul(self, k: Scalar) -> GroupElement:
        """Return k·G"""
        return self.scalar_mul(k, self.generator)

    def random_scalar(self, rng: np.random.Generator) -> Scalar:
        """Sample a uniform nonzero scalar by rejection"""
        width = (self.order.bit_length() + 7) // 8
        while True:
            value = int.from_bytes(rng.bytes(width), "big")
            if 0 < value < self.order:
                return value

    def keygen(self, rng: np.random.Generator) -> Tuple[Scalar, GroupElement]:
        """
        Sample a keypair.

        Args:
            rng: Seeded numpy Generator

        Returns:
            (sk, pk) with sk nonzero and pk = sk·G
        """
        sk = self.random_scalar(rng)
        return sk, self.base_mul(sk)


class ProductionGroup(Group):
    """secp256k1 via coincurve"""

    name = "production"
    order = SECP256K1_ORDER

    def __init__(self):
        self.identity = GroupElement(b"\x00")
        self.generator = GroupElement(
            PublicKey.from_valid_secret((1).to_bytes(32, "big")).format(compressed=True)
        )

    def _point(self, P: GroupElement) -> PublicKey:
        try:
            return PublicKey(P.encoding)
        except (ValueError, TypeError) as e:
            raise DecodeError(f"Invalid secp256k1 point encoding: {P.encoding.hex()}") from e

    def decode(self, data: bytes) -> GroupElement:
        if data == self.identity.encoding:
            return self.identity
        if len(data) not in (33, 65):
            raise DecodeError(f"Unexpected point length {len(data)}")
        return GroupElement(self._point(GroupElement(data)).format(compressed=True))

    def scalar_mul(self, k: Scalar, P: GroupElement) -> GroupElement:
        k = self.scalar(k)
        if P == self.identity:
            return self.identity
        point = self._point(P)
        if k == 0:
            return self.identity
        if P == self.generator:
            return GroupElement(PublicKey.from_valid_secret(k.to_bytes(32, "big")).format(compressed=True))
        return GroupElement(point.multiply(k.to_bytes(32, "big")).format(compressed=True))

    def add(self, P: GroupElement, Q: GroupElement) -> GroupElement:
        if P == self.identity:
            return Q if Q == self.identity else self.decode(Q.encoding)
        if Q == self.identity:
            return self.decode(P.encoding)
        p, q = self._point(P), self._point(Q)
        try:
            return GroupElement(PublicKey.combine_keys([p, q]).format(compressed=True))
        except ValueError:
            # libsecp256k1 refuses to return the point at infinity
            return self.identity

    def neg(self, P: GroupElement) -> GroupElement:
        if P == self.identity:
            return P
        P = self.decode(P.encoding)
        prefix = b"\x03" if P.encoding[0] == 2 else b"\x02"
        return GroupElement(prefix + P.encoding[1:])

    def hash_to_scalar(self, P: GroupElement) -> Scalar:
        if P != self.identity:
            self._point(P)
        return int.from_bytes(keccak(P.encoding), "big") % self.order

    def derive_address(self, pk: GroupElement) -> ChainAddress:
        if pk == self.identity:
            return "0x" + keccak(pk.encoding)[-20:].hex()
        uncompressed = self._point(pk).format(compressed=False)
        return "0x" + keccak(uncompressed[1:])[-20:].hex()

    def encode_text(self, P: GroupElement) -> str:
        return P.hex()

    def decode_text(self, text: str) -> GroupElement:
        body = text[2:] if text.lower().startswith("0x") else text
        try:
            data = bytes.fromhex(body)
        except ValueError as e:
            raise DecodeError(f"Not a hex point encoding: {text!r}") from e
        if data == self.identity.encoding:
            return self.identity
        if len(data) != 33 or data[0] not in (2, 3):
            raise DecodeError(f"Expected 33-byte compressed point, got {text!r}")
        return GroupElement(data)


class ToyGroup(Group):
    """Integers mod 101 under addition; G = 1 and H(P) = P"""

    name = "toy101"
    order = TOY_ORDER

    def __init__(self):
        self.identity = self.element(0)
        self.generator = self.element(1)

    def element(self, value: int) -> GroupElement:
        return GroupElement((value % self.order).to_bytes(1, "big"))

    def to_int(self, P: GroupElement) -> int:
        return self.decode(P.encoding).encoding[0]

    def decode(self, data: bytes) -> GroupElement:
        if len(data) != 1 or data[0] >= self.order:
            raise DecodeError(f"Not an element of Z_{self.order}: {data.hex()}")
        return GroupElement(data)

    def scalar_mul(self, k: Scalar, P: GroupElement) -> GroupElement:
        return self.element(self.scalar(k) * self.to_int(P))

    def add(self, P: GroupElement, Q: GroupElement) -> GroupElement:
        return self.element(self.to_int(P) + self.to_int(Q))

    def neg(self, P: GroupElement) -> GroupElement:
        return self.element(-self.to_int(P))

    def hash_to_scalar(self, P: GroupElement) -> Scalar:
        return self.to_int(P)

    def derive_address(self, pk: GroupElement) -> ChainAddress:
        # test shortcut: the address is the element's canonical integer
        return str(self.to_int(pk))

    def encode_text(self, P: GroupElement) -> str:
        return str(self.to_int(P))

    def decode_text(self, text: str) -> GroupElement:
        try:
            value = int(text)
        except (TypeError, ValueError) as e:
            raise DecodeError(f"Not a decimal toy element: {text!r}") from e
        if not 0 <= value < self.order:
            raise DecodeError(f"Toy element out of range: {value}")
        return self.element(value)


_GROUPS = {
    ProductionGroup.name: ProductionGroup,
    ToyGroup.name: ToyGroup,
}


@lru_cache(maxsize=None)
def get_group(name: str = "production") -> Group:
    """
    Look up a group by its configuration name.

    Args:
        name: "production" or "toy101"

    Returns:
        Shared group instance
    """
    try:
        group = _GROUPS[name]()
    except KeyError:
        raise ValueError(f"Unknown group {name!r}; expected one of {sorted(_GROUPS)}") from None
    logger.debug("Group selected", group=name)
    return group
