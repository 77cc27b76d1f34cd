"""
Tests for the prime-order group abstraction
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.crypto.group import (
    SECP256K1_ORDER,
    DecodeError,
    GroupElement,
    get_group,
)

GENERATOR_HEX = "0x0279be667ef9dcbbac55a06295ce870b07029bfcdb2dce28d959f2815b16f81798"

scalars = st.integers(min_value=1, max_value=SECP256K1_ORDER - 1)


class TestToyGroup:
    """Test suite for the Z_101 group"""

    def setup_method(self):
        """Setup test fixtures"""
        self.group = get_group("toy101")

    def test_scalar_mul_is_modular_product(self):
        """Test k·P is k times P mod 101"""
        assert self.group.to_int(self.group.scalar_mul(13, self.group.element(7))) == 91

    def test_add_and_neg(self):
        """Test addition wraps and negation cancels"""
        P = self.group.element(91)
        Q = self.group.element(11)
        assert self.group.to_int(self.group.add(P, Q)) == 1
        assert self.group.add(P, self.group.neg(P)) == self.group.identity

    def test_hash_is_identity_map(self):
        """Test H(P) returns the element's integer"""
        assert self.group.hash_to_scalar(self.group.element(91)) == 91

    def test_text_roundtrip(self):
        """Test decimal text encoding"""
        P = self.group.element(42)
        assert self.group.encode_text(P) == "42"
        assert self.group.decode_text("42") == P

    def test_decode_rejects_out_of_range(self):
        """Test values outside Z_101 are rejected"""
        with pytest.raises(DecodeError):
            self.group.decode(bytes([101]))
        with pytest.raises(DecodeError):
            self.group.decode_text("-1")
        with pytest.raises(DecodeError):
            self.group.decode_text("abc")

    def test_random_scalar_is_nonzero(self):
        """Test sampled scalars stay in [1, 101)"""
        rng = np.random.default_rng(3)
        values = [self.group.random_scalar(rng) for _ in range(500)]
        assert min(values) >= 1
        assert max(values) < 101


class TestProductionGroup:
    """Test suite for secp256k1"""

    def setup_method(self):
        """Setup test fixtures"""
        self.group = get_group("production")

    def test_generator_encoding(self):
        """Test G is the standard compressed generator"""
        assert self.group.generator.hex() == GENERATOR_HEX
        assert self.group.base_mul(1) == self.group.generator

    def test_zero_scalar_gives_identity(self):
        """Test 0·G and k·O are the identity"""
        assert self.group.base_mul(0) == self.group.identity
        assert self.group.base_mul(SECP256K1_ORDER) == self.group.identity
        assert self.group.scalar_mul(5, self.group.identity) == self.group.identity

    def test_point_plus_negation_is_identity(self):
        """Test P + (-P) = O and O is neutral"""
        P = self.group.base_mul(12345)
        assert self.group.add(P, self.group.neg(P)) == self.group.identity
        assert self.group.add(P, self.group.identity) == P
        assert self.group.add(self.group.identity, P) == P

    def test_derive_address_of_key_one(self):
        """Test the Ethereum address of secret key 1"""
        address = self.group.derive_address(self.group.base_mul(1))
        assert address == "0x7e5f4552091a69125d5dfcb7b8c2659029395bdf"

    def test_decode_rejects_invalid_encoding(self):
        """Test malformed point bytes raise DecodeError"""
        with pytest.raises(DecodeError):
            self.group.decode(b"\x05" + bytes(32))
        with pytest.raises(DecodeError):
            self.group.decode(b"\x02" + bytes(10))
        with pytest.raises(DecodeError):
            self.group.scalar_mul(3, GroupElement(b"\x05" + bytes(32)))

    def test_decode_canonicalizes_uncompressed(self):
        """Test a 65-byte encoding decodes to the compressed form"""
        from coincurve import PublicKey

        uncompressed = PublicKey.from_valid_secret((7).to_bytes(32, "big")).format(compressed=False)
        assert self.group.decode(uncompressed) == self.group.base_mul(7)

    def test_neg_of_uncompressed_element(self):
        """Test negating a 65-byte element gives the canonical inverse"""
        from coincurve import PublicKey

        uncompressed = GroupElement(PublicKey.from_valid_secret((7).to_bytes(32, "big")).format(compressed=False))

        negated = self.group.neg(uncompressed)

        assert len(negated.encoding) == 33
        assert negated == self.group.neg(self.group.base_mul(7))
        assert self.group.add(negated, self.group.base_mul(7)) == self.group.identity

    def test_decode_text_requires_compressed(self):
        """Test text decoding accepts only 33-byte compressed points"""
        assert self.group.decode_text(GENERATOR_HEX) == self.group.generator
        with pytest.raises(DecodeError):
            self.group.decode_text("0x04" + "00" * 64)
        with pytest.raises(DecodeError):
            self.group.decode_text("0xzz")

    def test_hash_to_scalar_in_range(self):
        """Test hashes land in [0, order)"""
        value = self.group.hash_to_scalar(self.group.base_mul(99))
        assert 0 <= value < SECP256K1_ORDER

    @settings(max_examples=50, deadline=None)
    @given(a=scalars, b=scalars)
    def test_scalar_mul_distributes(self, a, b):
        """Test (a + b)·G = a·G + b·G"""
        group = get_group("production")
        assert group.base_mul(a + b) == group.add(group.base_mul(a), group.base_mul(b))

    @settings(max_examples=50, deadline=None)
    @given(a=scalars, b=scalars)
    def test_scalar_mul_composes(self, a, b):
        """Test a·(b·G) = (a·b)·G"""
        group = get_group("production")
        assert group.scalar_mul(a, group.base_mul(b)) == group.base_mul(a * b)


class TestGetGroup:
    """Test suite for group lookup"""

    def test_known_names(self):
        """Test both groups resolve and are shared"""
        assert get_group("production") is get_group("production")
        assert get_group("toy101").order == 101

    def test_unknown_name(self):
        """Test an unknown group name is rejected"""
        with pytest.raises(ValueError, match="Unknown group"):
            get_group("ed25519")
