"""ECVRF-EDWARDS25519-SHA512-TAI (RFC 9381) on top of libsodium.

Group operations come from libsodium via PyNaCl; the VRF logic (hash to
curve by try-and-increment, nonce derivation, challenge, proof encoding) is
written out here.  The 64-byte VRF output ``beta`` is truncated to its first
32 bytes and read big-endian as the 256-bit unit random that seeds sortition.
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass
from functools import lru_cache

import nacl.bindings as _sodium
from nacl.exceptions import CryptoError

from .errors import DomainError, KeyMaterialError

SUITE = b"\x03"
ORDER = 2**252 + 27742317777372353535851937790883648493
POINT_BYTES = 32
C_BYTES = 16
PROOF_BYTES = POINT_BYTES + C_BYTES + 32
OUTPUT_BYTES = 32

_HASH_TO_CURVE = b"\x01"
_CHALLENGE = b"\x02"
_PROOF_TO_HASH = b"\x03"
_TRAILER = b"\x00"


@dataclass(frozen=True)
class KeyPair:
    """An Ed25519-style VRF key: a 32-byte seed and the encoded point ``x*B``."""

    secret_key: bytes
    public_key: bytes

    def to_hex(self) -> dict[str, str]:
        return {"secret_key": self.secret_key.hex(), "public_key": self.public_key.hex()}

    @classmethod
    def from_hex(cls, data: dict[str, str]) -> "KeyPair":
        pair = cls(bytes.fromhex(data["secret_key"]), bytes.fromhex(data["public_key"]))
        if public_key_from_secret(pair.secret_key) != pair.public_key:
            raise KeyMaterialError("public key does not match the secret key")
        return pair


@dataclass(frozen=True)
class VrfOutput:
    """``random`` is the 256-bit unit value; ``proof`` is the 80-byte pi string."""

    random: int
    proof: bytes


def hash_message(data: bytes) -> bytes:
    """SHA-256 digest used as the VRF input for a message."""
    return hashlib.sha256(data).digest()


def _scalar(n: int) -> bytes:
    return (n % ORDER).to_bytes(32, "little")


def _expand_secret(secret_key: bytes) -> tuple[int, bytes]:
    if not isinstance(secret_key, (bytes, bytearray)) or len(secret_key) != 32:
        raise KeyMaterialError("secret key must be 32 bytes")
    digest = hashlib.sha512(secret_key).digest()
    head = bytearray(digest[:32])
    head[0] &= 248
    head[31] &= 127
    head[31] |= 64
    return int.from_bytes(head, "little"), digest[32:]


def public_key_from_secret(secret_key: bytes) -> bytes:
    x, _ = _expand_secret(secret_key)
    return _sodium.crypto_scalarmult_ed25519_base_noclamp(_scalar(x))


def keygen(seed: bytes | None = None) -> KeyPair:
    """Derive a key pair from 32 bytes of seed material (fresh entropy if omitted)."""
    if seed is None:
        seed = os.urandom(32)
    if len(seed) != 32:
        raise KeyMaterialError("keygen seed must be 32 bytes")
    seed = bytes(seed)
    return KeyPair(seed, public_key_from_secret(seed))


def _times_cofactor(point: bytes) -> bytes:
    # point addition only checks curve membership, so torsion components survive
    # until the three doublings clear them
    for _ in range(3):
        point = _sodium.crypto_core_ed25519_add(point, point)
    return point


_IDENTITY = (1).to_bytes(32, "little")


@lru_cache(maxsize=1 << 16)
def _hash_to_curve(public_key: bytes, alpha: bytes) -> bytes:
    prefix = SUITE + _HASH_TO_CURVE + public_key + alpha
    for ctr in range(256):
        candidate = hashlib.sha512(prefix + bytes([ctr]) + _TRAILER).digest()[:32]
        try:
            point = _times_cofactor(candidate)
        except (CryptoError, RuntimeError, ValueError):
            continue
        if point != _IDENTITY:
            return point
    raise DomainError("hash to curve failed for 256 counters")


def _challenge(*points: bytes) -> int:
    digest = hashlib.sha512(SUITE + _CHALLENGE + b"".join(points) + _TRAILER).digest()
    return int.from_bytes(digest[:C_BYTES], "little")


@lru_cache(maxsize=1 << 16)
def _proof_to_output(gamma: bytes) -> int:
    beta = hashlib.sha512(SUITE + _PROOF_TO_HASH + _times_cofactor(gamma) + _TRAILER).digest()
    return int.from_bytes(beta[:OUTPUT_BYTES], "big")


def proof_to_beta(proof: bytes) -> bytes:
    """Full 64-byte RFC 9381 output string for a proof."""
    return hashlib.sha512(
        SUITE + _PROOF_TO_HASH + _times_cofactor(proof[:POINT_BYTES]) + _TRAILER
    ).digest()


@lru_cache(maxsize=1 << 18)
def _prove(secret_key: bytes, alpha: bytes) -> bytes:
    x, nonce_key = _expand_secret(secret_key)
    y = _sodium.crypto_scalarmult_ed25519_base_noclamp(_scalar(x))
    h = _hash_to_curve(y, alpha)
    gamma = _sodium.crypto_scalarmult_ed25519_noclamp(_scalar(x), h)
    k = int.from_bytes(hashlib.sha512(nonce_key + h).digest(), "little") % ORDER
    u = _sodium.crypto_scalarmult_ed25519_base_noclamp(_scalar(k))
    v = _sodium.crypto_scalarmult_ed25519_noclamp(_scalar(k), h)
    c = _challenge(y, h, gamma, u, v)
    s = (k + c * x) % ORDER
    return gamma + c.to_bytes(C_BYTES, "little") + s.to_bytes(32, "little")


def prove(secret_key: bytes, alpha: bytes) -> bytes:
    """The 80-byte proof string ``Gamma || c || s`` for input ``alpha``."""
    return _prove(bytes(secret_key), bytes(alpha))


def output(secret_key: bytes, alpha: bytes) -> int:
    """The VRF value alone, skipping the proof's nonce commitments."""
    x, _ = _expand_secret(bytes(secret_key))
    y = _sodium.crypto_scalarmult_ed25519_base_noclamp(_scalar(x))
    gamma = _sodium.crypto_scalarmult_ed25519_noclamp(_scalar(x), _hash_to_curve(y, bytes(alpha)))
    return _proof_to_output(gamma)


def evaluate(secret_key: bytes, alpha: bytes) -> VrfOutput:
    proof = prove(secret_key, alpha)
    return VrfOutput(_proof_to_output(proof[:POINT_BYTES]), proof)


@lru_cache(maxsize=1 << 18)
def _verify(public_key: bytes, alpha: bytes, proof: bytes, random: int) -> bool:
    if len(public_key) != POINT_BYTES or len(proof) != PROOF_BYTES:
        return False
    gamma = proof[:POINT_BYTES]
    c = int.from_bytes(proof[POINT_BYTES : POINT_BYTES + C_BYTES], "little")
    s = int.from_bytes(proof[POINT_BYTES + C_BYTES :], "little")
    if s >= ORDER:
        return False
    try:
        # noclamp scalar multiplication rejects small-order and off-subgroup
        # points, which covers the RFC's public key validation
        h = _hash_to_curve(public_key, alpha)
        s_b = _sodium.crypto_scalarmult_ed25519_base_noclamp(_scalar(s))
        c_y = _sodium.crypto_scalarmult_ed25519_noclamp(_scalar(c), public_key)
        u = _sodium.crypto_core_ed25519_sub(s_b, c_y)
        s_h = _sodium.crypto_scalarmult_ed25519_noclamp(_scalar(s), h)
        c_gamma = _sodium.crypto_scalarmult_ed25519_noclamp(_scalar(c), gamma)
        v = _sodium.crypto_core_ed25519_sub(s_h, c_gamma)
    except (CryptoError, RuntimeError, ValueError, TypeError):
        return False
    if _challenge(public_key, h, gamma, u, v) != c:
        return False
    return _proof_to_output(gamma) == random


def verify(public_key: bytes, alpha: bytes, output: VrfOutput) -> bool:
    """Accept iff ``output`` is the unique VRF value of ``alpha`` under ``public_key``.

    Malformed inputs are rejected rather than raised.
    """
    try:
        return _verify(bytes(public_key), bytes(alpha), bytes(output.proof), int(output.random))
    except (TypeError, ValueError, AttributeError):
        return False
