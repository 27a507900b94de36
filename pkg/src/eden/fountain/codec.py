"""Systematic fountain codes over a finite universe of ``tau`` symbols.

Symbol ``i < source_k`` is source chunk ``i`` verbatim.  Symbol ``i >=
source_k`` is a linear combination of source chunks whose coefficients are a
pure function of ``(source_k, i)``, so encoder and decoder never exchange
anything but the symbol id.

Two code families sit behind the same interface:

``gf256``
    dense random coefficients over GF(256).  Decoding succeeds from
    ``source_k + e`` symbols with failure probability about ``256**-(e+1)``.
    This is the default.
``lt``
    Luby transform combinations over GF(2) with robust-soliton degrees
    (c=0.1, delta=0.05), decoded by Gaussian elimination.  Cheap, but at
    small ``source_k`` it needs noticeably more overhead than ``gf256``.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from ..errors import ConfigError, DomainError, FormatError, SizeError
from . import gf256
from .stream import HashStream

DEFAULT_EPSILON = 0.15
FAMILIES = ("gf256", "lt")
LT_C = 0.1
LT_DELTA = 0.05


@dataclass(frozen=True)
class EncodedSymbol:
    symbol_id: int
    payload: bytes

    def to_bytes(self) -> bytes:
        return self.symbol_id.to_bytes(4, "big") + self.payload

    @classmethod
    def from_bytes(cls, data: bytes, symbol_size: int) -> "EncodedSymbol":
        if len(data) != 4 + symbol_size:
            raise FormatError(f"symbol record must be {4 + symbol_size} bytes, got {len(data)}")
        return cls(int.from_bytes(data[:4], "big"), bytes(data[4:]))


@dataclass(frozen=True)
class CodecConfig:
    tau: int
    source_k: int
    symbol_size: int
    overhead_epsilon: float = DEFAULT_EPSILON
    family: str = "gf256"

    def __post_init__(self):
        if self.source_k < 1:
            raise ConfigError("source_k must be at least 1", key="source_k")
        if self.symbol_size < 1:
            raise ConfigError("symbol_size must be at least 1", key="symbol_size")
        if self.tau < self.source_k:
            raise ConfigError(
                f"tau={self.tau} cannot be below source_k={self.source_k}", key="tau"
            )
        if self.overhead_epsilon < 0:
            raise ConfigError("overhead_epsilon must be non-negative", key="overhead_epsilon")
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown code family {self.family!r}", key="family")

    @property
    def capacity(self) -> int:
        return self.source_k * self.symbol_size

    def check_threshold(self, threshold: int) -> None:
        """Raise unless ``source_k * (1 + epsilon) <= threshold``."""
        need = self.source_k * (1 + Fraction(repr(self.overhead_epsilon)))
        if need > threshold:
            raise ConfigError(
                f"source_k={self.source_k} with overhead {self.overhead_epsilon} needs "
                f"{float(need):.2f} symbols, more than the vote threshold {threshold}",
                key="source_k",
            )

    @classmethod
    def for_threshold(
        cls,
        tau: int,
        threshold: int,
        message_size: int | None = None,
        overhead_epsilon: float = DEFAULT_EPSILON,
        source_k: int | None = None,
        family: str = "gf256",
    ) -> "CodecConfig":
        """Default sizing: ``source_k = floor(threshold / (1 + epsilon))``.

        ``symbol_size`` is the smallest size that fits ``message_size`` bytes.
        """
        if source_k is None:
            source_k = math.floor(threshold / (1 + Fraction(repr(overhead_epsilon))))
        symbol_size = max(1, math.ceil((message_size or 1) / max(source_k, 1)))
        config = cls(tau, source_k, symbol_size, overhead_epsilon, family)
        config.check_threshold(threshold)
        return config


def _block(message: bytes, config: CodecConfig) -> np.ndarray:
    if len(message) == 0:
        raise SizeError("cannot encode an empty message")
    if len(message) > config.capacity:
        raise SizeError(
            f"message of {len(message)} bytes exceeds capacity "
            f"{config.source_k} x {config.symbol_size} = {config.capacity}"
        )
    padded = bytes(message) + bytes(config.capacity - len(message))
    return np.frombuffer(padded, dtype=np.uint8).reshape(config.source_k, config.symbol_size)


# ---------------------------------------------------------------- gf256


@lru_cache(maxsize=1 << 16)
def _gf256_row(source_k: int, symbol_id: int) -> bytes:
    seed = b"eden/gf256/v1" + source_k.to_bytes(4, "big") + symbol_id.to_bytes(4, "big")
    return hashlib.shake_128(seed).digest(source_k)


def _gf256_matrix(source_k: int, ids: Sequence[int]) -> np.ndarray:
    buf = b"".join(_gf256_row(source_k, i) for i in ids)
    return np.frombuffer(buf, dtype=np.uint8).reshape(len(ids), source_k)


def _gf256_encode(block: np.ndarray, ids: Sequence[int]) -> np.ndarray:
    k = block.shape[0]
    out = np.empty((len(ids), block.shape[1]), dtype=np.uint8)
    repair = [n for n, i in enumerate(ids) if i >= k]
    for n, i in enumerate(ids):
        if i < k:
            out[n] = block[i]
    if repair:
        coeffs = _gf256_matrix(k, [ids[n] for n in repair])
        out[repair] = gf256.combine(coeffs, block)
    return out


def _gf256_decode(symbols: dict[int, np.ndarray], k: int, width: int) -> np.ndarray | None:
    block = np.zeros((k, width), dtype=np.uint8)
    known = np.zeros(k, dtype=bool)
    repair_ids = []
    for i, payload in symbols.items():
        if i < k:
            block[i] = payload
            known[i] = True
        else:
            repair_ids.append(i)
    unknown = np.flatnonzero(~known)
    if unknown.size == 0:
        return block
    if len(repair_ids) < unknown.size:
        return None
    repair_ids.sort()
    coeffs = _gf256_matrix(k, repair_ids)
    rhs = np.stack([symbols[i] for i in repair_ids])
    have = np.flatnonzero(known)
    if have.size:
        rhs = rhs ^ gf256.combine(coeffs[:, have], block[have])
    solution = gf256.solve(coeffs[:, unknown], rhs)
    if solution is None:
        return None
    block[unknown] = solution
    return block


# ---------------------------------------------------------------- lt


@lru_cache(maxsize=256)
def robust_soliton_cdf(k: int, c: float = LT_C, delta: float = LT_DELTA) -> tuple[float, ...]:
    """Cumulative robust-soliton probabilities for degrees 1..k."""
    if k == 1:
        return (1.0,)
    r = c * math.log(k / delta) * math.sqrt(k)
    spike = min(k, max(1, int(k / r)))
    weights = [0.0] * (k + 1)
    weights[1] = 1.0 / k
    for d in range(2, k + 1):
        weights[d] = 1.0 / (d * (d - 1))
    for d in range(1, spike):
        weights[d] += r / (d * k)
    weights[spike] += r * math.log(r / delta) / k
    total = math.fsum(weights)
    cdf, acc = [], 0.0
    for d in range(1, k + 1):
        acc += weights[d] / total
        cdf.append(acc)
    cdf[-1] = 1.0
    return tuple(cdf)


@lru_cache(maxsize=1 << 16)
def lt_neighbours(source_k: int, symbol_id: int) -> tuple[int, ...]:
    """Source indices XORed into LT symbol ``symbol_id``."""
    if symbol_id < source_k:
        return (symbol_id,)
    stream = HashStream(b"eden/lt/v1", source_k.to_bytes(4, "big") + symbol_id.to_bytes(4, "big"))
    u = stream.unit_float()
    cdf = robust_soliton_cdf(source_k)
    degree = next(d for d, f in enumerate(cdf, start=1) if u < f)
    return tuple(sorted(_partial_shuffle(stream, source_k, degree)))


def _lt_encode(block: np.ndarray, ids: Sequence[int]) -> np.ndarray:
    k = block.shape[0]
    out = np.empty((len(ids), block.shape[1]), dtype=np.uint8)
    for n, i in enumerate(ids):
        out[n] = np.bitwise_xor.reduce(block[list(lt_neighbours(k, i))], axis=0)
    return out


def _lt_decode(symbols: dict[int, np.ndarray], k: int, width: int) -> np.ndarray | None:
    # rows are bitmasks over source indices; the lowest set bit is the pivot
    pivots: dict[int, tuple[int, int]] = {}
    for i in sorted(symbols):
        mask = 0
        for j in lt_neighbours(k, i):
            mask |= 1 << j
        value = int.from_bytes(symbols[i].tobytes(), "big")
        while mask:
            lead = (mask & -mask).bit_length() - 1
            if lead in pivots:
                pmask, pvalue = pivots[lead]
                mask ^= pmask
                value ^= pvalue
            else:
                pivots[lead] = (mask, value)
                break
        if len(pivots) == k:
            break
    if len(pivots) < k:
        return None
    solved = [0] * k
    for lead in range(k - 1, -1, -1):
        mask, value = pivots[lead]
        rest = mask & ~(1 << lead)
        while rest:
            low = rest & -rest
            value ^= solved[low.bit_length() - 1]
            rest ^= low
        solved[lead] = value
    raw = b"".join(v.to_bytes(width, "big") for v in solved)
    return np.frombuffer(raw, dtype=np.uint8).reshape(k, width).copy()


_ENCODERS = {"gf256": _gf256_encode, "lt": _lt_encode}
_DECODERS = {"gf256": _gf256_decode, "lt": _lt_decode}


# ---------------------------------------------------------------- public API


def encode_symbols(message: bytes, config: CodecConfig, ids: Iterable[int]) -> list[EncodedSymbol]:
    """Encode only the requested symbol ids (same bytes ``encode`` would give)."""
    ids = [int(i) for i in ids]
    for i in ids:
        if not 0 <= i < config.tau:
            raise DomainError(f"symbol id {i} outside [0, {config.tau})")
    if not ids:
        _block(message, config)
        return []
    rows = _ENCODERS[config.family](_block(message, config), ids)
    return [EncodedSymbol(i, rows[n].tobytes()) for n, i in enumerate(ids)]


def encode(message: bytes, config: CodecConfig) -> list[EncodedSymbol]:
    """All ``tau`` symbols of ``message``, ids 0..tau-1 in order."""
    return encode_symbols(message, config, range(config.tau))


def decode(
    symbols: Iterable[EncodedSymbol], config: CodecConfig, length: int | None = None
) -> bytes | None:
    """Recover the source block, or None if the symbols do not span it yet.

    Without ``length`` the full zero-padded block (``capacity`` bytes) is
    returned; with it, the block is cut back to the original message.
    """
    pool: dict[int, np.ndarray] = {}
    for sym in symbols:
        if len(sym.payload) != config.symbol_size:
            raise FormatError(
                f"symbol {sym.symbol_id} has {len(sym.payload)} bytes, "
                f"expected {config.symbol_size}"
            )
        if not 0 <= sym.symbol_id < config.tau:
            raise FormatError(f"symbol id {sym.symbol_id} outside [0, {config.tau})")
        pool.setdefault(sym.symbol_id, np.frombuffer(sym.payload, dtype=np.uint8))
    if len(pool) < config.source_k:
        return None
    block = _DECODERS[config.family](pool, config.source_k, config.symbol_size)
    if block is None:
        return None
    data = block.tobytes()
    if length is not None:
        if not 0 < length <= config.capacity:
            raise DomainError(f"length {length} outside (0, {config.capacity}]")
        data = data[:length]
    return data


def _partial_shuffle(stream: HashStream, n: int, count: int) -> list[int]:
    swapped: dict[int, int] = {}
    chosen = []
    for i in range(count):
        j = i + stream.below(n - i)
        vi, vj = swapped.get(i, i), swapped.get(j, j)
        swapped[j] = vi
        swapped[i] = vj
        chosen.append(vj)
    return chosen


def select_symbols(x: int, votes: int, tau: int) -> tuple[int, ...]:
    """The ``votes`` distinct symbol ids an envoy with unit random ``x`` sends.

    Partial Fisher-Yates over a hash stream seeded by ``x``; returned sorted.
    """
    if votes < 0 or votes > tau:
        raise DomainError(f"need 0 <= votes <= tau, got votes={votes}, tau={tau}")
    if not 0 <= x < 1 << 256:
        raise DomainError("unit random must be a 256-bit unsigned integer")
    if votes == 0:
        return ()
    stream = HashStream(b"eden/select/v1", x.to_bytes(32, "big"))
    return tuple(sorted(_partial_shuffle(stream, tau, votes)))
