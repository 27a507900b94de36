"""Envoy (mapper) side: hash, draw votes, slice, emit one packet.

An envoy never looks at another envoy's state.  Everything it emits is a
pure function of the message, its own key and stake record, and the public
parameters, which is what lets the reducer re-derive and check it.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from . import vrf
from .errors import FormatError, SizeError
from .fountain import CodecConfig, EncodedSymbol, encode_symbols, select_symbols
from .sortition import SortitionParams, compute_votes

_HEADER = struct.Struct(">IQII")
HEADER_SIZE = _HEADER.size  # 20
MAX_PAYLOAD = 2**32 - 1


@dataclass(frozen=True)
class CrossChainMessage:
    source_chain_id: int
    sequence_number: int
    payload: bytes
    commit_height: int = 0

    @property
    def key(self) -> tuple[int, int]:
        return (self.source_chain_id, self.sequence_number)


def canonical_encode(msg: CrossChainMessage) -> bytes:
    """``chain(4) | sequence(8) | height(4) | length(4) | payload``, big-endian."""
    if len(msg.payload) > MAX_PAYLOAD:
        raise SizeError("payload longer than 2**32 - 1 bytes")
    try:
        header = _HEADER.pack(
            msg.source_chain_id, msg.sequence_number, msg.commit_height, len(msg.payload)
        )
    except struct.error as exc:
        raise FormatError(f"message field out of range: {exc}") from None
    return header + bytes(msg.payload)


def canonical_decode(data: bytes, padded: bool = False) -> CrossChainMessage:
    """Inverse of ``canonical_encode``.

    With ``padded=True`` trailing bytes after the payload are allowed but must
    all be zero (fountain block padding).
    """
    if len(data) < HEADER_SIZE:
        raise FormatError("truncated message header")
    chain, seq, height, length = _HEADER.unpack_from(data)
    end = HEADER_SIZE + length
    if end > len(data):
        raise FormatError("payload length exceeds the available bytes")
    tail = data[end:]
    if tail and (not padded or any(tail)):
        raise FormatError("unexpected bytes after the payload")
    return CrossChainMessage(chain, seq, bytes(data[HEADER_SIZE:end]), height)


def message_hash(msg: CrossChainMessage) -> bytes:
    return vrf.hash_message(canonical_encode(msg))


@dataclass(frozen=True)
class EnvoyRecord:
    envoy_id: int
    public_key: bytes
    stake: int

    def __post_init__(self):
        if self.stake < 1:
            raise ValueError(f"envoy {self.envoy_id}: stake must be a positive integer")


@dataclass(frozen=True)
class VotePacket:
    envoy_id: int
    message_hash: bytes
    vrf_random: int
    vrf_proof: bytes
    claimed_votes: int
    symbols: tuple[EncodedSymbol, ...] = field(default=())

    @property
    def symbol_ids(self) -> tuple[int, ...]:
        return tuple(s.symbol_id for s in self.symbols)

    def to_bytes(self) -> bytes:
        """Wire form: fixed header, proof, then ``id(4) | payload`` records."""
        size = len(self.symbols[0].payload) if self.symbols else 0
        head = struct.pack(
            ">I32s32sH", self.envoy_id, self.message_hash,
            self.vrf_random.to_bytes(32, "big"), len(self.vrf_proof),
        )
        tail = struct.pack(">QII", self.claimed_votes, len(self.symbols), size)
        return head + self.vrf_proof + tail + b"".join(s.to_bytes() for s in self.symbols)

    @classmethod
    def from_bytes(cls, data: bytes) -> "VotePacket":
        try:
            envoy_id, digest, rnd, plen = struct.unpack_from(">I32s32sH", data)
            off = 70
            proof = bytes(data[off : off + plen])
            off += plen
            votes, count, size = struct.unpack_from(">QII", data, off)
            off += 16
        except struct.error:
            raise FormatError("truncated vote packet") from None
        if len(proof) != plen or len(data) != off + count * (4 + size):
            raise FormatError("vote packet length does not match its header")
        symbols = tuple(
            EncodedSymbol.from_bytes(data[off + n * (4 + size) : off + (n + 1) * (4 + size)], size)
            for n in range(count)
        )
        return cls(envoy_id, digest, int.from_bytes(rnd, "big"), proof, votes, symbols)

    @property
    def wire_size(self) -> int:
        size = len(self.symbols[0].payload) if self.symbols else 0
        return 70 + len(self.vrf_proof) + 16 + len(self.symbols) * (4 + size)


def build_packet(
    msg_bytes: bytes,
    digest: bytes,
    output: vrf.VrfOutput,
    envoy_id: int,
    votes: int,
    params: SortitionParams,
    codec: CodecConfig,
) -> VotePacket:
    ids = select_symbols(output.random, min(votes, params.tau), params.tau)
    symbols = tuple(encode_symbols(msg_bytes, codec, ids))
    return VotePacket(envoy_id, digest, output.random, output.proof, votes, symbols)


def process_message(
    msg: CrossChainMessage,
    secret_key: bytes,
    record: EnvoyRecord,
    params: SortitionParams,
    codec: CodecConfig,
) -> VotePacket | None:
    """Vote on ``msg``; None means the envoy drew zero votes and stays silent."""
    data = canonical_encode(msg)
    if len(data) > codec.capacity:
        raise SizeError(
            f"encoded message is {len(data)} bytes; codec capacity is {codec.capacity}"
        )
    digest = vrf.hash_message(data)
    output = vrf.evaluate(secret_key, digest)
    votes = compute_votes(output.random, record.stake, params)
    if votes == 0:
        return None
    return build_packet(data, digest, output, record.envoy_id, votes, params, codec)


def read_messages(lines: Iterable[str]) -> Iterator[CrossChainMessage]:
    """Parse JSON-lines ingestion records into messages.

    Each record holds ``source_chain_id``, ``sequence_number``,
    ``commit_height`` and ``payload_hex``; blank lines are skipped.
    """
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            rec = json.loads(line)
            yield CrossChainMessage(
                int(rec["source_chain_id"]),
                int(rec["sequence_number"]),
                bytes.fromhex(rec["payload_hex"]),
                int(rec.get("commit_height", 0)),
            )
        except (KeyError, ValueError, TypeError) as exc:
            raise FormatError(f"line {lineno}: bad message record ({exc})") from None


def write_message(msg: CrossChainMessage) -> str:
    return json.dumps(
        {
            "source_chain_id": msg.source_chain_id,
            "sequence_number": msg.sequence_number,
            "commit_height": msg.commit_height,
            "payload_hex": msg.payload.hex(),
        },
        sort_keys=True,
    )
