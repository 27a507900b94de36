"""Destination-side reduction: verify packets, accumulate votes, decode, commit.

Every packet goes through four checks before its votes count:

1. the envoy is registered and has not already voted on this message;
2. its VRF proof verifies against the message hash;
3. the claimed vote weight equals the weight recomputed from the VRF value
   and the registered stake;
4. its symbol ids are exactly the ones the VRF value selects.

Payload bytes cannot be checked until the message is known.  Once the
accumulated votes reach the threshold the symbol pool is decoded and the
result is hashed; the authenticated message is then re-encoded and every
accepted packet is audited, so packets with corrupted payloads are evicted
and their votes withdrawn.  Later packets are checked against the known
message directly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from . import vrf
from .envoy import CrossChainMessage, EnvoyRecord, VotePacket, canonical_decode, canonical_encode
from .errors import ConfigError, FormatError
from .fountain import CodecConfig, EncodedSymbol, decode, encode_symbols, select_symbols
from .fountain.stream import HashStream
from .sortition import SortitionParams, compute_votes

PENDING = "pending"
COMMITTED = "committed"
REJECTED = "rejected"
TIMED_OUT = "timed-out"

ACCEPTED = "accepted"

MAX_RECOVERY_ATTEMPTS = 24
ALL_CHECKS = frozenset({"proof", "votes", "symbols", "content"})


@dataclass
class StakeRegistry:
    records: dict[int, EnvoyRecord]
    total_supply: int | None = None

    def __post_init__(self):
        if self.total_supply is not None and self.total_staked > self.total_supply:
            raise ConfigError(
                f"registered stake {self.total_staked} exceeds total supply {self.total_supply}"
            )

    @classmethod
    def from_records(cls, records: Iterable[EnvoyRecord], total_supply: int | None = None):
        table: dict[int, EnvoyRecord] = {}
        for rec in records:
            if rec.envoy_id in table:
                raise ConfigError(f"duplicate envoy id {rec.envoy_id}")
            table[rec.envoy_id] = rec
        return cls(table, total_supply)

    @property
    def total_staked(self) -> int:
        return sum(r.stake for r in self.records.values())

    def get(self, envoy_id: int) -> EnvoyRecord | None:
        return self.records.get(envoy_id)

    def to_json(self) -> str:
        rows = [
            {"envoy_id": r.envoy_id, "public_key": r.public_key.hex(), "stake": r.stake}
            for r in sorted(self.records.values(), key=lambda r: r.envoy_id)
        ]
        return json.dumps({"total_supply": self.total_supply, "envoys": rows}, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "StakeRegistry":
        data = json.loads(text)
        records = []
        for row in data["envoys"]:
            stake = row["stake"]
            if not isinstance(stake, int) or isinstance(stake, bool):
                raise FormatError(f"envoy {row.get('envoy_id')}: stake must be an integer")
            records.append(EnvoyRecord(int(row["envoy_id"]), bytes.fromhex(row["public_key"]), stake))
        return cls.from_records(records, data.get("total_supply"))


@dataclass(frozen=True)
class CommittedMessage:
    message_hash: bytes
    message: CrossChainMessage
    final_votes: int
    commit_time: int


@dataclass(frozen=True)
class Event:
    kind: str  # accepted | rejected | committed
    envoy_id: int
    message_hash: bytes
    tick: int
    reason: str | None = None
    committed: CommittedMessage | None = None
    evicted: tuple[int, ...] = ()


@dataclass
class ReducerState:
    message_hash: bytes
    status: str = PENDING
    verified_votes: int = 0
    seen_envoys: set[int] = field(default_factory=set)
    accepted: dict[int, VotePacket] = field(default_factory=dict)
    symbol_pool: dict[int, tuple[EncodedSymbol, int]] = field(default_factory=dict)
    message: CrossChainMessage | None = None
    committed: CommittedMessage | None = None
    evicted: list[int] = field(default_factory=list)
    evidence: list[str] = field(default_factory=list)
    _attempted: tuple[int, int] | None = None

    @property
    def final_votes(self) -> int:
        return self.verified_votes


def _reject(state: ReducerState, pkt: VotePacket, tick: int, reason: str) -> Event:
    return Event("rejected", pkt.envoy_id, state.message_hash, tick, reason=reason)


def _authentic(data: bytes | None, digest: bytes) -> CrossChainMessage | None:
    if data is None:
        return None
    try:
        msg = canonical_decode(data, padded=True)
    except FormatError:
        return None
    if vrf.hash_message(canonical_encode(msg)) != digest:
        return None
    return msg


def _decode_pool(pool: Iterable[EncodedSymbol], codec: CodecConfig, digest: bytes):
    data = decode(pool, codec)
    return data, _authentic(data, digest)


def _recover(state: ReducerState, codec: CodecConfig) -> CrossChainMessage | None:
    """Search packet subsets for one whose symbols decode to the right hash.

    Subsets are drawn in an order seeded by the message hash, so the search
    depends only on the set of accepted packets, not on arrival order.
    """
    packets = [state.accepted[e] for e in sorted(state.accepted)]
    for attempt in range(MAX_RECOVERY_ATTEMPTS):
        stream = HashStream(b"eden/recover/v1", state.message_hash + attempt.to_bytes(4, "big"))
        order = list(range(len(packets)))
        for i in range(len(order) - 1):
            j = i + stream.below(len(order) - i)
            order[i], order[j] = order[j], order[i]
        pool: dict[int, EncodedSymbol] = {}
        for idx in order:
            for sym in packets[idx].symbols:
                pool.setdefault(sym.symbol_id, sym)
            if len(pool) < codec.source_k:
                continue
            data, msg = _decode_pool(pool.values(), codec, state.message_hash)
            if msg is not None:
                return msg
            if data is not None:
                break  # spans the source but disagrees: this subset holds bad symbols
    return None


def _audit(state: ReducerState, codec: CodecConfig, data: bytes) -> list[int]:
    bad = []
    for envoy_id in sorted(state.accepted):
        pkt = state.accepted[envoy_id]
        expected = encode_symbols(data, codec, pkt.symbol_ids)
        if any(e.payload != s.payload for e, s in zip(expected, pkt.symbols)):
            bad.append(envoy_id)
    for envoy_id in bad:
        pkt = state.accepted.pop(envoy_id)
        state.verified_votes -= pkt.claimed_votes
        state.evicted.append(envoy_id)
    if bad:
        state.symbol_pool = {
            sid: (sym, owner) for sid, (sym, owner) in state.symbol_pool.items() if owner not in bad
        }
    return bad


def _try_commit(
    state: ReducerState,
    params: SortitionParams,
    codec: CodecConfig,
    tick: int,
    commits: dict[tuple[int, int], bytes] | None,
    audit: bool = True,
) -> tuple[list[int], str | None]:
    evicted: list[int] = []
    if state.message is None:
        marker = (len(state.symbol_pool), len(state.accepted))
        if marker == state._attempted:
            return evicted, None
        data, msg = _decode_pool((s for s, _ in state.symbol_pool.values()), codec, state.message_hash)
        if msg is None and data is not None:
            state.evidence.append(f"tick {tick}: decoded block does not hash to the message hash")
            msg = _recover(state, codec)
        if msg is None:
            state._attempted = marker
            return evicted, None
        state.message = msg
        if audit:
            evicted = _audit(state, codec, canonical_encode(msg))
    if state.verified_votes < params.threshold:
        return evicted, None
    key = state.message.key
    if commits is not None:
        winner = commits.get(key)
        if winner is not None and winner != state.message_hash:
            state.status = REJECTED
            state.evidence.append(
                f"tick {tick}: equivocation, chain {key[0]} sequence {key[1]} "
                f"already committed as {winner.hex()}"
            )
            return evicted, "equivocation"
        commits[key] = state.message_hash
    state.status = COMMITTED
    state.committed = CommittedMessage(state.message_hash, state.message, state.verified_votes, tick)
    return evicted, None


def handle_packet(
    state: ReducerState,
    pkt: VotePacket,
    registry: StakeRegistry,
    params: SortitionParams,
    codec: CodecConfig,
    tick: int = 0,
    commits: dict[tuple[int, int], bytes] | None = None,
    checks: frozenset[str] = ALL_CHECKS,
) -> Event:
    """Run one packet through the verification pipeline and update ``state``.

    Rejected packets leave the state untouched.  ``commits`` maps
    ``(source_chain_id, sequence_number)`` to the hash already committed for
    it and is shared across message states to detect equivocation.
    ``checks`` exists so tests can switch individual checks off.
    """
    if pkt.message_hash != state.message_hash:
        raise ValueError("packet belongs to a different message")
    if state.status == REJECTED:
        return _reject(state, pkt, tick, "closed")
    record = registry.get(pkt.envoy_id)
    if record is None:
        return _reject(state, pkt, tick, "unknown-envoy")
    if pkt.envoy_id in state.seen_envoys:
        return _reject(state, pkt, tick, "duplicate")
    if "proof" in checks and not vrf.verify(record.public_key, pkt.message_hash, vrf.VrfOutput(pkt.vrf_random, pkt.vrf_proof)):
        return _reject(state, pkt, tick, "proof")
    if "votes" in checks:
        votes = compute_votes(pkt.vrf_random, record.stake, params)
        if votes == 0 or pkt.claimed_votes != votes:
            return _reject(state, pkt, tick, "votes")
    else:
        votes = pkt.claimed_votes
    if "symbols" in checks and pkt.symbol_ids != select_symbols(
        pkt.vrf_random, min(votes, params.tau), params.tau
    ):
        return _reject(state, pkt, tick, "symbols")
    if any(len(s.payload) != codec.symbol_size for s in pkt.symbols):
        return _reject(state, pkt, tick, "symbols")
    if "content" in checks and state.message is not None:
        expected = encode_symbols(canonical_encode(state.message), codec, pkt.symbol_ids)
        if any(e.payload != s.payload for e, s in zip(expected, pkt.symbols)):
            return _reject(state, pkt, tick, "corrupt")

    state.seen_envoys.add(pkt.envoy_id)
    state.accepted[pkt.envoy_id] = pkt
    state.verified_votes += votes
    for sym in pkt.symbols:
        state.symbol_pool.setdefault(sym.symbol_id, (sym, pkt.envoy_id))

    if state.status == COMMITTED or state.verified_votes < params.threshold:
        return Event(ACCEPTED, pkt.envoy_id, state.message_hash, tick)
    evicted, failure = _try_commit(state, params, codec, tick, commits, "content" in checks)
    evicted_t = tuple(evicted)
    if failure is not None:
        return Event("rejected", pkt.envoy_id, state.message_hash, tick, reason=failure, evicted=evicted_t)
    if pkt.envoy_id in evicted:
        return Event("rejected", pkt.envoy_id, state.message_hash, tick, reason="corrupt", evicted=evicted_t)
    if state.status == COMMITTED:
        return Event(COMMITTED, pkt.envoy_id, state.message_hash, tick, committed=state.committed, evicted=evicted_t)
    return Event(ACCEPTED, pkt.envoy_id, state.message_hash, tick, evicted=evicted_t)


def finalize_status(state: ReducerState | None, deadline: int, now: int | None = None) -> str:
    """Outcome of a message as seen at tick ``now`` (default: at the deadline).

    A message still pending once the deadline has passed is timed out.
    """
    if now is None:
        now = deadline
    if state is None or state.status == PENDING:
        return TIMED_OUT if now >= deadline else PENDING
    return state.status


def status_record(state: ReducerState, deadline: int, now: int | None = None) -> dict:
    """JSON-lines record ``{message_hash_hex, status, final_votes, commit_tick}``."""
    return {
        "message_hash_hex": state.message_hash.hex(),
        "status": finalize_status(state, deadline, now),
        "final_votes": state.verified_votes,
        "commit_tick": state.committed.commit_time if state.committed else None,
    }


class Reducer:
    """All message states of one destination chain, keyed by message hash."""

    def __init__(self, registry: StakeRegistry, params: SortitionParams, codec: CodecConfig):
        self.registry = registry
        self.params = params
        self.codec = codec
        self.states: dict[bytes, ReducerState] = {}
        self.commits: dict[tuple[int, int], bytes] = {}

    def state(self, digest: bytes) -> ReducerState:
        st = self.states.get(digest)
        if st is None:
            st = self.states[digest] = ReducerState(digest)
        return st

    def handle(self, pkt: VotePacket, tick: int = 0, checks: frozenset[str] = ALL_CHECKS) -> Event:
        return handle_packet(
            self.state(pkt.message_hash), pkt, self.registry, self.params, self.codec,
            tick, self.commits, checks,
        )

    def committed(self) -> Mapping[bytes, CommittedMessage]:
        return {d: s.committed for d, s in self.states.items() if s.committed is not None}
