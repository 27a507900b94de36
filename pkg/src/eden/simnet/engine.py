"""Discrete-event simulation of envoys and one destination-chain reducer.

Time is measured in integer ticks.  Every packet is scheduled at its arrival
tick and delivered in ``(tick, envoy_id, insertion order)`` order, so a run is
a pure function of its configuration.
"""

from __future__ import annotations

import csv
import heapq
import io
import json
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

from .. import vrf
from ..envoy import (
    CrossChainMessage,
    VotePacket,
    build_packet,
    canonical_encode,
    process_message,
)
from ..fountain import CodecConfig, EncodedSymbol
from ..reducer import COMMITTED, Reducer, status_record
from ..sortition import SortitionParams, compute_votes
from .config import ScenarioConfig
from .universe import ADVERSARY, HONEST, Envoy, Universe, build_universe, rng_for

SOURCE_CHAIN = 1
HONEST_TAG = "honest"
ADVERSARY_TAGS = ("forge", "inflate", "corrupt-symbols", "replay-duplicate", "replay-retarget")


@dataclass(frozen=True)
class Sent:
    tick: int
    packet: VotePacket
    tag: str
    deadline: int


@dataclass
class SimReport:
    config: dict
    universe: dict
    messages: list[dict]
    aggregates: dict
    adversarial: dict
    passed: bool

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "universe": self.universe,
            "messages": self.messages,
            "aggregates": self.aggregates,
            "adversarial": self.adversarial,
            "passed": self.passed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        cols = list(self.messages[0]) if self.messages else ["sequence_number"]
        writer = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
        writer.writeheader()
        writer.writerows(self.messages)
        return buf.getvalue()


def _honest_batch(args) -> list[VotePacket | None]:
    msg, members, params, codec = args
    return [process_message(msg, sk, record, params, codec) for sk, record in members]


def honest_packets(
    msg: CrossChainMessage,
    envoys: list[Envoy],
    params: SortitionParams,
    codec: CodecConfig,
    pool: ProcessPoolExecutor | None = None,
) -> list[VotePacket]:
    members = [(e.keys.secret_key, e.record) for e in envoys]
    if pool is None:
        results = _honest_batch((msg, members, params, codec))
    else:
        n = pool._max_workers
        chunks = [members[i::n] for i in range(n)]
        parts = list(pool.map(_honest_batch, [(msg, c, params, codec) for c in chunks]))
        # undo the round-robin split so results line up with ``envoys``
        results = [None] * len(members)
        for w, part in enumerate(parts):
            results[w::n] = part
    return [p for p in results if p is not None]


def _inflated_packet(msg: CrossChainMessage, envoy: Envoy, params, codec) -> VotePacket:
    data = canonical_encode(msg)
    digest = vrf.hash_message(data)
    out = vrf.evaluate(envoy.keys.secret_key, digest)
    true_votes = compute_votes(out.random, envoy.stake, params)
    claimed = true_votes + max(true_votes, 1)
    return build_packet(data, digest, out, envoy.envoy_id, claimed, params, codec)


def _corrupt(pkt: VotePacket) -> VotePacket:
    bad = tuple(
        EncodedSymbol(s.symbol_id, bytes([s.payload[0] ^ 0xFF]) + s.payload[1:]) for s in pkt.symbols
    )
    return replace(pkt, symbols=bad)


def _forged_message(msg: CrossChainMessage, rng) -> CrossChainMessage:
    return replace(msg, payload=rng.randbytes(len(msg.payload)) if msg.payload else b"\x01")


def adversary_packets(
    strategy: str,
    msg: CrossChainMessage,
    honest: list[VotePacket],
    previous: list[VotePacket],
    adversaries: list[Envoy],
    params: SortitionParams,
    codec: CodecConfig,
    rng,
) -> list[tuple[VotePacket, str, int]]:
    """Packets the adversary cohort emits for ``msg`` as (packet, tag, extra delay).

    Adversaries never vote for honest messages; each strategy produces only
    the attack traffic.
    """
    out: list[tuple[VotePacket, str, int]] = []
    if strategy == "none" or not adversaries:
        return out
    if strategy == "forge":
        fake = _forged_message(msg, rng)
        for e in adversaries:
            pkt = process_message(fake, e.keys.secret_key, e.record, params, codec)
            if pkt is not None:
                out.append((pkt, "forge", 0))
    elif strategy == "inflate":
        fake = _forged_message(msg, rng)
        for e in adversaries:
            out.append((_inflated_packet(fake, e, params, codec), "inflate", 0))
    elif strategy == "corrupt-symbols":
        for e in adversaries:
            pkt = process_message(msg, e.keys.secret_key, e.record, params, codec)
            if pkt is not None:
                out.append((_corrupt(pkt), "corrupt-symbols", 0))
    elif strategy == "replay":
        digest = vrf.hash_message(canonical_encode(msg))
        for _ in adversaries:
            if honest:
                victim = honest[rng.randrange(len(honest))]
                out.append((victim, "replay-duplicate", 1 + rng.randrange(5)))
            if previous:
                old = previous[rng.randrange(len(previous))]
                out.append((replace(old, message_hash=digest), "replay-retarget", 0))
    return out


def _disposition_table() -> dict:
    return {
        tag: {"sent": 0, "accepted": 0, "dropped_late": 0, "rejected": {}}
        for tag in (HONEST_TAG,) + ADVERSARY_TAGS
    }


def run(config: ScenarioConfig, workers: int = 1) -> SimReport:
    universe = build_universe(config)
    params, codec = config.params, config.codec
    honest_envoys = list(universe.cohort(HONEST))
    adversaries = list(universe.cohort(ADVERSARY))
    lo, hi = config.latency_spec()
    rng_payload = rng_for(config.seed, "payload")
    rng_latency = rng_for(config.seed, "latency")
    rng_attack = rng_for(config.seed, "adversary")

    queue: list[tuple[int, int, int, Sent]] = []
    counter = 0
    messages: list[tuple[CrossChainMessage, bytes, int, int, list[VotePacket]]] = []
    previous: list[VotePacket] = []
    pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for seq in range(config.n_messages):
            emit = seq * config.message_interval
            deadline = emit + config.message_deadline
            msg = CrossChainMessage(SOURCE_CHAIN, seq, rng_payload.randbytes(config.payload_size), 1000 + seq)
            digest = vrf.hash_message(canonical_encode(msg))
            honest = honest_packets(msg, honest_envoys, params, codec, pool)
            messages.append((msg, digest, emit, deadline, honest))
            arrivals = {}
            for pkt in honest:
                tick = emit + rng_latency.randint(lo, hi)
                arrivals[pkt.envoy_id] = tick
                heapq.heappush(queue, (tick, pkt.envoy_id, counter, Sent(tick, pkt, HONEST_TAG, deadline)))
                counter += 1
            attacks = adversary_packets(
                config.adversary_strategy, msg, honest, previous, adversaries, params, codec, rng_attack
            )
            for pkt, tag, extra in attacks:
                if tag == "replay-duplicate":
                    tick = arrivals[pkt.envoy_id] + extra
                else:
                    tick = emit + rng_latency.randint(lo, hi)
                heapq.heappush(queue, (tick, pkt.envoy_id, counter, Sent(tick, pkt, tag, deadline)))
                counter += 1
            previous = honest
    finally:
        if pool is not None:
            pool.shutdown()

    reducer = Reducer(universe.registry, params, codec)
    table = _disposition_table()
    outcomes: list[tuple[Sent, str]] = []
    while queue:
        _, _, _, sent = heapq.heappop(queue)
        row = table[sent.tag]
        row["sent"] += 1
        if sent.tick > sent.deadline:
            row["dropped_late"] += 1
            continue
        event = reducer.handle(sent.packet, sent.tick)
        outcomes.append((sent, event.reason or event.kind))

    # evictions can overturn an earlier acceptance, so settle dispositions last
    for sent, verdict in outcomes:
        row = table[sent.tag]
        state = reducer.states[sent.packet.message_hash]
        if verdict in ("accepted", COMMITTED) and sent.packet.envoy_id in state.evicted:
            verdict = "corrupt"
        if verdict in ("accepted", COMMITTED):
            row["accepted"] += 1
        else:
            row["rejected"][verdict] = row["rejected"].get(verdict, 0) + 1

    return _report(config, universe, reducer, messages, table)


def _report(config, universe: Universe, reducer: Reducer, messages, table) -> SimReport:
    params = config.params
    honest_hashes = set()
    rows = []
    vote_sums, distinct_total, symbol_total = [], 0, 0
    wire_total = symbol_bytes = naive_total = 0
    n_honest_online = len(universe.cohort(HONEST))
    for msg, digest, emit, deadline, honest in messages:
        honest_hashes.add(digest)
        state = reducer.states.get(digest)
        if state is None:
            record = {"status": "timed-out", "final_votes": 0, "commit_tick": None}
        else:
            record = status_record(state, deadline)
        ids = [sid for p in honest for sid in p.symbol_ids]
        distinct_total += len(set(ids))
        symbol_total += len(ids)
        wire = sum(p.wire_size for p in honest)
        sym_bytes = len(ids) * (4 + config.codec.symbol_size)
        naive = n_honest_online * config.message_size
        wire_total += wire
        symbol_bytes += sym_bytes
        naive_total += naive
        vote_sums.append(sum(p.claimed_votes for p in honest))
        commit_tick = record["commit_tick"]
        rows.append({
            "sequence_number": msg.sequence_number,
            "message_hash_hex": digest.hex(),
            "status": record["status"],
            "final_votes": record["final_votes"],
            "commit_tick": commit_tick,
            "commit_latency": None if commit_tick is None else commit_tick - emit,
            "honest_packets": len(honest),
            "honest_votes": vote_sums[-1],
            "bytes_transmitted": wire,
            "symbol_bytes": sym_bytes,
            "naive_bytes": naive,
        })

    committed = sum(r["status"] == COMMITTED for r in rows)
    forged = sum(1 for d in reducer.committed() if d not in honest_hashes)
    n = len(rows)
    commit_rate = committed / n if n else 1.0
    latencies = [r["commit_latency"] for r in rows if r["commit_latency"] is not None]
    honest_stake = universe.stake_of(HONEST)
    p = params.tau / params.total_supply
    aggregates = {
        "messages": n,
        "committed": committed,
        "honest_commit_rate": commit_rate,
        "forged_commits": forged,
        "rejected_messages": sum(r["status"] == "rejected" for r in rows),
        "timed_out_messages": sum(r["status"] == "timed-out" for r in rows),
        "vote_threshold": params.threshold,
        "honest_vote_sum_mean": statistics.fmean(vote_sums) if vote_sums else 0.0,
        "honest_vote_sum_variance": statistics.pvariance(vote_sums) if len(vote_sums) > 1 else 0.0,
        "honest_vote_sum_expected": honest_stake * p,
        "honest_vote_sum_expected_variance": honest_stake * p * (1 - p),
        "duplicate_symbol_ratio": 1 - distinct_total / symbol_total if symbol_total else 0.0,
        "mean_commit_latency": statistics.fmean(latencies) if latencies else None,
        "max_commit_latency": max(latencies) if latencies else None,
        "eden_wire_bytes": wire_total,
        "eden_symbol_bytes": symbol_bytes,
        "naive_bytes": naive_total,
        "eden_to_naive_ratio": symbol_bytes / naive_total if naive_total else None,
    }
    universe_info = {
        "total_supply": config.K,
        "honest_stake": honest_stake,
        "adversary_stake": universe.stake_of(ADVERSARY),
        "offline_stake": universe.stake_of("offline"),
        "honest_envoys": len(universe.cohort(HONEST)),
        "adversary_envoys": len(universe.cohort(ADVERSARY)),
        "offline_envoys": len(universe.cohort("offline")),
        "source_k": config.codec.source_k,
        "symbol_size": config.codec.symbol_size,
        "codec_family": config.codec.family,
    }
    passed = forged == 0 and commit_rate >= config.expected_commit_rate
    return SimReport(config.to_dict(), universe_info, rows, aggregates, table, passed)
