import hashlib
import io
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from eden import vrf
from eden.envoy import (
    HEADER_SIZE,
    CrossChainMessage,
    EnvoyRecord,
    VotePacket,
    canonical_decode,
    canonical_encode,
    message_hash,
    process_message,
    read_messages,
    write_message,
)
from eden.errors import FormatError, SizeError
from eden.fountain import CodecConfig, encode_symbols, select_symbols
from eden.sortition import SortitionParams, compute_votes

messages = st.builds(
    CrossChainMessage,
    st.integers(0, 2**32 - 1),
    st.integers(0, 2**64 - 1),
    st.binary(max_size=300),
    st.integers(0, 2**32 - 1),
)


def keys_for(i: int) -> vrf.KeyPair:
    return vrf.keygen(hashlib.sha256(b"envoy" + bytes([i])).digest())


class TestCanonicalEncoding:
    def test_empty_payload_is_header_only(self):
        assert len(canonical_encode(CrossChainMessage(1, 2, b"", 3))) == HEADER_SIZE == 20

    def test_layout(self):
        data = canonical_encode(CrossChainMessage(1, 2, b"\xaa", 3))
        assert data == bytes.fromhex("00000001" "0000000000000002" "00000003" "00000001" "aa")

    @given(messages)
    def test_round_trip(self, msg):
        assert canonical_decode(canonical_encode(msg)) == msg

    def test_round_trip_many(self):
        rng = random.Random(1)
        for _ in range(1000):
            msg = CrossChainMessage(
                rng.getrandbits(32), rng.getrandbits(64), rng.randbytes(rng.randrange(64)), rng.getrandbits(32)
            )
            assert canonical_decode(canonical_encode(msg)) == msg

    def test_padding_rules(self):
        data = canonical_encode(CrossChainMessage(1, 2, b"xy", 3))
        assert canonical_decode(data + bytes(5), padded=True).payload == b"xy"
        with pytest.raises(FormatError):
            canonical_decode(data + bytes(5))
        with pytest.raises(FormatError):
            canonical_decode(data + b"\x00\x01", padded=True)

    def test_truncation(self):
        data = canonical_encode(CrossChainMessage(1, 2, b"xyz", 3))
        with pytest.raises(FormatError):
            canonical_decode(data[:-1])
        with pytest.raises(FormatError):
            canonical_decode(data[:10])

    def test_field_range(self):
        with pytest.raises(FormatError):
            canonical_encode(CrossChainMessage(2**32, 0, b""))

    def test_one_byte_changes_the_hash(self):
        a = CrossChainMessage(1, 1, b"payload")
        b = CrossChainMessage(1, 1, b"paylaod")
        assert message_hash(a) != message_hash(b)


@pytest.fixture(scope="module")
def setup():
    params = SortitionParams(100, 0.3, 10**5)
    codec = CodecConfig.for_threshold(100, params.threshold, 200)
    return params, codec


class TestProcessMessage:
    def test_packet_contents(self, setup):
        params, codec = setup
        msg = CrossChainMessage(7, 1, b"hello world", 10)
        k = keys_for(1)
        record = EnvoyRecord(1, k.public_key, 20_000)
        pkt = process_message(msg, k.secret_key, record, params, codec)
        assert pkt is not None
        digest = message_hash(msg)
        assert pkt.message_hash == digest
        assert vrf.verify(k.public_key, digest, vrf.VrfOutput(pkt.vrf_random, pkt.vrf_proof))
        assert pkt.claimed_votes == compute_votes(pkt.vrf_random, 20_000, params)
        assert pkt.symbol_ids == select_symbols(pkt.vrf_random, min(pkt.claimed_votes, 100), 100)
        assert list(pkt.symbols) == encode_symbols(canonical_encode(msg), codec, pkt.symbol_ids)

    def test_deterministic(self, setup):
        params, codec = setup
        msg = CrossChainMessage(7, 2, b"again", 10)
        k = keys_for(2)
        record = EnvoyRecord(2, k.public_key, 50_000)
        a = process_message(msg, k.secret_key, record, params, codec)
        b = process_message(msg, k.secret_key, record, params, codec)
        assert a == b and a.to_bytes() == b.to_bytes()

    def test_abstains_on_zero_votes(self, setup):
        params, codec = setup
        k = keys_for(3)
        record = EnvoyRecord(3, k.public_key, 1)
        silent = 0
        for seq in range(200):
            msg = CrossChainMessage(1, seq, b"m")
            out = vrf.evaluate(k.secret_key, message_hash(msg))
            pkt = process_message(msg, k.secret_key, record, params, codec)
            if compute_votes(out.random, 1, params) == 0:
                assert pkt is None
                silent += 1
        assert silent > 190  # p = 0.001 per token

    def test_votes_above_tau_cap_symbols(self):
        params = SortitionParams(10, 0.3, 20)
        codec = CodecConfig(10, 2, 40)
        k = keys_for(4)
        record = EnvoyRecord(4, k.public_key, 20)
        for seq in range(20):
            pkt = process_message(CrossChainMessage(1, seq, b"big"), k.secret_key, record, params, codec)
            if pkt is not None and pkt.claimed_votes > 10:
                assert pkt.symbol_ids == tuple(range(10))
                return
        pytest.fail("no draw exceeded tau")

    def test_whole_supply_concentrates_near_tau(self):
        params = SortitionParams(200, 0.3, 10**6)
        codec = CodecConfig.for_threshold(200, params.threshold, 100)
        k = keys_for(5)
        record = EnvoyRecord(5, k.public_key, 10**6)
        votes = [
            process_message(CrossChainMessage(1, seq, b"whale"), k.secret_key, record, params, codec).claimed_votes
            for seq in range(1000)
        ]
        mean = sum(votes) / len(votes)
        sd = (200 * (1 - 2e-4) / len(votes)) ** 0.5
        assert abs(mean - 200) < 3 * sd

    def test_oversized_message(self, setup):
        params, codec = setup
        k = keys_for(6)
        with pytest.raises(SizeError):
            process_message(
                CrossChainMessage(1, 1, bytes(codec.capacity)), k.secret_key, EnvoyRecord(6, k.public_key, 5), params, codec
            )


class TestVotePacketWire:
    def test_round_trip(self, setup):
        params, codec = setup
        k = keys_for(7)
        msg = CrossChainMessage(1, 9, b"wire format")
        pkt = process_message(msg, k.secret_key, EnvoyRecord(7, k.public_key, 90_000), params, codec)
        data = pkt.to_bytes()
        assert len(data) == pkt.wire_size
        assert VotePacket.from_bytes(data) == pkt

    def test_empty_symbols(self):
        pkt = VotePacket(1, bytes(32), 5, bytes(80), 0, ())
        assert VotePacket.from_bytes(pkt.to_bytes()) == pkt

    def test_rejects_bad_lengths(self, setup):
        pkt = VotePacket(1, bytes(32), 5, bytes(80), 0, ())
        with pytest.raises(FormatError):
            VotePacket.from_bytes(pkt.to_bytes()[:-1])
        with pytest.raises(FormatError):
            VotePacket.from_bytes(pkt.to_bytes() + b"\x00")


def test_record_rejects_non_positive_stake():
    with pytest.raises(ValueError):
        EnvoyRecord(1, bytes(32), 0)


def test_message_lines_round_trip():
    msgs = [CrossChainMessage(1, i, bytes([i]) * i, 100 + i) for i in range(5)]
    text = "\n".join(write_message(m) for m in msgs) + "\n\n"
    assert list(read_messages(io.StringIO(text))) == msgs


def test_message_lines_errors():
    with pytest.raises(FormatError, match="line 2"):
        list(read_messages(['{"source_chain_id":1,"sequence_number":1,"payload_hex":""}', '{"bad": 1}']))
    with pytest.raises(FormatError):
        list(read_messages(['{"source_chain_id":1,"sequence_number":1,"payload_hex":"zz"}']))
