"""Stake-weighted cross-chain message relay with sortition, VRF proofs and fountain-coded payloads."""

from .envoy import (
    CrossChainMessage,
    EnvoyRecord,
    VotePacket,
    canonical_decode,
    canonical_encode,
    message_hash,
    process_message,
)
from .errors import ConfigError, DomainError, EdenError, FormatError, KeyMaterialError, SizeError
from .fountain import CodecConfig, EncodedSymbol, decode, encode, select_symbols
from .params import SecurityModel, feasibility, tail_report, tau_min, theta_max_honest, theta_min_adversary
from .reducer import Reducer, StakeRegistry, finalize_status, handle_packet
from .sortition import SortitionParams, compute_votes
from .vrf import KeyPair, VrfOutput, evaluate, keygen, verify

__version__ = "0.1.0"

__all__ = [
    "CodecConfig", "ConfigError", "CrossChainMessage", "DomainError", "EdenError", "EncodedSymbol",
    "EnvoyRecord", "FormatError", "KeyMaterialError", "KeyPair", "Reducer", "SecurityModel",
    "SizeError", "SortitionParams", "StakeRegistry", "VotePacket", "VrfOutput", "canonical_decode",
    "canonical_encode", "compute_votes", "decode", "encode", "evaluate", "feasibility",
    "finalize_status", "handle_packet", "keygen", "message_hash", "process_message",
    "select_symbols", "tail_report", "tau_min", "theta_max_honest", "theta_min_adversary", "verify",
]
