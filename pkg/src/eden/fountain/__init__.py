"""Fountain-coded message slicing."""

from .codec import (
    DEFAULT_EPSILON,
    FAMILIES,
    CodecConfig,
    EncodedSymbol,
    decode,
    encode,
    encode_symbols,
    select_symbols,
)

__all__ = [
    "DEFAULT_EPSILON",
    "FAMILIES",
    "CodecConfig",
    "EncodedSymbol",
    "decode",
    "encode",
    "encode_symbols",
    "select_symbols",
]
