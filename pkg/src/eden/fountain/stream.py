"""Hash-driven deterministic randomness shared by encoder, envoy and reducer.

Every party must expand the same seed into the same numbers, so nothing here
touches a library RNG whose algorithm could change between versions.
"""

from __future__ import annotations

import hashlib


class HashStream:
    """SHA-256 in counter mode over a domain-separated seed."""

    def __init__(self, domain: bytes, seed: bytes):
        self._prefix = len(domain).to_bytes(2, "big") + domain + seed
        self._counter = 0
        self._buffer = b""

    def read(self, n: int) -> bytes:
        while len(self._buffer) < n:
            block = hashlib.sha256(self._prefix + self._counter.to_bytes(8, "big")).digest()
            self._counter += 1
            self._buffer += block
        out, self._buffer = self._buffer[:n], self._buffer[n:]
        return out

    def below(self, bound: int) -> int:
        """Uniform integer in [0, bound) by rejection on 64-bit words."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        if bound == 1:
            return 0
        limit = (1 << 64) - ((1 << 64) % bound)
        while True:
            word = int.from_bytes(self.read(8), "big")
            if word < limit:
                return word % bound

    def unit_float(self) -> float:
        """Uniform double in [0, 1) with 53 random bits."""
        return (int.from_bytes(self.read(8), "big") >> 11) / float(1 << 53)
