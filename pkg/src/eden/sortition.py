"""Stake-weighted cryptographic sortition.

An envoy holding ``s`` tokens runs one Bernoulli trial per token with success
probability ``p = tau / K``; its vote weight is the number of successes, a
Binomial(s, p) variable.  The weight is drawn by inverting the binomial CDF
at a 256-bit uniform value produced by the envoy's VRF, so anyone holding the
VRF output can recompute it bit-for-bit.

All CDF arithmetic is binary floating point at ``PRECISION`` bits with
round-to-nearest-even (MPFR through gmpy2).  The uniform value stays an exact
integer; the CDF is floored onto the same 2**256 grid before comparison.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import gmpy2

from .errors import DomainError

PRECISION = 160
UNIT_BITS = 256
UNIT_SCALE = 1 << UNIT_BITS
# iteration stops once the accumulated CDF reaches 1 - 2**-128
TAIL_CUTOFF_BITS = 128

_CTX = gmpy2.context(precision=PRECISION, round=gmpy2.RoundToNearest)


def to_fraction(value) -> Fraction:
    """Exact rational view of a user-facing number.

    Floats are read through their shortest decimal repr, so ``0.3`` becomes
    ``3/10`` and ``ceil(0.3 * 100)`` stays 30.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise DomainError(f"non-finite value {value!r}")
        return Fraction(repr(value))
    return Fraction(value)


@dataclass(frozen=True)
class SortitionParams:
    """Selection parameters: ``tau`` expected votes out of ``total_supply`` tokens.

    ``p`` is kept exact as the pair (tau, total_supply).
    """

    tau: int
    theta: Fraction
    total_supply: int

    def __init__(self, tau: int, theta, total_supply: int):
        tau = int(tau)
        total_supply = int(total_supply)
        theta = to_fraction(theta)
        if tau < 1:
            raise DomainError(f"tau must be a positive integer, got {tau}")
        if total_supply <= tau:
            raise DomainError(f"need 0 < p = tau/K < 1, got tau={tau}, K={total_supply}")
        if not 0 < theta < 1:
            raise DomainError(f"theta must lie in (0, 1), got {theta}")
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "total_supply", total_supply)
        if self.p >= Fraction(1, 1000):
            warnings.warn(
                f"p = {float(self.p):.3g} is outside the p < 0.001 regime the "
                "normal-approximation analysis assumes",
                RuntimeWarning,
                stacklevel=2,
            )

    @property
    def p(self) -> Fraction:
        return Fraction(self.tau, self.total_supply)

    @property
    def threshold(self) -> int:
        """Votes required to confirm a message, ``ceil(theta * tau)``."""
        return max(1, math.ceil(self.theta * self.tau))


def _check_p(p: Fraction) -> Fraction:
    p = to_fraction(p)
    if not 0 < p < 1:
        raise DomainError(f"p must lie in (0, 1), got {p}")
    return p


def _pow_by_squaring(base, exponent: int):
    result = gmpy2.mpfr(1)
    while exponent:
        if exponent & 1:
            result = result * base
        exponent >>= 1
        if exponent:
            base = base * base
    return result


@lru_cache(maxsize=4096)
def _zero_mass(s: int, num: int, den: int):
    """``(1 - p)**s`` and the pmf step ratio ``p / (1 - p)`` for p = num/den."""
    with gmpy2.context(_CTX):
        q = gmpy2.mpfr(den - num) / gmpy2.mpfr(den)
        ratio = gmpy2.mpfr(num) / gmpy2.mpfr(den - num)
        return _pow_by_squaring(q, s), ratio


def _cdf_terms(s: int, p: Fraction):
    """Yield ``(k, F(k))`` for k = 0..s, evaluated with the pmf recurrence."""
    pmf, ratio = _zero_mass(s, p.numerator, p.denominator)
    cdf = pmf
    yield 0, cdf
    for j in range(s):
        pmf = pmf * (gmpy2.mpfr(s - j) / gmpy2.mpfr(j + 1)) * ratio
        cdf = cdf + pmf
        yield j + 1, cdf


def binomial_cdf(k: int, s: int, p) -> gmpy2.mpfr:
    """F(k; s, p) = Pr(Binomial(s, p) <= k) at ``PRECISION`` bits."""
    p = _check_p(p)
    if s < 1:
        raise DomainError(f"stake must be positive, got {s}")
    if not 0 <= k <= s:
        raise DomainError(f"k must lie in [0, s], got k={k}, s={s}")
    with gmpy2.context(_CTX):
        for j, cdf in _cdf_terms(s, p):
            if j == k:
                return cdf
    raise AssertionError("unreachable")


def _floor_to_unit_grid(value) -> int:
    # exact: multiplying by a power of two only shifts the exponent
    return int(gmpy2.floor(gmpy2.mul_2exp(value, UNIT_BITS)))


with gmpy2.context(_CTX):
    _CUTOFF = 1 - gmpy2.mul_2exp(gmpy2.mpfr(1), -TAIL_CUTOFF_BITS)


def votes_for_probability(x: int, s: int, p) -> int:
    """Inverse-transform draw from Binomial(s, p) at the unit value ``x / 2**256``.

    Returns the least k with ``x <= floor(F(k) * 2**256)``.  Iteration stops at
    k = s, or once F(k) >= 1 - 2**-128, whichever comes first.
    """
    p = _check_p(p)
    if s < 1:
        raise DomainError(f"stake must be positive, got {s}")
    if not 0 <= x < UNIT_SCALE:
        raise DomainError("unit random must be a 256-bit unsigned integer")
    with gmpy2.context(_CTX):
        for k, cdf in _cdf_terms(s, p):
            if x <= _floor_to_unit_grid(cdf) or cdf >= _CUTOFF:
                return k
    return s


def compute_votes(x: int, s: int, params: SortitionParams) -> int:
    """Vote weight of an envoy with stake ``s`` whose VRF produced ``x``."""
    return votes_for_probability(x, s, params.p)


def expected_votes(s: int, params: SortitionParams) -> Fraction:
    """Mean vote weight ``s * p``, exact."""
    if s < 1:
        raise DomainError(f"stake must be positive, got {s}")
    return s * params.p


def unit_random_from_bytes(data: bytes) -> int:
    """Read 32 bytes as a big-endian unsigned integer on the 2**256 grid."""
    if len(data) != UNIT_BITS // 8:
        raise DomainError(f"expected {UNIT_BITS // 8} bytes, got {len(data)}")
    return int.from_bytes(data, "big")
