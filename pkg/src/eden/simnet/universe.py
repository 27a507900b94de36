"""Envoy population: keys, stakes and the honest / adversary / offline split."""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass
from fractions import Fraction

from .. import vrf
from ..envoy import EnvoyRecord
from ..errors import ConfigError
from ..reducer import StakeRegistry
from ..sortition import to_fraction
from .config import ScenarioConfig

HONEST = "honest"
ADVERSARY = "adversary"
OFFLINE = "offline"


@dataclass(frozen=True)
class Envoy:
    envoy_id: int
    keys: vrf.KeyPair
    stake: int
    role: str

    @property
    def record(self) -> EnvoyRecord:
        return EnvoyRecord(self.envoy_id, self.keys.public_key, self.stake)


@dataclass(frozen=True)
class Universe:
    envoys: tuple[Envoy, ...]
    registry: StakeRegistry

    def cohort(self, role: str) -> tuple[Envoy, ...]:
        return tuple(e for e in self.envoys if e.role == role)

    def stake_of(self, role: str) -> int:
        return sum(e.stake for e in self.envoys if e.role == role)


def rng_for(seed: int, purpose: str) -> random.Random:
    """Independent, reproducible stream per purpose (string seeds hash via SHA-512)."""
    return random.Random(f"eden/sim/{seed}/{purpose}")


def envoy_keys(seed: int, envoy_id: int) -> vrf.KeyPair:
    material = hashlib.sha256(
        b"eden/sim/key" + seed.to_bytes(8, "big", signed=True) + envoy_id.to_bytes(4, "big")
    ).digest()
    return vrf.keygen(material)


def largest_remainder(weights: list[Fraction], total: int) -> list[int]:
    """Integer apportionment of ``total`` proportional to ``weights``.

    Leftover units go to the largest fractional parts, lower index first on ties.
    """
    wsum = sum(weights)
    if wsum <= 0:
        raise ConfigError("stake weights must have a positive sum", key="stake_distribution")
    quotas = [w * total / wsum for w in weights]
    shares = [q.numerator // q.denominator for q in quotas]
    leftover = total - sum(shares)
    order = sorted(range(len(weights)), key=lambda i: (-(quotas[i] - shares[i]), i))
    for i in order[:leftover]:
        shares[i] += 1
    return shares


def stake_vector(config: ScenarioConfig, rng: random.Random) -> list[int]:
    kind, arg = config.stake_spec()
    n = config.n_envoys
    if kind == "explicit":
        stakes = list(arg)
        if sum(stakes) > config.K:
            raise ConfigError("explicit stakes exceed the total supply K", key="stake_distribution")
    elif kind == "uniform":
        stakes = largest_remainder([Fraction(1)] * n, config.K)
    else:
        ranks = list(range(1, n + 1))
        rng.shuffle(ranks)
        stakes = largest_remainder([Fraction(r ** -arg) for r in ranks], config.K)
    if min(stakes) < 1:
        raise ConfigError(
            f"some envoy ends up with zero stake; K={config.K} is too small for "
            f"{n} envoys under {config.stake_distribution!r}",
            key="stake_distribution",
        )
    return stakes


def _fill(order: list[int], stakes: list[int], target: Fraction, taken: set[int]) -> list[int]:
    """Greedy: take envoys in ``order`` while they still fit under ``target``."""
    chosen, acc = [], 0
    for i in order:
        if i in taken:
            continue
        if acc + stakes[i] <= target:
            chosen.append(i)
            acc += stakes[i]
    return chosen


def _check_fill(role: str, key: str, target: Fraction, chosen: list[int], stakes: list[int]) -> None:
    # tolerance: one member's worth of stake (or the smallest stake when empty)
    tolerance = max((stakes[i] for i in chosen), default=min(stakes))
    gap = target - sum(stakes[i] for i in chosen)
    if gap > tolerance:
        raise ConfigError(
            f"cannot assign {float(target):.0f} stake to the {role} cohort: the best greedy "
            f"fill misses by {float(gap):.0f}, more than one envoy's stake ({tolerance})",
            key=key,
        )


def build_universe(config: ScenarioConfig) -> Universe:
    rng = rng_for(config.seed, "universe")
    stakes = stake_vector(config, rng)
    order = list(range(config.n_envoys))
    rng.shuffle(order)

    h, alpha = to_fraction(config.h), to_fraction(config.alpha)
    supply = sum(stakes)
    adv_target = (1 - h) * alpha * supply
    off_target = (1 - alpha) * supply

    adversaries = _fill(order, stakes, adv_target, set())
    _check_fill(ADVERSARY, "h", adv_target, adversaries, stakes)
    offline = _fill(order, stakes, off_target, set(adversaries))
    _check_fill(OFFLINE, "alpha", off_target, offline, stakes)

    roles = [HONEST] * config.n_envoys
    for i in adversaries:
        roles[i] = ADVERSARY
    for i in offline:
        roles[i] = OFFLINE
    if HONEST not in roles:
        raise ConfigError("no honest envoy left after the split", key="h")

    envoys = tuple(
        Envoy(i, envoy_keys(config.seed, i), stakes[i], roles[i]) for i in range(config.n_envoys)
    )
    registry = StakeRegistry.from_records([e.record for e in envoys], config.K)
    return Universe(envoys, registry)
