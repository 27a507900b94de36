"""Scenario configuration: a flat key/value TOML file mapped onto ScenarioConfig."""

from __future__ import annotations

import dataclasses
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from ..envoy import HEADER_SIZE
from ..errors import ConfigError, EdenError
from ..fountain import FAMILIES, CodecConfig
from ..sortition import SortitionParams, to_fraction

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

STRATEGIES = ("none", "forge", "inflate", "corrupt-symbols", "replay")


@dataclass(frozen=True)
class ScenarioConfig:
    seed: int = 0
    n_envoys: int = 1000
    stake_distribution: str | tuple[int, ...] = "zipf:1.0"
    K: int = 10**9
    h: float = 0.8
    alpha: float = 0.9
    tau: int = 5000
    theta: float = 0.3
    source_k: int | None = None
    symbol_size: int | None = None
    overhead_epsilon: float = 0.15
    codec_family: str = "gf256"
    n_messages: int = 100
    payload_size: int = 256
    adversary_strategy: str = "none"
    latency: str = "uniform:1:20"
    message_interval: int = 5
    message_deadline: int = 200
    expected_commit_rate: float = 1.0
    notes: str = field(default="", compare=False)

    def __post_init__(self):
        if self.n_envoys < 1:
            raise ConfigError("n_envoys must be positive", key="n_envoys")
        if self.n_messages < 0:
            raise ConfigError("n_messages cannot be negative", key="n_messages")
        if not 0 <= to_fraction(self.h) <= 1:
            raise ConfigError("h must lie in [0, 1]", key="h")
        if not 0 < to_fraction(self.alpha) <= 1:
            raise ConfigError("alpha must lie in (0, 1]", key="alpha")
        if self.adversary_strategy not in STRATEGIES:
            raise ConfigError(
                f"adversary_strategy must be one of {', '.join(STRATEGIES)}",
                key="adversary_strategy",
            )
        if self.codec_family not in FAMILIES:
            raise ConfigError(f"codec_family must be one of {FAMILIES}", key="codec_family")
        if self.payload_size < 0:
            raise ConfigError("payload_size cannot be negative", key="payload_size")
        if self.message_deadline < 0 or self.message_interval < 0:
            raise ConfigError("ticks cannot be negative", key="message_deadline")
        if not 0 <= self.expected_commit_rate <= 1:
            raise ConfigError("expected_commit_rate must lie in [0, 1]", key="expected_commit_rate")
        self.stake_spec()
        self.latency_spec()
        try:
            self.params
        except EdenError as exc:
            raise ConfigError(str(exc), key="tau") from None
        self.codec

    @property
    def params(self) -> SortitionParams:
        return SortitionParams(self.tau, self.theta, self.K)

    @property
    def message_size(self) -> int:
        return HEADER_SIZE + self.payload_size

    @property
    def codec(self) -> CodecConfig:
        params = self.params
        if self.symbol_size is not None:
            k = self.source_k or CodecConfig.for_threshold(
                self.tau, params.threshold, None, self.overhead_epsilon
            ).source_k
            codec = CodecConfig(self.tau, k, self.symbol_size, self.overhead_epsilon, self.codec_family)
            codec.check_threshold(params.threshold)
        else:
            codec = CodecConfig.for_threshold(
                self.tau, params.threshold, self.message_size, self.overhead_epsilon,
                self.source_k, self.codec_family,
            )
        if codec.capacity < self.message_size:
            raise ConfigError(
                f"codec capacity {codec.capacity} is smaller than the {self.message_size}-byte message",
                key="symbol_size",
            )
        return codec

    def stake_spec(self) -> tuple[str, Any]:
        spec = self.stake_distribution
        if isinstance(spec, (list, tuple)):
            stakes = tuple(int(s) for s in spec)
            if len(stakes) != self.n_envoys:
                raise ConfigError(
                    f"explicit stake list has {len(stakes)} entries for {self.n_envoys} envoys",
                    key="stake_distribution",
                )
            return "explicit", stakes
        if spec == "uniform":
            return "uniform", None
        kind, _, arg = spec.partition(":")
        if kind == "zipf":
            try:
                exponent = float(arg or "1.0")
            except ValueError:
                raise ConfigError(f"bad zipf exponent {arg!r}", key="stake_distribution") from None
            return "zipf", exponent
        if kind == "explicit":
            return "explicit", self._explicit(arg)
        raise ConfigError(f"unknown stake distribution {spec!r}", key="stake_distribution")

    def _explicit(self, arg: str) -> tuple[int, ...]:
        try:
            stakes = tuple(int(v) for v in arg.split(","))
        except ValueError:
            raise ConfigError("explicit stakes must be integers", key="stake_distribution") from None
        if len(stakes) != self.n_envoys:
            raise ConfigError(
                f"explicit stake list has {len(stakes)} entries for {self.n_envoys} envoys",
                key="stake_distribution",
            )
        return stakes

    def latency_spec(self) -> tuple[int, int]:
        """(lo, hi) inclusive tick range of per-packet delay."""
        kind, _, arg = self.latency.partition(":")
        try:
            if kind == "fixed":
                d = int(arg)
                lo, hi = d, d
            elif kind == "uniform":
                a, b = arg.split(":")
                lo, hi = int(a), int(b)
            else:
                raise ValueError
        except ValueError:
            raise ConfigError(f"bad latency model {self.latency!r}", key="latency") from None
        if lo < 0 or hi < lo:
            raise ConfigError(f"bad latency range {self.latency!r}", key="latency")
        return lo, hi

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        if isinstance(self.stake_distribution, tuple):
            d["stake_distribution"] = list(self.stake_distribution)
        d.pop("notes")
        return d

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)


_FIELDS = {f.name: f for f in dataclasses.fields(ScenarioConfig)}


def config_from_mapping(data: dict) -> ScenarioConfig:
    """Build a config from flat keys; unknown keys are errors."""
    kwargs = {}
    for key, value in data.items():
        if key not in _FIELDS:
            raise ConfigError(f"unknown configuration key {key!r}", key=key)
        if key == "stake_distribution" and isinstance(value, list):
            value = tuple(value)
        kwargs[key] = value
    try:
        return ScenarioConfig(**kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid configuration: {exc}") from None


def load_config(path: str | Path) -> ScenarioConfig:
    text = Path(path).read_text()
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: not a valid key/value file ({exc})") from None
    return config_from_mapping(data)


def bundled_scenario(name: str = "default") -> Path:
    return Path(__file__).resolve().parent.parent / "scenarios" / f"{name}.toml"
