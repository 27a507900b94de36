"""Monte Carlo check of the vote-sum distributions against the analytic model."""

from __future__ import annotations

import hashlib
import statistics
from dataclasses import dataclass

from .. import vrf
from ..sortition import compute_votes, to_fraction
from .config import ScenarioConfig
from .universe import ADVERSARY, HONEST, build_universe, rng_for

SOURCES = ("prng", "vrf")


@dataclass(frozen=True)
class VoteSumSummary:
    n_trials: int
    source: str
    threshold: int
    honest_stake: int
    adversary_stake: int
    x_h: tuple[int, ...]
    x_a: tuple[int, ...]

    @property
    def y(self) -> tuple[int, ...]:
        return tuple(h - 2 * a for h, a in zip(self.x_h, self.x_a))

    @property
    def shortfall_frequency(self) -> float:
        return sum(x < self.threshold for x in self.x_h) / self.n_trials

    @property
    def adversary_reach_frequency(self) -> float:
        return sum(x >= self.threshold for x in self.x_a) / self.n_trials

    @property
    def supermajority_fail_frequency(self) -> float:
        return sum(v <= 0 for v in self.y) / self.n_trials


@dataclass(frozen=True)
class VoteSumReport:
    summary: VoteSumSummary
    analytic: dict
    empirical: dict
    approximation_valid: bool
    warnings: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "n_trials": self.summary.n_trials,
            "source": self.summary.source,
            "threshold": self.summary.threshold,
            "honest_stake": self.summary.honest_stake,
            "adversary_stake": self.summary.adversary_stake,
            "analytic": self.analytic,
            "empirical": self.empirical,
            "approximation_valid": self.approximation_valid,
            "warnings": list(self.warnings),
        }


def _moments(xs) -> dict:
    return {"mean": statistics.fmean(xs), "variance": statistics.pvariance(xs) if len(xs) > 1 else 0.0}


def vote_sum_experiment(config: ScenarioConfig, n_trials: int, source: str = "prng") -> VoteSumReport:
    """Draw ``n_trials`` independent rounds of votes for every online envoy.

    ``source="prng"`` feeds sortition with seeded 256-bit integers;
    ``source="vrf"`` runs the real VRF on a fresh digest per trial, which is
    slower but exercises the whole envoy-side pipeline.
    """
    if source not in SOURCES:
        raise ValueError(f"source must be one of {SOURCES}")
    if n_trials < 1:
        raise ValueError("n_trials must be positive")
    universe = build_universe(config)
    params = config.params
    honest = universe.cohort(HONEST)
    adversaries = universe.cohort(ADVERSARY)
    rng = rng_for(config.seed, f"vote-sum/{source}")
    seed_bytes = config.seed.to_bytes(8, "big", signed=True)

    def draw(envoys, trial):
        total = 0
        if source == "vrf":
            digest = hashlib.sha256(b"eden/trial" + seed_bytes + trial.to_bytes(8, "big")).digest()
        for e in envoys:
            x = vrf.output(e.keys.secret_key, digest) if source == "vrf" else rng.getrandbits(256)
            total += compute_votes(x, e.stake, params)
        return total

    x_h, x_a = [], []
    for t in range(n_trials):
        x_h.append(draw(honest, t))
        x_a.append(draw(adversaries, t))

    summary = VoteSumSummary(
        n_trials, source, params.threshold, universe.stake_of(HONEST), universe.stake_of(ADVERSARY),
        tuple(x_h), tuple(x_a),
    )
    p = float(params.p)
    s_h, s_a = summary.honest_stake, summary.adversary_stake
    mu_h, mu_a = s_h * p, s_a * p
    var_h, var_a = mu_h * (1 - p), mu_a * (1 - p)
    h, alpha = float(to_fraction(config.h)), float(to_fraction(config.alpha))
    analytic = {
        "x_h": {"mean": mu_h, "variance": var_h},
        "x_a": {"mean": mu_a, "variance": var_a},
        "y": {"mean": mu_h - 2 * mu_a, "variance": var_h + 4 * var_a},
        # closed forms assuming stakes split exactly as h and alpha say
        "y_model": {"mean": (3 * h - 2) * alpha * config.tau, "variance": (4 - 3 * h) * alpha * config.tau},
    }
    empirical = {
        "x_h": _moments(x_h),
        "x_a": _moments(x_a),
        "y": _moments(summary.y),
        "shortfall_frequency": summary.shortfall_frequency,
        "adversary_reach_frequency": summary.adversary_reach_frequency,
        "supermajority_fail_frequency": summary.supermajority_fail_frequency,
    }
    valid = mu_h > 5 and mu_a > 5
    warnings = []
    if not valid:
        warnings.append(
            f"normal approximation outside its validity range (S_h*p={mu_h:.3g}, S_a*p={mu_a:.3g}); "
            "compare against exact binomial tails instead"
        )
    if p >= 0.001:
        warnings.append(f"p={p:.3g} is not small")
    return VoteSumReport(summary, analytic, empirical, valid, tuple(warnings))
