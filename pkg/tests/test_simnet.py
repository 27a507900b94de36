import math
from fractions import Fraction

import pytest

from eden.errors import ConfigError
from eden.params import SecurityModel, tail_report
from eden.simnet import (
    ADVERSARY,
    HONEST,
    OFFLINE,
    ScenarioConfig,
    build_universe,
    bundled_scenario,
    config_from_mapping,
    largest_remainder,
    load_config,
    run,
    vote_sum_experiment,
)

SMALL = dict(
    n_envoys=40, stake_distribution="uniform", h=0.8, alpha=0.9, n_messages=4, source_k=16,
    payload_size=64, latency="uniform:1:5", message_deadline=60,
)


def small(**changes) -> ScenarioConfig:
    return config_from_mapping({**SMALL, **changes})


class TestConfig:
    def test_bundled_scenario_loads(self):
        cfg = load_config(bundled_scenario())
        assert (cfg.n_envoys, cfg.h, cfg.alpha, cfg.tau, cfg.theta, cfg.n_messages) == (1000, 0.8, 0.9, 5000, 0.3, 100)
        assert cfg.stake_spec() == ("zipf", 1.0)
        assert cfg.codec.source_k * (1 + 0.15) <= cfg.params.threshold

    def test_unknown_key_is_named(self):
        with pytest.raises(ConfigError) as err:
            config_from_mapping({"n_envoys": 3, "colour": "blue"})
        assert err.value.key == "colour"

    @pytest.mark.parametrize(
        "changes,key",
        [
            ({"adversary_strategy": "bribe"}, "adversary_strategy"),
            ({"latency": "normal:3"}, "latency"),
            ({"latency": "uniform:5:1"}, "latency"),
            ({"stake_distribution": "pareto"}, "stake_distribution"),
            ({"stake_distribution": [1, 2]}, "stake_distribution"),
            ({"h": 1.5}, "h"),
            ({"tau": 100, "source_k": 40}, "source_k"),
            ({"codec_family": "rs"}, "codec_family"),
        ],
    )
    def test_invalid_values(self, changes, key):
        with pytest.raises(ConfigError) as err:
            small(**changes)
        assert err.value.key == key

    def test_toml_file(self, tmp_path):
        path = tmp_path / "s.toml"
        path.write_text('n_envoys = 5\nstake_distribution = [1, 2, 3, 4, 5]\nK = 100\ntau = 10\nsource_k = 2\n')
        cfg = load_config(path)
        assert cfg.stake_spec() == ("explicit", (1, 2, 3, 4, 5))
        path.write_text("n_envoys = = 5")
        with pytest.raises(ConfigError):
            load_config(path)


class TestUniverse:
    def test_largest_remainder(self):
        shares = largest_remainder([Fraction(1)] * 3, 100)
        assert shares == [34, 33, 33]
        assert sum(largest_remainder([Fraction(1, k) for k in range(1, 50)], 10**9)) == 10**9

    def test_all_honest_online(self):
        u = build_universe(small(n_envoys=100, h=1.0, alpha=1.0))
        assert not u.cohort(ADVERSARY) and not u.cohort(OFFLINE)
        assert u.stake_of(HONEST) == 10**9

    def test_partition_close_to_targets(self):
        cfg = ScenarioConfig(n_envoys=1000, h=0.75, alpha=0.6, n_messages=0, source_k=32)
        u = build_universe(cfg)
        max_stake = max(e.stake for e in u.envoys)
        assert abs(u.stake_of(ADVERSARY) - 0.15 * 10**9) <= max_stake
        assert abs(u.stake_of(OFFLINE) - 0.4 * 10**9) <= max_stake
        assert sum(e.stake for e in u.envoys) == 10**9

    def test_deterministic(self):
        assert build_universe(small()).registry == build_universe(small()).registry
        assert build_universe(small()).registry != build_universe(small(seed=1)).registry

    def test_whale_makes_partition_impossible(self):
        cfg = small(n_envoys=3, stake_distribution=[900, 50, 50], K=1000, tau=10, source_k=2, h=0.75, alpha=1.0)
        with pytest.raises(ConfigError) as err:
            build_universe(cfg)
        assert err.value.key == "h"

    def test_too_many_envoys_for_supply(self):
        with pytest.raises(ConfigError):
            build_universe(small(n_envoys=50, K=40, tau=10, source_k=2))


class TestRun:
    def test_honest_messages_commit(self):
        report = run(small())
        agg = report.aggregates
        assert agg["honest_commit_rate"] == 1.0 and agg["forged_commits"] == 0
        assert report.passed
        assert all(m["status"] == "committed" for m in report.messages)
        assert report.adversarial["honest"]["accepted"] == report.adversarial["honest"]["sent"]

    @pytest.mark.parametrize("strategy", ["forge", "inflate", "corrupt-symbols", "replay"])
    def test_strategies(self, strategy):
        report = run(small(adversary_strategy=strategy, h=0.7))
        assert report.aggregates["honest_commit_rate"] == 1.0
        assert report.aggregates["forged_commits"] == 0
        attack = {k: v for k, v in report.adversarial.items() if k != "honest" and v["sent"]}
        assert attack
        if strategy != "forge":
            assert all(v["accepted"] == 0 for v in attack.values())

    def test_late_packets_are_dropped(self):
        report = run(small(latency="fixed:50", message_deadline=10))
        assert report.aggregates["timed_out_messages"] == 4
        assert report.adversarial["honest"]["dropped_late"] == report.adversarial["honest"]["sent"]
        assert not report.passed

    def test_deterministic_and_worker_independent(self):
        cfg = small(adversary_strategy="replay", h=0.7)
        a, b = run(cfg).to_json(), run(cfg).to_json()
        assert a == b
        assert run(cfg, workers=2).to_json() == a

    def test_csv(self):
        report = run(small(n_messages=2))
        lines = report.to_csv().splitlines()
        assert lines[0].startswith("sequence_number,")
        assert len(lines) == 3

    def test_bytes_beat_naive_broadcast_when_symbols_are_scarce(self):
        cfg = small(tau=100)
        n_online = 36
        assert 0.9 * cfg.tau < n_online * cfg.message_size / cfg.codec.symbol_size
        agg = run(cfg).aggregates
        assert agg["eden_symbol_bytes"] < agg["naive_bytes"]

    def test_many_symbols_cost_more_than_broadcast(self):
        # 4500 expected symbols against a 40-envoy committee: slicing cannot win here
        agg = run(small(n_messages=1)).aggregates
        assert agg["eden_to_naive_ratio"] > 1

    def test_low_activity_times_out_as_predicted(self):
        cfg = small(n_envoys=60, h=0.75, alpha=0.35, n_messages=20)
        report = run(cfg)
        predicted = tail_report(SecurityModel(0.75, 0.35, 5000, 0.3)).p_honest_shortfall
        assert predicted > 0.99
        observed = report.aggregates["timed_out_messages"] / 20
        assert abs(observed - predicted) <= 3 * math.sqrt(predicted * (1 - predicted) / 20) + 0.05

    @pytest.mark.slow
    def test_forged_hash_never_reaches_threshold(self):
        cfg = small(n_envoys=20, h=0.75, alpha=0.6, n_messages=1000, adversary_strategy="forge", source_k=8, tau=200)
        report = run(cfg)
        assert report.aggregates["forged_commits"] == 0
        assert report.adversarial["forge"]["sent"] > 0


class TestVoteSum:
    def test_supermajority_mean(self):
        cfg = ScenarioConfig(n_envoys=200, stake_distribution="uniform", h=0.75, alpha=0.6, n_messages=0, source_k=32)
        r = vote_sum_experiment(cfg, 400)
        assert r.analytic["y"]["mean"] == pytest.approx(750)
        se = math.sqrt(r.analytic["y"]["variance"] / 400)
        assert abs(r.empirical["y"]["mean"] - 750) < 3 * se
        assert r.approximation_valid

    def test_no_adversary(self):
        cfg = small(h=1.0)
        r = vote_sum_experiment(cfg, 20)
        assert set(r.summary.x_a) == {0}

    def test_small_regime_warns(self):
        cfg = small(n_envoys=100, tau=100, K=10**6, source_k=20, h=0.97, alpha=0.5)
        r = vote_sum_experiment(cfg, 10)
        assert not r.approximation_valid
        assert any("validity" in w for w in r.warnings)

    def test_vrf_source_agrees_with_prng(self):
        cfg = small(n_envoys=20, K=1000, tau=100, source_k=20, h=0.8, alpha=0.7)
        a = vote_sum_experiment(cfg, 300, source="vrf")
        b = vote_sum_experiment(cfg, 300, source="prng")
        se = math.sqrt(a.analytic["x_h"]["variance"] * 2 / 300)
        assert abs(a.empirical["x_h"]["mean"] - b.empirical["x_h"]["mean"]) < 4 * se
