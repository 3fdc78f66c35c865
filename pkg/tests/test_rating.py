import math

import numpy as np
import pytest
from scipy import stats

from semcam.rating import (
    ComparisonRecord,
    Outcome,
    Rating,
    RatingConfig,
    rate_dataset,
    read_comparisons,
    update_draw,
    update_pair,
    write_comparisons,
)


def reference_win_update(mu_w, sigma_w, mu_l, sigma_l, beta, eps=0.0):
    """Win update recomputed from the normal pdf/cdf, independent of the
    package's own v/w helpers."""
    c = math.sqrt(2 * beta ** 2 + sigma_w ** 2 + sigma_l ** 2)
    t = (mu_w - mu_l) / c
    v = stats.norm.pdf(t - eps / c) / stats.norm.cdf(t - eps / c)
    w = v * (v + t - eps / c)
    new_mu_w = mu_w + sigma_w ** 2 / c * v
    new_mu_l = mu_l - sigma_l ** 2 / c * v
    new_sig_w = math.sqrt(sigma_w ** 2 * (1 - sigma_w ** 2 / c ** 2 * w))
    new_sig_l = math.sqrt(sigma_l ** 2 * (1 - sigma_l ** 2 / c ** 2 * w))
    return (new_mu_w, new_sig_w), (new_mu_l, new_sig_l)


def kendall_tau(a, b):
    return stats.kendalltau(a, b).statistic


class TestUpdatePair:
    def test_equal_priors_frozen_values(self):
        cfg = RatingConfig()
        w, l = update_pair(Rating(), Rating(), cfg)
        (mu_w, sig_w), (mu_l, sig_l) = reference_win_update(
            25, 25 / 3, 25, 25 / 3, 25 / 6)
        assert w.mu == pytest.approx(mu_w, abs=1e-9)
        assert w.sigma == pytest.approx(sig_w, abs=1e-9)
        assert l.mu == pytest.approx(mu_l, abs=1e-9)
        assert l.sigma == pytest.approx(sig_l, abs=1e-9)
        # frozen from the reference formulas
        assert w.mu == pytest.approx(29.205, abs=0.005)
        assert w.sigma == pytest.approx(7.195, abs=0.005)
        assert l.mu == pytest.approx(20.795, abs=0.005)

    def test_random_configs_match_reference(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            mu_w, mu_l = rng.normal(25, 8, size=2)
            sig_w, sig_l = rng.uniform(1, 10, size=2)
            beta = rng.uniform(1, 8)
            cfg = RatingConfig(beta=beta)
            w, l = update_pair(Rating(mu_w, sig_w), Rating(mu_l, sig_l), cfg)
            (rmu_w, rsig_w), (rmu_l, rsig_l) = reference_win_update(
                mu_w, sig_w, mu_l, sig_l, beta)
            assert w.mu == pytest.approx(rmu_w, abs=1e-9)
            assert w.sigma == pytest.approx(rsig_w, abs=1e-9)
            assert l.mu == pytest.approx(rmu_l, abs=1e-9)
            assert l.sigma == pytest.approx(rsig_l, abs=1e-9)

    def test_win_moves_means(self):
        w, l = update_pair(Rating(20, 5), Rating(30, 5))
        assert w.mu > 20
        assert l.mu < 30

    def test_sigma_non_increasing(self):
        rng = np.random.default_rng(11)
        for _ in range(30):
            a = Rating(rng.normal(25, 5), rng.uniform(1, 10))
            b = Rating(rng.normal(25, 5), rng.uniform(1, 10))
            w, l = update_pair(a, b)
            assert w.sigma <= a.sigma + 1e-12
            assert l.sigma <= b.sigma + 1e-12

    def test_conservation_at_equal_sigma(self):
        a, b = Rating(20, 6), Rating(31, 6)
        w, l = update_pair(a, b)
        assert w.mu + l.mu == pytest.approx(a.mu + b.mu, abs=1e-9)

    def test_antisymmetric(self):
        a, b = Rating(25, 5), Rating(25, 5)
        w1, l1 = update_pair(a, b)
        w2, l2 = update_pair(b, a)
        assert w1.mu - a.mu == pytest.approx(-(l2.mu - a.mu), abs=1e-12)

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            Rating(float("inf"), 5)
        with pytest.raises(ValueError):
            Rating(25, 0)


class TestUpdateDraw:
    def test_equal_priors_symmetric(self):
        cfg = RatingConfig(epsilon=2.0)
        a0 = Rating()
        a, b = update_draw(a0, a0, cfg)
        assert a.mu == pytest.approx(a0.mu, abs=1e-12)
        assert b.mu == pytest.approx(a0.mu, abs=1e-12)
        assert a.sigma < a0.sigma
        assert b.sigma < a0.sigma

    def test_draw_pulls_means_together(self):
        cfg = RatingConfig(epsilon=1.0)
        a, b = update_draw(Rating(30, 5), Rating(20, 5), cfg)
        assert a.mu < 30
        assert b.mu > 20


class TestRateDataset:
    def test_empty(self):
        table = rate_dataset([])
        assert table.descriptors() == []

    def test_single_comparison(self):
        table = rate_dataset([ComparisonRecord("exciting", "a", "b", Outcome.A_WINS)])
        clips = table.clips("exciting")
        assert set(clips) == {"a", "b"}
        assert clips["a"].mu > clips["b"].mu

    def test_planted_order_recovery(self):
        # clip i beats clip j whenever i > j; 50 clips, 10 rounds of 3
        # random opponents per clip
        n = 50
        rng = np.random.default_rng(1)
        records = []
        for _ in range(10):
            for i in rng.permutation(n):
                for _ in range(3):
                    j = int(rng.integers(n - 1))
                    j = j if j < i else j + 1
                    winner, loser = (int(i), j) if i > j else (j, int(i))
                    records.append(ComparisonRecord(
                        "d", f"c{winner}", f"c{loser}", Outcome.A_WINS))
        table = rate_dataset(records)
        mus = [table.mu("d", f"c{i}") for i in range(n)]
        assert kendall_tau(mus, list(range(n))) >= 0.95

    def test_order_invariance_of_recovery(self):
        n = 30
        base_rng = np.random.default_rng(5)
        records = []
        for _ in range(10):
            for i in range(n):
                for _ in range(3):
                    j = int(base_rng.integers(n - 1))
                    j = j if j < i else j + 1
                    winner, loser = (i, j) if i > j else (j, i)
                    records.append(ComparisonRecord(
                        "d", f"c{winner}", f"c{loser}", Outcome.A_WINS))
        for seed in (1, 2, 3):
            shuffled = list(records)
            np.random.default_rng(seed).shuffle(shuffled)
            table = rate_dataset(shuffled)
            mus = [table.mu("d", f"c{i}") for i in range(n)]
            assert kendall_tau(mus, list(range(n))) >= 0.9


class TestComparisonIo:
    def test_round_trip(self, tmp_path):
        records = [
            ComparisonRecord("exciting", "a", "b", Outcome.A_WINS),
            ComparisonRecord("calm", "c", "d", Outcome.DRAW),
        ]
        path = tmp_path / "cmp.jsonl"
        write_comparisons(records, path)
        assert read_comparisons(path) == records

    def test_table_round_trip(self):
        table = rate_dataset([ComparisonRecord("d", "a", "b", Outcome.B_WINS)])
        doc = table.to_dict()
        assert doc["d"]["b"]["mu"] > doc["d"]["a"]["mu"]

    def test_same_clip_rejected(self):
        with pytest.raises(ValueError):
            ComparisonRecord("d", "a", "a", Outcome.A_WINS)
