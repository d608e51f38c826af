import math
from collections import Counter

import numpy as np
import pytest

from poinames.corpus import build_vocabulary
from poinames.embed import (
    EmbeddingConfig,
    NoiseDistribution,
    build_training_pairs,
    load_model,
    pair_gradients,
    pair_loss,
    sample_negatives,
    save_model,
    sigmoid,
    train,
)
from poinames.errors import EmptyCorpusError

from conftest import corpora_from

LN2 = math.log(2.0)

# two regions with identical name multisets plus one disjoint region
SEPARATION_NAMES = {
    "alpha": ["desert pizza", "desert spa", "cactus grill"],
    "beta": ["desert pizza", "desert spa", "cactus grill"],
    "gamma": ["harbor oyster", "pier chowder", "lighthouse bar"],
}


def toy_setup(names=None):
    corpora = corpora_from(names or SEPARATION_NAMES)
    vocab = build_vocabulary(corpora.values())
    pairs = build_training_pairs(corpora)
    return corpora, vocab, pairs


class TestSigmoid:
    def test_midpoint(self):
        assert sigmoid(0.0) == 0.5

    def test_complement_identity(self):
        rng = np.random.default_rng(21)
        for x in rng.uniform(-50, 50, size=100):
            assert sigmoid(float(x)) + sigmoid(float(-x)) == pytest.approx(1.0, abs=1e-12)

    def test_extreme_arguments_no_overflow(self):
        assert sigmoid(710.0) == 1.0
        assert sigmoid(-710.0) == pytest.approx(0.0, abs=1e-300)
        assert 0.0 <= sigmoid(-1e6) <= sigmoid(1e6) <= 1.0


class TestBuildTrainingPairs:
    def test_one_pair_per_token(self):
        pairs = build_training_pairs(corpora_from({"a": ["desert pizza"]}))
        assert [(p.region_id, p.word) for p in pairs] == [("a", "desert"), ("a", "pizza")]

    def test_duplicate_names_keep_duplicate_pairs(self):
        pairs = build_training_pairs(corpora_from({"a": ["spot", "spot"]}))
        assert len(pairs) == 2

    def test_counts(self):
        pairs = build_training_pairs(corpora_from({"a": ["x y z"], "b": ["p q r"]}))
        assert len(pairs) == 6

    def test_empty(self):
        with pytest.raises(EmptyCorpusError):
            build_training_pairs(corpora_from({"a": []}))


class TestNegativeSampling:
    def test_restricted_to_unused_terms(self):
        corpora = corpora_from({"a": ["aa bb"], "b": ["cc dd"]})
        vocab = build_vocabulary(corpora.values())
        noise = NoiseDistribution.from_corpora(corpora, vocab)
        rng = np.random.default_rng(0)
        for _ in range(50):
            drawn = sample_negatives("a", "aa", 2, noise, rng)
            assert set(drawn) <= {"cc", "dd"}

    def test_sample_count(self):
        corpora = corpora_from({"a": ["aa"], "b": ["cc dd"]})
        vocab = build_vocabulary(corpora.values())
        noise = NoiseDistribution.from_corpora(corpora, vocab)
        assert len(sample_negatives("a", "aa", 5, noise, np.random.default_rng(1))) == 5

    def test_deterministic_given_seed(self):
        corpora = corpora_from({"a": ["aa bb"], "b": ["cc dd ee ff"]})
        vocab = build_vocabulary(corpora.values())
        noise = NoiseDistribution.from_corpora(corpora, vocab)
        first = [sample_negatives("a", "aa", 3, noise, np.random.default_rng(9)) for _ in range(5)]
        second = [sample_negatives("a", "aa", 3, noise, np.random.default_rng(9)) for _ in range(5)]
        assert first == second

    def test_fallback_when_region_uses_whole_vocabulary(self, caplog):
        corpora = corpora_from({"a": ["aa bb cc"], "b": ["aa bb"]})
        vocab = build_vocabulary(corpora.values())
        noise = NoiseDistribution.from_corpora(corpora, vocab)
        rng = np.random.default_rng(2)
        with caplog.at_level("WARNING"):
            drawn = sample_negatives("a", "aa", 50, noise, rng)
        assert "entire vocabulary" in caplog.text
        assert "aa" not in drawn
        assert set(drawn) <= {"bb", "cc"}

    def test_empirical_frequencies_match_powered_unigram(self):
        # region "a" leaves {cc (count 8), dd (count 1)} as candidates
        corpora = corpora_from({"a": ["aa"], "b": ["cc " * 8 + "dd"]})
        vocab = build_vocabulary(corpora.values())
        noise = NoiseDistribution.from_corpora(corpora, vocab)
        rng = np.random.default_rng(3)
        draws = noise.sample_indices("a", 1_000_000, rng)
        counts = Counter(vocab.terms[int(i)] for i in draws)
        w_cc, w_dd = 8.0**0.75, 1.0**0.75
        expected_cc = w_cc / (w_cc + w_dd)
        expected_dd = w_dd / (w_cc + w_dd)
        assert counts["cc"] / 1e6 == pytest.approx(expected_cc, rel=0.01)
        assert counts["dd"] / 1e6 == pytest.approx(expected_dd, rel=0.01)
        assert counts["aa"] == 0


class TestPairLoss:
    def test_zero_vectors(self):
        d, k = 8, 5
        loss = pair_loss(np.zeros(d), np.zeros(d), np.zeros((k, d)))
        assert loss == pytest.approx(6 * LN2, rel=1e-12)

    def test_limit_toward_zero(self):
        r = np.array([50.0])
        w_o = np.array([1.0])
        negatives = np.array([[-1.0], [-1.0]])
        assert pair_loss(r, w_o, negatives) < 1e-9

    def test_matches_direct_recomputation(self):
        rng = np.random.default_rng(31)
        for _ in range(50):
            d = int(rng.integers(1, 11))
            k = int(rng.integers(1, 6))
            r = rng.normal(scale=2.0, size=d)
            w_o = rng.normal(scale=2.0, size=d)
            negatives = rng.normal(scale=2.0, size=(k, d))
            expected = -math.log(1.0 / (1.0 + math.exp(-float(w_o @ r))))
            for row in negatives:
                expected -= math.log(1.0 / (1.0 + math.exp(float(row @ r))))
            assert pair_loss(r, w_o, negatives) == pytest.approx(expected, rel=1e-12)

    def test_positive_for_finite_vectors(self):
        rng = np.random.default_rng(32)
        for _ in range(20):
            loss = pair_loss(rng.normal(size=4), rng.normal(size=4), rng.normal(size=(3, 4)))
            assert loss > 0.0


class TestPairGradients:
    def test_zero_vectors_give_zero_gradients(self):
        d, k = 6, 3
        grad_r, grad_wo, grad_negs = pair_gradients(np.zeros(d), np.zeros(d), np.zeros((k, d)))
        assert not grad_r.any() and not grad_wo.any() and not grad_negs.any()

    def test_finite_differences(self):
        rng = np.random.default_rng(33)
        h = 1e-5
        for _ in range(100):
            d = int(rng.integers(2, 11))
            k = int(rng.integers(1, 6))
            r = rng.normal(scale=0.8, size=d)
            w_o = rng.normal(scale=0.8, size=d)
            negatives = rng.normal(scale=0.8, size=(k, d))
            grad_r, grad_wo, grad_negs = pair_gradients(r, w_o, negatives)

            def check(analytic, bump):
                num = (pair_loss(*bump(+h)) - pair_loss(*bump(-h))) / (2 * h)
                assert analytic == pytest.approx(num, rel=1e-5, abs=1e-8)

            for i in range(d):
                e = np.zeros(d); e[i] = 1.0
                check(grad_r[i], lambda s, e=e: (r + s * e, w_o, negatives))
                check(grad_wo[i], lambda s, e=e: (r, w_o + s * e, negatives))
            for j in range(k):
                for i in range(d):
                    bump_neg = np.zeros((k, d)); bump_neg[j, i] = 1.0
                    check(grad_negs[j, i], lambda s, b=bump_neg: (r, w_o, negatives + s * b))

    def test_flipping_r_flips_positive_word_gradient_direction(self):
        rng = np.random.default_rng(34)
        r = rng.normal(size=5)
        w_o = rng.normal(size=5)
        negatives = rng.normal(size=(2, 5))
        _, grad_wo, _ = pair_gradients(r, w_o, negatives)
        _, grad_wo_flipped, _ = pair_gradients(-r, w_o, negatives)
        assert float(grad_wo @ r) < 0.0  # gradient descends along +r
        assert float(grad_wo_flipped @ r) > 0.0

    def test_one_descent_step_reduces_loss(self):
        rng = np.random.default_rng(35)
        r = rng.normal(scale=0.5, size=6)
        w_o = rng.normal(scale=0.5, size=6)
        negatives = rng.normal(scale=0.5, size=(4, 6))
        before = pair_loss(r, w_o, negatives)
        grad_r, grad_wo, grad_negs = pair_gradients(r, w_o, negatives)
        step = 1e-3
        after = pair_loss(r - step * grad_r, w_o - step * grad_wo, negatives - step * grad_negs)
        assert after < before


class TestTrain:
    def test_bit_reproducible(self, tmp_path):
        _, vocab, pairs = toy_setup()
        config = EmbeddingConfig(dimension=8, epochs=5, seed=123)
        model_a = train(pairs, vocab, config)
        model_b = train(pairs, vocab, config)
        path_a, path_b = tmp_path / "a.txt", tmp_path / "b.txt"
        save_model(model_a, path_a)
        save_model(model_b, path_b)
        assert path_a.read_bytes() == path_b.read_bytes()

    def test_different_seeds_differ(self):
        _, vocab, pairs = toy_setup()
        m1 = train(pairs, vocab, EmbeddingConfig(dimension=8, epochs=2, seed=1))
        m2 = train(pairs, vocab, EmbeddingConfig(dimension=8, epochs=2, seed=2))
        assert any(
            not np.array_equal(m1.region_vectors[r], m2.region_vectors[r])
            for r in m1.region_vectors
        )

    def test_loss_trend_on_toy_corpus(self):
        _, vocab, pairs = toy_setup()
        model = train(pairs, vocab, EmbeddingConfig(dimension=16, epochs=40, seed=5))
        losses = model.epoch_losses
        assert model.final_loss == losses[-1]
        second_half = losses[len(losses) // 2 :]
        for prev, cur in zip(second_half, second_half[1:]):
            assert cur <= prev * 1.05  # allow 5% jitter

    def test_identical_regions_end_up_closer_than_disjoint(self):
        _, vocab, pairs = toy_setup()
        model = train(pairs, vocab, EmbeddingConfig(dimension=16, epochs=200, seed=0))
        r1, r2, r3 = (model.region_vectors[k] for k in ("alpha", "beta", "gamma"))
        cos = lambda a, b: float(a @ b / (np.linalg.norm(a) * np.linalg.norm(b)))
        assert cos(r1, r2) > cos(r1, r3)

    def test_all_vectors_finite(self):
        _, vocab, pairs = toy_setup()
        model = train(pairs, vocab, EmbeddingConfig(dimension=8, epochs=3, seed=8))
        for v in list(model.region_vectors.values()) + list(model.word_vectors.values()):
            assert np.isfinite(v).all()

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_divergence_aborts_with_diagnostic(self):
        _, vocab, pairs = toy_setup()
        config = EmbeddingConfig(dimension=8, epochs=3, seed=0, learning_rate=1e300)
        with pytest.raises(RuntimeError, match="learning rate"):
            train(pairs, vocab, config)

    def test_vocabulary_mismatch(self):
        corpora = corpora_from({"a": ["xx yy"], "b": ["zz"]})
        pairs = build_training_pairs(corpora)
        vocab = build_vocabulary(corpora_from({"a": ["xx"]}).values())
        with pytest.raises(ValueError, match="vocabulary mismatch"):
            train(pairs, vocab, EmbeddingConfig(dimension=4))

    def test_empty_pairs(self):
        _, vocab, _ = toy_setup()
        with pytest.raises(EmptyCorpusError):
            train([], vocab, EmbeddingConfig(dimension=4))


class TestConfigValidation:
    @pytest.mark.parametrize(
        "kwargs",
        [
            {"dimension": 0},
            {"negatives": 0},
            {"learning_rate": 0.0},
            {"final_learning_rate": -1.0},
            {"epochs": 0},
        ],
    )
    def test_rejects_bad_values(self, kwargs):
        with pytest.raises(ValueError):
            EmbeddingConfig(**kwargs)


class TestModelPersistence:
    def test_round_trip_is_exact(self, tmp_path):
        _, vocab, pairs = toy_setup()
        model = train(pairs, vocab, EmbeddingConfig(dimension=8, epochs=2, seed=77))
        path = tmp_path / "model.txt"
        save_model(model, path)
        loaded = load_model(path)
        assert loaded.config.dimension == 8
        assert loaded.config.seed == 77
        for region, v in model.region_vectors.items():
            assert np.array_equal(loaded.region_vectors[region], v)
        for term, v in model.word_vectors.items():
            assert np.array_equal(loaded.word_vectors[term], v)
        resaved = tmp_path / "resaved.txt"
        save_model(loaded, resaved)
        assert resaved.read_bytes() == path.read_bytes()

    def test_malformed_header(self, tmp_path):
        path = tmp_path / "model.txt"
        path.write_text("not a header\n")
        with pytest.raises(ValueError, match="header"):
            load_model(path)

    def test_count_mismatch(self, tmp_path):
        path = tmp_path / "model.txt"
        path.write_text("dim=2\twords=5\tregions=1\tseed=0\tvariant=sgns\nr\ta\t0 0\n")
        with pytest.raises(ValueError, match="promises"):
            load_model(path)
