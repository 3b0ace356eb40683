import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smoothltf.cube import (
    ConfigurationError,
    Dataset,
    LabelNoise,
    LinearThresholdFunction,
    PlantedDataConfig,
    ProductDistribution,
    generate_dataset,
)
from smoothltf.regression import (
    FiniteSource,
    InsufficientSamples,
    LearnConfig,
    MonomialBasis,
    PlantedSource,
    PolynomialHypothesis,
    evaluate,
    expand_features,
    fit_once,
    hypothesis_from_dict,
    hypothesis_to_dict,
    learn,
    load_hypothesis,
    save_hypothesis,
    select_threshold,
)
from smoothltf.rng import derive_seed


class TestBasis:
    def test_order_and_size(self):
        b = MonomialBasis(3, 2)
        assert b.monomials == ((), (0,), (1,), (2,), (0, 1), (0, 2), (1, 2))
        assert len(MonomialBasis(10, 3)) == 1 + 10 + 45 + 120

    def test_degree_clipped_to_n(self):
        assert len(MonomialBasis(3, 7)) == 8

    def test_cap(self):
        with pytest.raises(ConfigurationError):
            MonomialBasis(60, 5, cap=1000)

    def test_index(self):
        assert MonomialBasis(4, 2).index({2, 0}) == MonomialBasis(4, 2).monomials.index((0, 2))


class TestFeatures:
    def test_hand_example(self):
        f = expand_features([1, -1, 1], MonomialBasis(3, 2))
        assert list(f) == [1, 1, -1, 1, -1, 1, -1]

    def test_degree_zero(self):
        assert list(expand_features([1, -1], MonomialBasis(2, 0))) == [1]

    def test_all_ones(self):
        assert np.all(expand_features(np.ones((3, 5)), MonomialBasis(5, 3)) == 1)

    @settings(max_examples=30)
    @given(st.lists(st.sampled_from([-1, 1]), min_size=1, max_size=7), st.integers(0, 4))
    def test_products(self, x, d):
        b = MonomialBasis(len(x), d)
        f = expand_features(x, b)
        for j, S in enumerate(b.monomials):
            assert f[j] == np.prod([x[i] for i in S])


def threshold_error(p, y, t):
    return np.mean(np.where(p - t >= 0, 1, -1) != y)


class TestThreshold:
    def test_separable(self):
        p = np.array([-0.8, -0.5, 0.2, 0.9])
        y = np.array([-1, -1, 1, 1])
        assert threshold_error(p, y, select_threshold(p, y)) == 0

    def test_all_positive(self):
        t = select_threshold(np.array([-0.3, 0.1, 0.5]), np.ones(3))
        assert t == -1.0

    @pytest.mark.parametrize("seed", range(10))
    def test_grid_oracle(self, seed):
        rng = np.random.default_rng(seed)
        p = rng.uniform(-1.5, 1.5, 20)
        y = rng.choice([-1, 1], 20)
        t = select_threshold(p, y)
        grid = np.linspace(-1, 1, 10_000)
        best = min(threshold_error(p, y, g) for g in grid)
        assert -1 <= t <= 1
        assert threshold_error(p, y, t) <= best


def loop_error(h, data):
    wrong = 0
    for x, y in data:
        val = sum(c * np.prod([x[i] for i in S]) for c, S in zip(h.coeffs, h.basis.monomials))
        wrong += (1 if val - h.t >= 0 else -1) != y
    return wrong / len(data)


class TestEvaluate:
    def random_h(self, rng, n=5, d=2):
        b = MonomialBasis(n, d)
        return PolynomialHypothesis(b, rng.standard_normal(len(b)), float(rng.uniform(-1, 1)))

    def test_double_implementation(self):
        rng = np.random.default_rng(0)
        h = self.random_h(rng)
        data = Dataset(rng.choice([-1, 1], (100, 5)), rng.choice([-1, 1], 100))
        assert evaluate(h, data) == pytest.approx(loop_error(h, data))

    def test_self_labels_and_flipped(self):
        rng = np.random.default_rng(1)
        h = self.random_h(rng)
        X = rng.choice([-1, 1], (50, 5))
        assert evaluate(h, Dataset(X, h(X))) == 0
        assert evaluate(h, Dataset(X, -h(X))) == 1

    def test_bad_threshold(self):
        with pytest.raises(ValueError):
            PolynomialHypothesis(MonomialBasis(2, 1), np.zeros(3), 1.5)


def planted(n, noise=None):
    return PlantedDataConfig(n, ProductDistribution.uniform(n), LinearThresholdFunction.majority(n),
                             noise or LabelNoise())


class TestLearn:
    def test_degree_zero_predicts_majority_label(self):
        y = np.array([1, 1, 1, -1, 1, -1])
        h, fit = fit_once(Dataset(np.ones((6, 2)), y), MonomialBasis(2, 0))
        assert h.coeffs[0] == 1.0
        assert evaluate(h, Dataset(np.ones((6, 2)), y)) == pytest.approx(2 / 6)

    def test_single_repetition_is_one_run(self):
        cfg = LearnConfig.from_targets(1, 0.1, 0.1, 300, r=1, V=100)
        src = PlantedSource(planted(5, LabelNoise("rcn", 0.1)))
        h = learn(src, cfg, seed=3)
        batch = src.draw(300, derive_seed(3, "batch", 0))
        h1, _ = fit_once(batch, MonomialBasis(5, 1), polish=False)
        assert np.allclose(h.coeffs, h1.coeffs) and h.t == h1.t

    def test_realizable_degree_one(self):
        cfg = LearnConfig.from_targets(1, 0.1, 0.1, 2000, r=3, V=500)
        h = learn(PlantedSource(planted(6)), cfg, seed=0)
        assert h.metadata["train_errors"][h.metadata["chosen"]] == 0
        assert evaluate(h, generate_dataset(planted(6), 5000, seed=99)) <= 0.02

    def test_deterministic(self):
        cfg = LearnConfig.from_targets(2, 0.2, 0.2, 200, r=3, V=100)
        a = learn(PlantedSource(planted(4, LabelNoise("rcn", 0.2))), cfg, seed=5)
        b = learn(PlantedSource(planted(4, LabelNoise("rcn", 0.2))), cfg, seed=5)
        assert np.array_equal(a.coeffs, b.coeffs) and a.metadata == b.metadata

    def test_defaults(self):
        cfg = LearnConfig.from_targets(3, 0.1, 0.1, 5000)
        assert (cfg.r, cfg.V) == (120, 6782)

    def test_basis_too_large(self):
        cfg = LearnConfig.from_targets(3, 0.1, 0.1, 100, r=2, V=10)
        with pytest.raises(ConfigurationError):
            learn(PlantedSource(planted(10)), cfg)

    def test_finite_source_exhausted(self):
        data = generate_dataset(planted(4), 100, seed=1)
        cfg = LearnConfig.from_targets(1, 0.1, 0.1, 40, r=3, V=10)
        with pytest.raises(InsufficientSamples):
            learn(FiniteSource(data, seed=0), cfg)

    def test_finite_source_disjoint(self):
        data = generate_dataset(planted(4), 30, seed=1)
        src = FiniteSource(data, seed=0)
        parts = [src.draw(10) for _ in range(3)]
        assert src.remaining == 0
        rows = {tuple(r) for p in parts for r in np.c_[p.X, p.y]}
        assert rows == {tuple(r) for r in np.c_[data.X, data.y]}


class TestModelIO:
    def test_round_trip(self, tmp_path):
        cfg = LearnConfig.from_targets(2, 0.2, 0.2, 200, r=2, V=100)
        h = learn(PlantedSource(planted(4)), cfg, seed=1)
        path = tmp_path / "m.json"
        save_hypothesis(h, path)
        g = load_hypothesis(path)
        assert np.array_equal(g.coeffs, h.coeffs) and g.t == h.t and g.basis == h.basis
        X = generate_dataset(planted(4), 50, seed=2).X
        assert np.array_equal(g(X), h(X))

    def test_rejects_unknown_schema(self):
        d = hypothesis_to_dict(PolynomialHypothesis(MonomialBasis(2, 1), np.zeros(3), 0.0))
        d["schema"] = "other/9"
        with pytest.raises(ValueError):
            hypothesis_from_dict(json.loads(json.dumps(d)))
