"""Classifier training, evaluation metrics, serialization, and the sweep."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from slidscan.earlywarn import (
    ClassifierKind,
    CorpusBundle,
    DEFAULT_HYPER_GRID,
    DimensionMismatch,
    SingleClassInput,
    confusion_counts,
    load_model,
    metrics_from_confusion,
    predict,
    prepare_windows,
    save_model,
    stratified_split,
    sweep,
    train,
    window_speedup,
)
from slidscan.features import FEATURE_COUNT, FeatureVector
from slidscan.synth import ScenarioKind, build_corpus


def toy_separable(n=60, noise=0.0, seed=0):
    """Two clusters at feature0 = 0 and 1, trivially separable at noise 0."""
    rng = np.random.default_rng(seed)
    X = rng.normal(0.0, 0.05 + noise, size=(n, 4))
    y = np.zeros(n, dtype=np.int64)
    y[n // 2:] = 1
    X[n // 2:, 0] += 1.0
    return X, y


def as_vectors(X, y):
    return [FeatureVector(pool_address=f"0x{i:040x}", window_days=57,
                          values=np.pad(np.asarray(row, dtype=np.float64),
                                        (0, FEATURE_COUNT - len(row))),
                          missing=np.zeros(FEATURE_COUNT, dtype=bool),
                          label=bool(label))
            for i, (row, label) in enumerate(zip(X, y))]


class TestTrain:
    @pytest.mark.parametrize("kind", list(ClassifierKind))
    def test_perfectly_separable_reaches_unit_f1(self, kind):
        X, y = toy_separable()
        model = train((X, y), kind, seed=1)
        pred = model.scores(X) >= model.threshold
        tp, fp, tn, fn = confusion_counts(y == 1, pred)
        assert metrics_from_confusion(tp, fp, tn, fn, 0, kind.value).f1 == 1.0

    def test_identical_rows_fall_back_to_majority(self):
        X = np.ones((10, 3))
        y = np.array([1, 1, 1, 1, 1, 1, 0, 0, 0, 0])
        with pytest.warns(UserWarning, match="SingleSignal"):
            model = train((X, y), ClassifierKind.LOGISTIC_REGRESSION)
        assert model.majority_label is True
        assert np.all(model.scores(X) == 1.0)

    def test_single_class_rejected(self):
        X = np.random.default_rng(0).normal(size=(10, 3))
        with pytest.raises(SingleClassInput):
            train((X, np.ones(10, dtype=np.int64)), ClassifierKind.RANDOM_FOREST)

    def test_dimension_mismatch_on_predict(self):
        X, y = toy_separable()
        model = train((X, y), ClassifierKind.LOGISTIC_REGRESSION)
        with pytest.raises(DimensionMismatch):
            model.scores(np.zeros((2, 9)))

    def test_grid_search_selects_from_grid(self):
        X, y = toy_separable(n=80, noise=0.2, seed=3)
        grid = DEFAULT_HYPER_GRID[ClassifierKind.LOGISTIC_REGRESSION]
        model = train((X, y), ClassifierKind.LOGISTIC_REGRESSION, seed=0,
                      hyper_grid=grid)
        assert model.hyperparameters["learning_rate"] in grid["learning_rate"]
        assert model.hyperparameters["l2"] in grid["l2"]

    def test_class_weights_inverse_to_frequency(self):
        X, y = toy_separable(n=100)
        y = np.zeros(100, dtype=np.int64)
        y[:10] = 1
        X[:10, 0] += 1.0
        model = train((X, y), ClassifierKind.LOGISTIC_REGRESSION)
        w0, w1 = model.class_weights
        assert w1 / w0 == pytest.approx(90 / 10)


class TestPredict:
    def test_separable_regions_and_determinism(self):
        X, y = toy_separable()
        model = train(as_vectors(X, y), ClassifierKind.RANDOM_FOREST, seed=2)
        positive = as_vectors(np.array([[1.0, 0, 0, 0]]), [1])[0]
        negative = as_vectors(np.array([[0.0, 0, 0, 0]]), [0])[0]
        label_pos, score_pos = predict(model, positive)
        label_neg, score_neg = predict(model, negative)
        assert label_pos is True and score_pos > 0.5
        assert label_neg is False
        assert predict(model, positive) == (label_pos, score_pos)


class TestMetricsIdentities:
    @given(st.integers(0, 500), st.integers(0, 500), st.integers(0, 500),
           st.integers(0, 500))
    @settings(max_examples=100, deadline=None)
    def test_confusion_identities(self, tp, fp, tn, fn):
        m = metrics_from_confusion(tp, fp, tn, fn, 57, "x")
        total = tp + fp + tn + fn
        if total:
            assert m.accuracy * total == pytest.approx(tp + tn)
        if m.precision + m.recall > 0:
            assert m.f1 == pytest.approx(
                2 * m.precision * m.recall / (m.precision + m.recall))
        else:
            assert m.f1 == 0.0
        assert m.confusion == (tp, fp, tn, fn)


class TestSerialization:
    @pytest.mark.parametrize("kind", list(ClassifierKind))
    def test_round_trip_preserves_predictions(self, tmp_path, kind):
        X, y = toy_separable(n=80, noise=0.3, seed=7)
        model = train((X, y), kind, seed=5)
        path = tmp_path / "model.json"
        save_model(model, path)
        loaded = load_model(path)
        probe = np.random.default_rng(0).normal(0.5, 0.5, size=(40, 4))
        assert np.array_equal(model.scores(probe), loaded.scores(probe))
        assert loaded.kind == kind
        assert loaded.hyperparameters == model.hyperparameters


class TestClassWeightEffect:
    def test_weighted_recall_not_worse_on_imbalanced_data(self):
        """Minority recall with balanced weights >= uniform weights,
        averaged over 5 seeds on an overlapping imbalanced problem."""
        deltas = []
        for seed in range(5):
            rng = np.random.default_rng(100 + seed)
            n_neg, n_pos = 300, 24
            X = np.vstack([rng.normal(0.0, 1.0, size=(n_neg, 3)),
                           rng.normal(1.2, 1.0, size=(n_pos, 3))])
            y = np.concatenate([np.zeros(n_neg, dtype=np.int64),
                                np.ones(n_pos, dtype=np.int64)])
            test_X = np.vstack([rng.normal(0.0, 1.0, size=(200, 3)),
                                rng.normal(1.2, 1.0, size=(40, 3))])
            test_y = np.concatenate([np.zeros(200, dtype=bool),
                                     np.ones(40, dtype=bool)])
            recalls = {}
            for weighting in (True, False):
                model = train((X, y), ClassifierKind.LOGISTIC_REGRESSION,
                              seed=seed, class_weighting=weighting)
                pred = model.scores(test_X) >= 0.5
                tp, fp, tn, fn = confusion_counts(test_y, pred)
                recalls[weighting] = metrics_from_confusion(
                    tp, fp, tn, fn, 0, "lr").recall
            deltas.append(recalls[True] - recalls[False])
        assert np.mean(deltas) >= 0.0


@pytest.fixture(scope="module")
def small_bundle():
    counts = {
        ScenarioKind.LEGITIMATE: 24,
        ScenarioKind.SLID: 8,
        ScenarioKind.SLID_SLOW: 4,
    }
    overrides = {
        ScenarioKind.LEGITIMATE: {"lifetime_days": 80, "investor_arrival": 2.0},
        ScenarioKind.SLID: {"slid_drain_count": 60, "lifetime_days": 80,
                            "investor_arrival": 2.0},
        ScenarioKind.SLID_SLOW: {"slid_drain_count": 12, "lifetime_days": 280,
                                 "investor_arrival": 1.0},
    }
    scenarios = list(build_corpus(counts, seed=42, overrides=overrides))
    return CorpusBundle.from_scenarios(scenarios)


class TestSweep:
    def test_labels_from_full_history_heuristic(self, small_bundle):
        assert sum(small_bundle.labels.values()) == 12  # SLID + SlidSlow

    def test_sweep_shapes_and_reproducibility(self, small_bundle):
        d_list = (120, 57)
        windows = prepare_windows(small_bundle, d_list)
        first = sweep(small_bundle, d_list, seed=3, windows=windows)
        second = sweep(small_bundle, d_list, seed=3, windows=windows)
        assert first == second
        assert len(first) == len(d_list) * 3
        detectors = {m.detector for m in first}
        assert detectors == {"Heuristic", "RandomForest", "LogisticRegression"}

    def test_heuristic_recall_degrades_at_small_windows(self, small_bundle):
        windows = prepare_windows(small_bundle, (300, 57))
        # at the full window every SLID pool triggers; at 57 days the slow
        # drains have not happened yet
        full = windows.heuristic_by_d[300]
        early = windows.heuristic_by_d[57]
        assert full.sum() > early.sum()

    def test_window_speedup_definition(self):
        rows = [
            metrics_from_confusion(10, 0, 90, 0, 300, "Heuristic"),
            metrics_from_confusion(5, 0, 90, 5, 100, "Heuristic"),
            metrics_from_confusion(5, 0, 90, 5, 57, "Heuristic"),
            metrics_from_confusion(10, 0, 90, 0, 300, "RandomForest"),
            metrics_from_confusion(10, 0, 90, 0, 100, "RandomForest"),
            metrics_from_confusion(10, 0, 90, 0, 57, "RandomForest"),
        ]
        assert window_speedup(rows) == pytest.approx(300 / 57)


class TestSplit:
    def test_stratified_split_preserves_both_classes(self):
        y = np.array([0] * 90 + [1] * 10)
        train_idx, test_idx = stratified_split(y, 0.2, seed=0)
        assert len(np.intersect1d(train_idx, test_idx)) == 0
        assert len(train_idx) + len(test_idx) == 100
        assert y[test_idx].sum() == 2
        assert y[train_idx].sum() == 8
