"""Early-warning training and the shrinking-window evaluation sweep.

Ground truth comes from the full-history rule-based verdicts; features come
from truncated observation windows, so a classifier learns to call the final
label from early behavior. The sweep retrains per window length and also
scores the rule-based detector on the same truncated windows, which is where
its recall degrades: drains it has not seen yet cannot trigger it.
"""

from __future__ import annotations

import itertools
import json
import warnings
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .features import (
    FEATURE_NAMES,
    FeatureVector,
    extract_with_report,
    feature_matrix,
)
from .ledger import DexOrder, PoolRecord
from .metrics import profit_report
from .models import (
    ForestModel,
    LogisticModel,
    balanced_class_weights,
    fit_forest,
    fit_logistic,
)
from .validators import (
    DEFAULT_CONFIG,
    HeuristicConfig,
    Label,
    SecurityProfile,
    classify_pool,
)

MODEL_FORMAT_VERSION = 1


class SingleClassInput(Exception):
    """Training data carries only one class."""


class DimensionMismatch(Exception):
    """Feature vector length or order does not match the model."""


class ClassifierKind(str, Enum):
    LOGISTIC_REGRESSION = "LogisticRegression"
    RANDOM_FOREST = "RandomForest"


DEFAULT_HYPER_GRID = {
    ClassifierKind.LOGISTIC_REGRESSION: {
        "learning_rate": [0.01, 0.1],
        "l2": [0.0, 0.01, 0.1],
        "epochs": [500],
    },
    ClassifierKind.RANDOM_FOREST: {
        "n_trees": [50, 100],
        "max_depth": [8, 16],
        "min_leaf": [1, 5],
    },
}

_DEFAULT_PARAMS = {
    ClassifierKind.LOGISTIC_REGRESSION: {"learning_rate": 0.1, "l2": 0.01, "epochs": 500},
    ClassifierKind.RANDOM_FOREST: {"n_trees": 50, "max_depth": 8, "min_leaf": 1},
}


@dataclass
class ClassifierModel:
    kind: ClassifierKind
    class_weights: Tuple[float, float]
    hyperparameters: Dict[str, object]
    feature_names: List[str]
    model: Optional[object] = None          # LogisticModel | ForestModel
    majority_label: Optional[bool] = None   # set for degenerate training data
    seed: int = 0
    threshold: float = 0.5

    def scores(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != len(self.feature_names):
            raise DimensionMismatch(
                f"expected {len(self.feature_names)} features, got {X.shape}")
        if self.majority_label is not None:
            return np.full(len(X), 1.0 if self.majority_label else 0.0)
        return self.model.scores(X)


@dataclass
class EvalMetrics:
    accuracy: float
    precision: float
    recall: float
    f1: float
    window_days: int
    detector: str
    confusion: Tuple[int, int, int, int]    # (tp, fp, tn, fn)


def metrics_from_confusion(tp: int, fp: int, tn: int, fn: int,
                           window_days: int, detector: str) -> EvalMetrics:
    total = tp + fp + tn + fn
    accuracy = (tp + tn) / total if total else 0.0
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = (2 * precision * recall / (precision + recall)
          if precision + recall > 0 else 0.0)
    return EvalMetrics(accuracy, precision, recall, f1, window_days, detector,
                       (tp, fp, tn, fn))


def confusion_counts(y_true: np.ndarray, y_pred: np.ndarray) -> Tuple[int, int, int, int]:
    y_true = np.asarray(y_true, dtype=bool)
    y_pred = np.asarray(y_pred, dtype=bool)
    tp = int((y_true & y_pred).sum())
    fp = int((~y_true & y_pred).sum())
    tn = int((~y_true & ~y_pred).sum())
    fn = int((y_true & ~y_pred).sum())
    return tp, fp, tn, fn


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------

def _as_matrix(matrix) -> Tuple[np.ndarray, np.ndarray, List[str]]:
    if isinstance(matrix, tuple):
        X, y = matrix
        X = np.asarray(X, dtype=np.float64)
        if X.shape[1] == len(FEATURE_NAMES):
            names = list(FEATURE_NAMES)
        else:
            names = [f"f{i}" for i in range(X.shape[1])]
        return X, np.asarray(y, dtype=np.int64), names
    vectors: Sequence[FeatureVector] = list(matrix)
    if not vectors:
        raise SingleClassInput("empty training matrix")
    X, y = feature_matrix(vectors)
    return X, y, list(FEATURE_NAMES)


def _fit(kind: ClassifierKind, X: np.ndarray, y: np.ndarray,
         class_weights: Tuple[float, float], params: Dict[str, object], seed: int):
    if kind == ClassifierKind.LOGISTIC_REGRESSION:
        return fit_logistic(X, y, class_weights, **params)
    if kind == ClassifierKind.RANDOM_FOREST:
        return fit_forest(X, y, class_weights, seed=seed, **params)
    raise ValueError(f"unsupported classifier kind {kind!r}")


def stratified_split(y: np.ndarray, test_fraction: float,
                     seed: int) -> Tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)
    train_idx: List[int] = []
    test_idx: List[int] = []
    for cls in (0, 1):
        members = np.flatnonzero(y == cls)
        rng.shuffle(members)
        cut = max(1, int(round(len(members) * test_fraction))) if len(members) else 0
        test_idx.extend(members[:cut])
        train_idx.extend(members[cut:])
    return np.sort(np.array(train_idx)), np.sort(np.array(test_idx))


def _stratified_folds(y: np.ndarray, k: int, seed: int) -> List[np.ndarray]:
    rng = np.random.default_rng(seed)
    folds: List[List[int]] = [[] for _ in range(k)]
    for cls in (0, 1):
        members = np.flatnonzero(y == cls)
        rng.shuffle(members)
        for i, idx in enumerate(members):
            folds[i % k].append(int(idx))
    return [np.sort(np.array(f)) for f in folds]


def _grid_candidates(grid: Dict[str, list]) -> List[Dict[str, object]]:
    keys = sorted(grid)
    return [dict(zip(keys, combo))
            for combo in itertools.product(*(grid[k] for k in keys))]


def train(matrix, kind: Union[str, ClassifierKind], seed: int = 0,
          hyper_grid: Optional[Dict[str, list]] = None,
          threshold: float = 0.5, class_weighting: bool = True) -> ClassifierModel:
    """Fit a classifier; optional grid search by stratified 5-fold F1.

    `matrix` is either a sequence of labeled FeatureVectors or an (X, y)
    tuple. Class weights default to inversely proportional to class
    frequencies (class_weighting=False gives uniform weights). Degenerate
    inputs (identical rows, mixed labels) fall back to a majority-class
    model with a SingleSignal warning.
    """
    kind = ClassifierKind(kind)
    X, y, names = _as_matrix(matrix)
    if len(X) != len(y):
        raise DimensionMismatch(f"{len(X)} rows vs {len(y)} labels")
    classes = np.unique(y)
    if len(classes) < 2:
        raise SingleClassInput(f"training labels all equal {classes.tolist()}")

    weights = balanced_class_weights(y) if class_weighting else (1.0, 1.0)
    if np.all(X == X[0]):
        warnings.warn("SingleSignal: identical feature rows with mixed labels; "
                      "falling back to majority class", stacklevel=2)
        majority = bool(np.round(y.mean()))
        return ClassifierModel(kind, weights, {}, names,
                               majority_label=majority, seed=seed,
                               threshold=threshold)

    if hyper_grid:
        candidates = _grid_candidates(hyper_grid)
        folds = _stratified_folds(y, 5, seed)
        best_params = None
        best_f1 = -1.0
        for params in candidates:
            f1s = []
            for i, fold in enumerate(folds):
                mask = np.ones(len(y), dtype=bool)
                mask[fold] = False
                if len(np.unique(y[mask])) < 2 or len(fold) == 0:
                    continue
                fold_weights = (balanced_class_weights(y[mask])
                                if class_weighting else (1.0, 1.0))
                sub = _fit(kind, X[mask], y[mask], fold_weights, params, seed + i)
                pred = _score_model(kind, sub, X[fold]) >= threshold
                tp, fp, tn, fn = confusion_counts(y[fold] == 1, pred)
                f1s.append(metrics_from_confusion(tp, fp, tn, fn, 0, "cv").f1)
            mean_f1 = float(np.mean(f1s)) if f1s else -1.0
            if mean_f1 > best_f1:
                best_f1 = mean_f1
                best_params = params
        params = best_params or _DEFAULT_PARAMS[kind]
    else:
        params = dict(_DEFAULT_PARAMS[kind])

    model = _fit(kind, X, y, weights, params, seed)
    return ClassifierModel(kind, weights, dict(params), names, model=model,
                           seed=seed, threshold=threshold)


def _score_model(kind: ClassifierKind, model, X: np.ndarray) -> np.ndarray:
    return model.scores(np.asarray(X, dtype=np.float64))


def predict(model: ClassifierModel, vector: FeatureVector) -> Tuple[bool, float]:
    """Classify one feature vector; returns (label, score in [0, 1])."""
    score = float(model.scores(vector.values.reshape(1, -1))[0])
    return score >= model.threshold, score


# ---------------------------------------------------------------------------
# Serialization (single-file JSON container)
# ---------------------------------------------------------------------------

def save_model(model: ClassifierModel, path: Union[str, Path]) -> None:
    payload = {
        "format_version": MODEL_FORMAT_VERSION,
        "kind": model.kind.value,
        "class_weights": list(model.class_weights),
        "hyperparameters": model.hyperparameters,
        "feature_names": model.feature_names,
        "seed": model.seed,
        "threshold": model.threshold,
        "majority_label": model.majority_label,
        "model": model.model.to_dict() if model.model is not None else None,
    }
    Path(path).write_text(json.dumps(payload))


def load_model(path: Union[str, Path]) -> ClassifierModel:
    payload = json.loads(Path(path).read_text())
    if payload.get("format_version") != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model format {payload.get('format_version')}")
    kind = ClassifierKind(payload["kind"])
    inner = None
    if payload["model"] is not None:
        if kind == ClassifierKind.LOGISTIC_REGRESSION:
            inner = LogisticModel.from_dict(payload["model"])
        else:
            inner = ForestModel.from_dict(payload["model"])
    return ClassifierModel(
        kind=kind,
        class_weights=tuple(payload["class_weights"]),
        hyperparameters=payload["hyperparameters"],
        feature_names=payload["feature_names"],
        model=inner,
        majority_label=payload["majority_label"],
        seed=payload["seed"],
        threshold=payload["threshold"],
    )


# ---------------------------------------------------------------------------
# Corpus bundling and the d-window sweep
# ---------------------------------------------------------------------------

@dataclass
class CorpusBundle:
    """Labeled corpus: pools, per-pool sorted orders, profiles, ground truth."""

    pools: List[PoolRecord]
    orders_by_pool: Dict[str, List[DexOrder]]
    profiles: Dict[str, SecurityProfile]     # keyed by paired token address
    labels: Dict[str, bool]                  # full-history SLID ground truth
    cfg: HeuristicConfig = field(default_factory=lambda: DEFAULT_CONFIG)

    @classmethod
    def from_scenarios(cls, scenarios, cfg: HeuristicConfig = DEFAULT_CONFIG,
                       label_source: str = "heuristic") -> "CorpusBundle":
        """Bundle generated scenarios; labels come from full-history verdicts
        (`heuristic`, the normal protocol) or the generator truth (`truth`)."""
        pools, orders_by_pool, profiles, labels = [], {}, {}, {}
        for scenario in scenarios:
            pool = scenario.pool
            pools.append(pool)
            orders_by_pool[pool.pool_address] = scenario.orders
            profiles[pool.paired_address] = scenario.profile
            if label_source == "truth":
                labels[pool.pool_address] = scenario.true_label in (
                    "SLID", "SlidSlow", "SlidMultiAddress")
            else:
                report = profit_report(pool, scenario.orders,
                                       first_month_seconds=cfg.first_month_seconds)
                verdict = classify_pool(pool, scenario.profile, report,
                                        report.profit_taking, None, cfg)
                labels[pool.pool_address] = verdict.label == Label.SLID
        return cls(pools, orders_by_pool, profiles, labels, cfg)


@dataclass
class WindowedCorpus:
    """Features and truncated-window heuristic calls, cached per window."""

    vectors_by_d: Dict[int, List[FeatureVector]]
    heuristic_by_d: Dict[int, np.ndarray]
    labels: np.ndarray
    pool_addresses: List[str]


def prepare_windows(bundle: CorpusBundle, d_list: Sequence[int]) -> WindowedCorpus:
    """Extract features and heuristic calls for every pool at every window."""
    cfg = bundle.cfg
    addresses = [p.pool_address for p in bundle.pools]
    labels = np.array([bundle.labels[a] for a in addresses], dtype=bool)
    vectors_by_d: Dict[int, List[FeatureVector]] = {}
    heuristic_by_d: Dict[int, np.ndarray] = {}
    for d in d_list:
        vectors: List[FeatureVector] = []
        calls = np.zeros(len(addresses), dtype=bool)
        for i, pool in enumerate(bundle.pools):
            orders = bundle.orders_by_pool[pool.pool_address]
            vector, report = extract_with_report(pool, orders, d, cfg,
                                                 label=bool(labels[i]))
            vectors.append(vector)
            verdict = classify_pool(pool, bundle.profiles.get(pool.paired_address),
                                    report, report.profit_taking, None, cfg)
            calls[i] = verdict.label == Label.SLID
        vectors_by_d[d] = vectors
        heuristic_by_d[d] = calls
    return WindowedCorpus(vectors_by_d, heuristic_by_d, labels, addresses)


HEURISTIC_DETECTOR = "Heuristic"
DEFAULT_DETECTORS = (HEURISTIC_DETECTOR, ClassifierKind.RANDOM_FOREST.value,
                     ClassifierKind.LOGISTIC_REGRESSION.value)
DEFAULT_D_LIST = (267, 150, 100, 60, 59, 58, 57, 56)


def sweep(bundle: CorpusBundle, d_list: Sequence[int] = DEFAULT_D_LIST,
          detectors: Sequence[str] = DEFAULT_DETECTORS, seed: int = 0,
          hyper_grid: Optional[Dict[str, Dict[str, list]]] = None,
          windows: Optional[WindowedCorpus] = None,
          test_fraction: float = 0.2) -> List[EvalMetrics]:
    """Evaluate every detector at every window on a held-out stratified split.

    Classifiers retrain per window on the training pools; the rule-based
    detector classifies the same truncated windows directly. Pass a
    precomputed `windows` to reuse feature extraction across seeds.
    """
    if windows is None:
        windows = prepare_windows(bundle, d_list)
    labels = windows.labels
    train_idx, test_idx = stratified_split(labels.astype(np.int64),
                                           test_fraction, seed)
    results: List[EvalMetrics] = []
    for d in d_list:
        vectors = windows.vectors_by_d[d]
        X = np.stack([v.values for v in vectors])
        for detector in detectors:
            if detector == HEURISTIC_DETECTOR:
                pred = windows.heuristic_by_d[d][test_idx]
            else:
                kind = ClassifierKind(detector)
                grid = (hyper_grid or {}).get(kind) if hyper_grid else None
                model = train((X[train_idx], labels[train_idx].astype(np.int64)),
                              kind, seed=seed, hyper_grid=grid)
                pred = model.scores(X[test_idx]) >= model.threshold
            tp, fp, tn, fn = confusion_counts(labels[test_idx], pred)
            results.append(metrics_from_confusion(tp, fp, tn, fn, d, detector))
    return results


def window_speedup(results: Sequence[EvalMetrics], slow_detector: str = HEURISTIC_DETECTOR,
                   fast_detector: str = ClassifierKind.RANDOM_FOREST.value,
                   plateau_fraction: float = 0.95) -> float:
    """Ratio of the smallest windows at which each detector reaches
    plateau_fraction of its own plateau F1 (plateau = F1 at the largest d)."""

    def earliest(detector: str) -> int:
        rows = {r.window_days: r.f1 for r in results if r.detector == detector}
        if not rows:
            raise ValueError(f"no sweep rows for detector {detector!r}")
        plateau = rows[max(rows)]
        qualifying = [d for d, f1 in rows.items() if f1 >= plateau_fraction * plateau]
        return min(qualifying) if qualifying else max(rows)

    return earliest(slow_detector) / earliest(fast_detector)
