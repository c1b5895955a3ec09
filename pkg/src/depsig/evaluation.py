"""Metrics, significance tests, stratified k-fold, temporal splits.

P-values default to a seeded permutation test (two-sided, add-one
estimator), which stays honest at topic-level sample sizes; the analytic
t-approximation is available and tagged in reports.
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import EvaluationError


class CorrelationTest(NamedTuple):
    r: float
    p: float
    method: str


class PrecisionRecallF1(NamedTuple):
    precision: float
    recall: float
    f1: float


def _as_vector(x, name):
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise EvaluationError(f"{name} must be 1-D")
    return x


def _pearson_r(x, y):
    xc = x - x.mean()
    yc = y - y.mean()
    denom = np.sqrt((xc @ xc) * (yc @ yc))
    return float(np.clip((xc @ yc) / denom, -1.0, 1.0))


def _permutation_p(x, y, observed_abs, n_permutations, seed):
    rng = np.random.default_rng(seed)
    xc = x - x.mean()
    sx = np.sqrt(xc @ xc)
    hits = 0
    for _ in range(n_permutations):
        yp = rng.permutation(y)
        yc = yp - yp.mean()
        r = (xc @ yc) / (sx * np.sqrt(yc @ yc))
        if abs(r) >= observed_abs - 1e-12:
            hits += 1
    return (1 + hits) / (n_permutations + 1)


def _analytic_p(r, n):
    from scipy import stats

    if abs(r) >= 1.0:
        return 0.0
    t = abs(r) * np.sqrt((n - 2) / (1.0 - r * r))
    return float(2.0 * stats.t.sf(t, df=n - 2))


def _refit_permutation_p(X, y, spec, folds, observed_abs, n_permutations, seed):
    """Label-permutation p-value for pooled CV correlation, refitting per
    permutation.

    Held-out predictions depend on the training labels, so a pairs-only
    shuffle of (score, label) understates the null variance of pooled r.
    Rerunning the full fold loop on permuted labels keeps the train-test
    reuse inside the null. A permutation whose fit fails counts as a hit,
    which can only make the test conservative.
    """
    rng = np.random.default_rng(seed)
    hits = 0
    for _ in range(n_permutations):
        yp = rng.permutation(y)
        try:
            scores, true = _pooled_scores(X, yp, spec, folds)
            r = abs(_pearson_r(scores, true))
        except Exception:
            r = np.inf
        if r >= observed_abs - 1e-12:
            hits += 1
    return (1 + hits) / (n_permutations + 1)


def _pooled_scores(X, y, spec, folds):
    chunks_s, chunks_y = [], []
    for train, test in folds:
        model = _fit_spec(spec, X[train], y[train])
        scores, _ = _predict_spec(spec, model, X[test])
        chunks_s.append(np.asarray(scores))
        chunks_y.append(y[test])
    return np.concatenate(chunks_s), np.concatenate(chunks_y)


def pearson(x, y, p_method="permutation", n_permutations=10_000,
            seed=0) -> CorrelationTest:
    """Sample Pearson correlation with a two-sided p-value.

    `p_method` is "permutation" (seeded, deterministic) or "analytic"
    (t-approximation); the method lands in the result so reports can flag
    it. Raises on constant input or fewer than 3 pairs.
    """
    x = _as_vector(x, "x")
    y = _as_vector(y, "y")
    if x.shape != y.shape:
        raise EvaluationError("x and y must have the same length")
    if x.size < 3:
        raise EvaluationError("need at least 3 pairs")
    if np.all(x == x[0]) or np.all(y == y[0]):
        raise EvaluationError("correlation is undefined for constant input")

    r = _pearson_r(x, y)
    if p_method == "permutation":
        p = _permutation_p(x, y, abs(r), n_permutations, seed)
    elif p_method == "analytic":
        p = _analytic_p(r, x.size)
    else:
        raise EvaluationError(f"unknown p_method {p_method!r}")
    return CorrelationTest(r=r, p=p, method=p_method)


def rank_with_ties(x) -> np.ndarray:
    """1-based ranks; tied values share the average of their rank span."""
    x = np.asarray(x, dtype=float)
    order = np.argsort(x, kind="stable")
    ranks = np.empty(x.size, dtype=float)
    i = 0
    while i < x.size:
        j = i
        while j + 1 < x.size and x[order[j + 1]] == x[order[i]]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def spearman(x, y, p_method="permutation", n_permutations=10_000,
             seed=0) -> CorrelationTest:
    """Spearman rho: Pearson correlation of average-tie ranks."""
    x = _as_vector(x, "x")
    y = _as_vector(y, "y")
    if x.shape != y.shape:
        raise EvaluationError("x and y must have the same length")
    if x.size < 3:
        raise EvaluationError("need at least 3 pairs")
    if np.all(x == x[0]) or np.all(y == y[0]):
        raise EvaluationError("correlation is undefined for constant input")
    result = pearson(rank_with_ties(x), rank_with_ties(y),
                     p_method=p_method, n_permutations=n_permutations, seed=seed)
    return CorrelationTest(r=result.r, p=result.p, method=result.method)


def f1_report(predicted, true) -> PrecisionRecallF1:
    """Precision, recall, F1 on the positive class (label 1).

    Zero denominators give 0 rather than errors, including F1 = 0 when
    precision + recall = 0.
    """
    predicted = np.asarray(predicted)
    true = np.asarray(true)
    if predicted.shape != true.shape:
        raise EvaluationError("predicted and true must have the same length")
    tp = int(np.sum((predicted == 1) & (true == 1)))
    fp = int(np.sum((predicted == 1) & (true != 1)))
    fn = int(np.sum((predicted != 1) & (true == 1)))
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return PrecisionRecallF1(precision=precision, recall=recall, f1=f1)


def _decile_bins(scores):
    edges = np.quantile(scores, np.linspace(0, 1, 11)[1:-1])
    return np.searchsorted(edges, scores, side="left")


def stratified_kfold(labels_or_scores, k, seed=0, continuous=None):
    """Stratified k-fold index pairs, deterministic given the seed.

    Categorical labels keep per-class proportions within one instance per
    fold; continuous scores (auto-detected as floats with many distinct
    values, or forced via `continuous`) are stratified on decile bins.
    Classes with fewer than k members trigger a warning and are spread
    best-effort.
    """
    values = np.asarray(labels_or_scores)
    n = values.size
    if k < 2:
        raise EvaluationError(f"k must be >= 2, got {k}")
    if n < k:
        raise EvaluationError(f"need at least k={k} instances, got {n}")

    if continuous is None:
        continuous = (values.dtype.kind == "f"
                      and np.unique(values).size > max(10, k))
    strata = _decile_bins(values.astype(float)) if continuous else values

    rng = np.random.default_rng(seed)
    fold_of = np.empty(n, dtype=int)
    cursor = 0
    for stratum in np.unique(strata):
        members = np.flatnonzero(strata == stratum)
        if members.size < k and not continuous:
            warnings.warn(
                f"class {stratum!r} has {members.size} < k={k} members; "
                f"folds are best-effort for it")
        members = rng.permutation(members)
        for m in members:
            fold_of[m] = cursor % k
            cursor += 1

    folds = []
    everything = np.arange(n)
    for f in range(k):
        test = everything[fold_of == f]
        train = everything[fold_of != f]
        folds.append((train, test))
    return folds


def temporal_split(window_indices):
    """Train on every window but the last; test on the max-index window.

    `window_indices` holds one window index per instance. Returns
    (train_positions, test_positions); errors when only one window exists.
    """
    w = np.asarray(window_indices)
    if w.size == 0:
        raise EvaluationError("no instances to split")
    distinct = np.unique(w)
    if distinct.size < 2:
        raise EvaluationError("temporal split needs at least 2 windows")
    last = distinct.max()
    test = np.flatnonzero(w == last)
    train = np.flatnonzero(w != last)
    return train, test


@dataclass
class ModelSpec:
    kind: str                      # elastic_net | logistic | svm | forest
    params: dict = field(default_factory=dict)

    def label(self):
        return self.kind


@dataclass
class EvalReport:
    task: str                      # regression | classification
    metrics: dict
    p_values: dict                 # name -> {"value": float, "method": str}
    per_fold: list
    config: dict

    def to_dict(self):
        return {"task": self.task, "metrics": self.metrics,
                "p_values": self.p_values, "per_fold": self.per_fold,
                "config": self.config}

    def to_json(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, sort_keys=True, indent=2)


def _fit_spec(spec: ModelSpec, X, y):
    from . import models

    if spec.kind == "elastic_net":
        return models.fit_elastic_net(X, y, **spec.params)
    if spec.kind == "logistic":
        return models.fit_logistic(X, y, **spec.params)
    if spec.kind == "svm":
        return models.fit_svm(X, 2.0 * y - 1.0, **spec.params)
    if spec.kind == "forest":
        return models.fit_random_forest(X, y, **spec.params)
    raise EvaluationError(f"unknown model kind {spec.kind!r}")


def _predict_spec(spec: ModelSpec, model, X):
    from .models import predict as model_predict

    out = model_predict(model, X)
    if spec.kind == "svm" and out.labels is not None:
        return out.scores, (out.labels + 1) // 2
    return out.scores, out.labels


def standardize_train_test(X_train, X_test):
    """Column-standardize using training statistics only."""
    mu = X_train.mean(axis=0)
    sigma = X_train.std(axis=0)
    safe = np.where(sigma == 0, 1.0, sigma)
    return (X_train - mu) / safe, (X_test - mu) / safe


def minmax_train_test(X_train, X_test):
    """Scale columns to [0, 1] using training min/max only.

    Preferred over z-scaling ahead of kernel methods on sparse bounded
    features, where z-scaling blows up rare-column deviations.
    """
    lo = X_train.min(axis=0)
    span = X_train.max(axis=0) - lo
    safe = np.where(span == 0, 1.0, span)
    return (X_train - lo) / safe, (X_test - lo) / safe


def cross_validate(X, y, spec: ModelSpec, folds, p_method="permutation",
                   n_permutations=1000, seed=0, config=None) -> EvalReport:
    """Fit per fold and score held-out instances.

    Regression (elastic net): pooled-prediction Pearson r with its p-value,
    plus the mean/std of per-fold r. Classification: per-fold precision,
    recall, F1 with mean/std, plus pooled-prediction F1. Fit failures
    propagate annotated with the fold index.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    task = "regression" if spec.kind == "elastic_net" else "classification"

    pooled_true, pooled_pred, pooled_scores = [], [], []
    per_fold = []
    for fold_ix, (train, test) in enumerate(folds):
        try:
            model = _fit_spec(spec, X[train], y[train])
        except Exception as exc:
            raise EvaluationError(f"fold {fold_ix}: fit failed: {exc}") from exc
        scores, labels = _predict_spec(spec, model, X[test])
        pooled_true.append(y[test])
        pooled_scores.append(scores)
        if task == "regression":
            entry = {"fold": fold_ix, "n_test": int(test.size)}
            if test.size >= 3 and not (np.all(scores == scores[0])
                                       or np.all(y[test] == y[test][0])):
                entry["r"] = _pearson_r(np.asarray(scores), y[test])
            per_fold.append(entry)
        else:
            pooled_pred.append(labels)
            m = f1_report(labels, y[test].astype(int))
            per_fold.append({"fold": fold_ix, "n_test": int(test.size),
                             "precision": m.precision, "recall": m.recall,
                             "f1": m.f1})

    true = np.concatenate(pooled_true)
    scores = np.concatenate(pooled_scores)
    metrics, p_values = {}, {}
    if task == "regression":
        r_pooled = _pearson_r(scores, true)
        metrics["pearson_r_pooled"] = r_pooled
        if p_method == "permutation":
            p = _refit_permutation_p(X, y, spec, folds, abs(r_pooled),
                                     n_permutations, seed)
            p_values["pearson_r_pooled"] = {"value": p,
                                            "method": "permutation_refit"}
        elif p_method == "analytic":
            p_values["pearson_r_pooled"] = {
                "value": _analytic_p(r_pooled, true.size), "method": "analytic"}
        else:
            raise EvaluationError(f"unknown p_method {p_method!r}")
        fold_rs = [f["r"] for f in per_fold if "r" in f]
        if fold_rs:
            metrics["pearson_r_fold_mean"] = float(np.mean(fold_rs))
            metrics["pearson_r_fold_std"] = float(np.std(fold_rs))
    else:
        pred = np.concatenate(pooled_pred)
        pooled = f1_report(pred, true.astype(int))
        metrics["precision_pooled"] = pooled.precision
        metrics["recall_pooled"] = pooled.recall
        metrics["f1_pooled"] = pooled.f1
        for name in ("precision", "recall", "f1"):
            vals = [f[name] for f in per_fold]
            metrics[f"{name}_fold_mean"] = float(np.mean(vals))
            metrics[f"{name}_fold_std"] = float(np.std(vals))

    return EvalReport(task=task, metrics=metrics, p_values=p_values,
                      per_fold=per_fold, config=dict(config or {},
                                                     model=spec.kind,
                                                     model_params=spec.params))


def reports_to_csv(rows, path):
    """Flatten (feature_set, model, EvalReport) triples into a metrics CSV."""
    metric_names = sorted({m for _, _, rep in rows for m in rep.metrics})
    p_names = sorted({p for _, _, rep in rows for p in rep.p_values})
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["feature_set", "model", *metric_names,
                         *(f"p[{p}]" for p in p_names)])
        for feature_set, model_name, rep in rows:
            record = [feature_set, model_name]
            record += [repr(rep.metrics[m]) if m in rep.metrics else ""
                       for m in metric_names]
            record += [repr(rep.p_values[p]["value"]) if p in rep.p_values else ""
                       for p in p_names]
            writer.writerow(record)
