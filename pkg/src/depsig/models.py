"""From-scratch supervised models.

  elastic net    -- cyclic coordinate descent with soft-thresholding on
                    standardized features, objective
                    (1/2N)||y - Xw - b||^2 + lam*(rho*||w||_1 + (1-rho)/2*||w||^2)
  logistic       -- L2-regularized log-loss minimized by gradient descent
                    with backtracking line search
  SVM            -- soft-margin dual solved by sequential minimal
                    optimization; C = 1/(lam*N); linear or RBF kernel
  random forest  -- bootstrapped Gini trees, feature subsampling per split,
                    majority vote

Trained models are immutable value objects; `predict` dispatches on type.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ModelError


def _validate_xy(X, y):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2:
        raise ModelError("X must be 2-D")
    if y.shape != (X.shape[0],):
        raise ModelError(f"y length {y.shape} does not match {X.shape[0]} rows")
    if X.shape[0] < 2:
        raise ModelError("need at least 2 instances")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ModelError("non-finite values in inputs")
    return X, y


def _check_columns(X, expected):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.shape[1] != expected:
        raise ModelError(f"X has {X.shape[1]} columns, model expects {expected}")
    return X


def _standardize(X):
    mu = X.mean(axis=0)
    sigma = X.std(axis=0)
    safe = np.where(sigma == 0.0, 1.0, sigma)
    return (X - mu) / safe, mu, sigma


def soft_threshold(z, threshold):
    return np.sign(z) * max(abs(z) - threshold, 0.0)


# ---------------------------------------------------------------------------
# elastic net
# ---------------------------------------------------------------------------

@dataclass
class ElasticNetModel:
    weights: np.ndarray            # original-scale coefficients
    intercept: float
    lambda_en: float
    l1_ratio: float
    feature_means: np.ndarray
    feature_stds: np.ndarray
    n_iter: int
    converged: bool
    objective_path: list = field(default_factory=list, repr=False)

    def predict(self, X):
        X = _check_columns(X, self.weights.shape[0])
        return X @ self.weights + self.intercept


def elastic_net_objective(residual, w, n, lambda_en, l1_ratio):
    penalty = lambda_en * (l1_ratio * np.abs(w).sum()
                           + 0.5 * (1 - l1_ratio) * (w @ w))
    return float(0.5 / n * (residual @ residual) + penalty)


def fit_elastic_net(X, y, lambda_en=0.01, l1_ratio=0.5, tol=1e-8,
                    max_iter=1000) -> ElasticNetModel:
    """Cyclic coordinate descent on standardized features.

    Converges when the largest coefficient change in a sweep drops below
    tol; the per-sweep objective values are kept on the model so callers
    can check monotonicity.
    """
    X, y = _validate_xy(X, y)
    if not 0.0 <= l1_ratio <= 1.0:
        raise ModelError(f"l1_ratio must be in [0, 1], got {l1_ratio}")
    if lambda_en < 0:
        raise ModelError(f"lambda_en must be >= 0, got {lambda_en}")
    if np.all(y == y[0]):
        raise ModelError("y is constant; the standardized problem is undefined")

    n, p = X.shape
    Xs, mu, sigma = _standardize(X)
    active = sigma > 0
    ybar = y.mean()
    yc = y - ybar

    w = np.zeros(p)
    r = yc.copy()
    l1 = lambda_en * l1_ratio
    shrink = 1.0 + lambda_en * (1.0 - l1_ratio)

    path = []
    converged = False
    sweep = 0
    for sweep in range(1, max_iter + 1):
        max_delta = 0.0
        for j in range(p):
            if not active[j]:
                continue
            w_old = w[j]
            if w_old != 0.0:
                r += Xs[:, j] * w_old
            rho = (Xs[:, j] @ r) / n
            w_new = soft_threshold(rho, l1) / shrink
            if w_new != 0.0:
                r -= Xs[:, j] * w_new
            w[j] = w_new
            max_delta = max(max_delta, abs(w_new - w_old))
        path.append(elastic_net_objective(r, w, n, lambda_en, l1_ratio))
        if max_delta < tol:
            converged = True
            break

    weights = np.where(active, w / np.where(active, sigma, 1.0), 0.0)
    intercept = float(ybar - weights @ mu)
    return ElasticNetModel(
        weights=weights, intercept=intercept, lambda_en=lambda_en,
        l1_ratio=l1_ratio, feature_means=mu, feature_stds=sigma,
        n_iter=sweep, converged=converged, objective_path=path,
    )


# ---------------------------------------------------------------------------
# logistic regression
# ---------------------------------------------------------------------------

@dataclass
class LogisticModel:
    weights: np.ndarray
    intercept: float
    l2_strength: float
    n_iter: int
    converged: bool
    grad_norm: float

    def predict_proba(self, X):
        X = _check_columns(X, self.weights.shape[0])
        z = X @ self.weights + self.intercept
        return 1.0 / (1.0 + np.exp(-np.clip(z, -500, 500)))

    def predict(self, X):
        return (self.predict_proba(X) >= 0.5).astype(int)


def logistic_objective(w, b, X, y, l2_strength):
    """Mean log-loss plus (l2/2)||w||^2; the intercept is unpenalized."""
    z = X @ w + b
    nll = float(np.mean(np.logaddexp(0.0, z) - y * z))
    return nll + 0.5 * l2_strength * float(w @ w)


def logistic_gradient(w, b, X, y, l2_strength):
    z = X @ w + b
    p = 1.0 / (1.0 + np.exp(-np.clip(z, -500, 500)))
    gw = X.T @ (p - y) / len(y) + l2_strength * w
    gb = float(np.mean(p - y))
    return gw, gb


def fit_logistic(X, y, l2_strength=1e-4, tol=1e-6, max_iter=5000) -> LogisticModel:
    """Gradient descent with Armijo backtracking on the regularized log-loss.

    y must contain both classes, coded {0, 1}. Exits when the gradient norm
    drops below tol or after max_iter steps (converged flag reports which).
    """
    X, y = _validate_xy(X, y)
    classes = np.unique(y)
    if not np.all(np.isin(classes, (0.0, 1.0))):
        raise ModelError(f"labels must be 0/1, got {classes}")
    if classes.size < 2:
        raise ModelError("y contains a single class")

    n, p = X.shape
    w = np.zeros(p)
    b = 0.0
    step = 1.0
    obj = logistic_objective(w, b, X, y, l2_strength)
    converged = False
    grad_norm = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        gw, gb = logistic_gradient(w, b, X, y, l2_strength)
        grad_norm = float(np.sqrt(gw @ gw + gb * gb))
        if grad_norm < tol:
            converged = True
            break
        step = min(step * 2.0, 1e6)
        while step > 1e-16:
            w_try = w - step * gw
            b_try = b - step * gb
            obj_try = logistic_objective(w_try, b_try, X, y, l2_strength)
            if obj_try <= obj - 1e-4 * step * grad_norm ** 2:
                break
            step *= 0.5
        else:
            break  # no descent direction at float precision
        w, b, obj = w_try, b_try, obj_try
    return LogisticModel(weights=w, intercept=float(b), l2_strength=l2_strength,
                         n_iter=it, converged=converged, grad_norm=grad_norm)


# ---------------------------------------------------------------------------
# support vector machine
# ---------------------------------------------------------------------------

@dataclass
class SvmModel:
    support_vectors: np.ndarray    # original-scale rows
    dual_coefs: np.ndarray         # alpha_i in [0, C]
    sv_labels: np.ndarray          # +-1 per support vector
    bias: float
    kernel: str
    gamma: float
    C: float
    feature_means: np.ndarray
    feature_stds: np.ndarray
    sv_margins: np.ndarray         # decision values at the support vectors
    n_passes: int
    converged: bool

    def decision_function(self, X):
        X = _check_columns(X, self.support_vectors.shape[1])
        Xs = _apply_standardization(X, self.feature_means, self.feature_stds)
        SVs = _apply_standardization(self.support_vectors, self.feature_means,
                                     self.feature_stds)
        K = _kernel_matrix(Xs, SVs, self.kernel, self.gamma)
        return K @ (self.dual_coefs * self.sv_labels) + self.bias

    def predict(self, X):
        margins = self.decision_function(X)
        labels = np.where(margins >= 0, 1, -1)
        return labels


def _apply_standardization(X, mu, sigma):
    safe = np.where(sigma == 0.0, 1.0, sigma)
    return (X - mu) / safe


def _kernel_matrix(A, B, kernel, gamma):
    if kernel == "linear":
        return A @ B.T
    if kernel == "rbf":
        sq = (np.sum(A * A, axis=1)[:, None] + np.sum(B * B, axis=1)[None, :]
              - 2.0 * A @ B.T)
        return np.exp(-gamma * np.maximum(sq, 0.0))
    raise ModelError(f"unknown kernel {kernel!r}")


def fit_svm(X, y, lambda_reg=1e-4, kernel="rbf", gamma=0.5, tol=1e-3,
            max_passes=1000, standardize=True) -> SvmModel:
    """Sequential minimal optimization for the soft-margin dual.

    The box constraint maps from the regularization strength as
    C = 1/(lambda*N). Labels must be -1/+1 with both present. Pair choice
    is deterministic (largest |E_i - E_j| with index tie-breaks), so fits
    are reproducible without a seed.

    `standardize=False` skips the internal z-scaling: on sparse bounded
    features (TF-IDF columns) z-scaling inflates rare-column deviations
    until every RBF kernel entry underflows, so callers that pre-scale
    should disable it.
    """
    X, y = _validate_xy(X, y)
    classes = np.unique(y)
    if not np.all(np.isin(classes, (-1.0, 1.0))):
        raise ModelError(f"labels must be -1/+1, got {classes}")
    if classes.size < 2:
        raise ModelError("y contains a single class")
    if kernel == "rbf" and gamma <= 0:
        raise ModelError(f"gamma must be > 0 for the rbf kernel, got {gamma}")
    if lambda_reg <= 0:
        raise ModelError(f"lambda_reg must be > 0, got {lambda_reg}")

    n = X.shape[0]
    C = 1.0 / (lambda_reg * n)
    if standardize:
        Xs, mu, sigma = _standardize(X)
    else:
        Xs = X
        mu = np.zeros(X.shape[1])
        sigma = np.ones(X.shape[1])
    K = _kernel_matrix(Xs, Xs, kernel, gamma)

    alpha = np.zeros(n)
    b = 0.0
    E = -y.copy()  # decision values start at 0, so E_i = -y_i

    def take_step(i, j):
        nonlocal b
        if i == j:
            return False
        eta = 2.0 * K[i, j] - K[i, i] - K[j, j]
        if eta >= -1e-12:
            return False
        if y[i] != y[j]:
            L = max(0.0, alpha[j] - alpha[i])
            H = min(C, C + alpha[j] - alpha[i])
        else:
            L = max(0.0, alpha[i] + alpha[j] - C)
            H = min(C, alpha[i] + alpha[j])
        if L >= H:
            return False
        aj_new = alpha[j] - y[j] * (E[i] - E[j]) / eta
        aj_new = min(max(aj_new, L), H)
        if abs(aj_new - alpha[j]) < 1e-12 * (aj_new + alpha[j] + 1e-12):
            return False
        ai_new = alpha[i] + y[i] * y[j] * (alpha[j] - aj_new)

        b_old = b
        b1 = b - E[i] - y[i] * (ai_new - alpha[i]) * K[i, i] \
            - y[j] * (aj_new - alpha[j]) * K[i, j]
        b2 = b - E[j] - y[i] * (ai_new - alpha[i]) * K[i, j] \
            - y[j] * (aj_new - alpha[j]) * K[j, j]
        if 0.0 < ai_new < C:
            b = b1
        elif 0.0 < aj_new < C:
            b = b2
        else:
            b = 0.5 * (b1 + b2)

        E[:] += (y[i] * (ai_new - alpha[i]) * K[:, i]
                 + y[j] * (aj_new - alpha[j]) * K[:, j]
                 + (b - b_old))
        alpha[i], alpha[j] = ai_new, aj_new
        return True

    def examine(i):
        r = E[i] * y[i]
        if (r < -tol and alpha[i] < C) or (r > tol and alpha[i] > 0):
            gaps = np.abs(E - E[i])
            gaps[i] = -1.0
            j = int(np.argmax(gaps))
            if take_step(i, j):
                return True
            for j in range(n):
                if take_step(i, j):
                    return True
        return False

    passes = 0
    examine_all = True
    converged = False
    while passes < max_passes:
        passes += 1
        changed = 0
        if examine_all:
            candidates = range(n)
        else:
            candidates = np.flatnonzero((alpha > 0) & (alpha < C))
        for i in candidates:
            changed += examine(int(i))
        if examine_all:
            if changed == 0:
                converged = True
                break
            examine_all = False
        elif changed == 0:
            examine_all = True

    sv = np.flatnonzero(alpha > 1e-12)
    if sv.size == 0:
        # all multipliers at zero means the problem degenerated; keep the
        # largest candidate so the model always has a support vector
        sv = np.array([int(np.argmax(alpha))])
    margins = (K[sv][:, sv] @ (alpha[sv] * y[sv])) + b

    model = SvmModel(
        support_vectors=X[sv].copy(), dual_coefs=alpha[sv].copy(),
        sv_labels=y[sv].copy(), bias=float(b), kernel=kernel, gamma=gamma,
        C=C, feature_means=mu, feature_stds=sigma,
        sv_margins=np.asarray(margins, dtype=float),
        n_passes=passes, converged=converged,
    )
    return model


# ---------------------------------------------------------------------------
# random forest
# ---------------------------------------------------------------------------

@dataclass
class TreeNode:
    prediction: int = 0
    feature: int = -1              # -1 marks a leaf
    threshold: float = 0.0
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None

    @property
    def is_leaf(self):
        return self.feature < 0

    def depth(self):
        if self.is_leaf:
            return 0
        return 1 + max(self.left.depth(), self.right.depth())


@dataclass
class ForestModel:
    trees: list
    n_trees: int
    max_depth: int
    features_per_split: int
    seed: int
    n_features: int

    def vote_fraction(self, X):
        X = _check_columns(X, self.n_features)
        votes = np.zeros(X.shape[0])
        for tree in self.trees:
            votes += _tree_predict(tree, X)
        return votes / len(self.trees)

    def predict(self, X):
        return (self.vote_fraction(X) >= 0.5).astype(int)


def _gini_best_split(values, labels):
    """Best (threshold, impurity) for one feature, or None.

    Candidate thresholds are midpoints between consecutive distinct sorted
    values; impurity is the size-weighted Gini of the two sides.
    """
    order = np.argsort(values, kind="stable")
    sv = values[order]
    sy = labels[order]
    n = len(sv)
    cumulative = np.cumsum(sy)
    total_ones = cumulative[-1]

    splits = np.flatnonzero(sv[:-1] < sv[1:]) + 1
    if splits.size == 0:
        return None
    n_left = splits.astype(float)
    ones_left = cumulative[splits - 1].astype(float)
    n_right = n - n_left
    ones_right = total_ones - ones_left

    def gini(ones, count):
        p = ones / count
        return 1.0 - p ** 2 - (1.0 - p) ** 2

    impurity = (n_left * gini(ones_left, n_left)
                + n_right * gini(ones_right, n_right)) / n
    best = int(np.argmin(impurity))
    pos = splits[best]
    threshold = 0.5 * (sv[pos - 1] + sv[pos])
    return float(threshold), float(impurity[best])


def _grow_tree(X, y, idx, depth, rng, max_depth, features_per_split):
    sub_y = y[idx]
    ones = int(sub_y.sum())
    majority = int(2 * ones > len(idx))
    if depth >= max_depth or ones == 0 or ones == len(idx) or len(idx) < 2:
        return TreeNode(prediction=majority)

    n_features = X.shape[1]
    k = min(features_per_split, n_features)
    feats = rng.choice(n_features, size=k, replace=False)

    best = None
    for f in feats:
        found = _gini_best_split(X[idx, f], sub_y)
        if found is None:
            continue
        threshold, impurity = found
        if best is None or impurity < best[2]:
            best = (int(f), threshold, impurity)
    if best is None:
        return TreeNode(prediction=majority)

    f, threshold, _ = best
    mask = X[idx, f] <= threshold
    left = _grow_tree(X, y, idx[mask], depth + 1, rng, max_depth, features_per_split)
    right = _grow_tree(X, y, idx[~mask], depth + 1, rng, max_depth, features_per_split)
    return TreeNode(prediction=majority, feature=f, threshold=threshold,
                    left=left, right=right)


def _tree_predict(node, X):
    out = np.empty(X.shape[0], dtype=int)
    stack = [(node, np.arange(X.shape[0]))]
    while stack:
        cur, rows = stack.pop()
        if rows.size == 0:
            continue
        if cur.is_leaf:
            out[rows] = cur.prediction
            continue
        mask = X[rows, cur.feature] <= cur.threshold
        stack.append((cur.left, rows[mask]))
        stack.append((cur.right, rows[~mask]))
    return out


def fit_random_forest(X, y, n_trees=500, max_depth=3, features_per_split=30,
                      seed=0) -> ForestModel:
    """Bootstrap-aggregated Gini trees; deterministic given the seed.

    Single-class training data is allowed and yields constant predictions.
    When features_per_split exceeds the feature count, all features are
    candidates at every node.
    """
    X, y = _validate_xy(X, y)
    yi = y.astype(int)
    if not np.all(np.isin(np.unique(yi), (0, 1))):
        raise ModelError(f"labels must be 0/1, got {np.unique(y)}")
    if n_trees < 1 or max_depth < 1 or features_per_split < 1:
        raise ModelError("n_trees, max_depth and features_per_split must be >= 1")

    n = X.shape[0]
    streams = np.random.SeedSequence(seed).spawn(n_trees)
    trees = []
    for ss in streams:
        rng = np.random.default_rng(ss)
        boot = rng.integers(0, n, size=n)
        trees.append(_grow_tree(X, yi, boot, 0, rng, max_depth, features_per_split))
    return ForestModel(trees=trees, n_trees=n_trees, max_depth=max_depth,
                       features_per_split=features_per_split, seed=int(seed),
                       n_features=X.shape[1])


# ---------------------------------------------------------------------------
# shared prediction front end and serialization
# ---------------------------------------------------------------------------

@dataclass
class Prediction:
    scores: np.ndarray
    labels: np.ndarray | None


def predict(model, X) -> Prediction:
    """Scores plus labels for any trained model.

    elastic net -> real scores, no labels; logistic -> probabilities and
    0.5-threshold labels; SVM -> signed margins and sign labels; forest ->
    vote fractions and majority labels.
    """
    if isinstance(model, ElasticNetModel):
        return Prediction(scores=model.predict(X), labels=None)
    if isinstance(model, LogisticModel):
        proba = model.predict_proba(X)
        return Prediction(scores=proba, labels=(proba >= 0.5).astype(int))
    if isinstance(model, SvmModel):
        margins = model.decision_function(X)
        return Prediction(scores=margins, labels=np.where(margins >= 0, 1, -1))
    if isinstance(model, ForestModel):
        fraction = model.vote_fraction(X)
        return Prediction(scores=fraction, labels=(fraction >= 0.5).astype(int))
    raise ModelError(f"unknown model type {type(model).__name__}")


def _tree_to_dict(node):
    if node.is_leaf:
        return {"leaf": node.prediction}
    return {"feature": node.feature, "threshold": node.threshold,
            "prediction": node.prediction,
            "left": _tree_to_dict(node.left), "right": _tree_to_dict(node.right)}


def _tree_from_dict(d):
    if "leaf" in d:
        return TreeNode(prediction=d["leaf"])
    return TreeNode(prediction=d["prediction"], feature=d["feature"],
                    threshold=d["threshold"],
                    left=_tree_from_dict(d["left"]),
                    right=_tree_from_dict(d["right"]))


def model_to_dict(model) -> dict:
    if isinstance(model, ElasticNetModel):
        return {"type": "elastic_net",
                "hyperparameters": {"lambda_en": model.lambda_en,
                                    "l1_ratio": model.l1_ratio},
                "parameters": {"weights": model.weights.tolist(),
                               "intercept": model.intercept},
                "standardization": {"means": model.feature_means.tolist(),
                                    "stds": model.feature_stds.tolist()},
                "fit": {"n_iter": model.n_iter, "converged": model.converged}}
    if isinstance(model, LogisticModel):
        return {"type": "logistic",
                "hyperparameters": {"l2_strength": model.l2_strength},
                "parameters": {"weights": model.weights.tolist(),
                               "intercept": model.intercept},
                "fit": {"n_iter": model.n_iter, "converged": model.converged,
                        "grad_norm": model.grad_norm}}
    if isinstance(model, SvmModel):
        return {"type": "svm",
                "hyperparameters": {"kernel": model.kernel, "gamma": model.gamma,
                                    "C": model.C},
                "parameters": {"support_vectors": model.support_vectors.tolist(),
                               "dual_coefs": model.dual_coefs.tolist(),
                               "sv_labels": model.sv_labels.tolist(),
                               "bias": model.bias,
                               "sv_margins": model.sv_margins.tolist()},
                "standardization": {"means": model.feature_means.tolist(),
                                    "stds": model.feature_stds.tolist()},
                "fit": {"n_passes": model.n_passes, "converged": model.converged}}
    if isinstance(model, ForestModel):
        return {"type": "forest",
                "hyperparameters": {"n_trees": model.n_trees,
                                    "max_depth": model.max_depth,
                                    "features_per_split": model.features_per_split,
                                    "seed": model.seed},
                "parameters": {"n_features": model.n_features,
                               "trees": [_tree_to_dict(t) for t in model.trees]}}
    raise ModelError(f"unknown model type {type(model).__name__}")


def model_from_dict(d):
    kind = d.get("type")
    if kind == "elastic_net":
        return ElasticNetModel(
            weights=np.array(d["parameters"]["weights"]),
            intercept=d["parameters"]["intercept"],
            lambda_en=d["hyperparameters"]["lambda_en"],
            l1_ratio=d["hyperparameters"]["l1_ratio"],
            feature_means=np.array(d["standardization"]["means"]),
            feature_stds=np.array(d["standardization"]["stds"]),
            n_iter=d["fit"]["n_iter"], converged=d["fit"]["converged"])
    if kind == "logistic":
        return LogisticModel(
            weights=np.array(d["parameters"]["weights"]),
            intercept=d["parameters"]["intercept"],
            l2_strength=d["hyperparameters"]["l2_strength"],
            n_iter=d["fit"]["n_iter"], converged=d["fit"]["converged"],
            grad_norm=d["fit"]["grad_norm"])
    if kind == "svm":
        return SvmModel(
            support_vectors=np.array(d["parameters"]["support_vectors"]),
            dual_coefs=np.array(d["parameters"]["dual_coefs"]),
            sv_labels=np.array(d["parameters"]["sv_labels"]),
            bias=d["parameters"]["bias"],
            kernel=d["hyperparameters"]["kernel"],
            gamma=d["hyperparameters"]["gamma"], C=d["hyperparameters"]["C"],
            feature_means=np.array(d["standardization"]["means"]),
            feature_stds=np.array(d["standardization"]["stds"]),
            sv_margins=np.array(d["parameters"]["sv_margins"]),
            n_passes=d["fit"]["n_passes"], converged=d["fit"]["converged"])
    if kind == "forest":
        return ForestModel(
            trees=[_tree_from_dict(t) for t in d["parameters"]["trees"]],
            n_trees=d["hyperparameters"]["n_trees"],
            max_depth=d["hyperparameters"]["max_depth"],
            features_per_split=d["hyperparameters"]["features_per_split"],
            seed=d["hyperparameters"]["seed"],
            n_features=d["parameters"]["n_features"])
    raise ModelError(f"unknown serialized model type {kind!r}")


def save_model(model, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh, sort_keys=True)


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
