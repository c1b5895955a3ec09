"""LDA by collapsed Gibbs sampling, topic summaries, depression flagging.

One token's topic is resampled proportionally to
(n_dk + alpha) * (n_kw + beta) / (n_k + V*beta) with that token's counts
removed. Point estimates come from the final sweep's smoothed counts. The
per-sweep inner loop is JIT-compiled; all randomness is drawn from a seeded
numpy Generator outside the kernel, so a fit is bit-reproducible per seed.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace

import numpy as np
from numba import njit

from .errors import ModelError
from .features import FeatureMatrix, FeatureVector


@njit(cache=True)
def _gibbs_sweep(doc_ix, word_ix, z, ndk, nkw, nk, alpha, beta, uniforms):
    K = ndk.shape[1]
    V = nkw.shape[1]
    vbeta = V * beta
    for i in range(word_ix.size):
        d = doc_ix[i]
        w = word_ix[i]
        k = z[i]
        ndk[d, k] -= 1
        nkw[k, w] -= 1
        nk[k] -= 1
        total = 0.0
        for kk in range(K):
            total += (ndk[d, kk] + alpha) * (nkw[kk, w] + beta) / (nk[kk] + vbeta)
        r = uniforms[i] * total
        acc = 0.0
        k_new = K - 1
        for kk in range(K):
            acc += (ndk[d, kk] + alpha) * (nkw[kk, w] + beta) / (nk[kk] + vbeta)
            if acc > r:
                k_new = kk
                break
        z[i] = k_new
        ndk[d, k_new] += 1
        nkw[k_new, w] += 1
        nk[k_new] += 1


@dataclass
class TopicModel:
    K: int
    alpha: float
    beta: float
    vocab: list                    # ordered words, size V
    phi: np.ndarray                # (K, V) topic-word probabilities
    theta: np.ndarray              # (D, K) document-topic proportions
    assignments: np.ndarray        # per-token topic ids
    doc_ids: list                  # post id per theta row
    seed: int
    iterations: int

    def word_index(self, word):
        if not hasattr(self, "_windex"):
            self._windex = {w: i for i, w in enumerate(self.vocab)}
        return self._windex[word]

    def doc_argmax(self) -> np.ndarray:
        """Dominant topic per document; ties resolve to the lower topic id."""
        return np.argmax(self.theta, axis=1)


@dataclass
class TopicSummary:
    topic_id: int
    top_words: list                      # (word, probability), descending
    depression_flag: bool = False
    matched_terms: set = field(default_factory=set)


class _GibbsState:
    """Count matrices plus the token stream; stepped one sweep at a time."""

    def __init__(self, docs, K, alpha, beta, seed):
        if K < 2:
            raise ModelError(f"need K >= 2 topics, got {K}")
        if len(docs) < K:
            raise ModelError(f"need at least K={K} documents, got {len(docs)}")
        for d in docs:
            if not d.tokens:
                raise ModelError(f"document {d.post_id!r} is empty")

        self.vocab = sorted({t for d in docs for t in d.tokens})
        if len(self.vocab) < K:
            raise ModelError(
                f"vocabulary size {len(self.vocab)} is smaller than K={K}")
        index = {w: i for i, w in enumerate(self.vocab)}

        doc_ix, word_ix = [], []
        for di, d in enumerate(docs):
            for t in d.tokens:
                doc_ix.append(di)
                word_ix.append(index[t])
        self.doc_ix = np.array(doc_ix, dtype=np.int32)
        self.word_ix = np.array(word_ix, dtype=np.int32)

        self.K = K
        self.alpha = float(alpha)
        self.beta = float(beta)
        self.rng = np.random.default_rng(seed)
        self.z = self.rng.integers(0, K, size=self.doc_ix.size).astype(np.int32)

        D, V = len(docs), len(self.vocab)
        self.ndk = np.zeros((D, K), dtype=np.int32)
        self.nkw = np.zeros((K, V), dtype=np.int32)
        self.nk = np.zeros(K, dtype=np.int32)
        np.add.at(self.ndk, (self.doc_ix, self.z), 1)
        np.add.at(self.nkw, (self.z, self.word_ix), 1)
        np.add.at(self.nk, self.z, 1)
        self.nd = np.bincount(self.doc_ix, minlength=D)

    def sweep(self):
        uniforms = self.rng.random(self.doc_ix.size)
        _gibbs_sweep(self.doc_ix, self.word_ix, self.z,
                     self.ndk, self.nkw, self.nk,
                     self.alpha, self.beta, uniforms)

    def point_estimates(self):
        V = self.nkw.shape[1]
        phi = (self.nkw + self.beta) / (self.nk[:, None] + V * self.beta)
        theta = (self.ndk + self.alpha) / (self.nd[:, None] + self.K * self.alpha)
        return phi, theta


def fit_lda(docs, K=50, alpha=0.01, beta=0.01, iterations=1000, seed=0) -> TopicModel:
    """Fit LDA on tokenized docs by collapsed Gibbs sampling.

    Deterministic given the seed. Errors on empty docs, fewer than K docs,
    or a vocabulary smaller than K.
    """
    if iterations < 1:
        raise ModelError(f"iterations must be >= 1, got {iterations}")
    state = _GibbsState(docs, K, alpha, beta, seed)
    for _ in range(iterations):
        state.sweep()
    phi, theta = state.point_estimates()
    return TopicModel(
        K=K, alpha=float(alpha), beta=float(beta), vocab=state.vocab,
        phi=phi, theta=theta, assignments=state.z.copy(),
        doc_ids=[d.post_id for d in docs], seed=int(seed), iterations=iterations,
    )


def top_words(model: TopicModel, k=15) -> list:
    """Per-topic k highest-probability words; equal probabilities order
    lexicographically."""
    if not 1 <= k <= len(model.vocab):
        raise ModelError(f"k must be in [1, {len(model.vocab)}], got {k}")
    summaries = []
    vocab = np.array(model.vocab)
    for topic_id in range(model.K):
        probs = model.phi[topic_id]
        order = sorted(range(len(vocab)), key=lambda j: (-probs[j], vocab[j]))[:k]
        summaries.append(TopicSummary(
            topic_id=topic_id,
            top_words=[(str(vocab[j]), float(probs[j])) for j in order],
        ))
    return summaries


def flag_depression_topics(summaries, who, nrc, min_hits=3) -> list:
    """Mark topics whose top words contain >= min_hits depression terms.

    A hit is a top word present in the term list whose emotion associations
    do not include joy. This is an explicit heuristic stand-in for expert
    validation and is surfaced as such in reports.
    """
    if min_hits < 1:
        raise ModelError(f"min_hits must be >= 1, got {min_hits}")
    out = []
    for s in summaries:
        hits = {w for w, _ in s.top_words if w in who and not nrc.implies_joy(w)}
        out.append(replace(s, depression_flag=len(hits) >= min_hits,
                           matched_terms=hits))
    return out


def doc_topic_proportions(model: TopicModel) -> FeatureMatrix:
    names = [f"topic_{k}" for k in range(model.K)]
    return FeatureMatrix(instance_ids=list(model.doc_ids), names=names,
                         values=model.theta.copy())


def topic_members(model: TopicModel, topic_id) -> list:
    """Doc ids whose dominant topic is `topic_id`."""
    dominant = model.doc_argmax()
    return [model.doc_ids[i] for i in np.flatnonzero(dominant == topic_id)]


def topic_feature_vector(model: TopicModel, topic_id, doc_features: FeatureMatrix) -> FeatureVector:
    """Unweighted mean of member documents' feature rows.

    Membership is argmax theta. doc_features rows are matched to the
    model's documents by instance id; errors when the topic has no members.
    """
    members = topic_members(model, topic_id)
    if not members:
        raise ModelError(f"topic {topic_id} has no member documents")
    pos = {iid: i for i, iid in enumerate(doc_features.instance_ids)}
    try:
        rows = [pos[m] for m in members]
    except KeyError as exc:
        raise ModelError(f"doc features missing instance {exc.args[0]!r}")
    return FeatureVector(names=list(doc_features.names),
                         values=doc_features.values[rows].mean(axis=0))


def topic_feature_matrix(model: TopicModel, doc_features: FeatureMatrix,
                         id_prefix="topic") -> tuple:
    """Topic-level feature matrix over topics that have members.

    Returns (matrix, skipped_topic_ids); memberless topics are skipped so
    callers can decide how to treat them.
    """
    ids, vectors, skipped = [], [], []
    for topic_id in range(model.K):
        try:
            vectors.append(topic_feature_vector(model, topic_id, doc_features))
        except ModelError:
            skipped.append(topic_id)
            continue
        ids.append(f"{id_prefix}_{topic_id}")
    if not vectors:
        raise ModelError("no topic has member documents")
    from .features import stack_rows

    return stack_rows(ids, vectors), skipped


def model_to_json(model: TopicModel) -> str:
    payload = {
        "K": model.K,
        "alpha": model.alpha,
        "beta": model.beta,
        "iterations": model.iterations,
        "seed": model.seed,
        "vocab": model.vocab,
        "doc_ids": model.doc_ids,
        "phi": [[float(v) for v in row] for row in model.phi],
        "theta": [[float(v) for v in row] for row in model.theta],
        "assignments": [int(v) for v in model.assignments],
    }
    return json.dumps(payload, sort_keys=True)


def model_from_json(text) -> TopicModel:
    d = json.loads(text)
    return TopicModel(
        K=d["K"], alpha=d["alpha"], beta=d["beta"], vocab=list(d["vocab"]),
        phi=np.array(d["phi"], dtype=float),
        theta=np.array(d["theta"], dtype=float),
        assignments=np.array(d["assignments"], dtype=np.int32),
        doc_ids=list(d["doc_ids"]), seed=d["seed"], iterations=d["iterations"],
    )


def save_model(model: TopicModel, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(model_to_json(model))


def load_model(path) -> TopicModel:
    with open(path, encoding="utf-8") as fh:
        return model_from_json(fh.read())


def summaries_to_csv(summaries, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["topic_id", "rank", "word", "probability", "flagged"])
        for s in summaries:
            for rank, (word, prob) in enumerate(s.top_words, start=1):
                writer.writerow([s.topic_id, rank, word, repr(prob),
                                 int(s.depression_flag)])
