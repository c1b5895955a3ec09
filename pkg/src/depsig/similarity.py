"""Cross-period topic similarity and participation trends.

Topic pairs are compared across different weekly windows on their retained
depression words: Jaccard on the word sets, KL and Jensen-Shannon on the
probability distributions restricted to the union support. KL/JS smooth
both distributions with epsilon and renormalize, which keeps disjoint
supports finite. Natural log throughout, so JS is bounded by ln 2.
"""

from __future__ import annotations

import csv
import json
import warnings
from collections import Counter, defaultdict
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DepsigError, EvaluationError

DEFAULT_EPSILON = 1e-10


class SynonymMapError(DepsigError):
    pass


@dataclass
class SynonymMap:
    """word -> canonical word; canonicals may not map onward (acyclic)."""

    mapping: dict

    def __post_init__(self):
        clean = {}
        for word, canon in self.mapping.items():
            word, canon = word.lower(), canon.lower()
            clean[word] = canon
        for word, canon in clean.items():
            if canon in clean and clean[canon] != canon:
                raise SynonymMapError(
                    f"synonym chain {word!r} -> {canon!r} -> {clean[canon]!r}; "
                    f"canonical words must map to themselves or be absent")
        self.mapping = clean

    def canonical(self, word):
        return self.mapping.get(word, word)

    @staticmethod
    def empty():
        return SynonymMap(mapping={})


def load_synonym_map(path) -> SynonymMap:
    """Two-column TSV (word, canonical); raises on cycles or bad rows."""
    path = Path(path)
    if not path.exists():
        raise SynonymMapError(f"synonym map not found: {path}")
    mapping = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\r\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise SynonymMapError(
                    f"line {line_no}: expected 'word<TAB>canonical', got {line!r}")
            mapping[parts[0].strip()] = parts[1].strip()
    return SynonymMap(mapping=mapping)


def harmonize_synonyms(words, synonyms: SynonymMap):
    """Replace every word by its canonical form; idempotent, never grows."""
    return {synonyms.canonical(w) for w in words}


def _smooth(p, epsilon):
    p = np.asarray(p, dtype=float)
    if np.any(p < 0):
        raise EvaluationError("probabilities must be non-negative")
    p = p + epsilon
    return p / p.sum()


def kl_divergence(P, Q, epsilon=DEFAULT_EPSILON):
    """KL(P || Q) = sum p_i * ln(p_i / q_i) after epsilon-smoothing and
    renormalizing both inputs. Asymmetric, >= 0."""
    P = np.asarray(P, dtype=float)
    Q = np.asarray(Q, dtype=float)
    if P.shape != Q.shape:
        raise EvaluationError(
            f"distributions must share a support: {P.shape} vs {Q.shape}")
    if epsilon <= 0:
        raise EvaluationError(f"epsilon must be > 0, got {epsilon}")
    p = _smooth(P, epsilon)
    q = _smooth(Q, epsilon)
    return float(np.sum(p * np.log(p / q)))


def js_divergence(P, Q, epsilon=DEFAULT_EPSILON):
    """Jensen-Shannon divergence: half the KL to the mixture from each side.

    Symmetric by construction and bounded by ln 2.
    """
    P = np.asarray(P, dtype=float)
    Q = np.asarray(Q, dtype=float)
    if P.shape != Q.shape:
        raise EvaluationError(
            f"distributions must share a support: {P.shape} vs {Q.shape}")
    if epsilon <= 0:
        raise EvaluationError(f"epsilon must be > 0, got {epsilon}")
    p = _smooth(P, epsilon)
    q = _smooth(Q, epsilon)
    m = 0.5 * (p + q)
    return float(0.5 * np.sum(p * np.log(p / m)) + 0.5 * np.sum(q * np.log(q / m)))


def jaccard_topk(words_a, words_b):
    """|A ∩ B| / |A ∪ B| over word sets; errors on an empty set."""
    a, b = set(words_a), set(words_b)
    if not a or not b:
        raise EvaluationError("jaccard is undefined for an empty word set")
    return len(a & b) / len(a | b)


@dataclass
class RetainedTopic:
    """A topic reduced to its retained depression words.

    `probs` maps canonical word -> probability mass taken from phi,
    synonym-merged and left unnormalized (divergences renormalize).
    """

    window: int
    topic_id: int
    probs: dict

    @property
    def words(self):
        return set(self.probs)


@dataclass
class TopicPairRecord:
    window_a: int
    window_b: int
    topic_i: int
    topic_j: int
    kl: float
    js: float
    jaccard: float


@dataclass
class SimilarityReport:
    pairs: list
    aggregates: dict               # period key -> {mean_kl, mean_js, ...}
    skipped_topics: dict           # window index -> count with no depression words
    period_of_window: dict         # window index -> period label

    def to_dict(self):
        return {
            "aggregates": self.aggregates,
            "skipped_topics": {str(k): v for k, v in self.skipped_topics.items()},
            "period_of_window": {str(k): v for k, v in self.period_of_window.items()},
            "n_pairs": len(self.pairs),
        }

    def to_csv(self, path):
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["window_a", "window_b", "topic_i", "topic_j",
                             "kl", "js", "jaccard"])
            for r in self.pairs:
                writer.writerow([r.window_a, r.window_b, r.topic_i, r.topic_j,
                                 repr(r.kl), repr(r.js), repr(r.jaccard)])

    def to_json(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, sort_keys=True, indent=2)


def retain_depression_words(model, who, nrc, synonyms=None, top_k=15,
                            retain_k=10):
    """Reduce each topic to at most retain_k depression words from its
    top_k, with synonym-merged probabilities; returns (topics, n_skipped)."""
    from .topics import top_words

    synonyms = synonyms or SynonymMap.empty()
    retained, skipped = [], 0
    for summary in top_words(model, k=min(top_k, len(model.vocab))):
        kept = [(w, p) for w, p in summary.top_words
                if w in who and not nrc.implies_joy(w)][:retain_k]
        if not kept:
            skipped += 1
            continue
        probs = defaultdict(float)
        for w, p in kept:
            probs[synonyms.canonical(w)] += p
        retained.append((summary.topic_id, dict(probs)))
    return retained, skipped


def _pair_metrics(probs_i, probs_j, epsilon):
    support = sorted(set(probs_i) | set(probs_j))
    p = np.array([probs_i.get(w, 0.0) for w in support])
    q = np.array([probs_j.get(w, 0.0) for w in support])
    return (kl_divergence(p, q, epsilon), js_divergence(p, q, epsilon),
            jaccard_topk(set(probs_i), set(probs_j)))


def window_similarity_report(window_models, who, nrc, synonyms=None,
                             top_k=15, retain_k=10, epsilon=DEFAULT_EPSILON,
                             aggregate="all_pairs") -> SimilarityReport:
    """Pairwise topic similarity across weekly windows.

    `window_models` is a list of (window_index, period_label, TopicModel).
    Topics are reduced to depression words (term-list hits surviving the
    joy filter, at most retain_k of the top_k, synonyms harmonized);
    topics with none are skipped and counted. Pairs span distinct windows
    only. Aggregates are grouped by period: "before"/"during" when both
    windows share that label, "cross" otherwise. `aggregate` picks the
    period summary: "all_pairs" means over every pair; "best_match"
    takes, per topic of the earlier window, the most similar partner
    (max jaccard, min kl/js) before averaging.
    """
    if top_k < retain_k:
        raise EvaluationError(
            f"top_k={top_k} must be >= retain_k={retain_k}")
    if aggregate not in ("all_pairs", "best_match"):
        raise EvaluationError(f"unknown aggregate mode {aggregate!r}")

    per_window = {}
    period_of_window = {}
    skipped_topics = {}
    for index, period, model in window_models:
        retained, skipped = retain_depression_words(
            model, who, nrc, synonyms, top_k=top_k, retain_k=retain_k)
        skipped_topics[index] = skipped
        period_of_window[index] = period
        if not retained:
            warnings.warn(f"window {index} has no topics with depression words; "
                          f"excluded from aggregates")
            continue
        per_window[index] = retained

    pairs = []
    ordered = sorted(per_window)
    for pos, wa in enumerate(ordered):
        for wb in ordered[pos + 1:]:
            for ti, probs_i in per_window[wa]:
                for tj, probs_j in per_window[wb]:
                    kl, js, jac = _pair_metrics(probs_i, probs_j, epsilon)
                    pairs.append(TopicPairRecord(
                        window_a=wa, window_b=wb, topic_i=ti, topic_j=tj,
                        kl=kl, js=js, jaccard=jac))

    def period_key(record):
        pa = period_of_window[record.window_a]
        pb = period_of_window[record.window_b]
        return pa if pa == pb else "cross"

    grouped = defaultdict(list)
    for record in pairs:
        grouped[period_key(record)].append(record)

    aggregates = {}
    for key, records in sorted(grouped.items()):
        if aggregate == "all_pairs":
            chosen = records
        else:
            best = {}
            for r in records:
                slot = (r.window_a, r.window_b, r.topic_i)
                if slot not in best or r.jaccard > best[slot].jaccard:
                    best[slot] = r
            chosen = list(best.values())
        aggregates[key] = {
            "mean_kl": float(np.mean([r.kl for r in chosen])),
            "mean_js": float(np.mean([r.js for r in chosen])),
            "mean_jaccard": float(np.mean([r.jaccard for r in chosen])),
            "n_pairs": len(chosen),
        }
        # Spearman agreement between the set-based and distribution-based
        # metrics over this period's pairs, when it is defined
        if len(chosen) >= 3:
            from .evaluation import spearman

            jacc = np.array([r.jaccard for r in chosen])
            jsv = np.array([r.js for r in chosen])
            if np.unique(jacc).size > 1 and np.unique(jsv).size > 1:
                rho = spearman(jacc, jsv, n_permutations=1000, seed=0)
                aggregates[key]["spearman_jaccard_vs_js"] = rho.r
                aggregates[key]["spearman_p"] = rho.p

    return SimilarityReport(pairs=pairs, aggregates=aggregates,
                            skipped_topics=skipped_topics,
                            period_of_window=period_of_window)


@dataclass
class TrendReport:
    per_window: list               # (window index, distinct flagged participants)
    per_month: list                # (month, flagged participants, active users, pct)

    def to_dict(self):
        return {
            "per_window": [{"window": w, "participants": c}
                           for w, c in self.per_window],
            "per_month": [{"month": m, "participants": c, "active_users": a,
                           "percentage": pct}
                          for m, c, a, pct in self.per_month],
        }

    def window_csv(self, path):
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["window", "participants"])
            for w, c in self.per_window:
                writer.writerow([w, c])

    def month_csv(self, path):
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["month", "participants", "active_users", "percentage"])
            for m, c, a, pct in self.per_month:
                writer.writerow([m, c, a, repr(pct)])


def participation_trend(window_entries, min_posts=5) -> TrendReport:
    """Distinct users engaging with flagged topics, weekly and monthly.

    `window_entries` is a list of (TimeWindow, Corpus, TopicModel,
    flagged_topic_ids). A user participates in a window when at least one
    of their posts has its dominant topic flagged. Monthly percentages
    divide flagged participants by that month's active users (those with
    at least min_posts posts in the month); participants outside the
    active set are not counted, keeping the percentage in [0, 100].
    """
    per_window = []
    month_participants = defaultdict(set)
    month_post_counts = defaultdict(Counter)

    for window, corpus, model, flagged in window_entries:
        post_user = {p.id: p.user_id for p in corpus}
        post_month = {p.id: f"{p.day.year:04d}-{p.day.month:02d}" for p in corpus}
        for p in corpus:
            month_post_counts[post_month[p.id]][p.user_id] += 1

        participants = set()
        if flagged and len(model.doc_ids) > 0:
            dominant = model.doc_argmax()
            for doc_id, topic in zip(model.doc_ids, dominant):
                if int(topic) in flagged and doc_id in post_user:
                    participants.add(post_user[doc_id])
                    month_participants[post_month[doc_id]].add(post_user[doc_id])
        per_window.append((window.index, len(participants)))

    per_month = []
    for month in sorted(month_post_counts):
        active = {u for u, n in month_post_counts[month].items() if n >= min_posts}
        engaged = month_participants.get(month, set()) & active
        pct = 100.0 * len(engaged) / len(active) if active else 0.0
        per_month.append((month, len(engaged), len(active), pct))

    return TrendReport(per_window=per_window, per_month=per_month)
