"""The four feature families and feature-matrix plumbing.

Families, in fixed assembly order:
  LIWC   -- per-category token proportions from a category dictionary
  PLUS   -- psycholinguistic property averages over depression-related words
            (term-list hits surviving the joy-association filter)
  bigram -- TF-IDF of adjacent token pairs, (1 + ln n) * ln(T / T_w)
  LDA    -- per-document topic proportions (built in the topics module)

Natural log everywhere.
"""

from __future__ import annotations

import csv
import json
import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .errors import FeatureError

FEATURE_FAMILIES = ("LIWC", "PLUS", "bigram", "LDA")

FEATURE_SETS = (
    "LIWC",
    "LIWC+LDA",
    "LIWC+bigram",
    "LIWC+bigram+LDA",
    "LIWC+PLUS+bigram+LDA",
)


@dataclass
class FeatureVector:
    names: list
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if len(self.names) != self.values.shape[0]:
            raise FeatureError(
                f"{len(self.names)} names but {self.values.shape[0]} values")
        if len(set(self.names)) != len(self.names):
            raise FeatureError("feature names must be unique")
        if not np.all(np.isfinite(self.values)):
            raise FeatureError("feature values must be finite")


@dataclass
class FeatureMatrix:
    instance_ids: list
    names: list
    values: np.ndarray  # (n_instances, n_features)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise FeatureError("feature matrix must be 2-D")
        if self.values.shape != (len(self.instance_ids), len(self.names)):
            raise FeatureError(
                f"shape {self.values.shape} does not match "
                f"{len(self.instance_ids)} instances x {len(self.names)} features")
        if len(set(self.names)) != len(self.names):
            raise FeatureError("feature names must be unique")
        if not np.all(np.isfinite(self.values)):
            raise FeatureError("feature values must be finite")

    @property
    def shape(self):
        return self.values.shape

    def row(self, instance_id) -> FeatureVector:
        i = self.instance_ids.index(instance_id)
        return FeatureVector(names=list(self.names), values=self.values[i].copy())

    def select_columns(self, names):
        idx = [self.names.index(n) for n in names]
        return FeatureMatrix(instance_ids=list(self.instance_ids),
                             names=list(names),
                             values=self.values[:, idx].copy())

    def to_csv(self, path):
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["instance_id", *self.names])
            for iid, row in zip(self.instance_ids, self.values):
                writer.writerow([iid, *(repr(float(v)) for v in row)])

    @classmethod
    def from_csv(cls, path):
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            ids, rows = [], []
            for rec in reader:
                ids.append(rec[0])
                rows.append([float(v) for v in rec[1:]])
        return cls(instance_ids=ids, names=header[1:],
                   values=np.array(rows, dtype=float).reshape(len(ids), len(header) - 1))

    def to_jsonl(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            for iid, row in zip(self.instance_ids, self.values):
                rec = {"instance_id": iid,
                       "features": {n: float(v) for n, v in zip(self.names, row)}}
                fh.write(json.dumps(rec, sort_keys=True) + "\n")


def stack_rows(instance_ids, vectors) -> FeatureMatrix:
    """Stack per-instance FeatureVectors that share one name ordering."""
    if not vectors:
        raise FeatureError("no feature vectors to stack")
    names = vectors[0].names
    for v in vectors[1:]:
        if v.names != names:
            raise FeatureError("feature vectors disagree on name ordering")
    return FeatureMatrix(instance_ids=list(instance_ids), names=list(names),
                         values=np.vstack([v.values for v in vectors]))


def tfidf_bigrams(docs, vocab_size=2000) -> FeatureMatrix:
    """TF-IDF matrix over the `vocab_size` bigrams with highest corpus-total
    score: score(w, t) = (1 + ln n_{w,t}) * ln(T / T_w) when n >= 1, else 0.

    Ties in the vocabulary ranking break lexicographically.
    """
    if not docs:
        raise FeatureError("tfidf_bigrams needs at least one document")
    if vocab_size < 1:
        raise FeatureError(f"vocab_size must be >= 1, got {vocab_size}")

    T = len(docs)
    doc_counts = [Counter(d.bigrams) for d in docs]
    df = Counter()
    for counts in doc_counts:
        df.update(counts.keys())
    if not df:
        raise FeatureError("no bigram occurs in the corpus (all docs too short)")

    total = {}
    for w, d_w in df.items():
        idf = math.log(T / d_w)
        total[w] = idf * sum(1.0 + math.log(c[w]) for c in doc_counts if w in c)
    vocab = sorted(total, key=lambda w: (-total[w], w))[:vocab_size]
    col = {w: j for j, w in enumerate(vocab)}

    values = np.zeros((T, len(vocab)))
    for i, counts in enumerate(doc_counts):
        for w, n in counts.items():
            j = col.get(w)
            if j is not None:
                values[i, j] = (1.0 + math.log(n)) * math.log(T / df[w])
    return FeatureMatrix(instance_ids=[d.post_id for d in docs],
                         names=list(vocab), values=values)


def liwc_features(doc, lexicon, pronoun_category, categories=None) -> FeatureVector:
    """Per-category proportions of matching tokens for one document.

    `categories` restricts which category ids become features (default: all
    declared); the pronoun category is always included, which carries the
    first-person-pronoun proportion.
    """
    if not doc.tokens:
        raise FeatureError(f"document {doc.post_id!r} has no tokens")
    if pronoun_category not in lexicon.categories:
        raise FeatureError(f"pronoun category {pronoun_category} is not declared")

    from .lexicon import match_categories

    enabled = list(categories) if categories is not None else lexicon.category_ids()
    if pronoun_category not in enabled:
        enabled = [pronoun_category, *enabled]

    counts = Counter()
    for token in doc.tokens:
        for cid in match_categories(lexicon, token):
            counts[cid] += 1

    n = len(doc.tokens)
    names = [lexicon.category_name(cid) for cid in enabled]
    values = np.array([counts.get(cid, 0) / n for cid in enabled])
    return FeatureVector(names=names, values=values)


def liwc_feature_matrix(docs, lexicon, pronoun_category, categories=None) -> FeatureMatrix:
    vectors = [liwc_features(d, lexicon, pronoun_category, categories) for d in docs]
    return stack_rows([d.post_id for d in docs], vectors)


def depression_terms(doc, who, nrc):
    """Term-list matches in the document that survive the joy filter.

    Returns (surviving, spans): the matched terms with any word whose
    emotion associations include joy discarded, plus their token spans.
    """
    matches = who.find_matches(doc.tokens)
    surviving, spans = [], []
    for start, end, term in matches:
        if nrc.implies_joy(term):
            continue
        surviving.append(term)
        spans.append((start, end))
    return surviving, spans


def plus_features(doc, who, nrc, mrc) -> FeatureVector:
    """Psycholinguistic property averages over surviving depression words.

    One feature per property (mean of non-missing scores of matched words
    found in the database, 0 when none), a match-count feature, and a
    coverage flag that is 0 when no word survives the joy filter.
    """
    surviving, _ = depression_terms(doc, who, nrc)

    names = [*mrc.properties, "match_count", "coverage"]
    values = np.zeros(len(names))
    values[-2] = len(surviving)
    values[-1] = 1.0 if surviving else 0.0
    if surviving:
        for j, prop in enumerate(mrc.properties):
            scores = [s for s in (mrc.score(w, prop) for w in surviving) if s is not None]
            if scores:
                values[j] = sum(scores) / len(scores)
    return FeatureVector(names=names, values=values)


def plus_feature_matrix(docs, who, nrc, mrc) -> FeatureMatrix:
    vectors = [plus_features(d, who, nrc, mrc) for d in docs]
    return stack_rows([d.post_id for d in docs], vectors)


def weak_label(doc, who, nrc) -> float:
    """Fraction of tokens covered by depression terms surviving the joy
    filter; the lexicon-derived substitute for an external target."""
    if not doc.tokens:
        raise FeatureError(f"document {doc.post_id!r} has no tokens")
    _, spans = depression_terms(doc, who, nrc)
    covered = sum(end - start for start, end in spans)
    return covered / len(doc.tokens)


def weak_labels(docs, who, nrc) -> np.ndarray:
    return np.array([weak_label(d, who, nrc) for d in docs])


def parse_feature_set(set_spec) -> list:
    """Validate a feature-set name and return its families in fixed order."""
    normalized = set_spec.replace("bi-gram", "bigram").strip()
    if normalized not in FEATURE_SETS:
        raise FeatureError(
            f"unknown feature set {set_spec!r}; expected one of {FEATURE_SETS}")
    requested = set(normalized.split("+"))
    return [f for f in FEATURE_FAMILIES if f in requested]


def assemble_features(parts, set_spec) -> FeatureMatrix:
    """Column-wise concatenation of family matrices in fixed order
    (LIWC, PLUS, bigram, LDA), restricted to `set_spec`.

    `parts` maps family name -> FeatureMatrix; all parts must share the
    same instance ids in the same order. Output names carry a family
    prefix, e.g. ``liwc:negemo``.
    """
    families = parse_feature_set(set_spec)
    missing = [f for f in families if f not in parts]
    if missing:
        raise FeatureError(f"feature set {set_spec!r} needs missing families: {missing}")

    reference = parts[families[0]].instance_ids
    for fam in families[1:]:
        ids = parts[fam].instance_ids
        if ids != reference:
            if len(ids) != len(reference):
                raise FeatureError(
                    f"family {fam!r} has {len(ids)} instances, expected {len(reference)}")
            got, expected = next((b, a) for a, b in zip(reference, ids) if a != b)
            raise FeatureError(
                f"family {fam!r} instances disagree: got id {got!r} where "
                f"{expected!r} was expected")

    names, blocks = [], []
    for fam in families:
        part = parts[fam]
        names += [f"{fam.lower()}:{n}" for n in part.names]
        blocks.append(part.values)
    return FeatureMatrix(instance_ids=list(reference), names=names,
                         values=np.hstack(blocks))


def aggregate_by_user(matrix, user_of_instance) -> FeatureMatrix:
    """Mean-pool instance rows to user-level rows (unweighted).

    `user_of_instance` maps instance id -> user id. Users are emitted in
    order of first appearance.
    """
    order, groups = [], {}
    for i, iid in enumerate(matrix.instance_ids):
        user = user_of_instance[iid]
        if user not in groups:
            groups[user] = []
            order.append(user)
        groups[user].append(i)
    values = np.vstack([matrix.values[groups[u]].mean(axis=0) for u in order])
    return FeatureMatrix(instance_ids=order, names=list(matrix.names), values=values)
