"""End-to-end pipeline: ingest, filter, window, lexicons, features, topics,
then the configured experiment stages, with a reproducibility manifest.

Every output file is written to `<name>.partial` and renamed into place
when its stage completes, so an aborted run leaves partial files visible.
All randomness flows from the root seed through named substreams; report
bytes are identical across runs (timestamps live only in the manifest).
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
import warnings
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import corpus as corpus_mod
from . import svg
from .config import PipelineConfig, derive_seed
from .errors import DepsigError, PipelineError
from .evaluation import (
    EvalReport,
    ModelSpec,
    cross_validate,
    f1_report,
    minmax_train_test,
    reports_to_csv,
    stratified_kfold,
    temporal_split,
)
from .features import (
    aggregate_by_user,
    assemble_features,
    liwc_feature_matrix,
    plus_feature_matrix,
    tfidf_bigrams,
    weak_labels,
)
from .lexicon import (
    parse_category_dictionary,
    parse_emotion_lexicon,
    parse_psycholinguistic_db,
    parse_term_list,
)
from .similarity import (
    SynonymMap,
    load_synonym_map,
    participation_trend,
    window_similarity_report,
)
from .topics import (
    doc_topic_proportions,
    fit_lda,
    flag_depression_topics,
    save_model,
    summaries_to_csv,
    top_words,
    topic_feature_matrix,
)

PAPER_CLASSIFIER_DEFAULTS = {
    "svm": {"lambda_reg": 1e-4, "kernel": "rbf", "gamma": 0.5},
    "logistic": {"l2_strength": 1e-4},
    "forest": {"n_trees": 500, "max_depth": 3, "features_per_split": 30},
    "elastic_net": {"lambda_en": 0.01, "l1_ratio": 0.5},
}


class _Emitter:
    """Writes stage outputs atomically and records them for the manifest."""

    def __init__(self, out_dir):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.files = []

    def emit(self, name, write_fn):
        final = self.out_dir / name
        partial = self.out_dir / (name + ".partial")
        write_fn(partial)
        os.replace(partial, final)
        self.files.append(final)
        return final

    def emit_text(self, name, text):
        return self.emit(name, lambda p: Path(p).write_text(text, encoding="utf-8"))

    def emit_json(self, name, payload):
        return self.emit_text(name, json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class PipelineState:
    cfg: PipelineConfig
    emitter: _Emitter
    corpus: object = None
    labels_by_post: dict = field(default_factory=dict)
    windows: list = field(default_factory=list)     # (TimeWindow, Corpus)
    lexicons: dict = field(default_factory=dict)
    docs: list = field(default_factory=list)        # tokenized, empties dropped
    doc_index: dict = field(default_factory=dict)   # post id -> position
    families: dict = field(default_factory=dict)    # LIWC/PLUS/bigram matrices
    window_models: list = field(default_factory=list)
    # entries: dict(window, corpus, docs, model, summaries, flagged)
    global_model: object = None
    global_summaries: list = field(default_factory=list)
    eval_rows: list = field(default_factory=list)


def run_pipeline(cfg: PipelineConfig):
    """Run the configured pipeline end to end; returns the manifest dict."""
    state = PipelineState(cfg=cfg, emitter=_Emitter(cfg.out_dir))
    stages = [
        ("ingest", _stage_ingest),
        ("filter", _stage_filter),
        ("window", _stage_window),
        ("lexicons", _stage_lexicons),
        ("features", _stage_features),
        ("topics", _stage_topics),
    ]
    if "evaluate" in cfg.stages:
        stages.append(("evaluate", _stage_evaluate))
    if "similarity" in cfg.stages:
        stages.append(("similarity", _stage_similarity))
    if "trend" in cfg.stages:
        stages.append(("trend", _stage_trend))

    for stage_name, stage_fn in stages:
        try:
            stage_fn(state)
        except PipelineError:
            raise
        except Exception as exc:
            raise PipelineError(stage_name, exc) from exc

    manifest = {
        "seed": cfg.seed,
        "config": cfg.to_dict(),
        "created_at": datetime.now(timezone.utc).isoformat(),
        "files": {p.name: _sha256(p) for p in state.emitter.files},
    }
    state.emitter.out_dir.joinpath("manifest.json").write_text(
        json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return manifest


# ---------------------------------------------------------------------------
# stages
# ---------------------------------------------------------------------------

def _stage_ingest(state):
    cfg = state.cfg
    result = corpus_mod.load_posts(cfg.corpus_path, format=cfg.corpus_format)
    state.corpus = result.corpus
    state.emitter.emit(
        "rejections.csv",
        lambda p: corpus_mod.write_rejections_csv(result.rejections, p))
    if cfg.label_source == "column":
        state.labels_by_post = read_label_column(
            cfg.corpus_path, cfg.corpus_format, cfg.label_column)


def _stage_filter(state):
    cfg = state.cfg
    filter_cfg = corpus_mod.FilterConfig(**cfg.filter_options)
    result = corpus_mod.apply_filters(state.corpus, filter_cfg)
    corpus = result.corpus
    counts = dict(result.removed)
    if cfg.min_user_posts > 1:
        active = corpus_mod.select_active_users(corpus, cfg.min_user_posts)
        kept = [p for p in corpus if p.user_id in active]
        counts["inactive_user"] = len(corpus) - len(kept)
        corpus = corpus_mod.Corpus(kept)
    state.corpus = corpus
    state.emitter.emit_json("filter_counts.json",
                            {"removed": counts, "kept": len(corpus)})
    state.emitter.emit("filtered.jsonl",
                       lambda p: corpus_mod.write_jsonl(corpus, p))


def _stage_window(state):
    state.windows = corpus_mod.window_by_week(state.corpus,
                                              state.cfg.window_origin)

    def write(path):
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["window", "start", "end", "posts"])
            for window, sub in state.windows:
                writer.writerow([window.index, window.start.isoformat(),
                                 window.end.isoformat(), len(sub)])

    state.emitter.emit("windows.csv", write)


def _stage_lexicons(state):
    paths = state.cfg.lexicon_paths
    lex = {
        "liwc": parse_category_dictionary(paths["liwc"]),
        "nrc": parse_emotion_lexicon(paths["nrc"]),
        "mrc": parse_psycholinguistic_db(paths["mrc"]),
        "who": parse_term_list(paths["who"]),
        "synonyms": (load_synonym_map(paths["synonyms"])
                     if "synonyms" in paths else SynonymMap.empty()),
    }
    state.lexicons = lex
    state.emitter.emit_json("lexicons.json", {
        "categories": len(lex["liwc"].categories),
        "category_entries": len(lex["liwc"].entries),
        "emotion_words": len(lex["nrc"].associations),
        "psycholinguistic_words": len(lex["mrc"].records),
        "glossary_terms": len(lex["who"]),
        "synonym_rules": len(lex["synonyms"].mapping),
    })


def resolve_pronoun_category(cfg, liwc):
    if cfg.pronoun_category is not None:
        return cfg.pronoun_category
    for cid, name in liwc.categories.items():
        if name == "i":
            return cid
    return next(iter(liwc.categories))


def _stage_features(state):
    cfg = state.cfg
    docs, dropped = corpus_mod.tokenize_corpus(state.corpus)
    if not docs:
        raise DepsigError("no documents left after tokenization")
    state.docs = docs
    state.doc_index = {d.post_id: i for i, d in enumerate(docs)}

    lex = state.lexicons
    pronoun = resolve_pronoun_category(cfg, lex["liwc"])
    state.families = {
        "LIWC": liwc_feature_matrix(docs, lex["liwc"], pronoun),
        "PLUS": plus_feature_matrix(docs, lex["who"], lex["nrc"], lex["mrc"]),
        "bigram": tfidf_bigrams(docs, vocab_size=cfg.bigram_vocab),
    }
    state.emitter.emit_json("features_summary.json", {
        "documents": len(docs),
        "dropped_empty": len(dropped),
        "columns": {fam: len(m.names) for fam, m in state.families.items()},
    })


def _stage_topics(state):
    cfg = state.cfg
    lex = state.lexicons
    needs_windows = (cfg.protocol == "temporal"
                     or "similarity" in cfg.stages or "trend" in cfg.stages)

    if cfg.protocol == "kfold":
        model = fit_lda(state.docs, K=cfg.lda["topics"], alpha=cfg.lda["alpha"],
                        beta=cfg.lda["beta"], iterations=cfg.lda["iterations"],
                        seed=derive_seed(cfg.seed, "lda", "global"))
        summaries = flag_depression_topics(
            top_words(model, k=min(cfg.lda["top_words"], len(model.vocab))),
            lex["who"], lex["nrc"], min_hits=cfg.lda["min_hits"])
        state.global_model = model
        state.global_summaries = summaries
        state.emitter.emit("topics_global.json", lambda p: save_model(model, p))
        state.emitter.emit("summaries_global.csv",
                           lambda p: summaries_to_csv(summaries, p))

    if needs_windows:
        for window, sub in state.windows:
            docs = [state.docs[state.doc_index[p.id]] for p in sub
                    if p.id in state.doc_index]
            if not docs:
                warnings.warn(f"window {window.index} is empty; skipped")
                continue
            if len(docs) < cfg.lda["topics"]:
                raise DepsigError(
                    f"window {window.index} has {len(docs)} documents, fewer "
                    f"than lda.topics={cfg.lda['topics']}")
            model = fit_lda(docs, K=cfg.lda["topics"], alpha=cfg.lda["alpha"],
                            beta=cfg.lda["beta"],
                            iterations=cfg.lda["iterations"],
                            seed=derive_seed(cfg.seed, "lda", window.index))
            summaries = flag_depression_topics(
                top_words(model, k=min(cfg.lda["top_words"], len(model.vocab))),
                lex["who"], lex["nrc"], min_hits=cfg.lda["min_hits"])
            flagged = {s.topic_id for s in summaries if s.depression_flag}
            state.window_models.append({
                "window": window, "corpus": sub, "docs": docs, "model": model,
                "summaries": summaries, "flagged": flagged,
            })
            tag = f"w{window.index:03d}"
            state.emitter.emit(f"topics_{tag}.json",
                               lambda p, m=model: save_model(m, p))
            state.emitter.emit(f"summaries_{tag}.csv",
                               lambda p, s=summaries: summaries_to_csv(s, p))


def _doc_labels(state):
    cfg = state.cfg
    lex = state.lexicons
    if cfg.label_source == "column":
        missing = [d.post_id for d in state.docs
                   if d.post_id not in state.labels_by_post]
        if missing:
            raise DepsigError(
                f"label column {cfg.label_column!r} missing for "
                f"{len(missing)} posts (first: {missing[0]!r})")
        return np.array([state.labels_by_post[d.post_id] for d in state.docs])
    return weak_labels(state.docs, lex["who"], lex["nrc"])


def _binarize(y, threshold):
    y = np.asarray(y, dtype=float)
    if set(np.unique(y)) <= {0.0, 1.0}:
        return y.astype(int)
    lo, hi = y.min(), y.max()
    scaled = (y - lo) / (hi - lo) if hi > lo else np.zeros_like(y)
    return (scaled >= threshold).astype(int)


def _model_spec(state, kind):
    params = dict(PAPER_CLASSIFIER_DEFAULTS.get(kind, {}))
    params.update(state.cfg.model_params.get(kind, {}))
    if kind == "forest":
        params.setdefault("seed", derive_seed(state.cfg.seed, "forest"))
    if kind == "svm":
        # features are min-max scaled at the pipeline level; internal
        # z-scaling would blow up sparse TF-IDF columns (see fit_svm)
        params.setdefault("standardize", False)
    return ModelSpec(kind, params)


def _stage_evaluate(state):
    if state.cfg.protocol == "kfold":
        _evaluate_kfold(state)
    else:
        _evaluate_temporal(state)


def _evaluate_kfold(state):
    cfg = state.cfg
    lda_features = doc_topic_proportions(state.global_model)
    parts = dict(state.families, LDA=lda_features)
    y = _doc_labels(state)

    rows = []
    results = {}
    for feature_set in cfg.feature_sets:
        X = assemble_features(parts, feature_set)
        ids = X.instance_ids
        target = y
        if cfg.resolved_instances() == "user":
            user_of = {p.id: p.user_id for p in state.corpus}
            X = aggregate_by_user(X, user_of)
            by_user = {}
            for iid, value in zip(ids, y):
                by_user.setdefault(user_of[iid], []).append(value)
            target = np.array([np.mean(by_user[u]) for u in X.instance_ids])
        folds = stratified_kfold(target, k=cfg.folds,
                                 seed=derive_seed(cfg.seed, "folds"))
        report = cross_validate(
            X.values, target, _model_spec(state, "elastic_net"), folds,
            p_method=cfg.p_method, n_permutations=cfg.permutations,
            seed=derive_seed(cfg.seed, "permutation", feature_set),
            config={"feature_set": feature_set,
                    "instances": cfg.resolved_instances(),
                    "seed": cfg.seed})
        rows.append((feature_set, "elastic_net", report))
        results[feature_set] = report.to_dict()

    state.eval_rows = rows
    state.emitter.emit("regression_report.csv",
                       lambda p: reports_to_csv(rows, p))
    state.emitter.emit_json("eval_regression.json", results)


def _window_doc_parts(state, entry):
    from .features import FeatureMatrix

    ids = [d.post_id for d in entry["docs"]]
    rows = [state.doc_index[i] for i in ids]
    parts = {}
    for fam, matrix in state.families.items():
        parts[fam] = FeatureMatrix(instance_ids=ids, names=list(matrix.names),
                                   values=matrix.values[rows])
    parts["LDA"] = doc_topic_proportions(entry["model"])
    return parts


def _evaluate_temporal(state):
    cfg = state.cfg
    instances = cfg.resolved_instances()
    doc_y = _binarize(_doc_labels(state), cfg.label_threshold)
    label_of_post = dict(zip((d.post_id for d in state.docs), doc_y))

    per_set = {}
    for feature_set in cfg.feature_sets:
        blocks, labels, window_ids = [], [], []
        for entry in state.window_models:
            assembled = assemble_features(_window_doc_parts(state, entry),
                                          feature_set)
            if instances == "topic":
                matrix, skipped = topic_feature_matrix(
                    entry["model"], assembled,
                    id_prefix=f"w{entry['window'].index}_topic")
                flagged = entry["flagged"]
                kept_ids = [int(iid.rsplit("_", 1)[1]) for iid in matrix.instance_ids]
                labels += [int(t in flagged) for t in kept_ids]
                blocks.append(matrix.values)
                window_ids += [entry["window"].index] * len(matrix.instance_ids)
            else:
                blocks.append(assembled.values)
                labels += [label_of_post[i] for i in assembled.instance_ids]
                window_ids += [entry["window"].index] * len(assembled.instance_ids)
        X = np.vstack(blocks)
        y = np.array(labels, dtype=int)
        w = np.array(window_ids)
        per_set[feature_set] = (X, y, w)

    rows = []
    table = {}
    for feature_set, (X, y, w) in per_set.items():
        train, test = temporal_split(w)
        X_train, X_test = minmax_train_test(X[train], X[test])
        y_train, y_test = y[train], y[test]
        table[feature_set] = {}
        for kind in cfg.classifiers:
            spec = _model_spec(state, kind)
            report = _fit_score_temporal(spec, X_train, y_train, X_test, y_test,
                                         config={"feature_set": feature_set,
                                                 "instances": instances,
                                                 "seed": cfg.seed})
            rows.append((feature_set, kind, report))
            table[feature_set][kind] = report.metrics["f1"]

    state.eval_rows = rows

    def write_table(path):
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["feature_set", *cfg.classifiers])
            for feature_set in cfg.feature_sets:
                writer.writerow([feature_set,
                                 *(repr(table[feature_set][k])
                                   for k in cfg.classifiers)])

    state.emitter.emit("temporal_f1.csv", write_table)
    payload = {fs: {} for fs in cfg.feature_sets}
    for feature_set, kind, report in rows:
        payload[feature_set][kind] = report.to_dict()
    state.emitter.emit_json("eval_temporal.json", payload)


def _fit_score_temporal(spec, X_train, y_train, X_test, y_test, config):
    from .evaluation import _fit_spec, _predict_spec

    model = _fit_spec(spec, X_train, y_train.astype(float))
    _, labels = _predict_spec(spec, model, X_test)
    m = f1_report(labels, y_test)
    return EvalReport(
        task="classification",
        metrics={"precision": m.precision, "recall": m.recall, "f1": m.f1},
        p_values={}, per_fold=[],
        config=dict(config, model=spec.kind, model_params=spec.params,
                    split="temporal", n_train=int(len(y_train)),
                    n_test=int(len(y_test))))


def _period_of_window(state, window):
    boundary = state.cfg.during_start or state.windows[0][0].start
    return "before" if window.start < boundary else "during"


def _stage_similarity(state):
    cfg = state.cfg
    lex = state.lexicons
    entries = [(e["window"].index, _period_of_window(state, e["window"]),
                e["model"]) for e in state.window_models]
    report = window_similarity_report(
        entries, lex["who"], lex["nrc"], synonyms=lex["synonyms"],
        top_k=cfg.similarity["top_k"], retain_k=cfg.similarity["retain_k"],
        epsilon=cfg.similarity["epsilon"],
        aggregate=cfg.similarity["aggregate"])
    state.emitter.emit("similarity_pairs.csv", report.to_csv)
    state.emitter.emit("similarity.json", report.to_json)

    # monthly similarity trend over same-month window pairs
    month_of = {e["window"].index: f"{e['window'].start.year:04d}-"
                                   f"{e['window'].start.month:02d}"
                for e in state.window_models}
    by_month = {}
    for record in report.pairs:
        ma, mb = month_of[record.window_a], month_of[record.window_b]
        if ma == mb:
            by_month.setdefault(ma, []).append(record)
    months = sorted(by_month)
    if months:
        kl = [float(np.mean([r.kl for r in by_month[m]])) for m in months]
        js = [float(np.mean([r.js for r in by_month[m]])) for m in months]
        chart = svg.line_chart(months, [("KL", kl), ("JS", js)],
                               "Monthly topic-similarity trend", "divergence")
        state.emitter.emit_text("similarity_trend.svg", chart)


def _stage_trend(state):
    cfg = state.cfg
    entries = [(e["window"], e["corpus"], e["model"], e["flagged"])
               for e in state.window_models]
    report = participation_trend(entries, min_posts=cfg.trend_min_posts)
    state.emitter.emit("trend_weekly.csv", report.window_csv)
    state.emitter.emit("trend_monthly.csv", report.month_csv)

    # weekly participant bars grouped by month
    month_weeks = {}
    for e in state.window_models:
        window = e["window"]
        month = f"{window.start.year:04d}-{window.start.month:02d}"
        month_weeks.setdefault(month, []).append(window.index)
    counts = dict(report.per_window)
    months = sorted(month_weeks)
    max_weeks = max((len(v) for v in month_weeks.values()), default=0)
    series = []
    for w in range(max_weeks):
        values = [counts.get(month_weeks[m][w], 0) if w < len(month_weeks[m])
                  else 0 for m in months]
        series.append((f"W{w + 1}", values))
    chart = svg.grouped_bar_chart(
        months, series, "Participants in depression-indicative topics",
        "distinct users")
    state.emitter.emit_text("trend_chart.svg", chart)


def read_label_column(path, format, column) -> dict:
    """Side-scan the raw corpus file for an external label column."""
    labels = {}
    if format == "jsonl":
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError:
                    continue
                if isinstance(rec, dict) and column in rec and "id" in rec:
                    labels[str(rec["id"])] = float(rec[column])
    else:
        with open(path, encoding="utf-8", newline="") as fh:
            for rec in csv.DictReader(fh):
                if rec.get(column) not in (None, "") and rec.get("id"):
                    labels[str(rec["id"])] = float(rec[column])
    return labels
