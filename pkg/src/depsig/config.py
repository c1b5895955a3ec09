"""Pipeline configuration: YAML parsing, strict validation, defaults.

Unknown keys are rejected (with a did-you-mean suggestion) so a typo can
never silently fall back to a default. A seed is required; every random
stage derives its own substream from it.
"""

from __future__ import annotations

import difflib
import zlib
from dataclasses import dataclass, field
from datetime import date, datetime
from pathlib import Path

import numpy as np
import yaml

from .errors import ConfigError
from .features import FEATURE_SETS, parse_feature_set

_SCHEMA = {
    "seed": None,
    "format": None,
    "paths": {"corpus", "liwc", "nrc", "mrc", "who", "synonyms", "out"},
    "filter": {"keywords", "exclusion_cooccurrence", "allowed_languages",
               "drop_retweets", "drop_media_only", "drop_keyword_only",
               "dedup", "date_range", "min_user_posts"},
    "window": {"origin"},
    "lda": {"topics", "alpha", "beta", "iterations", "min_hits", "top_words"},
    "features": {"sets", "bigram_vocab", "pronoun_category"},
    "labels": {"source", "column", "threshold"},
    "evaluation": {"protocol", "folds", "instances", "classifiers",
                   "p_method", "permutations", "elastic_net", "svm",
                   "forest", "logistic"},
    "similarity": {"top_k", "retain_k", "epsilon", "aggregate",
                   "during_start"},
    "trend": {"min_posts"},
    "stages": None,
}

DEFAULT_FEATURE_SETS = list(FEATURE_SETS)

CLASSIFIER_KINDS = ("svm", "logistic", "forest")


@dataclass
class PipelineConfig:
    seed: int
    corpus_path: Path
    lexicon_paths: dict                 # liwc/nrc/mrc/who (+ synonyms)
    out_dir: Path
    corpus_format: str = "jsonl"
    filter_options: dict = field(default_factory=dict)
    min_user_posts: int = 0
    window_origin: date | None = None   # None = corpus minimum date
    lda: dict = field(default_factory=lambda: {
        "topics": 50, "alpha": 0.01, "beta": 0.01, "iterations": 1000,
        "min_hits": 3, "top_words": 15})
    feature_sets: list = field(default_factory=lambda: list(DEFAULT_FEATURE_SETS))
    bigram_vocab: int = 2000
    pronoun_category: int | None = None  # None = category named "i", else first
    label_source: str = "weak"           # weak | column
    label_column: str = "label"
    label_threshold: float = 0.5
    protocol: str = "kfold"              # kfold | temporal
    folds: int = 10
    instances: str | None = None         # document | user | topic
    classifiers: list = field(default_factory=lambda: list(CLASSIFIER_KINDS))
    p_method: str = "permutation"
    permutations: int = 1000
    model_params: dict = field(default_factory=dict)  # per classifier kind
    similarity: dict = field(default_factory=lambda: {
        "top_k": 15, "retain_k": 10, "epsilon": 1e-10,
        "aggregate": "all_pairs"})
    during_start: date | None = None     # None = window origin
    trend_min_posts: int = 5
    stages: list = field(default_factory=lambda: ["evaluate", "similarity",
                                                  "trend"])

    def resolved_instances(self):
        if self.instances:
            return self.instances
        return "topic" if self.protocol == "temporal" else "document"

    def to_dict(self):
        def plain(value):
            if isinstance(value, frozenset):
                return sorted(value)
            if isinstance(value, tuple):
                return [plain(v) for v in value]
            if isinstance(value, date):
                return value.isoformat()
            return value

        return {
            "seed": self.seed,
            "format": self.corpus_format,
            "paths": {"corpus": str(self.corpus_path),
                      "out": str(self.out_dir),
                      **{k: str(v) for k, v in self.lexicon_paths.items()}},
            "filter": {**{k: plain(v) for k, v in self.filter_options.items()},
                       "min_user_posts": self.min_user_posts},
            "window": {"origin": self.window_origin.isoformat()
                       if self.window_origin else "auto"},
            "lda": dict(self.lda),
            "features": {"sets": list(self.feature_sets),
                         "bigram_vocab": self.bigram_vocab,
                         "pronoun_category": self.pronoun_category},
            "labels": {"source": self.label_source,
                       "column": self.label_column,
                       "threshold": self.label_threshold},
            "evaluation": {"protocol": self.protocol, "folds": self.folds,
                           "instances": self.resolved_instances(),
                           "classifiers": list(self.classifiers),
                           "p_method": self.p_method,
                           "permutations": self.permutations,
                           **{k: dict(v) for k, v in self.model_params.items()}},
            "similarity": dict(self.similarity,
                               during_start=self.during_start.isoformat()
                               if self.during_start else "auto"),
            "trend": {"min_posts": self.trend_min_posts},
            "stages": list(self.stages),
        }


def _all_schema_keys():
    """Every known key, mapped to its dotted path for suggestions."""
    known = {key: key for key in _SCHEMA}
    for section, subkeys in _SCHEMA.items():
        for sub in subkeys or ():
            known.setdefault(sub, f"{section}.{sub}")
    return known


def _suggest(key, candidates):
    if isinstance(candidates, dict):
        close = difflib.get_close_matches(key, candidates, n=1)
        return f"; did you mean {candidates[close[0]]!r}?" if close else ""
    close = difflib.get_close_matches(key, candidates, n=1)
    return f"; did you mean {close[0]!r}?" if close else ""


def _check_unknown_keys(raw, strict):
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")
    for key, value in raw.items():
        if key not in _SCHEMA:
            message = f"unknown config key {key!r}" + _suggest(key, _all_schema_keys())
            if strict:
                raise ConfigError(message)
            continue
        allowed = _SCHEMA[key]
        if allowed is None or not isinstance(value, dict):
            continue
        for sub in value:
            if sub not in allowed:
                message = (f"unknown config key {key}.{sub!r}"
                           + _suggest(sub, allowed))
                if strict:
                    raise ConfigError(message)


def _as_date(value, context):
    if isinstance(value, date) and not isinstance(value, datetime):
        return value
    if isinstance(value, datetime):
        return value.date()
    try:
        return date.fromisoformat(str(value))
    except ValueError:
        raise ConfigError(f"{context}: expected an ISO date, got {value!r}")


def parse_config(path, strict=True, overrides=None) -> PipelineConfig:
    """Load and validate a pipeline config file.

    `overrides` maps dotted keys from the CLI (seed, paths.out) onto the
    parsed document before validation. All referenced input files must
    exist.
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}")

    for dotted, value in (overrides or {}).items():
        cursor = raw
        *heads, last = dotted.split(".")
        for head in heads:
            cursor = cursor.setdefault(head, {})
        cursor[last] = value

    _check_unknown_keys(raw, strict)

    if "seed" not in raw:
        raise ConfigError("config must set 'seed' (no implicit nondeterminism)")
    try:
        seed = int(raw["seed"])
    except (TypeError, ValueError):
        raise ConfigError(f"seed must be an integer, got {raw['seed']!r}")

    paths = raw.get("paths") or {}
    if "corpus" not in paths:
        raise ConfigError("config must set 'paths.corpus'")
    corpus_path = Path(paths["corpus"])
    lexicon_paths = {}
    for name in ("liwc", "nrc", "mrc", "who"):
        if name not in paths:
            raise ConfigError(f"config must set 'paths.{name}'")
        lexicon_paths[name] = Path(paths[name])
    if "synonyms" in paths:
        lexicon_paths["synonyms"] = Path(paths["synonyms"])
    out_dir = Path(paths.get("out", "out"))

    for name, p in [("corpus", corpus_path), *lexicon_paths.items()]:
        if not Path(p).exists():
            raise ConfigError(f"paths.{name}: file not found: {p}")

    corpus_format = raw.get("format", "jsonl")
    if corpus_format not in ("jsonl", "csv"):
        raise ConfigError(f"format must be jsonl or csv, got {corpus_format!r}")

    filt = dict(raw.get("filter") or {})
    min_user_posts = int(filt.pop("min_user_posts", 0))
    if "date_range" in filt:
        lo, hi = filt["date_range"]
        filt["date_range"] = (_as_date(lo, "filter.date_range"),
                              _as_date(hi, "filter.date_range"))
    if "exclusion_cooccurrence" in filt:
        filt["exclusion_cooccurrence"] = tuple(
            (str(a), str(b)) for a, b in filt["exclusion_cooccurrence"])
    if "keywords" in filt:
        filt["keywords"] = frozenset(map(str, filt["keywords"]))
    if "allowed_languages" in filt:
        filt["allowed_languages"] = frozenset(map(str, filt["allowed_languages"]))

    window = raw.get("window") or {}
    origin = window.get("origin")
    window_origin = None
    if origin not in (None, "auto"):
        window_origin = _as_date(origin, "window.origin")

    cfg = PipelineConfig(seed=seed, corpus_path=corpus_path,
                         lexicon_paths=lexicon_paths, out_dir=out_dir,
                         corpus_format=corpus_format, filter_options=filt,
                         min_user_posts=min_user_posts,
                         window_origin=window_origin)

    lda = raw.get("lda") or {}
    cfg.lda.update({k: lda[k] for k in cfg.lda if k in lda})
    if cfg.lda["topics"] < 2:
        raise ConfigError(f"lda.topics must be >= 2, got {cfg.lda['topics']}")
    if cfg.lda["iterations"] < 1:
        raise ConfigError("lda.iterations must be >= 1")

    feats = raw.get("features") or {}
    if "sets" in feats:
        cfg.feature_sets = [str(s) for s in feats["sets"]]
    for s in cfg.feature_sets:
        parse_feature_set(s)  # raises on unknown names
    cfg.bigram_vocab = int(feats.get("bigram_vocab", cfg.bigram_vocab))
    if cfg.bigram_vocab < 1:
        raise ConfigError("features.bigram_vocab must be >= 1")
    if feats.get("pronoun_category") is not None:
        cfg.pronoun_category = int(feats["pronoun_category"])

    labels = raw.get("labels") or {}
    cfg.label_source = labels.get("source", cfg.label_source)
    if cfg.label_source not in ("weak", "column"):
        raise ConfigError(
            f"labels.source must be weak or column, got {cfg.label_source!r}")
    cfg.label_column = labels.get("column", cfg.label_column)
    cfg.label_threshold = float(labels.get("threshold", cfg.label_threshold))

    ev = raw.get("evaluation") or {}
    cfg.protocol = ev.get("protocol", cfg.protocol)
    if cfg.protocol not in ("kfold", "temporal"):
        raise ConfigError(
            f"evaluation.protocol must be kfold or temporal, got {cfg.protocol!r}")
    cfg.folds = int(ev.get("folds", cfg.folds))
    if cfg.folds < 2:
        raise ConfigError("evaluation.folds must be >= 2")
    if "instances" in ev:
        cfg.instances = str(ev["instances"])
        allowed = {"document", "user"} if cfg.protocol == "kfold" else {"topic", "document"}
        if cfg.instances not in allowed:
            raise ConfigError(
                f"evaluation.instances for {cfg.protocol} must be one of "
                f"{sorted(allowed)}, got {cfg.instances!r}")
    if "classifiers" in ev:
        cfg.classifiers = [str(c) for c in ev["classifiers"]]
        for c in cfg.classifiers:
            if c not in CLASSIFIER_KINDS:
                raise ConfigError(f"unknown classifier {c!r}"
                                  + _suggest(c, CLASSIFIER_KINDS))
    cfg.p_method = ev.get("p_method", cfg.p_method)
    if cfg.p_method not in ("permutation", "analytic"):
        raise ConfigError(
            f"evaluation.p_method must be permutation or analytic, "
            f"got {cfg.p_method!r}")
    cfg.permutations = int(ev.get("permutations", cfg.permutations))
    for kind in ("elastic_net", "svm", "forest", "logistic"):
        if kind in ev:
            cfg.model_params[kind] = dict(ev[kind])

    sim = raw.get("similarity") or {}
    during_start = sim.pop("during_start", None) if isinstance(sim, dict) else None
    cfg.similarity.update({k: sim[k] for k in cfg.similarity if k in sim})
    if cfg.similarity["top_k"] < cfg.similarity["retain_k"]:
        raise ConfigError("similarity.top_k must be >= similarity.retain_k")
    if during_start not in (None, "auto"):
        cfg.during_start = _as_date(during_start, "similarity.during_start")

    trend = raw.get("trend") or {}
    cfg.trend_min_posts = int(trend.get("min_posts", cfg.trend_min_posts))

    if "stages" in raw:
        cfg.stages = [str(s) for s in raw["stages"]]
        for s in cfg.stages:
            if s not in ("evaluate", "similarity", "trend"):
                raise ConfigError(f"unknown stage {s!r}"
                                  + _suggest(s, ("evaluate", "similarity", "trend")))

    return cfg


def derive_seed(root_seed, *names) -> int:
    """Stable named substream seed (lda/<window>, folds, forest, ...)."""
    keys = [zlib.crc32(str(n).encode("utf-8")) for n in names]
    return int(np.random.SeedSequence([int(root_seed), *keys]).generate_state(1)[0])


def derive_rng(root_seed, *names) -> np.random.Generator:
    return np.random.default_rng(derive_seed(root_seed, *names))
