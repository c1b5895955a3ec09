"""Synthetic corpus and fixture-lexicon generation.

Real collection data cannot be redistributed, so demos and acceptance runs
use planted corpora: depression-dense documents mix glossary terms,
first-person pronouns, marker bigrams, and a weekly theme; neutral
documents stick to themes, with a few affect words planted in themes on
purpose so category features alone stay imperfect. The "shared" mode keeps
one depression vocabulary across weeks; "disjoint" gives every week its
own slice, which drives cross-week topic overlap toward zero.

Everything is deterministic per seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import date, timedelta
from pathlib import Path

import numpy as np

SHARED_DEPRESSION_POOL = [
    "hopeless", "despair", "misery", "sad", "lonely",
    "worthless", "anguish", "gloom", "sorrow", "grief",
]

DISJOINT_DEPRESSION_POOLS = [
    ["anxiety", "dread", "panic", "insomnia", "fatigue", "numbness",
     "emptiness", "despondent"],
    ["melancholy", "apathy", "torment", "agony", "woe", "desolate",
     "forlorn", "dismay"],
    ["anhedonia", "lethargy", "rumination", "helpless", "burnout",
     "distress", "tearful", "wretched"],
    ["heartache", "suffering", "brooding", "listless", "dejected",
     "mournful", "troubled", "weary"],
    ["downhearted", "crestfallen", "joyless", "somber", "anguished",
     "miserable", "isolated", "aching"],
    ["defeated", "drained", "hurting", "grieving", "despairing",
     "sleepless", "unwanted", "broken"],
]

JOY_GLOSSARY_TERMS = ["euphoria", "elation"]

ALL_DEPRESSION_TERMS = (SHARED_DEPRESSION_POOL
                        + [w for pool in DISJOINT_DEPRESSION_POOLS for w in pool])

THEMES = {
    "cooking": ["recipe", "bread", "flour", "bake", "oven", "dinner",
                "pasta", "sauce", "kitchen", "delicious"],
    "sports": ["team", "game", "score", "match", "player", "season",
               "league", "win", "coach", "ball"],
    # movie reviews carry negative-affect noise words on purpose: they hit
    # the category dictionary's negemo entries without being glossary terms
    "movies": ["movie", "film", "actor", "scene", "plot", "watch",
               "series", "episode", "bad", "terrible", "hate"],
    "weather": ["rain", "snow", "sunny", "cloud", "wind", "storm",
                "forecast", "cold", "warm", "degrees"],
    "tech": ["laptop", "update", "software", "app", "phone", "wifi",
             "internet", "code", "device", "battery"],
    "garden": ["plant", "flower", "seed", "soil", "grow", "water",
               "leaf", "spring", "garden", "bloom"],
}

MARKER_BIGRAMS = [("feeling", "hopeless"), ("sleepless", "nights"),
                  ("deep", "despair"), ("crying", "alone")]

KEYWORDS = ["covid", "coronavirus", "stayathome", "stayhome"]

MRC_PROPERTIES = [
    "nlet", "nphon", "nsyl", "kf_freq", "kf_ncats", "kf_nsamp", "tl_freq",
    "brown_freq", "familiarity", "concreteness", "imagery", "mean_c",
    "mean_p", "aoa", "tq2", "wtype", "pdwtype", "alphsyl", "status", "var",
    "cap", "irreg", "plural", "stress", "conjugation", "morphology",
]


@dataclass
class SynthConfig:
    n_docs: int = 5000
    n_users: int = 250
    weeks: int = 6
    start: date = date(2020, 3, 12)
    depressed_fraction: float = 0.4
    depression_mode: str = "shared"      # shared | disjoint
    seed: int = 0
    retweet_fraction: float = 0.02
    media_fraction: float = 0.02
    duplicate_fraction: float = 0.01
    # signal-strength knobs: how many glossary words a depressed document
    # draws, how often it carries a marker bigram, and how much the neutral
    # class bleeds into pronoun/marker space
    dep_words_lo: int = 5
    dep_words_hi: int = 9
    marker_probability: float = 1.0
    neutral_i_probability: float = 0.1
    neutral_confusable_marker_probability: float = 0.0


def _depression_pool(cfg, week):
    if cfg.depression_mode == "shared":
        return SHARED_DEPRESSION_POOL
    if cfg.depression_mode == "disjoint":
        return DISJOINT_DEPRESSION_POOLS[week % len(DISJOINT_DEPRESSION_POOLS)]
    raise ValueError(f"unknown depression_mode {cfg.depression_mode!r}")


def _depressed_text(rng, pool, theme_words, cfg):
    tokens = []
    tokens += list(rng.choice(pool, size=int(rng.integers(cfg.dep_words_lo,
                                                          cfg.dep_words_hi))))
    tokens += ["i"] * int(rng.integers(1, 4))
    tokens += list(rng.choice(theme_words, size=int(rng.integers(6, 11))))
    rng.shuffle(tokens)
    if rng.random() < cfg.marker_probability:
        marker = MARKER_BIGRAMS[int(rng.integers(0, len(MARKER_BIGRAMS)))]
        pos = int(rng.integers(0, len(tokens) + 1))
        tokens = tokens[:pos] + list(marker) + tokens[pos:]
    return tokens


def _neutral_text(rng, theme_words, cfg):
    tokens = list(rng.choice(theme_words, size=int(rng.integers(8, 14))))
    if rng.random() < cfg.neutral_i_probability:
        tokens += ["i"] * int(rng.integers(1, 3))
    if rng.random() < 0.15:
        tokens.append("happy")
    if rng.random() < 0.1:
        tokens.append("we")
    rng.shuffle(tokens)
    if rng.random() < cfg.neutral_confusable_marker_probability:
        pos = int(rng.integers(0, len(tokens) + 1))
        tokens = tokens[:pos] + ["feeling", "great"] + tokens[pos:]
    return tokens


def build_corpus_records(cfg: SynthConfig) -> list:
    """Post records (JSONL-shaped dicts) with a planted `label` column."""
    rng = np.random.default_rng(cfg.seed)
    theme_names = sorted(THEMES)
    records = []
    docs_per_week = cfg.n_docs // cfg.weeks

    counter = 0
    for week in range(cfg.weeks):
        pool = _depression_pool(cfg, week)
        week_start = cfg.start + timedelta(days=7 * week)
        for _ in range(docs_per_week):
            depressed = rng.random() < cfg.depressed_fraction
            theme = THEMES[theme_names[int(rng.integers(0, len(theme_names)))]]
            if depressed:
                tokens = _depressed_text(rng, pool, theme, cfg)
            else:
                tokens = _neutral_text(rng, theme, cfg)
            tokens.insert(int(rng.integers(0, len(tokens) + 1)),
                          KEYWORDS[int(rng.integers(0, len(KEYWORDS)))])
            day = week_start + timedelta(days=int(rng.integers(0, 7)))
            hour = int(rng.integers(0, 24))
            records.append({
                "id": f"p{counter:06d}",
                "user_id": f"u{int(rng.integers(0, cfg.n_users)):04d}",
                "timestamp": f"{day.isoformat()}T{hour:02d}:00:00Z",
                "text": " ".join(tokens),
                "language": "en",
                "is_retweet": bool(rng.random() < cfg.retweet_fraction),
                "has_media": bool(rng.random() < cfg.media_fraction),
                "label": int(depressed),
            })
            counter += 1
            if rng.random() < cfg.duplicate_fraction and records:
                twin = dict(records[-1])
                twin["id"] = f"p{counter:06d}"
                records.append(twin)
                counter += 1
    return records


def write_corpus(cfg: SynthConfig, path):
    records = build_corpus_records(cfg)
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
    return path


def _stable_score(word, prop_index, lo=100, hi=700):
    """Deterministic pseudo-score so fixture files never churn."""
    h = 2166136261
    for ch in f"{word}/{prop_index}":
        h = ((h ^ ord(ch)) * 16777619) % (2 ** 32)
    if h % 7 == 0:
        return 0  # sprinkle missing values
    return lo + h % (hi - lo)


DEFAULT_DEPRESSION_PATTERNS = (
    "sad*", "hopeless*", "gloom*", "miser*", "grief*", "sorrow*", "lonel*",
)


def category_dictionary_text(depression_patterns=DEFAULT_DEPRESSION_PATTERNS) -> str:
    """Category dictionary fixture.

    `depression_patterns` controls how much of the glossary the negemo
    category can see; shrinking it makes category features deliberately
    lossy relative to the glossary-driven families.
    """
    categories = [
        (1, "i"), (2, "ppron"), (30, "posemo"), (31, "negemo"), (32, "anx"),
        (33, "sadness"), (40, "social"), (41, "work"), (42, "leisure"),
        (43, "home"), (44, "health"), (45, "money"), (46, "death"),
    ]
    sadness_overlap = {"sad*", "grief*", "sorrow*"}
    entries = [
        ("i", [1, 2]), ("we", [2]), ("you", [2]), ("she", [2]), ("he", [2]),
        ("they", [2]),
        ("happ*", [30]), ("joy*", [30]), ("love*", [30]), ("great", [30]),
        ("euphori*", [30]),
    ]
    entries += [(pattern, [31, 33] if pattern in sadness_overlap else [31])
                for pattern in depression_patterns]
    entries += [
        # noise words that also live in neutral themes
        ("bad", [31]), ("terribl*", [31]), ("hate", [31]),
        ("anxi*", [31, 32]), ("panic*", [31, 32]), ("dread*", [31, 32]),
        ("worr*", [31, 32]),
        ("friend*", [40]), ("family", [40]), ("together", [40]), ("people", [40]),
        ("work*", [41]), ("job*", [41]), ("office", [41]), ("meeting", [41]),
        ("movie*", [42]), ("game*", [42]), ("play*", [42]), ("park", [42]),
        ("music", [42]),
        ("home", [43]), ("house", [43]), ("kitchen", [43]), ("garden", [43]),
        ("sick*", [44]), ("doctor", [44]), ("hospital", [44]), ("virus*", [44]),
        ("money", [45]), ("cash", [45]), ("pay*", [45]), ("rent", [45]),
        ("death*", [46]), ("dead", [46]), ("die*", [46]),
    ]
    lines = ["%"]
    lines += [f"{cid}\t{name}" for cid, name in categories]
    lines.append("%")
    lines += ["\t".join([pattern, *map(str, ids)]) for pattern, ids in entries]
    return "\n".join(lines) + "\n"


def emotion_lexicon_text() -> str:
    rows = []
    for word in JOY_GLOSSARY_TERMS + ["happy", "love", "delicious", "win"]:
        rows.append(f"{word}\tjoy\t1")
        rows.append(f"{word}\tpositive\t1")
    for word in ALL_DEPRESSION_TERMS:
        rows.append(f"{word}\tsadness\t1")
        rows.append(f"{word}\tnegative\t1")
    for word in ["panic", "dread", "anxiety", "storm"]:
        rows.append(f"{word}\tfear\t1")
    rows.append("forecast\tanticipation\t1")
    rows.append("calm\tjoy\t0")
    return "\n".join(rows) + "\n"


def psycholinguistic_db_text() -> str:
    words = sorted(set(ALL_DEPRESSION_TERMS + JOY_GLOSSARY_TERMS
                       + ["recipe", "team", "movie", "rain", "laptop", "plant"]))
    lines = ["\t".join(["word", *MRC_PROPERTIES])]
    for word in words:
        scores = [str(_stable_score(word, j)) for j in range(len(MRC_PROPERTIES))]
        lines.append("\t".join([word, *scores]))
    return "\n".join(lines) + "\n"


def term_list_text() -> str:
    terms = sorted(set(ALL_DEPRESSION_TERMS + JOY_GLOSSARY_TERMS
                       + ["mental anguish"]))
    return "\n".join(terms) + "\n"


def synonym_map_text() -> str:
    pairs = [("unhappy", "sad"), ("downhearted", "dejected"),
             ("miserable", "misery"), ("despairing", "despair"),
             ("grieving", "grief"), ("anguished", "anguish")]
    return "\n".join(f"{a}\t{b}" for a, b in pairs) + "\n"


def write_lexicons(out_dir, depression_patterns=DEFAULT_DEPRESSION_PATTERNS) -> dict:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "liwc": out_dir / "categories.dic",
        "nrc": out_dir / "emotions.tsv",
        "mrc": out_dir / "psycholinguistic.tsv",
        "who": out_dir / "glossary.txt",
        "synonyms": out_dir / "synonyms.tsv",
    }
    paths["liwc"].write_text(category_dictionary_text(depression_patterns),
                             encoding="utf-8")
    paths["nrc"].write_text(emotion_lexicon_text(), encoding="utf-8")
    paths["mrc"].write_text(psycholinguistic_db_text(), encoding="utf-8")
    paths["who"].write_text(term_list_text(), encoding="utf-8")
    paths["synonyms"].write_text(synonym_map_text(), encoding="utf-8")
    return paths


def demo_config_text(corpus_path, lexicon_paths, out_dir, seed,
                     weeks_origin) -> str:
    return f"""\
seed: {seed}

paths:
  corpus: {corpus_path}
  liwc: {lexicon_paths['liwc']}
  nrc: {lexicon_paths['nrc']}
  mrc: {lexicon_paths['mrc']}
  who: {lexicon_paths['who']}
  synonyms: {lexicon_paths['synonyms']}
  out: {out_dir}

filter:
  keywords: [covid, coronavirus, stayathome, stayhome]
  exclusion_cooccurrence:
    - [covid, mental health]
    - [covid, depression]
    - [coronavirus, mental health]
    - [coronavirus, depression]
  allowed_languages: [en]

window:
  origin: {weeks_origin}

lda:
  topics: 8
  alpha: 0.01
  beta: 0.01
  iterations: 300

features:
  sets: [LIWC, LIWC+LDA, LIWC+bigram+LDA, LIWC+PLUS+bigram+LDA]
  bigram_vocab: 300

labels:
  source: column
  column: label

evaluation:
  protocol: temporal
  instances: document
  classifiers: [svm, logistic, forest]
  folds: 10
  p_method: analytic

similarity:
  top_k: 15
  retain_k: 10

trend:
  min_posts: 5
"""


def write_demo(out_dir, cfg: SynthConfig | None = None) -> Path:
    """Write a self-contained demo workspace: corpus, lexicons, config.

    Returns the config path; `depsig pipeline run --config <path>` consumes
    it directly.
    """
    cfg = cfg or SynthConfig()
    out_dir = Path(out_dir)
    data_dir = out_dir / "data"
    data_dir.mkdir(parents=True, exist_ok=True)
    corpus_path = data_dir / "corpus.jsonl"
    write_corpus(cfg, corpus_path)
    lexicon_paths = write_lexicons(data_dir / "lexicons")
    config_path = out_dir / "config.yaml"
    config_path.write_text(
        demo_config_text(corpus_path, lexicon_paths, out_dir / "reports",
                         cfg.seed, cfg.start.isoformat()),
        encoding="utf-8")
    return config_path
