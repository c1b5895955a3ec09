"""Corpus ingestion, filtering, tokenization, weekly windowing, active users.

Posts arrive as JSONL or CSV, already translated to English and anonymized.
Filtering reproduces the collection rules: keyword presence, co-occurrence
exclusions, retweet/media/keyword-only drops, and exact-duplicate removal
keyed on (user_id, normalized text).
"""

from __future__ import annotations

import csv
import json
import re
from collections import Counter
from dataclasses import dataclass, field, replace
from datetime import date, datetime, timedelta, timezone
from pathlib import Path

from .errors import CorpusError
from .stopwords import DEFAULT_PRONOUN_WHITELIST, DEFAULT_STOPWORDS

_URL_RE = re.compile(r"(?:https?://|www\.)\S+", re.IGNORECASE)

# Emoji kept as single tokens: pictographs, symbols, dingbats. Word tokens are
# Unicode \w+ runs, which drops punctuation and the '#' of hashtags.
_EMOJI_CLASS = "☀-➿⬀-⯿\U0001f000-\U0001faff"
_TOKEN_RE = re.compile(rf"[{_EMOJI_CLASS}]|\w+")


@dataclass(frozen=True)
class Post:
    id: str
    user_id: str
    timestamp: datetime
    text: str
    language: str = "en"
    is_retweet: bool = False
    has_media: bool = False
    matched_keywords: frozenset = frozenset()

    @property
    def day(self) -> date:
        return self.timestamp.date()


@dataclass(frozen=True)
class TokenizedDoc:
    """Tokenized view of one post: lowercase tokens plus adjacent bigrams."""

    post_id: str
    tokens: tuple
    bigrams: tuple = ()

    @staticmethod
    def from_tokens(post_id, tokens):
        tokens = tuple(tokens)
        bigrams = tuple(f"{a} {b}" for a, b in zip(tokens, tokens[1:]))
        return TokenizedDoc(post_id=post_id, tokens=tokens, bigrams=bigrams)


@dataclass(frozen=True)
class TimeWindow:
    index: int
    start: date
    end: date  # exclusive; always start + 7 days

    def covers(self, day: date) -> bool:
        return self.start <= day < self.end


class Corpus:
    """Ordered collection of posts with unique ids."""

    def __init__(self, posts):
        self.posts = list(posts)
        seen = set()
        for p in self.posts:
            if p.id in seen:
                raise CorpusError(f"duplicate post id: {p.id!r}")
            seen.add(p.id)

    def __len__(self):
        return len(self.posts)

    def __iter__(self):
        return iter(self.posts)

    def __getitem__(self, i):
        return self.posts[i]

    def by_id(self, post_id):
        for p in self.posts:
            if p.id == post_id:
                return p
        raise KeyError(post_id)

    def user_ids(self):
        return {p.user_id for p in self.posts}

    def min_date(self) -> date:
        if not self.posts:
            raise CorpusError("empty corpus has no minimum date")
        return min(p.day for p in self.posts)


@dataclass
class Rejection:
    line: int
    reason: str


@dataclass
class IngestResult:
    corpus: Corpus
    rejections: list


@dataclass
class FilterConfig:
    """Switches for the collection-rule filters; empty sets disable a rule."""

    keywords: frozenset = frozenset()
    exclusion_cooccurrence: tuple = ()  # pairs of terms; both present => drop
    allowed_languages: frozenset = frozenset()
    drop_retweets: bool = True
    drop_media_only: bool = True
    drop_keyword_only: bool = True
    dedup: bool = True
    date_range: tuple = ()  # (start date, end date) half-open; empty = any

    def __post_init__(self):
        self.keywords = frozenset(k.lower().lstrip("#") for k in self.keywords)
        self.allowed_languages = frozenset(l.lower() for l in self.allowed_languages)
        self.exclusion_cooccurrence = tuple(
            (a.lower(), b.lower()) for a, b in self.exclusion_cooccurrence
        )
        if self.date_range:
            start, end = self.date_range
            if not start < end:
                raise CorpusError(f"date_range start {start} must precede end {end}")


@dataclass
class FilterResult:
    corpus: Corpus
    removed: dict = field(default_factory=dict)  # rule name -> removal count


def parse_timestamp(raw) -> datetime:
    """Parse an RFC-3339 timestamp; naive values are taken as UTC."""
    if isinstance(raw, datetime):
        ts = raw
    else:
        text = str(raw).strip()
        if text.endswith(("Z", "z")):
            text = text[:-1] + "+00:00"
        ts = datetime.fromisoformat(text)
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def _post_from_record(rec) -> Post:
    for key in ("id", "user_id", "timestamp", "text"):
        if rec.get(key) in (None, ""):
            raise ValueError(f"missing field {key!r}")
    return Post(
        id=str(rec["id"]),
        user_id=str(rec["user_id"]),
        timestamp=parse_timestamp(rec["timestamp"]),
        text=str(rec["text"]),
        language=str(rec.get("language", "en")).lower(),
        is_retweet=_as_bool(rec.get("is_retweet", False)),
        has_media=_as_bool(rec.get("has_media", False)),
    )


def _as_bool(v) -> bool:
    if isinstance(v, bool):
        return v
    return str(v).strip().lower() in ("1", "true", "yes")


def load_posts(path, format="jsonl") -> IngestResult:
    """Read posts from a JSONL or CSV file.

    Malformed records are collected as (line, reason) rejections instead of
    aborting the load. Raises CorpusError for a missing file, zero parseable
    records, or duplicate post ids.
    """
    path = Path(path)
    if not path.exists():
        raise CorpusError(f"corpus file not found: {path}")
    if format not in ("jsonl", "csv"):
        raise CorpusError(f"unknown corpus format: {format!r}")

    posts, rejections, seen = [], [], {}
    if format == "jsonl":
        rows = _iter_jsonl(path)
    else:
        rows = _iter_csv(path)
    for line_no, rec, err in rows:
        if err is not None:
            rejections.append(Rejection(line=line_no, reason=err))
            continue
        try:
            post = _post_from_record(rec)
        except (ValueError, KeyError) as exc:
            rejections.append(Rejection(line=line_no, reason=str(exc)))
            continue
        if post.id in seen:
            raise CorpusError(
                f"duplicate post id {post.id!r} at line {line_no} "
                f"(first seen at line {seen[post.id]})"
            )
        seen[post.id] = line_no
        posts.append(post)

    if not posts:
        raise CorpusError(f"no parseable records in {path}")
    return IngestResult(corpus=Corpus(posts), rejections=rejections)


def _iter_jsonl(path):
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                yield line_no, None, f"invalid JSON: {exc.msg}"
                continue
            if not isinstance(rec, dict):
                yield line_no, None, "record is not a JSON object"
                continue
            yield line_no, rec, None


def _iter_csv(path):
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        # data rows start at line 2 (after the header)
        for line_no, rec in enumerate(reader, start=2):
            yield line_no, rec, None


def tokenize(text) -> list:
    """Lowercase word tokens by Unicode segmentation.

    URLs are removed, emoji survive as single tokens, and hashtag words are
    kept with the '#' stripped. Empty text gives an empty list.
    """
    text = _URL_RE.sub(" ", text)
    return [t.lower() for t in _TOKEN_RE.findall(text)]


def filter_stopwords(tokens, stoplist=DEFAULT_STOPWORDS, pronoun_whitelist=DEFAULT_PRONOUN_WHITELIST):
    """Drop stoplist tokens, keeping whitelisted pronouns; order preserved."""
    effective = frozenset(stoplist) - frozenset(pronoun_whitelist)
    return [t for t in tokens if t not in effective]


def tokenize_corpus(corpus, stoplist=DEFAULT_STOPWORDS,
                    pronoun_whitelist=DEFAULT_PRONOUN_WHITELIST,
                    drop_empty=True):
    """Tokenize every post and filter stopwords.

    Zero-token documents are dropped here so downstream feature extractors
    can require non-empty docs. Returns (docs, dropped_post_ids).
    """
    docs, dropped = [], []
    for post in corpus:
        tokens = filter_stopwords(tokenize(post.text), stoplist, pronoun_whitelist)
        if not tokens and drop_empty:
            dropped.append(post.id)
            continue
        docs.append(TokenizedDoc.from_tokens(post.id, tokens))
    return docs, dropped


def contains_term(tokens, term) -> bool:
    """True when `term` occurs in `tokens`; multiword terms must appear as a
    contiguous token sequence."""
    needle = tuple(tokenize(term))
    if not needle:
        return False
    if len(needle) == 1:
        return needle[0] in tokens
    n = len(needle)
    return any(tuple(tokens[i:i + n]) == needle for i in range(len(tokens) - n + 1))


def apply_filters(corpus, cfg: FilterConfig) -> FilterResult:
    """Apply every enabled filter rule; reports per-rule removal counts.

    Rule order: date_range, language, retweet, media, keyword match,
    keyword-only, co-occurrence exclusion, dedup. A post is charged to the
    first rule that rejects it. Raises CorpusError if nothing survives.
    """
    if len(corpus) == 0:
        raise CorpusError("cannot filter an empty corpus")

    removed = Counter()
    kept = []
    seen_dedup = set()
    for post in corpus:
        tokens = tokenize(post.text)
        rule = _first_failing_rule(post, tokens, cfg)
        if rule is None and cfg.dedup:
            key = (post.user_id, " ".join(post.text.lower().split()))
            if key in seen_dedup:
                rule = "dedup"
            else:
                seen_dedup.add(key)
        if rule is not None:
            removed[rule] += 1
            continue
        if cfg.keywords:
            matched = frozenset(k for k in cfg.keywords if contains_term(tokens, k))
            post = replace(post, matched_keywords=matched)
        kept.append(post)

    if not kept:
        raise CorpusError("all posts removed by filters")
    return FilterResult(corpus=Corpus(kept), removed=dict(removed))


def _first_failing_rule(post, tokens, cfg):
    if cfg.date_range:
        start, end = cfg.date_range
        if not (start <= post.day < end):
            return "date_range"
    if cfg.allowed_languages and post.language not in cfg.allowed_languages:
        return "language"
    if cfg.drop_retweets and post.is_retweet:
        return "retweet"
    if cfg.drop_media_only and post.has_media:
        return "media"
    if cfg.keywords:
        if not any(contains_term(tokens, k) for k in cfg.keywords):
            return "no_keyword"
        if cfg.drop_keyword_only:
            # emoji count as content: a keyword plus an emoji is not
            # "keyword-only", since emoji are kept as affect signal
            if tokens and all(t in cfg.keywords for t in tokens):
                return "keyword_only"
    for a, b in cfg.exclusion_cooccurrence:
        if contains_term(tokens, a) and contains_term(tokens, b):
            return "cooccurrence"
    return None


def window_by_week(corpus, origin_date=None):
    """Partition posts into consecutive 7-day windows from `origin_date`.

    Defaults the origin to the corpus minimum date. Returns a list of
    (TimeWindow, Corpus) sorted by index, including empty interior windows
    so the sequence is gap-free. Raises CorpusError for posts before the
    origin.
    """
    if len(corpus) == 0:
        raise CorpusError("cannot window an empty corpus")
    origin = origin_date or corpus.min_date()
    if isinstance(origin, datetime):
        origin = origin.date()

    buckets = {}
    for post in corpus:
        delta = (post.day - origin).days
        if delta < 0:
            raise CorpusError(
                f"post {post.id!r} dated {post.day} precedes window origin {origin}"
            )
        buckets.setdefault(delta // 7, []).append(post)

    max_index = max(buckets)
    out = []
    for index in range(max_index + 1):
        start = origin + timedelta(days=7 * index)
        window = TimeWindow(index=index, start=start, end=start + timedelta(days=7))
        out.append((window, Corpus(buckets.get(index, []))))
    return out


def select_active_users(corpus, min_posts) -> set:
    """Users with at least `min_posts` posts in the corpus."""
    if min_posts < 1:
        raise CorpusError(f"min_posts must be >= 1, got {min_posts}")
    counts = Counter(p.user_id for p in corpus)
    return {u for u, n in counts.items() if n >= min_posts}


def write_jsonl(corpus, path):
    """Re-emit a corpus in the ingestion JSONL schema."""
    with open(path, "w", encoding="utf-8") as fh:
        for p in corpus:
            rec = {
                "id": p.id,
                "user_id": p.user_id,
                "timestamp": p.timestamp.isoformat().replace("+00:00", "Z"),
                "text": p.text,
                "language": p.language,
                "is_retweet": p.is_retweet,
                "has_media": p.has_media,
            }
            if p.matched_keywords:
                rec["matched_keywords"] = sorted(p.matched_keywords)
            fh.write(json.dumps(rec, ensure_ascii=False, sort_keys=True) + "\n")


def write_rejections_csv(rejections, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["line", "reason"])
        for r in rejections:
            writer.writerow([r.line, r.reason])
