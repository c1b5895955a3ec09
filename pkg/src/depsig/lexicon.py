"""Parsers and query helpers for the four lexicon resources.

Formats (all UTF-8, LF or CRLF):
  category dictionary  -- '%' line, `id<TAB>name` lines, '%' line, then
                          `pattern<TAB>id[<TAB>id]*` entries; a trailing '*'
                          on a pattern is a prefix wildcard
  emotion lexicon      -- TSV rows `word<TAB>label<TAB>0|1`
  psycholinguistic db  -- TSV, header `word` + 26 numeric property columns,
                          0 encodes a missing score
  term list            -- one term per line
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from pathlib import Path

from .errors import LexiconFormatError

EMOTION_LABELS = frozenset({
    "anger", "fear", "anticipation", "trust", "surprise",
    "sadness", "joy", "disgust", "negative", "positive",
})

PSYCHOLINGUISTIC_PROPERTY_COUNT = 26


@dataclass
class CategoryLexicon:
    """LIWC-style dictionary: words and prefix wildcards mapped to categories."""

    categories: dict  # category id -> name, insertion-ordered
    entries: list     # (pattern, tuple of category ids)
    _exact: dict = field(default_factory=dict, repr=False)
    _prefix: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        for pattern, ids in self.entries:
            if pattern.endswith("*"):
                stem = pattern[:-1]
                self._prefix[stem] = self._prefix.get(stem, frozenset()) | frozenset(ids)
            else:
                self._exact[pattern] = self._exact.get(pattern, frozenset()) | frozenset(ids)

    def category_ids(self):
        return list(self.categories)

    def category_name(self, cid):
        return self.categories[cid]


def match_categories(lexicon: CategoryLexicon, token: str) -> set:
    """Category ids whose entries match `token`: exact matches plus every
    wildcard entry whose stem is a prefix of the token."""
    out = set(lexicon._exact.get(token, ()))
    for i in range(len(token) + 1):
        hit = lexicon._prefix.get(token[:i])
        if hit:
            out |= hit
    return out


@dataclass
class EmotionLexicon:
    """Word -> affect-label associations (8 emotions + 2 sentiments)."""

    associations: dict  # word -> frozenset of labels

    def labels(self, word) -> frozenset:
        return self.associations.get(word, frozenset())

    def implies_joy(self, word) -> bool:
        return "joy" in self.labels(word)

    def __contains__(self, word):
        return word in self.associations


@dataclass
class PsycholinguisticDB:
    """Word-level numeric property scores; 0 encodes missing."""

    properties: list            # 26 property names, file order
    records: dict               # word -> list of 26 floats

    def score(self, word, prop):
        """Score for (word, property), or None when absent/missing."""
        row = self.records.get(word)
        if row is None:
            return None
        value = row[self.properties.index(prop)]
        return None if value == 0 else value

    def __contains__(self, word):
        return word in self.records


@dataclass
class TermList:
    """Flat set of lowercase terms; multiword terms match as contiguous
    token sequences."""

    terms: frozenset

    def __post_init__(self):
        by_first = {}
        for term in self.terms:
            toks = tuple(term.split())
            by_first.setdefault(toks[0], []).append(toks)
        # longest first so greedy scanning prefers the longer phrase
        self._by_first = {w: sorted(ts, key=len, reverse=True) for w, ts in by_first.items()}

    def __contains__(self, term):
        return term in self.terms

    def __len__(self):
        return len(self.terms)

    def find_matches(self, tokens):
        """Greedy left-to-right scan for term occurrences.

        Returns (start, end, term) spans, non-overlapping, preferring the
        longest term at each position.
        """
        matches = []
        i, n = 0, len(tokens)
        while i < n:
            candidates = self._by_first.get(tokens[i])
            hit = None
            if candidates:
                for cand in candidates:
                    k = len(cand)
                    if i + k <= n and tuple(tokens[i:i + k]) == cand:
                        hit = cand
                        break
            if hit:
                matches.append((i, i + len(hit), " ".join(hit)))
                i += len(hit)
            else:
                i += 1
        return matches


def _read_lines(path):
    path = Path(path)
    if not path.exists():
        raise LexiconFormatError(f"lexicon file not found: {path}")
    with open(path, encoding="utf-8") as fh:
        return [line.rstrip("\r\n") for line in fh]


def parse_category_dictionary(path) -> CategoryLexicon:
    lines = _read_lines(path)
    it = iter(enumerate(lines, start=1))

    line_no = 0
    for line_no, line in it:
        if line.strip() == "%":
            break
        if line.strip():
            raise LexiconFormatError("expected '%' header delimiter", line=line_no)
    else:
        raise LexiconFormatError("missing '%' header delimiter", line=line_no or 1)

    categories = {}
    entries = []
    in_header = True
    for line_no, line in it:
        if line.strip() == "%":
            in_header = False
            continue
        if not line.strip():
            continue
        parts = line.split("\t")
        if in_header:
            if len(parts) != 2:
                raise LexiconFormatError(
                    f"category line needs 'id<TAB>name', got {line!r}", line=line_no)
            try:
                cid = int(parts[0])
            except ValueError:
                raise LexiconFormatError(
                    f"category id must be an integer, got {parts[0]!r}", line=line_no)
            if cid in categories:
                raise LexiconFormatError(f"duplicate category id {cid}", line=line_no)
            categories[cid] = parts[1].strip()
        else:
            pattern = parts[0].strip()
            if not pattern:
                raise LexiconFormatError("empty entry pattern", line=line_no)
            if "*" in pattern[:-1]:
                raise LexiconFormatError(
                    f"wildcard only allowed as trailing marker: {pattern!r}", line=line_no)
            try:
                ids = tuple(int(p) for p in parts[1:] if p.strip())
            except ValueError:
                raise LexiconFormatError(
                    f"entry ids must be integers: {line!r}", line=line_no)
            if not ids:
                raise LexiconFormatError(
                    f"entry {pattern!r} lists no category ids", line=line_no)
            for cid in ids:
                if cid not in categories:
                    raise LexiconFormatError(
                        f"entry {pattern!r} references undeclared category id {cid}",
                        line=line_no)
            entries.append((pattern.lower(), ids))

    if in_header:
        raise LexiconFormatError("missing closing '%' delimiter after categories",
                                 line=len(lines) or 1)
    return CategoryLexicon(categories=categories, entries=entries)


def serialize_category_dictionary(lexicon: CategoryLexicon) -> str:
    out = ["%"]
    out += [f"{cid}\t{name}" for cid, name in lexicon.categories.items()]
    out.append("%")
    out += ["\t".join([pattern, *map(str, ids)]) for pattern, ids in lexicon.entries]
    return "\n".join(out) + "\n"


def parse_emotion_lexicon(path) -> EmotionLexicon:
    lines = _read_lines(path)
    associations = {}
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise LexiconFormatError(
                f"expected 'word<TAB>label<TAB>flag', got {line!r}", line=line_no)
        word, label, flag = (p.strip() for p in parts)
        if label not in EMOTION_LABELS:
            raise LexiconFormatError(f"unknown label {label!r}", line=line_no)
        if flag not in ("0", "1"):
            raise LexiconFormatError(f"flag must be 0 or 1, got {flag!r}", line=line_no)
        word = word.lower()
        current = associations.setdefault(word, set())
        if flag == "1":
            current.add(label)
    if not associations:
        raise LexiconFormatError("emotion lexicon has no rows", line=0)
    return EmotionLexicon(associations={w: frozenset(s) for w, s in associations.items()})


def serialize_emotion_lexicon(lexicon: EmotionLexicon) -> str:
    rows = []
    for word in sorted(lexicon.associations):
        labels = lexicon.associations[word]
        if labels:
            rows += [f"{word}\t{label}\t1" for label in sorted(labels)]
        else:
            # keep the word present with an explicit all-zero association
            rows.append(f"{word}\tnegative\t0")
    return "\n".join(rows) + "\n"


def parse_psycholinguistic_db(path) -> PsycholinguisticDB:
    lines = _read_lines(path)
    rows = [(n, l) for n, l in enumerate(lines, start=1) if l.strip()]
    if not rows:
        raise LexiconFormatError("psycholinguistic db is empty", line=0)

    header_no, header = rows[0]
    cols = header.split("\t")
    if len(cols) != PSYCHOLINGUISTIC_PROPERTY_COUNT + 1:
        raise LexiconFormatError(
            f"header must have 1 word column + {PSYCHOLINGUISTIC_PROPERTY_COUNT} "
            f"properties, got {len(cols)} columns", line=header_no)
    properties = [c.strip() for c in cols[1:]]

    records = {}
    for line_no, line in rows[1:]:
        parts = line.split("\t")
        if len(parts) != len(cols):
            raise LexiconFormatError(
                f"row has {len(parts)} columns, expected {len(cols)}", line=line_no)
        word = parts[0].strip().lower()
        try:
            values = [float(v) for v in parts[1:]]
        except ValueError:
            raise LexiconFormatError(f"non-numeric score in row {line!r}", line=line_no)
        if word in records:
            warnings.warn(f"duplicate word {word!r} in psycholinguistic db; last row wins")
        records[word] = values
    return PsycholinguisticDB(properties=properties, records=records)


def serialize_psycholinguistic_db(db: PsycholinguisticDB) -> str:
    def fmt(v):
        return str(int(v)) if float(v).is_integer() else repr(float(v))

    out = ["\t".join(["word", *db.properties])]
    out += ["\t".join([w, *(fmt(v) for v in db.records[w])]) for w in sorted(db.records)]
    return "\n".join(out) + "\n"


def parse_term_list(path) -> TermList:
    lines = _read_lines(path)
    terms = {" ".join(l.strip().lower().split()) for l in lines if l.strip()}
    if not terms:
        raise LexiconFormatError("term list has no terms", line=0)
    return TermList(terms=frozenset(terms))


def serialize_term_list(terms: TermList) -> str:
    return "\n".join(sorted(terms.terms)) + "\n"
