"""Shared fixtures: tiny in-format lexicon files and corpus builders."""

import json
from datetime import datetime, timezone

import pytest

from depsig.corpus import Corpus, Post, TokenizedDoc
from depsig.lexicon import (
    parse_category_dictionary,
    parse_emotion_lexicon,
    parse_psycholinguistic_db,
    parse_term_list,
)

CATEGORY_DIC = """%
1\tppron
31\tnegemo
32\tanx
40\tsocial
%
i\t1
we\t1
sad*\t31
hopeless\t31\t32
worr*\t31\t32
friend*\t40
"""

EMOTION_TSV = """abandon\tfear\t1
abandon\tjoy\t0
cheerful\tjoy\t1
cheerful\tpositive\t1
hopeless\tsadness\t1
hopeless\tnegative\t1
sad\tsadness\t1
euphoria\tjoy\t1
calm\tpositive\t0
"""

MRC_PROPERTIES = [
    "nlet", "nphon", "nsyl", "kf_freq", "kf_ncats", "kf_nsamp", "tl_freq",
    "brown_freq", "familiarity", "concreteness", "imagery", "mean_c",
    "mean_p", "aoa", "tq2", "wtype", "pdwtype", "alphsyl", "status", "var",
    "cap", "irreg", "plural", "stress", "conjugation", "morphology",
]


def mrc_rows():
    base = {
        "hopeless": {"imagery": 300, "concreteness": 250, "familiarity": 500},
        "sad": {"imagery": 400, "concreteness": 0, "familiarity": 550},
        "misery": {"imagery": 350, "familiarity": 480},
        "cheerful": {"imagery": 420, "familiarity": 520},
    }
    rows = []
    for word, props in base.items():
        rows.append([word] + [str(props.get(p, 0)) for p in MRC_PROPERTIES])
    return rows


def write_mrc(path):
    lines = ["\t".join(["word", *MRC_PROPERTIES])]
    lines += ["\t".join(r) for r in mrc_rows()]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


WHO_TERMS = """hopeless
sad
misery
euphoria
mental anguish
"""


@pytest.fixture
def category_lexicon(tmp_path):
    p = tmp_path / "cats.dic"
    p.write_text(CATEGORY_DIC, encoding="utf-8")
    return parse_category_dictionary(p)


@pytest.fixture
def emotion_lexicon(tmp_path):
    p = tmp_path / "emo.tsv"
    p.write_text(EMOTION_TSV, encoding="utf-8")
    return parse_emotion_lexicon(p)


@pytest.fixture
def psycholinguistic_db(tmp_path):
    p = tmp_path / "mrc.tsv"
    write_mrc(p)
    return parse_psycholinguistic_db(p)


@pytest.fixture
def term_list(tmp_path):
    p = tmp_path / "who.txt"
    p.write_text(WHO_TERMS, encoding="utf-8")
    return parse_term_list(p)


def make_post(pid, user="u1", when="2020-03-12T10:00:00Z", text="stay home", **kw):
    if isinstance(when, str):
        when = datetime.fromisoformat(when.replace("Z", "+00:00"))
    if when.tzinfo is None:
        when = when.replace(tzinfo=timezone.utc)
    return Post(id=pid, user_id=user, timestamp=when, text=text, **kw)


def make_corpus(specs):
    """Build a corpus from (id, user, iso_timestamp, text) tuples."""
    return Corpus([make_post(pid, user, when, text) for pid, user, when, text in specs])


def doc(post_id, tokens):
    return TokenizedDoc.from_tokens(post_id, tokens)


def write_jsonl_file(path, records):
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")
    return path
