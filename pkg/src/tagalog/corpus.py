"""Corpus ingestion, cleaning, vocabularies, splitting and statistics."""
from __future__ import annotations

import csv
import json
import logging
import math
import re
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

from .errors import DataError, UnknownLanguage
from .hashing import SplitMix64
from .langid import LANG_CODES, LangCode, NGramProfile, identify_language

logger = logging.getLogger(__name__)

URL_RE = re.compile(r"(?:https?://|www\.)\S*", re.IGNORECASE)


@dataclass(frozen=True)
class RawPost:
    id: str
    user_id: str
    text: str
    lang: str | None = None
    hashtags: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.id or not self.user_id:
            raise ValueError("RawPost needs a nonempty id and user_id")

    def to_json(self) -> dict:
        out = {"id": self.id, "user_id": self.user_id, "text": self.text}
        if self.lang is not None:
            out["lang"] = self.lang
        out["hashtags"] = list(self.hashtags)
        return out


@dataclass(frozen=True)
class CleanPost:
    id: str
    user_index: int
    token_text: str
    lang: str
    tag_indices: frozenset[int]


class Vocab:
    """Dense string <-> index maps for hashtags, users and languages.

    Languages are the fixed eight codes so unseen languages at inference time
    still have an embedding row.
    """

    def __init__(self, hashtags: Iterable[str] = (), users: Iterable[str] = ()):
        self.hashtags: list[str] = []
        self.users: list[str] = []
        self.languages: list[str] = list(LANG_CODES)
        self._tag_index: dict[str, int] = {}
        self._user_index: dict[str, int] = {}
        self._lang_index = {c: i for i, c in enumerate(self.languages)}
        self.frozen = False
        for t in hashtags:
            self.add_tag(t)
        for u in users:
            self.add_user(u)

    def add_tag(self, tag: str) -> int:
        idx = self._tag_index.get(tag)
        if idx is None:
            if self.frozen:
                raise KeyError(tag)
            idx = self._tag_index[tag] = len(self.hashtags)
            self.hashtags.append(tag)
        return idx

    def add_user(self, user: str) -> int:
        idx = self._user_index.get(user)
        if idx is None:
            if self.frozen:
                raise KeyError(user)
            idx = self._user_index[user] = len(self.users)
            self.users.append(user)
        return idx

    def tag_index(self, tag: str) -> int | None:
        return self._tag_index.get(tag)

    def user_index(self, user: str) -> int | None:
        return self._user_index.get(user)

    def lang_index(self, lang: str) -> int:
        return self._lang_index[lang]

    def tag(self, idx: int) -> str:
        return self.hashtags[idx]

    def user(self, idx: int) -> str:
        return self.users[idx]

    def freeze(self) -> "Vocab":
        self.frozen = True
        return self

    def to_json(self) -> dict:
        return {"hashtags": list(self.hashtags), "users": list(self.users), "languages": list(self.languages)}

    @classmethod
    def from_json(cls, data: dict) -> "Vocab":
        return cls(data["hashtags"], data["users"]).freeze()

    def __eq__(self, other):
        return isinstance(other, Vocab) and self.to_json() == other.to_json()

    def __repr__(self):
        return f"Vocab(|H|={len(self.hashtags)}, |U|={len(self.users)}, |L|={len(self.languages)})"


@dataclass
class CorpusStats:
    n_posts: int
    n_users: int
    n_hashtags: int
    avg_tags_per_post: Fraction
    avg_posts_per_user: Fraction

    def rows(self) -> list[tuple[str, str]]:
        return [
            ("n_posts", str(self.n_posts)),
            ("n_users", str(self.n_users)),
            ("n_hashtags", str(self.n_hashtags)),
            ("avg_tags_per_post", _fmt_fraction(self.avg_tags_per_post)),
            ("avg_posts_per_user", _fmt_fraction(self.avg_posts_per_user)),
        ]

    def write_csv(self, fh) -> None:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["metric", "value"])
        writer.writerows(self.rows())


def _fmt_fraction(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{float(x):.6g}"


@dataclass
class LoadReport:
    malformed: int = 0
    messages: list[str] = field(default_factory=list)


def load_corpus(path: str | Path, report: LoadReport | None = None) -> list[RawPost]:
    """Read a JSONL corpus; malformed lines are skipped and counted."""
    report = report if report is not None else LoadReport()
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read corpus {path}: {exc}") from exc
    posts = []
    with fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                tags = obj.get("hashtags") or []
                if not isinstance(tags, list) or not all(isinstance(t, str) for t in tags):
                    raise ValueError("hashtags must be a list of strings")
                lang = obj.get("lang")
                if lang is not None and not isinstance(lang, str):
                    raise ValueError("lang must be a string")
                for key in ("id", "user_id", "text"):
                    if not isinstance(obj.get(key), str):
                        raise ValueError(f"missing or non-string {key!r}")
                posts.append(RawPost(obj["id"], obj["user_id"], obj["text"], lang, tuple(tags)))
            except (ValueError, AttributeError) as exc:
                report.malformed += 1
                report.messages.append(f"{path}:{lineno}: {exc}")
                logger.warning("skipping malformed line %s:%d (%s)", path, lineno, exc)
    return posts


def write_corpus(posts: Iterable[RawPost], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for post in posts:
            fh.write(json.dumps(post.to_json(), ensure_ascii=False, sort_keys=True) + "\n")


def _keep_char(ch: str) -> bool:
    if ch == " " or ch == ".":
        return True
    cat = unicodedata.category(ch)
    # marks are kept: Indic vowel signs and viramas are combining characters
    return cat[0] in "LM" or cat == "Nd"


def filter_chars(text: str) -> str:
    return "".join(ch for ch in text if _keep_char(ch))


def clean_text(text: str, extra_tags: Iterable[str] = ()) -> tuple[str, list[str]]:
    """Apply the cleaning rules; returns (normalised text, ordered unique tags)."""
    text = URL_RE.sub(" ", text).lower()
    words, tags = [], []
    for token in text.split():
        if token.startswith("#"):
            tags.append(token[1:])
        else:
            words.append(token)
    tags.extend(t.lower().lstrip("#") for t in extra_tags)
    cleaned_tags = []
    for tag in tags:
        tag = filter_chars(tag).replace(" ", "").replace(".", "")
        if tag and tag not in cleaned_tags:
            cleaned_tags.append(tag)
    body = " ".join(filter_chars(" ".join(words)).split())
    return body, cleaned_tags


def preprocess(raw: RawPost, vocab: Vocab, seen: set | None = None,
               profiles: NGramProfile | None = None,
               allowed_tags: set[str] | None = None) -> CleanPost | None:
    """Clean one post and index it into ``vocab``; None when rejected.

    ``seen`` holds (user_id, text) keys of accepted posts for deduplication.
    """
    text, tags = clean_text(raw.text, raw.hashtags)
    if allowed_tags is not None:
        tags = [t for t in tags if t in allowed_tags]
    if vocab.frozen:
        tags = [t for t in tags if vocab.tag_index(t) is not None]
    if len(text.split()) < 3 or not tags:
        return None
    try:
        lang = LangCode.parse(raw.lang).value if raw.lang else identify_language(text, profiles).value
    except UnknownLanguage as exc:
        logger.info("dropping post %s: %s", raw.id, exc)
        return None
    key = (raw.user_id, text)
    if seen is not None:
        if key in seen:
            return None
        seen.add(key)
    if vocab.frozen and vocab.user_index(raw.user_id) is None:
        user_index = -1
    else:
        user_index = vocab.add_user(raw.user_id)
    tag_indices = frozenset(vocab.add_tag(t) for t in tags)
    return CleanPost(raw.id, user_index, text, lang, tag_indices)


def build_corpus(raws: Sequence[RawPost], vocab: Vocab | None = None,
                 profiles: NGramProfile | None = None, min_tag_freq: int = 1,
                 max_hashtags: int | None = None) -> tuple[list[CleanPost], Vocab]:
    """Clean a whole corpus.

    Hashtags rarer than ``min_tag_freq`` (counted over posts that survive
    cleaning) are dropped, and at most ``max_hashtags`` of the most frequent
    tags are kept. Passing a frozen ``vocab`` indexes against it instead.
    """
    allowed = None
    if vocab is None and (min_tag_freq > 1 or max_hashtags is not None):
        counts: Counter = Counter()
        order: dict[str, int] = {}
        scratch_seen: set = set()
        scratch = Vocab()
        for raw in raws:
            post = preprocess(raw, scratch, scratch_seen, profiles)
            if post is None:
                continue
            for t in sorted(post.tag_indices):
                name = scratch.tag(t)
                counts[name] += 1
                order.setdefault(name, len(order))
        ranked = sorted((t for t in counts if counts[t] >= min_tag_freq),
                        key=lambda t: (-counts[t], order[t]))
        if max_hashtags is not None:
            ranked = ranked[:max_hashtags]
        allowed = set(ranked)
    vocab = vocab if vocab is not None else Vocab()
    seen: set = set()
    posts = []
    for raw in raws:
        post = preprocess(raw, vocab, seen, profiles, allowed)
        if post is not None:
            posts.append(post)
    logger.info("kept %d of %d posts; %r", len(posts), len(raws), vocab)
    return posts, vocab


def to_raw(post: CleanPost, vocab: Vocab) -> RawPost:
    tags = tuple(vocab.tag(t) for t in sorted(post.tag_indices))
    return RawPost(post.id, vocab.user(post.user_index), post.token_text, post.lang, tags)


def split(posts: Sequence[CleanPost], ratios: Sequence[float] = (0.8, 0.1, 0.1),
          seed: int = 0) -> tuple[list[CleanPost], list[CleanPost], list[CleanPost]]:
    """Seeded train/val/test partition.

    Posts are sorted by id before shuffling so the result does not depend on
    input order. Val and test get floor allocations; the remainder is train.
    """
    if len(ratios) != 3 or any(r <= 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"ratios must be three positive numbers summing to 1, got {tuple(ratios)}")
    if len(posts) < 3:
        raise DataError("need at least 3 posts to split")
    ordered = sorted(posts, key=lambda p: p.id)
    SplitMix64(seed).shuffle(ordered)
    n = len(ordered)
    n_val = math.floor(n * ratios[1] + 1e-9)
    n_test = math.floor(n * ratios[2] + 1e-9)
    n_train = n - n_val - n_test
    return ordered[:n_train], ordered[n_train:n_train + n_val], ordered[n_train + n_val:]


def stats(posts: Sequence[CleanPost]) -> CorpusStats:
    if not posts:
        raise DataError("cannot compute statistics of an empty corpus")
    users = {p.user_index for p in posts}
    tags = set().union(*(p.tag_indices for p in posts))
    total_tags = sum(len(p.tag_indices) for p in posts)
    return CorpusStats(
        n_posts=len(posts),
        n_users=len(users),
        n_hashtags=len(tags),
        avg_tags_per_post=Fraction(total_tags, len(posts)),
        avg_posts_per_user=Fraction(len(posts), len(users)),
    )
