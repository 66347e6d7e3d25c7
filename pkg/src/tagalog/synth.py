"""Synthetic multilingual corpora with known hashtag structure.

Each user has two preferred hashtags and one or two languages; each
language owns one hashtag. A post's tags are its author's preferred tags
plus the tag of the language it is written in, and its text is built from
fixed per-(language, tag) word templates plus a little per-language filler,
so the labels are recoverable from (user, language) or from the text.
"""
from __future__ import annotations

import unicodedata
from dataclasses import dataclass
from functools import lru_cache

from .corpus import RawPost
from .errors import ConfigError
from .hashing import SplitMix64, fnv1a64

LANG_ORDER = ["hi", "bn", "ta", "te", "gu", "kn", "en", "mr"]

_LETTER_RANGES = {
    "hi": (0x0915, 0x0939), "mr": (0x0915, 0x0939), "bn": (0x0995, 0x09B9),
    "gu": (0x0A95, 0x0AB9), "kn": (0x0C95, 0x0CB9), "te": (0x0C15, 0x0C39),
    "ta": (0x0B95, 0x0BB9), "en": (0x61, 0x7A),
}

TOPICS = [
    "cricket", "politics", "music", "food", "festival", "technology", "weather", "fitness",
    "movies", "education", "fashion", "travel", "business", "nature", "gaming", "news",
    "culture", "career", "pets", "environment", "sports", "health", "science", "art",
]

TEMPLATE_WORDS = 2
FILLER_VOCAB = 12


@dataclass
class SynthSpec:
    n_users: int = 6
    n_posts: int = 60
    n_languages: int = 7
    n_hashtags: int = 12
    seed: int = 42

    def validate(self) -> None:
        if self.n_users < 1:
            raise ConfigError("synthetic corpus needs at least one user")
        if self.n_posts < 1:
            raise ConfigError("synthetic corpus needs at least one post")
        if not 1 <= self.n_languages <= len(LANG_ORDER):
            raise ConfigError(f"n_languages must be in 1..{len(LANG_ORDER)}")
        if self.n_hashtags < 2:
            raise ConfigError("synthetic corpus needs at least two hashtags")


@lru_cache(maxsize=None)
def alphabet(lang: str) -> tuple[str, ...]:
    lo, hi = _LETTER_RANGES[lang]
    return tuple(chr(c) for c in range(lo, hi + 1) if unicodedata.category(chr(c)) in ("Lo", "Ll"))


def make_word(lang: str, key: str, seed: int) -> str:
    rng = SplitMix64(fnv1a64(f"{lang}|{key}") ^ seed)
    letters = alphabet(lang)
    return "".join(rng.choice(letters) for _ in range(3 + rng.randbelow(3)))


def hashtag_names(n: int) -> list[str]:
    return [TOPICS[k] if k < len(TOPICS) else f"topic{k}" for k in range(n)]


def gen_synth(spec: SynthSpec) -> list[RawPost]:
    spec.validate()
    rng = SplitMix64(spec.seed)
    langs = LANG_ORDER[: spec.n_languages]
    tags = hashtag_names(spec.n_hashtags)
    lang_tag = {lang: i % spec.n_hashtags for i, lang in enumerate(langs)}

    def template(lang: str, tag: int) -> list[str]:
        return [make_word(lang, f"tag:{tags[tag]}:{j}", spec.seed) for j in range(TEMPLATE_WORDS)]

    fillers = {lang: [make_word(lang, f"fill:{j}", spec.seed) for j in range(FILLER_VOCAB)] for lang in langs}

    users = []
    for k in range(spec.n_users):
        prefs = sorted(rng.sample(range(spec.n_hashtags), 2))
        user_langs = [langs[k % len(langs)]]
        if len(langs) > 1 and rng.randbelow(2):
            user_langs.append(rng.choice([lang for lang in langs if lang != user_langs[0]]))
        users.append((f"u{k:03d}", prefs, user_langs))

    posts, seen = [], set()
    for p in range(spec.n_posts):
        user_id, prefs, user_langs = users[p % spec.n_users]
        lang = rng.choice(user_langs)
        post_tags = sorted(set(prefs) | {lang_tag[lang]})
        base = [w for t in post_tags for w in template(lang, t)]
        n_fill = 1 + rng.randbelow(3)
        while True:
            words = base + [rng.choice(fillers[lang]) for _ in range(n_fill)]
            rng.shuffle(words)
            text = " ".join(words)
            if (user_id, text) not in seen:
                break
            n_fill += 1
        seen.add((user_id, text))
        posts.append(RawPost(f"p{p:05d}", user_id, text, lang, tuple(tags[t] for t in post_tags)))
    return posts
