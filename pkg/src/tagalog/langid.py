"""Script-based language identification for the eight supported codes.

Every code except Hindi and Marathi owns a script, so those resolve from a
code-point histogram alone. Devanagari text is disambiguated with
Cavnar-Trenkle rank-order trigram profiles.
"""
from __future__ import annotations

import csv
import enum
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from .errors import DataError, UnknownLanguage


class LangCode(str, enum.Enum):
    BN = "bn"
    HI = "hi"
    MR = "mr"
    GU = "gu"
    KN = "kn"
    TE = "te"
    TA = "ta"
    EN = "en"

    def __str__(self):
        return self.value

    @classmethod
    def parse(cls, code: str) -> "LangCode":
        try:
            return cls(code.strip().lower())
        except ValueError:
            raise UnknownLanguage(f"unsupported language code {code!r}") from None


LANG_CODES = [c.value for c in LangCode]


class Family(str, enum.Enum):
    INDO_ARYAN = "IndoAryan"
    DRAVIDIAN = "Dravidian"
    ENGLISH = "English"


_FAMILY = {
    "bn": Family.INDO_ARYAN, "hi": Family.INDO_ARYAN, "mr": Family.INDO_ARYAN, "gu": Family.INDO_ARYAN,
    "kn": Family.DRAVIDIAN, "te": Family.DRAVIDIAN, "ta": Family.DRAVIDIAN,
    "en": Family.ENGLISH,
}


def family_of(lang: LangCode | str) -> Family:
    return _FAMILY[str(lang)]


# (block name, first code point, last code point); order breaks ties
SCRIPT_BLOCKS = [
    ("Bengali", 0x0980, 0x09FF),
    ("Devanagari", 0x0900, 0x097F),
    ("Gujarati", 0x0A80, 0x0AFF),
    ("Kannada", 0x0C80, 0x0CFF),
    ("Telugu", 0x0C00, 0x0C7F),
    ("Tamil", 0x0B80, 0x0BFF),
    ("Latin", 0x0000, 0x007F),
]
SCRIPT_LANG = {"Bengali": "bn", "Gujarati": "gu", "Kannada": "kn", "Telugu": "te",
               "Tamil": "ta", "Latin": "en"}


def detect_script(text: str) -> dict[str, int]:
    """Count letters per script block.

    Combining vowel signs and viramas are not letters and are not counted.
    """
    hist = {name: 0 for name, _, _ in SCRIPT_BLOCKS}
    for ch in text:
        if not unicodedata.category(ch).startswith("L"):
            continue
        cp = ord(ch)
        for name, lo, hi in SCRIPT_BLOCKS:
            if lo <= cp <= hi:
                hist[name] += 1
                break
    return hist


def dominant_script(text: str) -> str | None:
    hist = detect_script(text)
    best, count = None, 0
    for name, _, _ in SCRIPT_BLOCKS:
        if hist[name] > count:
            best, count = name, hist[name]
    return best


def trigrams(text: str) -> Counter:
    counts: Counter = Counter()
    for word in text.lower().split():
        padded = f" {word} "
        for i in range(len(padded) - 2):
            counts[padded[i:i + 3]] += 1
    return counts


def rank_trigrams(text: str, size: int) -> dict[str, int]:
    counts = trigrams(text)
    ordered = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:size]
    return {gram: rank for rank, (gram, _) in enumerate(ordered)}


@dataclass
class NGramProfile:
    """Ranked top-R trigram tables, one per language."""
    ranks: dict[str, dict[str, int]] = field(default_factory=dict)
    size: int = 300

    @classmethod
    def train(cls, samples: Mapping[str, Iterable[str]], size: int = 300) -> "NGramProfile":
        ranks = {lang: rank_trigrams("\n".join(texts), size) for lang, texts in samples.items()}
        return cls(ranks, size)

    def distance(self, text: str, lang: str) -> int:
        """Out-of-place distance between the text's ranking and ``lang``'s."""
        table = self.ranks[lang]
        doc = rank_trigrams(text, self.size)
        return sum(abs(r - table[g]) if g in table else self.size for g, r in doc.items())

    def save(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["lang", "trigram", "rank"])
            for lang in sorted(self.ranks):
                for gram, rank in sorted(self.ranks[lang].items(), key=lambda kv: kv[1]):
                    writer.writerow([lang, gram, rank])

    @classmethod
    def load(cls, path: str | Path, size: int = 300) -> "NGramProfile":
        ranks: dict[str, dict[str, int]] = {}
        try:
            with open(path, newline="", encoding="utf-8") as fh:
                for row in csv.DictReader(fh):
                    ranks.setdefault(row["lang"], {})[row["trigram"]] = int(row["rank"])
        except (OSError, KeyError, ValueError) as exc:
            raise DataError(f"cannot read language profiles {path}: {exc}") from exc
        return cls(ranks, size)


# Small labelled seed set used when no profile file is supplied.
SEED_TEXT = {
    "hi": [
        "मैं आज बाज़ार जा रहा हूँ और शाम को घर लौटूँगा",
        "यह फ़िल्म बहुत अच्छी है लेकिन कहानी थोड़ी लंबी है",
        "क्या आप मेरे साथ चाय पीने चलेंगे",
        "हमें अपने देश की संस्कृति पर गर्व है",
        "बच्चों को स्कूल में नई किताबें मिलीं",
        "मौसम आज बहुत सुहावना है और बारिश हो रही है",
        "उसने कहा कि वह कल दिल्ली नहीं जाएगा",
        "किसानों की समस्याओं पर सरकार को ध्यान देना चाहिए",
        "मुझे क्रिकेट देखना बहुत पसंद है",
        "इस साल त्योहार पर सबने मिलकर खुशियाँ मनाईं",
    ],
    "mr": [
        "मी आज बाजारात जात आहे आणि संध्याकाळी घरी परत येईन",
        "हा चित्रपट खूप छान आहे पण कथा थोडी लांब आहे",
        "तुम्ही माझ्याबरोबर चहा प्यायला येणार का",
        "आम्हाला आपल्या देशाच्या संस्कृतीचा अभिमान आहे",
        "मुलांना शाळेत नवीन पुस्तके मिळाली",
        "आज हवामान खूप छान आहे आणि पाऊस पडत आहे",
        "तो म्हणाला की तो उद्या मुंबईला जाणार नाही",
        "शेतकऱ्यांच्या समस्यांकडे सरकारने लक्ष दिले पाहिजे",
        "मला क्रिकेट पाहायला खूप आवडते",
        "या वर्षी सणाला सगळ्यांनी मिळून आनंद साजरा केला",
    ],
}


def default_profiles(size: int = 300) -> NGramProfile:
    return NGramProfile.train(SEED_TEXT, size)


def identify_language(text: str, profiles: NGramProfile | None = None) -> LangCode:
    """Resolve by dominant script; Devanagari goes to the closer of hi/mr."""
    script = dominant_script(text)
    if script is None:
        raise UnknownLanguage(f"no supported script in {text[:40]!r}")
    if script != "Devanagari":
        return LangCode(SCRIPT_LANG[script])
    profiles = profiles or default_profiles()
    if "hi" not in profiles.ranks or "mr" not in profiles.ranks:
        raise DataError("language profiles must include hi and mr")
    d_hi = profiles.distance(text, "hi")
    d_mr = profiles.distance(text, "mr")
    return LangCode.MR if d_mr < d_hi else LangCode.HI
