"""Deterministic Arabic text cleaning and normalization.

The pipeline is: ``clean`` (strip markup, punctuation, symbols, digits)
-> ``normalize`` (strip diacritics and kashida) -> whitespace
tokenization -> optional stop-word removal -> optional dictionary
lemmatization.  All operations are pure functions; the two character
classes removed by ``clean`` and ``normalize`` are disjoint, so the
order of those two steps does not change the result.
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .errors import ConfigError, DataError

# Arabic combining marks (tanwin, short vowels, shadda, sukun, etc.)
# plus the superscript alef, and the purely aesthetic kashida/tatweel.
DIACRITICS = {chr(cp) for cp in range(0x064B, 0x0660)} | {"ٰ"}
KASHIDA = "ـ"

_TAG_RE = re.compile(r"<[^>]*>")
_WS_RE = re.compile(r"\s+")
_DIGITS = set("0123456789٠١٢٣٤٥٦٧٨٩")


def clean(text: str) -> str:
    """Remove HTML tags, punctuation/symbol codepoints, and digits.

    Latin digits 0-9 and Arabic-Indic digits are removed; runs of
    whitespace collapse to a single space and the result is trimmed.
    Idempotent.
    """
    text = _TAG_RE.sub(" ", text)
    kept = []
    for ch in text:
        if ch in _DIGITS:
            continue
        cat = unicodedata.category(ch)
        if cat[0] in ("P", "S"):
            continue
        kept.append(ch)
    return _WS_RE.sub(" ", "".join(kept)).strip()


def normalize(text: str) -> str:
    """Delete Arabic diacritics and kashida; all other codepoints pass through.

    Idempotent and never increases the codepoint count.
    """
    return "".join(ch for ch in text if ch not in DIACRITICS and ch != KASHIDA)


def tokenize(text: str) -> list[str]:
    """Split on Unicode whitespace (empty input yields no tokens)."""
    return text.split()


def remove_stopwords(tokens: list[str], stopword_list: set[str]) -> list[str]:
    """Order-preserving filter dropping every token in ``stopword_list``."""
    return [t for t in tokens if t not in stopword_list]


def lemmatize(tokens: list[str], lemma_table: dict[str, str]) -> list[str]:
    """Replace each token by its lemma when the table has one, else keep it.

    Length-preserving; tokens absent from the table pass through
    unchanged.
    """
    return [lemma_table.get(t, t) for t in tokens]


@dataclass
class PrepConfig:
    """Switches for the optional preprocessing stages.

    ``apply_lemmas=True`` requires a non-empty ``lemma_table``.
    """

    remove_stopwords: bool = False
    apply_lemmas: bool = False
    lemma_table: dict[str, str] | None = None
    stopword_list: set[str] = field(default_factory=set)

    def __post_init__(self):
        if self.apply_lemmas and not self.lemma_table:
            raise ConfigError("apply_lemmas=True requires a non-empty lemma_table")


def prepare_text(text: str, config: PrepConfig | None = None) -> list[str]:
    """Run the full preprocessing chain on raw text and return tokens.

    With both options off this is exactly
    ``tokenize(normalize(clean(text)))``.  When both are on, stop words
    are removed before lemma substitution.
    """
    tokens = tokenize(normalize(clean(text)))
    if config is None:
        return tokens
    if config.remove_stopwords:
        tokens = remove_stopwords(tokens, config.stopword_list)
    if config.apply_lemmas:
        tokens = lemmatize(tokens, config.lemma_table or {})
    return tokens


def load_stopwords(path: str | Path | None = None) -> set[str]:
    """Load a stop-word list (one token per line, UTF-8).

    Without a path, the bundled Arabic list is used.
    """
    if path is None:
        text = resources.files("eraclass.data").joinpath("stopwords_ar.txt").read_text("utf-8")
    else:
        p = Path(path)
        if not p.exists():
            raise DataError(f"stop-word file not found: {p}")
        text = p.read_text("utf-8")
    return {line.strip() for line in text.splitlines() if line.strip()}


def load_lemma_table(path: str | Path) -> dict[str, str]:
    """Load a two-column ``surface<TAB>lemma`` file into a dict."""
    p = Path(path)
    if not p.exists():
        raise DataError(f"lemma file not found: {p}")
    table: dict[str, str] = {}
    for lineno, line in enumerate(p.read_text("utf-8").splitlines(), 1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise DataError(f"{p}:{lineno}: expected 'surface<TAB>lemma', got {line!r}")
        table[parts[0]] = parts[1]
    return table
