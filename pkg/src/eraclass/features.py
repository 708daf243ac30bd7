"""Vocabularies and model-input extraction.

Vocabulary indices reserve 0 for PAD and 1 for OOV; real units occupy
the dense range ``2 .. size+1``, ordered by descending training-set
frequency with ties broken by first occurrence.  Vocabularies (and the
TF-IDF document-frequency table and sequence ``max_len``) are computed
from the training split only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError

PAD_INDEX = 0
OOV_INDEX = 1

FEATURE_KINDS = ("bow", "tfidf", "word_seq", "char_seq")


@dataclass
class Vocabulary:
    unit: str  # "word" | "char"
    index_of: dict[str, int]
    max_size: int
    frequencies: dict[str, int]

    @property
    def size(self) -> int:
        """Number of real units (excludes PAD/OOV)."""
        return len(self.index_of)


def sample_units(tokens: list[str], unit: str) -> list[str]:
    """Tokens as-is for word features; characters of the space-joined
    text (spaces included) for char features."""
    if unit == "word":
        return tokens
    if unit == "char":
        return list(" ".join(tokens))
    raise ConfigError(f"unknown vocabulary unit {unit!r}")


def build_vocab(train_token_lists: list[list[str]], unit: str = "word", max_size: int = 15000) -> Vocabulary:
    """Index the top ``max_size`` units by training-set frequency.

    Ties break by first occurrence order, which makes the result
    deterministic for a fixed training split.
    """
    if max_size < 1:
        raise ConfigError("max_size must be >= 1")
    if not train_token_lists:
        raise DataError("cannot build a vocabulary from an empty training set")
    counts: dict[str, int] = {}
    first_seen: dict[str, int] = {}
    pos = 0
    for tokens in train_token_lists:
        for u in sample_units(tokens, unit):
            counts[u] = counts.get(u, 0) + 1
            if u not in first_seen:
                first_seen[u] = pos
            pos += 1
    ranked = sorted(counts, key=lambda u: (-counts[u], first_seen[u]))[:max_size]
    index_of = {u: i + 2 for i, u in enumerate(ranked)}
    return Vocabulary(unit, index_of, max_size, {u: counts[u] for u in ranked})


def bow_vector(tokens: list[str], vocab: Vocabulary) -> np.ndarray:
    """Binary presence vector over the vocabulary; OOV tokens are ignored."""
    v = np.zeros(vocab.size, dtype=np.float64)
    for t in sample_units(tokens, vocab.unit):
        idx = vocab.index_of.get(t)
        if idx is not None:
            v[idx - 2] = 1.0
    return v


def compute_idf_table(train_token_lists: list[list[str]], vocab: Vocabulary) -> dict[str, float]:
    """Smoothed idf over the training split: ln((1+N)/(1+df)) + 1."""
    n_docs = len(train_token_lists)
    df: dict[str, int] = {}
    for tokens in train_token_lists:
        for u in set(sample_units(tokens, vocab.unit)):
            if u in vocab.index_of:
                df[u] = df.get(u, 0) + 1
    return {
        u: math.log((1 + n_docs) / (1 + df.get(u, 0))) + 1.0 for u in vocab.index_of
    }


def tfidf_vector(tokens: list[str], vocab: Vocabulary, idf_table: dict[str, float]) -> np.ndarray:
    """Raw term counts weighted by idf, then L2-normalized.

    An all-zero vector stays zero.
    """
    v = np.zeros(vocab.size, dtype=np.float64)
    for t in sample_units(tokens, vocab.unit):
        idx = vocab.index_of.get(t)
        if idx is not None:
            v[idx - 2] += idf_table[t]
    norm = np.linalg.norm(v)
    if norm > 0:
        v /= norm
    return v


def encode_sequence(tokens: list[str], vocab: Vocabulary, max_len: int) -> np.ndarray:
    """Map units to indices (unknown -> OOV), truncate, post-pad with PAD."""
    units = sample_units(tokens, vocab.unit)[:max_len]
    seq = np.full(max_len, PAD_INDEX, dtype=np.int64)
    for i, u in enumerate(units):
        seq[i] = vocab.index_of.get(u, OOV_INDEX)
    return seq


def train_max_len(train_token_lists: list[list[str]], unit: str) -> int:
    """Longest training sequence, the default padding length."""
    longest = max((len(sample_units(t, unit)) for t in train_token_lists), default=0)
    if longest == 0:
        raise DataError("training set has no non-empty sequences")
    return longest


@dataclass
class FeatureMatrix:
    rows: int
    cols: int
    values: np.ndarray
    kind: str


def extract_features(
    token_lists: list[list[str]],
    kind: str,
    vocab: Vocabulary,
    idf_table: dict[str, float] | None = None,
    max_len: int | None = None,
) -> FeatureMatrix:
    """Vectorize a batch of samples with one of the four feature kinds."""
    if kind == "bow":
        values = np.stack([bow_vector(t, vocab) for t in token_lists]) if token_lists else np.zeros((0, vocab.size))
    elif kind == "tfidf":
        if idf_table is None:
            raise ConfigError("tfidf features require an idf table")
        values = np.stack([tfidf_vector(t, vocab, idf_table) for t in token_lists]) if token_lists else np.zeros((0, vocab.size))
    elif kind in ("word_seq", "char_seq"):
        if max_len is None:
            raise ConfigError("sequence features require max_len")
        values = (
            np.stack([encode_sequence(t, vocab, max_len) for t in token_lists])
            if token_lists
            else np.zeros((0, max_len), dtype=np.int64)
        )
    else:
        raise ConfigError(f"unknown feature kind {kind!r}")
    return FeatureMatrix(values.shape[0], values.shape[1], values, kind)


def vocab_unit_for(kind: str) -> str:
    return "char" if kind == "char_seq" else "word"


def dump_vocab(vocab: Vocabulary, path: str | Path) -> None:
    """Write ``token<TAB>index<TAB>train_frequency`` rows in index order."""
    lines = [
        f"{tok}\t{idx}\t{vocab.frequencies[tok]}"
        for tok, idx in sorted(vocab.index_of.items(), key=lambda kv: kv[1])
    ]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_vocab(path: str | Path, unit: str, max_size: int) -> Vocabulary:
    lines = Path(path).read_text("utf-8").splitlines()
    index_of: dict[str, int] = {}
    freqs: dict[str, int] = {}
    for line in lines:
        if not line:
            continue
        tok, idx, freq = line.split("\t")
        index_of[tok] = int(idx)
        freqs[tok] = int(freq)
    return Vocabulary(unit, index_of, max_size, freqs)
