"""Corpus ingestion and sample extraction.

Corpora arrive as UTF-8 line-delimited records (one JSON object per
line) with fields: ``id``, ``author``, ``year_hijri`` (int, optional),
``era`` (string, optional), ``kind`` ("prose" | "poetry"), and ``text``
(prose) or ``verse`` (poetry, one record per verse).  At least one of
``year_hijri``/``era`` is required; era-only records are resolved to
the midpoint year of that era in the active scheme.  Converting the
upstream corpus layouts into this record format is the caller's job.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from numpy.random import Generator, PCG64, SeedSequence

from .errors import DataError
from .periodization import EraScheme, MODERN_END_AH, PRE_ISLAMIC_START_AH

DEFAULT_MAX_SAMPLE_WORDS = 100
DEFAULT_SKIP_HEAD_WORDS = 300


class ProseFormat(Enum):
    """Recognized on-disk prose layouts (currently only JSONL records)."""

    JSONL = "jsonl"


class Kind(Enum):
    PROSE = "prose"
    POETRY = "poetry"


@dataclass
class Document:
    """One source text: a prose work or a poet's collected verses."""

    doc_id: str
    author_id: str
    year_hijri: int
    kind: Kind
    text: str = ""
    verses: list[str] = field(default_factory=list)


@dataclass
class Sample:
    """A labeled training/eval unit: a token window or a verse group."""

    sample_id: str
    author_id: str
    tokens: list[str]
    year_hijri: int
    label: int | None = None


@dataclass
class IngestResult:
    documents: list[Document]
    skipped: list[tuple[int, str]] = field(default_factory=list)

    @property
    def skip_count(self) -> int:
        return len(self.skipped)


def _resolve_year(rec: dict, scheme: EraScheme | None) -> tuple[int | None, str | None]:
    """Year from the record, or the era's midpoint under the scheme."""
    year = rec.get("year_hijri")
    if year is not None:
        if not isinstance(year, int):
            return None, f"year_hijri is not an integer: {year!r}"
        if not PRE_ISLAMIC_START_AH <= year <= MODERN_END_AH:
            return None, f"year_hijri {year} outside covered span"
        return year, None
    era = rec.get("era")
    if era is None:
        return None, "record has neither year_hijri nor era"
    if scheme is None:
        return None, f"era-labeled record ({era!r}) but no scheme given to resolve it"
    try:
        return scheme.midpoint_year(era), None
    except DataError as exc:
        return None, str(exc)


def _iter_records(path: str | Path):
    p = Path(path)
    if not p.exists():
        raise DataError(f"corpus file not found: {p}")
    try:
        lines = p.read_text("utf-8").splitlines()
    except (OSError, UnicodeDecodeError) as exc:
        raise DataError(f"cannot read corpus file {p}: {exc}") from exc
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        yield lineno, line


def ingest_prose(
    path: str | Path,
    fmt: ProseFormat = ProseFormat.JSONL,
    scheme: EraScheme | None = None,
) -> IngestResult:
    """Read prose records into Documents, one per record.

    Malformed records (bad JSON, missing author, no resolvable year,
    empty text, wrong kind) are skipped and counted with a reason.
    Duplicate ``id`` values keep the first record seen.
    """
    if fmt is not ProseFormat.JSONL:
        raise DataError(f"unsupported prose format: {fmt}")
    documents: list[Document] = []
    skipped: list[tuple[int, str]] = []
    seen_ids: set[str] = set()
    for lineno, line in _iter_records(path):
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            skipped.append((lineno, f"bad JSON: {exc.msg}"))
            continue
        if rec.get("kind", "prose") != "prose":
            skipped.append((lineno, f"kind {rec.get('kind')!r} in prose corpus"))
            continue
        author = rec.get("author")
        if not author:
            skipped.append((lineno, "missing author"))
            continue
        year, reason = _resolve_year(rec, scheme)
        if year is None:
            skipped.append((lineno, reason or "unresolvable year"))
            continue
        text = rec.get("text", "")
        if not text.strip():
            skipped.append((lineno, "empty text"))
            continue
        doc_id = str(rec.get("id", f"line{lineno}"))
        if doc_id in seen_ids:
            skipped.append((lineno, f"duplicate doc_id {doc_id!r} (first version kept)"))
            continue
        seen_ids.add(doc_id)
        documents.append(Document(doc_id, str(author), year, Kind.PROSE, text=text))
    return IngestResult(documents, skipped)


def ingest_poetry(path: str | Path, scheme: EraScheme | None = None) -> IngestResult:
    """Read verse records and concatenate each poet's verses into one Document.

    Verses keep file order; interleaved poets are fine.  The poet's year
    comes from the first record that resolves one.
    """
    docs: dict[str, Document] = {}
    skipped: list[tuple[int, str]] = []
    for lineno, line in _iter_records(path):
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            skipped.append((lineno, f"bad JSON: {exc.msg}"))
            continue
        if rec.get("kind", "poetry") != "poetry":
            skipped.append((lineno, f"kind {rec.get('kind')!r} in poetry corpus"))
            continue
        author = rec.get("author")
        if not author:
            skipped.append((lineno, "missing author"))
            continue
        verse = rec.get("verse", "")
        if not verse.strip():
            skipped.append((lineno, "empty verse"))
            continue
        author = str(author)
        if author not in docs:
            year, reason = _resolve_year(rec, scheme)
            if year is None:
                skipped.append((lineno, reason or "unresolvable year"))
                continue
            docs[author] = Document(author, author, year, Kind.POETRY)
        docs[author].verses.append(verse)
    return IngestResult(list(docs.values()), skipped)


def prose_windows(doc: Document, tokens: list[str], max_words: int, skip_head_words: int) -> list[Sample]:
    """All contiguous non-overlapping token windows after the head skip.

    The trailing partial window is kept.  A document shorter than the
    skip yields no samples.
    """
    if max_words < 1:
        raise DataError("max_words must be >= 1")
    if skip_head_words < 0:
        raise DataError("skip_head_words must be >= 0")
    body = tokens[skip_head_words:]
    samples = []
    for start in range(0, len(body), max_words):
        window = body[start : start + max_words]
        if window:
            samples.append(
                Sample(
                    sample_id=f"{doc.doc_id}:w{skip_head_words + start}",
                    author_id=doc.author_id,
                    tokens=window,
                    year_hijri=doc.year_hijri,
                )
            )
    return samples


def _allocate_quota(capacities: list[int], quota: int) -> list[int]:
    """Spread quota round-robin across documents, capped by capacity.

    Keeps per-document counts as even as possible; when a short document
    cannot absorb its share, the remainder shifts to documents with
    spare capacity.
    """
    alloc = [0] * len(capacities)
    remaining = quota
    while remaining > 0:
        open_docs = [i for i in range(len(capacities)) if alloc[i] < capacities[i]]
        if not open_docs:
            break
        for i in open_docs:
            if remaining == 0:
                break
            alloc[i] += 1
            remaining -= 1
    return alloc


def sample_prose(
    docs_with_tokens: list[tuple[Document, list[str]]],
    max_words: int = DEFAULT_MAX_SAMPLE_WORDS,
    skip_head_words: int = DEFAULT_SKIP_HEAD_WORDS,
    per_author_quota: int | None = None,
    rng_seed: int = 0,
) -> list[Sample]:
    """Extract windowed samples, enforcing a per-author sample quota.

    Windows never cross document boundaries.  The quota is allocated as
    evenly as possible over an author's documents (document file order);
    within a document, the windows kept are drawn uniformly without
    replacement and emitted in document order.  Deterministic for a
    fixed seed.
    """
    by_author: dict[str, list[tuple[Document, list[str]]]] = {}
    for doc, tokens in docs_with_tokens:
        by_author.setdefault(doc.author_id, []).append((doc, tokens))

    out: list[Sample] = []
    for author in by_author:
        windows_per_doc = [
            prose_windows(doc, tokens, max_words, skip_head_words)
            for doc, tokens in by_author[author]
        ]
        if per_author_quota is None:
            for windows in windows_per_doc:
                out.extend(windows)
            continue
        alloc = _allocate_quota([len(w) for w in windows_per_doc], per_author_quota)
        rng = Generator(PCG64(SeedSequence([rng_seed, _stable_hash(author)])))
        for windows, take in zip(windows_per_doc, alloc):
            if take >= len(windows):
                out.extend(windows)
            elif take > 0:
                keep = sorted(rng.choice(len(windows), size=take, replace=False).tolist())
                out.extend(windows[i] for i in keep)
    return out


def _stable_hash(text: str) -> int:
    """Platform-stable 64-bit FNV-1a hash (Python's hash() is salted)."""
    h = 0xCBF29CE484222325
    for byte in text.encode("utf-8"):
        h = ((h ^ byte) * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return h


def sample_poetry(
    doc: Document,
    verses_per_sample: int,
    prepared_verses: list[list[str]] | None = None,
) -> list[Sample]:
    """Group consecutive verses into fixed-size samples.

    Exactly ``verses_per_sample`` verses per sample, joined by a single
    space; the trailing partial group is discarded.  ``prepared_verses``
    optionally supplies pre-tokenized verses (one token list per verse);
    otherwise verses are split on whitespace as-is.
    """
    if not 1 <= verses_per_sample <= 16:
        raise DataError("verses_per_sample must be in 1..16")
    verse_tokens = (
        prepared_verses if prepared_verses is not None else [v.split() for v in doc.verses]
    )
    samples = []
    n_groups = len(verse_tokens) // verses_per_sample
    for g in range(n_groups):
        tokens: list[str] = []
        for v in verse_tokens[g * verses_per_sample : (g + 1) * verses_per_sample]:
            tokens.extend(v)
        samples.append(
            Sample(
                sample_id=f"{doc.doc_id}:v{g}",
                author_id=doc.author_id,
                tokens=tokens,
                year_hijri=doc.year_hijri,
            )
        )
    return samples
