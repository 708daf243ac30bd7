"""Shared fixtures: synthetic corpora with era-disjoint vocabularies.

Synthetic tokens must be letter-only: the cleaning stage strips digits,
punctuation, and symbols, so tokens like "w0_1" would collapse.
"""

import itertools
import json
from pathlib import Path

import pytest
from numpy.random import Generator, PCG64, SeedSequence

# One representative year per era of the five-era prose scheme
# (Islamic, Abbasid, Aldoul wa al-emarat, Ottoman, Modern).
ERA_YEARS_5 = [100, 300, 700, 1100, 1400]


def class_vocab(cls: int, size: int = 40) -> list[str]:
    """Letter-only tokens unique to one class."""
    suffixes = ["".join(p) for p in itertools.product("abcdefgh", repeat=2)][:size]
    return [chr(ord("q") - cls) + s for s in suffixes]


def write_prose_corpus(
    path: Path,
    authors_per_class: int = 10,
    words_per_author: int = 500,
    seed: int = 42,
    years: list[int] | None = None,
) -> Path:
    """Prose JSONL corpus: one document per author, era-disjoint vocabulary."""
    years = years or ERA_YEARS_5
    rng = Generator(PCG64(SeedSequence(seed)))
    lines = []
    for cls, year in enumerate(years):
        vocab = class_vocab(cls)
        for a in range(authors_per_class):
            author = f"author{chr(ord('a') + cls)}{chr(ord('a') + a)}"
            words = rng.choice(vocab, size=words_per_author).tolist()
            lines.append(
                json.dumps(
                    {
                        "id": f"doc{chr(ord('a') + cls)}{a}",
                        "author": author,
                        "year_hijri": year,
                        "kind": "prose",
                        "text": " ".join(words),
                    }
                )
            )
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def write_poetry_corpus(
    path: Path,
    poets_per_class: int = 6,
    verses_per_poet: int = 24,
    words_per_verse: int = 6,
    seed: int = 9,
) -> Path:
    """Poetry JSONL corpus labeled by era name (apcd5 eras)."""
    eras = ["Pre-Islamic", "Islamic", "Abbasid", "Ottoman", "Modern"]
    rng = Generator(PCG64(SeedSequence(seed)))
    lines = []
    for cls, era in enumerate(eras):
        vocab = class_vocab(cls)
        for p in range(poets_per_class):
            poet = f"poet{chr(ord('a') + cls)}{chr(ord('a') + p)}"
            for v in range(verses_per_poet):
                words = rng.choice(vocab, size=words_per_verse).tolist()
                lines.append(
                    json.dumps(
                        {
                            "id": f"v{cls}{p}{v}",
                            "author": poet,
                            "era": era,
                            "kind": "poetry",
                            "verse": " ".join(words),
                        }
                    )
                )
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def base_config(corpus: Path, out_dir: Path, **overrides) -> dict:
    cfg = {
        "corpus": {"path": str(corpus), "kind": "prose"},
        "scheme": "openiti5",
        "sampling": {"max_sample_words": 25, "skip_head_words": 0},
        "split": {"protocol": "merged"},
        "features": {"kind": "bow", "vocab_size": 15000},
        "model": {"family": "logreg", "C": 1.0},
        "training": {},
        "seed": 7,
        "output_dir": str(out_dir),
    }
    cfg.update(overrides)
    return cfg


def write_config(path: Path, cfg: dict) -> Path:
    import yaml

    path.write_text(yaml.safe_dump(cfg), encoding="utf-8")
    return path


@pytest.fixture(scope="session")
def prose_corpus(tmp_path_factory) -> Path:
    path = tmp_path_factory.mktemp("corpus") / "prose.jsonl"
    return write_prose_corpus(path)


@pytest.fixture(scope="session")
def poetry_corpus(tmp_path_factory) -> Path:
    path = tmp_path_factory.mktemp("corpus") / "poetry.jsonl"
    return write_poetry_corpus(path)
