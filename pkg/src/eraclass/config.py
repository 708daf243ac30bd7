"""Experiment configuration: a single YAML file drives a full run.

Every hyperparameter has a default matching the reference setup (dense
width 32, dropout 0.7, batch 512 with RMSProp for the feed-forward
model; two stacked BiGRU(32) layers with batch 128 for the recurrent
model; vocabulary 15000).  The config hash identifies a run: it is the
SHA-256 of the fully resolved config serialized canonically, so two
runs with identical settings share a hash.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import yaml

from .errors import ConfigError
from .features import FEATURE_KINDS

MODEL_FAMILIES = ("ann", "rnn", "cnn", "logreg")
VECTOR_FEATURES = ("bow", "tfidf")
SEQUENCE_FEATURES = ("word_seq", "char_seq")


@dataclass
class CorpusConfig:
    path: str = ""
    kind: str = "prose"  # "prose" | "poetry"


@dataclass
class PrepSection:
    remove_stopwords: bool = False
    apply_lemmas: bool = False
    lemma_file: str | None = None
    stopword_file: str | None = None


@dataclass
class SamplingConfig:
    max_sample_words: int = 100
    skip_head_words: int = 300
    per_author_quota: int | None = None
    verses_per_sample: int = 4


@dataclass
class SplitSection:
    protocol: str = "author_disjoint"
    test_frac: float = 0.15
    val_frac_of_train: float = 0.15


@dataclass
class FeatureConfig:
    kind: str = "bow"
    vocab_size: int = 15000
    max_len: int | None = None  # sequences only; None = longest train sequence


@dataclass
class ModelConfig:
    family: str = "ann"
    # ann
    dense_units: int = 32
    dense_blocks: int = 1
    dropout: float = 0.7
    # rnn
    cell: str = "bigru"
    recurrent_units: int = 32
    recurrent_layers: int = 2
    embedding_dim: int = 64
    # cnn
    filters: int = 128
    kernel_width: int = 5
    dense_widths: list[int] = field(default_factory=list)
    # logreg
    C: float = 1.0
    max_iterations: int = 200
    tolerance: float = 1e-5


@dataclass
class TrainingConfig:
    optimizer: str = "rmsprop"
    learning_rate: float = 1e-3
    batch_size: int = 512
    epochs: int = 10
    patience: int | None = None
    rho: float = 0.9
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-7


@dataclass
class ExperimentConfig:
    corpus: CorpusConfig = field(default_factory=CorpusConfig)
    prep: PrepSection = field(default_factory=PrepSection)
    scheme: str = "openiti5"  # builtin id or scheme-file path
    custom_bins: dict | None = None  # {width_years, range_start, range_end}
    sampling: SamplingConfig = field(default_factory=SamplingConfig)
    split: SplitSection = field(default_factory=SplitSection)
    features: FeatureConfig = field(default_factory=FeatureConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    training: TrainingConfig = field(default_factory=TrainingConfig)
    seed: int = 0
    output_dir: str = "runs"

    def validate(self) -> "ExperimentConfig":
        if self.corpus.kind not in ("prose", "poetry"):
            raise ConfigError(f"corpus.kind must be prose or poetry, got {self.corpus.kind!r}")
        if not self.corpus.path:
            raise ConfigError("corpus.path is required")
        if self.features.kind not in FEATURE_KINDS:
            raise ConfigError(f"features.kind must be one of {FEATURE_KINDS}")
        if self.model.family not in MODEL_FAMILIES:
            raise ConfigError(f"model.family must be one of {MODEL_FAMILIES}")
        pairs = {
            "ann": VECTOR_FEATURES,
            "logreg": VECTOR_FEATURES,
            "rnn": SEQUENCE_FEATURES,
            "cnn": SEQUENCE_FEATURES,
        }
        if self.features.kind not in pairs[self.model.family]:
            raise ConfigError(
                f"feature kind {self.features.kind!r} is incompatible with model "
                f"family {self.model.family!r} (expected one of {pairs[self.model.family]})"
            )
        if self.custom_bins is not None:
            missing = {"width_years", "range_start", "range_end"} - set(self.custom_bins)
            if missing:
                raise ConfigError(f"custom_bins missing keys: {sorted(missing)}")
        if self.features.vocab_size < 1:
            raise ConfigError("features.vocab_size must be >= 1")
        if not 0 < self.split.test_frac < 1 or not 0 < self.split.val_frac_of_train < 1:
            raise ConfigError("split fractions must lie strictly between 0 and 1")
        if self.split.protocol not in ("author_disjoint", "merged"):
            raise ConfigError(f"unknown split protocol {self.split.protocol!r}")
        if self.training.optimizer not in ("rmsprop", "adam"):
            raise ConfigError(f"unknown optimizer {self.training.optimizer!r}")
        if self.training.learning_rate <= 0:
            raise ConfigError("training.learning_rate must be positive")
        if self.training.epochs < 0 or self.training.batch_size < 1:
            raise ConfigError("bad training.epochs/batch_size")
        if self.model.family == "logreg" and self.model.C <= 0:
            raise ConfigError("model.C must be positive")
        if not 0 <= self.model.dropout < 1:
            raise ConfigError("model.dropout must be in [0, 1)")
        return self

    def to_dict(self) -> dict:
        return asdict(self)

    def config_hash(self) -> str:
        """Hash of the experiment-defining settings.

        The output directory is excluded: where artifacts land does not
        change what gets computed, and identical experiments must hash
        identically wherever they run.
        """
        payload = self.to_dict()
        payload.pop("output_dir")
        canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


_SECTIONS = {
    "corpus": CorpusConfig,
    "prep": PrepSection,
    "sampling": SamplingConfig,
    "split": SplitSection,
    "features": FeatureConfig,
    "model": ModelConfig,
    "training": TrainingConfig,
}


def config_from_dict(raw: dict) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")
    kwargs = {}
    known = set(_SECTIONS) | {"scheme", "custom_bins", "seed", "output_dir"}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for name, cls in _SECTIONS.items():
        section = raw.get(name, {})
        if not isinstance(section, dict):
            raise ConfigError(f"config section {name!r} must be a mapping")
        valid = {f for f in cls.__dataclass_fields__}
        bad = set(section) - valid
        if bad:
            raise ConfigError(f"unknown keys in {name!r}: {sorted(bad)}")
        try:
            kwargs[name] = cls(**section)
        except TypeError as exc:
            raise ConfigError(f"bad {name!r} section: {exc}") from exc
    for key in ("scheme", "custom_bins", "seed", "output_dir"):
        if key in raw:
            kwargs[key] = raw[key]
    return ExperimentConfig(**kwargs).validate()


def load_config(path: str | Path) -> ExperimentConfig:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    try:
        raw = yaml.safe_load(p.read_text("utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config {p}: {exc}") from exc
    return config_from_dict(raw or {})
