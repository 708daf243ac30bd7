"""Pipeline stages and the end-to-end experiment runner.

Each stage reads the previous stage's artifacts from the run directory
and writes its own:

    ingest -> documents.jsonl, ingest_stats.json
    prep   -> samples.jsonl
    split  -> split_manifest.tsv, split_stats.json
    train  -> vocab.tsv, features.json, checkpoint.json, history.json
    eval   -> eval_report.json, confusion.csv, confusion.svg

``run`` executes all stages into a directory named by the config hash
and adds repro.json; on failure, partial artifacts stay behind next to
a FAILED marker.  Runs are byte-reproducible for a fixed config + seed.
"""

from __future__ import annotations

import json
import platform
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import CnnSpec, LogRegSpec, cnn_layer_specs, logreg_fit
from .config import ExperimentConfig
from .dataset import LabeledDataset, SplitManifest, SplitSpec, label_dataset, split
from .errors import ConfigError, DataError
from .evaluation import (
    compute_metrics,
    era_token_counts_from_samples,
    render_confusion,
    report_to_dict,
    word_freq_by_era,
    write_report,
)
from .features import (
    Vocabulary,
    build_vocab,
    compute_idf_table,
    dump_vocab,
    extract_features,
    load_vocab,
    train_max_len,
    vocab_unit_for,
)
from .ingest import Document, Kind, Sample, ingest_poetry, ingest_prose, sample_poetry, sample_prose
from .nn.model import (
    ann_layer_specs,
    build_model,
    load_checkpoint,
    predict_labels,
    rnn_layer_specs,
    save_checkpoint,
    train_model,
)
from .nn.optim import OptimizerSpec, build_optimizer
from .periodization import EraScheme, custom_bins, resolve_scheme
from .textprep import PrepConfig, load_lemma_table, load_stopwords, prepare_text

ART_DOCUMENTS = "documents.jsonl"
ART_INGEST_STATS = "ingest_stats.json"
ART_SAMPLES = "samples.jsonl"
ART_MANIFEST = "split_manifest.tsv"
ART_SPLIT_STATS = "split_stats.json"
ART_VOCAB = "vocab.tsv"
ART_FEATURES = "features.json"
ART_CHECKPOINT = "checkpoint.json"
ART_HISTORY = "history.json"
ART_REPORT = "eval_report.json"
ART_CONF_CSV = "confusion.csv"
ART_CONF_SVG = "confusion.svg"
ART_REPRO = "repro.json"

RUN_ARTIFACTS = (
    ART_MANIFEST,
    ART_VOCAB,
    ART_CHECKPOINT,
    ART_REPORT,
    ART_CONF_CSV,
    ART_CONF_SVG,
    ART_REPRO,
)

STAGE_INPUTS = {
    "prep": (ART_DOCUMENTS, "ingest"),
    "split": (ART_SAMPLES, "prep"),
    "train": (ART_MANIFEST, "split"),
    "eval": (ART_CHECKPOINT, "train"),
}


def _require(out_dir: Path, stage: str) -> None:
    artifact, producer = STAGE_INPUTS[stage]
    if not (out_dir / artifact).exists():
        raise DataError(
            f"stage {stage!r} needs {artifact} in {out_dir}; run the {producer!r} stage first"
        )


def active_scheme(config: ExperimentConfig) -> EraScheme:
    if config.custom_bins is not None:
        cb = config.custom_bins
        return custom_bins(cb["width_years"], cb["range_start"], cb["range_end"])
    return resolve_scheme(config.scheme)


def _build_prep(config: ExperimentConfig) -> PrepConfig:
    stopwords = (
        load_stopwords(config.prep.stopword_file) if config.prep.remove_stopwords else set()
    )
    lemma_table = None
    if config.prep.apply_lemmas:
        if not config.prep.lemma_file:
            raise ConfigError("prep.apply_lemmas=true requires prep.lemma_file")
        lemma_table = load_lemma_table(config.prep.lemma_file)
    return PrepConfig(
        remove_stopwords=config.prep.remove_stopwords,
        apply_lemmas=config.prep.apply_lemmas,
        lemma_table=lemma_table,
        stopword_list=stopwords,
    )


# ---------------------------------------------------------------------------
# Stages
# ---------------------------------------------------------------------------


def stage_ingest(config: ExperimentConfig, out_dir: Path) -> dict:
    scheme = active_scheme(config)
    if config.corpus.kind == "prose":
        result = ingest_prose(config.corpus.path, scheme=scheme)
    else:
        result = ingest_poetry(config.corpus.path, scheme=scheme)
    lines = []
    for doc in result.documents:
        rec = {
            "doc_id": doc.doc_id,
            "author_id": doc.author_id,
            "year_hijri": doc.year_hijri,
            "kind": doc.kind.value,
        }
        if doc.kind is Kind.PROSE:
            rec["text"] = doc.text
        else:
            rec["verses"] = doc.verses
        lines.append(json.dumps(rec, ensure_ascii=False, sort_keys=True))
    (out_dir / ART_DOCUMENTS).write_text("\n".join(lines) + "\n", encoding="utf-8")
    stats = {
        "documents": len(result.documents),
        "skipped": result.skip_count,
        "skip_reasons": [f"line {line}: {reason}" for line, reason in result.skipped],
    }
    (out_dir / ART_INGEST_STATS).write_text(
        json.dumps(stats, sort_keys=True, indent=1), encoding="utf-8"
    )
    return stats


def _read_artifact(out_dir: Path, artifact: str, producer: str) -> str:
    path = out_dir / artifact
    if not path.exists():
        raise DataError(f"{artifact} not found in {out_dir}; run the {producer!r} stage first")
    return path.read_text("utf-8")


def _load_documents(out_dir: Path) -> list[Document]:
    docs = []
    for line in _read_artifact(out_dir, ART_DOCUMENTS, "ingest").splitlines():
        if not line:
            continue
        rec = json.loads(line)
        docs.append(
            Document(
                rec["doc_id"],
                rec["author_id"],
                rec["year_hijri"],
                Kind(rec["kind"]),
                text=rec.get("text", ""),
                verses=rec.get("verses", []),
            )
        )
    return docs


def stage_prep(config: ExperimentConfig, out_dir: Path) -> dict:
    """Clean/normalize, window or group into samples, apply optional
    stop-word removal and lemmatization per sample."""
    _require(out_dir, "prep")
    docs = _load_documents(out_dir)
    prep = _build_prep(config)
    base = PrepConfig()  # cleaning + normalization only, pre-windowing
    samples: list[Sample] = []
    if config.corpus.kind == "prose":
        docs_with_tokens = [(doc, prepare_text(doc.text, base)) for doc in docs]
        samples = sample_prose(
            docs_with_tokens,
            max_words=config.sampling.max_sample_words,
            skip_head_words=config.sampling.skip_head_words,
            per_author_quota=config.sampling.per_author_quota,
            rng_seed=config.seed,
        )
    else:
        for doc in docs:
            prepared = [prepare_text(v, base) for v in doc.verses]
            samples.extend(sample_poetry(doc, config.sampling.verses_per_sample, prepared))

    kept = []
    dropped_empty = 0
    for s in samples:
        tokens = s.tokens
        if prep.remove_stopwords:
            tokens = [t for t in tokens if t not in prep.stopword_list]
        if prep.apply_lemmas:
            tokens = [prep.lemma_table.get(t, t) for t in tokens]
        if not tokens:
            dropped_empty += 1
            continue
        kept.append(Sample(s.sample_id, s.author_id, tokens, s.year_hijri))

    lines = [
        json.dumps(
            {
                "sample_id": s.sample_id,
                "author_id": s.author_id,
                "year_hijri": s.year_hijri,
                "tokens": s.tokens,
            },
            ensure_ascii=False,
            sort_keys=True,
        )
        for s in kept
    ]
    (out_dir / ART_SAMPLES).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return {"samples": len(kept), "dropped_empty": dropped_empty}


def _load_samples(out_dir: Path) -> list[Sample]:
    samples = []
    for line in _read_artifact(out_dir, ART_SAMPLES, "prep").splitlines():
        if not line:
            continue
        rec = json.loads(line)
        samples.append(
            Sample(rec["sample_id"], rec["author_id"], rec["tokens"], rec["year_hijri"])
        )
    return samples


def stage_split(config: ExperimentConfig, out_dir: Path) -> dict:
    _require(out_dir, "split")
    samples = _load_samples(out_dir)
    scheme = active_scheme(config)
    ds = label_dataset(samples, scheme)
    if not ds.samples:
        raise DataError("no samples remain after labeling/exclusions")
    spec = SplitSpec(
        test_frac=config.split.test_frac,
        val_frac_of_train=config.split.val_frac_of_train,
        protocol=config.split.protocol,
        seed=config.seed,
    )
    sp = split(ds, spec)
    SplitManifest.from_split(sp).write(out_dir / ART_MANIFEST)
    stats = {
        "scheme": scheme.name,
        "classes": scheme.labels,
        "protocol": spec.protocol,
        "train": len(sp.train),
        "val": len(sp.val),
        "test": len(sp.test),
        "excluded": ds.excluded,
        "clamped_low": ds.clamped_low,
        "clamped_high": ds.clamped_high,
    }
    (out_dir / ART_SPLIT_STATS).write_text(
        json.dumps(stats, sort_keys=True, indent=1), encoding="utf-8"
    )
    return stats


@dataclass
class SplitArrays:
    tokens: dict[str, list[list[str]]]
    labels: dict[str, np.ndarray]


def _load_split_arrays(out_dir: Path) -> SplitArrays:
    samples = {s.sample_id: s for s in _load_samples(out_dir)}
    manifest = SplitManifest.read(out_dir / ART_MANIFEST)
    tokens: dict[str, list[list[str]]] = {"train": [], "val": [], "test": []}
    labels: dict[str, list[int]] = {"train": [], "val": [], "test": []}
    for sample_id, part, label in manifest.rows:
        if sample_id not in samples:
            raise DataError(f"manifest references unknown sample {sample_id!r}")
        tokens[part].append(samples[sample_id].tokens)
        labels[part].append(label)
    return SplitArrays(tokens, {k: np.asarray(v, dtype=np.int64) for k, v in labels.items()})


def _featurize_all(config: ExperimentConfig, out_dir: Path, arrays: SplitArrays, vocab, idf, max_len):
    kind = config.features.kind
    out = {}
    for part in ("train", "val", "test"):
        out[part] = extract_features(arrays.tokens[part], kind, vocab, idf, max_len).values
    return out


def stage_train(config: ExperimentConfig, out_dir: Path) -> dict:
    _require(out_dir, "train")
    arrays = _load_split_arrays(out_dir)
    if not arrays.tokens["train"]:
        raise DataError("training split is empty")
    scheme = active_scheme(config)
    n_classes = scheme.n_classes
    kind = config.features.kind
    unit = vocab_unit_for(kind)

    vocab = build_vocab(arrays.tokens["train"], unit, config.features.vocab_size)
    idf = compute_idf_table(arrays.tokens["train"], vocab) if kind == "tfidf" else None
    max_len = None
    if kind in ("word_seq", "char_seq"):
        max_len = config.features.max_len or train_max_len(arrays.tokens["train"], unit)
    dump_vocab(vocab, out_dir / ART_VOCAB)
    feature_meta = {
        "kind": kind,
        "unit": unit,
        "vocab_size": config.features.vocab_size,
        "max_len": max_len,
        "n_train_docs": len(arrays.tokens["train"]),
        "idf": idf,
    }
    (out_dir / ART_FEATURES).write_text(
        json.dumps(feature_meta, ensure_ascii=False, sort_keys=True), encoding="utf-8"
    )

    feats = _featurize_all(config, out_dir, arrays, vocab, idf, max_len)
    meta = {"config_hash": config.config_hash(), "family": config.model.family, "feature_kind": kind}

    if config.model.family == "logreg":
        spec = LogRegSpec(config.model.C, config.model.max_iterations, config.model.tolerance)
        fitted = logreg_fit(feats["train"], arrays.labels["train"], spec)
        model = build_model(
            [{"type": "dense", "units": n_classes, "activation": "softmax"}],
            (vocab.size,),
            seed=config.seed,
        )
        model.set_weights([{"W": fitted.weights, "b": fitted.bias}])
        save_checkpoint(out_dir / ART_CHECKPOINT, model, "sparse_categorical_ce", (vocab.size,), meta)
        history = {
            "objective": fitted.objective,
            "objective_history": fitted.objective_history,
            "converged": fitted.converged,
            "n_iterations": fitted.n_iterations,
        }
        (out_dir / ART_HISTORY).write_text(
            json.dumps(history, sort_keys=True, indent=1), encoding="utf-8"
        )
        return {"family": "logreg", "converged": fitted.converged}

    if config.model.family == "ann":
        layer_specs, loss = ann_layer_specs(
            n_classes, config.model.dense_units, config.model.dense_blocks, config.model.dropout
        )
        input_shape: tuple[int, ...] = (vocab.size,)
    elif config.model.family == "rnn":
        layer_specs, loss = rnn_layer_specs(
            n_classes,
            vocab.size + 2,
            config.model.embedding_dim,
            config.model.cell,
            config.model.recurrent_units,
            config.model.recurrent_layers,
            config.model.dropout,
        )
        input_shape = (max_len,)
    else:  # cnn
        cnn = CnnSpec(
            embedding_dim=config.model.embedding_dim,
            filters=config.model.filters,
            kernel_width=config.model.kernel_width,
            dense_widths=config.model.dense_widths,
        )
        if cnn.kernel_width > (max_len or 0):
            raise ConfigError(
                f"kernel_width {cnn.kernel_width} exceeds sequence length {max_len}"
            )
        layer_specs, loss = cnn_layer_specs(cnn, vocab.size + 2, n_classes)
        input_shape = (max_len,)

    model = build_model(layer_specs, input_shape, seed=config.seed)
    opt_spec = OptimizerSpec(
        kind=config.training.optimizer,
        learning_rate=config.training.learning_rate,
        rho=config.training.rho,
        beta1=config.training.beta1,
        beta2=config.training.beta2,
        epsilon=config.training.epsilon,
    )
    history = train_model(
        model,
        loss,
        build_optimizer(opt_spec),
        feats["train"],
        arrays.labels["train"],
        feats["val"],
        arrays.labels["val"],
        epochs=config.training.epochs,
        batch_size=config.training.batch_size,
        seed=config.seed,
        patience=config.training.patience,
    )
    save_checkpoint(out_dir / ART_CHECKPOINT, model, loss, input_shape, meta)
    (out_dir / ART_HISTORY).write_text(
        json.dumps(
            {
                "epochs": history.epochs,
                "best_epoch": history.best_epoch,
                "best_val_accuracy": history.best_val_accuracy,
            },
            sort_keys=True,
            indent=1,
        ),
        encoding="utf-8",
    )
    return {"family": config.model.family, "best_val_accuracy": history.best_val_accuracy}


def _load_feature_state(config: ExperimentConfig, out_dir: Path):
    meta = json.loads((out_dir / ART_FEATURES).read_text("utf-8"))
    vocab = load_vocab(out_dir / ART_VOCAB, meta["unit"], meta["vocab_size"])
    return vocab, meta.get("idf"), meta.get("max_len")


def stage_eval(config: ExperimentConfig, out_dir: Path) -> dict:
    _require(out_dir, "eval")
    arrays = _load_split_arrays(out_dir)
    if not arrays.tokens["test"]:
        raise DataError("test split is empty")
    scheme = active_scheme(config)
    vocab, idf, max_len = _load_feature_state(config, out_dir)
    x_test = extract_features(
        arrays.tokens["test"], config.features.kind, vocab, idf, max_len
    ).values
    model, loss, meta = load_checkpoint(out_dir / ART_CHECKPOINT)
    predicted = predict_labels(model.forward(x_test, training=False), loss)
    report = compute_metrics(arrays.labels["test"], predicted, scheme.labels)
    write_report(report, out_dir / ART_REPORT, meta={"config_hash": config.config_hash()})
    render_confusion(report.confusion, out_dir / ART_CONF_CSV, out_dir / ART_CONF_SVG)
    return report_to_dict(report)


def analyze_merge(out_dir: Path, groups: list[list[int]]) -> dict:
    """Recompute accuracy after uniting adjacent eras in a saved report."""
    from .evaluation import merge_confusion, read_report

    report_path = out_dir / ART_REPORT
    if not report_path.exists():
        raise DataError(f"{ART_REPORT} not found in {out_dir}; run the 'eval' stage first")
    report = read_report(report_path)
    merged = merge_confusion(report.confusion, groups)
    result = {
        "groups": groups,
        "original_accuracy": report.accuracy,
        "merged_accuracy": merged.accuracy(),
        "merged_labels": merged.labels,
    }
    (out_dir / "merge_analysis.json").write_text(
        json.dumps(result, sort_keys=True, indent=1), encoding="utf-8"
    )
    return result


def analyze_wordfreq(config: ExperimentConfig, out_dir: Path, sample_id: str) -> dict:
    """Per-era training-corpus frequency totals for one sample's tokens."""
    for artifact, stage in ((ART_SAMPLES, "prep"), (ART_MANIFEST, "split")):
        if not (out_dir / artifact).exists():
            raise DataError(f"{artifact} not found in {out_dir}; run the {stage!r} stage first")
    arrays = _load_split_arrays(out_dir)
    scheme = active_scheme(config)
    counts = era_token_counts_from_samples(
        arrays.tokens["train"], arrays.labels["train"].tolist(), scheme.labels
    )
    samples = {s.sample_id: s for s in _load_samples(out_dir)}
    if sample_id not in samples:
        raise DataError(f"sample {sample_id!r} not found in {ART_SAMPLES}")
    totals = word_freq_by_era(samples[sample_id].tokens, counts)
    result = {"sample_id": sample_id, "word_frequency_by_era": totals}
    (out_dir / f"wordfreq_{_safe_name(sample_id)}.json").write_text(
        json.dumps(result, ensure_ascii=False, sort_keys=True, indent=1), encoding="utf-8"
    )
    return result


def _safe_name(name: str) -> str:
    return "".join(c if c.isalnum() or c in "-_" else "_" for c in name)


def stage_report(out_dir: Path) -> str:
    """Human-readable summary of a completed run directory."""
    missing = [a for a in RUN_ARTIFACTS if not (out_dir / a).exists()]
    if missing:
        raise DataError(f"run directory {out_dir} is missing artifacts: {', '.join(missing)}")
    report = json.loads((out_dir / ART_REPORT).read_text("utf-8"))
    repro = json.loads((out_dir / ART_REPRO).read_text("utf-8"))
    lines = [
        f"run directory: {out_dir}",
        f"config hash:   {repro['config_hash']}",
        f"seed:          {repro['seed']}",
        f"test samples:  {report['n']}",
        f"accuracy:      {report['accuracy']:.4f} +/- {report['interval95']:.4f} (95%)",
        f"macro P/R/F1:  {report['macro_precision']:.4f} / "
        f"{report['macro_recall']:.4f} / {report['macro_f1']:.4f}",
        "per-class F1:",
    ]
    for row in report["per_class"]:
        lines.append(f"  {row['label']}: {row['f1']:.4f} (support {row['support']})")
    return "\n".join(lines)


def write_repro_record(config: ExperimentConfig, out_dir: Path) -> None:
    record = {
        "config": config.to_dict(),
        "config_hash": config.config_hash(),
        "seed": config.seed,
        "versions": {
            "eraclass": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
        },
    }
    (out_dir / ART_REPRO).write_text(
        json.dumps(record, sort_keys=True, indent=1), encoding="utf-8"
    )


def run(config: ExperimentConfig, out_root: str | Path | None = None) -> Path:
    """Execute every stage into ``<out_root>/run_<confighash12>``.

    The directory name carries the config hash, so each artifact is
    traceable to the exact configuration that produced it.  On failure
    a FAILED marker with the error text is left beside any partial
    artifacts and the exception propagates to the CLI.
    """
    root = Path(out_root) if out_root is not None else Path(config.output_dir)
    out_dir = root / f"run_{config.config_hash()[:12]}"
    out_dir.mkdir(parents=True, exist_ok=True)
    failed_marker = out_dir / "FAILED"
    if failed_marker.exists():
        failed_marker.unlink()
    try:
        write_repro_record(config, out_dir)
        stage_ingest(config, out_dir)
        stage_prep(config, out_dir)
        stage_split(config, out_dir)
        stage_train(config, out_dir)
        stage_eval(config, out_dir)
    except Exception as exc:
        failed_marker.write_text(f"{type(exc).__name__}: {exc}\n", encoding="utf-8")
        raise
    return out_dir
