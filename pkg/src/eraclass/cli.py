"""Command-line experiment runner.

    eraclass <subcommand> --config <path> [--out <dir>] [--seed <int>]

``run`` executes the full pipeline into a hash-named run directory.
The stage subcommands (ingest, prep, split, train, eval) each execute
one step against a shared working directory so intermediate artifacts
can be audited or regenerated; ``analyze`` computes the adjacent-era
merge and per-era word-frequency analyses from a finished run, and
``report`` prints a summary.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric
failure.  The output directory may also be set with the ERACLASS_OUT
environment variable (CLI flag wins).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .config import ExperimentConfig, load_config
from .errors import ConfigError, DataError, NumericError
from . import runner

ENV_OUT = "ERACLASS_OUT"


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eraclass",
        description="Classify Arabic literary texts into historical eras.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, help_text: str, needs_config: bool = True) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        if needs_config:
            p.add_argument("--config", required=True, help="experiment config (YAML)")
        p.add_argument("--out", help="output directory (overrides config and ERACLASS_OUT)")
        p.add_argument("--seed", type=int, help="override the config seed")
        return p

    add("run", "execute the full pipeline into a hash-named run directory")
    for stage, text in (
        ("ingest", "read the corpus into documents"),
        ("prep", "preprocess documents and extract samples"),
        ("split", "label, balance, and split the dataset"),
        ("train", "featurize and train the configured model"),
        ("eval", "evaluate the trained model on the test split"),
    ):
        add(stage, text)

    analyze = add("analyze", "post-hoc analyses on a finished run")
    analyze.add_argument("mode", choices=["merge", "wordfreq"])
    analyze.add_argument(
        "--groups",
        help="adjacent-era groups for merge, e.g. '0,1|2,3|4'",
    )
    analyze.add_argument("--sample", help="sample id for wordfreq")

    report = sub.add_parser("report", help="summarize a run directory")
    report.add_argument("--out", required=True, help="run directory to summarize")
    return parser


def _resolve_out(args, config: ExperimentConfig | None) -> Path:
    if args.out:
        return Path(args.out)
    env = os.environ.get(ENV_OUT)
    if env:
        return Path(env)
    if config is not None:
        return Path(config.output_dir) / "work"
    raise ConfigError("no output directory given (use --out or ERACLASS_OUT)")


def _load(args) -> ExperimentConfig:
    config = load_config(args.config)
    if args.seed is not None:
        config.seed = args.seed
    return config.validate()


def parse_groups(text: str) -> list[list[int]]:
    try:
        return [[int(v) for v in part.split(",")] for part in text.split("|")]
    except ValueError as exc:
        raise ConfigError(f"bad --groups value {text!r}: {exc}") from exc


def _dispatch(args) -> int:
    if args.command == "report":
        print(runner.stage_report(Path(args.out)))
        return 0

    config = _load(args)

    if args.command == "run":
        out_root = args.out or os.environ.get(ENV_OUT) or config.output_dir
        run_dir = runner.run(config, out_root)
        print(f"run complete: {run_dir}")
        print(runner.stage_report(run_dir))
        return 0

    out_dir = _resolve_out(args, config)
    out_dir.mkdir(parents=True, exist_ok=True)
    # keep artifacts traceable to their configuration in staged mode too
    runner.write_repro_record(config, out_dir)

    if args.command == "ingest":
        stats = runner.stage_ingest(config, out_dir)
        print(f"ingested {stats['documents']} documents ({stats['skipped']} records skipped)")
    elif args.command == "prep":
        stats = runner.stage_prep(config, out_dir)
        print(f"extracted {stats['samples']} samples ({stats['dropped_empty']} empty dropped)")
    elif args.command == "split":
        stats = runner.stage_split(config, out_dir)
        print(
            f"split sizes: train {stats['train']}, val {stats['val']}, test {stats['test']}"
            f" (excluded {stats['excluded']})"
        )
    elif args.command == "train":
        stats = runner.stage_train(config, out_dir)
        print(json.dumps(stats, sort_keys=True))
    elif args.command == "eval":
        report = runner.stage_eval(config, out_dir)
        print(
            f"accuracy {report['accuracy']:.4f} +/- {report['interval95']:.4f}, "
            f"macro F1 {report['macro_f1']:.4f}"
        )
    elif args.command == "analyze":
        if args.mode == "merge":
            if not args.groups:
                raise ConfigError("analyze merge requires --groups")
            result = runner.analyze_merge(out_dir, parse_groups(args.groups))
            print(
                f"accuracy {result['original_accuracy']:.4f} -> "
                f"{result['merged_accuracy']:.4f} after merging into "
                f"{len(result['merged_labels'])} classes"
            )
        else:
            if not args.sample:
                raise ConfigError("analyze wordfreq requires --sample")
            result = runner.analyze_wordfreq(config, out_dir, args.sample)
            print(f"word frequency by era for sample {result['sample_id']}:")
            for era, total in result["word_frequency_by_era"].items():
                print(f"  {era}\t{total}")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        return _dispatch(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
