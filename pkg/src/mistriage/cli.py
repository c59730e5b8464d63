"""Command-line surface: reproducible experiment pipeline.

Verbs: ingest, split, tokenizer-train, train, eval, ablate, analyze,
report. One top-level seed fans out to every random decision (split,
init, shuffle, dropout, bootstrap) by labeled derivation; every output
artifact embeds the resolved config, its hash and the hashes of the
inputs it consumed, and eval refuses mismatched lineage.
"""

from __future__ import annotations

import argparse
import copy
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import figures, stats, textnorm
from .corpus import (
    CleanCorpus,
    EmptyCorpusError,
    HarmLabel,
    InfoLabel,
    SplitSpec,
    clean_corpus,
    parse_records,
    read_rows,
    stratified_split,
    write_corpus_csv,
)
from .model import ModelConfig, load_checkpoint, predict, save_checkpoint
from .tokenizer import (
    Vocab,
    corpus_hash,
    load_vocab,
    read_vocab_settings,
    save_vocab,
    train_vocab,
)
from .train import TrainConfig, derive_seed, encode_corpus, train

SCHEMA_VERSION = 1

DEFAULT_CONFIG: dict = {
    "seed": 0,
    "encoding": "pair",
    "paths": {
        "corpus": "",
        "splits": "",
        "vocab": "",
        "checkpoint": "",
        "out_dir": "out",
    },
    "split": {"train": 0.70, "val": 0.15, "test": 0.15},
    "tokenizer": {"target_size": 8000},
    "model": {
        "layers": 2,
        "heads": 4,
        "hidden": 64,
        "ff_dim": 256,
        "max_len": 256,
        "dropout": 0.1,
    },
    "train": {
        "base_lr": 3e-4,
        "warmup_frac": 0.10,
        "weight_decay": 0.01,
        "batch_size": 16,
        "max_epochs": 20,
        "patience": 3,
    },
    "bootstrap": {"iterations": 5000, "alpha": 0.05},
    "report": {"figures": True},
    "ablate": {"arms": ["pair", "single"]},
}

CLASS_NAMES = [label.display for label in InfoLabel]
HARM_NAMES = [label.display for label in HarmLabel]


class CliError(Exception):
    pass


class LineageError(CliError):
    pass


# -- config ------------------------------------------------------------------


def _merge_config(defaults: dict, overrides: dict, path: str = "") -> dict:
    merged = copy.deepcopy(defaults)
    for key, value in overrides.items():
        where = f"{path}.{key}" if path else key
        if key not in defaults:
            raise CliError(f"unknown config key: {where}")
        if isinstance(defaults[key], dict):
            if not isinstance(value, dict):
                raise CliError(f"config key {where} must be a section")
            merged[key] = _merge_config(defaults[key], value, where)
        else:
            merged[key] = value
    return merged


def load_config(path: str | None, seed: int | None, out_dir: str | None) -> dict:
    overrides: dict = {}
    if path is not None:
        try:
            overrides = json.loads(Path(path).read_text("utf-8"))
        except FileNotFoundError:
            raise CliError(f"config file not found: {path}")
        except json.JSONDecodeError as exc:
            raise CliError(f"config file {path} is not valid JSON: {exc}")
    config = _merge_config(DEFAULT_CONFIG, overrides)
    if seed is not None:
        config["seed"] = seed
    if out_dir is not None:
        config["paths"]["out_dir"] = out_dir
    out = config["paths"]["out_dir"]
    for name, default in (
        ("splits", "splits.json"),
        ("vocab", "vocab.txt"),
        ("checkpoint", "checkpoint.ckpt"),
    ):
        if not config["paths"][name]:
            config["paths"][name] = str(Path(out) / default)
    if config["encoding"] not in ("pair", "single"):
        raise CliError(f"encoding must be 'pair' or 'single', got {config['encoding']!r}")
    return config


def config_hash(config: dict) -> str:
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def file_hash(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _envelope(kind: str, config: dict, inputs: dict[str, str]) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": kind,
        "config": config,
        "config_hash": config_hash(config),
        "inputs": inputs,
        "normalization_table_hash": textnorm.default_table().version_hash,
    }


def write_json(data: dict, path: str | Path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(
        json.dumps(data, sort_keys=True, indent=2, ensure_ascii=False) + "\n", "utf-8"
    )


# -- shared loading ----------------------------------------------------------


def _load_clean_corpus(path: str) -> CleanCorpus:
    try:
        rows = list(read_rows(path))
    except FileNotFoundError:
        raise CliError(f"corpus file not found: {path}")
    except (ValueError, OSError) as exc:
        raise CliError(f"unreadable corpus {path}: {exc}")
    records, errors = parse_records(rows)
    if errors:
        raise CliError(f"corpus {path} has {len(errors)} malformed rows; run ingest first")
    corpus, _ = clean_corpus(records)
    return corpus


def _load_splits(path: str) -> tuple[CleanCorpus, CleanCorpus, CleanCorpus]:
    try:
        data = json.loads(Path(path).read_text("utf-8"))
    except FileNotFoundError:
        raise CliError(f"splits file not found: {path} (run `split` first)")
    parts = []
    for name in ("train", "val", "test"):
        records, errors = parse_records(data["splits"][name])
        if errors:
            raise CliError(f"splits file {path} has malformed {name} rows")
        parts.append(CleanCorpus(records))
    return tuple(parts)


def _split_texts(corpus: CleanCorpus) -> list[str]:
    texts: list[str] = []
    for rec in corpus:
        texts.append(rec.title)
        if rec.description:
            texts.append(rec.description)
    return texts


# -- commands ----------------------------------------------------------------


def cmd_ingest(args) -> int:
    try:
        rows = list(read_rows(args.input))
    except FileNotFoundError:
        print(f"error: input file not found: {args.input}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: unreadable input {args.input}: {exc}", file=sys.stderr)
        return 1
    records, errors = parse_records(rows)
    try:
        corpus, clean_stats = clean_corpus(records)
    except EmptyCorpusError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    out_path = Path(args.output)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    write_corpus_csv(corpus.records, out_path)

    n = len(corpus)
    class_counts = {lab.display: 0 for lab in InfoLabel}
    harm_counts = {lab.display: 0 for lab in HarmLabel}
    missing_desc = 0
    for rec in corpus:
        class_counts[rec.info_type.display] += 1
        harm_counts[rec.harm_level.display] += 1
        if rec.description is None:
            missing_desc += 1
    summary = {
        "schema_version": SCHEMA_VERSION,
        "kind": "clean_stats",
        "inputs": {"raw_corpus": file_hash(args.input)},
        "clean_stats": clean_stats.to_dict(),
        "row_errors": [{"row": e.row, "reason": e.reason} for e in errors],
        "class_counts": class_counts,
        "class_pct": {k: round(100.0 * v / n, 1) for k, v in class_counts.items()},
        "harm_counts": harm_counts,
        "harm_pct": {k: round(100.0 * v / n, 1) for k, v in harm_counts.items()},
        "missing_description": {"count": missing_desc, "pct": round(100.0 * missing_desc / n, 1)},
        "normalization_table_hash": textnorm.default_table().version_hash,
    }
    write_json(summary, str(out_path) + ".stats.json")

    if not args.quiet:
        print(f"ingested {clean_stats.input_count} rows -> {clean_stats.retained} records")
        print(f"  duplicates removed: {clean_stats.duplicates}")
        print(f"  unknown labels: info={clean_stats.unknown_info_label} "
              f"harm={clean_stats.unknown_harm_label}")
        dist = " / ".join(f"{summary['class_pct'][c]}" for c in CLASS_NAMES)
        print(f"  class distribution (%): {dist}")
    if errors:
        for err in errors:
            print(f"row {err.row}: {err.reason}", file=sys.stderr)
        print(f"error: {len(errors)} malformed rows", file=sys.stderr)
        return 2
    return 0


def cmd_split(args) -> int:
    config = load_config(args.config, args.seed, args.out)
    corpus = _load_clean_corpus(config["paths"]["corpus"])
    ratios = (config["split"]["train"], config["split"]["val"], config["split"]["test"])
    spec = SplitSpec(ratios=ratios, seed=derive_seed(config["seed"], "split"))
    train_part, val_part, test_part = stratified_split(corpus, spec)

    artifact = _envelope("splits", config, {"corpus": file_hash(config["paths"]["corpus"])})
    artifact["seed"] = config["seed"]
    artifact["split_seed"] = spec.seed
    artifact["splits"] = {
        "train": [rec.to_row() for rec in train_part],
        "val": [rec.to_row() for rec in val_part],
        "test": [rec.to_row() for rec in test_part],
    }
    artifact["class_counts"] = {
        name: [part.class_counts()[lab] for lab in InfoLabel]
        for name, part in (("train", train_part), ("val", val_part), ("test", test_part))
    }
    write_json(artifact, config["paths"]["splits"])
    if not args.quiet:
        for name in ("train", "val", "test"):
            counts = artifact["class_counts"][name]
            print(f"{name}: total {sum(counts)}  per-class {counts}")
    return 0


def cmd_tokenizer_train(args) -> int:
    config = load_config(args.config, args.seed, args.out)
    train_part, _, _ = _load_splits(config["paths"]["splits"])
    texts = _split_texts(train_part)
    vocab = train_vocab(texts, config["tokenizer"]["target_size"])
    settings = {
        "schema_version": SCHEMA_VERSION,
        "target_size": config["tokenizer"]["target_size"],
        "train_text_sha256": corpus_hash(texts),
        "splits_sha256": file_hash(config["paths"]["splits"]),
        "config_hash": config_hash(config),
    }
    Path(config["paths"]["vocab"]).parent.mkdir(parents=True, exist_ok=True)
    save_vocab(vocab, config["paths"]["vocab"], settings)
    if not args.quiet:
        print(f"vocabulary: {len(vocab)} tokens -> {config['paths']['vocab']}")
    return 0


def _model_config(config: dict, vocab: Vocab) -> ModelConfig:
    mc = config["model"]
    return ModelConfig(
        vocab_size=len(vocab),
        max_positions=mc["max_len"],
        layers=mc["layers"],
        heads=mc["heads"],
        hidden=mc["hidden"],
        ff_dim=mc["ff_dim"],
        dropout_rate=mc["dropout"],
    )


def _train_config(config: dict) -> TrainConfig:
    tc = config["train"]
    return TrainConfig(
        base_lr=tc["base_lr"],
        warmup_frac=tc["warmup_frac"],
        weight_decay=tc["weight_decay"],
        batch_size=tc["batch_size"],
        max_epochs=tc["max_epochs"],
        patience=tc["patience"],
        seed=derive_seed(config["seed"], "train"),
    )


def _run_training(config: dict, arm: str, checkpoint_path: str, history_path: str,
                  quiet: bool) -> None:
    splits_hash = file_hash(config["paths"]["splits"])
    declared = read_vocab_settings(config["paths"]["vocab"]).get("splits_sha256")
    if declared is not None and declared != splits_hash:
        raise LineageError(
            f"lineage mismatch: vocabulary declares splits {declared[:12]}..., "
            f"found {splits_hash[:12]}... at {config['paths']['splits']}"
        )
    splits = _load_splits(config["paths"]["splits"])
    vocab = load_vocab(config["paths"]["vocab"])
    model_cfg = _model_config(config, vocab)
    train_cfg = _train_config(config)
    params, history = train(splits, vocab, model_cfg, train_cfg, encoding=arm)
    inputs = {
        "vocab_sha256": file_hash(config["paths"]["vocab"]),
        "splits_sha256": splits_hash,
    }
    meta = {
        "seed": config["seed"],
        "train_seed": train_cfg.seed,
        "encoding": arm,
        "config_hash": config_hash(config),
        "best_epoch": history.best_epoch,
        **inputs,
    }
    Path(checkpoint_path).parent.mkdir(parents=True, exist_ok=True)
    save_checkpoint(checkpoint_path, params, model_cfg, meta)
    lines = [json.dumps(e.to_dict(), sort_keys=True) for e in history.epochs]
    summary = history.to_dict() | {
        "encoding": arm,
        "config_hash": config_hash(config),
        "inputs": inputs,
    }
    lines.append(json.dumps({"summary": summary}, sort_keys=True))
    Path(history_path).write_text("\n".join(lines) + "\n", "utf-8")
    if not quiet:
        best = history.epochs[history.best_epoch]
        print(f"[{arm}] best epoch {history.best_epoch}: "
              f"val macro F1 {best.val_macro_f1:.4f}, val acc {best.val_accuracy:.4f}")


def cmd_train(args) -> int:
    config = load_config(args.config, args.seed, args.out)
    out_dir = Path(config["paths"]["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    _run_training(
        config,
        config["encoding"],
        config["paths"]["checkpoint"],
        str(out_dir / "history.jsonl"),
        args.quiet,
    )
    return 0


def _evaluate_checkpoint(config: dict, checkpoint_path: str) -> tuple[dict, stats.EvalReport, str]:
    params, model_cfg, meta = load_checkpoint(checkpoint_path)
    for name, path in (("vocab", config["paths"]["vocab"]), ("splits", config["paths"]["splits"])):
        declared = meta.get(f"{name}_sha256")
        found = file_hash(path)
        if declared != found:
            raise LineageError(
                f"lineage mismatch: checkpoint declares {name} {declared[:12]}..., "
                f"found {found[:12]}... at {path}"
            )
    _, _, test_part = _load_splits(config["paths"]["splits"])
    vocab = load_vocab(config["paths"]["vocab"])
    arm = meta["encoding"]
    seqs = encode_corpus(test_part, vocab, model_cfg.max_positions, arm)
    preds: list[int] = []
    bs = config["train"]["batch_size"]
    for start in range(0, len(seqs), bs):
        preds.extend(cls for cls, _ in predict(seqs[start : start + bs], params, model_cfg))
    labels = [int(rec.info_type) for rec in test_part]
    harms = [int(rec.harm_level) for rec in test_part]
    report = stats.evaluate(
        preds,
        labels,
        harm_labels=harms,
        iterations=config["bootstrap"]["iterations"],
        alpha=config["bootstrap"]["alpha"],
        seed=derive_seed(config["seed"], "bootstrap"),
    )
    return meta, report, arm


def _eval_figures(report: stats.EvalReport, out_dir: Path) -> None:
    fig_dir = out_dir / "figures"
    fig_dir.mkdir(parents=True, exist_ok=True)
    figures.write_svg(
        figures.heatmap(
            "Confusion matrix (rows: true, columns: predicted)",
            report.confusion.as_array(),
            CLASS_NAMES,
            CLASS_NAMES,
        ),
        fig_dir / "confusion_matrix.svg",
    )
    figures.write_svg(
        figures.grouped_bar_chart(
            "Per-class precision / recall / F1",
            CLASS_NAMES,
            [
                ("Precision", list(report.metrics.precision)),
                ("Recall", list(report.metrics.recall)),
                ("F1", list(report.metrics.f1)),
            ],
        ),
        fig_dir / "per_class_metrics.svg",
    )


def cmd_eval(args) -> int:
    config = load_config(args.config, args.seed, args.out)
    meta, report, arm = _evaluate_checkpoint(config, config["paths"]["checkpoint"])
    out_dir = Path(config["paths"]["out_dir"])
    artifact = _envelope(
        "eval_report",
        config,
        {
            "checkpoint": file_hash(config["paths"]["checkpoint"]),
            "vocab": file_hash(config["paths"]["vocab"]),
            "splits": file_hash(config["paths"]["splits"]),
        },
    )
    artifact["seed"] = config["seed"]
    artifact["encoding"] = arm
    artifact["checkpoint_meta"] = meta
    artifact["report"] = report.to_dict()
    write_json(artifact, out_dir / "eval_report.json")
    if config["report"]["figures"]:
        _eval_figures(report, out_dir)
    if not args.quiet:
        m = report.metrics
        print(f"[{arm}] test accuracy {m.accuracy:.4f}, macro F1 {m.macro_f1:.4f}, "
              f"95% CI [{report.macro_f1_ci.lower:.4f}, {report.macro_f1_ci.upper:.4f}]")
    return 0


def cmd_ablate(args) -> int:
    config = load_config(args.config, args.seed, args.out)
    out_dir = Path(config["paths"]["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    arms = config["ablate"]["arms"]
    if len(arms) != 2:
        raise CliError("ablate.arms must list exactly two encoding arms")
    arm_results = []
    for slot, arm in enumerate(arms):
        tag = f"arm{slot}_{arm}"
        ckpt = str(out_dir / f"checkpoint_{tag}.ckpt")
        _run_training(config, arm, ckpt, str(out_dir / f"history_{tag}.jsonl"), args.quiet)
        meta, report, _ = _evaluate_checkpoint(config, ckpt)
        arm_results.append(
            {
                "arm": arm,
                "train_seed": meta["train_seed"],
                "config_hash": meta["config_hash"],
                "checkpoint_sha256": file_hash(ckpt),
                "metrics": report.metrics.to_dict(),
                "macro_f1_ci": report.macro_f1_ci.to_dict(),
            }
        )
    first, second = arm_results
    mis = int(InfoLabel.MISINFORMATION)
    deltas = {
        "accuracy": first["metrics"]["accuracy"] - second["metrics"]["accuracy"],
        "macro_f1": first["metrics"]["macro"]["f1"] - second["metrics"]["macro"]["f1"],
        "misinformation_recall": (
            first["metrics"]["per_class"][mis]["recall"]
            - second["metrics"]["per_class"][mis]["recall"]
        ),
        "misinformation_f1": (
            first["metrics"]["per_class"][mis]["f1"]
            - second["metrics"]["per_class"][mis]["f1"]
        ),
    }
    artifact = _envelope(
        "ablation",
        config,
        {
            "splits": file_hash(config["paths"]["splits"]),
            "vocab": file_hash(config["paths"]["vocab"]),
        },
    )
    artifact["seed"] = config["seed"]
    artifact["arms"] = arm_results
    artifact["delta_first_vs_second"] = deltas
    write_json(artifact, out_dir / "ablation.json")
    if config["report"]["figures"]:
        fig_dir = out_dir / "figures"
        fig_dir.mkdir(parents=True, exist_ok=True)

        def _four(metrics: dict) -> list[float]:
            return [
                metrics["accuracy"],
                metrics["macro"]["f1"],
                metrics["per_class"][mis]["recall"],
                metrics["per_class"][mis]["f1"],
            ]

        figures.write_svg(
            figures.grouped_bar_chart(
                "Encoding arms on the test set",
                ["Accuracy", "Macro F1", "Mis. recall", "Mis. F1"],
                [(a["arm"], _four(a["metrics"])) for a in arm_results],
            ),
            fig_dir / "ablation_comparison.svg",
        )
    if not args.quiet:
        print(f"delta ({first['arm']} vs {second['arm']}): "
              f"macro F1 {deltas['macro_f1']:+.4f}, "
              f"Mis recall {deltas['misinformation_recall']:+.4f}, "
              f"Mis F1 {deltas['misinformation_f1']:+.4f}")
    return 0


def cmd_analyze(args) -> int:
    config = load_config(args.config, args.seed, args.out)
    corpus_path = args.corpus or config["paths"]["corpus"]
    try:
        rows = list(read_rows(corpus_path))
    except FileNotFoundError:
        raise CliError(f"corpus file not found: {corpus_path}")
    except (ValueError, OSError) as exc:
        raise CliError(f"unreadable corpus {corpus_path}: {exc}")
    records, errors = parse_records(rows)
    if errors:
        raise CliError(f"corpus {corpus_path} has {len(errors)} malformed rows")
    missing_harm = sum(rec.harm_level is None for rec in records)
    if missing_harm:
        raise CliError(f"analyze requires harm labels on every record "
                       f"({missing_harm} missing)")
    corpus, _ = clean_corpus(records)
    table = stats.crosstab(corpus)
    out_dir = Path(config["paths"]["out_dir"])
    artifact = _envelope("coupling", config, {"corpus": file_hash(corpus_path)})
    artifact["crosstab"] = table.to_dict()
    write_json(artifact, out_dir / "coupling.json")

    fig_dir = out_dir / "figures"
    fig_dir.mkdir(parents=True, exist_ok=True)
    counts = np.array(table.counts)
    info_totals = counts.sum(1)
    harm_totals = counts.sum(0)
    n = counts.sum()
    figures.write_svg(
        figures.bar_chart(
            "Information Type distribution (%)",
            CLASS_NAMES,
            [100.0 * v / n for v in info_totals],
        ),
        fig_dir / "info_type_distribution.svg",
    )
    figures.write_svg(
        figures.bar_chart(
            "Harm Level distribution (%)",
            HARM_NAMES,
            [100.0 * v / n for v in harm_totals],
        ),
        fig_dir / "harm_level_distribution.svg",
    )
    figures.write_svg(
        figures.grouped_bar_chart(
            "Harm Level within each Information Type (counts)",
            CLASS_NAMES,
            [(HARM_NAMES[j], [float(counts[i][j]) for i in range(3)]) for j in range(3)],
            value_fmt="{:.0f}",
        ),
        fig_dir / "harm_within_type.svg",
    )
    figures.write_svg(
        figures.heatmap("Type x Harm (counts)", counts, CLASS_NAMES, HARM_NAMES),
        fig_dir / "crosstab_counts.svg",
    )
    figures.write_svg(
        figures.heatmap(
            "Type x Harm (row %)",
            np.array(table.row_pct),
            CLASS_NAMES,
            HARM_NAMES,
            value_fmt="{:.1f}",
        ),
        fig_dir / "crosstab_row_pct.svg",
    )
    if not args.quiet:
        for i, name in enumerate(CLASS_NAMES):
            print(f"{name}: counts {list(table.counts[i])}  "
                  f"High% {table.high_pct[i]:.1f}  >=Med% {table.geq_med_pct[i]:.1f}")
        print(f"Total: {list(table.total_counts)}  High% {table.total_high_pct:.1f}  "
              f">=Med% {table.total_geq_med_pct:.1f}")
    return 0


def _format_tables(report_data: dict) -> dict[str, str]:
    """Flat tabular exports mirroring the published table layouts."""
    rep = report_data["report"]
    per_class_lines = ["class\tprecision\trecall\tf1\tsupport"]
    for row in rep["metrics"]["per_class"]:
        per_class_lines.append(
            f"{row['class']}\t{row['precision']:.3f}\t{row['recall']:.3f}"
            f"\t{row['f1']:.3f}\t{row['support']}"
        )
    m = rep["metrics"]
    total_support = sum(r["support"] for r in m["per_class"])
    per_class_lines.append(
        f"Macro avg.\t{m['macro']['precision']:.3f}\t{m['macro']['recall']:.3f}"
        f"\t{m['macro']['f1']:.3f}\t{total_support}"
    )
    per_class_lines.append(
        f"Weighted avg.\t{m['weighted']['precision']:.3f}\t{m['weighted']['recall']:.3f}"
        f"\t{m['weighted']['f1']:.3f}\t{total_support}"
    )

    ci = rep["macro_f1_ci"]
    overall_lines = [
        "model\taccuracy\tmacro_f1\tci_95",
        f"{report_data.get('encoding', 'model')}\t{100 * m['accuracy']:.2f}"
        f"\t{100 * m['macro']['f1']:.2f}"
        f"\t[{100 * ci['lower']:.2f}, {100 * ci['upper']:.2f}]",
    ]

    breakdown_lines = ["true\tpredicted\tcount\tpct_errors"]
    for cell in rep["error_breakdown"]["cells"]:
        breakdown_lines.append(
            f"{cell['true']}\t{cell['predicted']}\t{cell['count']}\t{cell['pct_of_errors']:.1f}"
        )
    breakdown_lines.append(f"Total errors\t\t{rep['error_breakdown']['total_errors']}\t100.0")
    return {
        "per_class.tsv": "\n".join(per_class_lines) + "\n",
        "overall.tsv": "\n".join(overall_lines) + "\n",
        "error_breakdown.tsv": "\n".join(breakdown_lines) + "\n",
    }


def cmd_report(args) -> int:
    config = load_config(args.config, args.seed, args.out)
    out_dir = Path(config["paths"]["out_dir"])
    report_path = out_dir / "eval_report.json"
    try:
        report_data = json.loads(report_path.read_text("utf-8"))
    except FileNotFoundError:
        raise CliError(f"no eval report at {report_path} (run `eval` first)")
    tables_dir = out_dir / "tables"
    tables_dir.mkdir(parents=True, exist_ok=True)
    for name, text in _format_tables(report_data).items():
        (tables_dir / name).write_text(text, "utf-8")
    if config["report"]["figures"]:
        report = stats.EvalReport.from_dict(report_data["report"])
        _eval_figures(report, out_dir)
    if not args.quiet:
        print(f"tables -> {tables_dir}")
    return 0


# -- entry point ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="path to a JSON run configuration")
    common.add_argument("--seed", type=int, help="override the top-level seed")
    common.add_argument("--out", help="override the output directory")
    common.add_argument("--quiet", action="store_true", help="suppress progress output")

    parser = argparse.ArgumentParser(
        prog="mistriage",
        description="Misinformation classification pipeline: ingest, split, train, evaluate.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", parents=[common], help="parse, clean and re-emit a corpus")
    p.add_argument("input")
    p.add_argument("output")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("split", parents=[common], help="stratified train/val/test split")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("tokenizer-train", parents=[common],
                       help="induce a subword vocabulary from the training split")
    p.set_defaults(func=cmd_tokenizer_train)

    p = sub.add_parser("train", parents=[common], help="train the classifier")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", parents=[common], help="evaluate a checkpoint on the test split")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("ablate", parents=[common],
                       help="train and compare two encoding arms on identical data")
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("analyze", parents=[common],
                       help="type-by-harm coupling tables and figures")
    p.add_argument("corpus", nargs="?", help="cleaned corpus path (defaults to paths.corpus)")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("report", parents=[common],
                       help="tabular exports and figures from an eval report")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (EmptyCorpusError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
