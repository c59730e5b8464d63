import json
from pathlib import Path

import pytest

from conftest import PUBLISHED_CLASS_COUNTS, corpus_with_class_counts
from mistriage.cli import CliError, config_hash, load_config, main
from mistriage.corpus import write_corpus_csv
from mistriage.synthetic import contradiction_corpus


def write_config(path: Path, **overrides) -> Path:
    cfg = {
        "seed": 3,
        "paths": {"corpus": str(path / "clean.csv"), "out_dir": str(path / "out")},
        "tokenizer": {"target_size": 50},
        "model": {"layers": 1, "heads": 2, "hidden": 16, "ff_dim": 32, "max_len": 24,
                  "dropout": 0.1},
        "train": {"batch_size": 16, "max_epochs": 2, "patience": 2},
        "bootstrap": {"iterations": 200},
    }
    for key, value in overrides.items():
        if isinstance(value, dict):
            cfg.setdefault(key, {}).update(value)
        else:
            cfg[key] = value
    p = path / "config.json"
    p.write_text(json.dumps(cfg), "utf-8")
    return p


@pytest.fixture
def workdir(tmp_path):
    corpus = contradiction_corpus(120, seed=8)
    write_corpus_csv(corpus.records, tmp_path / "raw.csv")
    return tmp_path


def run_pipeline(workdir, cfg_path):
    assert main(["ingest", str(workdir / "raw.csv"), str(workdir / "clean.csv"),
                 "--quiet"]) == 0
    for verb in ("split", "tokenizer-train", "train", "eval"):
        assert main([verb, "--config", str(cfg_path), "--quiet"]) == 0


class TestConfig:
    def test_unknown_key_rejected(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text(json.dumps({"sed": 1}), "utf-8")
        with pytest.raises(CliError, match="unknown config key: sed"):
            load_config(str(p), None, None)

    def test_unknown_nested_key_rejected(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text(json.dumps({"train": {"lr": 0.1}}), "utf-8")
        with pytest.raises(CliError, match="train.lr"):
            load_config(str(p), None, None)

    def test_defaults_applied(self):
        cfg = load_config(None, None, None)
        assert cfg["train"]["weight_decay"] == 0.01
        assert cfg["split"] == {"train": 0.70, "val": 0.15, "test": 0.15}

    def test_seed_and_out_overrides(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text(json.dumps({"seed": 1}), "utf-8")
        cfg = load_config(str(p), 99, str(tmp_path / "elsewhere"))
        assert cfg["seed"] == 99
        assert cfg["paths"]["out_dir"].endswith("elsewhere")

    def test_hash_covers_every_field(self):
        a = load_config(None, 1, None)
        b = load_config(None, 2, None)
        assert config_hash(a) != config_hash(b)


class TestIngest:
    def test_duplicate_counted(self, tmp_path):
        corpus = contradiction_corpus(10, seed=1)
        records = corpus.records + [corpus.records[0]]
        write_corpus_csv(records, tmp_path / "raw.csv")
        out = tmp_path / "clean.csv"
        assert main(["ingest", str(tmp_path / "raw.csv"), str(out), "--quiet"]) == 0
        stats = json.loads((tmp_path / "clean.csv.stats.json").read_text())
        assert stats["clean_stats"]["duplicates"] == 1

    def test_published_distribution_reported(self, tmp_path):
        corpus = corpus_with_class_counts(PUBLISHED_CLASS_COUNTS)
        write_corpus_csv(corpus.records, tmp_path / "raw.csv")
        assert main(["ingest", str(tmp_path / "raw.csv"), str(tmp_path / "clean.csv"),
                     "--quiet"]) == 0
        stats = json.loads((tmp_path / "clean.csv.stats.json").read_text())
        assert stats["class_pct"] == {"Misinformation": 22.6, "Partly True": 60.0,
                                      "True": 17.4}

    def test_empty_file_nonzero_exit(self, tmp_path, capsys):
        raw = tmp_path / "raw.csv"
        raw.write_text("title,url,channel,publish_date,description,info_type,harm_level\n")
        assert main(["ingest", str(raw), str(tmp_path / "clean.csv")]) != 0

    def test_malformed_rows_listed_and_nonzero(self, tmp_path, capsys):
        raw = tmp_path / "raw.csv"
        raw.write_text(
            "title,url,channel,publish_date,description,info_type,harm_level\n"
            "ok,https://a,c,2020-01-01,,true,low\n"
            ",https://b,c,2020-01-01,,true,low\n"
        )
        rc = main(["ingest", str(raw), str(tmp_path / "clean.csv"), "--quiet"])
        assert rc == 2
        assert "missing title" in capsys.readouterr().err

    def test_missing_input(self, tmp_path):
        assert main(["ingest", str(tmp_path / "nope.csv"), str(tmp_path / "c.csv")]) == 1


class TestSplit:
    def test_published_test_counts_for_mis_and_true(self, tmp_path):
        corpus = corpus_with_class_counts(PUBLISHED_CLASS_COUNTS)
        write_corpus_csv(corpus.records, tmp_path / "clean.csv")
        cfg = write_config(tmp_path)
        assert main(["split", "--config", str(cfg), "--quiet"]) == 0
        artifact = json.loads((tmp_path / "out" / "splits.json").read_text())
        test_counts = artifact["class_counts"]["test"]
        assert abs(test_counts[0] - 313) <= 1
        assert abs(test_counts[2] - 241) <= 1
        total = [sum(artifact["class_counts"][k]) for k in ("train", "val", "test")]
        assert sum(total) == sum(PUBLISHED_CLASS_COUNTS)

    def test_deterministic_artifact(self, workdir):
        cfg = write_config(workdir)
        assert main(["ingest", str(workdir / "raw.csv"), str(workdir / "clean.csv"),
                     "--quiet"]) == 0
        assert main(["split", "--config", str(cfg), "--quiet"]) == 0
        first = (workdir / "out" / "splits.json").read_bytes()
        assert main(["split", "--config", str(cfg), "--quiet"]) == 0
        assert (workdir / "out" / "splits.json").read_bytes() == first


class TestPipeline:
    def test_full_run_produces_artifacts(self, workdir):
        cfg = write_config(workdir)
        run_pipeline(workdir, cfg)
        out = workdir / "out"
        for name in ("splits.json", "vocab.txt", "checkpoint.ckpt", "history.jsonl",
                     "eval_report.json"):
            assert (out / name).exists(), name
        report = json.loads((out / "eval_report.json").read_text())
        assert report["schema_version"] == 1
        assert set(report["inputs"]) == {"checkpoint", "vocab", "splits"}
        assert report["config_hash"] == config_hash(
            load_config(str(cfg), None, None)
        )

    def test_history_is_line_delimited_with_summary(self, workdir):
        cfg = write_config(workdir)
        run_pipeline(workdir, cfg)
        lines = (workdir / "out" / "history.jsonl").read_text().splitlines()
        epochs = [json.loads(l) for l in lines[:-1]]
        assert all("val_macro_f1" in e for e in epochs)
        assert "summary" in json.loads(lines[-1])

    def test_eval_rejects_mismatched_lineage(self, workdir, capsys):
        cfg = write_config(workdir)
        run_pipeline(workdir, cfg)
        # regenerate the splits under a different seed: hashes now disagree
        assert main(["split", "--config", str(cfg), "--seed", "99", "--quiet"]) == 0
        rc = main(["eval", "--config", str(cfg), "--quiet"])
        assert rc != 0
        assert "lineage" in capsys.readouterr().err

    def test_train_rejects_stale_vocabulary(self, workdir, capsys):
        cfg = write_config(workdir)
        assert main(["ingest", str(workdir / "raw.csv"), str(workdir / "clean.csv"),
                     "--quiet"]) == 0
        for verb in ("split", "tokenizer-train"):
            assert main([verb, "--config", str(cfg), "--quiet"]) == 0
        assert main(["split", "--config", str(cfg), "--seed", "42", "--quiet"]) == 0
        rc = main(["train", "--config", str(cfg), "--quiet"])
        assert rc != 0
        assert "lineage" in capsys.readouterr().err

    def test_eval_report_and_figures_reproduce_byte_identically(self, workdir):
        cfg = write_config(workdir)
        run_pipeline(workdir, cfg)
        out = workdir / "out"
        report = (out / "eval_report.json").read_bytes()
        figures = {
            p.name: p.read_bytes() for p in (out / "figures").iterdir()
        }
        assert main(["eval", "--config", str(cfg), "--quiet"]) == 0
        assert (out / "eval_report.json").read_bytes() == report
        for p in (out / "figures").iterdir():
            assert figures[p.name] == p.read_bytes()

    def test_report_emits_tables(self, workdir):
        cfg = write_config(workdir)
        run_pipeline(workdir, cfg)
        assert main(["report", "--config", str(cfg), "--quiet"]) == 0
        tables = workdir / "out" / "tables"
        per_class = (tables / "per_class.tsv").read_text()
        assert per_class.startswith("class\tprecision\trecall\tf1\tsupport")
        assert "Macro avg." in per_class
        assert (tables / "error_breakdown.tsv").exists()
        assert (tables / "overall.tsv").exists()


class TestAblate:
    def test_identical_arms_give_zero_deltas(self, workdir):
        cfg = write_config(workdir, ablate={"arms": ["pair", "pair"]})
        assert main(["ingest", str(workdir / "raw.csv"), str(workdir / "clean.csv"),
                     "--quiet"]) == 0
        for verb in ("split", "tokenizer-train"):
            assert main([verb, "--config", str(cfg), "--quiet"]) == 0
        assert main(["ablate", "--config", str(cfg), "--quiet"]) == 0
        artifact = json.loads((workdir / "out" / "ablation.json").read_text())
        assert all(v == 0.0 for v in artifact["delta_first_vs_second"].values())

    def test_provenance_recorded_per_arm(self, workdir):
        cfg = write_config(workdir)
        assert main(["ingest", str(workdir / "raw.csv"), str(workdir / "clean.csv"),
                     "--quiet"]) == 0
        for verb in ("split", "tokenizer-train"):
            assert main([verb, "--config", str(cfg), "--quiet"]) == 0
        assert main(["ablate", "--config", str(cfg), "--quiet"]) == 0
        artifact = json.loads((workdir / "out" / "ablation.json").read_text())
        arms = artifact["arms"]
        assert [a["arm"] for a in arms] == ["pair", "single"]
        assert all("train_seed" in a and "config_hash" in a for a in arms)
        assert set(artifact["delta_first_vs_second"]) == {
            "accuracy", "macro_f1", "misinformation_recall", "misinformation_f1"
        }
        assert (workdir / "out" / "figures" / "ablation_comparison.svg").exists()


class TestAnalyze:
    def test_coupling_artifact_and_figures(self, workdir):
        cfg = write_config(workdir)
        assert main(["ingest", str(workdir / "raw.csv"), str(workdir / "clean.csv"),
                     "--quiet"]) == 0
        assert main(["analyze", "--config", str(cfg), "--quiet"]) == 0
        out = workdir / "out"
        coupling = json.loads((out / "coupling.json").read_text())
        assert "crosstab" in coupling
        names = {p.name for p in (out / "figures").iterdir()}
        assert {"crosstab_counts.svg", "crosstab_row_pct.svg",
                "info_type_distribution.svg"} <= names

    def test_figures_regenerate_byte_identically(self, workdir):
        cfg = write_config(workdir)
        assert main(["ingest", str(workdir / "raw.csv"), str(workdir / "clean.csv"),
                     "--quiet"]) == 0
        assert main(["analyze", "--config", str(cfg), "--quiet"]) == 0
        fig = workdir / "out" / "figures" / "crosstab_counts.svg"
        first = fig.read_bytes()
        assert main(["analyze", "--config", str(cfg), "--quiet"]) == 0
        assert fig.read_bytes() == first

    def test_single_record_corpus(self, tmp_path):
        corpus = contradiction_corpus(1, seed=2)
        write_corpus_csv(corpus.records, tmp_path / "clean.csv")
        cfg = write_config(tmp_path)
        assert main(["analyze", "--config", str(cfg), "--quiet"]) == 0
        svg = (tmp_path / "out" / "figures" / "crosstab_counts.svg").read_text()
        assert svg.startswith("<svg")

    def test_missing_harm_labels_rejected(self, tmp_path, capsys):
        corpus = contradiction_corpus(5, seed=3)
        rows = [rec.to_row() for rec in corpus.records]
        rows[2]["harm_level"] = "unrated"
        path = tmp_path / "clean.csv"
        import csv

        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
            writer.writeheader()
            writer.writerows(rows)
        cfg = write_config(tmp_path)
        assert main(["analyze", "--config", str(cfg), "--quiet"]) != 0
        assert "harm labels" in capsys.readouterr().err
