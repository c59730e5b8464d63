"""Evaluation and analysis engine.

Confusion matrices, per-class and aggregate metrics, percentile
bootstrap confidence intervals, Cohen's kappa, the Information-Type x
Harm-Level cross-tabulation, and error-breakdown ranking. Everything is
a pure function of its inputs plus a declared seed; values are never
rounded internally, only at presentation time.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import CleanCorpus, HarmLabel, InfoLabel

N_CLASSES = 3


@dataclass(frozen=True)
class ConfusionMatrix:
    """3x3 counts; rows = true class, columns = predicted class."""

    counts: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if len(self.counts) != N_CLASSES or any(len(r) != N_CLASSES for r in self.counts):
            raise ValueError("confusion matrix must be 3x3")
        if any(c < 0 for row in self.counts for c in row):
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return sum(sum(row) for row in self.counts)

    def as_array(self) -> np.ndarray:
        return np.array(self.counts, dtype=np.int64)

    def to_pairs(self) -> list[tuple[int, int]]:
        """Canonical expansion: each cell yields that many (true, pred) pairs,
        in row-major order."""
        pairs: list[tuple[int, int]] = []
        for t in range(N_CLASSES):
            for p in range(N_CLASSES):
                pairs.extend([(t, p)] * self.counts[t][p])
        return pairs


def confusion(pairs: list[tuple[int, int]]) -> ConfusionMatrix:
    if not pairs:
        raise ValueError("cannot build a confusion matrix from no pairs")
    counts = np.zeros((N_CLASSES, N_CLASSES), dtype=np.int64)
    for t, p in pairs:
        if not (0 <= int(t) < N_CLASSES and 0 <= int(p) < N_CLASSES):
            raise ValueError(f"class code out of range in pair ({t}, {p})")
        counts[int(t)][int(p)] += 1
    return ConfusionMatrix(tuple(tuple(int(c) for c in row) for row in counts))


@dataclass(frozen=True)
class ClassMetrics:
    precision: tuple[float, float, float]
    recall: tuple[float, float, float]
    f1: tuple[float, float, float]
    support: tuple[int, int, int]
    accuracy: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    weighted_precision: float
    weighted_recall: float
    weighted_f1: float
    zero_division_flags: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "per_class": [
                {
                    "class": InfoLabel(i).display,
                    "precision": self.precision[i],
                    "recall": self.recall[i],
                    "f1": self.f1[i],
                    "support": self.support[i],
                }
                for i in range(N_CLASSES)
            ],
            "accuracy": self.accuracy,
            "macro": {
                "precision": self.macro_precision,
                "recall": self.macro_recall,
                "f1": self.macro_f1,
            },
            "weighted": {
                "precision": self.weighted_precision,
                "recall": self.weighted_recall,
                "f1": self.weighted_f1,
            },
            "zero_division_flags": list(self.zero_division_flags),
        }


def _macro_f1_from_counts(counts: np.ndarray) -> float:
    # fast path shared by the bootstrap loop; zero denominators yield 0
    diag = np.diag(counts).astype(np.float64)
    col = counts.sum(0).astype(np.float64)
    row = counts.sum(1).astype(np.float64)
    denom = 2 * diag + (col - diag) + (row - diag)
    f1 = np.divide(2 * diag, denom, out=np.zeros(N_CLASSES), where=denom > 0)
    return float(f1.mean())


def class_metrics(cm: ConfusionMatrix) -> ClassMetrics:
    """Per-class precision/recall/F1 plus macro and support-weighted
    aggregates. Empty denominators produce 0 and are flagged."""
    counts = cm.as_array()
    total = counts.sum()
    if total == 0:
        raise ValueError("empty confusion matrix")
    diag = np.diag(counts).astype(np.float64)
    col = counts.sum(0).astype(np.float64)
    row = counts.sum(1).astype(np.float64)

    flags: list[str] = []
    precision = np.zeros(N_CLASSES)
    recall = np.zeros(N_CLASSES)
    for i in range(N_CLASSES):
        if col[i] > 0:
            precision[i] = diag[i] / col[i]
        else:
            flags.append(f"precision[{InfoLabel(i).display}]: no predicted instances")
        if row[i] > 0:
            recall[i] = diag[i] / row[i]
        else:
            flags.append(f"recall[{InfoLabel(i).display}]: no true instances")
    pr_sum = precision + recall
    f1 = np.divide(2 * precision * recall, pr_sum, out=np.zeros(N_CLASSES), where=pr_sum > 0)

    weights = row / total
    return ClassMetrics(
        precision=tuple(precision),
        recall=tuple(recall),
        f1=tuple(f1),
        support=tuple(int(r) for r in row),
        accuracy=float(diag.sum() / total),
        macro_precision=float(precision.mean()),
        macro_recall=float(recall.mean()),
        macro_f1=float(f1.mean()),
        weighted_precision=float((weights * precision).sum()),
        weighted_recall=float((weights * recall).sum()),
        weighted_f1=float((weights * f1).sum()),
        zero_division_flags=tuple(flags),
    )


@dataclass(frozen=True)
class BootstrapCI:
    metric: str
    point: float
    lower: float
    upper: float
    iterations: int
    alpha: float
    seed: int

    def to_dict(self) -> dict:
        return {
            "metric": self.metric,
            "point": self.point,
            "lower": self.lower,
            "upper": self.upper,
            "iterations": self.iterations,
            "alpha": self.alpha,
            "seed": self.seed,
        }


def _metric_value(counts: np.ndarray, metric: str) -> float:
    if metric == "macro_f1":
        return _macro_f1_from_counts(counts)
    if metric == "accuracy":
        return float(np.trace(counts) / counts.sum())
    raise ValueError(f"unsupported metric {metric!r}")


def bootstrap_samples(
    pairs: list[tuple[int, int]], metric: str, iterations: int, seed: int
) -> np.ndarray:
    """Metric values over `iterations` with-replacement resamples, all
    drawn from one seeded generator stream."""
    if not pairs:
        raise ValueError("cannot bootstrap an empty prediction vector")
    cells = np.array([t * N_CLASSES + p for t, p in pairs], dtype=np.int64)
    n = len(cells)
    rng = np.random.default_rng(seed)
    values = np.empty(iterations)
    for i in range(iterations):
        idx = rng.integers(0, n, size=n)
        counts = np.bincount(cells[idx], minlength=N_CLASSES * N_CLASSES).reshape(
            N_CLASSES, N_CLASSES
        )
        values[i] = _metric_value(counts, metric)
    return values


def bootstrap_ci(
    pairs: list[tuple[int, int]],
    metric: str = "macro_f1",
    iterations: int = 5000,
    alpha: float = 0.05,
    seed: int = 0,
) -> BootstrapCI:
    """Percentile bootstrap: empirical alpha/2 and 1-alpha/2 quantiles of
    the metric over resampled prediction vectors (linear interpolation
    between order statistics)."""
    values = bootstrap_samples(pairs, metric, iterations, seed)
    lower, upper = np.percentile(values, [100 * alpha / 2, 100 * (1 - alpha / 2)])
    cells = np.bincount(
        [t * N_CLASSES + p for t, p in pairs], minlength=N_CLASSES * N_CLASSES
    ).reshape(N_CLASSES, N_CLASSES)
    return BootstrapCI(
        metric=metric,
        point=_metric_value(cells, metric),
        lower=float(lower),
        upper=float(upper),
        iterations=iterations,
        alpha=alpha,
        seed=seed,
    )


def cohens_kappa(a: list, b: list) -> float:
    """Chance-corrected agreement between two label sequences."""
    if len(a) != len(b):
        raise ValueError(f"length mismatch: {len(a)} vs {len(b)}")
    if not a:
        raise ValueError("empty label lists")
    n = len(a)
    labels = sorted(set(a) | set(b))
    index = {lab: i for i, lab in enumerate(labels)}
    table = np.zeros((len(labels), len(labels)))
    for x, y in zip(a, b):
        table[index[x]][index[y]] += 1
    p_o = float(np.trace(table) / n)
    p_e = float((table.sum(1) * table.sum(0)).sum() / (n * n))
    if p_e == 1.0:
        return 1.0
    return (p_o - p_e) / (1.0 - p_e)


@dataclass(frozen=True)
class CrossTab:
    """Information Type x Harm Level counts with row-normalized views."""

    counts: tuple[tuple[int, ...], ...]  # rows: info type, cols: harm level
    row_pct: tuple[tuple[float, ...], ...]
    high_pct: tuple[float, float, float]
    geq_med_pct: tuple[float, float, float]
    total_counts: tuple[int, int, int]
    total_high_pct: float
    total_geq_med_pct: float

    def to_dict(self) -> dict:
        return {
            "rows": [
                {
                    "info_type": InfoLabel(i).display,
                    "counts": list(self.counts[i]),
                    "row_pct": list(self.row_pct[i]),
                    "high_pct": self.high_pct[i],
                    "geq_med_pct": self.geq_med_pct[i],
                }
                for i in range(N_CLASSES)
            ],
            "total": {
                "counts": list(self.total_counts),
                "high_pct": self.total_high_pct,
                "geq_med_pct": self.total_geq_med_pct,
            },
        }


def crosstab_from_counts(counts: np.ndarray) -> CrossTab:
    counts = np.asarray(counts, dtype=np.int64)
    row_totals = counts.sum(1)
    row_pct = np.zeros(counts.shape)
    high = np.zeros(N_CLASSES)
    geq_med = np.zeros(N_CLASSES)
    for i in range(N_CLASSES):
        if row_totals[i] > 0:
            row_pct[i] = 100.0 * counts[i] / row_totals[i]
            high[i] = 100.0 * counts[i][int(HarmLabel.HIGH)] / row_totals[i]
            geq_med[i] = (
                100.0
                * (counts[i][int(HarmLabel.MEDIUM)] + counts[i][int(HarmLabel.HIGH)])
                / row_totals[i]
            )
    grand = counts.sum()
    col_totals = counts.sum(0)
    return CrossTab(
        counts=tuple(tuple(int(c) for c in row) for row in counts),
        row_pct=tuple(tuple(float(v) for v in row) for row in row_pct),
        high_pct=tuple(float(v) for v in high),
        geq_med_pct=tuple(float(v) for v in geq_med),
        total_counts=tuple(int(c) for c in col_totals),
        total_high_pct=float(100.0 * col_totals[int(HarmLabel.HIGH)] / grand) if grand else 0.0,
        total_geq_med_pct=(
            float(100.0 * (col_totals[1] + col_totals[2]) / grand) if grand else 0.0
        ),
    )


def crosstab(corpus: CleanCorpus) -> CrossTab:
    """Dual-axis coupling table over a cleaned corpus."""
    if len(corpus) == 0:
        raise ValueError("empty corpus")
    counts = np.zeros((N_CLASSES, N_CLASSES), dtype=np.int64)
    for rec in corpus:
        counts[int(rec.info_type)][int(rec.harm_level)] += 1
    return crosstab_from_counts(counts)


def crosstab_from_pairs(pairs: list[tuple[int, int]]) -> CrossTab:
    """Cross-tab from explicit (info, harm) code pairs (e.g. predicted
    class vs annotated harm, for triage analysis)."""
    counts = np.zeros((N_CLASSES, N_CLASSES), dtype=np.int64)
    for info, harm in pairs:
        counts[int(info)][int(harm)] += 1
    return crosstab_from_counts(counts)


@dataclass(frozen=True)
class ErrorCell:
    true_class: int
    pred_class: int
    count: int
    pct_of_errors: float

    def to_dict(self) -> dict:
        return {
            "true": InfoLabel(self.true_class).display,
            "predicted": InfoLabel(self.pred_class).display,
            "count": self.count,
            "pct_of_errors": self.pct_of_errors,
        }


def error_breakdown(cm: ConfusionMatrix) -> tuple[list[ErrorCell], int]:
    """Off-diagonal cells ranked by count (desc), ties in row-major order."""
    cells = [
        (t, p, cm.counts[t][p])
        for t in range(N_CLASSES)
        for p in range(N_CLASSES)
        if t != p and cm.counts[t][p] > 0
    ]
    total = sum(c for _, _, c in cells)
    cells.sort(key=lambda cell: (-cell[2], cell[0], cell[1]))
    ranked = [
        ErrorCell(t, p, c, 100.0 * c / total if total else 0.0) for t, p, c in cells
    ]
    return ranked, total


@dataclass
class EvalReport:
    metrics: ClassMetrics
    confusion: ConfusionMatrix
    macro_f1_ci: BootstrapCI
    breakdown: list[ErrorCell]
    total_errors: int
    triage_crosstab: CrossTab | None = None

    def to_dict(self) -> dict:
        out = {
            "metrics": self.metrics.to_dict(),
            "confusion": [list(row) for row in self.confusion.counts],
            "macro_f1_ci": self.macro_f1_ci.to_dict(),
            "error_breakdown": {
                "cells": [cell.to_dict() for cell in self.breakdown],
                "total_errors": self.total_errors,
            },
        }
        if self.triage_crosstab is not None:
            out["triage_crosstab"] = self.triage_crosstab.to_dict()
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "EvalReport":
        cm = ConfusionMatrix(tuple(tuple(int(c) for c in row) for row in data["confusion"]))
        metrics = class_metrics(cm)
        ci = BootstrapCI(**data["macro_f1_ci"])
        breakdown, total = error_breakdown(cm)
        triage = None
        if "triage_crosstab" in data:
            counts = np.array([row["counts"] for row in data["triage_crosstab"]["rows"]])
            triage = crosstab_from_counts(counts)
        return cls(
            metrics=metrics,
            confusion=cm,
            macro_f1_ci=ci,
            breakdown=breakdown,
            total_errors=total,
            triage_crosstab=triage,
        )


def evaluate(
    predictions: list[int],
    labels: list[int],
    harm_labels: list[int] | None = None,
    iterations: int = 5000,
    alpha: float = 0.05,
    seed: int = 0,
) -> EvalReport:
    """Aggregate evaluation over aligned predictions and labels."""
    if len(predictions) != len(labels):
        raise ValueError(
            f"misaligned predictions ({len(predictions)}) and labels ({len(labels)})"
        )
    if harm_labels is not None and len(harm_labels) != len(labels):
        raise ValueError("misaligned harm labels")
    pairs = list(zip(labels, predictions))
    cm = confusion(pairs)
    breakdown, total_errors = error_breakdown(cm)
    triage = None
    if harm_labels is not None:
        triage = crosstab_from_pairs(list(zip(predictions, harm_labels)))
    return EvalReport(
        metrics=class_metrics(cm),
        confusion=cm,
        macro_f1_ci=bootstrap_ci(pairs, "macro_f1", iterations, alpha, seed),
        breakdown=breakdown,
        total_errors=total_errors,
        triage_crosstab=triage,
    )
