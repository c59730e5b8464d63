"""Data model, ingestion, cleaning and stratified splitting of the video corpus.

Input schema (CSV with header, or JSON-lines with the same field names):
    title,url,channel,publish_date,description,info_type,harm_level
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from datetime import date
from enum import IntEnum
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .textnorm import normalize_text

FIELDS = ("title", "url", "channel", "publish_date", "description", "info_type", "harm_level")

MIN_YEAR, MAX_YEAR = 2005, 2100


class InfoLabel(IntEnum):
    """Information-type axis. Integer codes fix the confusion-matrix order."""

    MISINFORMATION = 0
    PARTLY_TRUE = 1
    TRUE = 2

    @property
    def display(self) -> str:
        return _INFO_DISPLAY[self]


class HarmLabel(IntEnum):
    LOW = 0
    MEDIUM = 1
    HIGH = 2

    @property
    def display(self) -> str:
        return _HARM_DISPLAY[self]


_INFO_DISPLAY = {
    InfoLabel.MISINFORMATION: "Misinformation",
    InfoLabel.PARTLY_TRUE: "Partly True",
    InfoLabel.TRUE: "True",
}
_HARM_DISPLAY = {HarmLabel.LOW: "Low", HarmLabel.MEDIUM: "Medium", HarmLabel.HIGH: "High"}

# Canonical synonym tables: keys are lower-cased with punctuation and
# whitespace squeezed out (see _label_key).
INFO_SYNONYMS = {
    "misinformation": InfoLabel.MISINFORMATION,
    "misinfo": InfoLabel.MISINFORMATION,
    "false": InfoLabel.MISINFORMATION,
    "fake": InfoLabel.MISINFORMATION,
    "0": InfoLabel.MISINFORMATION,
    "partlytrue": InfoLabel.PARTLY_TRUE,
    "partlyfalse": InfoLabel.PARTLY_TRUE,
    "partiallytrue": InfoLabel.PARTLY_TRUE,
    "partial": InfoLabel.PARTLY_TRUE,
    "mixed": InfoLabel.PARTLY_TRUE,
    "halftrue": InfoLabel.PARTLY_TRUE,
    "1": InfoLabel.PARTLY_TRUE,
    "true": InfoLabel.TRUE,
    "accurate": InfoLabel.TRUE,
    "factual": InfoLabel.TRUE,
    "2": InfoLabel.TRUE,
}
HARM_SYNONYMS = {
    "low": HarmLabel.LOW,
    "lowharm": HarmLabel.LOW,
    "minor": HarmLabel.LOW,
    "0": HarmLabel.LOW,
    "medium": HarmLabel.MEDIUM,
    "med": HarmLabel.MEDIUM,
    "moderate": HarmLabel.MEDIUM,
    "1": HarmLabel.MEDIUM,
    "high": HarmLabel.HIGH,
    "highharm": HarmLabel.HIGH,
    "severe": HarmLabel.HIGH,
    "2": HarmLabel.HIGH,
}


class UnknownLabelError(ValueError):
    def __init__(self, raw: str, axis: str):
        super().__init__(f"unknown {axis} label: {raw!r}")
        self.raw = raw
        self.axis = axis


class EmptyCorpusError(ValueError):
    pass


class InsufficientClassError(ValueError):
    pass


def _label_key(raw: str) -> str:
    return "".join(ch for ch in raw.lower() if ch.isalnum())


def normalize_label(raw: str, axis: str) -> InfoLabel | HarmLabel:
    """Map a raw label variant to its canonical enum.

    Matching is case-insensitive and ignores punctuation/whitespace,
    so "Partly-True", "partly true" and "PARTLYTRUE" all canonicalize.
    Raises UnknownLabelError when no table entry matches.
    """
    if axis == "info":
        table: dict = INFO_SYNONYMS
    elif axis == "harm":
        table = HARM_SYNONYMS
    else:
        raise ValueError(f"axis must be 'info' or 'harm', got {axis!r}")
    key = _label_key(raw)
    if key not in table:
        raise UnknownLabelError(raw, axis)
    return table[key]


@dataclass
class VideoRecord:
    """One crawled video's metadata plus dual-axis labels.

    Labels are None until successfully canonicalized; a cleaned corpus
    holds only records with both labels present.
    """

    title: str
    url: str
    channel: str
    publish_date: date
    description: str | None
    info_type: InfoLabel | None
    harm_level: HarmLabel | None

    def to_row(self) -> dict[str, str]:
        return {
            "title": self.title,
            "url": self.url,
            "channel": self.channel,
            "publish_date": self.publish_date.isoformat(),
            "description": self.description or "",
            "info_type": self.info_type.display if self.info_type is not None else "",
            "harm_level": self.harm_level.display if self.harm_level is not None else "",
        }


@dataclass(frozen=True)
class RowError:
    row: int
    reason: str


@dataclass
class CleanStats:
    input_count: int
    retained: int
    duplicates: int
    unknown_info_label: int
    unknown_harm_label: int

    @property
    def removed(self) -> int:
        return self.duplicates + self.unknown_info_label + self.unknown_harm_label

    def to_dict(self) -> dict:
        return {
            "input_count": self.input_count,
            "retained": self.retained,
            "removed": self.removed,
            "duplicates": self.duplicates,
            "unknown_info_label": self.unknown_info_label,
            "unknown_harm_label": self.unknown_harm_label,
        }


@dataclass
class CleanCorpus:
    records: list[VideoRecord]

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[VideoRecord]:
        return iter(self.records)

    def class_counts(self) -> dict[InfoLabel, int]:
        counts = {label: 0 for label in InfoLabel}
        for rec in self.records:
            counts[rec.info_type] += 1
        return counts


@dataclass(frozen=True)
class SplitSpec:
    ratios: tuple[float, float, float] = (0.70, 0.15, 0.15)
    seed: int = 0

    def __post_init__(self):
        if any(r < 0 for r in self.ratios):
            raise ValueError("split ratios must be non-negative")
        if abs(sum(self.ratios) - 1.0) > 1e-9:
            raise ValueError(f"split ratios must sum to 1, got {sum(self.ratios)}")


def parse_records(rows: Iterable[dict]) -> tuple[list[VideoRecord], list[RowError]]:
    """Turn raw row mappings into VideoRecords, collecting per-row errors.

    Malformed rows (missing title/url, bad or out-of-range date) are
    reported, never silently dropped. Unrecognized labels are kept as
    None on the record so clean_corpus can count them.
    """
    records: list[VideoRecord] = []
    errors: list[RowError] = []
    for idx, row in enumerate(rows):
        missing = [f for f in FIELDS if f not in row]
        if missing:
            errors.append(RowError(idx, f"missing fields: {', '.join(missing)}"))
            continue
        title = normalize_text(row["title"] or "")
        if not title:
            errors.append(RowError(idx, "missing title"))
            continue
        url = (row["url"] or "").strip()
        if not url:
            errors.append(RowError(idx, "missing url"))
            continue
        raw_date = (row["publish_date"] or "").strip()
        try:
            pub = date.fromisoformat(raw_date)
        except ValueError:
            errors.append(RowError(idx, f"bad publish_date: {raw_date!r}"))
            continue
        if not MIN_YEAR <= pub.year <= MAX_YEAR:
            errors.append(RowError(idx, f"publish_date year out of range: {pub.year}"))
            continue
        desc = normalize_text(row["description"] or "") or None
        try:
            info = normalize_label(row["info_type"] or "", "info")
        except UnknownLabelError:
            info = None
        try:
            harm = normalize_label(row["harm_level"] or "", "harm")
        except UnknownLabelError:
            harm = None
        records.append(
            VideoRecord(
                title=title,
                url=url,
                channel=normalize_text(row["channel"] or ""),
                publish_date=pub,
                description=desc,
                info_type=info,
                harm_level=harm,
            )
        )
    return records, errors


def clean_corpus(records: list[VideoRecord]) -> tuple[CleanCorpus, CleanStats]:
    """Deduplicate by URL (first wins) and keep only fully-labelled records.

    Removal reasons partition the input, so retained + removed equals
    the input count exactly.
    """
    seen: set[str] = set()
    kept: list[VideoRecord] = []
    duplicates = unknown_info = unknown_harm = 0
    for rec in records:
        if rec.url in seen:
            duplicates += 1
            continue
        seen.add(rec.url)
        if rec.info_type is None:
            unknown_info += 1
            continue
        if rec.harm_level is None:
            unknown_harm += 1
            continue
        kept.append(rec)
    stats = CleanStats(
        input_count=len(records),
        retained=len(kept),
        duplicates=duplicates,
        unknown_info_label=unknown_info,
        unknown_harm_label=unknown_harm,
    )
    if not kept:
        raise EmptyCorpusError("no records survived cleaning")
    return CleanCorpus(kept), stats


def largest_remainder_counts(n: int, ratios: tuple[float, ...]) -> list[int]:
    """Apportion n items across ratios; leftover seats go to the largest
    remainders, earlier position winning ties."""
    quotas = [n * r for r in ratios]
    counts = [math.floor(q) for q in quotas]
    leftover = n - sum(counts)
    order = sorted(range(len(ratios)), key=lambda i: (-(quotas[i] - counts[i]), i))
    for i in order[:leftover]:
        counts[i] += 1
    return counts


def stratified_split(
    corpus: CleanCorpus, spec: SplitSpec
) -> tuple[CleanCorpus, CleanCorpus, CleanCorpus]:
    """Per-class seeded shuffle + largest-remainder apportionment.

    The three splits are disjoint, exhaust the corpus, and per class
    deviate from the exact ratio by at most one record.
    """
    by_class: dict[InfoLabel, list[int]] = {label: [] for label in InfoLabel}
    for i, rec in enumerate(corpus.records):
        if rec.info_type is None:
            raise ValueError("stratified_split requires a cleaned corpus")
        by_class[rec.info_type].append(i)
    for label, members in by_class.items():
        if len(members) < 3:
            raise InsufficientClassError(
                f"class {label.display} has {len(members)} members, need >= 3"
            )
    rng = np.random.default_rng(spec.seed)
    parts: tuple[list[int], list[int], list[int]] = ([], [], [])
    for label in InfoLabel:
        members = np.array(by_class[label])
        rng.shuffle(members)
        counts = largest_remainder_counts(len(members), spec.ratios)
        start = 0
        for part, c in zip(parts, counts):
            part.extend(members[start : start + c].tolist())
            start += c
    return tuple(CleanCorpus([corpus.records[i] for i in sorted(part)]) for part in parts)


def read_rows(path: str | Path) -> Iterator[dict]:
    """Read corpus rows from CSV (with header) or JSON-lines."""
    path = Path(path)
    text = path.read_text("utf-8")
    first = text.lstrip()[:1]
    if first == "{":
        for line in text.splitlines():
            if line.strip():
                yield json.loads(line)
    else:
        reader = csv.DictReader(io.StringIO(text))
        if reader.fieldnames is None or tuple(reader.fieldnames) != FIELDS:
            raise ValueError(
                f"expected header {','.join(FIELDS)}, got {reader.fieldnames}"
            )
        yield from reader


def write_corpus_csv(records: Iterable[VideoRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=FIELDS)
        writer.writeheader()
        for rec in records:
            writer.writerow(rec.to_row())
