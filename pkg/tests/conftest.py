"""Shared fixtures: the reconstructed published confusion matrix and
small corpus builders."""

from __future__ import annotations

from datetime import date

import pytest

from mistriage.corpus import CleanCorpus, HarmLabel, InfoLabel, VideoRecord
from mistriage.stats import ConfusionMatrix

# Diagonal = support minus that row's published error cells:
#   supports 313/839/241; errors Mis->PT 95, Mis->True 8, PT->Mis 78,
#   PT->True 62, True->Mis 6, True->PT 77.
PUBLISHED_CONFUSION = ((210, 95, 8), (78, 699, 62), (6, 77, 158))

# Type x harm counts of the published coupling table.
PUBLISHED_CROSSTAB = ((919, 786, 377), (4329, 1136, 70), (1591, 16, 0))

# Corpus-level class counts (Mis / PT / True).
PUBLISHED_CLASS_COUNTS = (2082, 5535, 1607)


@pytest.fixture(scope="session")
def published_cm() -> ConfusionMatrix:
    return ConfusionMatrix(PUBLISHED_CONFUSION)


def make_record(
    i: int,
    info: InfoLabel = InfoLabel.TRUE,
    harm: HarmLabel = HarmLabel.LOW,
    title: str = "",
    description: str | None = None,
    url: str | None = None,
) -> VideoRecord:
    return VideoRecord(
        title=title or f"title {i}",
        url=url or f"https://example.test/v/{i}",
        channel=f"channel {i % 5}",
        publish_date=date(2020, 1, 1),
        description=description,
        info_type=info,
        harm_level=harm,
    )


def corpus_with_class_counts(counts: tuple[int, int, int]) -> CleanCorpus:
    records = []
    i = 0
    for label, n in zip(InfoLabel, counts):
        for _ in range(n):
            records.append(make_record(i, info=label))
            i += 1
    return CleanCorpus(records)


def corpus_with_crosstab(counts) -> CleanCorpus:
    records = []
    i = 0
    for info, row in zip(InfoLabel, counts):
        for harm, n in zip(HarmLabel, row):
            for _ in range(n):
                records.append(make_record(i, info=info, harm=harm))
                i += 1
    return CleanCorpus(records)
