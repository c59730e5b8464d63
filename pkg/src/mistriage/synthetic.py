"""Synthetic contradiction benchmark.

Each example pairs a title carrying a claim token with a description
that may deny it. The label depends on *where* tokens occur:

    PARTLY_TRUE     -- the description contains the denial token
    MISINFORMATION  -- the description contains both the denial token
                       and the intensity marker
    TRUE            -- otherwise

Denial/intensity tokens also appear in titles (and the intensity marker
in benign descriptions) as distractors, so a flat concatenation of the
two fields is genuinely ambiguous while the two-segment encoding is not.
All words are single characters, keeping the trained vocabulary at
exactly 50 entries (4 specials + 46 characters).
"""

from __future__ import annotations

from datetime import date, timedelta

import numpy as np

from .corpus import CleanCorpus, HarmLabel, InfoLabel, VideoRecord

CLAIM_WORD = "A"
DENY_WORD = "B"
INTENSITY_WORD = "C"
FILLER_WORDS = tuple("abcdefghijklmnopqrstuvwxyz") + tuple("DEFGHIJKLMNOPQRST")

VOCAB_TARGET = 50  # 4 specials + 3 markers + 43 fillers

_HARM_WEIGHTS = {
    InfoLabel.MISINFORMATION: (0.44, 0.38, 0.18),
    InfoLabel.PARTLY_TRUE: (0.78, 0.21, 0.01),
    InfoLabel.TRUE: (0.99, 0.01, 0.0),
}


def _insert(words: list[str], token: str, rng: np.random.Generator) -> None:
    words.insert(int(rng.integers(0, len(words) + 1)), token)


def label_for(description_words: list[str]) -> InfoLabel:
    """The labelling rule; also usable as an independent oracle."""
    if DENY_WORD in description_words:
        if INTENSITY_WORD in description_words:
            return InfoLabel.MISINFORMATION
        return InfoLabel.PARTLY_TRUE
    return InfoLabel.TRUE


def contradiction_corpus(n: int, seed: int) -> CleanCorpus:
    """Deterministic benchmark corpus of n labelled records."""
    rng = np.random.default_rng(seed)
    records: list[VideoRecord] = []
    for i in range(n):
        title = [CLAIM_WORD] + list(rng.choice(FILLER_WORDS, size=rng.integers(2, 7)))
        if rng.random() < 0.3:
            _insert(title, DENY_WORD, rng)
        if rng.random() < 0.3:
            _insert(title, INTENSITY_WORD, rng)

        desc = list(rng.choice(FILLER_WORDS, size=rng.integers(3, 9)))
        if rng.random() < 0.5:
            _insert(desc, DENY_WORD, rng)
            if rng.random() < 0.5:
                _insert(desc, INTENSITY_WORD, rng)
        elif rng.random() < 0.3:
            _insert(desc, INTENSITY_WORD, rng)

        info = label_for(desc)
        harm = HarmLabel(int(rng.choice(3, p=_HARM_WEIGHTS[info])))
        records.append(
            VideoRecord(
                title=" ".join(title),
                url=f"synthetic://contradiction/{seed}/{i:05d}",
                channel="bench",
                publish_date=date(2015, 1, 1) + timedelta(days=i % 3650),
                description=" ".join(desc),
                info_type=info,
                harm_level=harm,
            )
        )
    return CleanCorpus(records)
