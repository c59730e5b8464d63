"""Model-ready sequence construction.

Two arms:
  encode_pair   -- [CLS] title [SEP] description [SEP], segment ids 0/1
  encode_single -- [CLS] title description [SEP], all segment ids 0
                   (ablation baseline: plain concatenation, no separator)
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .corpus import InfoLabel
from .textnorm import normalize_text
from .tokenizer import CLS_ID, PAD_ID, SEP_ID, Vocab, encode

MIN_MAX_LEN = 8
TITLE_FLOOR = 8  # pair truncation never trims the title below min(|T|, 8)


@dataclass
class TokenSequence:
    ids: list[int]
    type_ids: list[int]
    attention_mask: list[int]
    label: InfoLabel | None = None

    def __post_init__(self):
        if not len(self.ids) == len(self.type_ids) == len(self.attention_mask):
            raise ValueError("ids, type_ids and attention_mask must share one length")


def _tokenize_fields(
    title: str, description: str | None, vocab: Vocab, max_len: int
) -> tuple[list[int], list[int]]:
    if max_len < MIN_MAX_LEN:
        raise ValueError(f"max_len must be >= {MIN_MAX_LEN}, got {max_len}")
    title = normalize_text(title)
    if not title:
        raise ValueError("title is empty after normalization")
    desc = normalize_text(description) if description else ""
    return encode(title, vocab), encode(desc, vocab) if desc else []


def _pad(ids: list[int], type_ids: list[int], max_len: int, label) -> TokenSequence:
    n_pad = max_len - len(ids)
    return TokenSequence(
        ids=ids + [PAD_ID] * n_pad,
        type_ids=type_ids + [0] * n_pad,
        attention_mask=[1] * len(ids) + [0] * n_pad,
        label=label,
    )


def encode_pair(
    title: str,
    description: str | None,
    vocab: Vocab,
    max_len: int,
    label: InfoLabel | None = None,
) -> TokenSequence:
    """Two-segment layout with longest-first truncation.

    When over budget, tokens drop one at a time from the end of
    whichever segment is currently longer; the title loses ties (the
    description is trimmed), and keeps a floor of 8 tokens as long as
    the description has tokens left to give.
    """
    t, d = _tokenize_fields(title, description, vocab, max_len)
    overhead = 3 if d else 2
    budget = max_len - overhead
    while len(t) + len(d) > budget:
        if d and (len(d) >= len(t) or len(t) <= TITLE_FLOOR):
            d.pop()
            if not d:
                overhead = 2
                budget = max_len - overhead
        else:
            t.pop()
    if d:
        ids = [CLS_ID] + t + [SEP_ID] + d + [SEP_ID]
        type_ids = [0] * (len(t) + 2) + [1] * (len(d) + 1)
    else:
        ids = [CLS_ID] + t + [SEP_ID]
        type_ids = [0] * len(ids)
    return _pad(ids, type_ids, max_len, label)


def encode_single(
    title: str,
    description: str | None,
    vocab: Vocab,
    max_len: int,
    label: InfoLabel | None = None,
) -> TokenSequence:
    """Flat concatenation baseline: no separator between the fields,
    uniform segment ids, tail truncation."""
    t, d = _tokenize_fields(title, description, vocab, max_len)
    content = (t + d)[: max_len - 2]
    ids = [CLS_ID] + content + [SEP_ID]
    return _pad(ids, [0] * len(ids), max_len, label)


def dump_sequences(seqs: Iterable[TokenSequence], path: str | Path) -> None:
    """Line-delimited debug format for fixture tests."""
    lines = []
    for seq in seqs:
        lines.append(
            json.dumps(
                {
                    "ids": seq.ids,
                    "type_ids": seq.type_ids,
                    "attention_mask": seq.attention_mask,
                    "label": None if seq.label is None else int(seq.label),
                },
                sort_keys=True,
            )
        )
    Path(path).write_text("\n".join(lines) + "\n", "utf-8")


def load_sequences(path: str | Path) -> list[TokenSequence]:
    seqs = []
    for line in Path(path).read_text("utf-8").splitlines():
        if not line:
            continue
        data = json.loads(line)
        label = data["label"]
        seqs.append(
            TokenSequence(
                ids=data["ids"],
                type_ids=data["type_ids"],
                attention_mask=data["attention_mask"],
                label=None if label is None else InfoLabel(label),
            )
        )
    return seqs
