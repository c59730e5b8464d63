"""Trainable subword tokenizer: merge-based vocabulary induction plus
greedy longest-match encoding.

Fully deterministic and hand-verifiable: the most frequent adjacent
symbol pair is merged repeatedly, ties broken by the lexicographically
smaller merged string, until the size budget is hit or no pair occurs
at least twice.
"""

from __future__ import annotations

import hashlib
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

PAD, UNK, CLS, SEP = "[PAD]", "[UNK]", "[CLS]", "[SEP]"
SPECIALS = (PAD, UNK, CLS, SEP)
PAD_ID, UNK_ID, CLS_ID, SEP_ID = 0, 1, 2, 3
CONTINUATION = "##"


@dataclass
class Vocab:
    tokens: list[str]
    ids: dict[str, int] = field(init=False)
    continuation_prefix = CONTINUATION

    def __post_init__(self):
        if tuple(self.tokens[:4]) != SPECIALS:
            raise ValueError(f"ids 0-3 must be {SPECIALS}")
        self.ids = {tok: i for i, tok in enumerate(self.tokens)}
        if len(self.ids) != len(self.tokens):
            raise ValueError("duplicate token in vocabulary")

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self.ids


def _word_symbols(word: str) -> list[str]:
    return [word[0]] + [CONTINUATION + ch for ch in word[1:]]


def _merge_symbol(left: str, right: str) -> str:
    return left + right[len(CONTINUATION):] if right.startswith(CONTINUATION) else left + right


def train_vocab(corpus: list[str], target_size: int) -> Vocab:
    """Induce a vocabulary from normalized text.

    Base alphabet: every single character in its word-initial or
    continuation form, as seen. Merges then grow the vocabulary up to
    target_size. Pure function of (corpus, target_size).
    """
    word_freq: Counter[str] = Counter()
    for text in corpus:
        word_freq.update(text.split())
    if not word_freq:
        raise ValueError("empty corpus")

    symbolized: dict[str, list[str]] = {w: _word_symbols(w) for w in word_freq}
    alphabet = sorted({sym for syms in symbolized.values() for sym in syms})
    if target_size < len(alphabet) + len(SPECIALS):
        raise ValueError(
            f"target_size {target_size} < alphabet {len(alphabet)} + {len(SPECIALS)} specials"
        )

    tokens = list(SPECIALS) + alphabet
    while len(tokens) < target_size:
        pair_freq: Counter[tuple[str, str]] = Counter()
        for word, syms in symbolized.items():
            freq = word_freq[word]
            for a, b in zip(syms, syms[1:]):
                pair_freq[(a, b)] += freq
        if not pair_freq:
            break
        best_count = max(pair_freq.values())
        if best_count < 2:
            break
        best = min(
            (pair for pair, c in pair_freq.items() if c == best_count),
            key=lambda pair: _merge_symbol(*pair),
        )
        merged = _merge_symbol(*best)
        tokens.append(merged)
        for word, syms in symbolized.items():
            out: list[str] = []
            i = 0
            while i < len(syms):
                if i + 1 < len(syms) and (syms[i], syms[i + 1]) == best:
                    out.append(merged)
                    i += 2
                else:
                    out.append(syms[i])
                    i += 1
            symbolized[word] = out
    return Vocab(tokens)


def _encode_word(word: str, vocab: Vocab) -> list[int]:
    pieces: list[int] = []
    i = 0
    while i < len(word):
        prefix = CONTINUATION if i > 0 else ""
        match = None
        for j in range(len(word), i, -1):
            candidate = prefix + word[i:j]
            if candidate in vocab:
                match = (candidate, j)
                break
        if match is None:
            return [UNK_ID]
        pieces.append(vocab.ids[match[0]])
        i = match[1]
    return pieces


def encode(text: str, vocab: Vocab) -> list[int]:
    """Greedy longest-match-first encoding of normalized text.

    A word containing any unmatchable character collapses to a single UNK.
    """
    ids: list[int] = []
    for word in text.split():
        ids.extend(_encode_word(word, vocab))
    return ids


def decode(ids: list[int], vocab: Vocab) -> str:
    """Inverse of encode for fully-covered text; specials are dropped."""
    words: list[str] = []
    for i in ids:
        if not 0 <= i < len(vocab):
            raise ValueError(f"token id {i} out of range 0..{len(vocab) - 1}")
        if i < len(SPECIALS):
            continue
        tok = vocab.tokens[i]
        if tok.startswith(CONTINUATION) and words:
            words[-1] += tok[len(CONTINUATION):]
        else:
            words.append(tok)
    return " ".join(words)


def save_vocab(vocab: Vocab, path: str | Path, settings: dict | None = None) -> None:
    """One token per line; header comment lines carry trainer settings.

    Token ids are line numbers counted from the first non-comment line.
    """
    lines = []
    for key, value in (settings or {}).items():
        lines.append(f"# {key}: {value}")
    lines.extend(vocab.tokens)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_vocab(path: str | Path) -> Vocab:
    raw = Path(path).read_text("utf-8").splitlines()
    start = 0
    while start < len(raw) and raw[start] != PAD:
        if not raw[start].startswith("#"):
            raise ValueError(f"unexpected header line: {raw[start]!r}")
        start += 1
    tokens = [line for line in raw[start:] if line]
    return Vocab(tokens)


def read_vocab_settings(path: str | Path) -> dict[str, str]:
    """Trainer settings from the header comment block."""
    settings: dict[str, str] = {}
    for line in Path(path).read_text("utf-8").splitlines():
        if line == PAD:
            break
        if line.startswith("# ") and ":" in line:
            key, _, value = line[2:].partition(":")
            settings[key.strip()] = value.strip()
    return settings


def corpus_hash(texts: list[str]) -> str:
    h = hashlib.sha256()
    for text in texts:
        h.update(text.encode("utf-8"))
        h.update(b"\x00")
    return h.hexdigest()
