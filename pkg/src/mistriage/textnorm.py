"""Deterministic Unicode normalization for Dari/Persian text.

Applied to every title/description before tokenization. The character
mapping ships as a data file so new variants can be added without code
changes; its hash is recorded in downstream reports.
"""

from __future__ import annotations

import hashlib
import unicodedata
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

ZWNJ = "‌"  # zero-width non-joiner: morphologically meaningful, kept

# \t \n \r \x0b \x0c are category Cc but act as whitespace here
_WHITESPACE_CONTROLS = frozenset("\t\n\r\x0b\x0c")


@dataclass(frozen=True)
class NormalizationTable:
    """Character rewrite rules: a mapping plus a strip set."""

    char_map: dict[str, str]
    strip_set: frozenset[str]
    digit_policy: str = "to-ascii"
    version_hash: str = ""

    def __post_init__(self):
        for src, dst in self.char_map.items():
            if any(ch in self.char_map or ch in self.strip_set for ch in dst):
                raise ValueError(f"mapping for {src!r} is not idempotent")


def parse_table(text: str) -> NormalizationTable:
    """Parse `FROM<TAB>TO` hex code-point rules; empty TO means strip."""
    char_map: dict[str, str] = {}
    strip: set[str] = set()
    for line in text.splitlines():
        line = line.rstrip("\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        src_hex, _, dst_hex = line.partition("\t")
        src = chr(int(src_hex.strip(), 16))
        if src in char_map or src in strip:
            raise ValueError(f"duplicate rule for U+{ord(src):04X}")
        dst = "".join(chr(int(cp, 16)) for cp in dst_hex.split())
        if dst:
            char_map[src] = dst
        else:
            strip.add(src)
    digest = hashlib.sha256(text.encode("utf-8")).hexdigest()
    return NormalizationTable(char_map, frozenset(strip), version_hash=digest)


def load_table(path: str | Path | None = None) -> NormalizationTable:
    """Load a table file, defaulting to the packaged one."""
    if path is None:
        text = resources.files("mistriage").joinpath("data/charmap.tsv").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    return parse_table(text)


_DEFAULT_TABLE: NormalizationTable | None = None


def default_table() -> NormalizationTable:
    global _DEFAULT_TABLE
    if _DEFAULT_TABLE is None:
        _DEFAULT_TABLE = load_table()
    return _DEFAULT_TABLE


def normalize_text(s: str, table: NormalizationTable | None = None) -> str:
    """Canonical-compose, rewrite characters, strip controls, collapse whitespace.

    ZWNJ (U+200C) is preserved: deleting it conflates distinct
    Dari/Persian compounds. Idempotent by construction.
    """
    if table is None:
        table = default_table()
    s = unicodedata.normalize("NFC", s)
    out: list[str] = []
    for ch in s:
        ch = table.char_map.get(ch, ch)
        if len(ch) == 1:
            if ch in table.strip_set:
                continue
            if ch == ZWNJ:
                out.append(ch)
                continue
            if ch in _WHITESPACE_CONTROLS:
                out.append(" ")
                continue
            if unicodedata.category(ch).startswith("C"):
                continue
        out.append(ch)
    return " ".join("".join(out).split())
