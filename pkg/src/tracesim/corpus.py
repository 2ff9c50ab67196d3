"""Corpus ingestion: CSV reading, tweet tokenization, vocabulary, trace items.

The tokenizer implements a fixed, deterministic rule set:

* lowercase everything first;
* URLs become the sentinel token ``$URL$``, @-mentions become ``$MENTION$``;
* hashtags are kept as single tokens including the leading ``#``;
* punctuation and non-emoji symbols act as separators and are dropped;
* emoji (Unicode category So) pass through as single-codepoint tokens.
"""

from __future__ import annotations

import csv
import enum
import logging
import re
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Optional, Sequence

logger = logging.getLogger(__name__)

URL_TOKEN = "$URL$"
MENTION_TOKEN = "$MENTION$"
SENTINEL_TOKENS = frozenset({URL_TOKEN, MENTION_TOKEN})

_URL_RE = re.compile(r"https?://\S+|www\.\S+")
_MENTION_RE = re.compile(r"@\w+")
_CHUNK_RE = re.compile(r"#\w+|\w+|[^\w\s]")

DEFAULT_MIN_COUNT = 3


class ConfigurationError(Exception):
    """Bad input file, column map, or option values; maps to CLI exit code 2."""


class RoleLabel(enum.IntEnum):
    """The three retained troll categories, in fixed tie-break order."""

    LEFT_TROLL = 0
    RIGHT_TROLL = 1
    NEWS_FEED = 2

    def display(self) -> str:
        return _LABEL_TO_STR[self]


_STR_TO_LABEL = {
    "LeftTroll": RoleLabel.LEFT_TROLL,
    "RightTroll": RoleLabel.RIGHT_TROLL,
    "NewsFeed": RoleLabel.NEWS_FEED,
}
_LABEL_TO_STR = {v: k for k, v in _STR_TO_LABEL.items()}


def parse_label(category: str) -> Optional[RoleLabel]:
    """Map an account-category cell to a RoleLabel, or None if out of scope."""
    return _STR_TO_LABEL.get(category.strip())


def tokenize(raw_text: str) -> list[str]:
    """Split raw tweet text into normalized tokens (see module docstring)."""
    text = raw_text.lower()
    text = _URL_RE.sub(f" {URL_TOKEN} ", text)
    text = _MENTION_RE.sub(f" {MENTION_TOKEN} ", text)
    tokens: list[str] = []
    for chunk in text.split():
        if chunk in SENTINEL_TOKENS:
            tokens.append(chunk)
            continue
        for piece in _CHUNK_RE.findall(chunk):
            if piece.startswith("#") and len(piece) > 1:
                tokens.append(piece)
            elif piece[0].isalnum() or piece[0] == "_":
                tokens.append(piece)
            elif unicodedata.category(piece[0]) == "So":
                tokens.append(piece)
            # anything else is punctuation: dropped
    return tokens


@dataclass(frozen=True, slots=True)
class TraceItem:
    """One timestamped, tokenized tweet; the atom of all computation."""

    item_id: int
    account_id: str
    timestamp: int  # seconds since Unix epoch
    tokens: tuple[int, ...]  # vocabulary indices, original order
    label: Optional[RoleLabel]

    @property
    def is_empty(self) -> bool:
        return not self.tokens


@dataclass(frozen=True, slots=True)
class RawRecord:
    """One ingested CSV row that survived category and date filtering."""

    account_id: str
    text: str
    timestamp: int
    label: RoleLabel
    tokens: tuple[str, ...]


@dataclass(frozen=True)
class ColumnMap:
    """Logical-to-physical column names for the input CSV."""

    author: str = "author"
    content: str = "content"
    publish_date: str = "publish_date"
    account_category: str = "account_category"

    @classmethod
    def from_spec(cls, spec: str) -> "ColumnMap":
        """Parse ``logical=physical`` comma-separated overrides."""
        kwargs = {}
        if spec:
            for part in spec.split(","):
                if "=" not in part:
                    raise ConfigurationError(f"bad column mapping {part!r}, expected logical=physical")
                logical, physical = part.split("=", 1)
                logical = logical.strip()
                if logical not in cls.__dataclass_fields__:
                    raise ConfigurationError(f"unknown logical column {logical!r}")
                kwargs[logical] = physical.strip()
        return cls(**kwargs)


_DATE_FORMATS = ("%m/%d/%Y %H:%M", "%m/%d/%Y %H:%M:%S")


def parse_timestamp(date_text: str) -> int:
    """Parse a month/day/year hour:minute date as UTC epoch seconds."""
    for fmt in _DATE_FORMATS:
        try:
            dt = datetime.strptime(date_text.strip(), fmt)
        except ValueError:
            continue
        return int(dt.replace(tzinfo=timezone.utc).timestamp())
    raise ValueError(f"unparseable date {date_text!r}")


@dataclass
class IngestStats:
    rows_total: int = 0
    retained: int = 0
    dropped_category: int = 0
    dropped_bad_date: int = 0
    dropped_malformed: int = 0

    def as_dict(self) -> dict:
        return {
            "rows_total": self.rows_total,
            "retained": self.retained,
            "dropped_category": self.dropped_category,
            "dropped_bad_date": self.dropped_bad_date,
            "dropped_malformed": self.dropped_malformed,
        }


def ingest_csv(path: str | Path, columns: ColumnMap | None = None) -> tuple[list[RawRecord], IngestStats]:
    """Read the troll-tweet CSV, keeping rows whose category maps to a RoleLabel.

    Raises ConfigurationError for a missing file, empty file, or unresolvable
    column; malformed rows and bad dates are skipped and counted.
    """
    columns = columns or ColumnMap()
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"input file not found: {path}")
    stats = IngestStats()
    records: list[RawRecord] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ConfigurationError(f"empty input file: {path}")
        required = {
            "author": columns.author,
            "content": columns.content,
            "publish_date": columns.publish_date,
            "account_category": columns.account_category,
        }
        for logical, physical in required.items():
            if physical not in reader.fieldnames:
                raise ConfigurationError(
                    f"required column {physical!r} (for {logical}) not in header {reader.fieldnames}")
        for row in reader:
            stats.rows_total += 1
            author = row.get(columns.author)
            content = row.get(columns.content)
            date_text = row.get(columns.publish_date)
            category = row.get(columns.account_category)
            if not author or content is None or not date_text or category is None:
                stats.dropped_malformed += 1
                continue
            label = parse_label(category)
            if label is None:
                stats.dropped_category += 1
                continue
            try:
                timestamp = parse_timestamp(date_text)
            except ValueError:
                stats.dropped_bad_date += 1
                continue
            records.append(RawRecord(
                account_id=author,
                text=content,
                timestamp=timestamp,
                label=label,
                tokens=tuple(tokenize(content)),
            ))
            stats.retained += 1
    if stats.dropped_bad_date:
        logger.warning("dropped %d rows with unparseable dates", stats.dropped_bad_date)
    logger.info("ingested %d rows, retained %d", stats.rows_total, stats.retained)
    return records, stats


class Vocabulary:
    """Dense token <-> index map over tokens with corpus frequency >= min_count."""

    def __init__(self, tokens: Sequence[str], frequencies: Sequence[int], min_count: int):
        self.itos: list[str] = list(tokens)
        self.stoi: dict[str, int] = {t: i for i, t in enumerate(self.itos)}
        self.frequencies: list[int] = list(frequencies)
        self.min_count = min_count
        if len(self.stoi) != len(self.itos):
            raise ValueError("duplicate tokens in vocabulary")

    def __len__(self) -> int:
        return len(self.itos)

    def __contains__(self, token: str) -> bool:
        return token in self.stoi

    def index(self, token: str) -> Optional[int]:
        return self.stoi.get(token)

    def token(self, index: int) -> str:
        return self.itos[index]

    def frequency(self, token: str) -> int:
        i = self.stoi.get(token)
        return 0 if i is None else self.frequencies[i]

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("index\ttoken\tfrequency\n")
            for i, tok in enumerate(self.itos):
                fh.write(f"{i}\t{tok}\t{self.frequencies[i]}\n")

    @classmethod
    def load(cls, path: str | Path, min_count: int) -> "Vocabulary":
        tokens, freqs = [], []
        with open(path, encoding="utf-8") as fh:
            next(fh)  # header
            for line in fh:
                idx, tok, freq = line.rstrip("\n").split("\t")
                assert int(idx) == len(tokens), "vocabulary file out of order"
                tokens.append(tok)
                freqs.append(int(freq))
        return cls(tokens, freqs, min_count)


def build_vocabulary(records: Iterable[RawRecord], min_count: int = DEFAULT_MIN_COUNT) -> Vocabulary:
    """Count tokens over all records and keep those with frequency >= min_count.

    Built over the whole corpus (train+validation+test alike); retained tokens
    get dense indices ordered by descending frequency, then lexicographically.
    """
    if min_count < 1:
        raise ValueError(f"min_count must be >= 1, got {min_count}")
    counts: Counter[str] = Counter()
    total = 0
    for rec in records:
        total += 1
        counts.update(rec.tokens)
    if total == 0:
        raise ValueError("cannot build a vocabulary from an empty corpus")
    kept = sorted((t for t, c in counts.items() if c >= min_count),
                  key=lambda t: (-counts[t], t))
    return Vocabulary(kept, [counts[t] for t in kept], min_count)


@dataclass
class MaterializeStats:
    empty_items: int = 0
    removed_tokens: Counter = field(default_factory=Counter)


def materialize(records: Sequence[RawRecord], vocab: Vocabulary) -> tuple[list[TraceItem], MaterializeStats]:
    """Turn records into TraceItems, dropping out-of-vocabulary tokens.

    Survivor order is preserved; items left with no tokens are retained (and
    counted) so corpus statistics stay complete.
    """
    stats = MaterializeStats()
    items: list[TraceItem] = []
    for item_id, rec in enumerate(records):
        indices = []
        for tok in rec.tokens:
            idx = vocab.index(tok)
            if idx is None:
                stats.removed_tokens[tok] += 1
            else:
                indices.append(idx)
        if not indices:
            stats.empty_items += 1
        items.append(TraceItem(
            item_id=item_id,
            account_id=rec.account_id,
            timestamp=rec.timestamp,
            tokens=tuple(indices),
            label=rec.label,
        ))
    return items, stats


def write_audit(items: Iterable[TraceItem], vocab: Vocabulary, path: str | Path) -> None:
    """Dump items as TSV (item_id, account_id, timestamp, label, tokens)."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("item_id\taccount_id\ttimestamp\tlabel\ttokens\n")
        for it in items:
            label = it.label.display() if it.label is not None else ""
            words = " ".join(vocab.token(i) for i in it.tokens)
            fh.write(f"{it.item_id}\t{it.account_id}\t{it.timestamp}\t{label}\t{words}\n")


def read_audit(path: str | Path, vocab: Vocabulary) -> list[TraceItem]:
    """Load an audit dump back into TraceItems (inverse of write_audit)."""
    items: list[TraceItem] = []
    with open(path, encoding="utf-8") as fh:
        next(fh)  # header
        for line in fh:
            item_id, account_id, timestamp, label, words = line.rstrip("\n").split("\t")
            tokens = []
            for w in words.split(" ") if words else []:
                idx = vocab.index(w)
                if idx is None:
                    raise ValueError(f"audit token {w!r} missing from vocabulary")
                tokens.append(idx)
            items.append(TraceItem(
                item_id=int(item_id),
                account_id=account_id,
                timestamp=int(timestamp),
                tokens=tuple(tokens),
                label=_STR_TO_LABEL[label] if label else None,
            ))
    return items
