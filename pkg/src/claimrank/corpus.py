"""Labeled tweet datasets: parsing, persistence, statistics and stratified splits."""

import io
import os
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import Iterable, List, Tuple

import numpy as np

from .errors import ParseError, SplitError
from .text import strip_punctuation

ORIGINS = ("original", "augmented", "backtranslated")
CANONICAL_COLUMNS = ("topic_id", "tweet_id", "tweet_text", "check_worthiness")
REQUIRED_COLUMNS = CANONICAL_COLUMNS


@dataclass(frozen=True)
class Tweet:
    topic_id: str
    tweet_id: str
    text: str
    label: int
    origin: str = "original"

    def __post_init__(self):
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label!r}")
        if not self.text.strip():
            raise ValueError(f"tweet {self.tweet_id!r} has empty text")
        if self.origin not in ORIGINS:
            raise ValueError(f"unknown origin {self.origin!r}")


@dataclass(frozen=True)
class LabeledDataset:
    """Ordered collection of tweets; order is significant for ranking ties."""

    name: str
    tweets: Tuple[Tweet, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "tweets", tuple(self.tweets))
        seen = set()
        for t in self.tweets:
            if t.tweet_id in seen:
                raise ValueError(f"duplicate tweet_id {t.tweet_id!r}")
            seen.add(t.tweet_id)

    def __len__(self):
        return len(self.tweets)

    def __iter__(self):
        return iter(self.tweets)

    @property
    def texts(self) -> List[str]:
        return [t.text for t in self.tweets]

    @property
    def labels(self) -> np.ndarray:
        return np.array([t.label for t in self.tweets], dtype=np.int64)

    @property
    def ids(self) -> List[str]:
        return [t.tweet_id for t in self.tweets]

    def with_tweets(self, tweets: Iterable[Tweet], name=None) -> "LabeledDataset":
        return LabeledDataset(name=self.name if name is None else name, tweets=tuple(tweets))


@dataclass(frozen=True)
class DatasetStats:
    n_samples: int
    n_positive: int
    positive_rate: float
    unique_word_count: int


# --- escaping -------------------------------------------------------------

_ESCAPES = {"\\": "\\\\", "\t": "\\t", "\n": "\\n", "\r": "\\r"}
_UNESCAPES = {"\\": "\\", "t": "\t", "n": "\n", "r": "\r"}


def escape_field(text: str) -> str:
    return "".join(_ESCAPES.get(ch, ch) for ch in text)


def unescape_field(text: str, line_no: int) -> str:
    if "\\" not in text:
        return text
    out = []
    chars = iter(text)
    for ch in chars:
        if ch != "\\":
            out.append(ch)
            continue
        nxt = next(chars, None)
        if nxt not in _UNESCAPES:
            raise ParseError(line_no, f"invalid escape sequence \\{nxt or ''}")
        out.append(_UNESCAPES[nxt])
    return "".join(out)


# --- parsing --------------------------------------------------------------

def _parse_label(raw: str, line_no: int) -> int:
    if raw not in ("0", "1"):
        raise ParseError(line_no, f"non-binary label {raw!r}")
    return int(raw)


def parse_dataset(path, format: str = "canonical", name=None) -> LabeledDataset:
    """Read a tab-separated tweet file.

    ``canonical`` files carry the header ``topic_id, tweet_id, tweet_text,
    check_worthiness`` (plus an optional trailing ``origin`` column) and use
    backslash escapes for tab, newline, carriage return and backslash.
    ``checkthat`` files are the organizers' layout: columns located by header
    name, no escaping, extra columns ignored.

    Raises
    ------
    ParseError
        On a bad header, wrong column count, non-binary label, empty text,
        unknown origin or duplicate ``tweet_id``.
    """
    if format not in ("canonical", "checkthat"):
        raise ValueError(f"unknown dataset format {format!r}")
    if name is None:
        name = os.path.splitext(os.path.basename(str(path)))[0]
    with open(path, "r", encoding="utf-8", newline="") as fh:
        content = fh.read()
    return parse_dataset_text(content, format=format, name=name)


def parse_dataset_text(content: str, format: str = "canonical", name: str = "dataset") -> LabeledDataset:
    lines = content.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise ParseError(1, "missing header")
    header = lines[0].rstrip("\r").split("\t") if format == "checkthat" else lines[0].split("\t")

    if format == "canonical":
        if tuple(header) == CANONICAL_COLUMNS:
            has_origin = False
        elif tuple(header) == CANONICAL_COLUMNS + ("origin",):
            has_origin = True
        else:
            raise ParseError(1, "header must be " + "\\t".join(CANONICAL_COLUMNS))
        n_cols = len(header)
    else:
        missing = [c for c in REQUIRED_COLUMNS if c not in header]
        if missing:
            raise ParseError(1, "header lacks column(s) " + ", ".join(missing))
        col = {c: header.index(c) for c in REQUIRED_COLUMNS}
        has_origin = False
        n_cols = len(header)

    tweets = []
    seen = {}
    for offset, line in enumerate(lines[1:]):
        line_no = offset + 2
        if format == "checkthat":
            line = line.rstrip("\r")
        cells = line.split("\t")
        if len(cells) != n_cols:
            raise ParseError(line_no, f"column count: expected {n_cols}, got {len(cells)}")
        if format == "canonical":
            topic_id, tweet_id, raw_text, raw_label = cells[:4]
            text = unescape_field(raw_text, line_no)
            origin = cells[4] if has_origin else "original"
            if origin not in ORIGINS:
                raise ParseError(line_no, f"unknown origin {origin!r}")
        else:
            topic_id = cells[col["topic_id"]]
            tweet_id = cells[col["tweet_id"]]
            text = cells[col["tweet_text"]]
            raw_label = cells[col["check_worthiness"]]
            origin = "original"
        label = _parse_label(raw_label, line_no)
        if not text.strip():
            raise ParseError(line_no, "empty tweet text")
        if not tweet_id:
            raise ParseError(line_no, "empty tweet_id")
        if tweet_id in seen:
            raise ParseError(line_no, f"duplicate tweet_id {tweet_id!r} (first on line {seen[tweet_id]})")
        seen[tweet_id] = line_no
        tweets.append(Tweet(topic_id, tweet_id, text, label, origin))
    return LabeledDataset(name=name, tweets=tuple(tweets))


def format_dataset(ds: LabeledDataset) -> str:
    with_origin = any(t.origin != "original" for t in ds.tweets)
    header = CANONICAL_COLUMNS + (("origin",) if with_origin else ())
    buf = io.StringIO()
    buf.write("\t".join(header) + "\n")
    for t in ds.tweets:
        row = [t.topic_id, t.tweet_id, escape_field(t.text), str(t.label)]
        if with_origin:
            row.append(t.origin)
        buf.write("\t".join(row) + "\n")
    return buf.getvalue()


def write_dataset(ds: LabeledDataset, path) -> None:
    """Write ``ds`` as canonical TSV (LF endings, escaped text)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(format_dataset(ds))


# --- statistics -----------------------------------------------------------

def words_for_stats(text: str) -> List[str]:
    words = (strip_punctuation(w) for w in text.lower().split())
    return [w for w in words if w]


def stats(ds: LabeledDataset) -> DatasetStats:
    n = len(ds.tweets)
    n_pos = sum(t.label for t in ds.tweets)
    vocab = set()
    for t in ds.tweets:
        vocab.update(words_for_stats(t.text))
    return DatasetStats(
        n_samples=n,
        n_positive=n_pos,
        positive_rate=n_pos / n if n else 0.0,
        unique_word_count=len(vocab),
    )


# --- splitting ------------------------------------------------------------

def _round_half_up(x: Decimal) -> int:
    return int(x.quantize(Decimal(1), rounding=ROUND_HALF_UP))


def stratified_split(ds: LabeledDataset, train_fraction: float = 0.8, seed: int = 42):
    """Split per class into (train, holdout), keeping input order inside each side.

    Each class contributes ``round_half_up(train_fraction * class_size)``
    samples to train; which ones is decided by a shuffle seeded with ``seed``.
    """
    if not 0 < train_fraction < 1:
        raise ValueError("train_fraction must lie strictly between 0 and 1")
    frac = Decimal(repr(float(train_fraction)))
    rng = np.random.default_rng(seed)
    train_idx = []
    for label in (0, 1):
        members = [i for i, t in enumerate(ds.tweets) if t.label == label]
        if not members:
            raise SplitError(f"class {label} has no samples")
        n_train = _round_half_up(frac * len(members))
        n_hold = len(members) - n_train
        if n_train == 0 or n_hold == 0:
            raise SplitError(
                f"class {label} ({len(members)} samples) would leave "
                f"{n_train} in train and {n_hold} in holdout"
            )
        order = rng.permutation(len(members))
        train_idx.extend(members[j] for j in order[:n_train])
    chosen = set(train_idx)
    train = [t for i, t in enumerate(ds.tweets) if i in chosen]
    holdout = [t for i, t in enumerate(ds.tweets) if i not in chosen]
    return (
        ds.with_tweets(train, name=f"{ds.name}.train"),
        ds.with_tweets(holdout, name=f"{ds.name}.holdout"),
    )


def concat(name: str, *datasets: LabeledDataset) -> LabeledDataset:
    return LabeledDataset(name=name, tweets=tuple(t for ds in datasets for t in ds.tweets))

