"""WordPiece tokenization against a fixed vocabulary and corpus UNK analysis."""

from dataclasses import dataclass
from typing import Iterable, List, Sequence, Tuple

from sklearn.base import BaseEstimator, TransformerMixin

from .errors import VocabError
from .text import pre_tokenize


@dataclass(frozen=True)
class SubwordVocab:
    entries: Tuple[str, ...]
    unk_token: str = "[UNK]"
    max_word_chars: int = 100

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        if len(set(self.entries)) != len(self.entries):
            raise VocabError(None, "duplicate vocabulary entries")
        if self.unk_token not in self.entries:
            raise VocabError(None, f"unk token {self.unk_token!r} not in vocabulary")
        object.__setattr__(self, "_lookup", frozenset(self.entries))

    def __contains__(self, piece: str) -> bool:
        return piece in self._lookup

    def __len__(self):
        return len(self.entries)

    def extended(self, new_entries: Iterable[str]) -> "SubwordVocab":
        extra = [e for e in dict.fromkeys(new_entries) if e not in self._lookup]
        return SubwordVocab(self.entries + tuple(extra), self.unk_token, self.max_word_chars)


@dataclass(frozen=True)
class UnkReport:
    total_pieces: int
    unk_pieces: int

    @property
    def unk_percent(self) -> float:
        if self.total_pieces == 0:
            return 0.0
        return 100.0 * self.unk_pieces / self.total_pieces

    def to_tsv(self) -> str:
        return f"{self.total_pieces}\t{self.unk_pieces}\t{self.unk_percent:.3f}"


def load_vocab(path, unk_token: str = "[UNK]", max_word_chars: int = 100) -> SubwordVocab:
    """Load a one-piece-per-line vocabulary file, preserving line order."""
    entries = []
    seen = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            piece = line.rstrip("\n").rstrip("\r")
            if not piece:
                continue
            if piece in seen:
                raise VocabError(line_no, f"duplicate entry {piece!r} (first on line {seen[piece]})")
            seen[piece] = line_no
            entries.append(piece)
    if unk_token not in seen:
        raise VocabError(None, f"vocabulary has no {unk_token!r} entry")
    return SubwordVocab(tuple(entries), unk_token, max_word_chars)


def _greedy(vocab: SubwordVocab, word: str):
    pieces = []
    start = 0
    while start < len(word):
        end = len(word)
        match = None
        while start < end:
            cand = word[start:end] if start == 0 else "##" + word[start:end]
            if cand in vocab:
                match = cand
                break
            end -= 1
        if match is None:
            return None
        pieces.append(match)
        start = end
    return pieces


def _longest_first_search(vocab: SubwordVocab, word: str):
    # Depth-first over prefixes, longest first; positions proven dead are memoized.
    dead = set()
    n = len(word)

    def walk(start):
        if start == n:
            return []
        if start in dead:
            return None
        for end in range(n, start, -1):
            cand = word[start:end] if start == 0 else "##" + word[start:end]
            if cand in vocab:
                rest = walk(end)
                if rest is not None:
                    return [cand] + rest
        dead.add(start)
        return None

    return walk(0)


def tokenize_word(vocab: SubwordVocab, word: str, backtrack: bool = True) -> List[str]:
    """Split one pre-token into vocabulary pieces, longest match first.

    With ``backtrack=False`` this is the classic BERT procedure: a position
    with no matching piece turns the whole word into the unk token. With
    ``backtrack=True`` (default) a dead end makes the search retry shorter
    earlier pieces before giving up. Whenever the classic procedure succeeds
    both modes return the same pieces; backtracking additionally guarantees
    that enlarging the vocabulary never creates new unk tokens.
    """
    if not word:
        return []
    if len(word) > vocab.max_word_chars:
        return [vocab.unk_token]
    pieces = _longest_first_search(vocab, word) if backtrack else _greedy(vocab, word)
    return pieces if pieces is not None else [vocab.unk_token]


def tokenize_text(vocab: SubwordVocab, text: str, lowercase: bool = False, backtrack: bool = True) -> List[str]:
    out = []
    for word in pre_tokenize(text, lowercase=lowercase):
        out.extend(tokenize_word(vocab, word, backtrack=backtrack))
    return out


def unk_report(vocab: SubwordVocab, texts: Iterable, lowercase: bool = False, backtrack: bool = True) -> UnkReport:
    """Count total and unk pieces over a dataset (or any iterable of texts)."""
    total = unk = 0
    for item in texts:
        text = item if isinstance(item, str) else item.text
        pieces = tokenize_text(vocab, text, lowercase=lowercase, backtrack=backtrack)
        total += len(pieces)
        unk += sum(1 for p in pieces if p == vocab.unk_token)
    return UnkReport(total, unk)


class WordPieceTokenizer(TransformerMixin, BaseEstimator):
    """Estimator wrapper so tokenization can sit inside a scikit-learn pipeline.

    ``transform`` maps a sequence of texts to a list of piece lists. There is
    nothing to learn; ``fit`` only validates the vocabulary.
    """

    def __init__(self, vocab=None, lowercase=False, backtrack=True):
        self.vocab = vocab
        self.lowercase = lowercase
        self.backtrack = backtrack

    def fit(self, X=None, y=None):
        if not isinstance(self.vocab, SubwordVocab):
            raise TypeError("vocab must be a SubwordVocab")
        self.vocab_ = self.vocab
        return self

    def transform(self, X: Sequence[str]) -> List[List[str]]:
        vocab = getattr(self, "vocab_", None) or self.fit().vocab_
        return [tokenize_text(vocab, x, self.lowercase, self.backtrack) for x in X]

    def unk_report(self, X: Sequence[str]) -> UnkReport:
        vocab = getattr(self, "vocab_", None) or self.fit().vocab_
        return unk_report(vocab, X, self.lowercase, self.backtrack)
