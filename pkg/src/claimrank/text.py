"""Text splitting rules shared by the tokenizer, the n-gram scorer and the augmenters."""

import re
import unicodedata
from typing import List, NamedTuple

URL_RE = re.compile(r"(?:https?://|www\.)\S+", re.IGNORECASE)
MENTION_RE = re.compile(r"@\w+")
HASHTAG_RE = re.compile(r"#\w+")
NUMERAL_RE = re.compile(r"[+-]?\d+(?:[.,:]\d+)*%?")

_WS_SPLIT_RE = re.compile(r"(\s+)")


def is_punctuation(ch: str) -> bool:
    """ASCII symbol ranges plus every Unicode ``P*`` category, as BERT does."""
    cp = ord(ch)
    if 33 <= cp <= 47 or 58 <= cp <= 64 or 91 <= cp <= 96 or 123 <= cp <= 126:
        return True
    return unicodedata.category(ch).startswith("P")


def strip_punctuation(word: str) -> str:
    start, end = 0, len(word)
    while start < end and is_punctuation(word[start]):
        start += 1
    while end > start and is_punctuation(word[end - 1]):
        end -= 1
    return word[start:end]


def pre_tokenize(text: str, lowercase: bool = False) -> List[str]:
    """Split on Unicode whitespace; every punctuation codepoint becomes its own token."""
    if lowercase:
        text = text.lower()
    tokens = []
    for chunk in text.split():
        current = []
        for ch in chunk:
            if is_punctuation(ch):
                if current:
                    tokens.append("".join(current))
                    current = []
                tokens.append(ch)
            else:
                current.append(ch)
        if current:
            tokens.append("".join(current))
    return tokens


class Segment(NamedTuple):
    text: str
    kind: str  # "space", "word", "number", "punct" or "protected"


def _split_plain(chunk: str, out: list) -> None:
    i = 0
    n = len(chunk)
    while i < n:
        m = NUMERAL_RE.match(chunk, i)
        if m and (i == 0 or not chunk[i - 1].isalnum()):
            end = m.end()
            if end == n or not chunk[end].isalnum():
                out.append(Segment(m.group(), "number"))
                i = end
                continue
        ch = chunk[i]
        if is_punctuation(ch):
            out.append(Segment(ch, "punct"))
            i += 1
            continue
        j = i
        while j < n and not is_punctuation(chunk[j]):
            j += 1
        out.append(Segment(chunk[i:j], "word"))
        i = j


def segment(text: str) -> List[Segment]:
    """Lossless segmentation of ``text``: joining the segment texts gives ``text`` back.

    URLs, @mentions and #hashtags are kept whole as ``protected`` segments,
    numerals as ``number`` segments; the rest follows :func:`pre_tokenize`.
    """
    out: List[Segment] = []
    for piece in _WS_SPLIT_RE.split(text):
        if not piece:
            continue
        if piece.isspace():
            out.append(Segment(piece, "space"))
            continue
        m = URL_RE.match(piece) or MENTION_RE.match(piece) or HASHTAG_RE.match(piece)
        if m:
            out.append(Segment(m.group(), "protected"))
            rest = piece[m.end():]
            if rest:
                _split_plain(rest, out)
        else:
            _split_plain(piece, out)
    return out


def context_words(text: str) -> List[str]:
    """Words seen by language models: everything except whitespace and punctuation."""
    return [s.text for s in segment(text) if s.kind not in ("space", "punct")]


def is_protected_token(token: str) -> bool:
    return bool(
        URL_RE.fullmatch(token) or MENTION_RE.fullmatch(token) or HASHTAG_RE.fullmatch(token)
    )


def is_numeral(token: str) -> bool:
    return bool(NUMERAL_RE.fullmatch(token))
