"""Generated check-worthiness corpora for desk-scale experiments and tests.

Tweets are strings of nonce words. A check-worthy tweet reports something:
it contains one or two "cue + claim word" phrases, where claim words come
from a lexical field of their own and cues are a handful of reporting words.
Other tweets are everyday chatter that only occasionally uses a cue or a
claim word. The claim field is large and flat, so a labeled sample of a few
hundred positives sees only part of it.

:func:`make_corpora` also returns an unlabeled background corpus drawn from
the same language. It stands in for the large pre-training text behind a
contextual language model: a scorer fitted on it knows claim words that the
labeled split never shows.
"""

from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from .corpus import LabeledDataset, Tweet

_ONSETS = ["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "st", "kr", "pl"]
_VOWELS = ["a", "e", "i", "o", "u", "ai", "ou"]
_CODAS = ["", "n", "r", "s", "l", "m", "k"]


def nonce_words(n: int, rng: np.random.Generator, taken=()) -> List[str]:
    taken = set(taken)
    out = []
    while len(out) < n:
        word = "".join(
            _ONSETS[rng.integers(len(_ONSETS))] + _VOWELS[rng.integers(len(_VOWELS))] + _CODAS[rng.integers(len(_CODAS))]
            for _ in range(int(rng.integers(2, 4)))
        )
        if word not in taken:
            taken.add(word)
            out.append(word)
    return out


def _zipf(n: int, s: float) -> np.ndarray:
    w = 1.0 / np.arange(1, n + 1) ** s
    return w / w.sum()


@dataclass(frozen=True)
class Lexicon:
    general: Tuple[str, ...]
    claim: Tuple[str, ...]
    cues: Tuple[str, ...]
    general_p: np.ndarray
    claim_p: np.ndarray

    @classmethod
    def build(cls, rng, n_general=400, n_claim=600, n_cues=6, claim_skew=0.6, general_skew=1.1):
        general = nonce_words(n_general, rng)
        claim = nonce_words(n_claim, rng, taken=general)
        cues = nonce_words(n_cues, rng, taken=general + claim)
        return cls(tuple(general), tuple(claim), tuple(cues), _zipf(n_general, general_skew), _zipf(n_claim, claim_skew))


def _tweet_words(lex: Lexicon, label: int, rng, negative_cue_rate, negative_claim_rate, positive_without_claim_rate):
    words = [lex.general[i] for i in rng.choice(len(lex.general), size=int(rng.integers(9, 16)), p=lex.general_p)]

    def claim_word():
        return lex.claim[int(rng.choice(len(lex.claim), p=lex.claim_p))]

    def general_word():
        return lex.general[int(rng.choice(len(lex.general), p=lex.general_p))]

    def cue():
        return lex.cues[int(rng.integers(len(lex.cues)))]

    phrases = []
    if label == 1:
        with_claim = rng.random() >= positive_without_claim_rate
        for _ in range(int(rng.integers(1, 3))):
            phrases.append([cue(), claim_word() if with_claim else general_word()])
    else:
        if rng.random() < negative_cue_rate:
            phrases.append([cue(), general_word()])
        if rng.random() < negative_claim_rate:
            phrases.append([claim_word()])
    for phrase in phrases:
        at = int(rng.integers(0, len(words) + 1))
        words[at:at] = phrase
    return words


def make_corpora(
    n_samples: int = 2000,
    positive_rate: float = 0.13,
    seed: int = 0,
    n_background: int = 20000,
    n_topics: int = 4,
    n_general: int = 80,
    n_claim: int = 2000,
    n_cues: int = 6,
    claim_skew: float = 0.0,
    general_skew: float = 0.5,
    negative_cue_rate: float = 0.2,
    negative_claim_rate: float = 0.03,
    positive_without_claim_rate: float = 0.1,
    name: str = "synthetic",
) -> Tuple[LabeledDataset, List[str]]:
    """Return ``(labeled dataset, unlabeled background texts)`` over one lexicon.

    The labeled set has exactly ``round(n_samples * positive_rate)``
    positives; the background corpus mixes the two kinds of tweet at the
    same rate.
    """
    rng = np.random.default_rng(seed)
    lex = Lexicon.build(rng, n_general, n_claim, n_cues, claim_skew, general_skew)
    opts = (negative_cue_rate, negative_claim_rate, positive_without_claim_rate)

    n_pos = int(round(n_samples * positive_rate))
    labels = np.zeros(n_samples, dtype=int)
    labels[rng.choice(n_samples, size=n_pos, replace=False)] = 1
    tweets = []
    for i, label in enumerate(labels):
        words = _tweet_words(lex, int(label), rng, *opts)
        topic = f"T{int(rng.integers(n_topics)) + 1}"
        tweets.append(Tweet(topic, f"{name}-{i:05d}", " ".join(words), int(label)))

    background = [
        " ".join(_tweet_words(lex, int(rng.random() < positive_rate), rng, *opts)) for _ in range(n_background)
    ]
    return LabeledDataset(name=name, tweets=tuple(tweets)), background


def make_imbalanced_corpus(n_samples: int = 2000, positive_rate: float = 0.13, seed: int = 0, **kwargs) -> LabeledDataset:
    """Labeled half of :func:`make_corpora`, without the background corpus."""
    return make_corpora(n_samples, positive_rate, seed, n_background=0, **kwargs)[0]
