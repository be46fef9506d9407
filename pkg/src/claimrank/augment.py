"""Synthetic check-worthy samples and the epoch-wise class-balancing loop.

Every random decision for one record is drawn from a generator seeded by
``(global seed, tweet_id, epoch)``, so the output for a tweet does not depend
on which other tweets are processed, in what order, or on how many workers.
"""

import hashlib
import json
import logging
import math
import os
import urllib.request
from dataclasses import dataclass, replace
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_probability
from .corpus import LabeledDataset, Tweet
from .errors import MissingLexicon, NoNegatives, NoPositives, TranslatorError
from .lm_scorer import NGramScorer
from .text import HASHTAG_RE, MENTION_RE, URL_RE, is_protected_token, segment

logger = logging.getLogger(__name__)

EDA_OPS = ("random_insert", "random_delete", "random_swap", "synonym_replace")
TOKEN_ENV = "CLAIMRANK_TRANSLATE_TOKEN"


@dataclass(frozen=True)
class AugmentConfig:
    """Knobs for contextual substitution.

    ``p`` is the per-word probability of being augmented. ``selection`` is
    ``"argmax"`` or ``"sample_top_k"`` (sample among the ``top_k`` best
    candidates with probability proportional to ``exp(logprob / temperature)``).
    """

    p: float = 0.1
    mode: str = "substitute"
    selection: str = "sample_top_k"
    top_k: int = 10
    temperature: float = 1.0
    seed: int = 42
    protect_urls: bool = True
    protect_mentions: bool = True
    protect_hashtags: bool = True
    protect_numerals: bool = False

    def __post_init__(self):
        check_probability(self.p, "p")
        if self.mode not in ("substitute", "insert"):
            raise ValueError(f"mode must be 'substitute' or 'insert', got {self.mode!r}")
        if self.selection not in ("argmax", "sample_top_k"):
            raise ValueError(f"selection must be 'argmax' or 'sample_top_k', got {self.selection!r}")
        if int(self.top_k) < 1:
            raise ValueError("top_k must be >= 1")
        if not self.temperature > 0:
            raise ValueError("temperature must be positive")


@dataclass(frozen=True)
class BalanceReport:
    epochs_run: int
    augmented_generated: int
    final_positive: int
    final_negative: int

    def to_dict(self):
        return {
            "epochs_run": self.epochs_run,
            "augmented_generated": self.augmented_generated,
            "final_positive": self.final_positive,
            "final_negative": self.final_negative,
        }


@dataclass(frozen=True)
class SubstitutionStats:
    eligible: int
    selected: int
    substituted: int


def record_rng(seed: int, tweet_id: str, epoch: int, salt: str = "") -> np.random.Generator:
    """Generator for one (seed, record, epoch) triple, stable across processes."""
    key = f"{int(seed)}\x1f{tweet_id}\x1f{int(epoch)}\x1f{salt}".encode("utf-8")
    digest = hashlib.blake2b(key, digest_size=16).digest()
    return np.random.default_rng(int.from_bytes(digest, "little"))


# --- contextual substitution -----------------------------------------------

def _is_protected(seg, cfg: AugmentConfig) -> bool:
    if seg.kind == "protected":
        t = seg.text
        if URL_RE.match(t):
            return cfg.protect_urls
        if MENTION_RE.match(t):
            return cfg.protect_mentions
        if HASHTAG_RE.match(t):
            return cfg.protect_hashtags
        return True
    if seg.kind == "number":
        return cfg.protect_numerals
    return False


def _usable(candidate: str, excluded) -> bool:
    return candidate not in excluded and not is_protected_token(candidate) and any(
        ch.isalnum() for ch in candidate
    )


def _choose(candidates, cfg: AugmentConfig, rng: np.random.Generator) -> Optional[str]:
    if not candidates:
        return None
    if cfg.selection == "argmax":
        return candidates[0][0]
    pool = candidates[: cfg.top_k]
    logits = np.array([lp for _, lp in pool]) / cfg.temperature
    weights = np.exp(logits - logits.max())
    weights /= weights.sum()
    return pool[int(rng.choice(len(pool), p=weights))][0]


def substitute_text(text: str, scorer, cfg: AugmentConfig, rng: np.random.Generator):
    """Augment one text; returns ``(new_text, SubstitutionStats)``.

    Eligible positions are whole words (and numerals unless protected).
    Each is selected independently with probability ``cfg.p``; a selected
    word is replaced by (substitute mode) or followed by (insert mode) a
    scorer candidate. The original word is never its own substitute.
    """
    segs = segment(text)
    word_pos = [i for i, s in enumerate(segs) if s.kind not in ("space", "punct")]
    words = [segs[i].text for i in word_pos]
    eligible = [j for j, i in enumerate(word_pos) if not _is_protected(segs[i], cfg)]
    draws = rng.random(len(eligible))
    selected = [j for j, u in zip(eligible, draws) if u < cfg.p]

    need = 1 if cfg.selection == "argmax" else cfg.top_k
    out = [s.text for s in segs]
    substituted = 0
    for j in selected:
        if cfg.mode == "substitute":
            left, right = words[:j], words[j + 1:]
            excluded = {words[j]}
        else:
            left, right = words[: j + 1], words[j + 1:]
            excluded = {words[j]} | ({words[j + 1]} if j + 1 < len(words) else set())
        raw = scorer.score_candidates(left, right, need + 1)
        candidates = [(tok, lp) for tok, lp in raw if _usable(tok, excluded)][:need]
        choice = _choose(candidates, cfg, rng)
        if choice is None:
            continue
        i = word_pos[j]
        out[i] = choice if cfg.mode == "substitute" else out[i] + " " + choice
        substituted += 1
    return "".join(out), SubstitutionStats(len(eligible), len(selected), substituted)


def contextual_substitute(tweet: Tweet, scorer, cfg: AugmentConfig, epoch: int = 1) -> Tweet:
    if not tweet.text.strip():
        raise ValueError("cannot augment an empty tweet")
    rng = record_rng(cfg.seed, tweet.tweet_id, epoch, "ctx")
    text, _ = substitute_text(tweet.text, scorer, cfg, rng)
    return replace(tweet, tweet_id=f"{tweet.tweet_id}#aug{epoch}", text=text, origin="augmented")


# --- EDA operations ----------------------------------------------------------

def eda_text(words: List[str], op: str, p: float, rng: np.random.Generator, synonyms=None, vocabulary=None):
    n = len(words)
    if op == "random_delete":
        if n == 0 or p == 0:
            return list(words)
        keep = rng.random(n) >= p
        if not keep.any():
            keep[int(rng.integers(n))] = True
        return [w for w, k in zip(words, keep) if k]
    if op == "random_swap":
        out = list(words)
        if n < 2:
            return out
        for _ in range(math.ceil(p * n)):
            i = int(rng.integers(n - 1))
            out[i], out[i + 1] = out[i + 1], out[i]
        return out
    if op == "random_insert":
        pool = list(vocabulary) if vocabulary else list(words)
        out = []
        draws = rng.random(n)
        for w, u in zip(words, draws):
            out.append(w)
            if u < p and pool:
                out.append(pool[int(rng.integers(len(pool)))])
        return out
    if op == "synonym_replace":
        if synonyms is None:
            raise MissingLexicon("synonym_replace needs a synonym lexicon")
        out = []
        draws = rng.random(n)
        for w, u in zip(words, draws):
            options = [s for s in synonyms.get(w, synonyms.get(w.lower(), ())) if s != w]
            if u < p and options:
                out.append(options[int(rng.integers(len(options)))])
            else:
                out.append(w)
        return out
    raise ValueError(f"unknown EDA op {op!r}; expected one of {EDA_OPS}")


def eda_op(
    tweet: Tweet,
    op: str,
    p: float,
    seed: int,
    synonyms: Optional[Dict[str, Sequence[str]]] = None,
    vocabulary: Optional[Sequence[str]] = None,
    epoch: int = 1,
) -> Tweet:
    """Apply one random lexical operation to whitespace-delimited words.

    ``random_insert`` draws inserted words from ``vocabulary`` (the tweet's
    own words when omitted).
    """
    check_probability(p, "p")
    if op == "synonym_replace" and synonyms is None:
        raise MissingLexicon("synonym_replace needs a synonym lexicon")
    rng = record_rng(seed, tweet.tweet_id, epoch, op)
    words = eda_text(tweet.text.split(), op, p, rng, synonyms=synonyms, vocabulary=vocabulary)
    return replace(tweet, tweet_id=f"{tweet.tweet_id}#eda{epoch}", text=" ".join(words), origin="augmented")


def load_lexicon(path) -> Dict[str, List[str]]:
    """Synonym lexicon: one ``word<TAB>syn1,syn2,...`` entry per line."""
    lexicon: Dict[str, List[str]] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line.strip():
                continue
            word, _, syns = line.partition("\t")
            lexicon[word] = [s for s in syns.split(",") if s]
    return lexicon


# --- back-translation ----------------------------------------------------------

class IdentityTranslator:
    def __call__(self, text, src, dst):
        return text


class WordReversingTranslator:
    """Reverses word order; applying it twice restores the input."""

    def __call__(self, text, src, dst):
        return " ".join(reversed(text.split()))


class HttpTranslator:
    """POSTs ``{"text", "source", "target"}`` as JSON and reads ``{"text"}`` back.

    A bearer token is taken from ``$CLAIMRANK_TRANSLATE_TOKEN`` when set.
    """

    def __init__(self, endpoint: str, timeout: float = 30.0, token_env: str = TOKEN_ENV):
        self.endpoint = endpoint
        self.timeout = timeout
        self.token_env = token_env

    def __call__(self, text, src, dst):
        body = json.dumps({"text": text, "source": src, "target": dst}).encode("utf-8")
        req = urllib.request.Request(self.endpoint, data=body, method="POST")
        req.add_header("Content-Type", "application/json")
        token = os.environ.get(self.token_env)
        if token:
            req.add_header("Authorization", f"Bearer {token}")
        with urllib.request.urlopen(req, timeout=self.timeout) as resp:
            payload = json.loads(resp.read().decode("utf-8"))
        if not isinstance(payload, dict) or not isinstance(payload.get("text"), str):
            raise ValueError("translation response lacks a 'text' string")
        return payload["text"]


TRANSLATORS = {"identity": IdentityTranslator, "reverse": WordReversingTranslator}


def back_translate(tweet: Tweet, translator: Callable, pivot: str = "en", source: str = "auto", epoch: int = 1) -> Tweet:
    """Round-trip ``tweet`` through ``pivot`` with ``translator(text, src, dst)``."""
    try:
        there = translator(tweet.text, source, pivot)
        back = translator(there, pivot, source)
    except Exception as exc:
        raise TranslatorError(f"translation of {tweet.tweet_id} failed: {exc}") from exc
    if not isinstance(back, str) or not back.strip():
        raise TranslatorError(f"translator returned empty text for {tweet.tweet_id}")
    return replace(tweet, tweet_id=f"{tweet.tweet_id}#bt{epoch}", text=back, origin="backtranslated")


# --- balancing ---------------------------------------------------------------

def balance_classes(train: LabeledDataset, augmenter: Callable, strict_exceed: bool = True):
    """Augment every original positive once per epoch until positives exceed negatives.

    ``augmenter(tweet, epoch)`` must return a new Tweet. The loop stops at the
    first epoch where positives > negatives, or >= with ``strict_exceed=False``.
    Returns the extended dataset (input rows first, untouched) and a
    :class:`BalanceReport`.
    """
    originals = [t for t in train.tweets if t.label == 1 and t.origin == "original"]
    n_pos = sum(t.label for t in train.tweets)
    n_neg = len(train.tweets) - n_pos
    if not originals:
        raise NoPositives(f"{train.name}: no original positive samples to augment")
    if n_neg == 0:
        raise NoNegatives(f"{train.name}: no negative samples")

    def unbalanced():
        return n_pos <= n_neg if strict_exceed else n_pos < n_neg

    added: List[Tweet] = []
    epochs = 0
    while unbalanced():
        epochs += 1
        for t in originals:
            new = augmenter(t, epochs)
            if new.label != 1:
                new = replace(new, label=1)
            added.append(new)
        n_pos += len(originals)
        logger.debug("epoch %d: %d positives vs %d negatives", epochs, n_pos, n_neg)
    report = BalanceReport(epochs, len(added), n_pos, n_neg)
    return train.with_tweets(train.tweets + tuple(added)), report


# --- estimator wrapper --------------------------------------------------------

class ContextualAugmenter(TransformerMixin, BaseEstimator):
    """Contextual substitution as a fit/transform estimator.

    ``fit`` trains an :class:`~claimrank.lm_scorer.NGramScorer` on the given
    texts unless an external ``scorer`` is supplied. The fitted object is
    also a valid ``augmenter`` callable for :func:`balance_classes`.
    """

    def __init__(
        self,
        scorer=None,
        p=0.1,
        mode="substitute",
        selection="sample_top_k",
        top_k=10,
        temperature=1.0,
        seed=42,
        protect_numerals=False,
        ngram_k=0.01,
        lambdas=(0.1, 0.3, 0.6),
    ):
        self.scorer = scorer
        self.p = p
        self.mode = mode
        self.selection = selection
        self.top_k = top_k
        self.temperature = temperature
        self.seed = seed
        self.protect_numerals = protect_numerals
        self.ngram_k = ngram_k
        self.lambdas = lambdas

    def _config(self) -> AugmentConfig:
        return AugmentConfig(
            p=self.p,
            mode=self.mode,
            selection=self.selection,
            top_k=self.top_k,
            temperature=self.temperature,
            seed=self.seed,
            protect_numerals=self.protect_numerals,
        )

    def fit(self, X, y=None):
        self.config_ = self._config()
        if self.scorer is not None:
            self.scorer_ = self.scorer
        else:
            texts = [x if isinstance(x, str) else x.text for x in X]
            self.scorer_ = NGramScorer(k=self.ngram_k, lambdas=self.lambdas).fit(texts)
        return self

    def __call__(self, tweet: Tweet, epoch: int = 1) -> Tweet:
        check_is_fitted(self, "scorer_")
        return contextual_substitute(tweet, self.scorer_, self.config_, epoch)

    def transform(self, X, epoch: int = 1):
        """Augment each text once; record ids are the positions in ``X``."""
        check_is_fitted(self, "scorer_")
        out = []
        for i, x in enumerate(X):
            text = x if isinstance(x, str) else x.text
            rng = record_rng(self.config_.seed, str(i), epoch, "ctx")
            out.append(substitute_text(text, self.scorer_, self.config_, rng)[0])
        return out
