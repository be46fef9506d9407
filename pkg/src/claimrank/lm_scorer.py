"""Candidate scorers that rank substitutes for a masked word position.

The built-in :class:`NGramScorer` is an interpolated trigram model with add-k
smoothing. For a slot between ``left`` and ``right`` context it scores each
candidate ``w`` as::

    P(w | last two left words) * P(first right word | last left word, w)

where each factor is the interpolated estimate
``l3 * P3 + l2 * P2 + l1 * P1`` restricted (and renormalized) to the orders
the available history supports. Scores are normalized over the candidate
pool so that their exponentiated values sum to one.

:class:`ExternalScorer` speaks a line-delimited JSON protocol with a child
process, which is how neural masked language models plug in.
"""

import json
import math
import queue
import subprocess
import threading
from collections import Counter, defaultdict
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .errors import EmptyCorpus, InvalidTopK, ProtocolError, ScorerError, ScorerTimeout
from .text import context_words

BOS = "<s>"
EOS = "</s>"
CONTEXT_WINDOW = 10

Candidate = Tuple[str, float]


def _check_top_k(top_k) -> int:
    if isinstance(top_k, bool) or not isinstance(top_k, (int, np.integer)) or top_k < 1:
        raise InvalidTopK(f"top_k must be a positive integer, got {top_k!r}")
    return int(top_k)


def _sparse(counter: Counter):
    ids = np.fromiter(counter.keys(), dtype=np.int64, count=len(counter))
    vals = np.fromiter(counter.values(), dtype=np.float64, count=len(counter))
    return ids, vals


_EMPTY = (np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.float64))


class NGramScorer(BaseEstimator):
    """Interpolated add-k trigram model used as a desk-scale contextual scorer.

    Parameters
    ----------
    k : float
        Add-k smoothing constant applied at every order.
    lambdas : tuple of 3 floats
        Interpolation weights for (unigram, bigram, trigram); rescaled to sum to 1.
    """

    def __init__(self, k=0.01, lambdas=(0.1, 0.3, 0.6)):
        self.k = k
        self.lambdas = lambdas

    # -- training -------------------------------------------------------
    def fit(self, X: Iterable[str], y=None):
        sentences = [context_words(x) for x in X]
        if not sentences:
            raise EmptyCorpus("cannot train an n-gram model on an empty corpus")
        lam = np.asarray(self.lambdas, dtype=np.float64)
        if lam.shape != (3,) or np.any(lam < 0) or not np.isfinite(lam).all() or lam.sum() <= 0:
            raise ValueError("lambdas must be three non-negative weights with a positive sum")
        if not self.k > 0:
            raise ValueError("k must be positive")
        self.lambdas_ = lam / lam.sum()

        words = sorted({w for s in sentences for w in s})
        # prediction vocabulary: corpus words plus end-of-sentence
        self.vocabulary_ = words + [EOS]
        self.index_ = {w: i for i, w in enumerate(self.vocabulary_)}
        self.n_candidates_ = len(words)
        V = len(self.vocabulary_)
        bos = -1  # BOS only ever appears as history

        uni = np.zeros(V)
        bi = defaultdict(Counter)
        tri = defaultdict(Counter)
        for s in sentences:
            ids = [bos, bos] + [self.index_[w] for w in s] + [self.index_[EOS]]
            for i in range(2, len(ids)):
                u, v, w = ids[i - 2], ids[i - 1], ids[i]
                uni[w] += 1
                bi[v][w] += 1
                tri[(u, v)][w] += 1
        self.unigram_counts_ = uni
        self.bigram_counts_ = {h: dict(c) for h, c in bi.items()}
        self.trigram_counts_ = {h: dict(c) for h, c in tri.items()}

        # forward tables: history -> (next ids, counts), plus history totals
        self._bi_fwd = {h: _sparse(c) for h, c in bi.items()}
        self._tri_fwd = {h: _sparse(c) for h, c in tri.items()}
        self._bi_tot = {h: float(sum(c.values())) for h, c in bi.items()}
        self._tri_tot = {h: float(sum(c.values())) for h, c in tri.items()}
        # reverse tables for the right-context factor
        bi_rev = defaultdict(Counter)  # next -> {middle: count}
        tri_rev = defaultdict(Counter)  # (first, next) -> {middle: count}
        bi_tot_vec = np.zeros(V)
        tri_tot_by_first = defaultdict(Counter)  # first -> {middle: total}
        for v, c in bi.items():
            for w, n in c.items():
                bi_rev[w][v] += n
            if v >= 0:
                bi_tot_vec[v] = sum(c.values())
        for (u, v), c in tri.items():
            for w, n in c.items():
                tri_rev[(u, w)][v] += n
            if v >= 0:
                tri_tot_by_first[u][v] += sum(c.values())
        self._bi_rev = {h: _sparse(c) for h, c in bi_rev.items()}
        self._tri_rev = {h: _sparse(c) for h, c in tri_rev.items()}
        self._bi_tot_vec = bi_tot_vec
        self._tri_tot_by_first = {h: _sparse(c) for h, c in tri_tot_by_first.items()}
        self._bos = bos
        return self

    def ngram_count(self, words: Sequence[str]) -> int:
        """Training count of a 1-, 2- or 3-gram; ``<s>`` may appear in history slots."""
        check_is_fitted(self, "vocabulary_")
        words = list(words)
        if not 1 <= len(words) <= 3:
            raise ValueError("ngram_count takes 1 to 3 words")
        ids = [self._bos if w == BOS else self.index_.get(w) for w in words]
        if any(i is None for i in ids) or ids[-1] == self._bos:
            return 0
        if len(ids) == 1:
            return int(self.unigram_counts_[ids[0]])
        table = self.bigram_counts_.get(ids[0]) if len(ids) == 2 else self.trigram_counts_.get((ids[0], ids[1]))
        return int((table or {}).get(ids[-1], 0))

    # -- probabilities --------------------------------------------------
    def _id(self, word):
        return self.index_.get(word)

    def _weights(self, order):
        lam = self.lambdas_[:order]
        return lam / lam.sum()

    def next_word_distribution(self, history: Sequence[str]) -> np.ndarray:
        """Interpolated P(. | history) over ``vocabulary_`` (sums to 1).

        Only the last two history words matter; unseen words in the history
        behave like an unseen context, falling back on the smoothed uniform
        part of the higher orders.
        """
        check_is_fitted(self, "vocabulary_")
        hist = list(history)[-2:]
        V = len(self.vocabulary_)
        k = self.k
        p1 = (self.unigram_counts_ + k) / (self.unigram_counts_.sum() + k * V)
        order = len(hist) + 1
        lam = self._weights(order)
        dist = lam[0] * p1
        if order >= 2:
            v = self._hist_id(hist[-1])
            ids, vals = self._bi_fwd.get(v, _EMPTY)
            tot = self._bi_tot.get(v, 0.0)
            p2 = np.full(V, k / (tot + k * V))
            p2[ids] += vals / (tot + k * V)
            dist = dist + lam[1] * p2
        if order >= 3:
            key = (self._hist_id(hist[-2]), self._hist_id(hist[-1]))
            ids, vals = self._tri_fwd.get(key, _EMPTY)
            tot = self._tri_tot.get(key, 0.0)
            p3 = np.full(V, k / (tot + k * V))
            p3[ids] += vals / (tot + k * V)
            dist = dist + lam[2] * p3
        return dist

    def _hist_id(self, word):
        if word == BOS:
            return self._bos
        i = self._id(word)
        return -2 if i is None else i  # -2: a history never observed

    def _right_factor(self, prev: List[str], nxt: str) -> np.ndarray:
        """P(nxt | prev[-1:], w) for every candidate w, vectorized over w."""
        V = len(self.vocabulary_)
        k = self.k
        t = self._id(nxt)
        p1 = 0.0 if t is None else self.unigram_counts_[t]
        p1 = (p1 + k) / (self.unigram_counts_.sum() + k * V)
        order = 3 if prev else 2
        lam = self._weights(order)
        out = np.full(V, lam[0] * p1)

        bi_num = np.zeros(V)
        if t is not None:
            ids, vals = self._bi_rev.get(t, _EMPTY)
            bi_num[ids] = vals
        out += lam[1] * (bi_num + k) / (self._bi_tot_vec + k * V)

        if order == 3:
            u = self._hist_id(prev[-1])
            tri_num = np.zeros(V)
            if t is not None:
                ids, vals = self._tri_rev.get((u, t), _EMPTY)
                tri_num[ids] = vals
            tri_den = np.zeros(V)
            ids, vals = self._tri_tot_by_first.get(u, _EMPTY)
            tri_den[ids] = vals
            out += lam[2] * (tri_num + k) / (tri_den + k * V)
        return out

    def candidate_distribution(self, left: Sequence[str], right: Sequence[str]) -> np.ndarray:
        """Normalized substitute probabilities over the candidate pool (corpus words)."""
        check_is_fitted(self, "vocabulary_")
        left = list(left)[-CONTEXT_WINDOW:]
        right = list(right)[:CONTEXT_WINDOW]
        n = self.n_candidates_
        scores = self.next_word_distribution(left)[:n]
        if right:
            scores = scores * self._right_factor(left, right[0])[:n]
        return scores / scores.sum()

    def score_candidates(self, left: Sequence[str], right: Sequence[str], top_k: int) -> List[Candidate]:
        """Top-``top_k`` substitutes, sorted by descending log-probability.

        Ties are broken lexicographically by token.
        """
        top_k = _check_top_k(top_k)
        probs = self.candidate_distribution(left, right)
        logp = np.log(probs)
        words = self.vocabulary_
        # vocabulary_ is sorted, so a stable sort on -logp breaks ties by token
        order = np.argsort(-logp, kind="stable")[:top_k]
        return [(words[i], float(logp[i])) for i in order]


def train_ngram(corpus, k: float = 0.01, lambdas=(0.1, 0.3, 0.6)) -> NGramScorer:
    """Fit an :class:`NGramScorer` on a LabeledDataset or an iterable of texts."""
    texts = [t if isinstance(t, str) else t.text for t in corpus]
    return NGramScorer(k=k, lambdas=lambdas).fit(texts)


# --- external process scorer ------------------------------------------------

def validate_candidates(candidates, top_k: int) -> List[Candidate]:
    """Check a decoded ``candidates`` array against the protocol contract."""
    if not isinstance(candidates, list):
        raise ProtocolError("'candidates' must be a list")
    if len(candidates) > top_k:
        raise ProtocolError(f"{len(candidates)} candidates returned for top_k={top_k}")
    out = []
    for c in candidates:
        if not isinstance(c, dict) or set(c) != {"token", "logprob"}:
            raise ProtocolError(f"malformed candidate {c!r}")
        token, logprob = c["token"], c["logprob"]
        if not isinstance(token, str) or not token:
            raise ProtocolError(f"candidate token must be a non-empty string, got {token!r}")
        if isinstance(logprob, bool) or not isinstance(logprob, (int, float)) or not math.isfinite(logprob):
            raise ProtocolError(f"candidate logprob must be finite, got {logprob!r}")
        out.append((token, float(logprob)))
    for (_, a), (_, b) in zip(out, out[1:]):
        if b > a:
            raise ProtocolError("candidates are not sorted by descending logprob")
    return out


class ExternalScorer:
    """Candidate scorer backed by a child process speaking line-delimited JSON.

    Requests ``{"id", "left", "right", "top_k"}`` are written to the child's
    stdin one per line; the child answers each with
    ``{"id", "candidates": [{"token", "logprob"}, ...]}`` in order. A single
    process serves requests sequentially, so instances are not thread-safe.
    """

    def __init__(self, command, timeout: float = 30.0, cwd=None, env=None):
        self.command = command
        self.timeout = timeout
        self._proc = subprocess.Popen(
            command,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            stderr=subprocess.DEVNULL,
            text=True,
            encoding="utf-8",
            bufsize=1,
            shell=isinstance(command, str),
            cwd=cwd,
            env=env,
        )
        self._lines: "queue.Queue" = queue.Queue()
        self._reader = threading.Thread(target=self._pump, daemon=True)
        self._reader.start()
        self._next_id = 0
        self._broken = False

    def _pump(self):
        for line in self._proc.stdout:
            self._lines.put(line)
        self._lines.put(None)

    def score_candidates(self, left, right, top_k):
        top_k = _check_top_k(top_k)
        if self._broken:
            raise ScorerError("external scorer is unusable after an earlier failure")
        req_id = self._next_id
        self._next_id += 1
        request = {
            "id": req_id,
            "left": list(left)[-CONTEXT_WINDOW:],
            "right": list(right)[:CONTEXT_WINDOW],
            "top_k": top_k,
        }
        try:
            self._proc.stdin.write(json.dumps(request, ensure_ascii=False) + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            self._broken = True
            raise ScorerError(f"external scorer is not accepting requests: {exc}") from exc
        try:
            line = self._lines.get(timeout=self.timeout)
        except queue.Empty:
            self._broken = True
            self.close()
            raise ScorerTimeout(f"no response to request {req_id} within {self.timeout}s") from None
        if line is None:
            self._broken = True
            raise ScorerError("external scorer exited")
        try:
            msg = json.loads(line)
        except json.JSONDecodeError as exc:
            self._broken = True
            raise ProtocolError(f"response is not JSON: {line.strip()[:80]!r}") from exc
        if not isinstance(msg, dict) or "candidates" not in msg or "id" not in msg:
            self._broken = True
            raise ProtocolError("response must be an object with 'id' and 'candidates'")
        if msg["id"] != req_id:
            self._broken = True
            raise ProtocolError(f"response id {msg['id']!r} does not match request id {req_id}")
        return validate_candidates(msg["candidates"], top_k)

    def close(self):
        proc = self._proc
        if proc.poll() is None:
            try:
                proc.stdin.close()
            except OSError:
                pass
            try:
                proc.wait(timeout=1)
            except subprocess.TimeoutExpired:
                proc.kill()
                proc.wait()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def __del__(self):
        try:
            self.close()
        except Exception:
            pass


def external_scorer(command, timeout: float = 30.0) -> ExternalScorer:
    return ExternalScorer(command, timeout=timeout)
