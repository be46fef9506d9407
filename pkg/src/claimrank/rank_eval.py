"""Check-worthiness scores, ranked runs and the ranking metric suite.

Conventions
-----------
* AP divides by the number of relevant items in the topic.
* P@k divides by ``k`` even when the topic has fewer than ``k`` items.
* Topics without relevant items contribute 0 to every mean unless
  ``skip_empty_topics`` is set.
* The classification metrics (``cw_*``) pool all items and call an item
  check-worthy when its score is > 0, i.e. ``p_pos > 0.5``.
"""

import json
import math
from collections import OrderedDict
from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Sequence, Tuple

from .errors import IdMismatch, ScoreFileError

DEFAULT_K_LIST = (1, 3, 5, 10, 20, 30)


@dataclass(frozen=True)
class RankedEntry:
    topic_id: str
    tweet_id: str
    score: float
    rank: int


@dataclass(frozen=True)
class RankedRun:
    run_id: str
    entries: Tuple[RankedEntry, ...]

    def by_topic(self) -> "OrderedDict[str, List[RankedEntry]]":
        topics: "OrderedDict[str, List[RankedEntry]]" = OrderedDict()
        for e in self.entries:
            topics.setdefault(e.topic_id, []).append(e)
        return topics


def softmax2(logit_neg: float, logit_pos: float) -> Tuple[float, float]:
    m = max(logit_neg, logit_pos)
    e_neg = math.exp(logit_neg - m)
    e_pos = math.exp(logit_pos - m)
    z = e_neg + e_pos
    p_pos = e_pos / z
    return 1.0 - p_pos, p_pos


def check_worthiness(logit_neg: float, logit_pos: float) -> float:
    """Ranking score ``p_pos - p_neg`` in [-1, 1]."""
    p_neg, p_pos = softmax2(logit_neg, logit_pos)
    return p_pos - p_neg


def score_and_rank(rows: Iterable[Tuple[str, str, float, float]], run_id: str) -> RankedRun:
    """Rank ``(topic_id, tweet_id, logit_neg, logit_pos)`` rows within each topic.

    Scores sort descending; equal scores keep input order. Topics appear in
    order of first occurrence.
    """
    topics: "OrderedDict[str, List[Tuple[str, float]]]" = OrderedDict()
    for topic_id, tweet_id, l_neg, l_pos in rows:
        if not (math.isfinite(l_neg) and math.isfinite(l_pos)):
            raise ValueError(f"non-finite logits for tweet {tweet_id}")
        topics.setdefault(topic_id, []).append((tweet_id, check_worthiness(l_neg, l_pos)))
    entries = []
    for topic_id, items in topics.items():
        ranked = sorted(items, key=lambda item: -item[1])  # stable
        entries.extend(RankedEntry(topic_id, tid, s, r) for r, (tid, s) in enumerate(ranked, start=1))
    return RankedRun(run_id, tuple(entries))


def rank_dataset(dataset, logits: Mapping[str, Tuple[float, float]], run_id: str) -> RankedRun:
    rows = []
    for t in dataset.tweets:
        if t.tweet_id not in logits:
            raise IdMismatch(missing=[t.tweet_id])
        l_neg, l_pos = logits[t.tweet_id]
        rows.append((t.topic_id, t.tweet_id, l_neg, l_pos))
    return score_and_rank(rows, run_id)


# --- per-topic metrics -------------------------------------------------------------

def average_precision(relevance: Sequence[int], n_relevant: int = None) -> float:
    """Mean of precision@rank over the relevant positions of a ranked list."""
    total = sum(1 for r in relevance if r) if n_relevant is None else n_relevant
    if total == 0:
        return 0.0
    hits = 0
    acc = 0.0
    for rank, rel in enumerate(relevance, start=1):
        if rel:
            hits += 1
            acc += hits / rank
    return acc / total


def reciprocal_rank(relevance: Sequence[int]) -> float:
    for rank, rel in enumerate(relevance, start=1):
        if rel:
            return 1.0 / rank
    return 0.0


def precision_at(relevance: Sequence[int], k: int) -> float:
    return sum(1 for r in relevance[:k] if r) / k


def r_precision(relevance: Sequence[int]) -> float:
    R = sum(1 for r in relevance if r)
    if R == 0:
        return 0.0
    return sum(1 for r in relevance[:R] if r) / R


# --- report --------------------------------------------------------------------------

@dataclass(frozen=True)
class MetricReport:
    map: float
    mrr: float
    r_precision: float
    p_at_k: Tuple[Tuple[int, float], ...]
    cw_precision: float
    cw_recall: float
    cw_f1: float

    def to_dict(self) -> "OrderedDict[str, float]":
        d: "OrderedDict[str, float]" = OrderedDict()
        d["map"] = self.map
        d["mrr"] = self.mrr
        d["r_precision"] = self.r_precision
        for k, v in self.p_at_k:
            d[f"p_at_{k}"] = v
        d["cw_precision"] = self.cw_precision
        d["cw_recall"] = self.cw_recall
        d["cw_f1"] = self.cw_f1
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def __getitem__(self, key: str) -> float:
        return self.to_dict()[key]

    @classmethod
    def from_dict(cls, d: Mapping[str, float]) -> "MetricReport":
        p_at = tuple(sorted((int(key[5:]), float(v)) for key, v in d.items() if key.startswith("p_at_")))
        return cls(d["map"], d["mrr"], d["r_precision"], p_at, d["cw_precision"], d["cw_recall"], d["cw_f1"])


def _gold_table(gold) -> Dict[str, int]:
    if isinstance(gold, Mapping):
        return dict(gold)
    return {t.tweet_id: t.label for t in gold.tweets}


def evaluate(run: RankedRun, gold, k_list: Sequence[int] = DEFAULT_K_LIST, skip_empty_topics: bool = False) -> MetricReport:
    """Score ``run`` against gold labels (a LabeledDataset or ``{tweet_id: label}``).

    Run and gold must cover exactly the same tweet ids.
    """
    labels = _gold_table(gold)
    run_ids = [e.tweet_id for e in run.entries]
    seen = set()
    dups = {i for i in run_ids if i in seen or seen.add(i)}
    missing = set(labels) - seen
    extra = seen - set(labels)
    if missing or extra or dups:
        raise IdMismatch(missing=missing, extra=extra | dups)

    per_topic = []
    for topic_id, entries in run.by_topic().items():
        entries = sorted(entries, key=lambda e: e.rank)
        rels = [labels[e.tweet_id] for e in entries]
        if skip_empty_topics and not any(rels):
            continue
        per_topic.append(rels)

    def mean(values):
        values = list(values)
        return sum(values) / len(values) if values else 0.0

    tp = fp = fn = 0
    for e in run.entries:
        predicted = e.score > 0
        actual = labels[e.tweet_id] == 1
        tp += predicted and actual
        fp += predicted and not actual
        fn += actual and not predicted
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0

    return MetricReport(
        map=mean(average_precision(r) for r in per_topic),
        mrr=mean(reciprocal_rank(r) for r in per_topic),
        r_precision=mean(r_precision(r) for r in per_topic),
        p_at_k=tuple((int(k), mean(precision_at(r, int(k)) for r in per_topic)) for k in k_list),
        cw_precision=precision,
        cw_recall=recall,
        cw_f1=f1,
    )


# --- run files -----------------------------------------------------------------------

def format_run(run: RankedRun) -> str:
    return "".join(
        f"{e.topic_id}\t{e.tweet_id}\t{e.score:.6f}\t{e.rank}\t{run.run_id}\n" for e in run.entries
    )


def write_run(run: RankedRun, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(format_run(run))


def read_run(path) -> RankedRun:
    """Parse a ``topic_id, tweet_id, score, rank, run_id`` file."""
    entries = []
    run_ids = set()
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n").rstrip("\r")
            if not line:
                continue
            cells = line.split("\t")
            if len(cells) != 5:
                raise ScoreFileError(line_no, f"run file rows need 5 columns, got {len(cells)}")
            topic_id, tweet_id, raw_score, raw_rank, run_id = cells
            try:
                score = float(raw_score)
                rank = int(raw_rank)
            except ValueError:
                raise ScoreFileError(line_no, "score must be a number and rank an integer") from None
            if not math.isfinite(score) or rank < 1:
                raise ScoreFileError(line_no, "score must be finite and rank >= 1")
            entries.append(RankedEntry(topic_id, tweet_id, score, rank))
            run_ids.add(run_id)
    if len(run_ids) > 1:
        raise ScoreFileError(0, f"run file mixes run ids {sorted(run_ids)}")
    return RankedRun(run_ids.pop() if run_ids else "", tuple(entries))
