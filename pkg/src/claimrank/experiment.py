"""Sweep harness: split, balance, train, rank and evaluate over arms, p values and seeds.

A sweep is a grid of independent *cells*. Each cell is one (arm, p, seed)
combination and owns a directory under ``<output_dir>/cells``. Per seed
there is one stratified split, shared by every cell of that seed and
persisted under ``<output_dir>/splits``. Cells run serially or in a process
pool; both produce the same bytes.

Arms
----
``null``
    No augmentation. Created for the ``null`` entry of ``p_values``.
``contextual``
    Contextual substitution at each non-null p.
``eda``
    One random EDA operation per augmented record, at each non-null p.
``backtranslate``
    Round trip through a pivot language; one cell per seed, no p.
"""

import hashlib
import json
import logging
import os
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .augment import (
    EDA_OPS,
    TRANSLATORS,
    ContextualAugmenter,
    HttpTranslator,
    back_translate,
    balance_classes,
    eda_op,
    load_lexicon,
    record_rng,
)
from .classifier import PROFILES, TrainConfig, save_model, train
from .corpus import LabeledDataset, concat, format_dataset, parse_dataset, stratified_split, write_dataset
from .errors import ClaimRankError, ExperimentError
from .lm_scorer import NGramScorer, external_scorer
from .rank_eval import DEFAULT_K_LIST, MetricReport, evaluate, rank_dataset, write_run

logger = logging.getLogger(__name__)

SEED_ENV = "CLAIMRANK_SEED"
FALLBACK_SEED = 42
DEFAULT_N_SEEDS = 5
DEFAULT_P_VALUES = (None, 0.1, 0.2, 0.3, 0.4, 0.5)
ARMS = ("contextual", "backtranslate", "eda")
ARM_ORDER = ("null",) + ARMS
TABLE_METRICS = ("cw_precision", "cw_recall", "cw_f1", "map")

# Execution settings; they never change results and stay out of the manifest.
_EXECUTION_KEYS = ("output_dir", "workers")


def default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None or not raw.strip():
        return FALLBACK_SEED
    try:
        return int(raw)
    except ValueError:
        raise ExperimentError(f"${SEED_ENV} must be an integer, got {raw!r}") from None


def default_seeds(n: int = DEFAULT_N_SEEDS) -> Tuple[int, ...]:
    head = default_seed()
    return tuple(head + i for i in range(n))


def p_tag(p: Optional[float]) -> str:
    return "null" if p is None else repr(float(p))


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything that determines a sweep.

    The first seven fields are the documented config-file keys. The rest
    have defaults that reproduce the standard protocol:

    ``scorer_corpus``
        Plain-text file (one text per line) to fit the n-gram scorer on, in
        place of the seed's train split. Use it for unlabeled background
        text, the desk-scale analogue of language-model pre-training data.
    ``test_dataset``
        Separate evaluation set (e.g. an organizer dev set) used as the
        hold-out instead of the internal split.
    ``train_on``
        ``"split"`` trains on the internal train split; ``"full"`` trains on
        the whole ``dataset`` and needs ``test_dataset``.
    ``dataset``
        One path or a list of paths; a list is concatenated in order.
    """

    dataset: Tuple[str, ...]
    train_fraction: float = 0.8
    p_values: Tuple[Optional[float], ...] = DEFAULT_P_VALUES
    arms: Tuple[str, ...] = ("contextual",)
    profile: str = "baseline_linear"
    seeds: Tuple[int, ...] = field(default_factory=default_seeds)
    output_dir: str = "sweep"
    format: str = "canonical"
    test_dataset: Optional[str] = None
    train_on: str = "split"
    scorer_corpus: Optional[str] = None
    scorer_cmd: Optional[str] = None
    scorer_timeout: float = 30.0
    selection: str = "sample_top_k"
    top_k: int = 10
    strict_exceed: bool = True
    eda_ops: Tuple[str, ...] = ("random_insert", "random_delete", "random_swap")
    lexicon: Optional[str] = None
    translator: str = "identity"
    pivot: str = "en"
    source_lang: str = "auto"
    k_list: Tuple[int, ...] = DEFAULT_K_LIST
    skip_empty_topics: bool = False
    workers: int = 1

    def __post_init__(self):
        fix = lambda name, value: object.__setattr__(self, name, value)  # noqa: E731
        fix("dataset", (self.dataset,) if isinstance(self.dataset, str) else tuple(self.dataset))
        fix("p_values", tuple(None if p is None else float(p) for p in self.p_values))
        fix("arms", tuple(self.arms))
        fix("seeds", tuple(int(s) for s in self.seeds))
        fix("eda_ops", tuple(self.eda_ops))
        fix("k_list", tuple(int(k) for k in self.k_list))

        if not self.dataset:
            raise ExperimentError("dataset must name at least one file")
        if not 0 < self.train_fraction < 1:
            raise ExperimentError("train_fraction must lie strictly between 0 and 1")
        if not self.p_values:
            raise ExperimentError("p_values must not be empty")
        if len(set(self.p_values)) != len(self.p_values):
            raise ExperimentError("p_values contains duplicates")
        for p in self.p_values:
            if p is not None and not 0 <= p <= 1:
                raise ExperimentError(f"p value {p} outside [0, 1]")
        unknown = [a for a in self.arms if a not in ARMS]
        if unknown:
            raise ExperimentError(f"unknown arms {unknown}; expected a subset of {list(ARMS)}")
        if len(set(self.arms)) != len(self.arms):
            raise ExperimentError("arms contains duplicates")
        if not self.seeds:
            raise ExperimentError("seeds must not be empty")
        if len(set(self.seeds)) != len(self.seeds):
            raise ExperimentError("seeds contains duplicates")
        if self.profile not in PROFILES:
            raise ExperimentError(f"unknown profile {self.profile!r}; expected one of {sorted(PROFILES)}")
        if self.train_on not in ("split", "full"):
            raise ExperimentError("train_on must be 'split' or 'full'")
        if self.train_on == "full" and self.test_dataset is None:
            raise ExperimentError("train_on='full' needs a test_dataset to evaluate on")
        if self.selection not in ("argmax", "sample_top_k"):
            raise ExperimentError("selection must be 'argmax' or 'sample_top_k'")
        if self.top_k < 1:
            raise ExperimentError("top_k must be >= 1")
        bad_ops = [op for op in self.eda_ops if op not in EDA_OPS]
        if bad_ops or not self.eda_ops:
            raise ExperimentError(f"eda_ops must be a non-empty subset of {list(EDA_OPS)}")
        if "synonym_replace" in self.eda_ops and self.lexicon is None:
            raise ExperimentError("eda op synonym_replace needs a lexicon")
        if self.translator not in TRANSLATORS and not self.translator.startswith(("http://", "https://")):
            raise ExperimentError(f"translator must be one of {sorted(TRANSLATORS)} or an http(s) endpoint")
        if not self.k_list or min(self.k_list) < 1:
            raise ExperimentError("k_list must hold positive integers")
        if self.workers < 1:
            raise ExperimentError("workers must be >= 1")

    def to_dict(self) -> dict:
        d = asdict(self)
        for key, value in d.items():
            if isinstance(value, tuple):
                d[key] = list(value)
        return d

    def recorded(self) -> dict:
        """The config as written to the manifest: execution settings removed."""
        d = self.to_dict()
        for key in _EXECUTION_KEYS:
            d.pop(key)
        return d

    def config_hash(self) -> str:
        blob = json.dumps(self.recorded(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()

    @classmethod
    def from_dict(cls, data: dict, base_dir: Optional[str] = None) -> "ExperimentConfig":
        """Build from config-file keys; relative paths resolve against ``base_dir``."""
        names = set(cls.__dataclass_fields__)
        unknown = sorted(set(data) - names)
        if unknown:
            raise ExperimentError(f"unknown config keys: {', '.join(unknown)}")
        if "dataset" not in data:
            raise ExperimentError("config needs a 'dataset' key")
        data = dict(data)
        if base_dir is not None:
            def resolve(path):
                return path if path is None or os.path.isabs(path) else os.path.join(base_dir, path)

            ds = data["dataset"]
            data["dataset"] = [resolve(p) for p in ([ds] if isinstance(ds, str) else ds)]
            for key in ("test_dataset", "scorer_corpus", "lexicon", "output_dir"):
                if key in data:
                    data[key] = resolve(data[key])
        try:
            return cls(**data)
        except TypeError as exc:
            raise ExperimentError(f"bad config value: {exc}") from exc


def load_config(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ExperimentError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise ExperimentError(f"{path}: config must be a JSON object")
    return ExperimentConfig.from_dict(data, base_dir=os.path.dirname(os.path.abspath(path)))


# --- cells -----------------------------------------------------------------------

@dataclass(frozen=True)
class Cell:
    arm: str
    p: Optional[float]
    seed: int

    @property
    def name(self) -> str:
        return f"{self.arm}_p{p_tag(self.p)}_seed{self.seed}"

    @property
    def run_id(self) -> str:
        return f"{self.arm}-p{p_tag(self.p)}-s{self.seed}"


def plan_cells(cfg: ExperimentConfig) -> List[Cell]:
    """All cells in canonical order: seed, then arm, then p in config order."""
    cells = []
    non_null = [p for p in cfg.p_values if p is not None]
    for seed in cfg.seeds:
        if None in cfg.p_values:
            cells.append(Cell("null", None, seed))
        for arm in cfg.arms:
            if arm == "backtranslate":
                cells.append(Cell(arm, None, seed))
            else:
                cells.extend(Cell(arm, p, seed) for p in non_null)
    return cells


@dataclass(frozen=True)
class CellResult:
    arm: str
    p: Optional[float]
    seed: int
    n_train_samples: int
    metrics: MetricReport
    balance: Dict[str, int]
    directory: str
    seconds: float = field(default=0.0, compare=False)

    def to_dict(self) -> dict:
        return {
            "arm": self.arm,
            "p": self.p,
            "seed": self.seed,
            "n_train_samples": self.n_train_samples,
            "balance": dict(self.balance),
            "metrics": dict(self.metrics.to_dict()),
        }


class _EdaAugmenter:
    def __init__(self, ops, p, seed, synonyms=None, vocabulary=None):
        self.ops, self.p, self.seed = ops, p, seed
        self.synonyms, self.vocabulary = synonyms, vocabulary

    def __call__(self, tweet, epoch=1):
        pick = record_rng(self.seed, tweet.tweet_id, epoch, "eda-op")
        op = self.ops[int(pick.integers(len(self.ops)))]
        return eda_op(tweet, op, self.p, self.seed, self.synonyms, self.vocabulary, epoch)


def _translator(spec: str):
    if spec in TRANSLATORS:
        return TRANSLATORS[spec]()
    return HttpTranslator(spec)


def _fit_scorer(texts) -> NGramScorer:
    return NGramScorer().fit(texts)


def _augment(cfg: ExperimentConfig, cell: Cell, train_split: LabeledDataset, scorer):
    if cell.arm == "null":
        return train_split, {"epochs_run": 0, "augmented_generated": 0,
                             "final_positive": int(train_split.labels.sum()),
                             "final_negative": len(train_split) - int(train_split.labels.sum())}
    if cell.arm == "contextual":
        if cfg.scorer_cmd is not None:
            with external_scorer(cfg.scorer_cmd, cfg.scorer_timeout) as ext:
                aug = ContextualAugmenter(scorer=ext, p=cell.p, selection=cfg.selection, top_k=cfg.top_k,
                                          seed=cell.seed).fit(None)
                out, report = balance_classes(train_split, aug, cfg.strict_exceed)
            return out, report.to_dict()
        aug = ContextualAugmenter(scorer=scorer, p=cell.p, selection=cfg.selection, top_k=cfg.top_k,
                                  seed=cell.seed).fit(None)
    elif cell.arm == "eda":
        synonyms = load_lexicon(cfg.lexicon) if cfg.lexicon else None
        vocabulary = sorted({w for text in train_split.texts for w in text.split()})
        aug = _EdaAugmenter(cfg.eda_ops, cell.p, cell.seed, synonyms, vocabulary)
    else:
        translator = _translator(cfg.translator)

        def aug(tweet, epoch=1):
            return back_translate(tweet, translator, cfg.pivot, cfg.source_lang, epoch)
    out, report = balance_classes(train_split, aug, cfg.strict_exceed)
    return out, report.to_dict()


def check_leakage(train_set: LabeledDataset, holdout: LabeledDataset, cell_label: str = "") -> None:
    """Fail if any training row, or the source of any augmented row, is in the hold-out."""
    held = set(holdout.ids)
    for t in train_set.tweets:
        source = t.tweet_id.split("#", 1)[0] if t.origin != "original" else t.tweet_id
        if t.tweet_id in held or source in held:
            raise ExperimentError(f"{cell_label}: training row {t.tweet_id} leaks into the hold-out split")


def _write_json(path, obj) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def run_cell(cfg: ExperimentConfig, cell: Cell, train_split: LabeledDataset, holdout: LabeledDataset,
             scorer=None) -> CellResult:
    """Balance, train, rank and evaluate one cell; write its artifacts."""
    label = f"arm={cell.arm} p={p_tag(cell.p)} seed={cell.seed}"
    rel_dir = os.path.join("cells", cell.name)
    out_dir = os.path.join(cfg.output_dir, rel_dir)
    os.makedirs(out_dir, exist_ok=True)
    started = time.perf_counter()
    try:
        train_set, balance = _augment(cfg, cell, train_split, scorer)
        check_leakage(train_set, holdout, label)
        if cell.arm == "null" and format_dataset(train_set) != format_dataset(train_split):
            raise ExperimentError(f"{label}: null-arm train set differs from the raw split")
        write_dataset(train_set, os.path.join(out_dir, "train.tsv"))

        model = train(train_set, TrainConfig.for_profile(cfg.profile, seed=cell.seed))
        save_model(model, os.path.join(out_dir, "model.json"))

        logits = model.predict_logits(holdout.texts)
        table = {tid: (float(neg), float(pos)) for tid, (neg, pos) in zip(holdout.ids, logits)}
        run = rank_dataset(holdout, table, cell.run_id)
        write_run(run, os.path.join(out_dir, "run.tsv"))

        metrics = evaluate(run, holdout, cfg.k_list, cfg.skip_empty_topics)
        with open(os.path.join(out_dir, "metrics.json"), "w", encoding="utf-8", newline="") as fh:
            fh.write(metrics.to_json())
        _write_json(os.path.join(out_dir, "balance.json"), balance)
    except ExperimentError:
        raise
    except ClaimRankError as exc:
        raise ExperimentError(f"{label}: {type(exc).__name__}: {exc}") from exc
    return CellResult(cell.arm, cell.p, cell.seed, len(train_set), metrics, balance, rel_dir,
                      time.perf_counter() - started)


# --- sweep ----------------------------------------------------------------------

def _read_lines(path) -> List[str]:
    with open(path, "r", encoding="utf-8") as fh:
        return [line.rstrip("\n") for line in fh if line.strip()]


def _sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


# Per-process state for pool workers, installed once by the initializer.
_WORKER: dict = {}


def _init_worker(cfg, splits, scorers):
    _WORKER.update(cfg=cfg, splits=splits, scorers=scorers)


def _run_in_worker(cell: Cell) -> CellResult:
    train_split, holdout = _WORKER["splits"][cell.seed]
    return run_cell(_WORKER["cfg"], cell, train_split, holdout, _WORKER["scorers"].get(cell.seed))


@dataclass(frozen=True)
class MedianRow:
    arm: str
    p: Optional[float]
    n_seeds: int
    n_train_samples: float
    metrics: Dict[str, float]


@dataclass(frozen=True)
class SweepReport:
    dataset_name: str
    cells: Tuple[CellResult, ...]
    medians: Tuple[MedianRow, ...]

    def samples_vs_score(self) -> Tuple[str, float, float]:
        """``(dataset, n_train_samples, map)`` of the (arm, p) with the best median map."""
        best = max(self.medians, key=lambda row: row.metrics["map"])
        return self.dataset_name, best.n_train_samples, best.metrics["map"]

    def median(self, arm: str, p: Optional[float] = None) -> MedianRow:
        for row in self.medians:
            if row.arm == arm and row.p == p:
                return row
        raise KeyError((arm, p))

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset_name,
            "cells": [c.to_dict() for c in self.cells],
            "medians": [
                {"arm": r.arm, "p": r.p, "n_seeds": r.n_seeds, "n_train_samples": r.n_train_samples,
                 "metrics": dict(r.metrics)}
                for r in self.medians
            ],
        }


def aggregate(cells: Sequence[CellResult], dataset_name: str = "dataset") -> SweepReport:
    """Median of every metric over seeds for each (arm, p); independent of cell order."""
    groups: Dict[Tuple[str, Optional[float]], List[CellResult]] = {}
    for c in cells:
        groups.setdefault((c.arm, c.p), []).append(c)

    def order(key):
        arm, p = key
        return ARM_ORDER.index(arm), -1.0 if p is None else p

    medians = []
    for key in sorted(groups, key=order):
        members = groups[key]
        names = list(members[0].metrics.to_dict())
        metrics = {m: float(statistics.median(c.metrics[m] for c in members)) for m in names}
        n_train = float(statistics.median(c.n_train_samples for c in members))
        medians.append(MedianRow(key[0], key[1], len(members), n_train, metrics))
    ordered = sorted(cells, key=lambda c: (c.seed,) + order((c.arm, c.p)))
    return SweepReport(dataset_name, tuple(ordered), tuple(medians))


def _load_inputs(cfg: ExperimentConfig):
    parts = [parse_dataset(path, cfg.format) for path in cfg.dataset]
    data = parts[0] if len(parts) == 1 else concat("+".join(p.name for p in parts), *parts)
    test = parse_dataset(cfg.test_dataset, cfg.format) if cfg.test_dataset else None
    return data, test


def run_experiment(cfg: ExperimentConfig) -> SweepReport:
    """Run every cell, persist all artifacts and return the aggregated report.

    Files written under ``cfg.output_dir``: ``splits/seed<N>/{train,holdout}.tsv``,
    one directory per cell (``train.tsv``, ``model.json``, ``run.tsv``,
    ``metrics.json``, ``balance.json``), ``report.json``, ``report.tsv``,
    ``report.md`` and ``manifest.json``.
    """
    wall_start = time.perf_counter()
    data, test = _load_inputs(cfg)
    os.makedirs(cfg.output_dir, exist_ok=True)

    splits = {}
    split_paths = {}
    for seed in cfg.seeds:
        try:
            train_split, holdout = stratified_split(data, cfg.train_fraction, seed)
        except ClaimRankError as exc:
            raise ExperimentError(f"seed={seed}: {type(exc).__name__}: {exc}") from exc
        if cfg.train_on == "full":
            train_split = data
        if test is not None:
            holdout = test
        rel = os.path.join("splits", f"seed{seed}")
        os.makedirs(os.path.join(cfg.output_dir, rel), exist_ok=True)
        write_dataset(train_split, os.path.join(cfg.output_dir, rel, "train.tsv"))
        write_dataset(holdout, os.path.join(cfg.output_dir, rel, "holdout.tsv"))
        splits[seed] = (train_split, holdout)
        split_paths[str(seed)] = {"train": os.path.join(rel, "train.tsv"), "holdout": os.path.join(rel, "holdout.tsv")}

    cells = plan_cells(cfg)
    scorers = {}
    if cfg.scorer_cmd is None and any(c.arm == "contextual" for c in cells):
        if cfg.scorer_corpus is not None:
            shared = _fit_scorer(_read_lines(cfg.scorer_corpus))
            scorers = {seed: shared for seed in cfg.seeds}
        else:
            scorers = {seed: _fit_scorer(splits[seed][0].texts) for seed in cfg.seeds}

    logger.info("sweep: %d cells, %d worker(s)", len(cells), cfg.workers)
    if cfg.workers == 1 or len(cells) == 1:
        results = [run_cell(cfg, c, *splits[c.seed], scorers.get(c.seed)) for c in cells]
    else:
        with ProcessPoolExecutor(max_workers=cfg.workers, initializer=_init_worker,
                                 initargs=(cfg, splits, scorers)) as pool:
            results = list(pool.map(_run_in_worker, cells))

    report = aggregate(results, data.name)
    _write_json(os.path.join(cfg.output_dir, "report.json"), report.to_dict())
    render_report(report, "tsv", os.path.join(cfg.output_dir, "report.tsv"))
    render_report(report, "markdown", os.path.join(cfg.output_dir, "report.md"))

    manifest = {
        "config": cfg.recorded(),
        "config_hash": cfg.config_hash(),
        "seeds": list(cfg.seeds),
        "inputs": {path: _sha256_file(path) for path in cfg.dataset + ((cfg.test_dataset,) if cfg.test_dataset else ())},
        "splits": split_paths,
        "cells": [
            {"arm": r.arm, "p": r.p, "seed": r.seed, "dir": r.directory,
             "files": {name: os.path.join(r.directory, name)
                       for name in ("train.tsv", "model.json", "run.tsv", "metrics.json", "balance.json")}}
            for r in results
        ],
        "reports": {"json": "report.json", "tsv": "report.tsv", "markdown": "report.md"},
        "timing": {
            "total_seconds": round(time.perf_counter() - wall_start, 3),
            "cells": {r.directory: round(r.seconds, 3) for r in results},
        },
    }
    _write_json(os.path.join(cfg.output_dir, "manifest.json"), manifest)
    return report


# --- rendering ------------------------------------------------------------------

def _fmt(x: float) -> str:
    return f"{x:.4f}"


def _column(row: MedianRow) -> str:
    if row.arm == "backtranslate":
        return "bt"
    return p_tag(row.p)


def render_tsv(report: SweepReport) -> str:
    """One line per (arm, p) with the median of every metric."""
    if not report.medians:
        return ""
    names = list(report.medians[0].metrics)
    lines = ["\t".join(["arm", "p", "n_seeds", "n_train_samples"] + names)]
    for row in report.medians:
        lines.append("\t".join([row.arm, p_tag(row.p), str(row.n_seeds), f"{row.n_train_samples:g}"]
                               + [_fmt(row.metrics[m]) for m in names]))
    return "\n".join(lines) + "\n"


def _md_table(header: Sequence[str], rows: Sequence[Sequence[str]]) -> List[str]:
    out = ["| " + " | ".join(header) + " |", "|" + "|".join("---" for _ in header) + "|"]
    out.extend("| " + " | ".join(r) + " |" for r in rows)
    return out


def render_markdown(report: SweepReport) -> str:
    """Per arm: metrics as rows, the null column then one column per p (medians)."""
    lines = [f"# Sweep report: {report.dataset_name}", ""]
    null_rows = [r for r in report.medians if r.arm == "null"]
    arms = [a for a in ARMS if any(r.arm == a for r in report.medians)]
    sections = [(a, null_rows + [r for r in report.medians if r.arm == a]) for a in arms]
    if not arms and null_rows:
        sections = [("null", null_rows)]
    for arm, cols in sections:
        lines.append(f"## {arm}")
        lines.append("")
        header = ["metric"] + [_column(r) for r in cols]
        body = [[m] + [_fmt(r.metrics[m]) for r in cols] for m in TABLE_METRICS]
        body.append(["n_train_samples"] + [f"{r.n_train_samples:g}" for r in cols])
        lines.extend(_md_table(header, body))
        lines.append("")
    lines.append("## samples_vs_score")
    lines.append("")
    lines.extend(_samples_rows_md([report.samples_vs_score()]))
    return "\n".join(lines) + "\n"


def samples_vs_score(reports: Sequence[SweepReport]) -> List[Tuple[str, float, float]]:
    """One row per report, sorted by map ascending (ties by dataset name)."""
    rows = [r.samples_vs_score() for r in reports]
    return sorted(rows, key=lambda row: (row[2], row[0]))


def _samples_rows_md(rows) -> List[str]:
    return _md_table(["dataset", "n_train_samples", "map"], [[d, f"{n:g}", _fmt(m)] for d, n, m in rows])


def render_samples_vs_score(reports: Sequence[SweepReport], format: str = "markdown") -> str:
    rows = samples_vs_score(reports)
    if format == "markdown":
        return "\n".join(_samples_rows_md(rows)) + "\n"
    if format == "tsv":
        return "".join(["dataset\tn_train_samples\tmap\n"] + [f"{d}\t{n:g}\t{_fmt(m)}\n" for d, n, m in rows])
    raise ValueError(f"format must be 'tsv' or 'markdown', got {format!r}")


def render_report(report: SweepReport, format: str = "markdown", path=None) -> str:
    """Serialize ``report``; also write it to ``path`` when given."""
    if format == "markdown":
        text = render_markdown(report)
    elif format == "tsv":
        text = render_tsv(report)
    else:
        raise ValueError(f"format must be 'tsv' or 'markdown', got {format!r}")
    if path is not None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text


def report_from_dir(output_dir) -> SweepReport:
    """Rebuild a :class:`SweepReport` from a finished sweep directory."""
    with open(os.path.join(output_dir, "report.json"), "r", encoding="utf-8") as fh:
        data = json.load(fh)
    cells = [
        CellResult(c["arm"], c["p"], c["seed"], c["n_train_samples"], MetricReport.from_dict(c["metrics"]),
                   c["balance"], os.path.join("cells", Cell(c["arm"], c["p"], c["seed"]).name))
        for c in data["cells"]
    ]
    return aggregate(cells, data["dataset"])


__all__ = [
    "ARMS",
    "Cell",
    "CellResult",
    "ExperimentConfig",
    "SweepReport",
    "aggregate",
    "check_leakage",
    "default_seeds",
    "load_config",
    "plan_cells",
    "render_report",
    "render_samples_vs_score",
    "report_from_dir",
    "run_cell",
    "run_experiment",
    "samples_vs_score",
]
