"""``claimrank`` command line: one subcommand per pipeline operation.

Exit codes: 0 success, 1 usage error, 2 data or contract error. Data goes
to files or standard output; diagnostics go to standard error.
"""

import argparse
import json
import logging
import sys
from typing import List, Optional

from . import __version__
from .augment import AugmentConfig, ContextualAugmenter, balance_classes, contextual_substitute
from .classifier import PROFILES, TrainConfig, load_external_scores, load_model, save_model, train
from .corpus import format_dataset, parse_dataset, stats, write_dataset
from .errors import ClaimRankError
from .experiment import ARMS, ExperimentConfig, default_seed, load_config, render_report, run_experiment
from .lm_scorer import NGramScorer, external_scorer
from .rank_eval import DEFAULT_K_LIST, evaluate, format_run, rank_dataset, read_run
from .wordpiece import load_vocab, unk_report

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """Argument parser that reports usage errors with exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# --- argument types ---------------------------------------------------------------

def _probability(raw: str) -> float:
    try:
        value = float(raw)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {raw!r}") from None
    if not 0 <= value <= 1:
        raise argparse.ArgumentTypeError(f"probability must lie in [0, 1], got {raw}")
    return value


def _p_list(raw: str):
    out = []
    for part in raw.split(","):
        part = part.strip()
        out.append(None if part.lower() in ("null", "none") else _probability(part))
    return out


def _int_list(raw: str) -> List[int]:
    try:
        values = [int(x) for x in raw.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {raw!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("list must not be empty")
    return values


def _positive_int_list(raw: str) -> List[int]:
    values = _int_list(raw)
    if min(values) < 1:
        raise argparse.ArgumentTypeError("values must be positive")
    return values


def _positive_int(raw: str) -> int:
    try:
        value = int(raw)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {raw!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


# --- helpers ----------------------------------------------------------------------

def _seed(args) -> int:
    return args.seed if args.seed is not None else default_seed()


def _emit(text: str, path: Optional[str]) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _print_json(obj) -> None:
    sys.stdout.write(json.dumps(obj, indent=2) + "\n")


def _augment_config(args) -> AugmentConfig:
    return AugmentConfig(p=args.p, mode=args.mode, selection=args.selection, top_k=args.top_k, seed=_seed(args))


def _builtin_scorer(args, ds):
    if args.scorer_corpus:
        with open(args.scorer_corpus, "r", encoding="utf-8") as fh:
            texts = [line.rstrip("\n") for line in fh if line.strip()]
    else:
        texts = ds.texts
    return NGramScorer().fit(texts)


# --- subcommands --------------------------------------------------------------------

def cmd_ingest(args) -> int:
    ds = parse_dataset(args.input, args.format)
    _emit(format_dataset(ds), args.output)
    return EXIT_OK


def cmd_stats(args) -> int:
    s = stats(parse_dataset(args.input, args.format))
    _print_json({
        "n_samples": s.n_samples,
        "n_positive": s.n_positive,
        "positive_rate": s.positive_rate,
        "unique_word_count": s.unique_word_count,
    })
    return EXIT_OK


def cmd_tokens(args) -> int:
    vocab = load_vocab(args.vocab)
    ds = parse_dataset(args.input, args.format)
    report = unk_report(vocab, ds, lowercase=args.lowercase, backtrack=not args.no_backtrack)
    sys.stdout.write("total_pieces\tunk_pieces\tunk_percent\n" + report.to_tsv())
    return EXIT_OK


def cmd_augment(args) -> int:
    ds = parse_dataset(args.input, args.format)
    cfg = _augment_config(args)
    if args.scorer_cmd:
        with external_scorer(args.scorer_cmd, args.scorer_timeout) as scorer:
            tweets = [contextual_substitute(t, scorer, cfg, args.epoch) for t in ds.tweets]
    else:
        scorer = _builtin_scorer(args, ds)
        tweets = [contextual_substitute(t, scorer, cfg, args.epoch) for t in ds.tweets]
    _emit(format_dataset(ds.with_tweets(tweets)), args.output)
    logging.getLogger("claimrank").info("augmented %d tweets with seed %d", len(tweets), cfg.seed)
    return EXIT_OK


def cmd_balance(args) -> int:
    ds = parse_dataset(args.input, args.format)
    seed = _seed(args)

    def run(scorer):
        aug = ContextualAugmenter(scorer=scorer, p=args.p, mode=args.mode, selection=args.selection,
                                  top_k=args.top_k, seed=seed).fit(None)
        return balance_classes(ds, aug, strict_exceed=args.strict_exceed)

    if args.scorer_cmd:
        with external_scorer(args.scorer_cmd, args.scorer_timeout) as scorer:
            balanced, report = run(scorer)
    else:
        balanced, report = run(_builtin_scorer(args, ds))
    write_dataset(balanced, args.output)
    _print_json(dict(report.to_dict(), seed=seed, output=args.output))
    return EXIT_OK


def cmd_train(args) -> int:
    ds = parse_dataset(args.input, args.format)
    seed = _seed(args)
    model = train(ds, TrainConfig.for_profile(args.profile, seed=seed))
    save_model(model, args.output)
    _print_json({
        "model": args.output,
        "profile": args.profile,
        "seed": seed,
        "n_train_samples": len(ds),
        "initial_loss": model.initial_loss_,
        "final_loss": model.loss_curve_[-1] if model.loss_curve_ else None,
    })
    return EXIT_OK


def cmd_rank(args) -> int:
    ds = parse_dataset(args.input, args.format)
    if args.scores:
        logits = load_external_scores(args.scores, ds)
    else:
        model = load_model(args.model)
        raw = model.predict_logits(ds.texts)
        logits = {tid: (float(neg), float(pos)) for tid, (neg, pos) in zip(ds.ids, raw)}
    run = rank_dataset(ds, logits, args.run_id)
    _emit(format_run(run), args.output)
    return EXIT_OK


def cmd_eval(args) -> int:
    run = read_run(args.run)
    gold = parse_dataset(args.gold, args.format)
    report = evaluate(run, gold, args.k_list, skip_empty_topics=args.skip_empty_topics)
    sys.stdout.write(report.to_json())
    return EXIT_OK


def cmd_sweep(args) -> int:
    if args.config:
        cfg = load_config(args.config)
        data = cfg.to_dict()
    elif args.input:
        data = {"dataset": args.input}
    else:
        raise UsageError("sweep needs --config or --input")
    overrides = {
        "dataset": args.input,
        "format": args.format,
        "train_fraction": args.train_fraction,
        "p_values": args.p,
        "arms": args.arms,
        "profile": args.profile,
        "seeds": args.seed,
        "output_dir": args.output_dir,
        "scorer_corpus": args.scorer_corpus,
        "scorer_cmd": args.scorer_cmd,
        "selection": args.selection,
        "strict_exceed": args.strict_exceed,
        "k_list": args.k_list,
        "skip_empty_topics": args.skip_empty_topics or None,
        "workers": args.workers,
        "translator": args.translator,
        "test_dataset": args.test_dataset,
    }
    data.update({k: v for k, v in overrides.items() if v is not None})
    cfg = ExperimentConfig(**data)
    report = run_experiment(cfg)
    sys.stdout.write(render_report(report, args.report_format))
    return EXIT_OK


# --- parser -----------------------------------------------------------------------

def _add_input(p, required=True):
    p.add_argument("--input", required=required, help="dataset TSV")
    p.add_argument("--format", choices=("canonical", "checkthat"), default=None if not required else "canonical",
                   help="input format (default: canonical)")


def _add_seed(p, many=False):
    if many:
        p.add_argument("--seed", type=_int_list, default=None,
                       help="comma-separated seeds (default: five seeds from $CLAIMRANK_SEED or 42)")
    else:
        p.add_argument("--seed", type=int, default=None, help="random seed (default: $CLAIMRANK_SEED or 42)")


def _add_substitution(p):
    p.add_argument("--p", type=_probability, default=0.1, help="per-word substitution probability")
    p.add_argument("--mode", choices=("substitute", "insert"), default="substitute")
    p.add_argument("--selection", choices=("argmax", "sample_top_k"), default="sample_top_k")
    p.add_argument("--top-k", type=_positive_int, default=10)
    p.add_argument("--scorer-cmd", default=None, help="external candidate scorer command (JSON lines)")
    p.add_argument("--scorer-timeout", type=float, default=30.0)
    p.add_argument("--scorer-corpus", default=None, help="text file to fit the built-in scorer on")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="claimrank", description="Check-worthiness augmentation, ranking and evaluation.")
    parser.add_argument("--version", action="version", version=f"claimrank {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to standard error")
    sub = parser.add_subparsers(dest="command", metavar="SUBCOMMAND", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("ingest", help="validate a dataset and write it as canonical TSV")
    _add_input(p)
    p.add_argument("--output", default=None, help="output path (default: stdout)")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("stats", help="sample, positive and word counts as JSON")
    _add_input(p)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("tokens", help="WordPiece unknown-token report")
    _add_input(p)
    p.add_argument("--vocab", required=True, help="vocabulary file, one piece per line")
    p.add_argument("--lowercase", action="store_true")
    p.add_argument("--no-backtrack", action="store_true", help="strict greedy WordPiece without backtracking")
    p.set_defaults(func=cmd_tokens)

    p = sub.add_parser("augment", help="contextual substitution applied once to every tweet")
    _add_input(p)
    _add_substitution(p)
    _add_seed(p)
    p.add_argument("--epoch", type=_positive_int, default=1)
    p.add_argument("--output", default=None, help="output path (default: stdout)")
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("balance", help="augment positives epoch by epoch until they exceed negatives")
    _add_input(p)
    _add_substitution(p)
    _add_seed(p)
    p.add_argument("--strict-exceed", action=argparse.BooleanOptionalAction, default=True,
                   help="stop once positives > negatives (default); --no-strict-exceed stops at >=")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_balance)

    p = sub.add_parser("train", help="train the hashed linear classifier")
    _add_input(p)
    _add_seed(p)
    p.add_argument("--profile", choices=sorted(PROFILES), default="baseline_linear")
    p.add_argument("--output", required=True, help="model JSON path")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("rank", help="score and rank a dataset into a run file")
    _add_input(p)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--model", help="model JSON from 'train'")
    src.add_argument("--scores", help="external logits TSV: tweet_id, logit_neg, logit_pos")
    p.add_argument("--run-id", default="claimrank")
    p.add_argument("--output", default=None, help="run file path (default: stdout)")
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("eval", help="evaluate a run file against gold labels")
    p.add_argument("--run", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--format", choices=("canonical", "checkthat"), default="canonical")
    p.add_argument("--k-list", type=_positive_int_list, default=list(DEFAULT_K_LIST))
    p.add_argument("--skip-empty-topics", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="run the split/augment/train/rank/evaluate grid")
    p.add_argument("--config", default=None, help="JSON config; flags override its keys")
    _add_input(p, required=False)
    p.add_argument("--test-dataset", default=None)
    p.add_argument("--train-fraction", type=float, default=None)
    p.add_argument("--p", type=_p_list, default=None, help="comma-separated p values, 'null' for no augmentation")
    p.add_argument("--arms", type=lambda s: [a for a in s.split(",") if a], default=None,
                   help=f"comma-separated subset of {','.join(ARMS)}")
    p.add_argument("--profile", choices=sorted(PROFILES), default=None)
    _add_seed(p, many=True)
    p.add_argument("--output-dir", default=None)
    p.add_argument("--scorer-corpus", default=None)
    p.add_argument("--scorer-cmd", default=None)
    p.add_argument("--selection", choices=("argmax", "sample_top_k"), default=None)
    p.add_argument("--strict-exceed", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--translator", default=None)
    p.add_argument("--k-list", type=_positive_int_list, default=None)
    p.add_argument("--skip-empty-topics", action="store_true")
    p.add_argument("--workers", type=_positive_int, default=None)
    p.add_argument("--report-format", choices=("markdown", "tsv"), default="markdown")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"claimrank: error: {exc}\n")
        return EXIT_USAGE
    except (ClaimRankError, OSError) as exc:
        message = str(exc)
        name = type(exc).__name__
        sys.stderr.write(f"claimrank: {message if message.startswith(name) else f'{name}: {message}'}\n")
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
