"""Acceptance criteria, one test per criterion.

Each test tags itself with ``record_property("criterion", n)``; conftest
prints a PASS/FAIL line per criterion at the end of the run. Criterion 10
(suite wall-clock and no network) is checked by conftest for the whole
session.
"""

import json
import math
import os
import random
import socket
import time
from fractions import Fraction

import numpy as np
import pytest
import scipy.sparse as sp

import oracles
from claimrank.augment import AugmentConfig, balance_classes, contextual_substitute, record_rng, substitute_text
from claimrank.classifier import AdamState, adam_step, bce_loss_and_grad
from claimrank.cli import main
from claimrank.corpus import LabeledDataset, Tweet, parse_dataset, write_dataset
from claimrank.experiment import ExperimentConfig, run_experiment
from claimrank.lm_scorer import train_ngram
from claimrank.rank_eval import average_precision, evaluate, score_and_rank, softmax2
from claimrank.synthetic import make_corpora, make_imbalanced_corpus
from claimrank.wordpiece import SubwordVocab, load_vocab, tokenize_word, unk_report

pytestmark = pytest.mark.acceptance


@pytest.fixture
def criterion(record_property):
    def tag(number, title):
        record_property("criterion", number)
        record_property("title", title)

    def detail(text):
        record_property("detail", text)

    tag.detail = detail
    return tag


# --- 1 ------------------------------------------------------------------------------

def _oracle_report(rows, gold, k_list):
    """Per-topic metrics computed from scratch: group, sort, then apply the definitions."""
    topics = {}
    for topic, tid, score in rows:
        topics.setdefault(topic, []).append((tid, score))
    per = []
    for items in topics.values():
        # descending score, ties by input position
        order = sorted(range(len(items)), key=lambda i: (-items[i][1], i))
        per.append([gold[items[i][0]] for i in order])
    return {
        "map": oracles.mean(oracles.ap(r) for r in per),
        "mrr": oracles.mean(oracles.rr(r) for r in per),
        "r_precision": oracles.mean(oracles.rp(r) for r in per),
        **{f"p_at_{k}": oracles.mean(oracles.p_at(r, k) for r in per) for k in k_list},
    }


def test_criterion_1_metric_oracle(criterion):
    criterion(1, "metric oracle equivalence (1,000 random instances, 1e-12)")
    started = time.perf_counter()
    rng = random.Random(20210901)
    k_list = (1, 3, 5, 10, 20, 30)
    worst = 0.0
    for _ in range(1000):
        n = rng.randint(1, 12)
        n_topics = rng.randint(1, 3)
        rows, gold = [], {}
        for i in range(n):
            topic = f"T{rng.randrange(n_topics)}"
            # few distinct scores so ties are common
            score = rng.choice([-0.8, -0.1, 0.0, 0.3, 0.9])
            rows.append((topic, f"id{i}", score))
            gold[f"id{i}"] = rng.randint(0, 1)
        # logits whose check-worthiness equals ``score``: l_pos = log((1 + s) / (1 - s))
        run = score_and_rank([(t, i, 0.0, math.log((1 + s) / (1 - s))) for t, i, s in rows], "oracle")
        got = evaluate(run, gold, k_list).to_dict()
        want = _oracle_report(rows, gold, k_list)
        for key, value in want.items():
            worst = max(worst, abs(got[key] - value))
    assert worst <= 1e-12
    assert round(average_precision([1, 0, 1]), 6) == 0.833333
    assert float(Fraction(5, 6)) == pytest.approx(average_precision([1, 0, 1]), abs=1e-15)
    elapsed = time.perf_counter() - started
    criterion.detail(f"max abs diff {worst:.1e}, {elapsed:.2f}s")
    assert elapsed < 10


# --- 2 ------------------------------------------------------------------------------

def test_criterion_2_table3_directionality(criterion, tmp_path):
    criterion(2, "p=0.1 beats null on median cw_recall and cw_f1; cw_f1(0.1) >= cw_f1(0.5)")
    started = time.perf_counter()
    labeled, background = make_corpora(n_samples=2000, positive_rate=0.13, seed=0)
    assert len(labeled) == 2000 and int(labeled.labels.sum()) == 260
    write_dataset(labeled, tmp_path / "corpus.tsv")
    (tmp_path / "background.txt").write_text("\n".join(background) + "\n", encoding="utf-8")

    cfg = ExperimentConfig(
        dataset=str(tmp_path / "corpus.tsv"),
        p_values=[None, 0.1, 0.5],
        arms=["contextual"],
        seeds=[0, 1, 2, 3, 4],
        scorer_corpus=str(tmp_path / "background.txt"),
        output_dir=str(tmp_path / "sweep"),
    )
    report = run_experiment(cfg)
    null, p01, p05 = (report.median(a, p).metrics for a, p in (("null", None), ("contextual", 0.1), ("contextual", 0.5)))
    elapsed = time.perf_counter() - started
    criterion.detail(
        f"recall {null['cw_recall']:.3f}->{p01['cw_recall']:.3f}, "
        f"f1 {null['cw_f1']:.3f}->{p01['cw_f1']:.3f}, f1(0.5) {p05['cw_f1']:.3f}, {elapsed:.0f}s"
    )
    assert p01["cw_recall"] > null["cw_recall"]
    assert p01["cw_f1"] > null["cw_f1"]
    assert p01["cw_f1"] >= p05["cw_f1"]
    assert elapsed < 180


# --- 3 ------------------------------------------------------------------------------

class _EchoScorer:
    def score_candidates(self, left, right, top_k):
        return [("X", 0.0)]


def test_criterion_3_balancing_arithmetic(criterion):
    criterion(3, "balancing loop arithmetic for (10,25), (30,25), (1,100)")

    def aug(tweet, epoch):
        return contextual_substitute(tweet, _EchoScorer(), AugmentConfig(p=0.5), epoch)

    expected = {(10, 25): (2, 20), (30, 25): (0, 0), (1, 100): (100, 100)}
    for (n_pos, n_neg), (epochs, added) in expected.items():
        rows = [Tweet("T", f"p{i}", f"claim {i}", 1) for i in range(n_pos)]
        rows += [Tweet("T", f"n{i}", f"chatter {i}", 0) for i in range(n_neg)]
        out, report = balance_classes(LabeledDataset("d", tuple(rows)), aug)
        # closed form: smallest e with n_pos * (1 + e) > n_neg
        closed = 0 if n_pos > n_neg else n_neg // n_pos
        assert report.epochs_run == epochs == closed
        assert report.augmented_generated == added == epochs * n_pos
        assert report.final_positive >= report.final_negative
        assert len(out) == n_pos + n_neg + added


# --- 4 ------------------------------------------------------------------------------

def test_criterion_4_substitution_rate(criterion):
    criterion(4, "substitution fraction at p=0.1 within 0.1 +- 0.012 over >= 10,000 tokens")
    labeled = make_imbalanced_corpus(1200, 0.13, seed=11)
    scorer = train_ngram(labeled)
    cfg = AugmentConfig(p=0.1, seed=4)
    eligible = substituted = 0
    for t in labeled.tweets:
        _, stats = substitute_text(t.text, scorer, cfg, record_rng(cfg.seed, t.tweet_id, 1, "ctx"))
        eligible += stats.eligible
        substituted += stats.substituted
    rate = substituted / eligible
    bound = 4 * math.sqrt(0.1 * 0.9 / eligible)
    criterion.detail(f"{substituted}/{eligible} = {rate:.4f}, bound {bound:.4f}")
    assert eligible >= 10_000
    assert abs(rate - 0.1) <= 0.012
    assert abs(rate - 0.1) <= bound


# --- 5 ------------------------------------------------------------------------------

def test_criterion_5_tokenizer(criterion, vocab_path, unk_fixture_path):
    criterion(5, "WordPiece decompositions, hand-counted UNK fixture, monotone UNK property")
    vocab = load_vocab(vocab_path)
    assert tokenize_word(vocab, "unaffable", backtrack=False) == ["un", "##aff", "##able"]
    assert tokenize_word(vocab, "playing", backtrack=False) == ["play", "##ing"]
    report = unk_report(vocab, parse_dataset(unk_fixture_path))
    assert (report.total_pieces, report.unk_pieces) == (64, 7)

    rng = np.random.default_rng(5)
    alphabet = list("abcde")

    def piece(max_len):
        return "".join(rng.choice(alphabet, size=int(rng.integers(1, max_len + 1))))

    for _ in range(200):
        base = {("##" if rng.random() < 0.5 else "") + piece(3) for _ in range(int(rng.integers(0, 15)))}
        small = SubwordVocab(tuple(["[UNK]"] + sorted(base)))
        large = small.extended(("##" if rng.random() < 0.5 else "") + piece(3) for _ in range(int(rng.integers(1, 8))))
        text = " ".join(piece(8) for _ in range(int(rng.integers(1, 12))))
        assert unk_report(large, [text]).unk_pieces <= unk_report(small, [text]).unk_pieces


# --- 6 ------------------------------------------------------------------------------

def _reference_adam(theta, grad, m, v, t, lr, b1, b2, eps):
    m_new = [b1 * mi + (1 - b1) * gi for mi, gi in zip(m, grad)]
    v_new = [b2 * vi + (1 - b2) * gi * gi for vi, gi in zip(v, grad)]
    out = []
    for th, mi, vi in zip(theta, m_new, v_new):
        m_hat = mi / (1 - b1 ** t)
        v_hat = vi / (1 - b2 ** t)
        out.append(th - lr * m_hat / (math.sqrt(v_hat) + eps))
    return out, m_new, v_new


def test_criterion_6_gradients_and_adam(criterion):
    criterion(6, "BCE gradient vs central differences (1e-5); Adam step vs reference (1e-10)")
    rng = np.random.default_rng(6)
    worst = 0.0
    for _ in range(100):
        n, d = int(rng.integers(1, 9)), int(rng.integers(1, 7))
        X = sp.csr_matrix(rng.normal(size=(n, d)) * (rng.random((n, d)) < 0.7))
        y = rng.integers(0, 2, size=n).astype(float)
        w, b = rng.normal(size=d), float(rng.normal())
        _, gw, gb = bce_loss_and_grad(w, b, X, y)
        h = 1e-4
        params = list(w) + [b]
        analytic = list(gw) + [gb]
        for j in range(d + 1):
            up, down = np.array(params), np.array(params)
            up[j] += h
            down[j] -= h
            f_up = bce_loss_and_grad(up[:d], up[d], X, y)[0]
            f_down = bce_loss_and_grad(down[:d], down[d], X, y)[0]
            numeric = (f_up - f_down) / (2 * h)
            # relative error, floored at 1 so vanishing gradients compare absolutely
            rel = abs(numeric - analytic[j]) / max(1.0, abs(numeric), abs(analytic[j]))
            worst = max(worst, rel)
    assert worst <= 1e-5

    theta = rng.normal(size=5)
    grad = rng.normal(size=5)
    state = AdamState.zeros(5)
    state.m[:] = rng.normal(size=5) * 0.1
    state.v[:] = rng.random(5) * 0.1
    state.t = 3
    ref, _, _ = _reference_adam(list(theta), list(grad), list(state.m), list(state.v), 4, 0.05, 0.9, 0.999, 1e-8)
    adam_step(theta, grad, state, lr=0.05, beta1=0.9, beta2=0.999, eps=1e-8)
    adam_diff = max(abs(a - r) for a, r in zip(theta, ref))
    criterion.detail(f"max rel grad err {worst:.1e}, adam diff {adam_diff:.1e}")
    assert adam_diff <= 1e-10


# --- 7 and 8 ------------------------------------------------------------------------

@pytest.fixture(scope="module")
def sweeps(tmp_path_factory):
    root = tmp_path_factory.mktemp("sweeps")
    write_dataset(make_imbalanced_corpus(240, 0.15, seed=8, name="det"), root / "data.tsv")
    config = {
        "dataset": str(root / "data.tsv"),
        "train_fraction": 0.8,
        "p_values": [None, 0.1, 0.3],
        "arms": ["contextual", "eda", "backtranslate"],
        "profile": "baseline_linear",
        "seeds": [1, 2],
    }
    outputs = {}
    for name, workers in (("serial_a", 1), ("serial_b", 1), ("parallel", 4)):
        path = root / f"{name}.json"
        path.write_text(json.dumps(dict(config, output_dir=str(root / name))))
        assert main(["sweep", "--config", str(path), "--workers", str(workers)]) == 0
        outputs[name] = root / name
    return outputs


def _tree(path):
    files = {}
    for dirpath, _, names in os.walk(path):
        for name in names:
            full = os.path.join(dirpath, name)
            rel = os.path.relpath(full, path)
            data = open(full, "rb").read()
            if rel == "manifest.json":
                manifest = json.loads(data)
                manifest.pop("timing")
                data = json.dumps(manifest, sort_keys=True).encode()
            files[rel] = data
    return files


def test_criterion_7_determinism(criterion, sweeps, capsys):
    criterion(7, "repeated and --workers 4 sweeps are byte-identical (timing excluded)")
    capsys.readouterr()
    a, b, par = (_tree(sweeps[k]) for k in ("serial_a", "serial_b", "parallel"))
    runs = [k for k in a if k.endswith("run.tsv")]
    criterion.detail(f"{len(a)} files, {len(runs)} run files")
    assert len(runs) == 2 * (1 + 2 + 2 + 1)
    assert a == b
    assert a == par


def test_criterion_8_leakage_guard(criterion, sweeps):
    criterion(8, "no augmented id in any holdout; null-arm train equals raw split")
    out = sweeps["serial_a"]
    manifest = json.loads((out / "manifest.json").read_text())
    checked = 0
    for cell in manifest["cells"]:
        split = manifest["splits"][str(cell["seed"])]
        holdout = set(parse_dataset(out / split["holdout"]).ids)
        train = parse_dataset(out / cell["files"]["train.tsv"])
        generated = [t for t in train.tweets if t.origin != "original"]
        assert not holdout & {t.tweet_id for t in train.tweets}
        assert not holdout & {t.tweet_id.split("#", 1)[0] for t in generated}
        if cell["arm"] == "null":
            raw = (out / split["train"]).read_bytes()
            assert (out / cell["files"]["train.tsv"]).read_bytes() == raw
        else:
            assert generated
        checked += 1
    criterion.detail(f"{checked} cells")


# --- 9 ------------------------------------------------------------------------------

def test_criterion_9_softmax2(criterion):
    criterion(9, "softmax2 symmetry, shift invariance and (0,2) value")
    assert softmax2(0.0, 0.0) == (0.5, 0.5)
    rng = np.random.default_rng(9)
    worst = 0.0
    for _ in range(1000):
        a, b = rng.normal(scale=20, size=2)
        c = rng.normal(scale=100)
        p, q = softmax2(a, b), softmax2(a + c, b + c)
        worst = max(worst, abs(p[0] - q[0]), abs(p[1] - q[1]))
    assert worst <= 1e-12
    assert abs(softmax2(0.0, 2.0)[1] - 0.880797) <= 1e-6
    assert abs(softmax2(0.0, 2.0)[1] - math.exp(2) / (1 + math.exp(2))) <= 1e-9
    criterion.detail(f"max shift diff {worst:.1e}")


# --- 10 -----------------------------------------------------------------------------

def test_network_is_blocked():
    # Part of criterion 10: conftest refuses internet sockets for the whole session.
    with socket.socket(socket.AF_INET, socket.SOCK_STREAM) as s:
        with pytest.raises(RuntimeError):
            s.connect(("192.0.2.1", 80))
