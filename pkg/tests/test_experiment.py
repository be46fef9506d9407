import json
import os
import random
import shlex

import pytest

from claimrank.corpus import LabeledDataset, Tweet, format_dataset, parse_dataset, write_dataset
from claimrank.errors import ExperimentError
from claimrank.experiment import (
    ExperimentConfig,
    aggregate,
    check_leakage,
    default_seeds,
    load_config,
    plan_cells,
    render_report,
    render_samples_vs_score,
    report_from_dir,
    run_experiment,
)
from claimrank.synthetic import make_imbalanced_corpus

from conftest import mock_command


@pytest.fixture(scope="module")
def small_data(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "small.tsv"
    write_dataset(make_imbalanced_corpus(200, 0.2, seed=3, name="small"), path)
    return str(path)


def cfg(data, out, **kw):
    kw.setdefault("seeds", [1])
    return ExperimentConfig(dataset=data, output_dir=str(out), **kw)


def test_single_null_cell(small_data, tmp_path):
    report = run_experiment(cfg(small_data, tmp_path, p_values=[None]))
    assert len(report.cells) == 1 and report.cells[0].arm == "null"
    cells = os.listdir(tmp_path / "cells")
    assert cells == ["null_pnull_seed1"]
    cell = tmp_path / "cells" / cells[0]
    assert sorted(os.listdir(cell)) == ["balance.json", "metrics.json", "model.json", "run.tsv", "train.tsv"]
    # the null arm trains on the raw split, byte for byte
    assert (cell / "train.tsv").read_bytes() == (tmp_path / "splits" / "seed1" / "train.tsv").read_bytes()
    md = render_report(report, "markdown")
    assert md.count("| cw_f1 |") == 1


def test_table3_layout(small_data, tmp_path):
    report = run_experiment(cfg(small_data, tmp_path))
    md = (tmp_path / "report.md").read_text()
    assert "| metric | null | 0.1 | 0.2 | 0.3 | 0.4 | 0.5 |" in md
    for row in ("cw_precision", "cw_recall", "cw_f1"):
        assert f"| {row} |" in md
    assert len(report.medians) == 6
    tsv = (tmp_path / "report.tsv").read_text().splitlines()
    assert len(tsv) == 7 and tsv[0].startswith("arm\tp\tn_seeds")
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["seeds"] == [1] and len(manifest["cells"]) == 6
    assert len(manifest["config_hash"]) == 64
    holdout = set(parse_dataset(tmp_path / "splits" / "seed1" / "holdout.tsv").ids)
    for cell in manifest["cells"]:
        train = parse_dataset(tmp_path / cell["files"]["train.tsv"])
        assert not holdout & {t.tweet_id.split("#")[0] for t in train.tweets}


def test_other_arms_and_external_scorer(small_data, tmp_path):
    report = run_experiment(cfg(small_data, tmp_path, p_values=[0.2], arms=["contextual", "eda", "backtranslate"],
                                translator="reverse", scorer_cmd=shlex.join(mock_command("ranked_scorer.py"))))
    assert [(c.arm, c.p) for c in report.cells] == [("contextual", 0.2), ("backtranslate", None), ("eda", 0.2)]
    bt = parse_dataset(tmp_path / "cells" / "backtranslate_pnull_seed1" / "train.tsv")
    assert {t.origin for t in bt.tweets} == {"original", "backtranslated"}
    ctx = parse_dataset(tmp_path / "cells" / "contextual_p0.2_seed1" / "train.tsv")
    augmented = [t.text for t in ctx.tweets if t.origin == "augmented"]
    assert any(w in text.split() for text in augmented for w in ("alpha", "bravo", "charlie"))
    assert "| metric | null | bt |" not in (tmp_path / "report.md").read_text()


def test_rerun_is_byte_identical(small_data, tmp_path):
    outs = []
    for name in ("a", "b"):
        run_experiment(cfg(small_data, tmp_path / name, p_values=[None, 0.3], seeds=[1, 2]))
        outs.append(tmp_path / name)
    for rel in ("report.md", "report.tsv", "report.json", "cells/contextual_p0.3_seed2/run.tsv",
                "cells/contextual_p0.3_seed2/model.json"):
        assert (outs[0] / rel).read_bytes() == (outs[1] / rel).read_bytes()
    a, b = (json.loads((o / "manifest.json").read_text()) for o in outs)
    a.pop("timing"), b.pop("timing")
    assert a == b


def test_medians_ignore_seed_order(small_data, tmp_path):
    report = run_experiment(cfg(small_data, tmp_path, p_values=[None, 0.2], seeds=[1, 2, 3]))
    cells = list(report.cells)
    random.Random(0).shuffle(cells)
    assert aggregate(cells, report.dataset_name) == report
    assert report_from_dir(tmp_path) == report


def test_samples_vs_score_sorted_by_map(small_data, tmp_path):
    r1 = run_experiment(cfg(small_data, tmp_path / "one", p_values=[None]))
    other = tmp_path / "other.tsv"
    write_dataset(make_imbalanced_corpus(200, 0.2, seed=9, name="other"), other)
    r2 = run_experiment(cfg(str(other), tmp_path / "two", p_values=[None]))
    text = render_samples_vs_score([r1, r2], "tsv")
    rows = [line.split("\t") for line in text.splitlines()[1:]]
    assert len(rows) == 2
    assert float(rows[0][2]) <= float(rows[1][2])
    assert render_samples_vs_score([r1, r2]) == render_samples_vs_score([r2, r1])


def test_leakage_guard():
    hold = LabeledDataset("h", (Tweet("T", "x", "a", 1),))
    train = LabeledDataset("t", (Tweet("T", "y", "b", 0), Tweet("T", "x#aug1", "c", 1, "augmented")))
    with pytest.raises(ExperimentError):
        check_leakage(train, hold)
    check_leakage(LabeledDataset("t", (Tweet("T", "y", "b", 0),)), hold)


def test_plan_cells():
    c = ExperimentConfig(dataset="d", p_values=[None, 0.1], arms=["eda", "backtranslate"], seeds=[5, 6])
    names = [cell.name for cell in plan_cells(c)]
    assert names == ["null_pnull_seed5", "eda_p0.1_seed5", "backtranslate_pnull_seed5",
                     "null_pnull_seed6", "eda_p0.1_seed6", "backtranslate_pnull_seed6"]


def test_config_validation_and_seed_env(monkeypatch, tmp_path):
    monkeypatch.setenv("CLAIMRANK_SEED", "7")
    assert default_seeds() == (7, 8, 9, 10, 11)
    assert ExperimentConfig(dataset="d").seeds == (7, 8, 9, 10, 11)
    monkeypatch.delenv("CLAIMRANK_SEED")
    assert ExperimentConfig(dataset="d").seeds == (42, 43, 44, 45, 46)
    for bad in ({"p_values": []}, {"seeds": []}, {"arms": ["magic"]}, {"profile": "huge"},
                {"train_on": "full"}, {"p_values": [1.5]}):
        with pytest.raises(ExperimentError):
            ExperimentConfig(dataset="d", **bad)
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"dataset": "data.tsv", "train_fraction": 0.75, "p_values": [None, 0.1],
                                "arms": ["contextual"], "profile": "baseline_linear", "seeds": [3],
                                "output_dir": "out"}))
    loaded = load_config(path)
    assert loaded.dataset == (str(tmp_path / "data.tsv"),) and loaded.p_values == (None, 0.1)
    path.write_text(json.dumps({"dataset": "d", "typo": 1}))
    with pytest.raises(ExperimentError):
        load_config(path)


def test_workers_and_output_dir_do_not_change_hash():
    a = ExperimentConfig(dataset="d", seeds=[1], workers=1, output_dir="x")
    b = ExperimentConfig(dataset="d", seeds=[1], workers=4, output_dir="y")
    assert a.config_hash() == b.config_hash()
    assert a.config_hash() != ExperimentConfig(dataset="d", seeds=[2]).config_hash()


def test_errors_carry_cell_context(tmp_path):
    path = tmp_path / "tiny.tsv"
    write_dataset(LabeledDataset("tiny", (Tweet("T", "a", "x", 1),) + tuple(
        Tweet("T", f"n{i}", "y", 0) for i in range(4))), path)
    with pytest.raises(ExperimentError) as err:
        run_experiment(cfg(str(path), tmp_path / "o"))
    assert "seed=1" in str(err.value) and "SplitError" in str(err.value)


def test_separate_test_set_and_full_training(small_data, tmp_path):
    test = tmp_path / "test.tsv"
    write_dataset(make_imbalanced_corpus(60, 0.2, seed=4, name="dev"), test)
    # ids overlap with the training file, so the dev rows get their own prefix
    ds = parse_dataset(test)
    ds = ds.with_tweets([Tweet(t.topic_id, "dev-" + t.tweet_id, t.text, t.label) for t in ds.tweets])
    write_dataset(ds, test)
    run_experiment(cfg(small_data, tmp_path / "o", p_values=[None], test_dataset=str(test), train_on="full"))
    split = tmp_path / "o" / "splits" / "seed1"
    assert (split / "holdout.tsv").read_text() == format_dataset(ds)
    assert len(parse_dataset(split / "train.tsv")) == 200
