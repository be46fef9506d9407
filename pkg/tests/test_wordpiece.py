import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from claimrank.corpus import parse_dataset
from claimrank.errors import VocabError
from claimrank.wordpiece import SubwordVocab, WordPieceTokenizer, load_vocab, tokenize_word, unk_report


@pytest.fixture
def vocab(vocab_path):
    return load_vocab(vocab_path)


@pytest.mark.parametrize(
    "word, pieces",
    [
        ("unaffable", ["un", "##aff", "##able"]),
        ("playing", ["play", "##ing"]),
        ("runner", ["run", "##ner"]),
        ("covid19", ["covid", "##19"]),
        ("zebra", ["[UNK]"]),
    ],
)
@pytest.mark.parametrize("backtrack", [False, True])
def test_forced_decompositions(vocab, word, pieces, backtrack):
    assert tokenize_word(vocab, word, backtrack=backtrack) == pieces


def test_hand_counted_fixture(vocab, unk_fixture_path):
    ds = parse_dataset(unk_fixture_path)
    assert len(ds) == 20
    report = unk_report(vocab, ds)
    assert (report.total_pieces, report.unk_pieces) == (64, 7)
    assert report.to_tsv() == "64\t7\t10.938"
    # "The" becomes coverable once lowercased
    lowered = unk_report(vocab, ds, lowercase=True)
    assert (lowered.total_pieces, lowered.unk_pieces) == (64, 6)


def test_greedy_dead_end_is_recovered_by_backtracking():
    vocab = SubwordVocab(("[UNK]", "a", "ab", "##bc"))
    assert tokenize_word(vocab, "abc", backtrack=False) == ["[UNK]"]
    assert tokenize_word(vocab, "abc", backtrack=True) == ["a", "##bc"]


def test_overlong_word_is_unk():
    vocab = SubwordVocab(("[UNK]", "a", "##a"), max_word_chars=5)
    assert tokenize_word(vocab, "aaaaa") == ["a"] + ["##a"] * 4
    assert tokenize_word(vocab, "aaaaaa") == ["[UNK]"]


def test_load_vocab_errors(tmp_path):
    dup = tmp_path / "dup.txt"
    dup.write_text("[UNK]\na\na\n")
    with pytest.raises(VocabError) as err:
        load_vocab(dup)
    assert err.value.line_no == 3
    no_unk = tmp_path / "nounk.txt"
    no_unk.write_text("a\n")
    with pytest.raises(VocabError):
        load_vocab(no_unk)


def test_estimator_wrapper(vocab):
    tok = WordPieceTokenizer(vocab=vocab).fit()
    assert tok.transform(["the cats"]) == [["the", "cat", "##s"]]
    assert tok.unk_report(["zebra cat"]).unk_pieces == 1
    assert tok.get_params()["backtrack"] is True


_piece_chars = st.sampled_from("abcd")
_pieces = st.text(_piece_chars, min_size=1, max_size=3)


@settings(max_examples=200, deadline=None)
@given(
    st.lists(st.tuples(st.booleans(), _pieces), max_size=12),
    st.lists(st.tuples(st.booleans(), _pieces), min_size=1, max_size=6),
    st.lists(st.text(_piece_chars, min_size=1, max_size=8), min_size=1, max_size=10),
)
def test_adding_entries_never_increases_unk(base, extra, words):
    def entries(spec):
        return [("##" + p) if cont else p for cont, p in spec]

    small = SubwordVocab(tuple(dict.fromkeys(["[UNK]"] + entries(base))))
    large = small.extended(entries(extra))
    text = " ".join(words)
    assert unk_report(large, [text]).unk_pieces <= unk_report(small, [text]).unk_pieces
