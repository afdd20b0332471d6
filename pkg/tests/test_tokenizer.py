import itertools

import pytest
from hypothesis import given, settings, strategies as st

from toxspans.tokenizer import (
    Vocabulary,
    is_punctuation,
    pre_tokenize,
    project_labels,
    tokenize,
    wordpiece,
)


def scan_oracle(text):
    """Group characters into (class, run) and split punctuation runs into singletons."""
    words, pos = [], 0
    for kind, run in itertools.groupby(text, key=lambda c: "ws" if c.isspace() else "p" if is_punctuation(c) else "w"):
        run = "".join(run)
        if kind == "w":
            words.append((run, pos, pos + len(run) - 1))
        elif kind == "p":
            words.extend((c, pos + k, pos + k) for k, c in enumerate(run))
        pos += len(run)
    return words


def greedy_oracle(word, entries, unk):
    """Uncapped greedy longest match: try every end position from the right."""
    out, start = [], 0
    while start < len(word):
        for end in range(len(word), start, -1):
            cand = ("##" if start else "") + word[start:end]
            if cand in entries:
                out.append(cand)
                start = end
                break
        else:
            return [unk]
    return out


def test_pre_tokenize_examples():
    words = pre_tokenize("moron and bigot.")
    assert [(w.text, w.index) for w in words] == [("moron", 0), ("and", 1), ("bigot", 2), (".", 3)]
    assert pre_tokenize("") == []
    assert [w.text for w in pre_tokenize("F'n W*ore")] == ["F", "'", "n", "W", "*", "ore"]


@given(st.text(max_size=60))
def test_pre_tokenize_matches_scan_oracle(text):
    words = pre_tokenize(text)
    assert [(w.text, w.start, w.end) for w in words] == scan_oracle(text)
    assert [w.index for w in words] == list(range(len(words)))


def test_wordpiece_examples():
    vocab = Vocabulary.from_pieces(["mo", "##ron", "and", "z"])
    assert wordpiece("moron", vocab) == ["mo", "##ron"]
    assert wordpiece("and", vocab) == ["and"]
    assert wordpiece("zzq", vocab) == ["[UNK]"]
    assert greedy_oracle("zzq", vocab.entries, "[UNK]") == ["[UNK]"]


def test_wordpiece_prefers_longest_match():
    vocab = Vocabulary.from_pieces(["mo", "mor", "##ron", "##on"])
    assert wordpiece("moron", vocab) == ["mor", "##on"]


def test_wordpiece_lowercase_lookup():
    vocab = Vocabulary.from_pieces(["moron"])
    assert wordpiece("MORON", vocab) == ["[UNK]"]
    assert wordpiece("MORON", vocab, lowercase=True) == ["moron"]


pieces = st.text(alphabet="abcd", min_size=1, max_size=3)


@given(
    st.sets(pieces, max_size=12),
    st.sets(pieces, max_size=12),
    st.text(alphabet="abcde", min_size=1, max_size=10),
)
def test_wordpiece_matches_uncapped_oracle(initial, cont, word):
    vocab = Vocabulary.from_pieces(initial | {"##" + p for p in cont})
    assert wordpiece(word, vocab) == greedy_oracle(word, vocab.entries, vocab.unk)


def test_tokenize_moron():
    vocab = Vocabulary.from_pieces(["mo", "##ron"])
    seq = tokenize("moron", vocab)
    got = [(t.piece, t.start, t.end, t.word_index, t.is_continuation) for t in seq]
    assert got == [("mo", 0, 1, 0, False), ("##ron", 2, 4, 0, True)]


def test_tokenize_spaces_and_truncation():
    vocab = Vocabulary.from_pieces(["a", "b"])
    seq = tokenize("a b", vocab)
    assert seq.offsets == [(0, 0), (2, 2)]
    assert not seq.truncated
    short = tokenize("a b", vocab, max_tokens=1)
    assert len(short) == 1 and short.truncated
    assert not tokenize("a b", vocab, max_tokens=2).truncated


def test_unk_covers_whole_word():
    vocab = Vocabulary.from_pieces(["a"])
    [tok] = tokenize("xyz", vocab)
    assert (tok.piece, tok.start, tok.end, tok.surface) == ("[UNK]", 0, 2, "xyz")


def test_lowercase_lookup_keeps_original_offsets():
    vocab = Vocabulary.from_pieces(["mo", "##ron"])
    seq = tokenize("He MORON", vocab, lowercase=True)
    assert [(t.piece, t.surface) for t in seq] == [("[UNK]", "He"), ("mo", "MO"), ("##ron", "RON")]


def test_word_level_mode():
    seq = tokenize("you idiot!", None)
    assert [t.surface for t in seq] == ["you", "idiot", "!"]


def test_vocabulary_file(tmp_path):
    path = tmp_path / "vocab.txt"
    path.write_text("unk=<unk>\nmo\n##ron\n\n", encoding="utf-8")
    vocab = Vocabulary.from_file(path)
    assert vocab.unk == "<unk>" and "##ron" in vocab and len(vocab) == 3
    path.write_text("[UNK]\nmo\n", encoding="utf-8")
    assert Vocabulary.from_file(path).unk == "[UNK]"
    path.write_text("mo\n", encoding="utf-8")
    with pytest.raises(ValueError):
        Vocabulary.from_file(path)


def test_project_labels_examples():
    vocab = Vocabulary.from_pieces(["mo", "##ron"])
    seq = tokenize("moron", vocab)
    assert project_labels(seq, range(5)).labels == (1, 1)
    assert project_labels(seq, ()).labels == (0, 0)
    assert project_labels(seq, {2}).labels == (1, 1)


FUZZ_VOCAB = Vocabulary.from_pieces(
    ["a", "b", "ab", "ba", "abc", "c", "##a", "##b", "##c", "##bc", "##ca", "Ab", "##B", "é", "##é", "."]
)


@settings(max_examples=300)
@given(st.text(alphabet="abcABé .,!*'\t\n", max_size=50), st.sets(st.integers(0, 49)))
def test_tokenize_invariants(text, gold):
    seq = tokenize(text, FUZZ_VOCAB)
    covered = [i for t in seq for i in t.span]
    # coverage: exactly the non-whitespace characters, each once, in order
    assert covered == [i for i, c in enumerate(text) if not c.isspace()]
    for t in seq:
        assert t.surface == text[t.start : t.end + 1]
        if t.piece != FUZZ_VOCAB.unk:
            assert (t.piece.removeprefix("##") if t.is_continuation else t.piece) == t.surface
    assert tokenize(text, FUZZ_VOCAB) == seq
    gold = {g for g in gold if g < len(text)}
    labels = project_labels(seq, gold).labels
    for group in seq.word_groups():
        assert len({labels[i] for i in group}) == 1
