import re

import pytest
from hypothesis import given, strategies as st

from toxspans.corpus import (
    Document,
    EncodingError,
    MalformedRecord,
    MalformedSpanList,
    OffsetOutOfBounds,
    normalize_annotations,
    parse_dataset,
    ranges,
    serialize_dataset,
    serialize_spans,
    validate_dataset,
)

SAMPLE_TEXT = "Because he's a moron and bigot. It's not any more complicated than that."
SAMPLE_SPANS = "[15, 16, 17, 18, 19, 27, 28, 29, 30, 31]"


def run_length_oracle(offsets):
    runs = []
    for i in sorted(set(offsets)):
        if runs and runs[-1][-1] + 1 == i:
            runs[-1].append(i)
        else:
            runs.append([i])
    return [(r[0], r[-1]) for r in runs]


def test_parse_sample_record():
    raw = f'spans,text\n"{SAMPLE_SPANS}",{SAMPLE_TEXT}\n'.encode()
    [doc] = parse_dataset(raw, "csv")
    assert len(doc.gold) == 10
    assert doc.id == "0"
    assert doc.text == SAMPLE_TEXT


def test_parse_empty_spans():
    [doc] = parse_dataset(b"spans,text\n[],hello\n")
    assert doc.gold == ()


def test_offset_out_of_bounds():
    with pytest.raises(OffsetOutOfBounds) as info:
        parse_dataset(b"spans,text\n[7],short\n")
    assert info.value.record == 0


@pytest.mark.parametrize("cell", ["[1, x]", "1, 2", "[-1]", "[1,,2]", ""])
def test_malformed_span_list(cell):
    with pytest.raises(MalformedSpanList):
        parse_dataset(f'spans,text\n"{cell}",hello\n'.encode())


def test_quoted_cell_and_loose_whitespace():
    [doc] = parse_dataset(b'spans,text\n"[ 0,1 ,  2 ]",hello\n')
    assert doc.gold == (0, 1, 2)


def test_invalid_utf8():
    with pytest.raises(EncodingError):
        parse_dataset(b"spans,text\n[],caf\xe9\n")


def test_offsets_count_code_points_not_bytes():
    # "é" is two bytes in UTF-8 but one character.
    [doc] = parse_dataset("spans,text\n[3],café\n".encode())
    assert doc.text[doc.gold[0]] == "é"
    with pytest.raises(OffsetOutOfBounds):
        parse_dataset("spans,text\n[4],café\n".encode())


def test_missing_spans_column_means_empty_gold():
    docs = parse_dataset(b"text,other\nhello,1\nworld,2\n")
    assert [d.gold for d in docs] == [(), ()]
    assert [d.id for d in docs] == ["0", "1"]


def test_missing_text_column():
    with pytest.raises(MalformedRecord):
        parse_dataset(b"spans\n[]\n")


def test_jsonl():
    raw = b'{"id": "a", "spans": [0, 1], "text": "hi there"}\n\n{"spans": [], "text": "x"}\n'
    docs = parse_dataset(raw, "jsonl")
    assert docs[0] == Document("a", "hi there", (0, 1))
    assert docs[1].id == "1"


@pytest.mark.parametrize(
    "line",
    ['{"spans": [0], "text": 3}', '{"spans": [true], "text": "ab"}', "not json", '{"spans": [9], "text": "ab"}'],
)
def test_jsonl_errors(line):
    with pytest.raises((MalformedRecord, MalformedSpanList, OffsetOutOfBounds)):
        parse_dataset(line.encode(), "jsonl")


def test_validate_collects_all_errors():
    raw = b"spans,text\n[],ok\n[9],bad\n[x],worse\n[0],fine\n"
    docs, errors = validate_dataset(raw)
    assert len(docs) == 2
    assert [e.record for e in errors] == [1, 2]


def test_ranges_examples():
    assert ranges(list(range(15, 20)) + list(range(27, 32))) == [(15, 19), (27, 31)]
    assert ranges([]) == []
    assert ranges({0, 1, 3}) == [(0, 1), (3, 3)]


@given(st.sets(st.integers(0, 200)))
def test_ranges_matches_oracle_and_reconstructs(offsets):
    runs = ranges(offsets)
    assert runs == run_length_oracle(offsets)
    rebuilt = [i for s, e in runs for i in range(s, e + 1)]
    assert rebuilt == sorted(offsets)
    # disjoint, ordered and non-adjacent
    for (_, e1), (s2, _) in zip(runs, runs[1:]):
        assert s2 > e1 + 1


def test_serialize_spans():
    assert serialize_spans(range(15, 20)) == "[15, 16, 17, 18, 19]"
    assert serialize_spans(set()) == "[]"
    assert serialize_spans({3, 1, 2}) == "[1, 2, 3]"


documents = st.builds(
    lambda text, picks, doc_id: Document(doc_id, text, tuple(p % len(text) for p in picks) if text else ()),
    st.text(st.characters(blacklist_categories=("Cs",)), max_size=40),
    st.lists(st.integers(0, 1000), max_size=10),
    st.text(st.characters(whitelist_categories=("L", "N")), min_size=1, max_size=5),
)


@pytest.mark.parametrize("fmt", ["csv", "jsonl"])
@given(docs=st.lists(documents, max_size=5))
def test_round_trip(fmt, docs):
    if fmt == "csv":
        docs = [d for d in docs if "\x00" not in d.text]
    assert parse_dataset(serialize_dataset(docs, fmt).encode(), fmt) == docs


def test_csv_refuses_nul():
    with pytest.raises(ValueError):
        serialize_dataset([Document("0", "a\x00b")], "csv")


def test_round_trip_without_explicit_ids():
    docs = [Document("0", "a, b\n\"c\"", (0,)), Document("1", "x", ())]
    out = serialize_dataset(docs, "csv")
    assert out.startswith("spans,text\n")
    assert parse_dataset(out, "csv") == docs


def whitespace_word_oracle(text):
    return [(m.start(), m.end() - 1, m.group()) for m in re.finditer(r"\S+", text)]


def test_normalize_removes_function_word_and_delimiters():
    text = "stupid and ugly"
    doc = Document("0", text, tuple(range(len(text))))
    out = normalize_annotations(doc, {"and", "the"})
    words = {w: set(range(s, e + 1)) for s, e, w in whitespace_word_oracle(text)}
    assert set(out.gold) == words["stupid"] | words["ugly"]


def test_normalize_empty_gold_unchanged():
    doc = Document("0", "stupid and ugly", ())
    assert normalize_annotations(doc, {"and"}) is doc


def test_normalize_lone_function_word():
    doc = Document("0", "and", (0, 1, 2))
    assert normalize_annotations(doc, {"and"}).gold == ()


def test_normalize_keeps_partially_labelled_function_words():
    doc = Document("0", "you and me", (4, 5))
    assert normalize_annotations(doc, {"and"}) == doc


@given(
    st.lists(st.sampled_from(["and", "the", "idiot", "You", "AND", "moron", "he"]), max_size=8),
    st.lists(st.booleans(), max_size=60),
)
def test_normalize_shrinks_and_is_idempotent(words, flags):
    text = " ".join(words)
    gold = tuple(i for i, f in zip(range(len(text)), flags) if f)
    doc = Document("d", text, gold)
    fw = {"and", "the", "he"}
    once = normalize_annotations(doc, fw)
    assert set(once.gold) <= set(doc.gold)
    assert normalize_annotations(once, fw) == once
    for s, e, w in whitespace_word_oracle(text):
        if w.lower() not in fw:
            assert set(range(s, e + 1)) & set(once.gold) == set(range(s, e + 1)) & set(doc.gold)
