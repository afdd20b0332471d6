"""Span-annotated documents: parsing, validation, normalization and serialization.

Offsets are zero-indexed positions in the document's sequence of Unicode
code points (Python ``str`` indices), never byte positions.
"""

from __future__ import annotations

import csv
import io
import json
import re
from dataclasses import dataclass, field
from typing import BinaryIO, Iterable, Iterator, Sequence

__all__ = [
    "CorpusError",
    "Document",
    "EncodingError",
    "MalformedRecord",
    "MalformedSpanList",
    "OffsetOutOfBounds",
    "SpanSet",
    "normalize_annotations",
    "parse_dataset",
    "parse_span_list",
    "ranges",
    "serialize_dataset",
    "serialize_spans",
    "validate_dataset",
]

SpanSet = frozenset[int]

FORMATS = ("csv", "jsonl")

_SPAN_LIST_RE = re.compile(r"^\s*\[\s*(\d+(?:\s*,\s*\d+)*)?\s*\]\s*$")


class CorpusError(ValueError):
    """Base class for data errors in a dataset file."""

    def __init__(self, message: str, record: int | None = None):
        self.record = record
        if record is not None:
            message = f"record {record}: {message}"
        super().__init__(message)


class MalformedSpanList(CorpusError):
    pass


class OffsetOutOfBounds(CorpusError):
    pass


class EncodingError(CorpusError):
    pass


class MalformedRecord(CorpusError):
    """A record is missing a required field or is not valid JSON/CSV."""


@dataclass(frozen=True)
class Document:
    """A text with its gold toxic character offsets.

    ``gold`` is normalized to a sorted tuple of unique offsets; every offset
    must index a character of ``text``.
    """

    id: str
    text: str
    gold: tuple[int, ...] = field(default=())

    def __post_init__(self):
        gold = tuple(sorted(set(self.gold)))
        if gold and (gold[0] < 0 or gold[-1] >= len(self.text)):
            bad = gold[0] if gold[0] < 0 else gold[-1]
            raise OffsetOutOfBounds(
                f"offset {bad} outside text of length {len(self.text)}"
            )
        object.__setattr__(self, "gold", gold)

    @property
    def gold_set(self) -> SpanSet:
        return frozenset(self.gold)


def parse_span_list(cell: str, record: int | None = None) -> list[int]:
    """Parse a bracketed list such as ``"[15, 16, 17]"``."""
    m = _SPAN_LIST_RE.match(cell)
    if m is None:
        raise MalformedSpanList(f"cannot parse span list {cell!r}", record)
    if m.group(1) is None:
        return []
    return [int(x) for x in m.group(1).split(",")]


def ranges(spans: Iterable[int]) -> list[tuple[int, int]]:
    """Decompose offsets into maximal contiguous runs with inclusive ends.

    >>> ranges([0, 1, 3])
    [(0, 1), (3, 3)]
    """
    out: list[tuple[int, int]] = []
    for i in sorted(set(spans)):
        if out and out[-1][1] == i - 1:
            out[-1] = (out[-1][0], i)
        else:
            out.append((i, i))
    return out


def serialize_spans(spans: Iterable[int]) -> str:
    return "[" + ", ".join(str(i) for i in sorted(set(spans))) + "]"


def _decode(raw: bytes | str | BinaryIO) -> str:
    if isinstance(raw, str):
        return raw
    if not isinstance(raw, (bytes, bytearray)):
        raw = raw.read()
    try:
        return bytes(raw).decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        raise EncodingError(f"input is not valid UTF-8 ({exc.reason} at byte {exc.start})") from exc


def _make_doc(doc_id, text, spans, record: int) -> Document:
    try:
        return Document(str(doc_id), text, tuple(spans))
    except OffsetOutOfBounds as exc:
        raise OffsetOutOfBounds(str(exc), record) from None


def _iter_csv(text: str) -> Iterator[Document | CorpusError]:
    reader = csv.DictReader(io.StringIO(text, newline=""))
    if reader.fieldnames is None:
        return
    if "text" not in reader.fieldnames:
        yield MalformedRecord("CSV header has no 'text' column", 0)
        return
    has_spans = "spans" in reader.fieldnames
    has_id = "id" in reader.fieldnames
    index = 0
    while True:
        try:
            row = next(reader)
        except StopIteration:
            return
        except csv.Error as exc:
            yield MalformedRecord(f"unreadable CSV: {exc}", index)
            return
        try:
            body = row["text"]
            if body is None:
                raise MalformedRecord("missing text field", index)
            spans = parse_span_list(row["spans"] or "", index) if has_spans else []
            doc_id = row["id"] if has_id and row["id"] else index
            yield _make_doc(doc_id, body, spans, index)
        except CorpusError as exc:
            yield exc
        index += 1


def _iter_jsonl(text: str) -> Iterator[Document | CorpusError]:
    index = 0
    # Only "\n" separates records; str.splitlines would also split on U+2028.
    for line in text.split("\n"):
        if not line.strip():
            continue
        try:
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedRecord(f"invalid JSON: {exc.msg}", index) from None
            if not isinstance(obj, dict) or not isinstance(obj.get("text"), str):
                raise MalformedRecord("expected an object with a string 'text'", index)
            spans = obj.get("spans", [])
            if isinstance(spans, str):
                spans = parse_span_list(spans, index)
            elif not isinstance(spans, list) or not all(
                isinstance(x, int) and not isinstance(x, bool) and x >= 0 for x in spans
            ):
                raise MalformedSpanList("'spans' must be a list of non-negative integers", index)
            yield _make_doc(obj.get("id", index), obj["text"], spans, index)
        except CorpusError as exc:
            yield exc
        index += 1


def _iter_records(raw, fmt: str) -> Iterator[Document | CorpusError]:
    if fmt not in FORMATS:
        raise ValueError(f"unknown format {fmt!r}; expected one of {FORMATS}")
    text = _decode(raw)
    return _iter_csv(text) if fmt == "csv" else _iter_jsonl(text)


def parse_dataset(raw: bytes | str | BinaryIO, format: str = "csv") -> list[Document]:
    """Parse a CSV (``spans,text`` header) or JSONL dataset.

    Raises the first :class:`CorpusError` encountered.  Documents without an
    ``id`` get their zero-based record index as id; a missing ``spans``
    column means an empty gold set.
    """
    docs = []
    for item in _iter_records(raw, format):
        if isinstance(item, CorpusError):
            raise item
        docs.append(item)
    return docs


def validate_dataset(
    raw: bytes | str | BinaryIO, format: str = "csv"
) -> tuple[list[Document], list[CorpusError]]:
    """Like :func:`parse_dataset` but collects every record error."""
    docs: list[Document] = []
    errors: list[CorpusError] = []
    try:
        for item in _iter_records(raw, format):
            (errors if isinstance(item, CorpusError) else docs).append(item)
    except EncodingError as exc:
        errors.append(exc)
    return docs, errors


def serialize_dataset(docs: Sequence[Document], format: str = "csv") -> str:
    """Write documents in ``format``; ids are written only when some id is not its record index."""
    with_ids = any(d.id != str(i) for i, d in enumerate(docs))
    if format == "csv":
        buf = io.StringIO(newline="")
        # Minimal quoting leaves a bare "\r" unquoted, which the reader then drops.
        quoting = csv.QUOTE_ALL if any("\r" in d.text for d in docs) else csv.QUOTE_MINIMAL
        writer = csv.writer(buf, lineterminator="\n", quoting=quoting)
        writer.writerow(["spans", "text", "id"] if with_ids else ["spans", "text"])
        for doc in docs:
            if "\x00" in doc.text:
                raise ValueError(f"document {doc.id!r}: CSV cannot hold NUL characters; use jsonl")
            row = [serialize_spans(doc.gold), doc.text]
            writer.writerow(row + [doc.id] if with_ids else row)
        return buf.getvalue()
    if format == "jsonl":
        lines = []
        for doc in docs:
            obj = {"id": doc.id} if with_ids else {}
            obj.update(spans=list(doc.gold), text=doc.text)
            lines.append(json.dumps(obj, ensure_ascii=False) + "\n")
        return "".join(lines)
    raise ValueError(f"unknown format {format!r}; expected one of {FORMATS}")


def _whitespace_words(text: str) -> list[tuple[int, int]]:
    return [(m.start(), m.end()) for m in re.finditer(r"\S+", text)]


def normalize_annotations(doc: Document, function_words: set[str] | frozenset[str]) -> Document:
    """Drop gold labels on fully-labelled function words.

    A whitespace-delimited word whose lowercase form is in ``function_words``
    and whose characters are all gold loses its labels, together with the
    gold whitespace runs directly before and after it.  Other words are left
    alone, so the operation is idempotent and only ever shrinks gold.
    """
    if not doc.gold:
        return doc
    gold = set(doc.gold)
    text = doc.text
    for start, end in _whitespace_words(text):
        if text[start:end].lower() not in function_words:
            continue
        if not all(i in gold for i in range(start, end)):
            continue
        gold.difference_update(range(start, end))
        i = start - 1
        while i >= 0 and text[i].isspace() and i in gold:
            gold.discard(i)
            i -= 1
        i = end
        while i < len(text) and text[i].isspace() and i in gold:
            gold.discard(i)
            i += 1
    if len(gold) == len(doc.gold):
        return doc
    return Document(doc.id, doc.text, tuple(gold))
