"""Pre-tokenization and greedy WordPiece with an exact character offset map."""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, NamedTuple

__all__ = [
    "CONTINUATION",
    "LabeledTokenSequence",
    "Token",
    "TokenSequence",
    "Vocabulary",
    "Word",
    "is_punctuation",
    "pre_tokenize",
    "project_labels",
    "tokenize",
    "wordpiece",
]

CONTINUATION = "##"
DEFAULT_UNK = "[UNK]"


def is_punctuation(ch: str) -> bool:
    """ASCII symbols count as punctuation as well as Unicode ``P*`` categories."""
    cp = ord(ch)
    if 33 <= cp <= 47 or 58 <= cp <= 64 or 91 <= cp <= 96 or 123 <= cp <= 126:
        return True
    return unicodedata.category(ch).startswith("P")


class Word(NamedTuple):
    text: str
    start: int
    end: int  # inclusive
    index: int


def pre_tokenize(text: str) -> list[Word]:
    """Split on whitespace, then isolate every punctuation character.

    >>> [w.text for w in pre_tokenize("F'n W*ore")]
    ['F', "'", 'n', 'W', '*', 'ore']
    """
    words: list[Word] = []
    start = None
    for i, ch in enumerate(text):
        if ch.isspace() or is_punctuation(ch):
            if start is not None:
                words.append(Word(text[start:i], start, i - 1, len(words)))
                start = None
            if not ch.isspace():
                words.append(Word(ch, i, i, len(words)))
        elif start is None:
            start = i
    if start is not None:
        words.append(Word(text[start:], start, len(text) - 1, len(words)))
    return words


@dataclass(frozen=True)
class Vocabulary:
    """WordPiece inventory; continuation pieces carry the ``##`` prefix."""

    entries: frozenset[str]
    unk: str = DEFAULT_UNK

    def __post_init__(self):
        if not self.entries:
            raise ValueError("vocabulary is empty")
        if self.unk not in self.entries:
            raise ValueError(f"unknown-token symbol {self.unk!r} is not in the vocabulary")

    def __contains__(self, piece: str) -> bool:
        return piece in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    @cached_property
    def _max_lengths(self) -> tuple[int, int]:
        initial = cont = 0
        for e in self.entries:
            if e.startswith(CONTINUATION):
                cont = max(cont, len(e) - len(CONTINUATION))
            else:
                initial = max(initial, len(e))
        return initial, cont

    @classmethod
    def from_pieces(cls, pieces: Iterable[str], unk: str = DEFAULT_UNK) -> "Vocabulary":
        return cls(frozenset(pieces) | {unk}, unk)

    @classmethod
    def from_lines(cls, lines: Iterable[str]) -> "Vocabulary":
        """Read one piece per line; an optional first line ``unk=<symbol>``."""
        entries: set[str] = set()
        unk = DEFAULT_UNK
        for n, line in enumerate(lines):
            piece = line.rstrip("\r\n")
            if not piece.strip():
                continue
            if n == 0 and piece.startswith("unk="):
                unk = piece[4:]
                entries.add(unk)
                continue
            entries.add(piece)
        return cls(frozenset(entries), unk)

    @classmethod
    def from_file(cls, path: str | Path) -> "Vocabulary":
        with open(path, encoding="utf-8") as f:
            return cls.from_lines(f)


def _lookup_form(word: str, lowercase: bool) -> str:
    if not lowercase:
        return word
    # Keep characters whose lowercase changes length so offsets stay aligned.
    return "".join(c.lower() if len(c.lower()) == 1 else c for c in word)


def wordpiece(word: str, vocab: Vocabulary, lowercase: bool = False) -> list[str]:
    """Greedy longest-match-first segmentation of a single word.

    Returns ``[vocab.unk]`` when some position has no matching piece.
    """
    form = _lookup_form(word, lowercase)
    max_initial, max_cont = vocab._max_lengths
    pieces: list[str] = []
    start = 0
    while start < len(form):
        prefix = CONTINUATION if start else ""
        end = min(len(form), start + (max_cont if start else max_initial))
        match = None
        while end > start:
            candidate = prefix + form[start:end]
            if candidate in vocab.entries:
                match = candidate
                break
            end -= 1
        if match is None:
            return [vocab.unk]
        pieces.append(match)
        start = end
    return pieces


@dataclass(frozen=True)
class Token:
    piece: str
    start: int
    end: int  # inclusive
    word_index: int
    is_continuation: bool
    surface: str

    @property
    def span(self) -> range:
        return range(self.start, self.end + 1)


@dataclass(frozen=True)
class TokenSequence:
    tokens: tuple[Token, ...]
    text: str
    truncated: bool = False

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)

    def __getitem__(self, i: int) -> Token:
        return self.tokens[i]

    @property
    def offsets(self) -> list[tuple[int, int]]:
        return [(t.start, t.end) for t in self.tokens]

    def word_groups(self) -> list[list[int]]:
        """Token indices grouped by word, in order."""
        groups: list[list[int]] = []
        last = None
        for i, tok in enumerate(self.tokens):
            if tok.word_index != last:
                groups.append([])
                last = tok.word_index
            groups[-1].append(i)
        return groups

    def word_surfaces(self) -> dict[int, str]:
        out = {}
        for group in self.word_groups():
            first, last = self.tokens[group[0]], self.tokens[group[-1]]
            out[first.word_index] = self.text[first.start : last.end + 1]
        return out


@dataclass(frozen=True)
class LabeledTokenSequence:
    seq: TokenSequence
    labels: tuple[int, ...]

    def __post_init__(self):
        if len(self.labels) != len(self.seq):
            raise ValueError(f"{len(self.labels)} labels for {len(self.seq)} tokens")


def tokenize(
    text: str,
    vocab: Vocabulary | None,
    max_tokens: int | None = None,
    lowercase: bool = False,
) -> TokenSequence:
    """Tokenize ``text`` into WordPiece tokens with inclusive character offsets.

    With ``vocab=None`` every pre-tokenized word becomes a single token.
    """
    tokens: list[Token] = []
    truncated = False
    for word in pre_tokenize(text):
        if vocab is None:
            pieces = [word.text]
        else:
            pieces = wordpiece(word.text, vocab, lowercase)
        if vocab is not None and pieces == [vocab.unk]:
            spans = [(word.start, word.end)]
        else:
            spans, pos = [], word.start
            for k, piece in enumerate(pieces):
                n = len(piece) - len(CONTINUATION) if k else len(piece)
                spans.append((pos, pos + n - 1))
                pos += n
        for k, (piece, (s, e)) in enumerate(zip(pieces, spans)):
            if max_tokens is not None and len(tokens) >= max_tokens:
                truncated = True
                break
            tokens.append(Token(piece, s, e, word.index, k > 0, text[s : e + 1]))
        if truncated:
            break
    return TokenSequence(tuple(tokens), text, truncated)


def project_labels(seq: TokenSequence, gold: Iterable[int]) -> LabeledTokenSequence:
    """Label every token of a word 1 when any character of the word is gold."""
    gold = set(gold)
    labels = [0] * len(seq)
    for group in seq.word_groups():
        start, end = seq[group[0]].start, seq[group[-1]].end
        if any(i in gold for i in range(start, end + 1)):
            for i in group:
                labels[i] = 1
    return LabeledTokenSequence(seq, tuple(labels))

