"""Label-preserving easy data augmentation over span-annotated documents.

Documents are viewed as whitespace-separated words carrying a toxic flag.
Operations edit the word list and the text is rebuilt with single spaces,
so gold offsets are always re-derived from the flags.
"""

from __future__ import annotations

import hashlib
import random
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, NamedTuple, Sequence

from .corpus import Document

__all__ = [
    "OPERATIONS",
    "AugmentConfig",
    "ViewWord",
    "augment_corpus",
    "budget",
    "derive_seed",
    "load_synonyms",
    "random_deletion",
    "random_insertion",
    "random_swap",
    "rebuild",
    "synonym_replacement",
    "word_view",
]

OPERATIONS = ("SR", "RI", "RS", "RD")

Synonyms = Mapping[str, Sequence[str]]


def derive_seed(*parts) -> int:
    """Stable 64-bit seed from arbitrary parts (independent of PYTHONHASHSEED)."""
    digest = hashlib.sha256("\x1f".join(map(str, parts)).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


class ViewWord(NamedTuple):
    surface: str
    start: int
    end: int  # inclusive
    toxic: bool


def word_view(doc: Document) -> list[ViewWord]:
    gold = doc.gold_set
    return [
        ViewWord(m.group(), m.start(), m.end() - 1, any(i in gold for i in range(m.start(), m.end())))
        for m in re.finditer(r"\S+", doc.text)
    ]


def rebuild(doc_id: str, words: Iterable[tuple[str, bool]]) -> Document:
    """Join ``(surface, toxic)`` pairs with single spaces; toxic words are fully gold."""
    parts, gold, pos = [], [], 0
    for surface, toxic in words:
        if parts:
            pos += 1
        if toxic:
            gold.extend(range(pos, pos + len(surface)))
        parts.append(surface)
        pos += len(surface)
    return Document(doc_id, " ".join(parts), tuple(gold))


def budget(length: int, alpha: float) -> int:
    """Number of words to modify: ``alpha * length``, at least 1 for non-empty docs."""
    if length < 0:
        raise ValueError("length must be >= 0")
    if length == 0:
        return 0
    return max(1, round(alpha * length))


def _synonyms_for(word: str, lex: Synonyms) -> list[str]:
    key = word.lower()
    return [
        s for s in lex.get(key, ())
        if s and s not in (key, word) and not any(c.isspace() for c in s)
    ]


def synonym_replacement(doc: Document, n: int, lex: Synonyms, rng: random.Random) -> Document:
    words = word_view(doc)
    eligible = [i for i, w in enumerate(words) if _synonyms_for(w.surface, lex)]
    if n <= 0 or not eligible:
        return doc
    chosen = rng.sample(eligible, min(n, len(eligible)))
    pairs = [(w.surface, w.toxic) for w in words]
    for i in sorted(chosen):
        pairs[i] = (rng.choice(_synonyms_for(words[i].surface, lex)), words[i].toxic)
    return rebuild(doc.id, pairs)


def random_insertion(doc: Document, n: int, lex: Synonyms, rng: random.Random) -> Document:
    words = word_view(doc)
    sources = [w.surface for w in words if _synonyms_for(w.surface, lex)]
    if n <= 0 or not sources:
        return doc
    pairs = [(w.surface, w.toxic) for w in words]
    for _ in range(n):
        synonym = rng.choice(_synonyms_for(rng.choice(sources), lex))
        pairs.insert(rng.randint(0, len(pairs)), (synonym, False))
    return rebuild(doc.id, pairs)


def random_swap(doc: Document, n: int, rng: random.Random) -> Document:
    words = word_view(doc)
    if n <= 0 or len(words) < 2:
        return doc
    pairs = [(w.surface, w.toxic) for w in words]
    for _ in range(n):
        i, j = rng.sample(range(len(pairs)), 2)
        pairs[i], pairs[j] = pairs[j], pairs[i]
    return rebuild(doc.id, pairs)


def random_deletion(doc: Document, n: int, rng: random.Random) -> Document:
    words = word_view(doc)
    n = min(n, len(words) - 1)
    if n <= 0:
        return doc
    drop = set(rng.sample(range(len(words)), n))
    return rebuild(doc.id, [(w.surface, w.toxic) for i, w in enumerate(words) if i not in drop])


@dataclass(frozen=True)
class AugmentConfig:
    alpha: float = 0.1
    operations: tuple[str, ...] = OPERATIONS
    seed: int = 42
    synonyms: Mapping[str, tuple[str, ...]] = field(default_factory=dict)
    copies: int = 1

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must be in (0, 1], got {self.alpha}")
        unknown = set(self.operations) - set(OPERATIONS)
        if unknown:
            raise ValueError(f"unknown operations {sorted(unknown)}; expected a subset of {OPERATIONS}")
        if self.copies < 1:
            raise ValueError(f"copies must be >= 1, got {self.copies}")
        if {"SR", "RI"} & set(self.operations) and not self.synonyms:
            raise ValueError("SR and RI need a non-empty synonym lexicon")


def augment_document(doc: Document, cfg: AugmentConfig, copy: int) -> Document:
    rng = random.Random(derive_seed(cfg.seed, doc.id, copy))
    n = budget(len(word_view(doc)), cfg.alpha)
    out = doc
    for op in OPERATIONS:
        if op not in cfg.operations:
            continue
        if op == "SR":
            out = synonym_replacement(out, n, cfg.synonyms, rng)
        elif op == "RI":
            out = random_insertion(out, n, cfg.synonyms, rng)
        elif op == "RS":
            out = random_swap(out, n, rng)
        else:
            out = random_deletion(out, n, rng)
    return Document(f"{doc.id}-aug{copy}", out.text, out.gold)


def augment_corpus(corpus: Sequence[Document], cfg: AugmentConfig) -> list[Document]:
    """Original documents followed by ``cfg.copies`` augmented copies of each."""
    out = list(corpus)
    if not cfg.operations:
        return out
    for doc in corpus:
        for copy in range(1, cfg.copies + 1):
            out.append(augment_document(doc, cfg, copy))
    return out


def load_synonyms(path: str | Path) -> dict[str, tuple[str, ...]]:
    """Read ``word<TAB>syn1,syn2,...`` lines."""
    lex: dict[str, tuple[str, ...]] = {}
    with open(path, encoding="utf-8") as f:
        for n, line in enumerate(f, start=1):
            line = line.rstrip("\r\n")
            if not line.strip() or line.startswith("#"):
                continue
            try:
                word, syns = line.split("\t", 1)
            except ValueError:
                raise ValueError(f"{path}:{n}: expected 'word<TAB>syn1,syn2,...'") from None
            entries = tuple(s.strip() for s in syns.split(",") if s.strip())
            if any(c.isspace() for s in entries for c in s):
                raise ValueError(f"{path}:{n}: synonyms must be single words")
            if entries:
                lex[word.strip().lower()] = entries
    return lex
