"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data error.  Every flag can also be
given in a ``key=value`` config file (``--config`` or ``$TOXSPANS_CONFIG``);
command-line flags win.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Sequence

from . import __version__
from .augment import OPERATIONS, AugmentConfig, augment_corpus, derive_seed, load_synonyms
from .classifiers import (
    EmptyCorpus,
    LexiconClassifier,
    LexiconSentenceClassifier,
    LinearModel,
    LinearSentenceClassifier,
    ModelFormatError,
    RandomBaselineConfig,
    load_lexicon,
    random_char_predict,
    sentence_training_data,
    threshold_labels,
    train_linear,
    train_sentence_linear,
)
from .corpus import (
    CorpusError,
    Document,
    parse_dataset,
    parse_span_list,
    serialize_dataset,
    serialize_spans,
    validate_dataset,
)
from .metrics import LengthMismatch, UnknownDocumentId, evaluate_corpus, pr_curve, pr_curve_csv, token_confusion
from .pipeline import PipelineConfig, predict_sequence, sentence_mask
from .tokenizer import Vocabulary, project_labels, tokenize

CONFIG_ENV = "TOXSPANS_CONFIG"
DEFAULT_SEED = 42
EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# --- helpers ---------------------------------------------------------------


def _format_of(path: str, fmt: str | None) -> str:
    if fmt:
        return fmt
    return "jsonl" if Path(path).suffix.lower() in (".jsonl", ".json", ".ndjson") else "csv"


def _read_bytes(path: str | None, what: str) -> bytes:
    if not path:
        raise UsageError(f"{what} is required")
    try:
        return Path(path).read_bytes()
    except FileNotFoundError:
        raise UsageError(f"{what} not found: {path}") from None


def _load_docs(path: str | None, fmt: str | None, what: str = "--input") -> list[Document]:
    raw = _read_bytes(path, what)
    return parse_dataset(raw, _format_of(path, fmt))


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)


def _need_file(path: str | None, flag: str) -> str:
    if not path:
        raise UsageError(f"{flag} is required")
    if not Path(path).is_file():
        raise UsageError(f"{flag} not found: {path}")
    return path


def _vocab(args) -> Vocabulary | None:
    if not args.vocab:
        return None
    try:
        return Vocabulary.from_file(_need_file(args.vocab, "--vocab"))
    except ValueError as exc:
        raise DataError(f"bad vocabulary: {exc}") from None


def _read_scores(path: str) -> dict[str, list[float]]:
    out = {}
    with open(_need_file(path, "--scores"), encoding="utf-8") as f:
        for n, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                out[str(obj["id"])] = [float(x) for x in obj["scores"]]
            except (ValueError, KeyError, TypeError):
                raise DataError(f"{path}:{n}: expected {{\"id\": ..., \"scores\": [...]}}") from None
    return out


def _read_predictions(path: str, fmt: str | None) -> list[tuple[str | None, list[int]]]:
    """Submission lines (one span list per line) or a dataset with a spans column."""
    raw = _read_bytes(path, "--input")
    text = raw.decode("utf-8-sig", errors="strict")
    first = next((ln for ln in text.splitlines() if ln.strip()), "")
    if first.lstrip().startswith("["):
        return [(None, parse_span_list(ln, k)) for k, ln in enumerate(l for l in text.splitlines() if l.strip())]
    return [(d.id, list(d.gold)) for d in parse_dataset(raw, _format_of(path, fmt))]


# --- subcommands -----------------------------------------------------------


def cmd_validate(args) -> int:
    raw = _read_bytes(args.input, "--input")
    docs, errors = validate_dataset(raw, _format_of(args.input, args.format))
    for err in errors:
        print(f"error: {err}", file=sys.stderr)
    print(f"{len(docs)} valid documents, {len(errors)} errors")
    return EXIT_DATA if errors else EXIT_OK


def _labeled(docs, vocab, args):
    return [project_labels(tokenize(d.text, vocab, args.max_tokens, args.lowercase), d.gold) for d in docs]


def cmd_train(args) -> int:
    docs = _load_docs(args.input, args.format)
    if not args.output:
        raise UsageError("--output (model path) is required")
    if args.epochs < 1:
        raise UsageError("--epochs must be >= 1")
    model = train_linear(_labeled(docs, _vocab(args), args), args.epochs, args.seed)
    for k, acc in enumerate(model.history, start=1):
        print(f"epoch {k}: train accuracy {acc:.4f}")
    model.save(args.output)
    if args.sentence_model:
        clf = train_sentence_linear(sentence_training_data(docs), args.epochs, args.seed)
        clf.save(args.sentence_model)
    return EXIT_OK


def _token_classifier(args):
    if args.classifier == "lexicon":
        return LexiconClassifier(load_lexicon(_need_file(args.lexicon, "--lexicon")))
    if args.classifier == "linear":
        return LinearModel.load(_need_file(args.model, "--model"))
    raise UsageError("choose --classifier {lexicon,linear}, --baseline random or --scores")


def _sentence_classifier(args):
    if args.fusion_model:
        return LinearSentenceClassifier.load(_need_file(args.fusion_model, "--fusion-model"))
    path = args.fusion_lexicon or args.lexicon
    if not path:
        raise UsageError("--fusion needs --fusion-model, --fusion-lexicon or --lexicon")
    return LexiconSentenceClassifier(load_lexicon(_need_file(path, "--fusion-lexicon")))


def cmd_predict(args) -> int:
    docs = _load_docs(args.input, args.format)
    lines: list[str] = []
    score_lines: list[str] = []
    if args.baseline == "random":
        if args.scores_out:
            raise UsageError("--scores-out is not available for the random baseline")
        for d in docs:
            cfg = RandomBaselineConfig(args.tau, derive_seed(args.seed, d.id))
            lines.append(serialize_spans(random_char_predict(d.text, cfg)))
        _write(args.output, "".join(ln + "\n" for ln in lines))
        return EXIT_OK

    external = _read_scores(args.scores) if args.scores else None
    clf = None if external is not None else _token_classifier(args)
    fusion = _sentence_classifier(args) if args.fusion else None
    cfg = PipelineConfig(
        classifier=clf,
        tau=args.tau,
        gap_fill=not args.no_gap_fill,
        word_coherence=not args.no_word_coherence,
        coherence_first=not args.gap_fill_first,
        max_tokens=args.max_tokens,
        lowercase=args.lowercase,
    )
    vocab = _vocab(args)
    for d in docs:
        seq = tokenize(d.text, vocab, cfg.max_tokens, cfg.lowercase)
        if external is not None:
            if d.id not in external:
                raise DataError(f"no scores for document {d.id!r}")
            scores = external[d.id]
            if len(scores) != len(seq):
                raise DataError(
                    f"document {d.id!r}: {len(scores)} scores for {len(seq)} tokens"
                    " (was the score file produced with the same vocabulary?)"
                )
        else:
            scores = clf.score(seq)
        spans = predict_sequence(cfg, seq, scores) if d.text else frozenset()
        if fusion is not None and spans:
            spans = spans & sentence_mask(fusion, d.text)
        lines.append(serialize_spans(spans))
        score_lines.append(json.dumps({"id": d.id, "scores": [round(s, 6) for s in scores]}))
    _write(args.output, "".join(ln + "\n" for ln in lines))
    if args.scores_out:
        _write(args.scores_out, "".join(ln + "\n" for ln in score_lines))
    return EXIT_OK


def cmd_evaluate(args) -> int:
    golds = _load_docs(_need_file(args.gold, "--gold"), args.format, "--gold")
    preds = _read_predictions(args.input, None)
    if args.by_id:
        if any(i is None for i, _ in preds):
            raise UsageError("--by-id needs predictions that carry document ids")
        keyed = {i: s for i, s in preds}
    else:
        if len(preds) != len(golds):
            raise DataError(f"{len(preds)} predictions for {len(golds)} gold documents")
        keyed = {g.id: s for g, (_, s) in zip(golds, preds)}
    report = evaluate_corpus(keyed, golds)
    sys.stdout.write(report.to_table())
    if args.output:
        _write(args.output, report.to_json())
    return EXIT_OK


def cmd_augment(args) -> int:
    docs = _load_docs(args.input, args.format)
    ops = tuple(o.strip().upper() for o in args.ops.split(",") if o.strip())
    synonyms = load_synonyms(_need_file(args.synonyms, "--synonyms")) if args.synonyms else {}
    if {"SR", "RI"} & set(ops) and not synonyms:
        raise UsageError("--synonyms is required when SR or RI is enabled")
    try:
        cfg = AugmentConfig(args.alpha, ops, args.seed, synonyms, args.copies)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    out = augment_corpus(docs, cfg)
    _write(args.output, serialize_dataset(out, _format_of(args.output or args.input, args.format)))
    print(f"{len(docs)} documents in, {len(out)} documents out", file=sys.stderr)
    return EXIT_OK


def _parse_grid(spec: str) -> list[float]:
    try:
        grid = [float(x) for x in spec.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"bad --grid {spec!r}") from None
    if not grid or grid != sorted(grid) or any(not 0 <= t <= 1 for t in grid):
        raise UsageError("--grid must be ascending thresholds in [0, 1]")
    return grid


def cmd_report(args) -> int:
    golds = _load_docs(_need_file(args.gold, "--gold"), args.format, "--gold")
    external = _read_scores(args.scores)
    vocab = _vocab(args)
    grid = _parse_grid(args.grid)
    scores, gold_labels = [], []
    for d in golds:
        if d.id not in external:
            raise DataError(f"no scores for document {d.id!r}")
        seq = tokenize(d.text, vocab, args.max_tokens, args.lowercase)
        scores.append(external[d.id])
        gold_labels.append(list(project_labels(seq, d.gold).labels))
    points, auc = pr_curve(scores, gold_labels, grid)
    cm = token_confusion([threshold_labels(s, args.tau) for s in scores], gold_labels)
    out = Path(args.output or ".")
    _write(str(out / "pr_curve.csv"), pr_curve_csv(points))
    _write(str(out / "confusion.csv"), cm.to_csv())
    print(f"AUC {auc:.4f}")
    print(f"confusion at tau={args.tau}: tp={cm.tp} fp={cm.fp} fn={cm.fn} tn={cm.tn}")
    return EXIT_OK


# --- argument parsing ------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="toxspans", description="Toxic span detection toolkit.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", help=f"key=value config file (default: ${CONFIG_ENV})")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    io_args = _Parser(add_help=False)
    io_args.add_argument("--input", help="dataset (CSV with spans,text header, or JSONL)")
    io_args.add_argument("--output")
    io_args.add_argument("--format", choices=["csv", "jsonl"], help="default: from the file extension")

    tok_args = _Parser(add_help=False)
    tok_args.add_argument("--vocab", help="WordPiece vocabulary; omit for one token per word")
    tok_args.add_argument("--lowercase", action="store_true", help="uncased vocabulary lookup")
    tok_args.add_argument("--max-tokens", type=int, default=None)

    seed_args = _Parser(add_help=False)
    seed_args.add_argument("--seed", type=int, default=DEFAULT_SEED)

    p = sub.add_parser("validate", parents=[io_args], help="parse and bounds-check a dataset")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("train", parents=[io_args, tok_args, seed_args], help="train the linear token model")
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--sentence-model", help="also train a sentence classifier for late fusion")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", parents=[io_args, tok_args, seed_args], help="write span predictions")
    p.add_argument("--classifier", choices=["lexicon", "linear"])
    p.add_argument("--lexicon")
    p.add_argument("--model")
    p.add_argument("--baseline", choices=["random"])
    p.add_argument("--scores", help="JSONL of external per-token scores")
    p.add_argument("--scores-out", help="write per-token scores as JSONL")
    p.add_argument("--tau", type=float, default=0.5)
    p.add_argument("--no-gap-fill", action="store_true")
    p.add_argument("--no-word-coherence", action="store_true")
    p.add_argument("--gap-fill-first", action="store_true", help="fill gaps before word coherence")
    p.add_argument("--fusion", action="store_true", help="mask spans by a sentence classifier")
    p.add_argument("--fusion-lexicon")
    p.add_argument("--fusion-model")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", parents=[io_args], help="score predictions against gold")
    p.add_argument("--gold")
    p.add_argument("--by-id", action="store_true", help="pair by document id instead of order")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("augment", parents=[io_args, seed_args], help="EDA augmentation")
    p.add_argument("--synonyms")
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--ops", default=",".join(OPERATIONS), help="comma-separated subset of SR,RI,RS,RD")
    p.add_argument("--copies", type=int, default=1)
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("report", parents=[io_args, tok_args], help="PR curve and confusion counts")
    p.add_argument("--scores")
    p.add_argument("--gold")
    p.add_argument("--grid", default=",".join(f"{k / 20:g}" for k in range(21)))
    p.add_argument("--tau", type=float, default=0.5)
    p.set_defaults(func=cmd_report)
    return parser


_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off", ""}


def read_config(path: str) -> dict[str, str]:
    cfg = {}
    with open(path, encoding="utf-8") as f:
        for n, line in enumerate(f, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{n}: expected key=value")
            key, value = line.split("=", 1)
            cfg[key.strip().lstrip("-").replace("-", "_")] = value.strip()
    return cfg


def _apply_config(parser: argparse.ArgumentParser, cfg: dict[str, str]) -> None:
    subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    used = set()
    for sp in subparsers.choices.values():
        defaults = {}
        for action in sp._actions:
            if action.dest not in cfg:
                continue
            value = cfg[action.dest]
            if isinstance(action, argparse._StoreTrueAction):
                low = value.lower()
                if low not in _TRUE | _FALSE:
                    raise UsageError(f"config key {action.dest}: expected a boolean, got {value!r}")
                defaults[action.dest] = low in _TRUE
            elif action.type is not None:
                try:
                    defaults[action.dest] = action.type(value)
                except ValueError:
                    raise UsageError(f"config key {action.dest}: bad value {value!r}") from None
            else:
                defaults[action.dest] = value
            used.add(action.dest)
        sp.set_defaults(**defaults)
    unknown = set(cfg) - used
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        pre = _Parser(add_help=False)
        pre.add_argument("--config")
        known, _ = pre.parse_known_args(argv)
        config_path = known.config or os.environ.get(CONFIG_ENV)
        if config_path:
            if not Path(config_path).is_file():
                raise UsageError(f"config file not found: {config_path}")
            _apply_config(parser, read_config(config_path))
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, CorpusError, ModelFormatError, EmptyCorpus, LengthMismatch, UnknownDocumentId) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except UnicodeDecodeError as exc:
        print(f"data error: input is not valid UTF-8: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
