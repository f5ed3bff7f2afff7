"""Command-line interface: train, segment, eval, bench and combine.

Configuration precedence is command-line flag, then config file (JSON),
then the per-tag-set defaults. Exit codes: 0 success, 1 usage or config
problem, 2 I/O or malformed input, 3 internal invariant violation.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .corpus import (
    load_corpus,
    load_embeddings,
    read_raw_lines,
    render,
)
from .decoding import DEFAULT_BEAM_WIDTH
from .errors import (
    AlignmentError,
    CheckpointError,
    ConfigError,
    ContractError,
    CorpusError,
    DecodeError,
    GapsegError,
    ShapeError,
    TrainingError,
)
from .evaluation import (
    HYBRID_THRESHOLD,
    bench,
    bench_report_kv,
    bench_report_table,
    bucketed_f1,
    eval_report_kv,
    eval_report_table,
    f1,
    hybrid_combine,
)
from .model import SegmenterConfig
from .training import Checkpoint, TrainConfig, train

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_INTERNAL = 3


class UsageError(GapsegError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _build_parser():
    parser = _Parser(prog="gapseg", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with default option values")
    common.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("train", parents=[common], help="train a segmenter")
    p.add_argument("corpus", help="segmented training corpus (one sentence per line)")
    p.add_argument("--checkpoint", required=True, help="output checkpoint path")
    p.add_argument("--tagset", choices=["01", "be", "bems"], default=None)
    p.add_argument("--embeddings", default=None, help="word2vec text file")
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--dropout", type=float, default=None)
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--patience", type=int, default=None)
    p.add_argument("--embedding-dim", type=int, default=None)
    p.add_argument("--hidden-size", type=int, default=None)
    p.add_argument("--layers", type=int, default=None)
    p.add_argument("--biaffine-size", type=int, default=None)

    p = sub.add_parser("segment", parents=[common], help="segment raw text")
    p.add_argument("input", help="unsegmented text, one sentence per line")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--decoder", choices=["greedy", "beam", "viterbi"], default=None)
    p.add_argument("--beam-width", type=int, default=None)
    p.add_argument("--output", default="-")

    p = sub.add_parser("eval", parents=[common], help="score predictions against gold")
    p.add_argument("gold")
    p.add_argument("pred")
    p.add_argument("--buckets", action="store_true", help="add per-length-bucket rows")
    p.add_argument("--format", choices=["table", "kv"], default="table")

    p = sub.add_parser("bench", parents=[common], help="time inference phases")
    p.add_argument("corpus", help="sentences to time (segmented or raw)")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--decoder", choices=["greedy", "beam", "viterbi"], default=None)
    p.add_argument("--beam-width", type=int, default=None)
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--format", choices=["table", "kv"], default="table")

    p = sub.add_parser("combine", parents=[common], help="merge two segmentations by length")
    p.add_argument("base", help="baseline segmented file")
    p.add_argument("ours", help="long-sentence segmented file")
    p.add_argument("--threshold", type=int, default=None)
    p.add_argument("--output", default="-")
    return parser


def _load_config_file(path):
    if path is None:
        return {}
    try:
        with open(path, "rb") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must contain a JSON object")
    return data


def _setting(args, fileconf, key, default=None):
    value = getattr(args, key, None)
    if value is not None:
        return value
    if key in fileconf:
        return fileconf[key]
    return default


def _write_lines(path, lines):
    text = "".join(line + "\n" for line in lines)
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _cmd_train(args):
    fileconf = _load_config_file(args.config)
    tagset = _setting(args, fileconf, "tagset", "01")
    config = TrainConfig(
        tagset=tagset,
        learning_rate=_setting(args, fileconf, "lr"),
        dropout_p=_setting(args, fileconf, "dropout"),
        batch_size=_setting(args, fileconf, "batch_size", 32),
        max_epochs=_setting(args, fileconf, "epochs", 50),
        seed=_setting(args, fileconf, "seed", 0),
        patience=_setting(args, fileconf, "patience", 10),
    )
    model_config = SegmenterConfig(
        tagset=tagset,
        embedding_dim=_setting(args, fileconf, "embedding_dim", 300),
        hidden_size=_setting(args, fileconf, "hidden_size", 300),
        num_layers=_setting(args, fileconf, "layers", 3),
        biaffine_size=_setting(args, fileconf, "biaffine_size", 300),
    )
    corpus = load_corpus(args.corpus)
    embedding = None
    if args.embeddings:
        from .corpus import Vocabulary, dev_split

        train_sents, _ = dev_split(corpus)
        vocab = Vocabulary.from_corpus(train_sents)
        rng = np.random.default_rng(config.seed)
        with open(args.embeddings, "rb") as fh:
            embedding, report = load_embeddings(
                fh, vocab, model_config.embedding_dim, rng
            )
        print(f"embeddings: loaded={report.loaded} ignored={report.ignored}")

    def progress(stats):
        print(
            f"epoch={stats.epoch} train_loss={stats.train_loss:.6f} "
            f"dev_f1={stats.dev_f1:.6f}",
            flush=True,
        )

    result = train(
        corpus, config, model_config=model_config, embedding=embedding, progress=progress
    )
    result.checkpoint.save(args.checkpoint)
    print(
        f"best epoch={result.checkpoint.epoch} dev_f1={result.checkpoint.dev_f1:.6f} "
        f"checkpoint={args.checkpoint}"
    )
    return EXIT_OK


def _cmd_segment(args):
    fileconf = _load_config_file(args.config)
    model = Checkpoint.load(args.checkpoint).to_model()
    decoder = _setting(args, fileconf, "decoder", "auto")
    width = _setting(args, fileconf, "beam_width", DEFAULT_BEAM_WIDTH)
    if decoder == "greedy" and model.tagset.name != "01":
        raise ConfigError(
            f"greedy decoding is only valid for tag set 01, checkpoint uses "
            f"{model.tagset.name}"
        )
    lines = read_raw_lines(args.input)
    out = []
    for chars in lines:
        if not chars:
            out.append("")
            continue
        out.append(render(model.segment_sentence(chars, decoder=decoder, width=width)))
    _write_lines(args.output, out)
    return EXIT_OK


def _cmd_eval(args):
    gold = load_corpus(args.gold)
    pred = load_corpus(args.pred)
    report = bucketed_f1(gold, pred) if args.buckets else f1(gold, pred)
    lines = eval_report_kv(report) if args.format == "kv" else eval_report_table(report)
    _write_lines("-", lines)
    return EXIT_OK


def _cmd_bench(args):
    fileconf = _load_config_file(args.config)
    model = Checkpoint.load(args.checkpoint).to_model()
    decoder = _setting(args, fileconf, "decoder", "auto")
    width = _setting(args, fileconf, "beam_width", DEFAULT_BEAM_WIDTH)
    sentences = [s.chars for s in load_corpus(args.corpus)]
    report = bench(model, sentences, repeat=args.repeat, decoder=decoder, width=width)
    lines = bench_report_kv(report) if args.format == "kv" else bench_report_table(report)
    _write_lines("-", lines)
    return EXIT_OK


def _cmd_combine(args):
    fileconf = _load_config_file(args.config)
    threshold = _setting(args, fileconf, "threshold", HYBRID_THRESHOLD)
    base = load_corpus(args.base)
    ours = load_corpus(args.ours)
    combined = hybrid_combine(base, ours, threshold=threshold)
    _write_lines(args.output, [render(s) for s in combined])
    return EXIT_OK


_COMMANDS = {
    "train": _cmd_train,
    "segment": _cmd_segment,
    "eval": _cmd_eval,
    "bench": _cmd_bench,
    "combine": _cmd_combine,
}


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, CorpusError, CheckpointError, AlignmentError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ShapeError, ContractError, DecodeError, TrainingError) as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


def console_main():
    sys.exit(main())


if __name__ == "__main__":
    console_main()
