"""Command-line surface for the full pipeline.

Subcommands: train-embeddings, split, train-ner, predict, evaluate.
Exit codes: 0 success, 2 usage error, 3 data/model error. Training
commands write a run manifest (flags, seed, input digests) before work
starts so every run is reproducible from its manifest.
"""

from __future__ import annotations

import argparse
import hashlib
import os
import sys
import time

from . import __version__
from .corpus import (
    CONLL,
    CorpusError,
    IOB2,
    SSF,
    build_vocab,
    detect_scheme,
    iter_token_lines,
    load_dataset,
    normalize_labels,
    parse_conll,
    random_split,
    save_dataset,
    split_indices,
    write_split_manifest,
)
from .embeddings import (
    GloveConfig,
    SgnsConfig,
    VectorFileError,
    build_cooccurrence,
    load_vectors,
    save_vectors,
    train_glove,
    train_sgns,
)
from .evaluate import format_report, read_interchange, token_prf, chunk_prf, write_interchange
from .nn import Checkpoint, CheckpointError, NetworkConfig
from .train import TrainConfig, load_config_file, predict, predict_dataset, train_ner, write_history

DATA_ERRORS = (CorpusError, VectorFileError, CheckpointError, ValueError,
               FloatingPointError, KeyError, OSError)


class TokenizedCorpus:
    """Re-iterable stream of token-id sentences from a tokenized text file."""

    def __init__(self, path, vocab):
        self.path = path
        self.vocab = vocab

    def __iter__(self):
        for words in iter_token_lines(self.path):
            yield self.vocab.encode(words)


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def write_manifest(path, command: str, args: argparse.Namespace, inputs) -> None:
    lines = [
        f"command: {command}",
        f"toolkit_version: {__version__}",
        f"started_utc: {time.strftime('%Y-%m-%dT%H:%M:%SZ', time.gmtime())}",
        f"argv: {' '.join(sys.argv[1:]) if sys.argv[1:] else '(api)'}",
    ]
    for key in sorted(vars(args)):
        if key == "func":
            continue
        lines.append(f"arg.{key}: {getattr(args, key)}")
    for name in inputs:
        lines.append(f"sha256.{os.path.basename(str(name))}: {_sha256(name)}")
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")


def _precision(args) -> str:
    env = os.environ.get("SEQTAG_PRECISION")
    if env:
        if env not in ("f32", "f64"):
            raise ValueError(f"SEQTAG_PRECISION must be f32 or f64, got {env!r}")
        return env
    return args.precision


def _bool_flag(value: str) -> bool:
    return value == "true"


# ---------------------------------------------------------------------------
# subcommands

def cmd_train_embeddings(args) -> int:
    vocab = build_vocab(iter_token_lines(args.corpus), min_count=args.min_count)
    corpus = TokenizedCorpus(args.corpus, vocab)
    write_manifest(args.out + ".manifest", "train-embeddings", args, [args.corpus])

    def log(epoch, value):
        print(f"epoch {epoch}\tloss {value:.6f}", file=sys.stderr)

    if args.method == "sgns":
        cfg = SgnsConfig(dim=args.dim, window=args.window, negatives=args.negatives,
                         subsample=args.subsample, epochs=args.epochs,
                         lr=args.lr if args.lr is not None else 0.025,
                         seed=args.seed, workers=args.workers)
        table = train_sgns(corpus, vocab, cfg, callback=log)
    else:
        cfg = GloveConfig(dim=args.dim, window=args.window, x_max=args.x_max,
                          alpha=args.alpha, epochs=args.epochs,
                          lr=args.lr if args.lr is not None else 0.05,
                          seed=args.seed, workers=args.workers)
        table = train_glove(build_cooccurrence(corpus, args.window), vocab, cfg,
                            callback=log)
    save_vectors(table, args.out)
    print(f"wrote {len(vocab)} x {table.dim} vectors to {args.out}")
    return 0


def cmd_split(args) -> int:
    dataset = load_dataset(args.input, args.format)
    if len(dataset.sentences) < 3:
        raise CorpusError("too few sentences to split")
    train, dev, test = random_split(dataset, args.ratios, args.seed)
    os.makedirs(args.out_dir, exist_ok=True)
    idx = split_indices(len(dataset.sentences), args.ratios, args.seed)
    write_split_manifest(os.path.join(args.out_dir, "split.manifest"), *idx)
    for name, part in (("train", train), ("dev", dev), ("test", test)):
        save_dataset(part, os.path.join(args.out_dir, f"{name}.{args.format}"), args.format)
    write_manifest(os.path.join(args.out_dir, "run.manifest"), "split", args, [args.input])
    print(f"split {len(dataset)} sentences into "
          f"{len(train)}/{len(dev)}/{len(test)} under {args.out_dir}")
    return 0


def _prepare_tagged(path, fmt):
    dataset = load_dataset(path, fmt)
    if dataset.tag_inventory.scheme == IOB2:
        dataset = normalize_labels(dataset, IOB2)  # lenient repair
    return dataset


def cmd_train_ner(args) -> int:
    train = _prepare_tagged(args.train, args.format)
    dev = _prepare_tagged(args.dev, args.format)

    net_over: dict = {}
    train_over: dict = {}
    if args.config:
        net_over, train_over = load_config_file(args.config)
    net = NetworkConfig(
        cell=net_over.get("cell", args.cell),
        bidirectional=net_over.get("bidirectional", _bool_flag(args.bidirectional)),
        layers=net_over.get("layers", args.layers),
        hidden=net_over.get("hidden", args.hidden),
        embed_dim=net_over.get("embed_dim", args.embed_dim),
        classes=2,  # rebuilt from the training tag inventory inside train_ner
    )
    cfg = TrainConfig(
        batch_size=train_over.get("batch_size", args.batch_size),
        dropout=train_over.get("dropout", args.dropout),
        lr=train_over.get("lr", args.lr),
        max_epochs=train_over.get("max_epochs", args.epochs),
        patience=train_over.get("patience", args.patience),
        seed=train_over.get("seed", args.seed),
        freeze_embeddings=train_over.get("freeze_embeddings", args.freeze_embeddings),
        precision=train_over.get("precision", _precision(args)),
    )

    inputs = [args.train, args.dev]
    if args.embeddings != "random":
        inputs.append(args.embeddings)
    os.makedirs(args.out, exist_ok=True)
    write_manifest(os.path.join(args.out, "run.manifest"), "train-ner", args, inputs)

    table = None
    if args.embeddings != "random":
        table = load_vectors(args.embeddings, seed=cfg.seed)

    def log(record):
        print(f"epoch {record.epoch}\tloss {record.train_loss:.6f}"
              f"\tdev_token_f1 {record.dev_token_f1:.4f}"
              f"\tdev_chunk_f1 {record.dev_chunk_f1:.4f}", file=sys.stderr)

    checkpoint, history = train_ner(train, dev, net, cfg, embeddings=table, log=log)
    checkpoint.save(args.out)
    write_history(history, os.path.join(args.out, "history.tsv"))
    best = checkpoint.meta.get("best_" + checkpoint.meta.get("selection", ""), "n/a")
    print(f"saved checkpoint to {args.out} (best dev F1: {best})")
    return 0


def cmd_predict(args) -> int:
    checkpoint = Checkpoint.load(args.checkpoint)
    with open(args.input, encoding="utf-8") as f:
        text = f.read()
    if not text.strip():
        open(args.out, "w", encoding="utf-8").close()
        print(f"wrote empty prediction file to {args.out}")
        return 0
    if args.format == SSF:
        from .corpus import parse_ssf
        dataset = parse_ssf(text)
    else:
        try:
            dataset = parse_conll(text, require_label=False)
        except CorpusError as err:
            if "POS" in str(err) or "surface and POS" in str(err):
                raise CorpusError(
                    "prediction input needs a POS column (surface pos [label])") from err
            raise
    predicted = predict(checkpoint, dataset.sentences)
    write_interchange(args.out, dataset, [s.labels() for s in predicted])
    print(f"wrote predictions for {len(dataset)} sentences to {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    if args.pred:
        gold, predicted = read_interchange(args.pred)
    elif args.checkpoint and args.test:
        checkpoint = Checkpoint.load(args.checkpoint)
        gold = _prepare_tagged(args.test, args.format)
        predicted = predict_dataset(checkpoint, gold)
    else:
        raise ValueError("need either --pred or both --checkpoint and --test")
    gold_labels = gold.labels()
    token_report = token_prf(gold_labels, predicted)
    print("token level:")
    print(format_report(token_report, machine=args.machine))
    if detect_scheme({l for seq in gold_labels for l in seq}) == IOB2:
        chunk_gold, chunk_pred = gold_labels, predicted
    else:
        from .corpus import to_iob2
        chunk_gold = [to_iob2(seq) for seq in gold_labels]
        chunk_pred = [to_iob2(seq) for seq in predicted]
    print("chunk level:")
    print(format_report(chunk_prf(chunk_gold, chunk_pred), machine=args.machine))
    return 0


# ---------------------------------------------------------------------------
# parser

def _ratios(text: str):
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("ratios must be three comma-separated numbers")
    try:
        values = tuple(float(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError("ratios must be numbers") from None
    if min(values) <= 0 or abs(sum(values) - 1.0) > 1e-9:
        raise argparse.ArgumentTypeError("ratios must be positive and sum to 1")
    return values


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="seqtag",
        description="two-stage neural sequence labeling (word vectors + recurrent tagger)")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train-embeddings", help="train word vectors on raw text")
    p.add_argument("--method", choices=["sgns", "glove"], required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--dim", type=_positive_int, default=300)
    p.add_argument("--window", type=_positive_int, default=5)
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--min-count", type=_positive_int, default=1)
    p.add_argument("--negatives", type=_positive_int, default=5)
    p.add_argument("--subsample", type=float, default=1e-4)
    p.add_argument("--lr", type=float, default=None,
                   help="default 0.025 for sgns, 0.05 for glove")
    p.add_argument("--x-max", type=float, default=100.0)
    p.add_argument("--alpha", type=float, default=0.75)
    p.add_argument("--workers", type=_positive_int, default=1,
                   help="shard-parallel training; >1 is non-deterministic")
    p.set_defaults(func=cmd_train_embeddings)

    p = sub.add_parser("split", help="random sentence-level train/dev/test split")
    p.add_argument("--input", required=True)
    p.add_argument("--format", choices=[CONLL, SSF], default=CONLL)
    p.add_argument("--ratios", type=_ratios, default=(0.70, 0.17, 0.13))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("train-ner", help="train the recurrent tagger")
    p.add_argument("--train", required=True)
    p.add_argument("--dev", required=True)
    p.add_argument("--format", choices=[CONLL, SSF], default=CONLL)
    p.add_argument("--cell", choices=["rnn", "lstm"], default="lstm")
    p.add_argument("--bidirectional", choices=["true", "false"], default="true")
    p.add_argument("--layers", type=int, choices=[1, 2], default=1)
    p.add_argument("--hidden", type=_positive_int, default=100)
    p.add_argument("--embeddings", default="random",
                   help="vector file path, or 'random' for seeded random init")
    p.add_argument("--embed-dim", type=_positive_int, default=100,
                   help="embedding width for --embeddings random")
    p.add_argument("--batch-size", type=_positive_int, default=128)
    p.add_argument("--dropout", type=float, default=0.5)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--patience", type=_positive_int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--freeze-embeddings", action="store_true")
    p.add_argument("--precision", choices=["f32", "f64"], default="f64")
    p.add_argument("--config", default=None, help="key=value config file")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train_ner)

    p = sub.add_parser("predict", help="tag new sentences with a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--format", choices=[CONLL, SSF], default=CONLL)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="score predictions at token and chunk level")
    p.add_argument("--pred", default=None,
                   help="4-column interchange file (surface pos gold pred)")
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--test", default=None)
    p.add_argument("--format", choices=[CONLL, SSF], default=CONLL)
    p.add_argument("--machine", action="store_true", help="tab-separated output")
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DATA_ERRORS as err:
        print(f"seqtag: error: {err}", file=sys.stderr)
        return 3


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
