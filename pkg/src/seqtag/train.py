"""Stage 2 driver: Adam optimization, length-bucketed batching, the epoch
loop with dev-set model selection, and prediction."""

from __future__ import annotations

import time
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .corpus import (
    IOB2,
    OUTSIDE,
    CorpusError,
    Dataset,
    Sentence,
    Token,
    Vocabulary,
    build_vocab,
    to_iob2,
)
from .embeddings import EmbeddingTable
from .evaluate import chunk_prf, token_prf
from .nn import (
    EVAL,
    TRAIN,
    Checkpoint,
    NetworkConfig,
    ParamStore,
    SequenceBatch,
    init_params,
    network_forward,
    network_forward_backward,
)

MAX_SENTENCE_LEN = 512
GRAD_CLIP_NORM = 5.0


@dataclass
class TrainConfig:
    batch_size: int = 128
    dropout: float = 0.5
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    max_epochs: int = 50
    patience: int = 10
    seed: int = 0
    freeze_embeddings: bool = False
    precision: str = "f64"

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not 0 <= self.dropout < 1:
            raise ValueError("dropout must be in [0, 1)")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")
        if self.max_epochs < 0 or self.lr <= 0:
            raise ValueError("max_epochs must be >= 0 and lr > 0")


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    dev_token_f1: float
    dev_chunk_f1: float
    seconds: float


@dataclass
class TrainHistory:
    records: list[EpochRecord] = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def best(self, metric: str) -> float:
        return max((getattr(r, metric) for r in self.records), default=0.0)


def format_history(history: TrainHistory, include_time: bool = True) -> str:
    """One tab-separated line per epoch: epoch, train_loss, dev_token_f1,
    dev_chunk_f1, seconds."""
    lines = []
    for r in history.records:
        cols = [str(r.epoch), f"{r.train_loss:.6f}", f"{r.dev_token_f1:.6f}",
                f"{r.dev_chunk_f1:.6f}"]
        if include_time:
            cols.append(f"{r.seconds:.3f}")
        lines.append("\t".join(cols))
    return "\n".join(lines) + ("\n" if lines else "")


def write_history(history: TrainHistory, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(format_history(history))


# ---------------------------------------------------------------------------
# optimizer

def adam_step(store: ParamStore, cfg: TrainConfig) -> None:
    """Bias-corrected Adam update over every non-frozen parameter; gradients
    are zeroed afterwards and the shared step counter advances by one."""
    store.step += 1
    t = store.step
    correct1 = 1.0 - cfg.beta1 ** t
    correct2 = 1.0 - cfg.beta2 ** t
    for name in store.names():
        if name in store.frozen:
            continue
        g = store.grads[name]
        if not np.isfinite(g).all():
            raise FloatingPointError(f"non-finite gradient for parameter {name!r}")
        m = store.adam_m[name]
        v = store.adam_v[name]
        m *= cfg.beta1
        m += (1.0 - cfg.beta1) * g
        v *= cfg.beta2
        v += (1.0 - cfg.beta2) * (g * g)
        update = (cfg.lr * (m / correct1) / (np.sqrt(v / correct2) + cfg.eps))
        store.params[name] -= update.astype(store.params[name].dtype)
    store.zero_grads()


def clip_gradients(store: ParamStore, max_norm: float = GRAD_CLIP_NORM) -> float:
    """Scale all non-frozen gradients so their global L2 norm is at most
    max_norm; returns the pre-clip norm."""
    total = 0.0
    for name in store.names():
        if name in store.frozen:
            continue
        g = store.grads[name]
        total += float(np.sum(g.astype(np.float64) ** 2))
    norm = float(np.sqrt(total))
    if norm > max_norm:
        scale = max_norm / norm
        for name in store.names():
            if name not in store.frozen:
                store.grads[name] *= scale
    return norm


# ---------------------------------------------------------------------------
# batching

def encode_sentence(sent: Sentence, vocab: Vocabulary, tags,
                    require_labels: bool = True):
    word_ids = [vocab.lookup(t.surface) for t in sent.tokens]
    pos_ids = [tags.pos_id(t.pos) for t in sent.tokens]
    if require_labels:
        label_ids = [tags.label_id(t.label) for t in sent.tokens]
    else:
        label_ids = [tags.ne_labels.get(t.label, 0) for t in sent.tokens]
    return word_ids, pos_ids, label_ids


def _pack(encoded, indices) -> SequenceBatch:
    longest = max(len(encoded[i][0]) for i in indices)
    n = len(indices)
    word_ids = np.zeros((n, longest), dtype=np.int64)
    pos_ids = np.full((n, longest), -1, dtype=np.int64)
    label_ids = np.zeros((n, longest), dtype=np.int64)
    mask = np.zeros((n, longest), dtype=np.int8)
    for row, i in enumerate(indices):
        w, p, l = encoded[i]
        word_ids[row, :len(w)] = w
        pos_ids[row, :len(p)] = p
        label_ids[row, :len(l)] = l
        mask[row, :len(w)] = 1
    return SequenceBatch(word_ids, pos_ids, label_ids, mask, list(indices))


def make_batches(dataset: Dataset, vocab: Vocabulary, tags, batch_size: int,
                 seed: int = 0, shuffle: bool = True,
                 require_labels: bool = True) -> list[SequenceBatch]:
    """Shuffle sentences, sort by length inside windows of 4 x batch_size to
    limit padding, and chunk. Every sentence appears in exactly one batch;
    sentence_index maps rows back to dataset order."""
    for i, sent in enumerate(dataset.sentences):
        if len(sent) > MAX_SENTENCE_LEN:
            raise CorpusError(
                f"sentence {i} has {len(sent)} tokens (hard cap {MAX_SENTENCE_LEN})")
    encoded = [encode_sentence(s, vocab, tags, require_labels)
               for s in dataset.sentences]
    order = np.arange(len(encoded))
    if shuffle:
        order = np.random.default_rng(seed).permutation(len(encoded))
        window = 4 * batch_size
        bucketed = []
        for lo in range(0, len(order), window):
            chunk = sorted(order[lo:lo + window],
                           key=lambda i: (len(encoded[i][0]), i))
            bucketed.extend(chunk)
        order = bucketed
    return [
        _pack(encoded, [int(i) for i in order[lo:lo + batch_size]])
        for lo in range(0, len(order), batch_size)
    ]


# ---------------------------------------------------------------------------
# training

def _selection_metric(scheme: str) -> str:
    return "dev_chunk_f1" if scheme == IOB2 else "dev_token_f1"


def _dev_f1(dev: Dataset, predicted: list[list[str]], scheme: str):
    gold_labels = dev.labels()
    token_f1 = token_prf(gold_labels, predicted).total.f1
    if scheme == IOB2:
        chunk_gold, chunk_pred = gold_labels, predicted
    else:
        chunk_gold = [to_iob2(seq) for seq in gold_labels]
        chunk_pred = [to_iob2(seq) for seq in predicted]
    chunk_f1 = chunk_prf(chunk_gold, chunk_pred).total.f1
    return token_f1, chunk_f1


def _predict_encoded(batches, config, store, label_symbols):
    out = {}
    for batch in batches:
        _, preds = network_forward(batch, config, store, mode=EVAL)
        for row, sent_idx in enumerate(batch.sentence_index):
            n = int(batch.mask[row].sum())
            out[sent_idx] = [label_symbols[p] for p in preds[row, :n]]
    return [out[i] for i in range(len(out))]


def train_ner(train: Dataset, dev: Dataset, net: NetworkConfig, cfg: TrainConfig,
              embeddings: EmbeddingTable | None = None,
              log=None) -> tuple[Checkpoint, TrainHistory]:
    """Train a tagger, keeping the checkpoint with the best dev F1.

    The vocabulary and tag inventory come from the training split only; a
    pretrained EmbeddingTable is realigned onto that vocabulary (missing
    words get a seeded init row) and its PAD row is zeroed. Without one,
    embeddings start uniform in [-0.5/d, 0.5/d). Model selection uses chunk
    F1 for IOB2 data and token F1 for RAW data; training stops after
    ``patience`` epochs without improvement.
    """
    if not dev.sentences:
        raise CorpusError("empty dev set")
    tags = train.tag_inventory
    missing = set(dev.tag_inventory.ne_labels) - set(tags.ne_labels)
    if missing:
        raise CorpusError(
            f"tag mismatch: dev labels {sorted(missing)} never occur in train")

    vocab = build_vocab(train, min_count=1)
    if embeddings is not None:
        table = embeddings.aligned_to(vocab, seed=cfg.seed).zero_pad_row()
        emb_matrix = table.matrix
        net = replace(net, embed_dim=table.dim)
    else:
        emb_matrix = None

    net = replace(net, pos_count=len(tags.pos_tags), classes=len(tags.ne_labels),
                  dropout=cfg.dropout)
    store = init_params(net, len(vocab), seed=cfg.seed, precision=cfg.precision,
                        embeddings=emb_matrix)
    if emb_matrix is None:
        store["emb"][0] = 0.0  # PAD row contributes nothing either way
    if cfg.freeze_embeddings:
        store.freeze("emb")

    eval_net = replace(net, dropout=0.0)
    dev_batches = make_batches(dev, vocab, tags, cfg.batch_size, shuffle=False)
    label_symbols = tags.label_symbols
    scheme = tags.scheme
    metric = _selection_metric(scheme)

    history = TrainHistory()
    meta = {"seed": str(cfg.seed), "scheme": scheme, "selection": metric}
    best = Checkpoint(net, store, vocab, tags, cfg.precision, dict(meta))
    best_params = store.snapshot()
    best_f1 = -1.0
    stale = 0

    for epoch in range(cfg.max_epochs):
        start = time.perf_counter()
        batches = make_batches(train, vocab, tags, cfg.batch_size,
                               seed=_mix(cfg.seed, epoch))
        loss_sum = 0.0
        token_sum = 0
        for bi, batch in enumerate(batches):
            rng = np.random.default_rng((cfg.seed, epoch, bi))
            loss, _ = network_forward_backward(batch, net, store, mode=TRAIN, rng=rng)
            loss_sum += loss * batch.n_tokens
            token_sum += batch.n_tokens
            clip_gradients(store)
            adam_step(store, cfg)
        predicted = _predict_encoded(dev_batches, eval_net, store, label_symbols)
        token_f1, chunk_f1 = _dev_f1(dev, predicted, scheme)
        record = EpochRecord(epoch, loss_sum / max(token_sum, 1), token_f1,
                             chunk_f1, time.perf_counter() - start)
        history.records.append(record)
        if log is not None:
            log(record)
        current = getattr(record, metric)
        if current > best_f1:
            best_f1 = current
            best_params = store.snapshot()
            stale = 0
        else:
            stale += 1
            if stale >= cfg.patience:
                break

    final_store = ParamStore()
    for name, value in best_params.items():
        final_store.add(name, value)
    best.store = final_store
    if history.records:
        best.meta["best_" + metric] = f"{best_f1:.6f}"
    return best, history


def _mix(seed: int, epoch: int) -> int:
    return (seed * 1_000_003 + epoch) % (2 ** 63)


# ---------------------------------------------------------------------------
# prediction

def predict(checkpoint: Checkpoint, sentences: list[Sentence],
            batch_size: int = 128) -> list[Sentence]:
    """Tag sentences (which must carry POS) with argmax labels in EVAL mode.

    Unknown words map to UNK, unknown POS tags to the all-zero block.
    """
    if not sentences:
        return []
    dataset = Dataset([Sentence([Token(t.surface, t.pos, OUTSIDE) for t in s.tokens])
                       for s in sentences], tag_inventory=checkpoint.tags)
    batches = make_batches(dataset, checkpoint.vocab, checkpoint.tags, batch_size,
                           shuffle=False, require_labels=False)
    config = replace(checkpoint.config, dropout=0.0)
    labels = _predict_encoded(batches, config, checkpoint.store,
                              checkpoint.tags.label_symbols)
    return [
        Sentence([Token(t.surface, t.pos, label)
                  for t, label in zip(sent.tokens, sent_labels)])
        for sent, sent_labels in zip(sentences, labels)
    ]


def predict_dataset(checkpoint: Checkpoint, dataset: Dataset,
                    batch_size: int = 128) -> list[list[str]]:
    """Predicted label sequences for each sentence of a dataset."""
    return [s.labels() for s in predict(checkpoint, dataset.sentences, batch_size)]


# ---------------------------------------------------------------------------
# experiment config files: flat key=value text

_NETWORK_KEYS = {"cell", "bidirectional", "layers", "hidden", "embed_dim",
                 "pos_count", "classes"}


def load_config_file(path) -> tuple[dict, dict]:
    """Parse flat key=value lines into (network overrides, train overrides).

    Keys must match NetworkConfig/TrainConfig field names; ``dropout`` feeds
    both. Unknown keys are an error.
    """
    train_fields = {f.name: f.type for f in fields(TrainConfig)}
    net_overrides: dict = {}
    train_overrides: dict = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ValueError(f"line {lineno}: expected key=value, got {line!r}")
            key = key.strip()
            value = value.strip()
            if key in _NETWORK_KEYS:
                net_overrides[key] = _coerce(key, value)
            elif key in train_fields:
                train_overrides[key] = _coerce(key, value)
            else:
                raise ValueError(f"line {lineno}: unknown config key {key!r}")
    return net_overrides, train_overrides


def _coerce(key: str, value: str):
    if key in ("bidirectional", "freeze_embeddings"):
        if value not in ("true", "false"):
            raise ValueError(f"{key} must be true or false, got {value!r}")
        return value == "true"
    if key in ("cell", "precision"):
        return value
    if key in ("layers", "hidden", "embed_dim", "pos_count", "classes",
               "batch_size", "max_epochs", "patience", "seed"):
        return int(value)
    return float(value)
