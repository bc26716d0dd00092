"""Skip-gram with negative sampling, trained by SGD over (center, context)
pairs drawn with a per-center dynamic window.

Updates are applied one sentence at a time with the sentence's pair block
vectorized (gradients of colliding rows within a block accumulate), which
keeps single-worker runs bit-deterministic for a given seed.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import numpy as np

from ..corpus import Vocabulary
from .vectors import EmbeddingTable

NOISE_POWER = 0.75
MIN_LR_FACTOR = 1e-4


@dataclass
class SgnsConfig:
    dim: int = 300
    window: int = 5
    negatives: int = 5
    subsample: float = 1e-4
    epochs: int = 5
    lr: float = 0.025
    seed: int = 0
    dynamic_window: bool = True
    workers: int = 1

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.window < 1:
            raise ValueError("window must be >= 1")
        if self.negatives < 1:
            raise ValueError("negatives must be >= 1")
        if not 0 < self.subsample <= 1:
            raise ValueError("subsample threshold must be in (0, 1]")
        if self.epochs < 0 or self.lr <= 0 or self.workers < 1:
            raise ValueError("epochs must be >= 0, lr > 0, workers >= 1")


def subsample_keep_probs(vocab: Vocabulary, threshold: float) -> np.ndarray:
    """Keep probability sqrt(t / f(w)) per word id, capped at 1; a token is
    dropped before pairing with probability 1 - sqrt(t / f(w))."""
    total = max(vocab.total_count, 1)
    keep = np.ones(len(vocab))
    for idx, count in enumerate(vocab.counts):
        if count > 0:
            keep[idx] = min(1.0, math.sqrt(threshold * total / count))
    return keep


class NoiseTable:
    """Negative-sampling distribution: unigram counts raised to 0.75."""

    def __init__(self, vocab: Vocabulary, power: float = NOISE_POWER):
        ids = [i for i, c in enumerate(vocab.counts) if c > 0]
        if not ids:
            raise ValueError("vocabulary has no counted words")
        self.ids = np.array(ids, dtype=np.int64)
        weights = np.array([vocab.counts[i] for i in ids], dtype=np.float64) ** power
        self.cumulative = np.cumsum(weights) / weights.sum()

    def __len__(self):
        return len(self.ids)

    def sample(self, rng: np.random.Generator, shape) -> np.ndarray:
        u = rng.random(shape)
        return self.ids[np.searchsorted(self.cumulative, u, side="right")]


def generate_skipgram_pairs(ids, window: int, rng=None, dynamic: bool = True,
                            keep_probs=None) -> list[tuple[int, int]]:
    """All ordered (center, context) pairs within the effective window.

    With ``dynamic`` the window per center is uniform in 1..window (the
    word2vec convention); frequent-word subsampling, when keep_probs is
    given, drops tokens before any pairing.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    if rng is None and (dynamic or keep_probs is not None):
        raise ValueError("dynamic windows and subsampling need an rng")
    ids = list(ids)
    if keep_probs is not None and ids:
        u = rng.random(len(ids))
        ids = [w for w, x in zip(ids, u) if x < keep_probs[w]]
    pairs = []
    n = len(ids)
    for i in range(n):
        reach = int(rng.integers(1, window + 1)) if dynamic else window
        for j in range(max(0, i - reach), min(n, i + reach + 1)):
            if j != i:
                pairs.append((ids[i], ids[j]))
    return pairs


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-np.clip(x, -50.0, 50.0)))


def _sgns_sentence(sent_ids, w_in, w_out, noise, keep, cfg, rng, lr):
    """One vectorized SGD step over a sentence's pairs; returns (loss, n_pairs)."""
    pairs = generate_skipgram_pairs(sent_ids, cfg.window, rng,
                                    dynamic=cfg.dynamic_window, keep_probs=keep)
    if not pairs:
        return 0.0, 0
    centers = np.array([p[0] for p in pairs], dtype=np.int64)
    contexts = np.array([p[1] for p in pairs], dtype=np.int64)
    negatives = noise.sample(rng, (len(pairs), cfg.negatives))

    v = w_in[centers]                       # (P, d)
    u = w_out[contexts]                     # (P, d)
    un = w_out[negatives]                   # (P, k, d)
    s_pos = _sigmoid(np.einsum("pd,pd->p", v, u))
    s_neg = _sigmoid(np.einsum("pd,pkd->pk", v, un))
    loss = -(np.sum(np.log(np.maximum(s_pos, 1e-12)))
             + np.sum(np.log(np.maximum(1.0 - s_neg, 1e-12))))

    g_pos = s_pos - 1.0
    grad_v = g_pos[:, None] * u + np.einsum("pk,pkd->pd", s_neg, un)
    np.add.at(w_in, centers, -lr * grad_v)
    np.add.at(w_out, contexts, -lr * (g_pos[:, None] * v))
    np.add.at(w_out, negatives.reshape(-1),
              (-lr * s_neg[..., None] * v[:, None, :]).reshape(-1, v.shape[1]))
    return float(loss), len(pairs)


def _sgns_shard(corpus, offset, stride, w_in, w_out, noise, keep, cfg, rng,
                processed_before, budget, out, slot):
    """Process every stride-th sentence; workers share w_in/w_out unsynchronized."""
    loss = 0.0
    n_pairs = 0
    n_sents = 0
    processed = processed_before
    for idx, sent in enumerate(corpus):
        if idx % stride != offset:
            continue
        lr = max(cfg.lr * (1.0 - processed / budget), cfg.lr * MIN_LR_FACTOR)
        l, p = _sgns_sentence(sent, w_in, w_out, noise, keep, cfg, rng, lr)
        processed += len(sent) * stride
        loss += l
        n_pairs += p
        n_sents += 1
    out[slot] = (loss, n_pairs, n_sents, processed)


def train_sgns(corpus, vocab: Vocabulary, cfg: SgnsConfig,
               callback=None) -> EmbeddingTable:
    """Train input (center) vectors over a re-iterable stream of token-id
    sentences and return them as an EmbeddingTable.

    With workers > 1 shards train concurrently with unsynchronized updates,
    so only workers=1 is deterministic. ``callback(epoch, mean_pair_loss)``
    is invoked after each epoch.
    """
    noise = NoiseTable(vocab)
    if len(noise) < cfg.negatives + 1:
        raise ValueError("too few words for negative sampling")
    keep = subsample_keep_probs(vocab, cfg.subsample) if cfg.subsample < 1 else None

    rng = np.random.default_rng(cfg.seed)
    w_in = (rng.random((len(vocab), cfg.dim)) - 0.5) / cfg.dim
    w_out = np.zeros((len(vocab), cfg.dim))

    budget = max(1, vocab.total_count * max(cfg.epochs, 1))
    processed = 0
    first_epoch_sents = None
    for epoch in range(cfg.epochs):
        out = {}
        if cfg.workers == 1:
            _sgns_shard(corpus, 0, 1, w_in, w_out, noise, keep, cfg, rng,
                        processed, budget, out, 0)
        else:
            threads = [
                threading.Thread(
                    target=_sgns_shard,
                    args=(corpus, w, cfg.workers, w_in, w_out, noise, keep, cfg,
                          np.random.default_rng((cfg.seed, epoch, w)),
                          processed, budget, out, w))
                for w in range(cfg.workers)
            ]
            for t in threads:
                t.start()
            for t in threads:
                t.join()
        results = [out[w] for w in sorted(out)]
        loss = sum(r[0] for r in results)
        n_pairs = sum(r[1] for r in results)
        n_sents = sum(r[2] for r in results)
        processed = max(r[3] for r in results)
        if n_sents == 0:
            raise ValueError("empty corpus" if first_epoch_sents is None
                             else "corpus is not re-iterable across epochs")
        if first_epoch_sents is None:
            first_epoch_sents = n_sents
        if callback is not None:
            callback(epoch, loss / max(n_pairs, 1))
    if cfg.epochs == 0 and not any(True for _ in corpus):
        raise ValueError("empty corpus")
    return EmbeddingTable(vocab, w_in.copy())
