"""GloVe: weighted least squares on the log co-occurrence matrix.

The co-occurrence table adds 1/d for every ordered token pair at distance
d <= window, so it is symmetric by construction. Training iterates the
non-zero entries with AdaGrad per-parameter steps and exports w + w~.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass

import numpy as np

from ..corpus import Vocabulary
from .vectors import EmbeddingTable

SPILL_DTYPE = np.dtype([("center", "<u4"), ("context", "<u4"), ("weight", "<f8")])


@dataclass
class GloveConfig:
    dim: int = 300
    window: int = 5
    x_max: float = 100.0
    alpha: float = 0.75
    epochs: int = 25
    lr: float = 0.05
    seed: int = 0
    workers: int = 1
    block: int = 1024

    def __post_init__(self):
        if self.dim < 1 or self.window < 1:
            raise ValueError("dim and window must be >= 1")
        if self.x_max <= 0:
            raise ValueError("x_max must be positive")
        if not 0 < self.alpha <= 1:
            raise ValueError("alpha must be in (0, 1]")
        if self.epochs < 0 or self.lr <= 0 or self.workers < 1 or self.block < 1:
            raise ValueError("epochs must be >= 0, lr > 0, workers/block >= 1")


class CooccurrenceTable:
    """Sparse (center, context) -> weighted count map."""

    def __init__(self, window: int, symmetric: bool = True):
        self.window = window
        self.symmetric = symmetric
        self._counts: dict[tuple[int, int], float] = {}

    def add(self, center: int, context: int, weight: float) -> None:
        if not np.isfinite(weight) or weight < 0:
            raise ValueError(f"co-occurrence weight must be finite and >= 0, got {weight}")
        key = (int(center), int(context))
        self._counts[key] = self._counts.get(key, 0.0) + weight

    def get(self, center: int, context: int) -> float:
        return self._counts.get((int(center), int(context)), 0.0)

    def __len__(self):
        return len(self._counts)

    @property
    def total_mass(self) -> float:
        return sum(self._counts.values())

    def arrays(self):
        """Entries as (center, context, weight) arrays in sorted key order."""
        keys = sorted(self._counts)
        i = np.array([k[0] for k in keys], dtype=np.int64)
        j = np.array([k[1] for k in keys], dtype=np.int64)
        x = np.array([self._counts[k] for k in keys])
        return i, j, x

    def merge(self, other: "CooccurrenceTable") -> "CooccurrenceTable":
        """Addition is commutative, so shard merge order does not matter."""
        for (i, j), w in other._counts.items():
            self.add(i, j, w)
        return self

    def save_spill(self, path) -> None:
        """Binary spill: little-endian (u32 center, u32 context, f64 weight)."""
        i, j, x = self.arrays()
        records = np.empty(len(i), dtype=SPILL_DTYPE)
        records["center"], records["context"], records["weight"] = i, j, x
        records.tofile(path)

    @classmethod
    def load_spill(cls, path, window: int, symmetric: bool = True) -> "CooccurrenceTable":
        table = cls(window, symmetric)
        for rec in np.fromfile(path, dtype=SPILL_DTYPE):
            table.add(int(rec["center"]), int(rec["context"]), float(rec["weight"]))
        return table


def build_cooccurrence(corpus, window: int) -> CooccurrenceTable:
    """Accumulate 1/d for every ordered pair at distance d <= window."""
    if window < 1:
        raise ValueError("window must be >= 1")
    table = CooccurrenceTable(window)
    for sent in corpus:
        sent = list(sent)
        n = len(sent)
        for i in range(n):
            for d in range(1, window + 1):
                j = i + d
                if j >= n:
                    break
                table.add(sent[i], sent[j], 1.0 / d)
                table.add(sent[j], sent[i], 1.0 / d)
    return table


def glove_weight(x, x_max: float, alpha: float):
    """f(x) = (x / x_max)^alpha below x_max, 1 from x_max on (continuous)."""
    return np.minimum((np.asarray(x, dtype=np.float64) / x_max) ** alpha, 1.0)


def glove_objective(i_arr, j_arr, x_arr, w, wt, b, bt, x_max, alpha) -> float:
    """Sum of f(x_ij) (w_i . w~_j + b_i + b~_j - log x_ij)^2 over entries."""
    diff = np.einsum("pd,pd->p", w[i_arr], wt[j_arr]) + b[i_arr] + bt[j_arr] - np.log(x_arr)
    return float(np.sum(glove_weight(x_arr, x_max, alpha) * diff * diff))


def _glove_shard(order, i_arr, j_arr, logx, f, w, wt, b, bt, gw, gwt, gb, gbt, cfg):
    lr = cfg.lr
    for lo in range(0, len(order), cfg.block):
        block = order[lo:lo + cfg.block]
        bi, bj = i_arr[block], j_arr[block]
        wi, wj = w[bi], wt[bj]
        diff = np.einsum("pd,pd->p", wi, wj) + b[bi] + bt[bj] - logx[block]
        fdiff = f[block] * diff
        grad_i = fdiff[:, None] * wj
        grad_j = fdiff[:, None] * wi
        np.add.at(w, bi, -lr * grad_i / np.sqrt(gw[bi]))
        np.add.at(wt, bj, -lr * grad_j / np.sqrt(gwt[bj]))
        np.add.at(b, bi, -lr * fdiff / np.sqrt(gb[bi]))
        np.add.at(bt, bj, -lr * fdiff / np.sqrt(gbt[bj]))
        np.add.at(gw, bi, grad_i * grad_i)
        np.add.at(gwt, bj, grad_j * grad_j)
        np.add.at(gb, bi, fdiff * fdiff)
        np.add.at(gbt, bj, fdiff * fdiff)


def train_glove(table: CooccurrenceTable, vocab: Vocabulary, cfg: GloveConfig,
                callback=None) -> EmbeddingTable:
    """Fit vectors to the non-zero entries and return w + w~ as the table.

    ``callback(epoch, objective)`` receives the exact objective evaluated at
    the end of each epoch. workers=1 is the deterministic mode.
    """
    if len(table) == 0:
        raise ValueError("empty co-occurrence table")
    i_arr, j_arr, x_arr = table.arrays()
    if (x_arr <= 0).any():
        raise ValueError("co-occurrence entries must be positive")
    size = len(vocab)
    if int(max(i_arr.max(), j_arr.max())) >= size:
        raise ValueError("co-occurrence ids exceed vocabulary size")

    rng = np.random.default_rng(cfg.seed)
    scale = 1.0 / (cfg.dim + 1)
    w = (rng.random((size, cfg.dim)) - 0.5) * scale
    wt = (rng.random((size, cfg.dim)) - 0.5) * scale
    b = (rng.random(size) - 0.5) * scale
    bt = (rng.random(size) - 0.5) * scale
    gw = np.ones((size, cfg.dim))
    gwt = np.ones((size, cfg.dim))
    gb = np.ones(size)
    gbt = np.ones(size)

    logx = np.log(x_arr)
    f = glove_weight(x_arr, cfg.x_max, cfg.alpha)

    for epoch in range(cfg.epochs):
        order = rng.permutation(len(x_arr))
        if cfg.workers == 1:
            _glove_shard(order, i_arr, j_arr, logx, f, w, wt, b, bt,
                         gw, gwt, gb, gbt, cfg)
        else:
            shards = np.array_split(order, cfg.workers)
            threads = [
                threading.Thread(target=_glove_shard,
                                 args=(shard, i_arr, j_arr, logx, f, w, wt, b, bt,
                                       gw, gwt, gb, gbt, cfg))
                for shard in shards
            ]
            for t in threads:
                t.start()
            for t in threads:
                t.join()
        if callback is not None:
            callback(epoch, glove_objective(i_arr, j_arr, x_arr, w, wt, b, bt,
                                            cfg.x_max, cfg.alpha))
    return EmbeddingTable(vocab, w + wt)
