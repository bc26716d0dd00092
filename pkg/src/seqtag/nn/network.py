"""Network assembly: embedding+POS input, stacked (bi)recurrent layers with
dropout, per-token projection, softmax loss, and the full backward pass."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .layers import (
    EVAL,
    TRAIN,
    dense_backward,
    dense_forward,
    dropout_backward,
    dropout_forward,
    embed_concat,
    embed_concat_backward,
    softmax_xent,
)
from .params import ParamStore, orthogonal, resolve_dtype, xavier_uniform
from .recurrent import (
    LSTM,
    RNN,
    bidirectional_backward,
    bidirectional_forward,
    cell_backward,
    cell_forward,
)


@dataclass
class NetworkConfig:
    cell: str = LSTM
    bidirectional: bool = True
    layers: int = 1
    hidden: int = 100
    embed_dim: int = 100
    pos_count: int = 0
    classes: int = 2
    dropout: float = 0.0

    def __post_init__(self):
        if self.cell not in (RNN, LSTM):
            raise ValueError(f"cell must be 'rnn' or 'lstm', got {self.cell!r}")
        if self.layers not in (1, 2):
            raise ValueError("layers must be 1 or 2")
        if min(self.hidden, self.embed_dim) < 1 or self.pos_count < 0:
            raise ValueError("hidden and embed_dim must be >= 1, pos_count >= 0")
        if self.classes < 2:
            raise ValueError("need at least 2 classes")
        if not 0 <= self.dropout < 1:
            raise ValueError("dropout must be in [0, 1)")

    @property
    def input_dim(self) -> int:
        return self.embed_dim + self.pos_count

    @property
    def directions(self) -> int:
        return 2 if self.bidirectional else 1

    def layer_input_dim(self, layer: int) -> int:
        return self.input_dim if layer == 0 else self.hidden * self.directions


@dataclass
class SequenceBatch:
    """PAD-filled id matrices for a batch of sentences; mask is 1 at real
    tokens. pos id -1 marks an out-of-inventory POS tag."""

    word_ids: np.ndarray
    pos_ids: np.ndarray
    label_ids: np.ndarray
    mask: np.ndarray
    sentence_index: list[int] = field(default_factory=list)

    def __post_init__(self):
        shape = self.word_ids.shape
        for name in ("pos_ids", "label_ids", "mask"):
            if getattr(self, name).shape != shape:
                raise ValueError(f"{name} shape differs from word_ids {shape}")
        if (self.mask.sum(axis=1) < 1).any():
            raise ValueError("every batch row needs at least one unmasked position")

    @property
    def size(self) -> int:
        return self.word_ids.shape[0]

    @property
    def n_tokens(self) -> int:
        return int(self.mask.sum())


def _gate_count(cell: str) -> int:
    return 4 if cell == LSTM else 1


def init_params(config: NetworkConfig, vocab_size: int, seed: int = 0,
                precision: str = "f64", embeddings=None) -> ParamStore:
    """Xavier-uniform input/projection weights, orthogonal recurrent blocks,
    zero biases except the LSTM forget gate at +1."""
    dtype = resolve_dtype(precision)
    rng = np.random.default_rng(seed)
    store = ParamStore()
    if embeddings is None:
        emb = rng.uniform(-0.5 / config.embed_dim, 0.5 / config.embed_dim,
                          (vocab_size, config.embed_dim))
    else:
        emb = np.array(embeddings, dtype=np.float64)
        if emb.shape != (vocab_size, config.embed_dim):
            raise ValueError(
                f"embedding matrix {emb.shape} does not match "
                f"({vocab_size}, {config.embed_dim})")
    store.add("emb", emb.astype(dtype))

    gates = _gate_count(config.cell)
    directions = ("fwd", "bwd") if config.bidirectional else ("fwd",)
    for layer in range(config.layers):
        in_dim = config.layer_input_dim(layer)
        for direction in directions:
            prefix = f"l{layer}.{direction}"
            wx = xavier_uniform(rng, in_dim, config.hidden,
                                shape=(in_dim, gates * config.hidden))
            wh = orthogonal(rng, config.hidden, gates * config.hidden)
            b = np.zeros(gates * config.hidden)
            if config.cell == LSTM:
                b[config.hidden:2 * config.hidden] = 1.0
            store.add(f"{prefix}.wx", wx.astype(dtype))
            store.add(f"{prefix}.wh", wh.astype(dtype))
            store.add(f"{prefix}.b", b.astype(dtype))
    proj_in = config.hidden * config.directions
    store.add("proj.w", xavier_uniform(rng, proj_in, config.classes).astype(dtype))
    store.add("proj.b", np.zeros(config.classes, dtype=dtype))
    return store


def _layer_params(store: ParamStore, layer: int, direction: str) -> dict:
    prefix = f"l{layer}.{direction}"
    return {"wx": store[f"{prefix}.wx"], "wh": store[f"{prefix}.wh"],
            "b": store[f"{prefix}.b"]}


def _run(batch: SequenceBatch, config: NetworkConfig, store: ParamStore,
         mode: str, rng, backward: bool):
    mask = batch.mask
    x, emb_cache = embed_concat(batch.word_ids, batch.pos_ids, mask,
                                store["emb"], config.pos_count)
    layer_caches = []
    for layer in range(config.layers):
        params_fwd = _layer_params(store, layer, "fwd")
        if config.bidirectional:
            h, cache = bidirectional_forward(config.cell, x, mask, params_fwd,
                                             _layer_params(store, layer, "bwd"))
        else:
            h, cache = cell_forward(config.cell, x, mask, params_fwd)
        h, keep = dropout_forward(h, config.dropout, mode, rng)
        layer_caches.append((cache, keep, x))
        x = h
    logits, dense_cache = dense_forward(x, store["proj.w"], store["proj.b"])
    loss, probs, dlogits = softmax_xent(logits, batch.label_ids, mask)
    predictions = np.where(mask > 0, probs.argmax(axis=-1), -1)

    if backward:
        store.zero_grads()
        dx, dw, db = dense_backward(dlogits, dense_cache, store["proj.w"])
        store.grads["proj.w"] += dw
        store.grads["proj.b"] += db
        for layer in range(config.layers - 1, -1, -1):
            cache, keep, _ = layer_caches[layer]
            dx = dropout_backward(dx, keep)
            if config.bidirectional:
                dx, grads_fwd, grads_bwd = bidirectional_backward(dx, cache)
                for key, g in grads_fwd.items():
                    store.grads[f"l{layer}.fwd.{key}"] += g
                for key, g in grads_bwd.items():
                    store.grads[f"l{layer}.bwd.{key}"] += g
            else:
                dx, grads = cell_backward(config.cell, dx, cache)
                for key, g in grads.items():
                    store.grads[f"l{layer}.fwd.{key}"] += g
        embed_concat_backward(dx, emb_cache, store.grads["emb"])
    return loss, predictions


def network_forward(batch, config, store, mode=EVAL, rng=None):
    """Loss and argmax predictions (-1 at masked positions); no gradients."""
    return _run(batch, config, store, mode, rng, backward=False)


def network_forward_backward(batch, config, store, mode=TRAIN, rng=None):
    """Full pass: returns (loss, predictions) and leaves d(loss)/d(param) in
    store.grads (previous gradient contents are overwritten)."""
    return _run(batch, config, store, mode, rng, backward=True)
