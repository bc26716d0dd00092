"""Input, dropout, projection, and loss layers with explicit backward passes.

All forward functions return a cache consumed by the matching backward
function. Sequence tensors are (batch, time, features); the mask is 1 at
real tokens and 0 at padding, and masked positions never contribute to the
loss or to any gradient.
"""

from __future__ import annotations

import numpy as np

TRAIN = "train"
EVAL = "eval"


def embed_concat(word_ids, pos_ids, mask, emb: np.ndarray, pos_count: int):
    """Look up word vectors and append the POS one-hot block.

    POS id -1 encodes an out-of-inventory tag and produces an all-zero
    block; masked positions produce all-zero vectors.
    """
    vocab_size, dim = emb.shape
    if word_ids.min() < 0 or word_ids.max() >= vocab_size:
        raise ValueError("word id out of range")
    if pos_ids.min() < -1 or pos_ids.max() >= pos_count:
        raise ValueError("pos id out of range")
    batch, steps = word_ids.shape
    out = np.zeros((batch, steps, dim + pos_count), dtype=emb.dtype)
    out[:, :, :dim] = emb[word_ids]
    rows, cols = np.nonzero(pos_ids >= 0)
    out[rows, cols, dim + pos_ids[rows, cols]] = 1.0
    out *= mask[:, :, None]
    cache = (word_ids, mask, dim)
    return out, cache


def embed_concat_backward(dout, cache, demb: np.ndarray) -> None:
    """Scatter the word-vector slice of the upstream gradient into the
    embedding gradient rows; the one-hot block has no parameters."""
    word_ids, mask, dim = cache
    masked = dout[:, :, :dim] * mask[:, :, None]
    np.add.at(demb, word_ids.reshape(-1), masked.reshape(-1, dim))


def dropout_forward(x, p: float, mode: str, rng=None):
    """Inverted dropout: in TRAIN mode units drop with probability p and
    survivors scale by 1/(1-p), so EVAL mode is the identity."""
    if not 0 <= p < 1:
        raise ValueError("dropout probability must be in [0, 1)")
    if mode == EVAL or p == 0.0:
        return x, None
    if mode != TRAIN:
        raise ValueError(f"unknown mode {mode!r}")
    if rng is None:
        raise ValueError("TRAIN-mode dropout needs an rng")
    keep = (rng.random(x.shape) >= p).astype(x.dtype) / (1.0 - p)
    return x * keep, keep


def dropout_backward(dout, keep):
    return dout if keep is None else dout * keep


def dense_forward(x, w: np.ndarray, b: np.ndarray):
    """Per-token affine projection (batch, time, in) -> (batch, time, out)."""
    return x @ w + b, x


def dense_backward(dout, x, w: np.ndarray):
    dw = np.einsum("bti,btj->ij", x, dout)
    db = dout.sum(axis=(0, 1))
    return dout @ w.T, dw, db


def softmax_xent(logits, labels, mask):
    """Mean cross-entropy over unmasked positions.

    Returns (loss, probs, dlogits); dlogits is (probs - onehot) / n_unmasked
    at unmasked positions and zero elsewhere. Rows are stabilized by max
    subtraction before exponentiation.
    """
    if logits.shape[-1] < 2:
        raise ValueError("need at least 2 classes")
    shifted = logits - logits.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    probs = exp / exp.sum(axis=-1, keepdims=True)
    batch, steps, _ = logits.shape
    rows = np.repeat(np.arange(batch), steps)
    cols = np.tile(np.arange(steps), batch)
    picked = probs[rows, cols, labels.reshape(-1)].reshape(batch, steps)
    n_unmasked = int(np.count_nonzero(mask))
    if n_unmasked == 0:
        raise ValueError("batch has no unmasked positions")
    loss = float(-(np.log(np.maximum(picked, 1e-300)) * mask).sum() / n_unmasked)
    dlogits = probs.copy()
    dlogits[rows, cols, labels.reshape(-1)] -= 1.0
    dlogits *= (mask / n_unmasked)[:, :, None]
    return loss, probs, dlogits
