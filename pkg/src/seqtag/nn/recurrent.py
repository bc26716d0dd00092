"""Vanilla RNN and LSTM forward/backward through time, plus the
bidirectional wrapper.

Recurrences:
    RNN   h_t = tanh(x_t Wx + h_{t-1} Wh + b)
    LSTM  z = x_t Wx + h_t-1 Wh + b, split into gates [i, f, o, g]
          c_t = sigmoid(f) c_{t-1} + sigmoid(i) tanh(g)
          h_t = sigmoid(o) tanh(c_t)

At masked (padding) steps the state copies through unchanged, so the state
at each position reflects only the sentence's real tokens; a reverse pass
therefore runs over the reversed unmasked span of each sentence. The
backward passes differentiate the same frozen recurrence exactly.
"""

from __future__ import annotations

import numpy as np

RNN = "rnn"
LSTM = "lstm"


def _sigmoid(x):
    # exp overflow on saturated gates is benign: 1/(1+inf) -> 0 exactly
    with np.errstate(over="ignore"):
        return 1.0 / (1.0 + np.exp(-x))


def _check_finite(h):
    if not np.isfinite(h).all():
        raise FloatingPointError("numerical overflow in recurrent forward")


def _time_order(steps: int, reverse: bool):
    return range(steps - 1, -1, -1) if reverse else range(steps)


def rnn_forward(x, mask, wx, wh, b, reverse: bool = False):
    batch, steps, _ = x.shape
    hidden = wh.shape[0]
    h = np.zeros((batch, steps, hidden), dtype=x.dtype)
    raw = np.zeros_like(h)
    h_prev = np.zeros((batch, hidden), dtype=x.dtype)
    for t in _time_order(steps, reverse):
        m = mask[:, t, None]
        h_new = np.tanh(x[:, t] @ wx + h_prev @ wh + b)
        raw[:, t] = h_new
        h_prev = m * h_new + (1 - m) * h_prev
        h[:, t] = h_prev
    _check_finite(h)
    return h, (x, mask, wx, wh, raw, h, reverse)


def rnn_backward(dh_out, cache):
    x, mask, wx, wh, raw, h, reverse = cache
    batch, steps, hidden = h.shape
    dx = np.zeros_like(x)
    dwx = np.zeros_like(wx)
    dwh = np.zeros_like(wh)
    db = np.zeros(hidden, dtype=x.dtype)
    dh_carry = np.zeros((batch, hidden), dtype=x.dtype)
    order = list(_time_order(steps, reverse))
    zeros = np.zeros((batch, hidden), dtype=x.dtype)
    for pos in range(steps - 1, -1, -1):
        t = order[pos]
        t_prev = order[pos - 1] if pos > 0 else None
        h_prev = h[:, t_prev] if t_prev is not None else zeros
        m = mask[:, t, None]
        dh_total = dh_out[:, t] + dh_carry
        da = dh_total * m * (1.0 - raw[:, t] ** 2)
        dwx += x[:, t].T @ da
        dwh += h_prev.T @ da
        db += da.sum(axis=0)
        dx[:, t] = da @ wx.T
        dh_carry = dh_total * (1 - m) + da @ wh.T
    return dx, {"wx": dwx, "wh": dwh, "b": db}


def lstm_forward(x, mask, wx, wh, b, reverse: bool = False):
    batch, steps, _ = x.shape
    hidden = wh.shape[0]
    h = np.zeros((batch, steps, hidden), dtype=x.dtype)
    c = np.zeros_like(h)
    gates = np.zeros((batch, steps, 4 * hidden), dtype=x.dtype)
    tanh_c_new = np.zeros_like(h)
    h_prev = np.zeros((batch, hidden), dtype=x.dtype)
    c_prev = np.zeros((batch, hidden), dtype=x.dtype)
    for t in _time_order(steps, reverse):
        m = mask[:, t, None]
        z = x[:, t] @ wx + h_prev @ wh + b
        i = _sigmoid(z[:, :hidden])
        f = _sigmoid(z[:, hidden:2 * hidden])
        o = _sigmoid(z[:, 2 * hidden:3 * hidden])
        g = np.tanh(z[:, 3 * hidden:])
        c_new = f * c_prev + i * g
        tc = np.tanh(c_new)
        h_new = o * tc
        gates[:, t] = np.concatenate([i, f, o, g], axis=1)
        tanh_c_new[:, t] = tc
        c_prev = m * c_new + (1 - m) * c_prev
        h_prev = m * h_new + (1 - m) * h_prev
        c[:, t] = c_prev
        h[:, t] = h_prev
    _check_finite(h)
    return h, (x, mask, wx, wh, gates, tanh_c_new, c, h, reverse)


def lstm_backward(dh_out, cache):
    x, mask, wx, wh, gates, tanh_c_new, c, h, reverse = cache
    batch, steps, hidden = h.shape
    dx = np.zeros_like(x)
    dwx = np.zeros_like(wx)
    dwh = np.zeros_like(wh)
    db = np.zeros(4 * hidden, dtype=x.dtype)
    dh_carry = np.zeros((batch, hidden), dtype=x.dtype)
    dc_carry = np.zeros((batch, hidden), dtype=x.dtype)
    order = list(_time_order(steps, reverse))
    zeros = np.zeros((batch, hidden), dtype=x.dtype)
    for pos in range(steps - 1, -1, -1):
        t = order[pos]
        t_prev = order[pos - 1] if pos > 0 else None
        h_prev = h[:, t_prev] if t_prev is not None else zeros
        c_prev = c[:, t_prev] if t_prev is not None else zeros
        m = mask[:, t, None]
        i = gates[:, t, :hidden]
        f = gates[:, t, hidden:2 * hidden]
        o = gates[:, t, 2 * hidden:3 * hidden]
        g = gates[:, t, 3 * hidden:]
        tc = tanh_c_new[:, t]

        dh_total = dh_out[:, t] + dh_carry
        dh_new = dh_total * m
        do = dh_new * tc
        dc_new = dc_carry * m + dh_new * o * (1.0 - tc ** 2)
        di = dc_new * g
        dg = dc_new * i
        df = dc_new * c_prev
        dz = np.concatenate([
            di * i * (1 - i),
            df * f * (1 - f),
            do * o * (1 - o),
            dg * (1.0 - g ** 2),
        ], axis=1)
        dwx += x[:, t].T @ dz
        dwh += h_prev.T @ dz
        db += dz.sum(axis=0)
        dx[:, t] = dz @ wx.T
        dh_carry = dh_total * (1 - m) + dz @ wh.T
        dc_carry = dc_carry * (1 - m) + dc_new * f
    return dx, {"wx": dwx, "wh": dwh, "b": db}


_FORWARD = {RNN: rnn_forward, LSTM: lstm_forward}
_BACKWARD = {RNN: rnn_backward, LSTM: lstm_backward}


def cell_forward(cell: str, x, mask, params: dict, reverse: bool = False):
    return _FORWARD[cell](x, mask, params["wx"], params["wh"], params["b"], reverse)


def cell_backward(cell: str, dh_out, cache):
    return _BACKWARD[cell](dh_out, cache)


def bidirectional_forward(cell: str, x, mask, params_fwd: dict, params_bwd: dict):
    """Concatenate a forward pass and a reversed pass: out[t] is
    fwd_states[t] ++ bwd_states[t], each half of width H."""
    h_fwd, cache_fwd = cell_forward(cell, x, mask, params_fwd, reverse=False)
    h_bwd, cache_bwd = cell_forward(cell, x, mask, params_bwd, reverse=True)
    out = np.concatenate([h_fwd, h_bwd], axis=2)
    return out, (cell, cache_fwd, cache_bwd, h_fwd.shape[2])


def bidirectional_backward(dout, cache):
    cell, cache_fwd, cache_bwd, hidden = cache
    dx_fwd, grads_fwd = cell_backward(cell, dout[:, :, :hidden], cache_fwd)
    dx_bwd, grads_bwd = cell_backward(cell, dout[:, :, hidden:], cache_bwd)
    return dx_fwd + dx_bwd, grads_fwd, grads_bwd
