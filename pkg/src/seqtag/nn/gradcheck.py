"""Central finite-difference checking of every analytic gradient."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .layers import TRAIN
from .network import network_forward, network_forward_backward


@dataclass
class GradCheckReport:
    max_rel_error: float
    per_param: dict[str, float]
    worst_param: str

    def __str__(self):
        lines = [f"gradient check: max relative error {self.max_rel_error:.3e} "
                 f"(worst: {self.worst_param})"]
        for name in sorted(self.per_param):
            lines.append(f"  {name:<16} {self.per_param[name]:.3e}")
        return "\n".join(lines)


def gradient_check(config, batch, store, epsilon: float = 1e-5,
                   sample_size: int = 200, seed: int = 0,
                   grads=None) -> GradCheckReport:
    """Compare analytic gradients against (f(p+e) - f(p-e)) / 2e.

    Checks every coordinate of 1-D arrays (biases) and of any array with at
    most sample_size entries, and a seeded sample_size-coordinate sample of
    larger arrays. Relative error is |ga - gn| / max(|ga|, |gn|, 1e-8).
    Pass ``grads`` to audit an externally supplied gradient instead of the
    freshly computed one.
    """
    if config.dropout != 0.0:
        raise ValueError("gradient check requires dropout 0")
    if grads is None:
        network_forward_backward(batch, config, store, mode=TRAIN)
        grads = {name: store.grads[name].copy() for name in store.names()}

    rng = np.random.default_rng(seed)
    per_param = {}
    worst = ("", 0.0)
    for name in store.names():
        param = store[name]
        flat = param.reshape(-1)
        analytic = grads[name].reshape(-1)
        if param.ndim == 1 or param.size <= sample_size:
            coords = np.arange(param.size)
        else:
            coords = np.sort(rng.choice(param.size, size=sample_size, replace=False))
        max_err = 0.0
        for k in coords:
            original = flat[k]
            flat[k] = original + epsilon
            loss_plus, _ = network_forward(batch, config, store, mode=TRAIN)
            flat[k] = original - epsilon
            loss_minus, _ = network_forward(batch, config, store, mode=TRAIN)
            flat[k] = original
            numeric = (loss_plus - loss_minus) / (2.0 * epsilon)
            err = abs(analytic[k] - numeric) / max(abs(analytic[k]), abs(numeric), 1e-8)
            if err > max_err:
                max_err = err
        per_param[name] = max_err
        if max_err >= worst[1]:
            worst = (name, max_err)
    return GradCheckReport(worst[1], per_param, worst[0])
