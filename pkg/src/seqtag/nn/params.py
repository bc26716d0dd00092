"""Named trainable arrays with gradients and Adam moment buffers."""

from __future__ import annotations

import numpy as np

DTYPES = {"f32": np.float32, "f64": np.float64}


def resolve_dtype(precision: str) -> np.dtype:
    try:
        return DTYPES[precision]
    except KeyError:
        raise ValueError(f"precision must be one of {sorted(DTYPES)}, got {precision!r}") from None


class ParamStore:
    """Parameters, gradients, and two Adam moments per name, plus the shared
    step counter. Iteration order is insertion order, which fixes the
    gradient-reduction and update order."""

    def __init__(self):
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}
        self.adam_m: dict[str, np.ndarray] = {}
        self.adam_v: dict[str, np.ndarray] = {}
        self.frozen: set[str] = set()
        self.step = 0

    def add(self, name: str, value: np.ndarray) -> np.ndarray:
        if name in self.params:
            raise ValueError(f"duplicate parameter name {name!r}")
        value = np.asarray(value)
        self.params[name] = value
        self.grads[name] = np.zeros_like(value)
        self.adam_m[name] = np.zeros_like(value, dtype=np.float64)
        self.adam_v[name] = np.zeros_like(value, dtype=np.float64)
        return value

    def __getitem__(self, name: str) -> np.ndarray:
        return self.params[name]

    def __contains__(self, name: str) -> bool:
        return name in self.params

    def names(self) -> list[str]:
        return list(self.params)

    def zero_grads(self) -> None:
        for g in self.grads.values():
            g[...] = 0.0

    def freeze(self, name: str) -> None:
        if name not in self.params:
            raise KeyError(name)
        self.frozen.add(name)

    def n_parameters(self) -> int:
        return sum(p.size for p in self.params.values())

    def snapshot(self) -> dict[str, np.ndarray]:
        return {name: p.copy() for name, p in self.params.items()}

    def load_snapshot(self, arrays: dict[str, np.ndarray]) -> None:
        for name, value in arrays.items():
            self.params[name][...] = value


def xavier_uniform(rng: np.random.Generator, fan_in: int, fan_out: int,
                   shape=None) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, (fan_in, fan_out) if shape is None else shape)


def orthogonal(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    """Orthogonal init; a (H, k*H) matrix gets k independent orthogonal blocks
    (the usual treatment of stacked recurrent gate weights)."""
    if cols % rows == 0:
        blocks = []
        for _ in range(cols // rows):
            q, r = np.linalg.qr(rng.standard_normal((rows, rows)))
            blocks.append(q * np.sign(np.diag(r)))
        return np.concatenate(blocks, axis=1)
    q, r = np.linalg.qr(rng.standard_normal((max(rows, cols), min(rows, cols))))
    q = q * np.sign(np.diag(r))
    return q[:rows, :cols] if q.shape[0] >= rows else q.T[:rows, :cols]
