"""Checkpoint directories: a SEQTAG-1 manifest plus one raw little-endian
array file per parameter, with the vocabulary and tag inventory needed to
run the model on new text. Round-trips are bit-exact."""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from ..corpus import TagInventory, Vocabulary
from .network import NetworkConfig
from .params import ParamStore

FORMAT_VERSION = "SEQTAG-1"

_BIN_DTYPES = {"f32": "<f4", "f64": "<f8"}


class CheckpointError(Exception):
    """Unreadable or inconsistent checkpoint directory."""


@dataclass
class Checkpoint:
    config: NetworkConfig
    store: ParamStore
    vocab: Vocabulary
    tags: TagInventory
    precision: str = "f64"
    meta: dict = field(default_factory=dict)

    def save(self, directory) -> None:
        os.makedirs(directory, exist_ok=True)
        params_dir = os.path.join(directory, "params")
        os.makedirs(params_dir, exist_ok=True)

        lines = [f"format: {FORMAT_VERSION}"]
        for key in ("cell", "bidirectional", "layers", "hidden", "embed_dim",
                    "pos_count", "classes", "dropout"):
            lines.append(f"{key}: {_render(getattr(self.config, key))}")
        lines.append(f"precision: {self.precision}")
        for key in sorted(self.meta):
            lines.append(f"meta.{key}: {self.meta[key]}")
        for name in self.store.names():
            arr = self.store[name]
            kind = "f32" if arr.dtype == np.float32 else "f64"
            shape = " ".join(str(s) for s in arr.shape)
            lines.append(f"param: {name} {kind} {shape}")
            arr.astype(_BIN_DTYPES[kind], copy=False).tofile(
                os.path.join(params_dir, name + ".bin"))
        with open(os.path.join(directory, "manifest.txt"), "w", encoding="utf-8") as f:
            f.write("\n".join(lines) + "\n")

        with open(os.path.join(directory, "vocab.txt"), "w", encoding="utf-8") as f:
            for word, count in zip(self.vocab.id2word, self.vocab.counts):
                f.write(f"{word}\t{count}\n")
        with open(os.path.join(directory, "tags.txt"), "w", encoding="utf-8") as f:
            f.write("#pos\n")
            for sym in self.tags.pos_symbols:
                f.write(sym + "\n")
            f.write("#ne\n")
            for sym in self.tags.label_symbols:
                f.write(sym + "\n")
            f.write(f"#scheme\n{self.tags.scheme}\n")

    @classmethod
    def load(cls, directory) -> "Checkpoint":
        manifest = os.path.join(directory, "manifest.txt")
        if not os.path.isfile(manifest):
            raise CheckpointError(f"{directory} has no manifest.txt")
        fields: dict[str, str] = {}
        params: list[tuple[str, str, tuple[int, ...]]] = []
        meta: dict[str, str] = {}
        with open(manifest, encoding="utf-8") as f:
            for line in f:
                line = line.strip()
                if not line:
                    continue
                key, _, value = line.partition(": ")
                if key == "param":
                    parts = value.split()
                    params.append((parts[0], parts[1], tuple(int(s) for s in parts[2:])))
                elif key.startswith("meta."):
                    meta[key[5:]] = value
                else:
                    fields[key] = value
        if fields.get("format") != FORMAT_VERSION:
            raise CheckpointError(
                f"unsupported checkpoint format {fields.get('format')!r}")

        config = NetworkConfig(
            cell=fields["cell"],
            bidirectional=fields["bidirectional"] == "true",
            layers=int(fields["layers"]),
            hidden=int(fields["hidden"]),
            embed_dim=int(fields["embed_dim"]),
            pos_count=int(fields["pos_count"]),
            classes=int(fields["classes"]),
            dropout=float(fields["dropout"]),
        )
        store = ParamStore()
        for name, kind, shape in params:
            path = os.path.join(directory, "params", name + ".bin")
            arr = np.fromfile(path, dtype=_BIN_DTYPES[kind])
            if arr.size != int(np.prod(shape)):
                raise CheckpointError(f"parameter {name}: file size does not match {shape}")
            store.add(name, arr.reshape(shape))

        id2word = []
        counts = []
        with open(os.path.join(directory, "vocab.txt"), encoding="utf-8") as f:
            for line in f:
                if not line.strip():
                    continue
                word, _, count = line.rstrip("\n").partition("\t")
                id2word.append(word)
                counts.append(int(count))
        vocab = Vocabulary(id2word, counts)

        pos: list[str] = []
        ne: list[str] = []
        scheme = None
        section = None
        with open(os.path.join(directory, "tags.txt"), encoding="utf-8") as f:
            for line in f:
                line = line.strip()
                if not line:
                    continue
                if line in ("#pos", "#ne", "#scheme"):
                    section = line
                elif section == "#pos":
                    pos.append(line)
                elif section == "#ne":
                    ne.append(line)
                elif section == "#scheme":
                    scheme = line
        tags = TagInventory(pos, ne, scheme=scheme)
        return cls(config, store, vocab, tags,
                   precision=fields.get("precision", "f64"), meta=meta)


def _render(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)
