"""Embedding tables, text-format vector files, and neighbor queries."""

from __future__ import annotations

import numpy as np

from ..corpus import PAD_ID, PAD_WORD, UNK_ID, UNK_WORD, Vocabulary


class VectorFileError(Exception):
    """Malformed word-vector text file."""


def seeded_row_init(rng: np.random.Generator, dim: int) -> np.ndarray:
    """Fallback row for words without a pretrained vector: uniform in
    [-0.5/dim, 0.5/dim)."""
    return rng.uniform(-0.5 / dim, 0.5 / dim, dim)


class EmbeddingTable:
    """A |V| x dim real matrix whose rows are indexed by a Vocabulary."""

    def __init__(self, vocab: Vocabulary, matrix: np.ndarray):
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.ndim != 2 or matrix.shape[0] != len(vocab):
            raise ValueError(
                f"matrix shape {matrix.shape} does not match vocabulary size {len(vocab)}")
        if not np.isfinite(matrix).all():
            raise ValueError("embedding matrix contains non-finite entries")
        self.vocab = vocab
        self.matrix = matrix

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    def row(self, word: str) -> np.ndarray:
        return self.matrix[self.vocab.lookup(word)]

    def zero_pad_row(self) -> "EmbeddingTable":
        """Zero the PAD row in place so padding contributes nothing downstream."""
        self.matrix[PAD_ID] = 0.0
        return self

    def aligned_to(self, vocab: Vocabulary, seed: int = 0) -> "EmbeddingTable":
        """Re-index rows onto another vocabulary.

        Matched words copy their vector; missing words draw a seeded init
        row, in ascending id order so the draws are reproducible.
        """
        rng = np.random.default_rng(seed)
        matrix = np.empty((len(vocab), self.dim))
        for idx, word in enumerate(vocab.id2word):
            if word in self.vocab:
                matrix[idx] = self.matrix[self.vocab.word2id[word]]
            else:
                matrix[idx] = seeded_row_init(rng, self.dim)
        return EmbeddingTable(vocab, matrix)


def random_table(vocab: Vocabulary, dim: int, seed: int = 0) -> EmbeddingTable:
    """All-random table (the RANDOM initializer in ablations)."""
    rng = np.random.default_rng(seed)
    matrix = rng.uniform(-0.5 / dim, 0.5 / dim, (len(vocab), dim))
    return EmbeddingTable(vocab, matrix)


def save_vectors(table: EmbeddingTable, path, header: bool = True) -> None:
    """Write the standard text vector format: optional "<count> <dim>" line,
    then one "word v1 v2 ..." line per word."""
    if not np.isfinite(table.matrix).all():
        raise ValueError("refusing to save non-finite vectors")
    with open(path, "w", encoding="utf-8") as f:
        if header:
            f.write(f"{len(table.vocab)} {table.dim}\n")
        for word, row in zip(table.vocab.id2word, table.matrix):
            f.write(word + " " + " ".join(f"{x:.8f}" for x in row) + "\n")


def _is_header(fields: list[str]) -> bool:
    if len(fields) != 2:
        return False
    try:
        int(fields[0]), int(fields[1])
    except ValueError:
        return False
    return True


def load_vectors(path, vocab: Vocabulary | None = None, seed: int = 0) -> EmbeddingTable:
    """Load a text vector file.

    Without a vocabulary, file words become the vocabulary (after the PAD
    and UNK slots; absent reserved rows stay zero). With one, rows align by
    word: matched words take the file vector, missing words a seeded init,
    extra file words are ignored.
    """
    words: list[str] = []
    rows: list[np.ndarray] = []
    dim = None
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            fields = line.split()
            if not fields:
                continue
            if lineno == 1 and _is_header(fields):
                continue
            if len(fields) < 2:
                raise VectorFileError(f"line {lineno}: expected a word and floats")
            try:
                vec = np.array([float(x) for x in fields[1:]])
            except ValueError:
                raise VectorFileError(f"line {lineno}: non-numeric field") from None
            if dim is None:
                dim = len(vec)
            elif len(vec) != dim:
                raise VectorFileError(
                    f"line {lineno}: dimension {len(vec)} does not match {dim}")
            words.append(fields[0])
            rows.append(vec)
    if dim is None:
        raise VectorFileError("vector file has no rows")

    if vocab is None:
        id2word = []
        if PAD_WORD not in words:
            id2word.append(PAD_WORD)
        if UNK_WORD not in words:
            id2word.append(UNK_WORD)
        id2word += words
        if len(set(id2word)) != len(id2word):
            raise VectorFileError("duplicate word in vector file")
        vocab = Vocabulary(id2word, [0] * len(id2word))
        matrix = np.zeros((len(vocab), dim))
        for word, row in zip(words, rows):
            matrix[vocab.word2id[word]] = row
        return EmbeddingTable(vocab, matrix)

    rng = np.random.default_rng(seed)
    by_word = dict(zip(words, rows))
    matrix = np.empty((len(vocab), dim))
    for idx, word in enumerate(vocab.id2word):
        if word in by_word:
            matrix[idx] = by_word[word]
        else:
            matrix[idx] = seeded_row_init(rng, dim)
    return EmbeddingTable(vocab, matrix)


def nearest_neighbors(table: EmbeddingTable, word: str, k: int) -> list[tuple[str, float]]:
    """Top-k vocabulary words by cosine similarity, query and reserved
    symbols excluded, ties broken lexicographically."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if word not in table.vocab:
        raise KeyError(f"unknown word {word!r}")
    query_id = table.vocab.word2id[word]
    q = table.matrix[query_id]
    qn = np.linalg.norm(q)
    norms = np.linalg.norm(table.matrix, axis=1)
    denom = norms * qn
    with np.errstate(invalid="ignore", divide="ignore"):
        cos = np.where(denom > 0, table.matrix @ q / np.where(denom > 0, denom, 1.0), 0.0)
    ranked = sorted(
        (
            (-float(cos[i]), table.vocab.id2word[i])
            for i in range(len(table.vocab))
            if i not in (PAD_ID, UNK_ID, query_id)
        ),
    )
    return [(w, -negcos) for negcos, w in ranked[:k]]
