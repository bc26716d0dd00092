"""Annotated-corpus handling: CoNLL and SSF parsing, label schemes, vocabularies, splits.

Two input formats are supported:

* CoNLL column format: one token per line, whitespace-separated columns,
  first column the surface form, second the POS tag, last the NE label
  (extra middle columns are ignored). Blank lines separate sentences and
  ``-DOCSTART-`` lines are dropped.
* A flat SSF subset: ``<Sentence id="N">`` ... ``</Sentence>`` blocks of
  tab-separated ``index  surface  pos`` lines, with one level of
  ``((`` ... ``))`` groups whose ``<ne=LABEL>`` attribute is inherited by
  the tokens inside.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass

import numpy as np

PAD_WORD = "<PAD>"
UNK_WORD = "<UNK>"
PAD_ID = 0
UNK_ID = 1

OUTSIDE = "O"

CONLL = "conll"
SSF = "ssf"

RAW = "raw"
IOB2 = "iob2"


class CorpusError(Exception):
    """Malformed corpus input or an operation on unusable data."""


@dataclass
class Token:
    surface: str
    pos: str
    label: str

    def __post_init__(self):
        self.surface = self.surface.strip()
        if not self.surface:
            raise CorpusError("token surface is empty")
        if any(c.isspace() for c in self.surface):
            raise CorpusError(f"token surface contains whitespace: {self.surface!r}")


@dataclass
class Sentence:
    tokens: list[Token]

    def __post_init__(self):
        if not self.tokens:
            raise CorpusError("sentence has no tokens")

    def __len__(self):
        return len(self.tokens)

    def words(self) -> list[str]:
        return [t.surface for t in self.tokens]

    def pos_tags(self) -> list[str]:
        return [t.pos for t in self.tokens]

    def labels(self) -> list[str]:
        return [t.label for t in self.tokens]


class TagInventory:
    """Dense id spaces for POS tags and NE labels observed in a dataset."""

    def __init__(self, pos_tags, ne_labels, scheme=None):
        pos_syms = sorted(set(pos_tags))
        ne_syms = sorted(set(ne_labels) | {OUTSIDE})
        self.pos_tags = {p: i for i, p in enumerate(pos_syms)}
        self.ne_labels = {l: i for i, l in enumerate(ne_syms)}
        self.scheme = scheme if scheme is not None else detect_scheme(ne_syms)

    @property
    def pos_symbols(self) -> list[str]:
        return list(self.pos_tags)

    @property
    def label_symbols(self) -> list[str]:
        return list(self.ne_labels)

    def pos_id(self, pos: str) -> int:
        """Dense id of a POS tag, or -1 for tags outside the inventory."""
        return self.pos_tags.get(pos, -1)

    def label_id(self, label: str) -> int:
        try:
            return self.ne_labels[label]
        except KeyError:
            raise CorpusError(f"NE label {label!r} not in tag inventory") from None

    def __eq__(self, other):
        return (isinstance(other, TagInventory)
                and self.pos_tags == other.pos_tags
                and self.ne_labels == other.ne_labels
                and self.scheme == other.scheme)


def detect_scheme(labels) -> str:
    """A label set is IOB-family if any non-O label carries a B-/I- prefix."""
    for l in labels:
        if l.startswith("B-") or l.startswith("I-"):
            return IOB2
    return RAW


@dataclass
class Dataset:
    sentences: list[Sentence]
    tag_inventory: TagInventory = None
    source_format: str = CONLL

    def __post_init__(self):
        # empty datasets are legal as split results; parsers and serialize
        # reject emptiness at the format boundary
        if self.tag_inventory is None:
            self.tag_inventory = TagInventory(
                (t.pos for s in self.sentences for t in s.tokens),
                (t.label for s in self.sentences for t in s.tokens),
            )

    def __len__(self):
        return len(self.sentences)

    @property
    def n_tokens(self) -> int:
        return sum(len(s) for s in self.sentences)

    def labels(self) -> list[list[str]]:
        return [s.labels() for s in self.sentences]


# ---------------------------------------------------------------------------
# parsing

def _as_lines(text):
    if isinstance(text, str):
        return text.splitlines()
    return [line.rstrip("\n").rstrip("\r") for line in text]


def parse_conll(text, require_label: bool = True) -> Dataset:
    """Parse CoNLL column text into a Dataset.

    With ``require_label=False``, two-column (surface, pos) lines are
    accepted and labeled O; this is the prediction-input mode.
    """
    sentences = []
    tokens = []
    for lineno, line in enumerate(_as_lines(text), start=1):
        fields = line.split()
        if not fields:
            if tokens:
                sentences.append(Sentence(tokens))
                tokens = []
            continue
        if fields[0] == "-DOCSTART-":
            continue
        min_cols = 3 if require_label else 2
        if len(fields) < min_cols:
            if len(fields) < 2:
                raise CorpusError(
                    f"line {lineno}: expected surface and POS columns, got {len(fields)}")
            raise CorpusError(
                f"line {lineno}: expected at least 3 columns (surface pos label), "
                f"got {len(fields)}")
        label = fields[-1] if len(fields) >= 3 else OUTSIDE
        tokens.append(Token(fields[0], fields[1], label))
    if tokens:
        sentences.append(Sentence(tokens))
    if not sentences:
        raise CorpusError("no sentences")
    return Dataset(sentences, source_format=CONLL)


_SENT_OPEN = re.compile(r'<Sentence\s+id\s*=\s*"?([^">]*)"?\s*>')
_NE_ATTR = re.compile(r"<ne\s*=\s*([^>\s]+)\s*>")


def parse_ssf(text) -> Dataset:
    """Parse the flat SSF subset into a Dataset.

    Tokens inside a ``((`` ... ``))`` group inherit the group's ``<ne=...>``
    label; everything else is O. Only one nesting level is accepted.
    """
    sentences = []
    tokens: list[Token] = []
    in_sentence = False
    group_label = None
    group_open_line = 0

    for lineno, line in enumerate(_as_lines(text), start=1):
        stripped = line.strip()
        if not stripped:
            continue
        if _SENT_OPEN.search(stripped):
            if in_sentence:
                raise CorpusError(f"line {lineno}: nested <Sentence>")
            in_sentence = True
            tokens = []
            continue
        if stripped.startswith("</Sentence>"):
            if not in_sentence:
                raise CorpusError(f"line {lineno}: </Sentence> without open")
            if group_label is not None:
                raise CorpusError(
                    f"line {lineno}: group opened at line {group_open_line} never closed")
            if tokens:
                sentences.append(Sentence(tokens))
            in_sentence = False
            continue
        if not in_sentence:
            raise CorpusError(f"line {lineno}: token line outside <Sentence>")

        fields = [f.strip() for f in line.split("\t")]
        if "))" in fields:
            if group_label is None:
                raise CorpusError(f"line {lineno}: group close without open")
            group_label = None
            continue
        if "((" in fields:
            if fields[0] == "((":
                raise CorpusError(f"line {lineno}: missing index column")
            if group_label is not None:
                raise CorpusError(
                    f"line {lineno}: nested group (opened at line {group_open_line})")
            m = _NE_ATTR.search(line)
            group_label = m.group(1) if m else OUTSIDE
            group_open_line = lineno
            continue
        if len(fields) < 3 or not fields[0]:
            raise CorpusError(f"line {lineno}: missing index column")
        label = group_label if group_label is not None else OUTSIDE
        tokens.append(Token(fields[1], fields[2], label))

    if in_sentence:
        raise CorpusError("unterminated <Sentence> at end of input")
    if not sentences:
        raise CorpusError("no sentences")
    return Dataset(sentences, source_format=SSF)


def parse(text, fmt: str) -> Dataset:
    if fmt == CONLL:
        return parse_conll(text)
    if fmt == SSF:
        return parse_ssf(text)
    raise ValueError(f"unknown format {fmt!r}")


def load_dataset(path, fmt: str) -> Dataset:
    with open(path, encoding="utf-8") as f:
        return parse(f, fmt)


# ---------------------------------------------------------------------------
# serialization

def serialize(dataset: Dataset, fmt: str) -> str:
    """Render a Dataset as CoNLL or SSF text; re-parsing is the identity."""
    if not dataset.sentences:
        raise CorpusError("no sentences")
    if fmt == CONLL:
        return _serialize_conll(dataset)
    if fmt == SSF:
        return _serialize_ssf(dataset)
    raise ValueError(f"unknown format {fmt!r}")


def _serialize_conll(dataset: Dataset) -> str:
    out = []
    for sent in dataset.sentences:
        for t in sent.tokens:
            out.append(f"{t.surface} {t.pos} {t.label}")
        out.append("")
    return "\n".join(out) + "\n"


def _serialize_ssf(dataset: Dataset) -> str:
    # Maximal runs of one non-O label become one <ne=...> group.
    out = []
    for n, sent in enumerate(dataset.sentences, start=1):
        out.append(f'<Sentence id="{n}">')
        idx = 0
        i = 0
        toks = sent.tokens
        while i < len(toks):
            idx += 1
            if toks[i].label == OUTSIDE:
                out.append(f"{idx}\t{toks[i].surface}\t{toks[i].pos}")
                i += 1
                continue
            j = i
            while j < len(toks) and toks[j].label == toks[i].label:
                j += 1
            out.append(f"{idx}\t((\tgp\t<ne={toks[i].label}>")
            for k, t in enumerate(toks[i:j], start=1):
                out.append(f"{idx}.{k}\t{t.surface}\t{t.pos}")
            out.append("\t))")
            i = j
        out.append("</Sentence>")
    return "\n".join(out) + "\n"


def save_dataset(dataset: Dataset, path, fmt: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(serialize(dataset, fmt))


# ---------------------------------------------------------------------------
# vocabulary

class Vocabulary:
    """Dense word ids: 0 is PAD, 1 is UNK, the rest ordered by descending
    frequency with lexicographic tie-breaking."""

    def __init__(self, id2word: list[str], counts: list[int], min_count: int = 1):
        if id2word[:2] != [PAD_WORD, UNK_WORD]:
            raise ValueError("ids 0 and 1 must be PAD and UNK")
        self.id2word = list(id2word)
        self.counts = list(counts)
        self.min_count = min_count
        self.word2id = {w: i for i, w in enumerate(self.id2word)}
        if len(self.word2id) != len(self.id2word):
            raise ValueError("duplicate words in vocabulary")

    def __len__(self):
        return len(self.id2word)

    def __contains__(self, word):
        return word in self.word2id

    def lookup(self, word: str) -> int:
        return self.word2id.get(word, UNK_ID)

    def word(self, idx: int) -> str:
        return self.id2word[idx]

    @property
    def total_count(self) -> int:
        return sum(self.counts)

    def encode(self, words) -> list[int]:
        return [self.lookup(w) for w in words]


def build_vocab(source, min_count: int = 1) -> Vocabulary:
    """Count words in a Dataset, an iterable of token lists, or an iterable
    of tokens, and keep those with frequency >= min_count."""
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    counts = Counter()
    if isinstance(source, Dataset):
        for sent in source.sentences:
            counts.update(sent.words())
    else:
        for item in source:
            if isinstance(item, str):
                counts[item] += 1
            else:
                counts.update(item)
    if not counts:
        raise CorpusError("empty input: no words to build a vocabulary from")
    kept = sorted(
        ((w, c) for w, c in counts.items() if c >= min_count),
        key=lambda wc: (-wc[1], wc[0]),
    )
    id2word = [PAD_WORD, UNK_WORD] + [w for w, _ in kept]
    word_counts = [0, 0] + [c for _, c in kept]
    return Vocabulary(id2word, word_counts, min_count)


def iter_token_lines(path):
    """Stream a whitespace-tokenized text file as one token list per
    non-blank line (bounded memory)."""
    with open(path, encoding="utf-8") as f:
        for line in f:
            words = line.split()
            if words:
                yield words


# ---------------------------------------------------------------------------
# splitting

def split_sizes(n: int, ratios) -> tuple[int, int, int]:
    """Floor rule: train and dev get floor(n * r), test the remainder."""
    r_train, r_dev, r_test = ratios
    if min(r_train, r_dev, r_test) <= 0:
        raise ValueError("ratios must be positive")
    if abs(r_train + r_dev + r_test - 1.0) > 1e-9:
        raise ValueError("ratios must sum to 1")
    n_train = math.floor(n * r_train)
    n_dev = math.floor(n * r_dev)
    return n_train, n_dev, n - n_train - n_dev


def split_indices(n: int, ratios, seed: int):
    """Seeded sentence-index permutation cut into train/dev/test slices."""
    n_train, n_dev, _ = split_sizes(n, ratios)
    perm = np.random.default_rng(seed).permutation(n)
    return (
        [int(i) for i in perm[:n_train]],
        [int(i) for i in perm[n_train:n_train + n_dev]],
        [int(i) for i in perm[n_train + n_dev:]],
    )


def random_split(dataset: Dataset, ratios, seed: int):
    """Split sentences into (train, dev, test) Datasets sharing the parent's
    tag inventory."""
    n = len(dataset.sentences)
    if n < 3:
        raise CorpusError("too few sentences to split")
    parts = split_indices(n, ratios, seed)
    return tuple(
        Dataset([dataset.sentences[i] for i in idx],
                tag_inventory=dataset.tag_inventory,
                source_format=dataset.source_format)
        for idx in parts
    )


def write_split_manifest(path, train_idx, dev_idx, test_idx) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for header, idx in (("#train", train_idx), ("#dev", dev_idx), ("#test", test_idx)):
            f.write(header + "\n")
            for i in idx:
                f.write(f"{i}\n")


def read_split_manifest(path):
    sections = {"#train": [], "#dev": [], "#test": []}
    current = None
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            if line in sections:
                current = sections[line]
            elif current is None:
                raise CorpusError(f"split manifest: index {line!r} before a section header")
            else:
                current.append(int(line))
    return sections["#train"], sections["#dev"], sections["#test"]


# ---------------------------------------------------------------------------
# label schemes

def _label_type(label: str) -> str:
    if label.startswith("B-") or label.startswith("I-"):
        return label[2:]
    return label


def to_iob2(labels: list[str], strict: bool = False) -> list[str]:
    """Convert one sentence's labels to IOB2.

    RAW input treats maximal runs of one type as a chunk. IOB-family input
    is repaired so every chunk starts with B-; in strict mode an I-X that
    does not continue a chunk of type X is an error instead.
    """
    if detect_scheme(labels) == RAW:
        out = []
        prev = OUTSIDE
        for l in labels:
            if l == OUTSIDE:
                out.append(OUTSIDE)
            elif l == prev:
                out.append("I-" + l)
            else:
                out.append("B-" + l)
            prev = l
        return out
    out = []
    prev_type = None  # chunk type continued from the previous position
    for i, l in enumerate(labels):
        if l == OUTSIDE:
            out.append(OUTSIDE)
            prev_type = None
        elif l.startswith("B-"):
            out.append(l)
            prev_type = l[2:]
        elif l.startswith("I-"):
            if l[2:] == prev_type:
                out.append(l)
            elif strict:
                raise CorpusError(
                    f"position {i}: {l} does not continue a chunk of type {l[2:]}")
            else:
                out.append("B-" + l[2:])
                prev_type = l[2:]
        else:
            # bare type symbol inside an IOB-family sentence
            if strict:
                raise CorpusError(f"position {i}: unprefixed label {l!r} in IOB input")
            out.append(("I-" if l == prev_type else "B-") + l)
            prev_type = l
    return out


def to_raw(labels: list[str]) -> list[str]:
    return [_label_type(l) for l in labels]


def normalize_labels(dataset: Dataset, target: str, strict: bool = False) -> Dataset:
    """Return a copy of the dataset with labels in the target scheme."""
    if target not in (RAW, IOB2):
        raise ValueError(f"unknown label scheme {target!r}")
    sentences = []
    for sent in dataset.sentences:
        labels = sent.labels()
        new = to_iob2(labels, strict=strict) if target == IOB2 else to_raw(labels)
        sentences.append(Sentence([
            Token(t.surface, t.pos, l) for t, l in zip(sent.tokens, new)
        ]))
    out = Dataset(sentences, source_format=dataset.source_format)
    out.tag_inventory.scheme = target
    return out
