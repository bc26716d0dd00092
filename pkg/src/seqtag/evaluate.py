"""Entity-wise precision/recall/F1 at token level and chunk level.

Chunk scoring follows the CoNLL shared-task convention: a predicted entity
counts only when its type, start, and end all match a gold entity exactly.
Zero denominators score 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

from .corpus import CONLL, OUTSIDE, Dataset, Sentence, Token

TOKEN = "token"
CHUNK = "chunk"


class Chunk(NamedTuple):
    type: str
    start: int  # inclusive
    end: int    # exclusive


@dataclass
class Scores:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0


@dataclass
class EvalReport:
    level: str
    types: dict[str, Scores] = field(default_factory=dict)

    @property
    def total(self) -> Scores:
        return Scores(
            tp=sum(s.tp for s in self.types.values()),
            fp=sum(s.fp for s in self.types.values()),
            fn=sum(s.fn for s in self.types.values()),
        )

    def _type(self, name: str) -> Scores:
        return self.types.setdefault(name, Scores())


def _label_type(label: str) -> str:
    return label[2:] if label[:2] in ("B-", "I-") else label


def extract_chunks(labels: list[str]) -> list[Chunk]:
    """Maximal B-X (I-X)* runs of an IOB2 sequence, in sentence order.

    An I-X that does not continue a chunk starts one (lenient-repair
    behavior, as in the standard scripts); unprefixed non-O labels are
    rejected because RAW sequences have no chunk boundaries.
    """
    chunks = []
    start = None
    ctype = None
    for i, l in enumerate(labels):
        if l != OUTSIDE and l[:2] not in ("B-", "I-"):
            raise ValueError(f"chunk extraction requires IOB2 labels, got {l!r}")
        continues = l.startswith("I-") and ctype == l[2:]
        if ctype is not None and not continues:
            chunks.append(Chunk(ctype, start, i))
            ctype = None
        if l != OUTSIDE and not continues:
            start, ctype = i, l[2:]
    if ctype is not None:
        chunks.append(Chunk(ctype, start, len(labels)))
    return chunks


def _label_sequences(data) -> list[list[str]]:
    if isinstance(data, Dataset):
        return data.labels()
    return [list(seq) for seq in data]


def _aligned(gold, pred):
    gold_seq = _label_sequences(gold)
    pred_seq = _label_sequences(pred)
    if len(gold_seq) != len(pred_seq):
        raise ValueError(
            f"misaligned inputs: {len(gold_seq)} gold vs {len(pred_seq)} predicted sentences")
    for i, (g, p) in enumerate(zip(gold_seq, pred_seq)):
        if len(g) != len(p):
            raise ValueError(
                f"misaligned inputs: sentence {i} has {len(g)} gold vs {len(p)} predicted labels")
    return gold_seq, pred_seq


def chunk_prf(gold, pred) -> EvalReport:
    """Exact-boundary, exact-type chunk scores from aligned label sequences
    (Datasets or lists of label lists)."""
    gold_seq, pred_seq = _aligned(gold, pred)
    report = EvalReport(CHUNK)
    for g_labels, p_labels in zip(gold_seq, pred_seq):
        g_chunks = set(extract_chunks(g_labels))
        p_chunks = set(extract_chunks(p_labels))
        for c in g_chunks | p_chunks:
            scores = report._type(c.type)
            if c in g_chunks and c in p_chunks:
                scores.tp += 1
            elif c in p_chunks:
                scores.fp += 1
            else:
                scores.fn += 1
    return report


def token_prf(gold, pred) -> EvalReport:
    """Per-position scores over non-O types; IOB prefixes are stripped so
    RAW and IOB2 inputs count identically."""
    gold_seq, pred_seq = _aligned(gold, pred)
    report = EvalReport(TOKEN)
    for g_labels, p_labels in zip(gold_seq, pred_seq):
        for g, p in zip(g_labels, p_labels):
            g, p = _label_type(g), _label_type(p)
            if g == p:
                if g != OUTSIDE:
                    report._type(g).tp += 1
            else:
                if p != OUTSIDE:
                    report._type(p).fp += 1
                if g != OUTSIDE:
                    report._type(g).fn += 1
    return report


def format_report(report: EvalReport, machine: bool = False) -> str:
    """One row per type (lexicographic), then a Total row, percentages with
    two decimals. Machine mode is tab-separated; default is aligned text."""
    rows = [(name, report.types[name]) for name in sorted(report.types)]
    rows.append(("Total", report.total))
    if machine:
        lines = ["Type\tPrecision\tRecall\tF1"]
        for name, s in rows:
            lines.append(f"{name}:\t{100 * s.precision:.2f}\t{100 * s.recall:.2f}"
                         f"\t{100 * s.f1:.2f}")
    else:
        width = max(len(name) for name, _ in rows) + 1
        lines = [f"{'Type':<{width}} {'Precision':>10} {'Recall':>10} {'F1':>10}"]
        for name, s in rows:
            lines.append(f"{name + ':':<{width}} {100 * s.precision:>10.2f}"
                         f" {100 * s.recall:>10.2f} {100 * s.f1:>10.2f}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# prediction interchange files: CoNLL columns (surface, pos, gold, pred)

def write_interchange(path, gold: Dataset, predicted: list[list[str]]) -> None:
    if len(predicted) != len(gold.sentences):
        raise ValueError("misaligned inputs: prediction count differs from gold")
    with open(path, "w", encoding="utf-8") as f:
        for sent, pred in zip(gold.sentences, predicted):
            if len(pred) != len(sent):
                raise ValueError("misaligned inputs: label count differs within a sentence")
            for t, p in zip(sent.tokens, pred):
                f.write(f"{t.surface} {t.pos} {t.label} {p}\n")
            f.write("\n")


def read_interchange(path):
    """Read a 4-column interchange file into (gold Dataset, predicted labels)."""
    with open(path, encoding="utf-8") as f:
        lines = f.read().splitlines()
    gold_sents = []
    pred_labels = []
    toks: list[Token] = []
    preds: list[str] = []
    for lineno, line in enumerate(lines, start=1):
        fields = line.split()
        if not fields:
            if toks:
                gold_sents.append(Sentence(toks))
                pred_labels.append(preds)
                toks, preds = [], []
            continue
        if len(fields) < 4:
            raise ValueError(
                f"line {lineno}: interchange rows need 4 columns (surface pos gold pred)")
        toks.append(Token(fields[0], fields[1], fields[-2]))
        preds.append(fields[-1])
    if toks:
        gold_sents.append(Sentence(toks))
        pred_labels.append(preds)
    if not gold_sents:
        raise ValueError("no sentences in interchange file")
    return Dataset(gold_sents, source_format=CONLL), pred_labels
