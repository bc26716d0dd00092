import itertools

import numpy as np
import pytest

from seqtag.corpus import parse_conll, to_raw
from seqtag.evaluate import (
    Chunk,
    EvalReport,
    Scores,
    chunk_prf,
    extract_chunks,
    format_report,
    read_interchange,
    token_prf,
    write_interchange,
)

IOB2_LABELS = ["O", "B-A", "I-A", "B-B", "I-B"]


def valid_iob2(seq) -> bool:
    prev = None
    for l in seq:
        if l.startswith("I-") and prev != l[2:]:
            return False
        prev = l[2:] if l != "O" else None
    return True


def brute_force_chunks(labels, types=("A", "B")):
    """Independent oracle: test every candidate (type, start, end) span for
    being a maximal B-X (I-X)* run."""
    n = len(labels)
    found = []
    for t in types:
        for i in range(n):
            for j in range(i + 1, n + 1):
                is_run = labels[i] == "B-" + t and all(
                    l == "I-" + t for l in labels[i + 1:j])
                is_maximal = j == n or labels[j] != "I-" + t
                if is_run and is_maximal:
                    found.append(Chunk(t, i, j))
    return sorted(found)


# ---------------------------------------------------------------------------
# chunk extraction

def test_extract_chunks_example():
    assert extract_chunks(["B-PER", "I-PER", "O", "B-LOC"]) == [
        Chunk("PER", 0, 2), Chunk("LOC", 3, 4)]


def test_extract_chunks_all_outside():
    assert extract_chunks(["O", "O", "O"]) == []


def test_extract_chunks_rejects_raw():
    with pytest.raises(ValueError, match="IOB2"):
        extract_chunks(["PER", "O"])


def test_extract_chunks_exhaustive_vs_brute_force():
    for length in range(1, 7):
        for seq in itertools.product(IOB2_LABELS, repeat=length):
            if valid_iob2(seq):
                assert sorted(extract_chunks(list(seq))) == brute_force_chunks(seq)


# ---------------------------------------------------------------------------
# chunk scoring

def test_chunk_prf_perfect():
    gold = [["B-PER", "I-PER", "O"], ["B-LOC"]]
    r = chunk_prf(gold, gold)
    assert r.total.f1 == 1.0
    assert all(s.f1 == 1.0 for s in r.types.values())


def test_chunk_prf_boundary_mismatch():
    r = chunk_prf([["B-PER", "I-PER", "O"]], [["B-PER", "O", "O"]])
    s = r.types["PER"]
    assert (s.tp, s.fp, s.fn) == (0, 1, 1)
    assert s.precision == s.recall == s.f1 == 0.0


def test_chunk_prf_zero_denominator_convention():
    r = chunk_prf([["B-PER", "O"]], [["O", "O"]])
    assert r.total.precision == 0.0
    assert r.total.recall == 0.0
    assert r.total.f1 == 0.0


def test_chunk_prf_misaligned():
    with pytest.raises(ValueError, match="misaligned"):
        chunk_prf([["O"]], [["O"], ["O"]])
    with pytest.raises(ValueError, match="misaligned"):
        chunk_prf([["O", "O"]], [["O"]])


# ---------------------------------------------------------------------------
# token scoring

def test_token_prf_worked_example():
    r = token_prf([["PER", "O", "LOC"]], [["PER", "PER", "O"]])
    assert (r.total.tp, r.total.fp, r.total.fn) == (1, 1, 1)
    assert r.total.precision == 0.5
    assert r.total.recall == 0.5
    assert r.total.f1 == 0.5


def test_token_prf_perfect():
    gold = [["PER", "O"], ["LOC", "LOC"]]
    assert token_prf(gold, gold).total.f1 == 1.0


def random_labeled(rng, scheme_raw=True):
    types = ["PER", "LOC", "ORG"]
    out = []
    for _ in range(rng.integers(1, 6)):
        seq = []
        for _ in range(rng.integers(1, 9)):
            if rng.random() < 0.5:
                seq.append("O")
            else:
                seq.append(types[rng.integers(3)])
        out.append(seq)
    return out


def brute_force_token_counts(gold, pred):
    per_type = {}
    for g_seq, p_seq in zip(gold, pred):
        for g, p in zip(g_seq, p_seq):
            for t in set([g, p]) - {"O"}:
                s = per_type.setdefault(t, [0, 0, 0])
                if g == t and p == t:
                    s[0] += 1
                elif p == t:
                    s[1] += 1
                elif g == t:
                    s[2] += 1
    return per_type


def test_token_prf_fifty_random_cases_vs_tally():
    rng = np.random.default_rng(0)
    for _ in range(50):
        gold = random_labeled(rng)
        pred = [[seq[i] if rng.random() < 0.6 else
                 ["O", "PER", "LOC", "ORG"][rng.integers(4)]
                 for i in range(len(seq))] for seq in gold]
        report = token_prf(gold, pred)
        expected = brute_force_token_counts(gold, pred)
        assert set(report.types) == set(expected)
        for t, (tp, fp, fn) in expected.items():
            s = report.types[t]
            assert (s.tp, s.fp, s.fn) == (tp, fp, fn)


def test_token_prf_invariant_under_prefix_stripping():
    gold = [["B-PER", "I-PER", "O"], ["B-LOC", "O", "B-PER"]]
    pred = [["B-PER", "O", "O"], ["B-PER", "O", "B-PER"]]
    a = token_prf(gold, pred)
    b = token_prf([to_raw(s) for s in gold], [to_raw(s) for s in pred])
    assert a.total == b.total and a.types == b.types


def test_micro_counts_equal_type_sums():
    rng = np.random.default_rng(3)
    gold = random_labeled(rng)
    types = ["O", "PER", "LOC", "ORG"]
    pred = [[types[rng.integers(4)] for _ in seq] for seq in gold]
    r = token_prf(gold, pred)
    assert r.total.tp == sum(s.tp for s in r.types.values())
    assert r.total.fp == sum(s.fp for s in r.types.values())
    assert r.total.fn == sum(s.fn for s in r.types.values())


def test_permutation_invariance():
    gold = [["B-PER", "O"], ["B-LOC", "I-LOC"], ["O", "O"]]
    pred = [["B-PER", "O"], ["O", "B-LOC"], ["B-PER", "O"]]
    perm = [2, 0, 1]
    for fn in (token_prf, chunk_prf):
        a = fn(gold, pred)
        b = fn([gold[i] for i in perm], [pred[i] for i in perm])
        assert a.total == b.total and a.types == b.types


def test_single_token_chunks_match_token_counts():
    rng = np.random.default_rng(5)
    gold, pred = [], []
    for _ in range(30):
        n = int(rng.integers(1, 8))
        g = ["O" if rng.random() < 0.5 else "B-" + "AB"[rng.integers(2)] for _ in range(n)]
        p = ["O" if rng.random() < 0.5 else "B-" + "AB"[rng.integers(2)] for _ in range(n)]
        gold.append(g)
        pred.append(p)
    ct = chunk_prf(gold, pred).total
    tt = token_prf(gold, pred).total
    assert (ct.tp, ct.fp, ct.fn) == (tt.tp, tt.fp, tt.fn)


# ---------------------------------------------------------------------------
# report formatting

def test_format_report_single_type_machine_row():
    r = EvalReport("token", {"TYPE": Scores(tp=3)})
    out = format_report(r, machine=True)
    assert "TYPE:\t100.00\t100.00\t100.00" in out.splitlines()


def test_format_report_empty_is_header_and_total():
    out = format_report(EvalReport("chunk"), machine=True)
    assert out.splitlines() == ["Type\tPrecision\tRecall\tF1", "Total:\t0.00\t0.00\t0.00"]


def test_format_report_rows_sorted():
    r = EvalReport("token", {"Z": Scores(tp=1), "A": Scores(tp=1, fp=1)})
    lines = format_report(r, machine=True).splitlines()
    assert lines[1].startswith("A:") and lines[2].startswith("Z:")
    assert lines[3].startswith("Total:")


def test_format_report_golden(tmp_path):
    gold = [["B-PER", "I-PER", "O", "B-LOC"], ["B-LOC", "O"]]
    pred = [["B-PER", "I-PER", "O", "O"], ["B-LOC", "B-PER"]]
    out = format_report(chunk_prf(gold, pred), machine=True)
    golden = (
        "Type\tPrecision\tRecall\tF1\n"
        "LOC:\t100.00\t50.00\t66.67\n"
        "PER:\t50.00\t100.00\t66.67\n"
        "Total:\t66.67\t66.67\t66.67\n"
    )
    assert out == golden


def test_format_report_human_alignment():
    r = EvalReport("token", {"PER": Scores(tp=1, fp=1, fn=3)})
    lines = format_report(r).splitlines()
    assert lines[1].split() == ["PER:", "50.00", "25.00", "33.33"]


# ---------------------------------------------------------------------------
# interchange files

def test_interchange_roundtrip(tmp_path):
    gold = parse_conll("EU NNP B-ORG\nrejects VBZ O\n\nGerman JJ B-MISC\n")
    pred = [["B-ORG", "O"], ["O"]]
    path = tmp_path / "pred.conll"
    write_interchange(path, gold, pred)
    gold2, pred2 = read_interchange(path)
    assert [s.labels() for s in gold2.sentences] == [s.labels() for s in gold.sentences]
    assert pred2 == pred


def test_interchange_rejects_short_rows(tmp_path):
    path = tmp_path / "bad.conll"
    path.write_text("EU NNP B-ORG\n")
    with pytest.raises(ValueError, match="4 columns"):
        read_interchange(path)
