"""Synthetic data generators shared by the test suite.

make_tagging_task builds a context-sensitive NER task: entity surfaces are
drawn from two shared lexicons and are inherently ambiguous, because the
same surfaces also occur in plain text labeled O. An entity mention is
licensed and typed only by a nearby cue word, placed either 1-3 positions
before the span or 1-3 positions after it, so boundary and type decisions
require real context (and the trailing-cue half rewards bidirectionality).
"""

from __future__ import annotations

import numpy as np

from seqtag.corpus import Dataset, Sentence, Token

ENTITY_WORDS_A = [f"ena{i:02d}" for i in range(20)]
ENTITY_WORDS_B = [f"enb{i:02d}" for i in range(20)]
ENTITY_WORDS = ENTITY_WORDS_A + ENTITY_WORDS_B
PRE_CUES = {"PER": [f"prex{i}" for i in range(5)], "LOC": [f"prey{i}" for i in range(5)]}
POST_CUES = {"PER": [f"postx{i}" for i in range(5)], "LOC": [f"posty{i}" for i in range(5)]}
FILLER_WORDS = [f"w{i:03d}" for i in range(140)]
FILLER_POS = ["NN", "VB", "DT", "JJ"]
TYPES = ("PER", "LOC")


def _filler(rng):
    w = FILLER_WORDS[rng.integers(len(FILLER_WORDS))]
    return Token(w, FILLER_POS[hash(w) % len(FILLER_POS)], "O")


def _entity_tokens(rng, etype):
    # surfaces lean 80/20 toward the type's own lexicon: unlabeled text then
    # carries type structure, while the label itself still comes from the cue
    own = ENTITY_WORDS_A if etype == "PER" else ENTITY_WORDS_B
    other = ENTITY_WORDS_B if etype == "PER" else ENTITY_WORDS_A
    span = int(rng.integers(1, 4))
    words = [(own if rng.random() < 0.8 else other)[rng.integers(20)]
             for _ in range(span)]
    return [Token(w, "NNP", ("B-" if k == 0 else "I-") + etype)
            for k, w in enumerate(words)]


def make_sentence(rng) -> Sentence:
    tokens = [_filler(rng) for _ in range(int(rng.integers(2, 5)))]
    n_entities = 1 if rng.random() < 0.8 else 2
    for _ in range(n_entities):
        etype = TYPES[rng.integers(len(TYPES))]
        # 2-5 fillers between cue and span: too far for tanh-RNN memory,
        # comfortable for a gated cell
        gap = [_filler(rng) for _ in range(int(rng.integers(2, 6)))]
        entity = _entity_tokens(rng, etype)
        if rng.random() < 0.5:
            cue = PRE_CUES[etype][rng.integers(5)]
            tokens += [Token(cue, "IN", "O")] + gap + entity
        else:
            cue = POST_CUES[etype][rng.integers(5)]
            tokens += entity + gap + [Token(cue, "IN", "O")]
        tokens += [_filler(rng) for _ in range(int(rng.integers(1, 3)))]
    if rng.random() < 0.25:
        # bare entity surface with no licensing cue: labeled O
        w = ENTITY_WORDS[rng.integers(len(ENTITY_WORDS))]
        tokens.append(Token(w, "NNP", "O"))
    tokens += [_filler(rng) for _ in range(int(rng.integers(1, 3)))]
    return Sentence(tokens)


def make_tagging_task(n_train=1000, n_dev=200, n_test=200, n_unlabeled=20000,
                      seed=0):
    """Returns dict with train/dev/test Datasets plus an unlabeled corpus of
    token lists drawn from the same distribution."""
    rng = np.random.default_rng(seed)
    sentences = [make_sentence(rng) for _ in range(n_train + n_dev + n_test)]
    base = Dataset(sentences)
    train = Dataset(sentences[:n_train], tag_inventory=base.tag_inventory)
    dev = Dataset(sentences[n_train:n_train + n_dev], tag_inventory=base.tag_inventory)
    test = Dataset(sentences[n_train + n_dev:], tag_inventory=base.tag_inventory)
    unlabeled = [make_sentence(rng).words() for _ in range(n_unlabeled)]
    return {"train": train, "dev": dev, "test": test, "unlabeled": unlabeled}


def make_cluster_corpus(seed=0, n_sentences=600, cluster_size=5, length=8):
    """Two disjoint word clusters that never co-occur across clusters."""
    rng = np.random.default_rng(seed)
    cluster_a = [f"ca{i}" for i in range(cluster_size)]
    cluster_b = [f"cb{i}" for i in range(cluster_size)]
    sentences = []
    for k in range(n_sentences):
        words = cluster_a if k % 2 == 0 else cluster_b
        sentences.append([words[i] for i in rng.integers(cluster_size, size=length)])
    return sentences, cluster_a, cluster_b


def cosine(u, v) -> float:
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 or nv == 0:
        return 0.0
    return float(u @ v / (nu * nv))


def cluster_cosine_gap(table, cluster_a, cluster_b) -> float:
    """Mean intra-cluster cosine minus mean inter-cluster cosine."""
    intra, inter = [], []
    for words, other in ((cluster_a, cluster_b), (cluster_b, cluster_a)):
        for i, w in enumerate(words):
            for w2 in words[i + 1:]:
                intra.append(cosine(table.row(w), table.row(w2)))
            for w2 in other:
                inter.append(cosine(table.row(w), table.row(w2)))
    return float(np.mean(intra) - np.mean(inter)) if intra else 0.0


# ---------------------------------------------------------------------------
# fuzzing for parser robustness

_SURFACE_ALPHABET = list("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
                         "0123456789-_.,!?'+/&%$#@*=:;") + [
    "क", "ख", "ग", "य", "ा", "é", "ü", "中"]
_POS_CHOICES = ["NN", "NNP", "VB", "VBZ", "JJ", "DT", "IN", "PSP", "SYM", "V_VM"]
_RAW_TYPES = ["PER", "LOC", "ORG", "MISC"]


def _fuzz_surface(rng) -> str:
    while True:
        n = int(rng.integers(1, 9))
        s = "".join(_SURFACE_ALPHABET[i] for i in rng.integers(len(_SURFACE_ALPHABET), size=n))
        # avoid the format-reserved tokens
        if s not in ("((", "))", "-DOCSTART-") and not s.startswith("<"):
            return s


def make_fuzz_dataset(rng) -> Dataset:
    """Random dataset with either RAW or IOB2 labels; surfaces cover unicode,
    digits, and punctuation but respect the no-whitespace token invariant."""
    iob = bool(rng.integers(2))
    sentences = []
    for _ in range(int(rng.integers(1, 8))):
        tokens = []
        prev_type = None
        for _ in range(int(rng.integers(1, 12))):
            surface = _fuzz_surface(rng)
            pos = _POS_CHOICES[rng.integers(len(_POS_CHOICES))]
            roll = rng.random()
            if roll < 0.6:
                label, prev_type = "O", None
            else:
                etype = _RAW_TYPES[rng.integers(len(_RAW_TYPES))]
                if not iob:
                    label, prev_type = etype, None
                elif prev_type == etype and roll < 0.8:
                    label = "I-" + etype
                else:
                    label, prev_type = "B-" + etype, etype
            tokens.append(Token(surface, pos, label))
        sentences.append(Sentence(tokens))
    return Dataset(sentences)
