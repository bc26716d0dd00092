import numpy as np
import pytest

from seqtag.corpus import CorpusError, Dataset, Sentence, Token, build_vocab, parse_conll
from seqtag.nn import NetworkConfig, ParamStore
from seqtag.train import (
    EpochRecord,
    TrainConfig,
    TrainHistory,
    adam_step,
    clip_gradients,
    format_history,
    load_config_file,
    make_batches,
    predict,
    predict_dataset,
    train_ner,
)

from taskgen import make_tagging_task


def tiny_task():
    return make_tagging_task(n_train=60, n_dev=20, n_test=0, n_unlabeled=0, seed=5)


def make_store(rng, shapes):
    store = ParamStore()
    for name, shape in shapes.items():
        store.add(name, rng.normal(size=shape))
    return store


# ---------------------------------------------------------------------------
# Adam

def test_adam_zero_gradients_no_change():
    store = make_store(np.random.default_rng(0), {"w": (3, 4), "b": (4,)})
    before = store.snapshot()
    adam_step(store, TrainConfig())
    for name in store.names():
        np.testing.assert_array_equal(store[name], before[name])


def test_adam_first_step_unit_gradient():
    store = make_store(np.random.default_rng(1), {"w": (2, 2)})
    before = store["w"].copy()
    store.grads["w"][...] = 1.0
    cfg = TrainConfig(lr=1e-3)
    adam_step(store, cfg)
    expected_delta = -1e-3 * 1.0 / (1.0 + 1e-8)
    np.testing.assert_allclose(store["w"] - before, expected_delta, rtol=1e-12)


def test_adam_successive_steps_differ():
    store = make_store(np.random.default_rng(2), {"w": (2,)})
    cfg = TrainConfig(lr=1e-3)
    store.grads["w"][...] = 0.5
    adam_step(store, cfg)
    first = store["w"].copy()
    store.grads["w"][...] = 0.5
    adam_step(store, cfg)
    assert store.step == 2
    assert not np.array_equal(store["w"] - first, first - store["w"])


def straight_line_adam(params, grad_seq, lr, beta1, beta2, eps):
    """Independent reimplementation of the bias-corrected update rule."""
    params = {k: v.copy() for k, v in params.items()}
    m = {k: np.zeros_like(v) for k, v in params.items()}
    v = {k: np.zeros_like(p) for k, p in params.items()}
    for t, grads in enumerate(grad_seq, start=1):
        for k in params:
            g = grads[k]
            m[k] = beta1 * m[k] + (1 - beta1) * g
            v[k] = beta2 * v[k] + (1 - beta2) * g * g
            m_hat = m[k] / (1 - beta1 ** t)
            v_hat = v[k] / (1 - beta2 ** t)
            params[k] = params[k] - lr * m_hat / (np.sqrt(v_hat) + eps)
    return params


def test_adam_hundred_steps_match_independent_implementation():
    rng = np.random.default_rng(3)
    shapes = {"w": (4, 3), "b": (3,), "u": (2, 2, 2)}
    store = make_store(rng, shapes)
    start = store.snapshot()
    cfg = TrainConfig(lr=0.01, beta1=0.9, beta2=0.999, eps=1e-8)
    grad_seq = [{k: rng.normal(size=s) for k, s in shapes.items()} for _ in range(100)]
    for grads in grad_seq:
        for k, g in grads.items():
            store.grads[k][...] = g
        adam_step(store, cfg)
    expected = straight_line_adam(start, grad_seq, 0.01, 0.9, 0.999, 1e-8)
    for k in shapes:
        np.testing.assert_allclose(store[k], expected[k], rtol=0, atol=1e-12)


def test_adam_non_finite_gradient_names_parameter():
    store = make_store(np.random.default_rng(4), {"weird": (2,)})
    store.grads["weird"][0] = np.nan
    with pytest.raises(FloatingPointError, match="weird"):
        adam_step(store, TrainConfig())


def test_adam_skips_frozen_and_zeroes_grads():
    store = make_store(np.random.default_rng(5), {"w": (2,), "frozen": (2,)})
    store.freeze("frozen")
    before = store["frozen"].copy()
    store.grads["w"][...] = 1.0
    store.grads["frozen"][...] = 1.0
    adam_step(store, TrainConfig())
    np.testing.assert_array_equal(store["frozen"], before)
    np.testing.assert_array_equal(store.grads["w"], 0.0)


def test_clip_gradients_scales_global_norm():
    store = make_store(np.random.default_rng(6), {"w": (10,)})
    store.grads["w"][...] = 3.0  # norm ~ 9.49
    norm = clip_gradients(store, max_norm=5.0)
    assert norm == pytest.approx(np.sqrt(90.0))
    assert np.linalg.norm(store.grads["w"]) == pytest.approx(5.0)
    norm2 = clip_gradients(store, max_norm=5.0)
    assert norm2 == pytest.approx(5.0)


# ---------------------------------------------------------------------------
# batching

def sample_dataset():
    return parse_conll(
        "a NN O\nb VB O\n\nc NN B-PER\n\nd NN O\ne VB O\nf NN O\n\n"
        "g NN O\n\nh NN B-PER\ni NN I-PER\n")


def test_make_batches_sizes_and_coverage():
    d = sample_dataset()
    vocab = build_vocab(d)
    batches = make_batches(d, vocab, d.tag_inventory, batch_size=2, seed=0)
    assert sorted(b.size for b in batches) == [1, 2, 2]
    seen = sorted(i for b in batches for i in b.sentence_index)
    assert seen == list(range(5))


def test_make_batches_oov_maps_to_unk():
    d = sample_dataset()
    vocab = build_vocab(parse_conll("a NN O\n"))
    batches = make_batches(d, vocab, d.tag_inventory, batch_size=5, seed=0,
                           shuffle=False)
    ids = np.concatenate([b.word_ids[b.mask > 0] for b in batches])
    assert (ids == 1).sum() == 8  # everything except the one "a" is UNK
    assert (ids == 2).sum() == 1


def test_make_batches_deterministic():
    d = sample_dataset()
    vocab = build_vocab(d)
    a = make_batches(d, vocab, d.tag_inventory, 2, seed=9)
    b = make_batches(d, vocab, d.tag_inventory, 2, seed=9)
    assert [x.sentence_index for x in a] == [x.sentence_index for x in b]


def test_make_batches_rejects_overlong_sentence():
    tokens = [Token(f"w{i}", "NN", "O") for i in range(513)]
    d = Dataset([Sentence(tokens)])
    vocab = build_vocab(d)
    with pytest.raises(CorpusError, match="512"):
        make_batches(d, vocab, d.tag_inventory, 2)


def test_make_batches_epoch_touches_every_sentence_once():
    task = tiny_task()
    vocab = build_vocab(task["train"])
    for seed in (0, 1, 2):
        batches = make_batches(task["train"], vocab, task["train"].tag_inventory,
                               batch_size=16, seed=seed)
        seen = sorted(i for b in batches for i in b.sentence_index)
        assert seen == list(range(len(task["train"].sentences)))


# ---------------------------------------------------------------------------
# training loop

def small_net():
    return NetworkConfig(cell="lstm", bidirectional=True, layers=1, hidden=12,
                         embed_dim=8)


def test_train_zero_epochs_returns_init():
    task = tiny_task()
    cfg = TrainConfig(max_epochs=0, batch_size=16, seed=1)
    ckpt, history = train_ner(task["train"], task["dev"], small_net(), cfg)
    assert len(history) == 0
    assert ckpt.store.step == 0
    assert "emb" in ckpt.store.names()


def test_train_selection_matches_history_max():
    task = tiny_task()
    cfg = TrainConfig(max_epochs=4, batch_size=16, seed=2, dropout=0.2)
    ckpt, history = train_ner(task["train"], task["dev"], small_net(), cfg)
    best = float(ckpt.meta["best_dev_chunk_f1"])
    assert best == pytest.approx(history.best("dev_chunk_f1"), abs=1e-6)
    # re-evaluating the returned checkpoint on dev reproduces the recorded best
    from seqtag.evaluate import chunk_prf
    predicted = predict_dataset(ckpt, task["dev"])
    f1 = chunk_prf(task["dev"].labels(), predicted).total.f1
    assert f1 == pytest.approx(history.best("dev_chunk_f1"), abs=1e-12)


def test_train_determinism_bit_identical():
    task = tiny_task()
    cfg = TrainConfig(max_epochs=3, batch_size=16, seed=3, dropout=0.3)
    ckpt1, h1 = train_ner(task["train"], task["dev"], small_net(), cfg)
    ckpt2, h2 = train_ner(task["train"], task["dev"], small_net(), cfg)
    assert format_history(h1, include_time=False) == format_history(h2, include_time=False)
    for name in ckpt1.store.names():
        assert ckpt1.store[name].tobytes() == ckpt2.store[name].tobytes()


def test_train_frozen_embeddings_unchanged():
    task = tiny_task()
    cfg = TrainConfig(max_epochs=2, batch_size=16, seed=4, freeze_embeddings=True)
    net = small_net()
    ckpt, _ = train_ner(task["train"], task["dev"], net, cfg)
    vocab = build_vocab(task["train"], min_count=1)
    from seqtag.nn import init_params
    from dataclasses import replace
    reference = init_params(
        replace(net, pos_count=len(task["train"].tag_inventory.pos_tags),
                classes=len(task["train"].tag_inventory.ne_labels), dropout=cfg.dropout),
        len(vocab), seed=cfg.seed, precision=cfg.precision)
    reference["emb"][0] = 0.0
    assert ckpt.store["emb"].tobytes() == reference["emb"].tobytes()


def test_train_tag_mismatch_error():
    task = tiny_task()
    bad_dev = Dataset([Sentence([Token("x", "NN", "B-WEIRD")])])
    with pytest.raises(CorpusError, match="tag mismatch"):
        train_ner(task["train"], bad_dev, small_net(), TrainConfig(max_epochs=1))


def test_train_empty_dev_error():
    task = tiny_task()
    with pytest.raises(CorpusError, match="dev"):
        train_ner(task["train"], Dataset([]), small_net(), TrainConfig(max_epochs=1))


def test_train_patience_stops_early():
    task = tiny_task()
    cfg = TrainConfig(max_epochs=50, patience=2, batch_size=16, seed=5, lr=0.0001)
    _, history = train_ner(task["train"], task["dev"], small_net(), cfg)
    assert len(history) < 50


# ---------------------------------------------------------------------------
# prediction

def test_predict_batch_equals_one_by_one():
    task = tiny_task()
    cfg = TrainConfig(max_epochs=2, batch_size=16, seed=6)
    ckpt, _ = train_ner(task["train"], task["dev"], small_net(), cfg)
    sentences = task["dev"].sentences[:7]
    batched = predict(ckpt, sentences, batch_size=7)
    singles = [predict(ckpt, [s], batch_size=1)[0] for s in sentences]
    assert [s.labels() for s in batched] == [s.labels() for s in singles]


def test_predict_empty_input():
    task = tiny_task()
    ckpt, _ = train_ner(task["train"], task["dev"], small_net(),
                        TrainConfig(max_epochs=0))
    assert predict(ckpt, []) == []


def test_predict_unknown_words_and_pos():
    task = tiny_task()
    ckpt, _ = train_ner(task["train"], task["dev"], small_net(),
                        TrainConfig(max_epochs=1, batch_size=16, seed=7))
    odd = [Sentence([Token("neverseen", "XPOSX", "O"),
                     Token("alsonew", "NN", "O")])]
    out = predict(ckpt, odd)
    assert len(out) == 1 and len(out[0]) == 2
    assert all(l in ckpt.tags.ne_labels for l in out[0].labels())


# ---------------------------------------------------------------------------
# config files and history

def test_config_file_roundtrip(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(
        "cell=rnn\nbidirectional=false\nlayers=2\nhidden=33\n"
        "batch_size=64\ndropout=0.25\nlr=0.002\nmax_epochs=7\nseed=99\n"
        "freeze_embeddings=true\nprecision=f32\n")
    net_over, train_over = load_config_file(path)
    assert net_over == {"cell": "rnn", "bidirectional": False, "layers": 2, "hidden": 33}
    assert train_over == {"batch_size": 64, "dropout": 0.25, "lr": 0.002,
                          "max_epochs": 7, "seed": 99, "freeze_embeddings": True,
                          "precision": "f32"}


def test_config_file_unknown_key(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("optimizer=sgd\n")
    with pytest.raises(ValueError, match="unknown config key 'optimizer'"):
        load_config_file(path)


def test_config_file_needs_equals(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("hidden 5\n")
    with pytest.raises(ValueError, match="key=value"):
        load_config_file(path)


def test_history_format():
    h = TrainHistory([EpochRecord(0, 1.25, 0.5, 0.25, 3.0),
                      EpochRecord(1, 0.75, 0.625, 0.5, 2.5)])
    text = format_history(h)
    lines = text.splitlines()
    assert lines[0] == "0\t1.250000\t0.500000\t0.250000\t3.000"
    assert lines[1].startswith("1\t0.750000\t0.625000\t0.500000")
    assert format_history(h, include_time=False).splitlines()[0] == \
        "0\t1.250000\t0.500000\t0.250000"
