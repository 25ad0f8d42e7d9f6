import numpy as np
import pytest
import torch
from hypothesis import given, settings, strategies as st

from oracles import gradient_draw, np_represent, numpy_params
from qgrank.encoder import (
    CLS,
    SEP,
    EncoderConfig,
    PairEncoder,
    SequencePair,
    Vocabulary,
    batch_loss,
    encode,
    make_pair,
    score,
    score_pairs,
)
from qgrank.errors import DataError

WORDS = [f"w{i}" for i in range(15)]


def small_model(seed=0, **kw):
    return PairEncoder(Vocabulary(WORDS), EncoderConfig(dim=8, depth=2, max_len=24, seed=seed, **kw))


def random_pair(rng, max_len=24):
    q = list(rng.choice(WORDS + ["unseen"], int(rng.integers(1, 8))))
    g = list(rng.choice(WORDS, int(rng.integers(1, 12))))
    return make_pair(q, g, max_len)


def test_pair_layout():
    p = make_pair(["who", "is"], ["a", "b", "c"])
    assert p.tokens == (CLS, "who", "is", SEP, "a", "b", "c", SEP)
    assert p.segments == (0, 0, 0, 0, 1, 1, 1, 1)


def test_graph_side_truncated_first():
    p = make_pair(["q"] * 3, ["g"] * 20, max_len=10)
    assert len(p) == 10
    assert p.tokens.count("q") == 3 and p.tokens[-1] == SEP
    p = make_pair(["q"] * 20, ["g"] * 20, max_len=10)
    assert len(p) == 10 and p.tokens.count("g") == 1


@pytest.mark.parametrize("q,g", [([], ["a"]), (["a"], [])])
def test_empty_sides_rejected(q, g):
    with pytest.raises(ValueError):
        make_pair(q, g)


def test_malformed_pair_rejected():
    with pytest.raises(ValueError):
        SequencePair(("a", SEP, SEP), (0, 0, 1))


def test_vocabulary_is_order_independent():
    assert Vocabulary(["b", "a", "c"]).itos == Vocabulary(["c", "a", "b", "a"]).itos
    v = Vocabulary(["a"])
    assert v.index("zzz") == v.oov


@given(st.integers(0, 10_000))
@settings(max_examples=30)
def test_representation_matches_numpy_forward(seed):
    rng = np.random.default_rng(seed)
    model = small_model(seed)
    pair = random_pair(rng)
    ids, seg, mask = (a.numpy() for a in model.batch([pair]))
    P = {k: v[None] for k, v in numpy_params(model).items()}
    f = encode(pair, model)
    assert f.shape == (8,)
    np.testing.assert_allclose(f, np_represent(P, ids, seg, mask, 2)[0, 0], rtol=0, atol=1e-12)


def test_padding_does_not_change_scores():
    rng = np.random.default_rng(3)
    model = small_model()
    pairs = [random_pair(rng) for _ in range(6)]
    together = score_pairs(pairs, model)
    alone = np.array([score_pairs([p], model)[0] for p in pairs])
    np.testing.assert_allclose(together, alone, atol=1e-12)
    assert score(encode(pairs[0], model), model) == pytest.approx(together[0], abs=1e-12)


def test_init_is_seeded_and_bounded():
    a, b, c = small_model(1), small_model(1), small_model(2)
    for (n, x), y, z in zip(a.named_parameters(), b.parameters(), c.parameters()):
        assert torch.equal(x, y)
        if ".ln" not in n:
            assert float(x.detach().abs().max()) <= 0.05
            assert not torch.equal(x, z)


def test_dropout_is_seeded_and_only_in_training():
    rng = np.random.default_rng(0)
    pairs = [random_pair(rng) for _ in range(4)]
    groups = [(pairs[:2], (1, 0)), (pairs[2:], (1, 0))]
    runs = []
    for _ in range(2):
        m = small_model()
        m.train()
        m.seed_dropout(5)
        runs.append([batch_loss(m, groups, "list").item() for _ in range(3)])
    assert runs[0] == runs[1]
    assert len(set(runs[0])) > 1
    m.eval()
    assert batch_loss(m, groups, "list").item() == batch_loss(m, groups, "list").item()


@pytest.mark.parametrize("kind", ["point", "pair", "list"])
def test_gradients_match_finite_differences(kind):
    # h = 1e-5 keeps central-difference truncation well under the tolerance
    worst = [gradient_draw(seed, kind, h=1e-5) for seed in range(6)]
    assert max(w for w in worst if w is not None) <= 1e-3


def test_checkpoint_round_trip(tmp_path):
    model = small_model(4, use_positions=False)
    path = tmp_path / "model.ckpt"
    model.save(path)
    again = PairEncoder.load(path)
    assert again.config.use_positions is False and again.vocab.itos == model.vocab.itos
    for x, y in zip(model.state_dict().values(), again.state_dict().values()):
        assert torch.equal(x, y)
    model.save(tmp_path / "copy.ckpt")
    assert path.read_bytes() == (tmp_path / "copy.ckpt").read_bytes()


def test_corrupt_checkpoints(tmp_path):
    model = small_model()
    path = tmp_path / "m.ckpt"
    model.save(path)
    data = path.read_bytes()
    for bad in (b"NOPE" + data[4:], data[:-8], data + b"\0"):
        path.write_bytes(bad)
        with pytest.raises(DataError):
            PairEncoder.load(path)
    with pytest.raises(DataError):
        PairEncoder.load(tmp_path / "missing.ckpt")


def test_overlong_pair_rejected():
    model = small_model()
    with pytest.raises(ValueError):
        model([make_pair(["a"] * 30, ["b"] * 30, max_len=64)])


@given(st.floats(-3, 3), st.floats(-3, 3), st.integers(0, 100))
def test_score_is_affine(alpha, beta, seed):
    rng = np.random.default_rng(seed)
    model = small_model(seed)
    f1, f2 = rng.normal(size=8), rng.normal(size=8)
    b = model.out.bias.item()
    lhs = score(alpha * f1 + beta * f2, model)
    rhs = alpha * score(f1, model) + beta * score(f2, model) - (alpha + beta - 1) * b
    assert lhs == pytest.approx(rhs, abs=1e-12)


def test_encoding_ignores_vocabulary_insertion_order():
    pair = make_pair(["w3", "w1"], ["w2", "w9"])
    a = PairEncoder(Vocabulary(WORDS), EncoderConfig(dim=8, depth=2, max_len=24))
    b = PairEncoder(Vocabulary(reversed(WORDS)), EncoderConfig(dim=8, depth=2, max_len=24))
    np.testing.assert_array_equal(encode(pair, a), encode(pair, b))


def test_zero_gradient_at_stationary_points():
    model = small_model()
    model.eval()
    pair = make_pair(["w1"], ["w2"])
    # identical candidates: every softmax score is equal
    s = model([pair, pair, pair])
    from qgrank.losses import listwise_loss_t, pointwise_loss_t
    uniform = torch.full((3,), 1 / 3, dtype=torch.float64)
    (g,) = torch.autograd.grad(listwise_loss_t(s, uniform), s)
    assert float(g.abs().max()) < 1e-12
    # pointwise at the optimum s' = y is approached in the limit; the gradient vanishes there
    x = torch.tensor([40.0], dtype=torch.float64, requires_grad=True)
    (g,) = torch.autograd.grad(pointwise_loss_t(x, torch.tensor([1.0], dtype=torch.float64)), x)
    assert abs(float(g)) < 1e-15
