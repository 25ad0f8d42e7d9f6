import math

import mpmath
import pytest
import torch
from hypothesis import given, strategies as st

from oracles import mp_listwise, mp_pairwise, mp_pointwise, mp_sigmoid, mp_softmax
from qgrank.losses import (
    listwise_loss,
    listwise_loss_t,
    pairwise_loss,
    pointwise_loss,
    pointwise_loss_t,
    sigmoid_norm,
    softmax,
)

score = st.floats(-40, 40, allow_nan=False)
scores = st.lists(score, min_size=1, max_size=12)


@given(score)
def test_sigmoid(s):
    assert abs(sigmoid_norm(s) - float(mp_sigmoid(s))) <= 1e-15


@given(scores, st.data())
def test_pointwise_matches_high_precision(ss, data):
    ys = data.draw(st.lists(st.integers(0, 1), min_size=len(ss), max_size=len(ss)))
    assert abs(pointwise_loss(ss, ys) - float(mp_pointwise(ss, ys))) <= 1e-10


@given(score, score, st.floats(0.01, 0.99))
def test_pairwise_matches_high_precision(sp, sn, lam):
    assert abs(pairwise_loss(sp, sn, lam) - float(mp_pairwise(sp, sn, lam))) <= 1e-12


@given(st.lists(score, min_size=2, max_size=12), st.data())
def test_listwise_matches_high_precision(ss, data):
    pos = data.draw(st.integers(0, len(ss) - 1))
    ys = [int(i == pos) for i in range(len(ss))]
    assert abs(listwise_loss(ss, ys) - float(mp_listwise(ss, ys))) <= 1e-10
    p = softmax(ss)
    assert sum(p) == pytest.approx(1.0, abs=1e-12)
    assert max(abs(a - float(b)) for a, b in zip(p, mp_softmax(ss))) <= 1e-12


@given(st.lists(st.floats(-8, 8), min_size=2, max_size=6), st.data())
def test_loss_gradients_wrt_scores(ss, data):
    pos = data.draw(st.integers(0, len(ss) - 1))
    ys = [int(i == pos) for i in range(len(ss))]
    for torch_loss, mp_loss in ((listwise_loss_t, mp_listwise), (pointwise_loss_t, mp_pointwise)):
        s = torch.tensor(ss, dtype=torch.float64, requires_grad=True)
        torch_loss(s, torch.tensor(ys, dtype=torch.float64)).backward()
        for i in range(len(ss)):
            def f(x, i=i):
                v = list(map(mpmath.mpf, ss))
                v[i] = x
                return mp_loss(v, ys)
            assert float(s.grad[i]) == pytest.approx(float(mpmath.diff(f, ss[i])), abs=1e-9)


def test_clamping_keeps_losses_finite():
    assert pointwise_loss([-1000.0], [1]) == pytest.approx(-math.log(1e-12))
    assert listwise_loss([-1000.0, 1000.0], [1, 0]) == pytest.approx(-2 * math.log(1e-12))
    assert math.isfinite(listwise_loss([1000.0, 1000.0, 1000.0], [1, 0, 0]))


def test_hinge_is_zero_when_margin_met():
    assert pairwise_loss(40.0, -40.0, 0.5) == 0.0
    assert pairwise_loss(0.0, 0.0, 0.5) == pytest.approx(0.5)


@pytest.mark.parametrize("call", [
    lambda: pointwise_loss([0.0, 1.0], [1]),
    lambda: pointwise_loss([0.0], [2]),
    lambda: pairwise_loss(0.0, 0.0, 1.0),
    lambda: pairwise_loss(0.0, 0.0, 0.0),
    lambda: listwise_loss([0.0], [1]),
    lambda: listwise_loss([0.0, 1.0], [1, 1]),
    lambda: listwise_loss([0.0, 1.0], [0, 0]),
    lambda: sigmoid_norm(float("nan")),
])
def test_invalid_inputs(call):
    with pytest.raises(ValueError):
        call()
