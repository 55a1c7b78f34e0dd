import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fairrep.engine import (
    AdaDeltaState,
    DenseNet,
    NonFiniteError,
    TapeConsumedError,
    adadelta_step,
    backward,
    forward,
    init_dense,
    weighted_bce,
)

from conftest import PRESET_SHAPES, central_differences, kink_free_batch, max_relative_error, net_gradient_error

def test_zero_net_gives_zero_logits():
    net = DenseNet([np.zeros((4, 3)), np.zeros((1, 4))], [np.zeros(4), np.zeros(1)])
    out, _ = forward(net, np.random.default_rng(0).standard_normal((5, 3)))
    assert np.array_equal(out, np.zeros(5))


def test_affine_by_hand():
    net = DenseNet([np.array([[2.0]])], [np.array([1.0])])
    out, _ = forward(net, np.array([[3.0]]))
    assert out.tolist() == [7.0]


def test_forward_matches_scalar_reevaluation():
    rng = np.random.default_rng(3)
    net = init_dense([5, 4, 3, 1], rng)
    for b in net.biases:
        b[:] = rng.standard_normal(b.shape)
    x = rng.standard_normal((6, 5))
    out, _ = forward(net, x)

    expected = []
    for row in x:
        h = list(row)
        for li, (w, b) in enumerate(zip(net.weights, net.biases)):
            nxt = []
            for j in range(w.shape[0]):
                v = b[j] + sum(w[j, k] * h[k] for k in range(w.shape[1]))
                nxt.append(max(v, 0.0) if li < len(net.weights) - 1 else v)
            h = nxt
        expected.append(h[0])
    np.testing.assert_allclose(out, expected, rtol=1e-13, atol=1e-13)


def test_forward_rejects_bad_input():
    net = init_dense([3, 1], np.random.default_rng(0))
    with pytest.raises(ValueError):
        forward(net, np.zeros((2, 4)))
    with pytest.raises(NonFiniteError):
        forward(net, np.array([[0.0, np.nan, 1.0]]))


def test_layers_must_chain():
    with pytest.raises(ValueError):
        DenseNet([np.zeros((4, 3)), np.zeros((1, 5))], [np.zeros(4), np.zeros(1)])


@pytest.mark.parametrize("sizes", PRESET_SHAPES)
def test_gradient_matches_finite_differences(sizes):
    assert net_gradient_error(sizes) < 1e-5


def test_input_gradient_matches_finite_differences():
    rng = np.random.default_rng(11)
    net = init_dense([6, 5, 1], rng)
    x = kink_free_batch(net, 3, rng)
    y = np.array([1, 0, 1])
    out, tape = forward(net, x)
    _, dout = weighted_bce(out, y)
    _, gx = backward(tape, dout)
    numeric = central_differences(lambda: weighted_bce(forward(net, x)[0], y)[0], [x])
    assert max_relative_error([gx], numeric) < 1e-5


def _input_grad(net, x, reversal):
    out, tape = forward(net, x, reversal=reversal)
    return backward(tape, np.linspace(-1, 1, len(x)))


def test_zero_reversal_blocks_upstream_gradient():
    rng = np.random.default_rng(0)
    net = init_dense([4, 3, 1], rng)
    grads, gx = _input_grad(net, rng.standard_normal((5, 4)), 0.0)
    assert np.all(gx == 0)
    # the net's own parameters still get their gradient
    assert any(np.any(g != 0) for g in grads)


@pytest.mark.parametrize("c", [1.0, 0.3, 7.5, 1000.0])
def test_reversal_is_exact_negative_scaling(c):
    rng = np.random.default_rng(1)
    net = init_dense([4, 3, 1], rng)
    x = rng.standard_normal((5, 4))
    g_plain, gx_plain = _input_grad(net, x, None)
    g_rev, gx_rev = _input_grad(net, x, c)
    assert np.array_equal(gx_rev, -c * gx_plain)
    for a, b in zip(g_plain, g_rev):
        assert np.array_equal(a, b)


def test_tape_is_single_use():
    net = init_dense([2, 1], np.random.default_rng(0))
    _, tape = forward(net, np.ones((3, 2)))
    backward(tape, np.ones(3))
    with pytest.raises(TapeConsumedError):
        backward(tape, np.ones(3))


def test_backward_rejects_wrong_length():
    net = init_dense([2, 1], np.random.default_rng(0))
    _, tape = forward(net, np.ones((3, 2)))
    with pytest.raises(ValueError):
        backward(tape, np.ones(4))


def test_bce_at_zero_logit_is_ln2():
    loss, grad = weighted_bce(np.array([0.0]), np.array([1]))
    assert loss == pytest.approx(math.log(2), abs=1e-15)
    assert grad.tolist() == [-0.5]


def test_bce_is_linear_in_weights():
    z = np.array([0.3, -1.2, 2.0, 0.0])
    y = np.array([1, 0, 0, 1])
    l1, g1 = weighted_bce(z, y, (1, 1))
    l2, g2 = weighted_bce(z, y, (2, 2))
    assert l2 == 2 * l1
    assert np.array_equal(g2, 2 * g1)


def test_bce_matches_scalar_oracle():
    z = [0.4, -2.5, 3.1, -0.2]
    y = [1, 0, 1, 0]
    w = (0.8, 2.6)
    expected_loss, expected_grad = 0.0, []
    for zi, yi in zip(z, y):
        s = 1 / (1 + math.exp(-zi))
        wi = w[yi]
        expected_loss += wi * -(yi * math.log(s) + (1 - yi) * math.log(1 - s))
        expected_grad.append(wi * (s - yi) / len(z))
    loss, grad = weighted_bce(np.array(z), np.array(y), w)
    assert loss == pytest.approx(expected_loss / len(z), rel=1e-14)
    np.testing.assert_allclose(grad, expected_grad, rtol=1e-14)


def test_bce_is_stable_at_large_logits():
    z = np.array([50.0, -50.0, 50.0, -50.0])
    y = np.array([1, 0, 0, 1])
    loss, grad = weighted_bce(z, y)
    assert np.isfinite(loss) and np.all(np.isfinite(grad))
    # two confident mistakes of 50 nats each, two correct ~0
    assert loss == pytest.approx(25.0, rel=1e-12)


def test_bce_rejects_bad_weights():
    with pytest.raises(ValueError):
        weighted_bce(np.zeros(2), np.array([0, 1]), (0.0, 1.0))


@given(
    z=st.floats(-30, 30, allow_nan=False),
    y=st.integers(0, 1),
)
def test_zero_one_error_bounded_by_ce_over_ln2(z, y):
    loss, _ = weighted_bce(np.array([z]), np.array([y]))
    s = 1 / (1 + math.exp(-z))
    mistake = float((s >= 0.5) != bool(y))
    assert mistake <= loss / math.log(2) + 1e-12


def test_unit_weights_equal_plain_cross_entropy():
    rng = np.random.default_rng(5)
    z = rng.standard_normal(50) * 3
    y = rng.integers(0, 2, 50)
    s = 1 / (1 + np.exp(-z))
    plain = -np.mean(y * np.log(s) + (1 - y) * np.log(1 - s))
    assert weighted_bce(z, y, (1, 1))[0] == pytest.approx(plain, rel=1e-12)


def test_adadelta_zero_gradient_is_a_no_op():
    p = [np.array([1.0, -2.0]), np.array([[3.0]])]
    before = [q.copy() for q in p]
    st_ = AdaDeltaState.zeros_like(p)
    adadelta_step(p, [np.zeros(2), np.zeros((1, 1))], st_)
    for a, b in zip(p, before):
        assert np.array_equal(a, b)
    assert all(np.all(s == 0) for s in st_.sq_grad + st_.sq_delta)


@pytest.mark.parametrize("g", [0.5, -3.0, 1e-3])
def test_adadelta_first_step_closed_form(g):
    rho, eps = 0.95, 1e-6
    p = [np.array([0.0])]
    st_ = AdaDeltaState.zeros_like(p, rho=rho, eps=eps, lr=1.0)
    adadelta_step(p, [np.array([g])], st_)
    expected = -(math.sqrt(eps) / math.sqrt((1 - rho) * g * g + eps)) * g
    assert p[0][0] == pytest.approx(expected, rel=1e-14)
    assert st_.sq_delta[0][0] == pytest.approx((1 - rho) * expected**2, rel=1e-14)


def test_adadelta_shrinks_quadratic():
    theta = [np.array([1.0])]
    st_ = AdaDeltaState.zeros_like(theta)
    trace = [1.0]
    for _ in range(200):
        adadelta_step(theta, [theta[0].copy()], st_)
        trace.append(abs(theta[0][0]))
        assert st_.sq_grad[0][0] >= 0 and st_.sq_delta[0][0] >= 0
    assert np.all(np.diff(trace) < 0)
    assert trace[-1] < 0.5


def test_adadelta_rejects_non_finite_gradient():
    p = [np.zeros(2)]
    with pytest.raises(NonFiniteError):
        adadelta_step(p, [np.array([1.0, np.inf])], AdaDeltaState.zeros_like(p))


def test_adadelta_rejects_bad_settings():
    with pytest.raises(ValueError):
        AdaDeltaState.zeros_like([np.zeros(1)], rho=1.0)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), steps=st.integers(1, 5))
def test_seeded_training_is_bitwise_deterministic(seed, steps):
    def run():
        rng = np.random.default_rng(seed)
        net = init_dense([3, 4, 1], rng)
        state = AdaDeltaState.zeros_like(net.parameters())
        x = rng.standard_normal((8, 3))
        y = rng.integers(0, 2, 8)
        for _ in range(steps):
            out, tape = forward(net, x)
            _, d = weighted_bce(out, y)
            grads, _ = backward(tape, d)
            adadelta_step(net.parameters(), grads, state)
        return net.parameters()

    for a, b in zip(run(), run()):
        assert np.array_equal(a, b)
