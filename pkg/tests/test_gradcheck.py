"""Central finite-difference checks for every differentiable op.

Each check perturbs one input element at a time with h = 1e-5 and compares
against the tape gradient of a scalar loss built from the op's output.
"""
import numpy as np
import pytest

from attnracer import autodiff as ad

H = 1e-5
TOL = 1e-4


def numeric_grad(f, x: np.ndarray) -> np.ndarray:
    g = np.zeros_like(x)
    flat = x.reshape(-1)
    gf = g.reshape(-1)
    for i in range(flat.size):
        keep = flat[i]
        flat[i] = keep + H
        up = f()
        flat[i] = keep - H
        down = f()
        flat[i] = keep
        gf[i] = (up - down) / (2 * H)
    return g


def check_grads(build_loss, tensors):
    """build_loss() -> scalar Tensor using `tensors`; compares tape vs numeric."""
    with ad.Tape() as tape:
        loss = build_loss()
    tape.backward(loss, params=tensors)
    for t in tensors:
        num = numeric_grad(lambda: build_loss().item(), t.data)
        denom = max(np.abs(num).max(), np.abs(t.grad).max(), 1e-8)
        err = np.abs(t.grad - num).max() / denom
        assert err < TOL, f"rel err {err:.3g} on shape {t.data.shape}"


def weighted_sum(t: ad.Tensor, w: np.ndarray) -> ad.Tensor:
    # non-uniform projection to scalar so gradients are not all alike
    return ad.tsum(ad.mul(t, ad.Tensor(w)))


def test_grad_elementwise_chain():
    rng = np.random.default_rng(10)
    a = ad.Tensor(rng.standard_normal(6))
    b = ad.Tensor(rng.standard_normal(6))
    w = rng.standard_normal(6)

    def loss():
        return weighted_sum(ad.mul(ad.add(a, b), ad.sub(a, b)), w)

    check_grads(loss, [a, b])


def test_grad_exp_tanh_relu():
    rng = np.random.default_rng(11)
    x = ad.Tensor(rng.standard_normal(8) * 0.7 + 0.3)
    w = rng.standard_normal(8)

    def loss():
        return weighted_sum(ad.tanh(ad.exp(x)), w) + weighted_sum(ad.relu(x), w)

    check_grads(loss, [x])


def test_grad_minimum_and_clip():
    rng = np.random.default_rng(12)
    # keep elements away from ties / clip edges so the subgradient is clean
    a = ad.Tensor(np.array([0.4, -1.2, 2.5, 0.9]))
    b = ad.Tensor(np.array([1.0, -0.2, 1.5, -0.5]))
    w = rng.standard_normal(4)

    def loss():
        return weighted_sum(ad.minimum(a, b), w) + weighted_sum(ad.clip(a, -1.0, 2.0), w)

    check_grads(loss, [a, b])


def test_grad_mean_scale():
    rng = np.random.default_rng(13)
    x = ad.Tensor(rng.standard_normal((3, 4)))

    def loss():
        return ad.mean(ad.mul(x, 2.5))

    check_grads(loss, [x])


def test_grad_softmax():
    rng = np.random.default_rng(14)
    z = ad.Tensor(rng.standard_normal((3, 5)))
    w = rng.standard_normal((3, 5))

    def loss():
        return weighted_sum(ad.softmax(z), w)

    check_grads(loss, [z])


def test_grad_log_prob():
    rng = np.random.default_rng(15)
    z = ad.Tensor(rng.standard_normal((4, 6)))
    acts = np.array([1, 5, 0, 3])
    w = rng.standard_normal(4)

    def loss():
        return weighted_sum(ad.log_prob(z, acts), w)

    check_grads(loss, [z])


def test_grad_log_prob_single():
    rng = np.random.default_rng(16)
    z = ad.Tensor(rng.standard_normal(15))

    def loss():
        return ad.log_prob(z, 4)

    check_grads(loss, [z])


def test_grad_entropy():
    rng = np.random.default_rng(17)
    z = ad.Tensor(rng.standard_normal((3, 7)))
    w = rng.standard_normal(3)

    def loss():
        return weighted_sum(ad.entropy(z), w)

    check_grads(loss, [z])


@pytest.mark.parametrize("stride,padding", [(1, 0), (2, 1), (2, 2), (3, 1)])
def test_grad_conv2d(stride, padding):
    rng = np.random.default_rng(18)
    x = ad.Tensor(rng.standard_normal((2, 8, 9)))
    k = ad.Tensor(rng.standard_normal((3, 2, 3, 3)))
    out_shape = ad.conv2d(x, k, stride=stride, padding=padding).shape
    wout = rng.standard_normal(out_shape)

    def loss():
        out = ad.conv2d(x, k, stride=stride, padding=padding)
        return ad.tsum(ad.mul(out, ad.Tensor(wout)))

    check_grads(loss, [x, k])


def test_grad_conv2d_batched():
    rng = np.random.default_rng(20)
    x = ad.Tensor(rng.standard_normal((2, 1, 6, 6)))
    k = ad.Tensor(rng.standard_normal((2, 1, 5, 5)))
    wout = rng.standard_normal((2, 2, 2, 2))

    def loss():
        return ad.tsum(ad.mul(ad.conv2d(x, k, stride=2, padding=1), ad.Tensor(wout)))

    check_grads(loss, [x, k])


def test_grad_dense():
    rng = np.random.default_rng(21)
    x = ad.Tensor(rng.standard_normal((4, 5)))
    w = ad.Tensor(rng.standard_normal((3, 5)))
    b = ad.Tensor(rng.standard_normal(3))
    wout = rng.standard_normal((4, 3))

    def loss():
        return ad.tsum(ad.mul(ad.dense(x, w, b), ad.Tensor(wout)))

    check_grads(loss, [x, w, b])


def test_grad_scale_rows_context():
    rng = np.random.default_rng(22)
    ann = ad.Tensor(rng.standard_normal((6, 4)))
    w = ad.Tensor(rng.standard_normal(6))
    wout = rng.standard_normal(4)

    def loss():
        return weighted_sum(ad.context(ad.scale_rows(ann, w), ad.softmax(w)),
                            wout)

    check_grads(loss, [ann, w])


def test_grad_reshape_transpose():
    rng = np.random.default_rng(23)
    x = ad.Tensor(rng.standard_normal((2, 3, 4)))
    wout = rng.standard_normal((4, 6))

    def loss():
        t = ad.transpose(x, (2, 0, 1))
        return ad.tsum(ad.mul(ad.reshape(t, (4, 6)), ad.Tensor(wout)))

    check_grads(loss, [x])


def test_grad_full_policy_like_chain():
    # conv -> relu -> flatten -> dense -> softmax scoring, all in one graph
    rng = np.random.default_rng(24)
    img = ad.Tensor(rng.standard_normal((3, 8, 8)))
    k = ad.Tensor(rng.standard_normal((4, 3, 3, 3)) * 0.5)
    w = ad.Tensor(rng.standard_normal((5, 4 * 3 * 3)) * 0.3)
    b = ad.Tensor(rng.standard_normal(5) * 0.1)

    def loss():
        z = ad.relu(ad.conv2d(img, k, stride=3, padding=1))
        flat = ad.reshape(z, (4 * 3 * 3,))
        logits = ad.dense(flat, w, b)
        return ad.log_prob(logits, 2)

    check_grads(loss, [img, k, w, b])
