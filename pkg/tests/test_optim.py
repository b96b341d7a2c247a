"""Adam oracle (hand-rolled moment recursion) and checkpoint round-trips."""
import numpy as np
import pytest

from attnracer.autodiff import Tensor
from attnracer.checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from attnracer.optim import Adam


def adam_oracle(theta0, grads, lr, b1=0.9, b2=0.999, eps=1e-8):
    theta = theta0.copy()
    m = np.zeros_like(theta)
    v = np.zeros_like(theta)
    for t, g in enumerate(grads, start=1):
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        mhat = m / (1 - b1 ** t)
        vhat = v / (1 - b2 ** t)
        theta = theta - lr * mhat / (np.sqrt(vhat) + eps)
    return theta


def test_adam_matches_reference_recursion():
    rng = np.random.default_rng(30)
    theta0 = rng.standard_normal(6)
    grads = [rng.standard_normal(6) for _ in range(25)]
    p = Tensor(theta0.copy())
    opt = Adam(lr=0.01)
    for g in grads:
        p.grad = g
        opt.step({"w": p})
    want = adam_oracle(theta0, grads, lr=0.01)
    np.testing.assert_allclose(p.data, want, rtol=1e-12, atol=1e-12)


def test_adam_first_step_size_is_lr():
    # with bias correction the first update is lr * sign(g) (eps aside)
    p = Tensor(np.array([1.0, -2.0]))
    p.grad = np.array([0.5, -3.0])
    Adam(lr=1e-3).step({"w": p})
    np.testing.assert_allclose(p.data, [1.0 - 1e-3, -2.0 + 1e-3], atol=1e-8)


def test_adam_defaults():
    opt = Adam()
    assert (opt.lr, opt.beta1, opt.beta2, opt.eps) == (3e-4, 0.9, 0.999, 1e-8)


def test_adam_converges_on_quadratic():
    # minimize (x - 3)^2; gradient 2(x - 3)
    p = Tensor(np.array([0.0]))
    opt = Adam(lr=0.05)
    for _ in range(2000):
        p.grad = 2 * (p.data - 3.0)
        opt.step({"x": p})
    assert abs(p.data[0] - 3.0) < 1e-3


def test_adam_requires_grad():
    p = Tensor(np.zeros(2))
    with pytest.raises(ValueError):
        Adam().step({"w": p})


def test_adam_state_round_trip(tmp_path):
    rng = np.random.default_rng(31)
    p = Tensor(rng.standard_normal(4))
    opt = Adam(lr=0.02)
    for _ in range(3):
        p.grad = rng.standard_normal(4)
        opt.step({"w": p})
    path = tmp_path / "opt.dacn"
    save_checkpoint(path, opt.state_arrays())
    restored = Adam(lr=0.02)
    restored.load_state_arrays(load_checkpoint(path))
    assert restored.t == 3
    np.testing.assert_allclose(restored.m["w"], opt.m["w"])
    np.testing.assert_allclose(restored.v["w"], opt.v["w"])


def test_checkpoint_round_trip_preserves_order_shape_values(tmp_path):
    rng = np.random.default_rng(32)
    arrays = {
        "conv1.w": rng.standard_normal((4, 3, 5, 5)),
        "conv1.b": rng.standard_normal(4),
        "head.w": rng.standard_normal((2, 7)),
        "scalarish": np.array([3.25]),
    }
    path = tmp_path / "m.dacn"
    save_checkpoint(path, arrays)
    back = load_checkpoint(path)
    assert list(back) == list(arrays)
    for k in arrays:
        assert back[k].shape == arrays[k].shape
        np.testing.assert_array_equal(back[k], arrays[k])


def test_checkpoint_bytes_are_deterministic(tmp_path):
    arrays = {"a": np.arange(6.0).reshape(2, 3), "b": np.array([1.0])}
    p1, p2 = tmp_path / "x1.dacn", tmp_path / "x2.dacn"
    save_checkpoint(p1, arrays)
    save_checkpoint(p2, {k: v.copy() for k, v in arrays.items()})
    assert p1.read_bytes() == p2.read_bytes()


def test_checkpoint_bad_magic(tmp_path):
    p = tmp_path / "junk.dacn"
    p.write_bytes(b"NOPE" + b"\x00" * 16)
    with pytest.raises(CheckpointError):
        load_checkpoint(p)


def test_checkpoint_truncated(tmp_path):
    p = tmp_path / "t.dacn"
    save_checkpoint(p, {"w": np.ones((3, 3))})
    whole = p.read_bytes()
    p.write_bytes(whole[:len(whole) - 11])
    with pytest.raises(CheckpointError):
        load_checkpoint(p)
