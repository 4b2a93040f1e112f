from __future__ import annotations

import json

import numpy as np
import pytest

from mlqec import nn
from mlqec.gf2 import ShapeError
from mlqec.nn import AdamState, MlpModel, ModelFormatError, TrainConfig

FD_EPS = 1e-6
REL_TOL = 1e-4
ABS_FLOOR = 1e-9


def zero_model(sizes, act="sigmoid"):
    return MlpModel(
        tuple(sizes),
        [np.zeros((a, b)) for a, b in zip(sizes[:-1], sizes[1:])],
        [np.zeros(b) for b in sizes[1:]],
        act,
    )


def finite_difference(model, x, t, loss, mask=None):
    out = np.zeros_like(model.flat)
    for i in range(model.flat.size):
        old = model.flat[i]
        model.flat[i] = old + FD_EPS
        up = nn.loss_value(model, x, t, loss, mask)
        model.flat[i] = old - FD_EPS
        down = nn.loss_value(model, x, t, loss, mask)
        model.flat[i] = old
        out[i] = (up - down) / (2 * FD_EPS)
    return out


def flatten(grads):
    return np.concatenate([np.ravel(a) for pair in grads for a in pair])


def assert_grad_close(analytic, numeric):
    err = np.abs(analytic - numeric)
    scale = np.maximum(np.abs(analytic), np.abs(numeric))
    assert np.all(err <= REL_TOL * scale + ABS_FLOOR), float(np.max(err / np.maximum(scale, ABS_FLOOR)))


def test_zero_model_outputs_half():
    assert np.array_equal(nn.forward(zero_model((4, 3, 6)), np.ones(4)), np.full(6, 0.5))


def test_identity_linear_layer():
    m = MlpModel((3, 3), [np.eye(3)], [np.zeros(3)], "linear")
    x = np.array([0.3, -1.2, 5.0])
    assert np.array_equal(nn.forward(m, x), x)


def test_forward_matches_hand_rolled():
    m = nn.init_model((4, 5, 3), np.random.default_rng(3), "sigmoid")
    m.biases[0][:] = [0.1, -0.2, 0.3, 0.0, 0.05]
    m.biases[1][:] = [-0.3, 0.2, 0.1]
    x = np.array([1.0, 0.0, 1.0, 1.0])
    w0, b0, w1, b1 = m.weights[0], m.biases[0], m.weights[1], m.biases[1]
    hidden = []
    for j in range(5):
        acc = b0[j]
        for i in range(4):
            acc += x[i] * w0[i, j]
        hidden.append(max(acc, 0.0))
    expect = []
    for k in range(3):
        acc = b1[k]
        for j in range(5):
            acc += hidden[j] * w1[j, k]
        expect.append(1.0 / (1.0 + np.exp(-acc)))
    assert np.allclose(nn.forward(m, x), expect, atol=1e-10, rtol=0)


def test_forward_batch_and_shape_error():
    m = nn.init_model((3, 4, 2), np.random.default_rng(0))
    x = np.random.default_rng(1).normal(size=(7, 3))
    batch = nn.forward(m, x)
    assert batch.shape == (7, 2)
    assert np.allclose(batch[2], nn.forward(m, x[2]))
    with pytest.raises(ShapeError):
        nn.forward(m, np.ones(5))


def test_zero_problem_gradients_vanish():
    m = zero_model((3, 4, 2), "linear")
    _, grads = nn.grad(m, np.zeros((5, 3)), np.zeros((5, 2)), "mse")
    assert not flatten(grads).any()


@pytest.mark.parametrize("loss,act", [("mse", "sigmoid"), ("mse", "linear"), ("bce", "sigmoid")])
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_gradient_matches_finite_differences(loss, act, seed):
    rng = np.random.default_rng(seed)
    m = nn.init_model((5, 7, 6, 4), rng, act)
    for b in m.biases:
        b[:] = rng.normal(scale=0.1, size=b.shape)
    x = rng.normal(size=(6, 5))
    t = rng.integers(0, 2, (6, 4)).astype(float) if loss == "bce" else rng.normal(size=(6, 4))
    value, grads = nn.grad(m, x, t, loss)
    assert value == pytest.approx(nn.loss_value(m, x, t, loss), rel=1e-14)
    assert_grad_close(flatten(grads), finite_difference(m, x, t, loss))


def test_masked_gradient_matches_finite_differences():
    rng = np.random.default_rng(9)
    m = nn.init_model((6, 8, 6), rng, "linear")
    x = rng.integers(0, 2, (2, 6)).astype(float)
    t = rng.normal(size=(2, 6))
    mask = np.zeros((2, 6))
    mask[0, 3] = mask[1, 1] = 1.0
    _, grads = nn.grad(m, x, t, "mse", mask)
    assert_grad_close(flatten(grads), finite_difference(m, x, t, "mse", mask))


def test_bce_is_stable_for_large_logits():
    m = MlpModel((1, 1), [np.array([[800.0]])], [np.zeros(1)], "sigmoid")
    v = nn.loss_value(m, np.array([[1.0]]), np.array([[0.0]]), "bce")
    assert v == pytest.approx(800.0)


def test_adam_zero_gradient_is_noop():
    m = nn.init_model((3, 4, 2), np.random.default_rng(0))
    before = m.flat.copy()
    state = AdamState.zeros_like(m)
    for _ in range(5):
        nn.adam_step(m, state, np.zeros_like(m.flat), TrainConfig())
    assert np.array_equal(m.flat, before)


def test_adam_constant_gradient_step_size():
    m = nn.init_model((2, 3, 1), np.random.default_rng(0))
    cfg = TrainConfig(learning_rate=0.01)
    g = np.random.default_rng(1).choice([-2.0, 0.5, 3.0], size=m.flat.size)
    state = AdamState.zeros_like(m)
    for _ in range(200):
        before = m.flat.copy()
        nn.adam_step(m, state, g, cfg)
    step = m.flat - before
    assert np.allclose(step, -cfg.learning_rate * np.sign(g), rtol=1e-5)


def test_adam_per_layer_and_flat_agree():
    rng = np.random.default_rng(4)
    m1 = nn.init_model((3, 4, 2), rng)
    m2 = m1.copy()
    x, t = rng.normal(size=(5, 3)), rng.random((5, 2))
    _, grads = nn.grad(m1, x, t, "bce")
    nn.adam_step(m1, AdamState.zeros_like(m1), grads, TrainConfig())
    nn.adam_step(m2, AdamState.zeros_like(m2), flatten(grads), TrainConfig())
    assert np.array_equal(m1.flat, m2.flat)


def test_xor():
    x = np.array([[0, 0], [0, 1], [1, 0], [1, 1]], dtype=float)
    y = np.array([[0], [1], [1], [0]], dtype=float)
    m = nn.init_model((2, 16, 1), np.random.default_rng(0), "sigmoid")
    m, hist = nn.train(m, (x, y), TrainConfig(batch_size=4, epochs=2000, learning_rate=0.01), "mse")
    assert len(hist) == 2000
    assert nn.loss_value(m, x, y, "mse") < 0.05


def test_zero_learning_rate_keeps_parameters():
    rng = np.random.default_rng(1)
    m = nn.init_model((3, 5, 2), rng)
    before = m.flat.copy()
    x, y = rng.normal(size=(20, 3)), rng.random((20, 2))
    _, hist = nn.train(m, (x, y), TrainConfig(batch_size=20, epochs=10, learning_rate=0.0), "bce")
    assert np.array_equal(m.flat, before)
    # shuffling only reorders the float summation
    assert np.ptp(hist) <= 1e-12 * abs(hist[0])


def test_training_is_seeded():
    rng = np.random.default_rng(2)
    x, y = rng.normal(size=(50, 3)), rng.integers(0, 2, (50, 2)).astype(float)
    cfg = TrainConfig(batch_size=8, epochs=5, seed=11)
    a = nn.train(nn.init_model((3, 6, 2), np.random.default_rng(0)), (x, y), cfg, "bce")[0]
    b = nn.train(nn.init_model((3, 6, 2), np.random.default_rng(0)), (x, y), cfg, "bce")[0]
    assert np.array_equal(a.flat, b.flat)


def test_parameters_are_views_of_flat():
    m = nn.init_model((2, 3, 1), np.random.default_rng(0))
    m.flat[0] = 42.0
    assert m.weights[0][0, 0] == 42.0
    c = m.copy()
    c.flat[0] = 0.0
    assert m.weights[0][0, 0] == 42.0


def test_checkpoint_round_trip(tmp_path):
    m = nn.init_model((4, 7, 3), np.random.default_rng(5), "linear")
    path = tmp_path / "m.json"
    nn.save_model(m, path)
    back = nn.load_model(path)
    x = np.random.default_rng(6).normal(size=(10, 4))
    assert np.array_equal(nn.forward(back, x), nn.forward(m, x))
    assert back.output_activation == "linear"


def test_checkpoint_truncated(tmp_path):
    path = tmp_path / "m.json"
    nn.save_model(nn.init_model((4, 7, 3), np.random.default_rng(5)), path)
    text = path.read_text()
    path.write_text(text[: len(text) // 2])
    with pytest.raises(ModelFormatError):
        nn.load_model(path)


def test_checkpoint_version_mismatch(tmp_path):
    doc = nn.model_to_dict(nn.init_model((2, 2), np.random.default_rng(0)))
    doc["version"] = 99
    path = tmp_path / "m.json"
    path.write_text(json.dumps(doc))
    with pytest.raises(ModelFormatError, match="99.*version 1"):
        nn.load_model(path)


def test_checkpoint_shape_mismatch():
    doc = nn.model_to_dict(nn.init_model((2, 3), np.random.default_rng(0)))
    doc["layer_sizes"] = [2, 4]
    with pytest.raises(ModelFormatError):
        nn.model_from_dict(doc)
