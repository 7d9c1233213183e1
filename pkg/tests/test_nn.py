import numpy as np
import pytest

from prdet.nn import Adam, SequenceClassifier, bce_with_logits, _sigmoid


def _numeric_grad(model, x, y, mask, eps=1e-5):
    grads = []
    for p, _ in model.params():
        g = np.zeros_like(p)
        it = np.nditer(p, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            old = p[idx]
            p[idx] = old + eps
            lp, _ = bce_with_logits(model.forward(x), y, mask)
            p[idx] = old - eps
            lm, _ = bce_with_logits(model.forward(x), y, mask)
            p[idx] = old
            g[idx] = (lp - lm) / (2 * eps)
        grads.append(g)
    return grads


def test_gradient_check():
    rng = np.random.default_rng(0)
    model = SequenceClassifier(n_features=3, n_hidden=4, n_layers=2, seed=1)
    x = rng.standard_normal((2, 6, 3))
    y = rng.integers(0, 2, (2, 6)).astype(float)
    mask = np.ones((2, 6), dtype=bool)
    mask[:, 0] = False  # exercise masked loss too

    loss, dlogits = bce_with_logits(model.forward(x), y, mask)
    model.zero_grads()
    model.backward(dlogits)
    analytic = [g.copy() for _, g in model.params()]
    numeric = _numeric_grad(model, x, y, mask)

    worst = 0.0
    for a, n in zip(analytic, numeric):
        denom = np.maximum(np.abs(a) + np.abs(n), 1e-6)
        worst = max(worst, float(np.max(np.abs(a - n) / denom)))
    assert worst < 1e-4, f"worst relative gradient error {worst:.3e}"


def test_sigmoid_stability():
    x = np.array([-800.0, -30.0, 0.0, 30.0, 800.0])
    s = _sigmoid(x)
    assert np.all(np.isfinite(s))
    assert s[0] == 0.0 or s[0] < 1e-300
    assert s[-1] == 1.0 or s[-1] > 1 - 1e-12
    assert s[2] == 0.5


def test_bce_matches_naive():
    rng = np.random.default_rng(1)
    l = rng.standard_normal((3, 5)) * 2
    y = rng.integers(0, 2, (3, 5)).astype(float)
    mask = rng.integers(0, 2, (3, 5)).astype(bool)
    mask[0, 0] = True
    p = 1 / (1 + np.exp(-l))
    naive = -(y * np.log(p) + (1 - y) * np.log(1 - p))
    ref = naive[mask].mean()
    loss, _ = bce_with_logits(l, y, mask)
    assert loss == pytest.approx(ref, rel=1e-10)


def test_forward_shapes():
    model = SequenceClassifier(n_features=5, n_hidden=50, n_layers=4, seed=0)
    x = np.zeros((2, 40, 5))
    out = model.forward(x)
    assert out.shape == (2, 40)
    # second GRU layer consumes the 100-wide bidirectional output
    assert model.layers[2].fwd.Wx.shape == (100, 150)


def test_training_reduces_loss():
    # learn a toy rule: label = (sum of feature window > 0)
    rng = np.random.default_rng(2)
    model = SequenceClassifier(n_features=3, n_hidden=8, n_layers=2, seed=3)
    opt = Adam(model.params(), lr=1e-2)
    x = rng.standard_normal((8, 10, 3))
    y = (x.sum(axis=2) > 0).astype(float)
    mask = np.ones((8, 10), dtype=bool)
    first = None
    for it in range(60):
        loss, dl = bce_with_logits(model.forward(x), y, mask)
        if first is None:
            first = loss
        model.zero_grads()
        model.backward(dl)
        opt.step()
    assert loss < 0.25 * first


def test_save_load_roundtrip(tmp_path):
    model = SequenceClassifier(n_features=3, n_hidden=4, n_layers=2, seed=7)
    x = np.random.default_rng(4).standard_normal((2, 5, 3))
    ref = model.forward(x)
    path = tmp_path / "m.npz"
    model.save(path)
    again = SequenceClassifier.load(path)
    assert np.array_equal(again.forward(x), ref)


def test_deterministic_init():
    a = SequenceClassifier(3, 4, 1, seed=9)
    b = SequenceClassifier(3, 4, 1, seed=9)
    for (p1, _), (p2, _) in zip(a.params(), b.params()):
        assert np.array_equal(p1, p2)


def test_float32_inference_matches_float64():
    rng = np.random.default_rng(8)
    m64 = SequenceClassifier(n_features=5, n_hidden=10, n_layers=2, seed=3)
    x = rng.standard_normal((4, 12, 5))
    ref = m64.forward(x)
    m32 = SequenceClassifier(n_features=5, n_hidden=10, n_layers=2, seed=3)
    got = m32.astype(np.float32).forward(x)
    assert got.dtype == np.float32
    assert np.allclose(got, ref, atol=1e-4)
