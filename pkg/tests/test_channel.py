import numpy as np
import pytest

from prdet.channel import (
    LorentzianModel,
    awgn_trace,
    e2pr4,
    ideal_pr_output,
    lorentzian_readback,
    snr_to_sigma,
)


def test_e2pr4_taps_and_energy():
    t = e2pr4()
    assert t.taps.tolist() == [1, 2, 0, -2, -1]
    assert t.energy == 10.0
    assert t.memory == 4


def test_pr_family_orders():
    # (1-D)(1+D) = 1 - D^2, (1-D)(1+D)^2 = 1 + D - D^2 - D^3
    from prdet.channel import PRTarget

    assert PRTarget.from_order(1).taps.tolist() == [1, 0, -1]
    assert PRTarget.from_order(2).taps.tolist() == [1, 1, -1, -1]


def test_ideal_pr_output_zero_history():
    out = ideal_pr_output([1, 0, 0, 0, 0, 0], e2pr4())
    assert out.tolist() == [1, 2, 0, -2, -1, 0]


def test_ideal_pr_output_constant_input_dies_out():
    out = ideal_pr_output(np.ones(20), e2pr4())
    # (1-D) factor kills DC once the target memory fills
    assert np.all(out[4:] == 0)


def test_transition_response_shape():
    m = LorentzianModel(pw50=2.54)
    assert m.transition(0.0) == 1.0
    assert m.transition(m.pw50 / 2) == pytest.approx(0.5)
    t = np.linspace(-10, 10, 101)
    g = m.transition(t)
    assert np.all(np.diff(g[t < 0]) > 0) and np.all(np.diff(g[t > 0]) < 0)


def test_dipulse_taps():
    m = LorentzianModel(pw50=2.88)
    q = m.dipulse_taps()
    assert q.size == 41
    i = np.arange(-20, 21)
    ref = m.transition(i) - m.transition(i - 1)
    assert np.allclose(q, ref)
    # q(t) = g(t) - g(t-1) is odd about t = 1/2
    i = np.arange(-19, 21)
    assert np.allclose(q[20 + i], -q[20 + 1 - i])
    assert q[20] > 0 and q[21] < 0


def test_snr_to_sigma():
    assert snr_to_sigma(10.0, 10.0) == pytest.approx(1.0)
    assert snr_to_sigma(0.0, 4.0) == pytest.approx(2.0)


def test_readback_superposition():
    # noiseless read-back is linear in the bipolar pattern
    m = LorentzianModel(pw50=2.54)
    rng = np.random.default_rng(3)
    a = rng.integers(0, 2, 150)
    y = lorentzian_readback(a, m, sigma=0.0)
    q = m.dipulse_taps()
    # direct acausal convolution with explicit -1 background
    pad = 25
    ap = np.concatenate([-np.ones(pad), 2.0 * a - 1.0, -np.ones(pad)])
    ref = np.array([np.dot(q, ap[pad + k + 20 : pad + k - 21 : -1])
                    for k in range(a.size)])
    assert np.allclose(y, ref)


def test_readback_noise_statistics():
    m = LorentzianModel(pw50=2.54)
    a = np.zeros(200000, dtype=int)
    y0 = lorentzian_readback(a, m, sigma=0.0)
    y = lorentzian_readback(a, m, sigma=0.5, seed=1)
    eta = y - y0
    assert abs(eta.mean()) < 5e-3
    assert abs(eta.std() - 0.5) < 5e-3


def test_awgn_trace_noise_is_half_sigma():
    a = np.zeros(200000, dtype=int)
    y = awgn_trace(a, e2pr4(), sigma=1.0, seed=2)
    assert abs(y.std() - 0.5) < 5e-3


def test_readback_reproducible_by_seed():
    m = LorentzianModel(pw50=2.88)
    a = np.random.default_rng(0).integers(0, 2, 100)
    y1 = lorentzian_readback(a, m, sigma=0.3, seed=42)
    y2 = lorentzian_readback(a, m, sigma=0.3, seed=42)
    assert np.array_equal(y1, y2)
