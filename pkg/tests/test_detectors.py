import itertools

import numpy as np
import pytest

from prdet.channel import e2pr4, ideal_pr_output
from prdet.detectors import MaxLogMapDetector, NPMLDetector, ViterbiDetector
from prdet.equalizer import (
    acn_autocorr,
    acn_trace,
    design_noise_predictor,
    design_pr_equalizer,
)
from prdet.channel import LorentzianModel
from prdet.trellis import build_trellis, path_output


def _random_constrained_bits(rng, n):
    # run-length-limited source: no 101/010 windows when prefixed with 0
    from prdet.rll import RLLCode, precode

    code = RLLCode()
    u = rng.integers(0, 2, 2 * ((n + 2) // 3 + 2))
    a = precode(code.encode(u))
    return a[:n]


@pytest.mark.parametrize("constrained", [False, True])
def test_noiseless_recovery(constrained):
    rng = np.random.default_rng(0)
    bits = (_random_constrained_bits(rng, 500) if constrained
            else rng.integers(0, 2, 500))
    trace = ideal_pr_output(bits, e2pr4())
    for det in (ViterbiDetector(constrained=constrained),
                NPMLDetector([0.1, -0.05], constrained=constrained),
                MaxLogMapDetector(constrained=constrained)):
        assert np.array_equal(det.predict(trace), bits)


@pytest.mark.parametrize("constrained", [False, True])
def test_matches_brute_force_ml(constrained):
    # a trace shorter than one release block is decided by the final
    # forced traceback, i.e. plain maximum-likelihood over the trellis
    rng = np.random.default_rng(1)
    t = build_trellis(e2pr4(), constrained=constrained)
    n = 12
    for trial in range(8):
        bits = (_random_constrained_bits(rng, n) if constrained
                else rng.integers(0, 2, n))
        trace = ideal_pr_output(bits, e2pr4()) + 0.9 * rng.standard_normal(n)
        best, best_d = None, np.inf
        for cand in itertools.product((0, 1), repeat=n):
            try:
                out = path_output(t, 0, cand)
            except ValueError:
                continue
            d = float(np.sum((trace - out) ** 2))
            if d < best_d:
                best, best_d = cand, d
        got_v = ViterbiDetector(constrained=constrained).predict(trace)
        got_m = MaxLogMapDetector(constrained=constrained).predict(trace)
        assert tuple(got_v) == best
        assert tuple(got_m) == best


def test_npml_zero_taps_equals_viterbi():
    rng = np.random.default_rng(2)
    bits = rng.integers(0, 2, 5000)
    trace = ideal_pr_output(bits, e2pr4()) + 0.6 * rng.standard_normal(5000)
    v = ViterbiDetector().predict(trace)
    z = NPMLDetector(np.zeros(4)).predict(trace)
    assert np.array_equal(v, z)


def test_deterministic():
    rng = np.random.default_rng(3)
    bits = rng.integers(0, 2, 2000)
    trace = ideal_pr_output(bits, e2pr4()) + 0.5 * rng.standard_normal(2000)
    d = ViterbiDetector()
    assert np.array_equal(d.predict(trace), d.predict(trace))


def test_map_agrees_with_viterbi_at_high_snr():
    rng = np.random.default_rng(4)
    bits = rng.integers(0, 2, 20000)
    trace = ideal_pr_output(bits, e2pr4()) + 0.3 * rng.standard_normal(20000)
    v = ViterbiDetector().predict(trace)
    m = MaxLogMapDetector().predict(trace)
    assert np.mean(v != m) < 1e-3
    # the final bits have reduced distance under free termination, so
    # only the interior is checked for exactness
    assert np.array_equal(v[:-4], bits[:-4])


def test_npml_beats_viterbi_in_colored_noise():
    model = LorentzianModel(pw50=2.88)
    eq = design_pr_equalizer(model, e2pr4())
    from prdet.channel import snr_to_sigma

    sigma = snr_to_sigma(8.5, model.energy)
    rng = np.random.default_rng(5)
    bits = rng.integers(0, 2, 200000)
    trace = acn_trace(bits, e2pr4(), eq, sigma, rng=rng)
    taps, _ = design_noise_predictor(acn_autocorr(eq, sigma, 8), 8)
    err_v = np.mean(ViterbiDetector().predict(trace) != bits)
    err_n = np.mean(NPMLDetector(taps).predict(trace) != bits)
    assert err_n < err_v * 0.7
    assert err_v > 0  # the operating point is genuinely noisy


def test_constrained_trellis_gains_in_awgn():
    rng = np.random.default_rng(6)
    n = 200000
    bits = _random_constrained_bits(rng, n)
    trace = ideal_pr_output(bits, e2pr4()) + 0.62 * rng.standard_normal(n)
    err_full = np.mean(ViterbiDetector(constrained=False).predict(trace)
                       != bits)
    err_con = np.mean(ViterbiDetector(constrained=True).predict(trace)
                      != bits)
    assert err_con < err_full * 0.5
    assert err_full > 0


def test_get_params_roundtrip():
    d = NPMLDetector([0.5], constrained=True, l_eval=8)
    p = d.get_params()
    assert p["constrained"] is True and p["l_eval"] == 8
    d.set_params(l_overlap=16)
    assert d.l_overlap == 16
    with pytest.raises(ValueError):
        d.set_params(bogus=1)
