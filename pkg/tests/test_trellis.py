import numpy as np
import pytest

from prdet.channel import e2pr4
from prdet.trellis import build_trellis, min_distance_search, path_output, to_dot


@pytest.fixture(scope="module")
def full():
    return build_trellis(e2pr4(), constrained=False)


@pytest.fixture(scope="module")
def constrained():
    return build_trellis(e2pr4(), constrained=True)


def test_full_trellis_shape(full):
    assert full.n_states == 16
    assert full.n_edges == 32
    # every state has exactly two outgoing edges
    assert np.all(full.out_edges >= 0)


def test_edge_outputs_spot_checks(full):
    # 0000 --1--> 0001 emits 1; 1100 --0--> 1000 emits -3
    out = path_output(full, 0b0000, [1])
    assert out[0] == 1
    out = path_output(full, 0b1100, [0])
    assert out[0] == -3


def test_output_matches_convolution(full):
    rng = np.random.default_rng(7)
    bits = rng.integers(0, 2, 200)
    out = path_output(full, 0, bits)
    ref = np.convolve(bits, e2pr4().taps)[: bits.size]
    assert np.array_equal(out, ref)


def test_constrained_state_set(constrained):
    kept = {format(s, "04b") for s in constrained.states}
    assert kept == {"0000", "0001", "0011", "0110", "0111",
                    "1000", "1001", "1100", "1110", "1111"}


def test_constrained_edges_avoid_forbidden_windows(constrained):
    t = constrained
    for e in range(t.n_edges):
        window = t.state_label(t.edge_from[e]) + str(t.edge_bit[e])
        assert "101" not in window
        assert "010" not in window


def test_constrained_output_levels(constrained):
    levels = sorted(set(constrained.edge_out.tolist()))
    assert levels == [-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0]


def test_min_distance_unconstrained(full):
    ev = min_distance_search(full)
    assert ev.d2 == pytest.approx(6.0)
    # remerging needs nu identical trailing inputs; the error core is +-(1,-1,1)
    err = ev.input_error
    assert err[3:] == (0,) * (len(err) - 3)
    assert err[:3] in ((1, -1, 1), (-1, 1, -1))


def test_min_distance_constrained(constrained):
    ev = min_distance_search(constrained)
    assert ev.d2 == pytest.approx(10.0)
    # witness really is a valid pair of remerging paths
    out_a = path_output(constrained, ev.start_state, ev.inputs_a)
    out_b = path_output(constrained, ev.start_state, ev.inputs_b)
    assert np.sum((out_a - out_b) ** 2) == pytest.approx(ev.d2)


def test_distance_stable_in_span(full, constrained):
    for t, want in ((full, 6.0), (constrained, 10.0)):
        for span in (10, 16, 24):
            assert min_distance_search(t, max_span=span).d2 == pytest.approx(want)


def test_dot_export(full):
    src = to_dot(full)
    assert src.startswith("digraph")
    assert src.count("->") == full.n_edges
