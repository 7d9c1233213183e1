import numpy as np
import pytest

from prdet.rll import RLLCode, postcode, precode


@pytest.fixture(scope="module")
def code():
    return RLLCode()


def _runs_ok(c, d=1, k=7):
    s = "".join(str(b) for b in c)
    if "11" in s:
        return False
    return max(len(r) for r in s.split("1")) <= k


def test_metadata(code):
    assert code.rate == (2, 3)
    assert code.runlength == (1, 7)
    assert code.window == (1, 1)


def test_exact_rate(code):
    rng = np.random.default_rng(0)
    for n in (2, 10, 100, 1000):
        u = rng.integers(0, 2, n)
        c = code.encode(u)
        assert c.size * 2 == u.size * 3


def test_round_trip_random(code):
    rng = np.random.default_rng(1)
    for _ in range(50):
        u = rng.integers(0, 2, 2 * rng.integers(1, 200))
        assert np.array_equal(code.decode(code.encode(u)), u)


def test_round_trip_exhaustive_short(code):
    for n in (2, 4, 6, 8, 10):
        for v in range(1 << n):
            u = np.array([(v >> i) & 1 for i in range(n)])
            assert np.array_equal(code.decode(code.encode(u)), u)


def test_runlength_constraints(code):
    rng = np.random.default_rng(2)
    for _ in range(30):
        u = rng.integers(0, 2, 2000)
        assert _runs_ok(code.encode(u))
    # adversarial all-zeros / all-ones inputs
    assert _runs_ok(code.encode(np.zeros(1000, dtype=int)))
    assert _runs_ok(code.encode(np.ones(1000, dtype=int)))


def test_odd_length_rejected(code):
    with pytest.raises(ValueError):
        code.encode([1, 0, 1])
    with pytest.raises(ValueError):
        code.decode([1, 0, 1, 0])


def test_precode_postcode_inverse():
    rng = np.random.default_rng(3)
    c = rng.integers(0, 2, 500)
    a = precode(c)
    assert np.array_equal(postcode(a), c)
    # precode is running xor
    assert a[0] == c[0]
    assert np.array_equal(a[1:] ^ a[:-1], c[1:])


def test_precoded_stream_has_no_101_or_010(code):
    rng = np.random.default_rng(4)
    for _ in range(20):
        u = rng.integers(0, 2, 1000)
        a = precode(code.encode(u))
        s = "0" + "".join(str(b) for b in a)  # include zero history
        assert "101" not in s
        assert "010" not in s


def test_single_channel_bit_error_propagation(code):
    # one flipped channel bit becomes two adjacent code-bit errors after
    # the (1+D) postcoder and may corrupt at most three decoded pairs
    rng = np.random.default_rng(5)
    u = rng.integers(0, 2, 60)
    a = precode(code.encode(u))
    for j in range(a.size):
        b = a.copy()
        b[j] ^= 1
        got = code.decode(postcode(b))
        nerr = int(np.sum(got != u))
        assert nerr <= 6, f"flip at {j} caused {nerr} user-bit errors"


def test_decode_corrupt_word_keeps_alignment(code):
    u = np.array([0, 1, 1, 0, 0, 0, 1, 1])
    c = code.encode(u)
    c[0:3] = [1, 1, 1]  # not a codeword
    got = code.decode(c)
    assert got.size == u.size
    assert np.array_equal(got[4:], u[4:])
