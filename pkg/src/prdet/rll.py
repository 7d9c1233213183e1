"""Rate-2/3 run-length-limited (d=1, k=7) modulation code.

The encoder/decoder are table driven; the bundled table (derived and
exhaustively verified by tools/derive_rll_table.py) describes a 3-state
delayed Mealy encoder over input bit pairs and a sliding-block decoder
whose window is one codeword back and one codeword ahead.  The bounded
window caps error propagation: one corrupted codeword disturbs at most
three decoded pairs.

Also provided: the 1/(1+D) precoder and (1+D) postcoder that bracket the
recording channel, so the run-length constraint d=1 on code bits becomes
the no-101/no-010 constraint on channel input windows.
"""

from importlib import resources

import numpy as np


def precode(c):
    """NRZI precoding a_k = c_k xor a_{k-1}, a_{-1} = 0 (1/(1+D))."""
    c = np.asarray(c, dtype=np.int64)
    return np.bitwise_xor.accumulate(c) & 1


def postcode(a, prev=0):
    """Inverse of precode: c_k = a_k xor a_{k-1} (1+D)."""
    a = np.asarray(a, dtype=np.int64)
    shifted = np.concatenate([[prev], a[:-1]])
    return a ^ shifted


def _parse_table(text):
    section = None
    meta = {}
    enc = {}
    flush = {}
    dec = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            section = line.strip("[]")
            continue
        parts = line.split()
        if section is None:
            meta[parts[0]] = tuple(int(x) for x in parts[1:])
        elif section == "encode":
            state, pair, bits, nxt = parts
            enc.setdefault(state, {})[pair] = ("" if bits == "-" else bits, nxt)
        elif section == "flush":
            state, bits = parts
            flush[state] = "" if bits == "-" else bits
        elif section == "decode":
            dec.append(tuple(parts))
    return meta, enc, flush, dec


class RLLCode:
    """Encoder/decoder pair loaded from a code table file."""

    def __init__(self, table_text=None):
        if table_text is None:
            table_text = (resources.files("prdet.data")
                          .joinpath("rll_r23_17.tbl").read_text())
        self.meta, self._enc, self._flush, self._dec = _parse_table(table_text)
        self.rate = self.meta["rate"]          # (user bits, code bits)
        self.runlength = self.meta["runlength"]
        self.window = self.meta["window"]
        self._start = next(iter(self._enc))

    def encode(self, bits):
        """User bits -> code bits; input length must be even."""
        bits = np.asarray(bits, dtype=np.int64)
        if bits.size % 2:
            raise ValueError("user bit count must be even")
        out = []
        state = self._start
        for i in range(0, bits.size, 2):
            pair = f"{bits[i]}{bits[i + 1]}"
            emitted, state = self._enc[state][pair]
            out.append(emitted)
        out.append(self._flush[state])
        code = "".join(out)
        return np.fromiter(code, dtype=np.int64, count=len(code))

    def decode(self, code):
        """Code bits -> user bits; input length must be a multiple of 3."""
        code = np.asarray(code, dtype=np.int64)
        if code.size % 3:
            raise ValueError("code bit count must be a multiple of 3")
        n = code.size // 3
        words = ["".join(str(b) for b in code[3 * i : 3 * i + 3])
                 for i in range(n)]
        out = []
        for i, w in enumerate(words):
            prev_bit = words[i - 1][-1] if i > 0 else "0"
            nxt = "1" if i + 1 < n and words[i + 1] == "000" else "0"
            for p, ww, nn, pair in self._dec:
                if ww == w and p in ("x", prev_bit) and nn in ("x", nxt):
                    out.append(pair)
                    break
            else:
                # corrupted word outside the codebook; emit a fixed guess
                # so decoding stays aligned
                out.append("00")
        s = "".join(out)
        return np.fromiter(s, dtype=np.int64, count=len(s))
