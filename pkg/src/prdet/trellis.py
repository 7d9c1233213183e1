"""Trellis construction for PR targets and minimum-distance search.

State encoding: a state is the integer whose bit i (from the LSB) is the
channel input a_{k-1-i}; i.e. the LSB is the most recent past input and
the MSB of the nu-bit word is the oldest one still inside the target
memory.  Advancing on input u maps state s to ((s << 1) | u) & mask.

The constrained trellis keeps only states/edges whose channel-input
window avoids the substrings 101 and 010, which is the set of sequences
produced by precoding a run-length-limited d=1 stream through 1/(1+D).
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

_FORBIDDEN = ("101", "010")


def _window_ok(bits):
    s = "".join(str(b) for b in bits)
    return not any(f in s for f in _FORBIDDEN)


def _state_bits(s, nu):
    # oldest first: a_{k-nu} .. a_{k-1}
    return [(s >> (nu - 1 - i)) & 1 for i in range(nu)]


@dataclass(frozen=True)
class Trellis:
    nu: int
    taps: np.ndarray            # PR target taps, length nu + 1
    states: np.ndarray          # kept state labels, sorted
    state_index: np.ndarray     # label -> dense index, -1 if removed
    edge_from: np.ndarray       # dense index of source state
    edge_bit: np.ndarray        # channel input on the edge
    edge_to: np.ndarray         # dense index of destination state
    edge_out: np.ndarray        # noiseless output level
    out_edges: np.ndarray       # (n_states, 2) edge ids by input bit, -1 pad
    constrained: bool

    @property
    def n_states(self):
        return self.states.size

    @property
    def n_edges(self):
        return self.edge_from.size

    def state_label(self, idx):
        return format(self.states[idx], f"0{self.nu}b")


def build_trellis(target, constrained=False):
    nu = target.memory
    taps = np.asarray(target.taps, dtype=float)
    mask = (1 << nu) - 1

    labels = [s for s in range(1 << nu)
              if not constrained or _window_ok(_state_bits(s, nu))]
    state_index = np.full(1 << nu, -1, dtype=np.int64)
    for i, s in enumerate(labels):
        state_index[s] = i

    e_from, e_bit, e_to, e_out = [], [], [], []
    for i, s in enumerate(labels):
        for u in (0, 1):
            if constrained and not _window_ok(_state_bits(s, nu) + [u]):
                continue
            t = ((s << 1) | u) & mask
            if state_index[t] < 0:
                continue
            # b_k = x_0 u + sum_{j>=1} x_j a_{k-j}
            out = taps[0] * u
            for j in range(1, nu + 1):
                out += taps[j] * ((s >> (j - 1)) & 1)
            e_from.append(i)
            e_bit.append(u)
            e_to.append(int(state_index[t]))
            e_out.append(out)

    n = len(labels)
    out_edges = np.full((n, 2), -1, dtype=np.int64)
    for eid in range(len(e_from)):
        out_edges[e_from[eid], e_bit[eid]] = eid

    return Trellis(
        nu=nu,
        taps=taps,
        states=np.asarray(labels, dtype=np.int64),
        state_index=state_index,
        edge_from=np.asarray(e_from, dtype=np.int64),
        edge_bit=np.asarray(e_bit, dtype=np.int64),
        edge_to=np.asarray(e_to, dtype=np.int64),
        edge_out=np.asarray(e_out, dtype=float),
        out_edges=out_edges,
        constrained=constrained,
    )


def path_output(trellis, start_state, bits):
    """Outputs along the path driven by ``bits`` from state label ``start_state``.

    Raises if the path leaves the trellis (constrained case).
    """
    idx = int(trellis.state_index[start_state])
    if idx < 0:
        raise ValueError(f"state {start_state:0{trellis.nu}b} not in trellis")
    out = np.empty(len(bits))
    for k, u in enumerate(bits):
        eid = trellis.out_edges[idx, int(u)]
        if eid < 0:
            raise ValueError(f"no edge for input {u} from state "
                             f"{trellis.state_label(idx)} at step {k}")
        out[k] = trellis.edge_out[eid]
        idx = trellis.edge_to[eid]
    return out


@dataclass(frozen=True)
class ErrorEvent:
    d2: float
    start_state: int      # state label where the paths diverge
    inputs_a: tuple
    inputs_b: tuple

    @property
    def span(self):
        return len(self.inputs_a)

    @property
    def input_error(self):
        return tuple(a - b for a, b in zip(self.inputs_a, self.inputs_b))


def min_distance_search(trellis, max_span=24):
    """Minimum squared Euclidean distance between distinct remerging paths.

    Dijkstra over ordered state pairs; the first pair of paths that
    remerges is a witness error event.  ``max_span`` bounds the event
    length explored (zero-distance parallel transitions between distinct
    states would otherwise cycle forever).
    """
    heap = []
    best = {}
    counter = 0
    # divergence: two edges from the same state with different inputs
    for s in range(trellis.n_states):
        e0, e1 = trellis.out_edges[s]
        if e0 < 0 or e1 < 0:
            continue
        d = float((trellis.edge_out[e0] - trellis.edge_out[e1]) ** 2)
        item = (d, counter, trellis.edge_to[e0], trellis.edge_to[e1],
                s, (0,), (1,))
        counter += 1
        heapq.heappush(heap, item)

    while heap:
        d, _, sa, sb, s0, ia, ib = heapq.heappop(heap)
        if sa == sb:
            return ErrorEvent(d2=d, start_state=int(trellis.states[s0]),
                              inputs_a=ia, inputs_b=ib)
        key = (sa, sb)
        if key in best and best[key] <= d:
            continue
        best[key] = d
        if len(ia) >= max_span:
            continue
        for ua in (0, 1):
            ea = trellis.out_edges[sa, ua]
            if ea < 0:
                continue
            for ub in (0, 1):
                eb = trellis.out_edges[sb, ub]
                if eb < 0:
                    continue
                nd = d + float((trellis.edge_out[ea]
                                - trellis.edge_out[eb]) ** 2)
                counter += 1
                heapq.heappush(heap, (nd, counter,
                                      trellis.edge_to[ea],
                                      trellis.edge_to[eb],
                                      s0, ia + (ua,), ib + (ub,)))
    raise RuntimeError("no remerging event found within max_span")


def to_dot(trellis):
    """Graphviz source for the trellis state diagram."""
    lines = ["digraph trellis {", "  rankdir=LR;"]
    for e in range(trellis.n_edges):
        src = trellis.state_label(trellis.edge_from[e])
        dst = trellis.state_label(trellis.edge_to[e])
        lines.append(f'  "{src}" -> "{dst}" '
                     f'[label="{trellis.edge_bit[e]}/{trellis.edge_out[e]:g}"];')
    lines.append("}")
    return "\n".join(lines)
