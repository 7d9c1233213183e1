"""Trellis detectors: sliding-window Viterbi, NPML, and max-log-MAP.

All detectors share the same streaming discipline: survivor metrics are
carried across the whole trace, decisions are released in blocks of
``l_eval`` bits once ``l_eval + l_overlap`` samples beyond the block
have been absorbed, and the trace end forces a final traceback from the
best surviving state.  This matches the fixed-lag operation used for
bit-error-rate runs and makes the per-block decisions identical to what
a window detector confined to 40-sample chunks would produce.

NPML adds a noise-prediction term to the branch metric: each state
carries the residual history r_j - b_j along its survivor path, and the
metric for an edge with output b is

    (r_k - sum_i p_i (r_{k-i} - b_{k-i}) - b)^2.

With an empty predictor this reduces exactly to the Viterbi metric, so
one kernel serves both.  Residuals before the trace start are zero.

Metric ties resolve to the lowest-numbered edge, so runs are bit-for-bit
reproducible.
"""

import numpy as np
from numba import njit

from .params import ParamsMixin
from .trellis import build_trellis

_INF = 1e30


@njit(cache=True)
def _traceback(dec, edge_from, edge_bit, k_last, state, n_back, out):
    s = state
    for j in range(n_back):
        e = dec[k_last - j, s]
        out[n_back - 1 - j] = edge_bit[e]
        s = edge_from[e]
    return s


@njit(cache=True)
def _viterbi_npml_kernel(r, edge_from, edge_bit, edge_to, edge_out,
                         n_states, p_taps, l_eval, l_overlap, start_idx):
    n = r.size
    n_edges = edge_from.size
    np_len = p_taps.size
    metrics = np.full(n_states, _INF)
    metrics[start_idx] = 0.0
    new_metrics = np.empty(n_states)
    resid = np.zeros((n_states, max(np_len, 1)))
    new_resid = np.zeros((n_states, max(np_len, 1)))
    dec = np.zeros((n, n_states), dtype=np.int8)
    bits = np.empty(n, dtype=np.int8)
    win = np.empty(l_eval + l_overlap, dtype=np.int8)

    nemit = 0
    for k in range(n):
        for s in range(n_states):
            new_metrics[s] = _INF
        for e in range(n_edges):
            s = edge_from[e]
            if metrics[s] >= _INF:
                continue
            pred = 0.0
            for i in range(np_len):
                pred += p_taps[i] * resid[s, i]
            d = r[k] - pred - edge_out[e]
            m = metrics[s] + d * d
            t = edge_to[e]
            if m < new_metrics[t]:
                new_metrics[t] = m
                dec[k, t] = e
                for i in range(np_len - 1, 0, -1):
                    new_resid[t, i] = resid[s, i - 1]
                if np_len > 0:
                    new_resid[t, 0] = r[k] - edge_out[e]
        for s in range(n_states):
            metrics[s] = new_metrics[s]
            for i in range(np_len):
                resid[s, i] = new_resid[s, i]

        if k - nemit + 1 == l_eval + l_overlap:
            best = 0
            for s in range(1, n_states):
                if metrics[s] < metrics[best]:
                    best = s
            _traceback(dec, edge_from, edge_bit, k, best,
                       k - nemit + 1, win)
            for j in range(l_eval):
                bits[nemit + j] = win[j]
            nemit += l_eval

    if nemit < n:
        best = 0
        for s in range(1, n_states):
            if metrics[s] < metrics[best]:
                best = s
        _traceback(dec, edge_from, edge_bit, n - 1, best, n - nemit, win)
        for j in range(n - nemit):
            bits[nemit + j] = win[j]
    return bits


@njit(cache=True)
def _maxlog_map_kernel(r, edge_from, edge_bit, edge_to, edge_out,
                       n_states, l_eval, l_overlap, start_idx):
    n = r.size
    n_edges = edge_from.size
    span = l_eval + l_overlap
    alpha0 = np.full(n_states, _INF)
    alpha0[start_idx] = 0.0
    alpha = np.empty((span + 1, n_states))
    beta = np.empty((span + 1, n_states))
    bits = np.empty(n, dtype=np.int8)

    ws = 0
    while ws < n:
        we = min(ws + span, n)
        w = we - ws
        for s in range(n_states):
            alpha[0, s] = alpha0[s]
        for k in range(w):
            for s in range(n_states):
                alpha[k + 1, s] = _INF
            for e in range(n_edges):
                a = alpha[k, edge_from[e]]
                if a >= _INF:
                    continue
                d = r[ws + k] - edge_out[e]
                m = a + d * d
                if m < alpha[k + 1, edge_to[e]]:
                    alpha[k + 1, edge_to[e]] = m
        for s in range(n_states):
            beta[w, s] = 0.0
        for k in range(w - 1, -1, -1):
            for s in range(n_states):
                beta[k, s] = _INF
            for e in range(n_edges):
                b = beta[k + 1, edge_to[e]]
                if b >= _INF:
                    continue
                d = r[ws + k] - edge_out[e]
                m = d * d + b
                if m < beta[k, edge_from[e]]:
                    beta[k, edge_from[e]] = m
        n_out = l_eval if we < n else w
        for k in range(n_out):
            m0 = _INF
            m1 = _INF
            for e in range(n_edges):
                a = alpha[k, edge_from[e]]
                if a >= _INF:
                    continue
                d = r[ws + k] - edge_out[e]
                m = a + d * d + beta[k + 1, edge_to[e]]
                if edge_bit[e] == 0:
                    if m < m0:
                        m0 = m
                else:
                    if m < m1:
                        m1 = m
            bits[ws + k] = 1 if m1 < m0 else 0
        # carry the forward recursion, renormalized for long traces
        lo = _INF
        for s in range(n_states):
            if alpha[n_out, s] < lo:
                lo = alpha[n_out, s]
        for s in range(n_states):
            a = alpha[n_out, s]
            alpha0[s] = a - lo if a < _INF else _INF
        ws += n_out
    return bits


class _TrellisDetector(ParamsMixin):
    def __init__(self, constrained=False, l_eval=10, l_overlap=20,
                 start_state=0):
        self.constrained = constrained
        self.l_eval = l_eval
        self.l_overlap = l_overlap
        self.start_state = start_state

    def _trellis(self):
        from .channel import e2pr4

        t = build_trellis(e2pr4(), constrained=self.constrained)
        return t, int(t.state_index[self.start_state])


class ViterbiDetector(_TrellisDetector):
    """Sliding-window maximum-likelihood sequence detector (PRML)."""

    def predict(self, trace):
        t, start = self._trellis()
        return np.asarray(_viterbi_npml_kernel(
            np.ascontiguousarray(trace, dtype=np.float64),
            t.edge_from, t.edge_bit, t.edge_to, t.edge_out,
            t.n_states, np.empty(0, dtype=np.float64),
            self.l_eval, self.l_overlap, start))


class NPMLDetector(_TrellisDetector):
    """Viterbi with per-survivor noise prediction in the branch metric."""

    def __init__(self, predictor_taps, constrained=False, l_eval=10,
                 l_overlap=20, start_state=0):
        super().__init__(constrained=constrained, l_eval=l_eval,
                         l_overlap=l_overlap, start_state=start_state)
        self.predictor_taps = np.asarray(predictor_taps, dtype=np.float64)

    def predict(self, trace):
        t, start = self._trellis()
        return np.asarray(_viterbi_npml_kernel(
            np.ascontiguousarray(trace, dtype=np.float64),
            t.edge_from, t.edge_bit, t.edge_to, t.edge_out,
            t.n_states, np.ascontiguousarray(self.predictor_taps),
            self.l_eval, self.l_overlap, start))


class MaxLogMapDetector(_TrellisDetector):
    """Fixed-lag max-log-MAP symbol detector (PRMAP)."""

    def predict(self, trace):
        t, start = self._trellis()
        return np.asarray(_maxlog_map_kernel(
            np.ascontiguousarray(trace, dtype=np.float64),
            t.edge_from, t.edge_bit, t.edge_to, t.edge_out,
            t.n_states, self.l_eval, self.l_overlap, start))
