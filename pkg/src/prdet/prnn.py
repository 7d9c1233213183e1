"""Recurrent sequence detector for the input-constrained E2PR4 channel.

The network (Dense -> 4x bi-GRU -> Dense -> sigmoid, hidden width 50)
detects blocks of 10 channel bits from 30 trace samples at a time,
sliding by 10.  Because the bi-GRU hidden state initializes to zero,
every 40-step network input is framed so the underlying trellis path
starts and ends at state 0000: five head samples chosen per the current
trellis state are prepended and five tail samples drive the path back to
the zero state.  Head samples are clean (the starting state is taken as
known); tail samples are noisy in training and all-zero in evaluation,
where the ending state is unknown.

Head/tail sample vectors per state are derived from the constrained
trellis: the head is the output of the shortest constrained path from
the zero state that lands in the state, the tail is the output of the
path that greedily feeds 0s (1 when the constraint forbids a 0) until
the zero state is reached.

Each time step sees the five most recent composite samples as features,
zero padded at the frame start.

Training regenerates its dataset every epoch from user bits drawn
Bern(p), with p ramping from 0.1 towards 0.5 by 0.01 every ``step_epochs``
epochs; the full dataset (30 sequences per SNR per noise cell) forms one
optimizer step.
"""

from dataclasses import dataclass, field

import numpy as np

from .channel import (
    LorentzianModel,
    NoiseKind,
    TRACE_SCALE,
    e2pr4,
    make_noise_spec,
)
from .equalizer import colored_noise, design_pr_equalizer, equalized_readback
from .nn import Adam, SequenceClassifier, bce_with_logits
from .params import ParamsMixin
from .rll import RLLCode, precode
from .trellis import build_trellis, path_output

L_START = 5
L_EVAL = 10
L_OVERLAP = 20
L_END = 5
T_FRAME = L_START + L_EVAL + L_OVERLAP + L_END  # 40
N_FEATURES = 5


def ramp_probability(epoch, step_epochs=50, p0=0.1, p_max=0.5):
    """Bernoulli bias of the training user bits at a given epoch."""
    return min(p0 + 0.01 * (epoch // step_epochs), p_max)


def _greedy_zero_path(trellis, state_label):
    """Bits/outputs of the drive-to-zero path (prefer 0, use 1 if forced)."""
    idx = int(trellis.state_index[state_label])
    bits, outs = [], []
    for _ in range(L_END):
        eid = trellis.out_edges[idx, 0]
        if eid < 0:
            eid = trellis.out_edges[idx, 1]
        bits.append(int(trellis.edge_bit[eid]))
        outs.append(float(trellis.edge_out[eid]))
        idx = trellis.edge_to[eid]
    assert trellis.states[idx] == 0
    return bits, outs


def _entry_path(trellis, state_label):
    """Shortest constrained path from state 0000 landing in the state."""
    nu = trellis.nu
    state_bits = [(state_label >> (nu - 1 - i)) & 1 for i in range(nu)]
    for prefix in ([0], [1]):
        bits = prefix + state_bits
        try:
            outs = path_output(trellis, 0, bits)
        except ValueError:
            continue
        return bits, outs.tolist()
    raise RuntimeError(f"state {state_label:04b} unreachable from zero")


def zero_compensation_tables(trellis=None):
    """Per-state head/tail sample vectors; index by 4-bit state label.

    Returns (head_vals, tail_vals, tail_bits): dicts keyed by state
    label; unknown/invalid states map to all-zero vectors at the caller.
    """
    if trellis is None:
        trellis = build_trellis(e2pr4(), constrained=True)
    head, tail, tail_bits = {}, {}, {}
    for s in trellis.states:
        s = int(s)
        _, h = _entry_path(trellis, s)
        b, t = _greedy_zero_path(trellis, s)
        head[s] = np.array(h)
        tail[s] = np.array(t)
        tail_bits[s] = b
    return head, tail, tail_bits


def frame_features(composite):
    """(B, 40) composite samples -> (B, 40, 5) recent-sample features."""
    comp = np.asarray(composite, dtype=float)
    if comp.ndim == 1:
        comp = comp[None]
    B, T = comp.shape
    padded = np.concatenate([np.zeros((B, N_FEATURES - 1)), comp], axis=1)
    out = np.empty((B, T, N_FEATURES))
    for j in range(N_FEATURES):
        out[:, :, j] = padded[:, j : j + T]
    return out


@dataclass(frozen=True)
class NoiseCell:
    """One training/evaluation channel condition."""

    kind: NoiseKind
    pw50: float = None  # required unless kind is AWGN

    def __post_init__(self):
        if self.kind is not NoiseKind.AWGN and self.pw50 is None:
            raise ValueError(f"{self.kind.value} cell needs a density")

    @property
    def label(self):
        if self.kind is NoiseKind.AWGN:
            return "awgn"
        return f"{self.kind.value}{self.pw50:g}"


class _CellSampler:
    """Generates labeled training frames for one noise cell."""

    def __init__(self, cell, trellis, code):
        self.cell = cell
        self.trellis = trellis
        self.code = code
        self.head, self.tail, self.tail_bits = zero_compensation_tables(
            trellis)
        self.model = (LorentzianModel(pw50=cell.pw50)
                      if cell.pw50 is not None else None)
        self.eq = (design_pr_equalizer(self.model, e2pr4())
                   if self.model is not None else None)

    def sigma(self, snr_db):
        return make_noise_spec(self.cell.kind, snr_db, target=e2pr4(),
                               model=self.model).sigma

    def sample(self, rng, p, snr_db):
        """One (features, labels) frame cut from a running coded stream."""
        n_data = L_EVAL + L_OVERLAP
        # 60 user bits -> 90 channel bits; the frame uses bits 40..69 so
        # the initial state and any equalizer memory come from a real
        # constrained stream, not an artificial reset
        u = (rng.random(60) < p).astype(np.int64)
        a = precode(self.code.encode(u))
        off = 40
        data_bits = a[off : off + n_data]
        init_state = int("".join(map(str, a[off - 4 : off])), 2)
        final_state = int("".join(map(str, a[off + n_data - 4 :
                                             off + n_data])), 2)
        end_bits = self.tail_bits[final_state]
        sigma = self.sigma(snr_db)

        if self.cell.kind is NoiseKind.REALISTIC:
            a_ext = np.concatenate([a[: off + n_data], end_bits])
            trace = equalized_readback(a_ext, self.model, self.eq, sigma,
                                       rng=rng)
            noisy = trace[off : off + n_data + L_END]
        else:
            clean = np.concatenate([
                path_output(self.trellis, init_state, data_bits),
                self.tail[final_state],
            ])
            if self.cell.kind is NoiseKind.AWGN:
                noise = TRACE_SCALE * sigma * rng.standard_normal(clean.size)
            else:
                noise = colored_noise(clean.size, self.eq, sigma, rng=rng)
            noisy = clean + noise

        composite = np.concatenate([self.head[init_state], noisy])
        return composite, data_bits


class PRNNTrainer(ParamsMixin):
    """Trains the sequence detector on regenerated-per-epoch frames."""

    def __init__(self, cells, snrs=(8.5, 9.0, 9.5, 10.0, 10.5),
                 batch_per_cell=30, epochs=2000, step_epochs=50, lr=1e-3,
                 n_hidden=50, n_layers=4, seed=0, init_model=None,
                 start_epoch=0):
        self.cells = tuple(cells)
        self.snrs = tuple(snrs)
        # int, or one batch size per cell for unbalanced mixtures
        self.batch_per_cell = batch_per_cell
        self.epochs = epochs
        self.step_epochs = step_epochs
        self.lr = lr
        self.n_hidden = n_hidden
        self.n_layers = n_layers
        self.seed = seed
        # warm start: continue from a trained net, with the bias ramp
        # picked up at start_epoch instead of restarting from p=0.1
        self.init_model = init_model
        self.start_epoch = start_epoch
        self.model_ = None
        self.loss_history_ = []

    def _cell_batches(self):
        if np.isscalar(self.batch_per_cell):
            return [self.batch_per_cell] * len(self.cells)
        if len(self.batch_per_cell) != len(self.cells):
            raise ValueError("need one batch size per cell")
        return list(self.batch_per_cell)

    def _build_batch(self, samplers, rng, p):
        comps, labels = [], []
        for sampler, size in zip(samplers, self._cell_batches()):
            for snr in self.snrs:
                for _ in range(size):
                    c, b = sampler.sample(rng, p, snr)
                    comps.append(c)
                    labels.append(b)
        x = frame_features(np.stack(comps))
        y = np.zeros((len(labels), T_FRAME))
        y[:, L_START : L_START + L_EVAL + L_OVERLAP] = np.stack(labels)
        mask = np.zeros((len(labels), T_FRAME), dtype=bool)
        mask[:, L_START : L_START + L_EVAL + L_OVERLAP] = True
        return x, y, mask

    def fit(self, callback=None):
        rng = np.random.default_rng(self.seed)
        trellis = build_trellis(e2pr4(), constrained=True)
        code = RLLCode()
        samplers = [_CellSampler(c, trellis, code) for c in self.cells]
        if self.init_model is not None:
            net = self.init_model
        else:
            net = SequenceClassifier(N_FEATURES, self.n_hidden,
                                     self.n_layers, seed=self.seed)
        opt = Adam(net.params(), lr=self.lr)
        self.loss_history_ = []
        for ep in range(self.start_epoch, self.start_epoch + self.epochs):
            p = ramp_probability(ep, self.step_epochs)
            x, y, mask = self._build_batch(samplers, rng, p)
            loss, dlogits = bce_with_logits(net.forward(x), y, mask)
            net.zero_grads()
            net.backward(dlogits)
            opt.step()
            self.loss_history_.append(loss)
            if callback is not None:
                callback(ep, loss, p)
        self.model_ = net
        return self


class PRNNDetector(ParamsMixin):
    """Sliding-window streaming detector around a trained network.

    Emits 10 bits per 30-sample window; the head samples for each window
    come from the state implied by the previously emitted bits.  A state
    outside the constrained set falls back to the all-zero (unknown)
    head and is counted in ``invalid_states_``.
    """

    def __init__(self, model, l_eval=L_EVAL, l_overlap=L_OVERLAP):
        self.model = model
        self.l_eval = l_eval
        self.l_overlap = l_overlap
        self.invalid_states_ = 0
        self._head, _, _ = zero_compensation_tables()

    def predict(self, trace):
        return self.predict_many(np.asarray(trace, dtype=float)[None])[0]

    def predict_many(self, traces):
        """Detect B equal-length independent streams in parallel: (B, n)."""
        traces = np.asarray(traces, dtype=float)
        B, n = traces.shape
        block = self.l_eval + self.l_overlap
        bits = np.zeros((B, n), dtype=np.int8)
        states = np.zeros(B, dtype=np.int64)  # start at state 0000
        comp = np.zeros((B, T_FRAME))
        pos = 0
        while pos < n:
            chunk = traces[:, pos : pos + block]
            comp[:] = 0.0
            for i in range(B):
                comp[i, :L_START] = self._head.get(int(states[i]), 0.0)
            comp[:, L_START : L_START + chunk.shape[1]] = chunk
            logits = self.model.forward(frame_features(comp))
            n_emit = min(self.l_eval, n - pos)
            out = (logits[:, L_START : L_START + n_emit] > 0.0)
            bits[:, pos : pos + n_emit] = out
            # starting state of the next window from the trailing bits
            tail = bits[:, max(pos + n_emit - 4, 0) : pos + n_emit]
            for i in range(B):
                s = 0
                for b in tail[i]:
                    s = ((s << 1) | int(b)) & 0xF
                if s not in self._head:
                    self.invalid_states_ += 1
                    s = -1  # unknown: all-zero head
                states[i] = s
            pos += n_emit
        return bits
