"""Small float64 neural-network engine with hand-written gradients.

Just enough machinery for the recurrent sequence detector: dense layers,
stacked bidirectional GRU layers, a logistic-loss head, and Adam.  All
math is float64 with explicit gradient code (the GRU inner loops are
numba-compiled), so runs are exactly reproducible and the gradients can
be finite-difference checked (see tests).

GRU step, gate order (reset, update, candidate):

    r_t = sigmoid(x W_ir + b_ir + h W_hr + b_hr)
    z_t = sigmoid(x W_iz + b_iz + h W_hz + b_hz)
    n_t = tanh(x W_in + b_in + r_t * (h W_hn + b_hn))
    h_t = (1 - z_t) * n_t + z_t * h_{t-1}

i.e. the reset gate scales the recurrent contribution inside the tanh.
All weights initialize uniform(-1/sqrt(H), 1/sqrt(H)).
"""

import math

import numpy as np
from numba import njit


def _sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    e = np.exp(x[~pos])
    out[~pos] = e / (1.0 + e)
    return out


class Dense:
    """Affine map applied per time step: (B, T, n_in) -> (B, T, n_out)."""

    def __init__(self, n_in, n_out, rng):
        s = 1.0 / np.sqrt(n_in)
        self.W = rng.uniform(-s, s, (n_in, n_out))
        self.b = rng.uniform(-s, s, n_out)
        self.gW = np.zeros_like(self.W)
        self.gb = np.zeros_like(self.b)

    def forward(self, x):
        self._x = x
        return x @ self.W + self.b

    def backward(self, dy):
        self.gW += np.tensordot(self._x, dy, axes=([0, 1], [0, 1]))
        self.gb += dy.sum(axis=(0, 1))
        return dy @ self.W.T

    def params(self):
        return [(self.W, self.gW), (self.b, self.gb)]


@njit(cache=True)
def _gru_forward(x, Wx, bx, Wh, bh):
    B, T, I = x.shape
    H = Wh.shape[0]
    gx = np.ascontiguousarray(x).reshape(B * T, I) @ Wx
    gx = gx.reshape(B, T, 3 * H)
    h = np.zeros((B, H), x.dtype)
    out = np.empty((B, T, H), x.dtype)
    # caches for backprop: previous hidden state and gate activations
    hp_c = np.empty((T, B, H), x.dtype)
    r_c = np.empty((T, B, H), x.dtype)
    z_c = np.empty((T, B, H), x.dtype)
    n_c = np.empty((T, B, H), x.dtype)
    nh_c = np.empty((T, B, H), x.dtype)
    for t in range(T):
        gh = h @ Wh
        for b in range(B):
            for j in range(H):
                r = 1.0 / (1.0 + math.exp(-(gx[b, t, j] + bx[j]
                                            + gh[b, j] + bh[j])))
                z = 1.0 / (1.0 + math.exp(-(gx[b, t, H + j] + bx[H + j]
                                            + gh[b, H + j] + bh[H + j])))
                nh = gh[b, 2 * H + j] + bh[2 * H + j]
                n = math.tanh(gx[b, t, 2 * H + j] + bx[2 * H + j] + r * nh)
                hp_c[t, b, j] = h[b, j]
                r_c[t, b, j] = r
                z_c[t, b, j] = z
                n_c[t, b, j] = n
                nh_c[t, b, j] = nh
                out[b, t, j] = (1.0 - z) * n + z * h[b, j]
        for b in range(B):
            for j in range(H):
                h[b, j] = out[b, t, j]
    return out, hp_c, r_c, z_c, n_c, nh_c


@njit(cache=True)
def _gru_backward(x, Wx, Wh, dout, hp_c, r_c, z_c, n_c, nh_c):
    B, T, I = x.shape
    H = Wh.shape[0]
    dgx = np.empty((B, T, 3 * H))
    dgh = np.empty((B, 3 * H))
    dh = np.zeros((B, H))
    gWh = np.zeros_like(Wh)
    gbh = np.zeros(3 * H)
    WhT = np.ascontiguousarray(Wh.T)
    for t in range(T - 1, -1, -1):
        for b in range(B):
            for j in range(H):
                d = dh[b, j] + dout[b, t, j]
                r = r_c[t, b, j]
                z = z_c[t, b, j]
                n = n_c[t, b, j]
                dz = d * (hp_c[t, b, j] - n)
                dnr = d * (1.0 - z) * (1.0 - n * n)
                dh[b, j] = d * z
                drr = dnr * nh_c[t, b, j] * r * (1.0 - r)
                dzz = dz * z * (1.0 - z)
                dgh[b, j] = drr
                dgh[b, H + j] = dzz
                dgh[b, 2 * H + j] = dnr * r
                dgx[b, t, j] = drr
                dgx[b, t, H + j] = dzz
                dgx[b, t, 2 * H + j] = dnr
        gWh += np.ascontiguousarray(hp_c[t]).T @ dgh
        for b in range(B):
            for j in range(3 * H):
                gbh[j] += dgh[b, j]
        dh += dgh @ WhT
    xf = np.ascontiguousarray(x).reshape(B * T, I)
    dgxf = np.ascontiguousarray(dgx).reshape(B * T, 3 * H)
    gWx = xf.T @ dgxf
    gbx = np.zeros(3 * H)
    for m in range(B * T):
        for j in range(3 * H):
            gbx[j] += dgxf[m, j]
    dx = (dgxf @ np.ascontiguousarray(Wx.T)).reshape(B, T, I)
    return dx, gWx, gbx, gWh, gbh


class _GRUDirection:
    def __init__(self, n_in, n_hidden, rng):
        s = 1.0 / np.sqrt(n_hidden)
        self.H = n_hidden
        self.Wx = rng.uniform(-s, s, (n_in, 3 * n_hidden))
        self.bx = rng.uniform(-s, s, 3 * n_hidden)
        self.Wh = rng.uniform(-s, s, (n_hidden, 3 * n_hidden))
        self.bh = rng.uniform(-s, s, 3 * n_hidden)
        self.gWx = np.zeros_like(self.Wx)
        self.gbx = np.zeros_like(self.bx)
        self.gWh = np.zeros_like(self.Wh)
        self.gbh = np.zeros_like(self.bh)

    def forward(self, x):
        # x: (B, T, n_in), already in this direction's time order
        x = np.ascontiguousarray(x)
        out, *cache = _gru_forward(x, self.Wx, self.bx, self.Wh, self.bh)
        self._x = x
        self._cache = cache
        return out

    def backward(self, dout):
        dx, gWx, gbx, gWh, gbh = _gru_backward(
            self._x, self.Wx, self.Wh, np.ascontiguousarray(dout),
            *self._cache)
        self.gWx += gWx
        self.gbx += gbx
        self.gWh += gWh
        self.gbh += gbh
        return dx

    def params(self):
        return [(self.Wx, self.gWx), (self.bx, self.gbx),
                (self.Wh, self.gWh), (self.bh, self.gbh)]


class BiGRU:
    """Bidirectional GRU layer; output concatenates both directions."""

    def __init__(self, n_in, n_hidden, rng):
        self.fwd = _GRUDirection(n_in, n_hidden, rng)
        self.bwd = _GRUDirection(n_in, n_hidden, rng)

    def forward(self, x):
        yf = self.fwd.forward(x)
        yb = self.bwd.forward(x[:, ::-1])[:, ::-1]
        return np.concatenate([yf, yb], axis=2)

    def backward(self, dy):
        H = self.fwd.H
        dxf = self.fwd.backward(dy[:, :, :H])
        dxb = self.bwd.backward(dy[:, ::-1, H:])[:, ::-1]
        return dxf + dxb

    def params(self):
        return self.fwd.params() + self.bwd.params()


class SequenceClassifier:
    """Dense -> stacked BiGRU -> Dense(1); forward emits logits (B, T)."""

    def __init__(self, n_features, n_hidden, n_layers, seed=0):
        rng = np.random.default_rng(seed)
        self.layers = [Dense(n_features, n_features, rng)]
        n_in = n_features
        for _ in range(n_layers):
            self.layers.append(BiGRU(n_in, n_hidden, rng))
            n_in = 2 * n_hidden
        self.head = Dense(n_in, 1, rng)
        self.n_features = n_features
        self.n_hidden = n_hidden
        self.n_layers = n_layers

    def forward(self, x):
        x = np.asarray(x, dtype=self.head.W.dtype)
        for layer in self.layers:
            x = layer.forward(x)
        return self.head.forward(x)[:, :, 0]

    def backward(self, dlogits):
        dy = self.head.backward(dlogits[:, :, None])
        for layer in reversed(self.layers):
            dy = layer.backward(dy)
        return dy

    def params(self):
        out = []
        for layer in self.layers:
            out += layer.params()
        out += self.head.params()
        return out

    def zero_grads(self):
        for _, g in self.params():
            g[...] = 0.0

    def astype(self, dtype):
        """Cast all weights in place; returns self.

        float32 roughly doubles GEMM throughput and is plenty for
        inference (decisions threshold logits of order 1); keep float64
        for training and gradient checks.
        """
        names = {Dense: ("W", "b", "gW", "gb")}
        gru = ("Wx", "bx", "Wh", "bh", "gWx", "gbx", "gWh", "gbh")
        for layer in self.layers + [self.head]:
            dirs = ([layer] if isinstance(layer, Dense)
                    else [layer.fwd, layer.bwd])
            for d in dirs:
                for n in names.get(type(d), gru):
                    setattr(d, n, getattr(d, n).astype(dtype))
        return self

    # -- persistence ----------------------------------------------------
    def state_arrays(self):
        return [p for p, _ in self.params()]

    def save(self, path):
        arrays = {f"p{i}": p for i, (p, _) in enumerate(self.params())}
        np.savez(path, n_features=self.n_features, n_hidden=self.n_hidden,
                 n_layers=self.n_layers, **arrays)

    @classmethod
    def load(cls, path):
        d = np.load(path)
        model = cls(int(d["n_features"]), int(d["n_hidden"]),
                    int(d["n_layers"]))
        for i, (p, _) in enumerate(model.params()):
            p[...] = d[f"p{i}"]
        return model


def bce_with_logits(logits, targets, mask):
    """Mean binary cross-entropy over masked steps; returns (loss, dlogits).

    Stable formulation log(1 + exp(-|l|)) + max(l, 0) - y*l.
    """
    m = mask.astype(float)
    count = m.sum()
    l = logits
    loss = (np.log1p(np.exp(-np.abs(l))) + np.maximum(l, 0.0)
            - targets * l)
    loss = float((loss * m).sum() / count)
    dlogits = (_sigmoid(l) - targets) * m / count
    return loss, dlogits


class Adam:
    def __init__(self, params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p) for p, _ in params]
        self.v = [np.zeros_like(p) for p, _ in params]

    def step(self):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        c1 = 1.0 - b1**self.t
        c2 = 1.0 - b2**self.t
        for (p, g), m, v in zip(self.params, self.m, self.v):
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)
