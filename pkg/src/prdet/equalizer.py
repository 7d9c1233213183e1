"""MMSE equalization of the Lorentzian channel to a PR target.

The equalizer z has ``n_taps`` symmetric taps (index -half..half) chosen
to minimize E|z*y - x*a'|^2 for i.i.d. equiprobable bipolar data a' and
white read noise, which gives the Toeplitz normal equations

    sum_j z_j [rho(i-j) + sigma^2 delta_ij] = sum_m x_m q_{m-i},

with rho the dipulse autocorrelation.  Solved with
scipy.linalg.solve_toeplitz.

Trace synthesis lives here as well because the equalizer shapes both the
colored noise (z applied to white noise) and the residual
misequalization (z*q - x applied to the data).  All traces follow the
binary-domain convention of prdet.channel; by construction

    realistic trace = ideal PR output + colored noise + misequalization

holds to machine precision, which downstream tests rely on.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_toeplitz

from .channel import TRACE_SCALE, _bipolar_padded, _EDGE_PAD, ideal_pr_output


@dataclass(frozen=True)
class EqualizerDesign:
    taps: np.ndarray        # z_i, i = -half..half
    target_taps: np.ndarray
    dipulse_taps: np.ndarray
    design_sigma: float = 0.0
    method: str = "mmse"

    @property
    def half(self):
        return self.taps.size // 2

    @property
    def miseq_taps(self):
        """Residual response (z*q - x); index 0 of x sits at the center offset."""
        p_tilde = np.convolve(self.taps, self.dipulse_taps)
        half = p_tilde.size // 2  # combined half-width
        e = p_tilde.copy()
        e[half : half + self.target_taps.size] -= self.target_taps
        return e


def design_pr_equalizer(model, target, n_taps=21, sigma=0.0):
    if n_taps % 2 != 1:
        raise ValueError("equalizer length must be odd")
    half = n_taps // 2
    q = model.dipulse_taps()
    qh = model.half
    rho = np.correlate(q, q, mode="full")  # lags -(2qh)..(2qh)
    r = rho[2 * qh : 2 * qh + n_taps].copy()
    r[0] += sigma**2
    x = target.taps
    # p_i = sum_m x_m q_{m-i}
    p = np.array([
        sum(x[m] * q[qh + m - i] for m in range(x.size)
            if -qh <= m - i <= qh)
        for i in range(-half, half + 1)
    ])
    z = solve_toeplitz((r, r), p)
    return EqualizerDesign(taps=z, target_taps=np.asarray(x, dtype=float),
                           dipulse_taps=q, design_sigma=float(sigma),
                           method="mmse")


def design_pr_equalizer_analytic(model, target, n_taps=21, n_freq=1 << 15):
    """Inverse-filter taps z_i = (1/2pi) Int X(w)/Q(w) e^{jwi} dw.

    X is the target frequency response and Q the sampled-dipulse
    response; the integral is evaluated on a midpoint frequency grid
    (which sidesteps the removable 0/0 points at w = 0 and w = pi where
    both responses vanish).  This is the textbook zero-forcing design;
    it boosts the channel's weak high frequencies much harder than the
    regularized least-squares fit, so it is the appropriate shaping
    filter when studying colored-noise effects.
    """
    if n_taps % 2 != 1:
        raise ValueError("equalizer length must be odd")
    half = n_taps // 2
    q = model.dipulse_taps()
    x = np.asarray(target.taps, dtype=float)
    w = (np.arange(n_freq) + 0.5) * (2 * np.pi / n_freq) - np.pi
    mq = np.arange(-model.half, model.half + 1)
    Q = np.exp(-1j * np.outer(w, mq)) @ q
    X = np.exp(-1j * np.outer(w, np.arange(x.size))) @ x
    H = X / Q
    i = np.arange(-half, half + 1)
    z = (np.exp(1j * np.outer(i, w)) @ H).real / n_freq
    return EqualizerDesign(taps=z, target_taps=x, dipulse_taps=q,
                           design_sigma=0.0, method="analytic")


def design_equalizer(model, target, n_taps=21, method="analytic", sigma=0.0):
    if method == "analytic":
        return design_pr_equalizer_analytic(model, target, n_taps)
    if method == "mmse":
        return design_pr_equalizer(model, target, n_taps, sigma)
    raise ValueError(f"unknown equalizer design method {method!r}")


def _centered_conv(x, taps, half, start, n):
    """(taps * x)_k for k = start..start+n-1, taps spanning -half..half.

    ``x`` is indexed so x[ofs + k] is sample k; caller guarantees the
    needed range exists.
    """
    full = np.convolve(x, taps)
    return full[start + half : start + half + n]


def equalized_readback(a, model, eq, sigma, seed=None, rng=None):
    """Realistic trace: noisy Lorentzian read-back through the equalizer.

    Returns the binary-domain trace of the same length as ``a``.
    """
    return _realistic_parts(a, model, eq, sigma, seed, rng)[0]


def realistic_components(a, model, eq, sigma, seed=None, rng=None):
    """Decompose a realistic trace; returns (trace, ideal, colored, miseq).

    trace == ideal + colored + miseq up to floating-point roundoff.
    """
    trace, colored, miseq, ideal = _realistic_parts(a, model, eq, sigma,
                                                    seed, rng, parts=True)
    return trace, ideal, colored, miseq


def _realistic_parts(a, model, eq, sigma, seed=None, rng=None, parts=False):
    a = np.asarray(a, dtype=float)
    n = a.size
    pad = _EDGE_PAD
    ap = _bipolar_padded(a, pad)
    # read-back on the extended range k = -P..n-1+P, P = eq.half + 2
    P = eq.half + 2
    q = model.dipulse_taps()
    yfull = np.convolve(ap, q)
    ofs = pad + model.half  # yfull[ofs + k] == noiseless y_k
    y0 = yfull[ofs - P : ofs + n + P]
    if sigma > 0:
        if rng is None:
            rng = np.random.default_rng(seed)
        eta = sigma * rng.standard_normal(y0.size)
    else:
        eta = np.zeros(y0.size)
    z = eq.taps
    zofs = P + eq.half  # conv(y0, z)[zofs + k] == (z*y)_k
    noiseless = TRACE_SCALE * np.convolve(y0, z)[zofs : zofs + n]
    colored = TRACE_SCALE * np.convolve(eta, z)[zofs : zofs + n]
    trace = noiseless + colored
    if not parts:
        return (trace,)
    from .channel import PRTarget

    target = PRTarget(order=eq.target_taps.size - 2, taps=eq.target_taps)
    ideal = ideal_pr_output(a, target)
    return trace, colored, noiseless - ideal, ideal


def colored_noise(n, eq, sigma, seed=None, rng=None):
    """Length-n colored trace noise: white read noise through the equalizer.

    This is exactly the noise component of the realistic chain, so
    ``sigma`` should follow the read-head (Lorentzian-energy) SNR
    convention.  Color and power both depend on the equalizer, which is
    what couples recording density to detector difficulty.
    """
    if rng is None:
        rng = np.random.default_rng(seed)
    w = sigma * rng.standard_normal(n + 2 * eq.half)
    return TRACE_SCALE * np.convolve(w, eq.taps)[2 * eq.half : 2 * eq.half + n]


def acn_trace(a, target, eq, sigma, seed=None, rng=None):
    """Ideal PR output plus equalizer-colored noise (no misequalization)."""
    b = ideal_pr_output(a, target)
    return b + colored_noise(b.size, eq, sigma, seed=seed, rng=rng)


def acn_autocorr(eq, sigma, maxlag):
    """Trace-noise autocorrelation R(0..maxlag) matching colored_noise."""
    z = eq.taps
    rho = np.correlate(z, z, mode="full")
    c = z.size - 1
    out = np.zeros(maxlag + 1)
    upto = min(maxlag, z.size - 1)
    out[: upto + 1] = rho[c : c + upto + 1]
    return (TRACE_SCALE * sigma) ** 2 * out


def estimate_autocorr(x, maxlag):
    """Biased empirical autocorrelation of a zero-mean sequence."""
    x = np.asarray(x, dtype=float)
    return np.array([np.dot(x[: x.size - m], x[m:]) / x.size
                     for m in range(maxlag + 1)])


def design_noise_predictor(autocorr, n_taps):
    """Wiener one-step predictor: minimize E[(n_k - sum p_i n_{k-i})^2].

    ``autocorr`` must cover lags 0..n_taps.  Returns (taps, residual
    variance); taps index i = 1..n_taps.
    """
    r = np.asarray(autocorr, dtype=float)
    if r.size < n_taps + 1:
        raise ValueError("need autocorrelation up to lag n_taps")
    p = solve_toeplitz((r[:n_taps], r[:n_taps]), r[1 : n_taps + 1])
    var = float(r[0] - np.dot(p, r[1 : n_taps + 1]))
    return p, var
