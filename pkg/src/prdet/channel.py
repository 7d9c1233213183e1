"""Channel models for longitudinal magnetic recording simulation.

Two signal domains are used throughout the package:

* the *bipolar* domain, where the written magnetization pattern takes
  values -1/+1 and the Lorentzian read-back physics live;
* the *trace* domain, where channel inputs are the binary symbols
  a_k in {0, 1} and the noiseless E2PR4 output levels are the small
  integers that label the detector trellis (-3..3 on constrained paths).

The two are related by the affine map a' = 2a - 1.  Because every PR
target here contains a (1 - D) factor, the target response to the
all-ones sequence is zero, so a bipolar signal divided by two equals the
binary-domain signal exactly (given the all-zero binary history
convention, i.e. an all-(-1) bipolar background).  Trace builders
therefore scale bipolar signals and noise by 1/2; ``TRACE_SCALE`` below
is that constant.

SNR convention (the paper leaves its own undefined): sigma is the
standard deviation of the white Gaussian source in the bipolar domain,
    sigma^2 = E * 10^(-snr_db / 10),
with E = sum(x_i^2) for ideal-PR experiments and E = sum(q_i^2) for
Lorentzian experiments.  All quantitative comparisons downstream are dB
differences, which do not depend on this choice.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

# Bipolar -> trace domain scale; see module docstring.
TRACE_SCALE = 0.5

# Padding applied left/right of the channel input when evaluating
# acausal convolutions (dipulse and equalizer taps).  Must cover the
# widest half-support used anywhere: 20 (dipulse) + 10 (equalizer).
_EDGE_PAD = 32


class NoiseKind(enum.Enum):
    AWGN = "awgn"
    ACN = "acn"
    REALISTIC = "realistic"


class SnrConvention(enum.Enum):
    """Which tap energy normalizes the white-noise power."""

    IDEAL_PR = "ideal_pr"      # E = sum(x_i^2), 10 for E2PR4
    LORENTZIAN = "lorentzian"  # E = sum(q_i^2) at the model's density


@dataclass(frozen=True)
class PRTarget:
    """Partial-response target x(D) = (1 - D)(1 + D)^N."""

    order: int
    taps: np.ndarray

    @classmethod
    def from_order(cls, order):
        if order < 1:
            raise ValueError("PR target order must be >= 1")
        alpha = np.ones(1)
        for _ in range(order):
            alpha = np.convolve(alpha, [1.0, 1.0])
        taps = np.convolve([1.0, -1.0], alpha)
        return cls(order=order, taps=taps)

    @property
    def memory(self):
        return self.order + 1

    @property
    def energy(self):
        return float(np.sum(self.taps**2))


def e2pr4():
    """The E2PR4 target (1 - D)(1 + D)^3 with taps [1, 2, 0, -2, -1]."""
    return PRTarget.from_order(3)


@dataclass(frozen=True)
class LorentzianModel:
    """Sampled Lorentzian read channel at density pw50 = PW50/Tc.

    The transition response is g(t) = 1 / (1 + (2t/pw50)^2) and the
    dipulse is q(t) = g(t) - g(t - 1), both sampled at integer t.  The
    tap window holds ``n_taps`` samples centered on t = 0.
    """

    pw50: float
    n_taps: int = 41

    def __post_init__(self):
        if self.pw50 <= 0:
            raise ValueError("density must be positive")
        if self.n_taps % 2 != 1:
            raise ValueError("tap count must be odd (centered window)")

    @property
    def half(self):
        return self.n_taps // 2

    def transition(self, t):
        t = np.asarray(t, dtype=float)
        return 1.0 / (1.0 + (2.0 * t / self.pw50) ** 2)

    def dipulse_taps(self):
        """q_i for i = -half .. half; index ``half`` is the t=0 tap."""
        i = np.arange(-self.half, self.half + 1)
        return self.transition(i) - self.transition(i - 1)

    @property
    def energy(self):
        return float(np.sum(self.dipulse_taps() ** 2))


@dataclass(frozen=True)
class NoiseSpec:
    kind: NoiseKind
    snr_db: float
    sigma: float
    convention: SnrConvention


def snr_to_sigma(snr_db, energy):
    """White-source sigma (bipolar domain) for the given SNR and tap energy."""
    return float(np.sqrt(energy * 10.0 ** (-snr_db / 10.0)))


def make_noise_spec(kind, snr_db, target=None, model=None):
    """Resolve a NoiseSpec using the documented convention for ``kind``."""
    if kind in (NoiseKind.REALISTIC, NoiseKind.ACN):
        # both are read-head noise shaped by the equalizer, so the SNR
        # references the dipulse energy
        if model is None:
            raise ValueError(f"{kind.value} noise needs a LorentzianModel")
        return NoiseSpec(kind, snr_db, snr_to_sigma(snr_db, model.energy),
                         SnrConvention.LORENTZIAN)
    if target is None:
        raise ValueError("ideal-PR noise needs a PRTarget")
    return NoiseSpec(kind, snr_db, snr_to_sigma(snr_db, target.energy),
                     SnrConvention.IDEAL_PR)


def ideal_pr_output(a, target):
    """Noiseless PR output b_k = sum_i x_i a_{k-i} over the {0,1} alphabet.

    History before t=0 is all-zero; output has the same length as ``a``.
    """
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        return a.copy()
    return np.convolve(a, target.taps)[: a.size]


def _bipolar_padded(a, pad=_EDGE_PAD):
    """Map {0,1} bits to -1/+1 with an all-(-1) quiescent border."""
    a = np.asarray(a, dtype=float)
    out = np.full(a.size + 2 * pad, -1.0)
    out[pad : pad + a.size] = 2.0 * a - 1.0
    return out


def _acausal_filter(x_padded, taps, half, n, pad=_EDGE_PAD):
    """(taps * x)_k for k = 0..n-1 where taps span indices -half..half."""
    full = np.convolve(x_padded, taps)
    # full index m corresponds to output k = m - pad - half
    start = pad + half
    return full[start : start + n]


def lorentzian_readback(a, model, sigma, seed=None, rng=None):
    """Noisy sampled read-back y_k = sum_i a'_i q_{k-i} + eta_k (bipolar).

    ``a`` is binary; the bipolar relabel and the quiescent all-(-1)
    background outside the stream are applied internally.  ``sigma`` is
    the white-noise standard deviation; pass 0 for a noiseless probe.
    """
    a = np.asarray(a, dtype=float)
    q = model.dipulse_taps()
    y = _acausal_filter(_bipolar_padded(a), q, model.half, a.size)
    if sigma > 0:
        if rng is None:
            rng = np.random.default_rng(seed)
        y = y + sigma * rng.standard_normal(a.size)
    return y


def awgn_trace(a, target, sigma, seed=None, rng=None):
    """Ideal PR channel output plus white noise, trace domain."""
    b = ideal_pr_output(a, target)
    if sigma > 0:
        if rng is None:
            rng = np.random.default_rng(seed)
        b = b + (TRACE_SCALE * sigma) * rng.standard_normal(b.size)
    return b
