"""Monte-Carlo bit-error-rate harness.

Runs detectors over batches of independent coded (or uncoded) streams,
counts channel-bit errors, and post-processes curves: Wilson confidence
intervals on each point and log-linear interpolation of the SNR at a
target error rate, from which dB gains between detectors are measured.

The last few bits of every stream are excluded from the error count:
under free termination the final target-memory bits have reduced
distance, and their error rate would otherwise bias low-BER points.
"""

import csv
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .channel import (
    LorentzianModel,
    NoiseKind,
    awgn_trace,
    e2pr4,
    ideal_pr_output,
    make_noise_spec,
)
from .equalizer import (
    acn_autocorr,
    acn_trace,
    colored_noise,
    design_noise_predictor,
    design_pr_equalizer,
    equalized_readback,
    estimate_autocorr,
)
from .rll import RLLCode, postcode, precode

CSV_FIELDS = ["detector", "scenario", "density", "noise_kind", "snr_db",
              "bits", "errors", "ber", "seed"]


@dataclass
class BERPoint:
    detector: str
    scenario: str
    density: float
    noise_kind: str
    snr_db: float
    bits: int
    errors: int
    ber: float
    seed: int

    @property
    def ci_halfwidth(self):
        """Half-width of the 95% Wilson interval around the BER."""
        lo, hi = wilson_interval(self.errors, self.bits)
        return (hi - lo) / 2

    @property
    def low_confidence(self):
        """True when too few errors were counted to trust the point."""
        return self.errors < 100


def wilson_interval(errors, n, z=1.96):
    """Wilson score interval for a binomial proportion."""
    if n == 0:
        return (0.0, 1.0)
    p = errors / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = (z / denom) * np.sqrt(p * (1 - p) / n + z * z / (4 * n * n))
    return (max(center - half, 0.0), min(center + half, 1.0))


class ChannelSetup:
    """Resolved simulation context for one (noise kind, density) cell."""

    def __init__(self, kind, pw50=None, target=None):
        self.kind = kind
        self.pw50 = pw50
        self.target = target if target is not None else e2pr4()
        self.model = LorentzianModel(pw50=pw50) if pw50 is not None else None
        self.eq = (design_pr_equalizer(self.model, self.target)
                   if self.model is not None else None)

    def sigma(self, snr_db):
        return make_noise_spec(self.kind, snr_db, target=self.target,
                               model=self.model).sigma

    def trace(self, a, snr_db, rng):
        s = self.sigma(snr_db)
        if self.kind is NoiseKind.AWGN:
            return awgn_trace(a, self.target, s, rng=rng)
        if self.kind is NoiseKind.ACN:
            return acn_trace(a, self.target, self.eq, s, rng=rng)
        return equalized_readback(a, self.model, self.eq, s, rng=rng)

    def npml_taps(self, n_taps, snr_db, probe_bits=300000, seed=1234):
        """Noise-predictor taps for this cell at the given SNR."""
        s = self.sigma(snr_db)
        if self.kind is NoiseKind.ACN:
            return design_noise_predictor(
                acn_autocorr(self.eq, s, n_taps), n_taps)[0]
        if self.kind is NoiseKind.REALISTIC:
            rng = np.random.default_rng(seed)
            a = _coded_stream(rng, probe_bits)
            noise = (self.trace(a, snr_db, rng)
                     - ideal_pr_output(a, self.target))
            return design_noise_predictor(
                estimate_autocorr(noise, n_taps), n_taps)[0]
        raise ValueError("noise prediction is pointless in white noise")


def _coded_stream(rng, n_bits):
    code = RLLCode()
    n_user = 2 * ((n_bits + 2) // 3 + 2)
    a = precode(code.encode(rng.integers(0, 2, n_user)))
    return a[:n_bits]


def make_streams(rng, n_streams, stream_len, coded=True):
    """(B, n) matrix of independent channel-input streams."""
    out = np.empty((n_streams, stream_len), dtype=np.int64)
    for i in range(n_streams):
        out[i] = (_coded_stream(rng, stream_len) if coded
                  else rng.integers(0, 2, stream_len))
    return out


def run_ber(predict, setup, snr_db, n_bits, seed, coded=True,
            n_streams=50, detector="", scenario="", tail_skip=4):
    """Monte-Carlo BER of ``predict`` (bits matrix -> bits matrix).

    ``predict`` receives a (B, n) trace matrix and must return detected
    bits of the same shape; helpers below adapt single-stream detectors.
    """
    stream_len = int(np.ceil(n_bits / n_streams))
    rng = np.random.default_rng(seed)
    streams = make_streams(rng, n_streams, stream_len, coded=coded)
    traces = np.stack([setup.trace(a, snr_db, rng) for a in streams])
    got = predict(traces)
    ok = slice(None, stream_len - tail_skip if tail_skip else None)
    errors = int(np.sum(got[:, ok] != streams[:, ok]))
    bits = streams[:, ok].size
    return BERPoint(detector=detector, scenario=scenario,
                    density=setup.pw50 if setup.pw50 is not None else 0.0,
                    noise_kind=setup.kind.value, snr_db=float(snr_db),
                    bits=bits, errors=errors,
                    ber=errors / bits if bits else 0.0, seed=seed)


def run_ber_user(predict, setup, snr_db, n_bits, seed,
                 n_streams=50, detector="", scenario="", tail_skip=8):
    """User-data BER: encode, detect channel bits, decode, compare.

    Unlike :func:`run_ber` this charges the detector for RLL decoder
    error propagation, which is how coded and uncoded systems are put
    on a common footing.  ``tail_skip`` is in user bits and covers both
    the low-distance final channel bits and the decoder's lookahead
    word.
    """
    code = RLLCode()
    user_len = 2 * int(np.ceil(n_bits / n_streams / 2))
    rng = np.random.default_rng(seed)
    users = rng.integers(0, 2, (n_streams, user_len))
    streams = np.stack([precode(code.encode(u)) for u in users])
    traces = np.stack([setup.trace(a, snr_db, rng) for a in streams])
    got = predict(traces)
    ok = slice(None, user_len - tail_skip if tail_skip else None)
    errors = 0
    for u, a_hat in zip(users, got):
        u_hat = code.decode(postcode(a_hat))
        errors += int(np.sum(u_hat[ok] != u[ok]))
    bits = users[:, ok].size
    return BERPoint(detector=detector, scenario=scenario,
                    density=setup.pw50 if setup.pw50 is not None else 0.0,
                    noise_kind=setup.kind.value, snr_db=float(snr_db),
                    bits=bits, errors=errors,
                    ber=errors / bits if bits else 0.0, seed=seed)


def rowwise(detector):
    """Adapt a single-stream detector object to the (B, n) interface."""
    def predict(traces):
        return np.stack([detector.predict(t) for t in traces])
    return predict


def ber_curve(predict, setup, snrs, n_bits, seed, **kw):
    return [run_ber(predict, setup, s, n_bits, seed, **kw) for s in snrs]


def snr_at_ber(points, target=1e-4):
    """SNR where the curve crosses ``target``, log-linear in BER.

    Points must bracket the target; zero-error points are skipped.
    Raises if the crossing is not bracketed.
    """
    pts = sorted((p for p in points if p.errors > 0),
                 key=lambda p: p.snr_db)
    lt = np.log10(target)
    for a, b in zip(pts, pts[1:]):
        la, lb = np.log10(a.ber), np.log10(b.ber)
        if (la - lt) * (lb - lt) <= 0 and la != lb:
            return a.snr_db + (b.snr_db - a.snr_db) * (lt - la) / (lb - la)
    raise ValueError(f"BER {target:g} not bracketed by curve "
                     f"{[(p.snr_db, p.ber) for p in pts]}")


def db_gain(reference_points, improved_points, target=1e-4):
    """How many dB less SNR the improved detector needs at ``target``."""
    return snr_at_ber(reference_points, target) - snr_at_ber(
        improved_points, target)


@dataclass
class SweepConfig:
    """One BER sweep: detector list x (noise, density) cells x SNR grid.

    ``max_errors`` > 0 stops each point early once that many errors have
    been counted (the point then records fewer bits); 0 runs the full
    stream budget.  ``detectors`` holds names understood by the CLI
    (``viterbi[-coded]``, ``map[-coded]``, ``npmlN[-coded]``) or
    ``prnn:PATH`` for a saved recurrent model.
    """

    scenario: str = ""
    detectors: list = field(default_factory=list)
    noise: str = "awgn"
    densities: list = field(default_factory=lambda: [None])
    snrs: list = field(default_factory=list)
    n_bits: int = 1_000_000
    n_streams: int = 50
    seed: int = 0
    max_errors: int = 0
    coded: bool = True
    user_level: bool = False


def parse_sweep_config(text):
    """Parse a sweep description in ``key = value`` form.

    Grammar: one assignment per line, ``#`` starts a comment, blank
    lines ignored.  List-valued keys take space-separated items.

    ==========  =======================================  ==========
    key         value                                    default
    ==========  =======================================  ==========
    scenario    free-form label for CSV rows             ""
    detectors   detector names (see :class:`SweepConfig`) (required)
    noise       awgn | acn | realistic                   awgn
    densities   PW50/Tc values (ignored for awgn)        -
    snrs        SNR grid in dB                           (required)
    bits        bits per point                           1000000
    streams     independent streams per point            50
    seed        base seed                                0
    max_errors  early-stop error count (0 = run all)     0
    coded       true | false                             true
    user_level  true | false                             false
    ==========  =======================================  ==========
    """
    cfg = SweepConfig()
    booleans = {"true": True, "false": False}
    for ln, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {ln}: expected 'key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        if key == "scenario":
            cfg.scenario = val
        elif key == "detectors":
            cfg.detectors = val.split()
        elif key == "noise":
            cfg.noise = NoiseKind(val).value
        elif key == "densities":
            cfg.densities = [float(v) for v in val.split()]
        elif key == "snrs":
            cfg.snrs = [float(v) for v in val.split()]
        elif key in ("bits", "streams", "seed", "max_errors"):
            attr = {"bits": "n_bits", "streams": "n_streams"}.get(key, key)
            setattr(cfg, attr, int(val))
        elif key in ("coded", "user_level"):
            setattr(cfg, key, booleans[val.lower()])
        else:
            raise ValueError(f"line {ln}: unknown key {key!r}")
    if NoiseKind(cfg.noise) is NoiseKind.AWGN:
        cfg.densities = [None]
    elif cfg.densities == [None]:
        raise ValueError(f"{cfg.noise} noise needs a densities line")
    return cfg


def _point_seed(cfg, detector, density, snr):
    import zlib
    tag = f"{cfg.scenario}/{detector}/{density}/{snr:g}/{cfg.seed}"
    return zlib.crc32(tag.encode()) & 0x7FFFFFFF


def _run_point(predict, setup, snr, cfg, detector, seed):
    runner = run_ber_user if cfg.user_level else run_ber
    kw = {} if cfg.user_level else {"coded": cfg.coded}
    if not cfg.max_errors:
        return runner(predict, setup, snr, cfg.n_bits, seed,
                      n_streams=cfg.n_streams, detector=detector,
                      scenario=cfg.scenario, **kw)
    # accumulate fixed-size slices until the error or bit budget is hit
    chunk = max(cfg.n_bits // 10, cfg.n_streams * 100)
    bits = errors = done = 0
    while done < cfg.n_bits and errors < cfg.max_errors:
        p = runner(predict, setup, snr, min(chunk, cfg.n_bits - done),
                   seed + 7919 * (done // chunk), n_streams=cfg.n_streams,
                   detector=detector, scenario=cfg.scenario, **kw)
        bits, errors, done = bits + p.bits, errors + p.errors, done + chunk
    return BERPoint(detector=detector, scenario=cfg.scenario,
                    density=setup.pw50 if setup.pw50 is not None else 0.0,
                    noise_kind=setup.kind.value, snr_db=float(snr),
                    bits=bits, errors=errors,
                    ber=errors / bits if bits else 0.0, seed=seed)


def _default_detector_factory(name, setup, snr):
    if name.startswith("prnn:"):
        from .nn import SequenceClassifier
        from .prnn import PRNNDetector
        det = PRNNDetector(SequenceClassifier.load(name[5:]))
        return det.predict_many
    from .cli import _make_detector
    return rowwise(_make_detector(name, setup, snr))


def run_sweep(cfg, detector_factory=_default_detector_factory):
    """Run every (detector, density, SNR) cell of ``cfg``.

    Results come back in deterministic (detector, density, SNR) order
    with per-point seeds derived from the config, so identical configs
    produce identical CSV bytes.  Model files referenced as
    ``prnn:PATH`` are checked before any simulation starts.
    """
    import os
    for name in cfg.detectors:
        if name.startswith("prnn:") and not os.path.exists(name[5:]):
            raise FileNotFoundError(f"model file {name[5:]!r} not found")
    kind = NoiseKind(cfg.noise)
    points = []
    for name in cfg.detectors:
        for density in cfg.densities:
            setup = ChannelSetup(kind, pw50=density)
            for snr in cfg.snrs:
                predict = detector_factory(name, setup, snr)
                points.append(_run_point(
                    predict, setup, snr, cfg, name,
                    _point_seed(cfg, name, density, snr)))
    return points


def benchmark(named_predicts, lengths=(1000, 10000, 100000, 1000000),
              setup=None, snr_db=12.0, seed=0):
    """Wall-clock throughput of detectors versus stream length.

    ``named_predicts`` maps a display name to a (B, n) -> (B, n)
    predict callable.  Each detector is timed on single streams of the
    given lengths (after a warm-up run, so JIT compilation is not
    billed) and the log-log runtime/length relation is fit by least
    squares.  A detector whose cost is linear in stream length shows
    slope ~1 and R^2 > 0.99; the report also splits runtime into a
    fixed overhead and a per-bit cost via a linear fit.
    """
    if setup is None:
        setup = ChannelSetup(NoiseKind.AWGN)
    rng = np.random.default_rng(seed)
    trace = setup.trace(_coded_stream(rng, max(lengths)), snr_db, rng)
    report = {}
    for name, predict in named_predicts.items():
        predict(trace[None, :min(lengths)])  # warm-up
        secs = []
        for n in lengths:
            t0 = time.perf_counter()
            predict(trace[None, :n])
            secs.append(time.perf_counter() - t0)
        ln, lt = np.log10(lengths), np.log10(secs)
        slope, icpt = np.polyfit(ln, lt, 1)
        resid = lt - (slope * ln + icpt)
        ss_tot = float(np.sum((lt - lt.mean()) ** 2))
        r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot else 1.0
        per_bit, overhead = np.polyfit(lengths, secs, 1)
        report[name] = {
            "lengths": list(lengths), "seconds": secs,
            "bits_per_s": lengths[-1] / secs[-1],
            "slope": float(slope), "r2": r2,
            "linear": bool(r2 > 0.99 and 0.8 < slope < 1.2),
            "overhead_s": float(overhead), "per_bit_s": float(per_bit),
        }
    return report


def write_csv(path, points, append=False):
    mode = "a" if append else "w"
    with open(path, mode, newline="") as f:
        w = csv.DictWriter(f, fieldnames=CSV_FIELDS)
        if not append:
            w.writeheader()
        for p in points:
            w.writerow(asdict(p))


def read_csv(path):
    out = []
    with open(path, newline="") as f:
        for row in csv.DictReader(f):
            out.append(BERPoint(
                detector=row["detector"], scenario=row["scenario"],
                density=float(row["density"]),
                noise_kind=row["noise_kind"],
                snr_db=float(row["snr_db"]), bits=int(row["bits"]),
                errors=int(row["errors"]), ber=float(row["ber"]),
                seed=int(row["seed"])))
    return out
