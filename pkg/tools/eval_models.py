"""Evaluate trained recurrent-detector models into pinned BER curves.

Waits for each model file to appear (training runs sequentially in a
separate process), appends one CSV row per completed point, and skips
rows already present so the run is resumable.
"""

import os
import sys
import time
import zlib

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from prdet.channel import NoiseKind
from prdet.harness import (
    ChannelSetup,
    read_csv,
    run_ber,
    wilson_interval,
    write_csv,
)
from prdet.nn import SequenceClassifier
from prdet.prnn import PRNNDetector

HERE = os.path.dirname(__file__)
OUT = os.path.join(HERE, "..", "results", "prnn.csv")
MODELS = os.path.join(HERE, "..", "models")
N_BITS = 1_000_000
N_STREAMS = 200  # bigger batches keep the GRU GEMMs efficient
SNRS = [10.5, 11.0, 11.5, 12.0, 12.5]

# (model experiment, scenario label, noise kind, pw50)
JOBS = [  # ordered to match the sequential training schedule
    ("1.1", "awgn", NoiseKind.AWGN, None),
    ("1.2", "acn", NoiseKind.ACN, 2.54),
    ("2.2", "awgn", NoiseKind.AWGN, None),
    ("2.2", "acn", NoiseKind.ACN, 2.54),
    ("3.1", "realistic", NoiseKind.REALISTIC, 2.54),
    ("3.2", "realistic", NoiseKind.REALISTIC, 2.88),
]


def wait_for(path):
    while not os.path.exists(path):
        print(f"waiting for {path}", flush=True)
        time.sleep(120)
    time.sleep(5)  # let the writer finish


def main():
    os.makedirs(os.path.dirname(OUT), exist_ok=True)
    done = set()
    if os.path.exists(OUT):
        done = {(p.detector, p.scenario, p.density, p.snr_db)
                for p in read_csv(OUT)}
    else:
        write_csv(OUT, [])
    for exp, scenario, kind, pw50 in JOBS:
        name = f"prnn-{exp}"
        if all((name, scenario, pw50 if pw50 else 0.0, s) in done
               for s in SNRS):
            continue
        path = os.path.join(MODELS, f"exp{exp}.tuned.npz")
        wait_for(path)
        det = PRNNDetector(SequenceClassifier.load(path).astype(np.float32))
        setup = ChannelSetup(kind, pw50)
        for snr in SNRS:
            if (name, scenario, pw50 if pw50 else 0.0, snr) in done:
                continue
            seed = zlib.crc32(f"{name}/{scenario}/{pw50}/{snr:g}"
                              .encode()) & 0x7FFFFFFF
            p = run_ber(det.predict_many, setup, snr, N_BITS, seed,
                        n_streams=N_STREAMS, detector=name,
                        scenario=scenario)
            lo, hi = wilson_interval(p.errors, p.bits)
            print(f"{name} {scenario} pw50={pw50} snr={snr:g} "
                  f"ber={p.ber:.3e} [{lo:.2e},{hi:.2e}] "
                  f"({p.errors}/{p.bits}) invalid={det.invalid_states_}",
                  flush=True)
            write_csv(OUT, [p], append=True)
    print("EVAL_DONE", flush=True)


if __name__ == "__main__":
    main()
