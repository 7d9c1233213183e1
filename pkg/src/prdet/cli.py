"""Command-line entry points.

Subcommands:
  gen-data          write noisy channel traces and their input bits to .npz
  design-equalizer  print/save MMSE equalizer taps for a density
  distance-search   minimum-distance error event of a detector trellis
  detect            Monte-Carlo BER of a classic detector
  sweep             run a config-file-driven BER sweep over detectors
  benchmark         wall-clock throughput and scaling of detectors
  train             train the recurrent detector for a named experiment
  eval              Monte-Carlo BER of a trained recurrent detector
"""

import argparse
import json
import sys

import numpy as np

from .channel import LorentzianModel, NoiseKind, e2pr4
from .detectors import MaxLogMapDetector, NPMLDetector, ViterbiDetector
from .equalizer import design_pr_equalizer
from .harness import (
    ChannelSetup,
    ber_curve,
    benchmark,
    make_streams,
    parse_sweep_config,
    rowwise,
    run_ber,
    run_ber_user,
    run_sweep,
    wilson_interval,
    write_csv,
)
from .prnn import NoiseCell, PRNNDetector, PRNNTrainer
from .trellis import build_trellis, min_distance_search, to_dot

# training mixtures: experiment id -> (cells, per-cell batch sizes)
_A = NoiseCell(NoiseKind.AWGN)
_C54 = NoiseCell(NoiseKind.ACN, 2.54)
_C88 = NoiseCell(NoiseKind.ACN, 2.88)
_R54 = NoiseCell(NoiseKind.REALISTIC, 2.54)
_R88 = NoiseCell(NoiseKind.REALISTIC, 2.88)
EXPERIMENTS = {
    "1.1": ([_A], [30]),
    "1.2": ([_C54], [30]),
    "1.3": ([_C88], [30]),
    "2.1": ([_A, _C54], [30, 30]),
    "2.2": ([_A, _C54], [40, 20]),
    "2.3": ([_A, _C54], [50, 10]),
    "2.4": ([_C54, _C88], [30, 30]),
    "3.1": ([_R54], [30]),
    "3.2": ([_R88], [30]),
    "3.3": ([_R54, _R88], [30, 30]),
}


def _add_cell_args(p):
    p.add_argument("--noise", choices=[k.value for k in NoiseKind],
                   default="awgn")
    p.add_argument("--density", type=float, default=None,
                   help="PW50/Tc, required for acn/realistic")


def _setup_from_args(args):
    kind = NoiseKind(args.noise)
    if kind is not NoiseKind.AWGN and args.density is None:
        sys.exit("--density is required for colored/realistic noise")
    return ChannelSetup(kind, pw50=args.density)


def _cmd_gen_data(args):
    setup = _setup_from_args(args)
    rng = np.random.default_rng(args.seed)
    streams = make_streams(rng, args.streams,
                           int(np.ceil(args.bits / args.streams)),
                           coded=not args.uncoded)
    traces = np.stack([setup.trace(a, args.snr, rng) for a in streams])
    np.savez(args.out, bits=streams, traces=traces, snr_db=args.snr,
             noise=args.noise, density=args.density or 0.0, seed=args.seed)
    print(f"wrote {args.out}: {streams.shape[0]} streams x "
          f"{streams.shape[1]} bits")


def _cmd_design_equalizer(args):
    model = LorentzianModel(pw50=args.density)
    eq = design_pr_equalizer(model, e2pr4(), n_taps=args.taps,
                             sigma=args.sigma)
    print("taps:", np.array2string(eq.taps, precision=6))
    print("residual energy:", float(np.sum(eq.miseq_taps**2)))
    if args.out:
        np.savez(args.out, taps=eq.taps, density=args.density,
                 sigma=args.sigma)
        print(f"wrote {args.out}")


def _cmd_distance_search(args):
    t = build_trellis(e2pr4(), constrained=args.constrained)
    ev = min_distance_search(t, max_span=args.max_span)
    print(f"states: {t.n_states}, edges: {t.n_edges}")
    print(f"min squared distance: {ev.d2:g}")
    print(f"diverging state: {ev.start_state:04b}")
    print(f"input pair: {ev.inputs_a} / {ev.inputs_b}")
    if args.dot:
        with open(args.dot, "w") as f:
            f.write(to_dot(t))
        print(f"wrote {args.dot}")


def _make_detector(name, setup, snr):
    if name == "viterbi":
        return ViterbiDetector(constrained=False)
    if name == "viterbi-coded":
        return ViterbiDetector(constrained=True)
    if name == "map":
        return MaxLogMapDetector(constrained=False)
    if name == "map-coded":
        return MaxLogMapDetector(constrained=True)
    if name.startswith("npml"):
        coded = name.endswith("-coded")
        n_taps = int(name.removesuffix("-coded").removeprefix("npml"))
        taps = setup.npml_taps(n_taps, snr)
        return NPMLDetector(taps, constrained=coded)
    sys.exit(f"unknown detector {name!r}")


def _cmd_detect(args):
    setup = _setup_from_args(args)
    points = []
    for snr in args.snr:
        det = _make_detector(args.detector, setup, snr)
        if args.user_level:
            p = run_ber_user(rowwise(det), setup, snr, args.bits,
                             args.seed, n_streams=args.streams,
                             detector=args.detector,
                             scenario=args.scenario)
        else:
            p = run_ber(rowwise(det), setup, snr, args.bits, args.seed,
                        coded=not args.uncoded, n_streams=args.streams,
                        detector=args.detector, scenario=args.scenario)
        _print_point(p)
        points.append(p)
    if args.csv:
        write_csv(args.csv, points, append=args.append)
    if args.plot_data:
        _write_plot_data(args.plot_data, points)


def _write_plot_data(path, points):
    """Plain-text (snr_db, ber) pairs, one block per curve."""
    with open(path, "w") as f:
        seen = None
        for p in sorted(points, key=lambda p: (p.detector, p.density,
                                               p.snr_db)):
            key = (p.detector, p.density)
            if key != seen:
                blank = "\n" if seen else ""
                f.write(f"{blank}# {p.detector} density={p.density:g}\n")
                seen = key
            f.write(f"{p.snr_db:g} {p.ber:.6e}\n")


def _print_point(p):
    lo, hi = wilson_interval(p.errors, p.bits)
    flag = "  (low confidence)" if p.low_confidence else ""
    print(f"{p.detector} density={p.density:g} snr={p.snr_db:g} "
          f"ber={p.ber:.3e} [{lo:.2e}, {hi:.2e}] "
          f"({p.errors}/{p.bits}){flag}")


def _cmd_sweep(args):
    with open(args.config) as f:
        cfg = parse_sweep_config(f.read())
    points = run_sweep(cfg)
    for p in points:
        _print_point(p)
    if args.csv:
        write_csv(args.csv, points, append=args.append)
    if args.plot_data:
        _write_plot_data(args.plot_data, points)


def _cmd_benchmark(args):
    setup = _setup_from_args(args)
    named = {}
    for name in args.detectors:
        if name.startswith("prnn:"):
            from .nn import SequenceClassifier
            from .prnn import PRNNDetector
            det = PRNNDetector(SequenceClassifier.load(name[5:]))
            named[name] = det.predict_many
        else:
            named[name] = rowwise(_make_detector(name, setup, args.snr))
    report = benchmark(named, lengths=args.lengths, setup=setup,
                       snr_db=args.snr, seed=args.seed)
    for name, r in report.items():
        scaling = "linear" if r["linear"] else "NOT linear"
        print(f"{name}: {r['bits_per_s']:.3g} bits/s  "
              f"slope={r['slope']:.2f} R2={r['r2']:.4f} ({scaling})")
        print(f"  overhead {r['overhead_s']*1e3:.2f} ms + "
              f"{r['per_bit_s']*1e6:.3f} us/bit")
        for n, s in zip(r["lengths"], r["seconds"]):
            print(f"  {n:>9} bits  {s:8.4f} s")


def _cmd_train(args):
    from .nn import SequenceClassifier

    cells, batches = EXPERIMENTS[args.experiment]
    init = SequenceClassifier.load(args.resume) if args.resume else None
    trainer = PRNNTrainer(cells, batch_per_cell=batches,
                          epochs=args.epochs, lr=args.lr, seed=args.seed,
                          n_hidden=args.hidden, n_layers=args.layers,
                          init_model=init, start_epoch=args.start_epoch)

    def report(ep, loss, p):
        if ep % args.log_every == 0:
            print(f"epoch {ep} p={p:.2f} loss={loss:.5f}", flush=True)

    trainer.fit(callback=report)
    trainer.model_.save(args.out)
    np.save(args.out.replace(".npz", "") + ".loss.npy",
            np.array(trainer.loss_history_))
    meta = {"experiment": args.experiment, "epochs": args.epochs,
            "seed": args.seed,
            "cells": [c.label for c in cells], "batches": list(batches)}
    with open(args.out.replace(".npz", "") + ".json", "w") as f:
        json.dump(meta, f, indent=1)
    print(f"wrote {args.out}")


def _cmd_eval(args):
    from .nn import SequenceClassifier

    net = SequenceClassifier.load(args.model)
    setup = _setup_from_args(args)
    det = PRNNDetector(net)
    points = ber_curve(det.predict_many, setup, args.snr, args.bits,
                       args.seed, n_streams=args.streams,
                       detector="prnn", scenario=args.scenario)
    for p in points:
        _print_point(p)
    if det.invalid_states_:
        print(f"note: {det.invalid_states_} window handoffs hit an "
              "invalid state")
    if args.csv:
        write_csv(args.csv, points, append=args.append)
    if args.plot_data:
        _write_plot_data(args.plot_data, points)


def main(argv=None):
    ap = argparse.ArgumentParser(prog="prdet", description=__doc__)
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("gen-data", help="generate noisy traces")
    _add_cell_args(p)
    p.add_argument("--snr", type=float, required=True)
    p.add_argument("--bits", type=int, default=100000)
    p.add_argument("--streams", type=int, default=10)
    p.add_argument("--uncoded", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gen_data)

    p = sub.add_parser("design-equalizer", help="MMSE equalizer taps")
    p.add_argument("--density", type=float, required=True)
    p.add_argument("--taps", type=int, default=21)
    p.add_argument("--sigma", type=float, default=0.0)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_design_equalizer)

    p = sub.add_parser("distance-search", help="trellis distance analysis")
    p.add_argument("--constrained", action="store_true")
    p.add_argument("--max-span", type=int, default=24)
    p.add_argument("--dot", help="write graphviz state diagram here")
    p.set_defaults(func=_cmd_distance_search)

    p = sub.add_parser("detect", help="BER of a classic detector")
    _add_cell_args(p)
    p.add_argument("--detector", required=True,
                   help="viterbi[-coded], map[-coded], npmlN[-coded]")
    p.add_argument("--snr", type=float, nargs="+", required=True)
    p.add_argument("--bits", type=int, default=1000000)
    p.add_argument("--streams", type=int, default=50)
    p.add_argument("--uncoded", action="store_true")
    p.add_argument("--user-level", action="store_true",
                   help="decode and count user-bit errors (coded only)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scenario", default="")
    p.add_argument("--csv")
    p.add_argument("--append", action="store_true")
    p.add_argument("--plot-data", help="write (snr, ber) pairs here")
    p.set_defaults(func=_cmd_detect)

    p = sub.add_parser("sweep", help="config-file-driven BER sweep")
    p.add_argument("--config", required=True,
                   help="key = value sweep description; see "
                        "prdet.harness.parse_sweep_config for grammar")
    p.add_argument("--csv")
    p.add_argument("--append", action="store_true")
    p.add_argument("--plot-data", help="write (snr, ber) pairs here")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("benchmark", help="detector throughput/scaling")
    _add_cell_args(p)
    p.add_argument("--detectors", nargs="+", required=True,
                   help="classic detector names or prnn:MODEL.npz")
    p.add_argument("--lengths", type=int, nargs="+",
                   default=[1000, 10000, 100000, 1000000])
    p.add_argument("--snr", type=float, default=12.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_benchmark)

    p = sub.add_parser("train", help="train the recurrent detector")
    p.add_argument("--experiment", choices=sorted(EXPERIMENTS),
                   required=True)
    p.add_argument("--epochs", type=int, default=2500)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--hidden", type=int, default=50)
    p.add_argument("--layers", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--log-every", type=int, default=50)
    p.add_argument("--resume", help="warm-start from a saved model")
    p.add_argument("--start-epoch", type=int, default=0,
                   help="where the bias ramp resumes when warm-starting")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="BER of a trained recurrent detector")
    _add_cell_args(p)
    p.add_argument("--model", required=True)
    p.add_argument("--snr", type=float, nargs="+", required=True)
    p.add_argument("--bits", type=int, default=300000)
    p.add_argument("--streams", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scenario", default="")
    p.add_argument("--csv")
    p.add_argument("--append", action="store_true")
    p.add_argument("--plot-data", help="write (snr, ber) pairs here")
    p.set_defaults(func=_cmd_eval)

    args = ap.parse_args(argv)
    args.func(args)


if __name__ == "__main__":
    main()
