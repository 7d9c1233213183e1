import numpy as np
import pytest

from prdet.cli import main


def test_distance_search(capsys):
    main(["distance-search"])
    out = capsys.readouterr().out
    assert "states: 16" in out
    assert "min squared distance: 6" in out
    main(["distance-search", "--constrained"])
    out = capsys.readouterr().out
    assert "states: 10" in out
    assert "min squared distance: 10" in out


def test_design_equalizer(tmp_path, capsys):
    out = tmp_path / "eq.npz"
    main(["design-equalizer", "--density", "2.54", "--out", str(out)])
    text = capsys.readouterr().out
    assert "taps:" in text
    d = np.load(out)
    assert d["taps"].shape == (21,)


def test_gen_data(tmp_path, capsys):
    out = tmp_path / "d.npz"
    main(["gen-data", "--snr", "9.0", "--bits", "3000", "--streams", "3",
          "--seed", "1", "--out", str(out)])
    d = np.load(out)
    assert d["bits"].shape == d["traces"].shape == (3, 1000)


def test_detect_and_csv(tmp_path, capsys):
    csv = tmp_path / "ber.csv"
    main(["detect", "--detector", "viterbi", "--uncoded", "--snr", "11",
          "--bits", "20000", "--streams", "4", "--csv", str(csv)])
    out = capsys.readouterr().out
    assert "viterbi density=0 snr=11" in out
    from prdet.harness import read_csv

    pts = read_csv(csv)
    assert len(pts) == 1 and pts[0].detector == "viterbi"


def test_train_and_eval_smoke(tmp_path, capsys):
    model = tmp_path / "m.npz"
    main(["train", "--experiment", "1.1", "--epochs", "2", "--hidden", "4",
          "--layers", "1", "--out", str(model)])
    capsys.readouterr()
    main(["eval", "--model", str(model), "--snr", "9", "--bits", "2000",
          "--streams", "2"])
    out = capsys.readouterr().out
    assert "prnn density=0 snr=9" in out


def test_detect_user_level(capsys):
    main(["detect", "--detector", "viterbi-coded", "--user-level",
          "--snr", "40", "--bits", "6000", "--streams", "3"])
    out = capsys.readouterr().out
    assert "viterbi-coded density=0 snr=40" in out
    assert "(0/" in out  # clean channel: no user-bit errors


def test_sweep_from_config(tmp_path, capsys):
    cfg = tmp_path / "sweep.cfg"
    cfg.write_text("scenario = smoke\n"
                   "detectors = viterbi\n"
                   "snrs = 12\n"
                   "bits = 20000\n"
                   "streams = 4\n"
                   "coded = false\n")
    csv = tmp_path / "out.csv"
    plot = tmp_path / "curve.dat"
    main(["sweep", "--config", str(cfg), "--csv", str(csv),
          "--plot-data", str(plot)])
    out = capsys.readouterr().out
    assert "viterbi" in out and "snr=12" in out
    from prdet.harness import read_csv
    pts = read_csv(csv)
    assert len(pts) == 1 and pts[0].scenario == "smoke"
    lines = plot.read_text().splitlines()
    assert lines[0].startswith("# viterbi")
    snr, ber = lines[1].split()
    assert float(snr) == 12.0
    assert float(ber) == pytest.approx(pts[0].ber)


def test_benchmark_cli(capsys):
    main(["benchmark", "--detectors", "viterbi", "--lengths",
          "2000", "20000", "--snr", "12"])
    out = capsys.readouterr().out
    assert "viterbi:" in out and "bits/s" in out
