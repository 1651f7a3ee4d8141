import subprocess
import sys

import numpy as np
import pytest
import yaml

from nystrom_ts.cli import main
from nystrom_ts.estimator import load_model


def run(tmp_path, *args):
    return main([str(a) for a in args])


def kv(path):
    return dict(line.split(" = ") for line in path.read_text().splitlines())


def test_simulate_deterministic_bytes(tmp_path):
    for name in ("a", "b"):
        assert main(["simulate", "--out", str(tmp_path / name), "--seed", "3",
                     "--mechanism.map=m2", "--n=5"]) == 0
    a = (tmp_path / "a" / "series.csv").read_bytes()
    assert a == (tmp_path / "b" / "series.csv").read_bytes()
    assert a.splitlines()[0] == b"t,value,noise,innovation"


def test_simulate_zero_noise_and_row_count(tmp_path):
    main(["simulate", "--out", str(tmp_path / "z"), "--n=20", "--mechanism.x0=0",
          "--mechanism.noise.kind=zero"])
    rows = (tmp_path / "z" / "series.csv").read_text().splitlines()[1:]
    assert all(float(r.split(",")[1]) == 0.0 for r in rows)
    main(["simulate", "--out", str(tmp_path / "big"), "--n=100000"])
    with open(tmp_path / "big" / "series.csv") as fh:
        assert sum(1 for _ in fh) == 100_001


def test_fit_full_ratio_matches_krr(tmp_path):
    main(["simulate", "--out", str(tmp_path), "--n=301", "--seed=2"])
    series = tmp_path / "series.csv"
    assert main(["fit", "--out", str(tmp_path / "nys"), f"--input={series}",
                 "--subsample.ratio=1.0", "--lambda=0.01"]) == 0
    assert main(["fit", "--out", str(tmp_path / "krr"), f"--input={series}",
                 "--estimator=krr", "--lambda=0.01"]) == 0
    a = kv(tmp_path / "nys" / "fit_summary.txt")
    b = kv(tmp_path / "krr" / "fit_summary.txt")
    assert a["m"] == "300" and a["n"] == "300"
    assert float(a["train_rmse"]) == pytest.approx(float(b["train_rmse"]), rel=1e-6)
    assert a["index"] == ",".join(str(i) for i in range(300))
    assert main(["predict", "--out", str(tmp_path / "pred"),
                 f"--model={tmp_path / 'nys' / 'model.txt'}", f"--input={series}"]) == 0
    p = kv(tmp_path / "pred" / "predict_summary.txt")
    assert float(p["rmse"]) == pytest.approx(float(a["train_rmse"]), rel=1e-12)


def test_fit_zero_targets(tmp_path):
    data = tmp_path / "d.csv"
    x = np.linspace(-1, 1, 40)
    data.write_text("x1,y\n" + "".join(f"{float(v)!r},0\n" for v in x))
    assert main(["fit", "--out", str(tmp_path), f"--input={data}", "--subsample.m=8"]) == 0
    model = load_model(tmp_path / "model.txt")
    np.testing.assert_array_equal(model.predict(np.linspace(-3, 3, 61)), 0.0)


def test_config_echo_reproduces_run(tmp_path):
    main(["simulate", "--out", str(tmp_path), "--n=400"])
    cfg = tmp_path / "cfg.yaml"
    cfg.write_text(yaml.safe_dump({"input": str(tmp_path / "series.csv"), "lambda": 0.5,
                                   "subsample": {"mode": "middle", "ratio": 0.1}}))
    # flags beat the config file
    main(["fit", "--config", str(cfg), "--out", str(tmp_path / "r1"), "--lambda=0.002",
          "--rescale"])
    echo = yaml.safe_load((tmp_path / "r1" / "config.yaml").read_text())
    assert echo["lambda"] == 0.002 and echo["rescale"] is True
    assert echo["subsample"]["mode"] == "middle" and echo["kernel"]["kind"] == "wendland"
    main(["fit", "--config", str(tmp_path / "r1" / "config.yaml"), "--out", str(tmp_path / "r2")])
    assert (tmp_path / "r1" / "model.txt").read_bytes() == (tmp_path / "r2" / "model.txt").read_bytes()


def test_eval_and_sweep_outputs(tmp_path):
    assert main(["eval", "--out", str(tmp_path / "e"), "--n_train=200", "--n_test=4",
                 "--lambda_grid=[0.001, 0.01]"]) == 0
    lines = (tmp_path / "e" / "eval.csv").read_text().splitlines()
    assert lines[0] == "k,prediction,target" and len(lines) == 5
    assert main(["sweep", "--out", str(tmp_path / "s"), "--n=200", "--ratios=[0.1]", "--reps=1",
                 "--n_test=2", "--lambda=0.001"]) == 0
    rows = (tmp_path / "s" / "sweep.csv").read_text().splitlines()
    assert rows[0] == "label,n,m,lambda,seed,rmse,runtime_s" and len(rows) == 2


def test_sweep_scaling_and_placement(tmp_path):
    assert main(["sweep", "--out", str(tmp_path / "sc"), "--kind=scaling", "--ns=[200, 400]",
                 "--ratio=0.05", "--reps=1", "--n_test=2", "--lambda=0.001",
                 "--protocol.refit=once"]) == 0
    assert "loglog_slope" in (tmp_path / "sc" / "slope.txt").read_text()
    assert main(["sweep", "--out", str(tmp_path / "pl"), "--kind=placement", "--n=300", "--m=10",
                 "--reps=1", "--n_test=2", "--lambda=0.001"]) == 0
    labels = [l.split(",")[0] for l in (tmp_path / "pl" / "sweep_summary.csv").read_text().splitlines()[1:]]
    assert labels == ["First", "Middle", "Last", "Intv.5", "Intv.20"]


def test_spectrum_identical_arms(tmp_path):
    assert main(["spectrum", "--out", str(tmp_path), "--n=60", "--top_k=10", "--n_seeds=1",
                 "--iid.mechanism={map: m1, noise: {kind: bernoulli, p: 0.5}}"]) == 0
    a = (tmp_path / "spectrum_dependent_0.csv").read_bytes()
    assert a == (tmp_path / "spectrum_iid_0.csv").read_bytes()
    assert a.splitlines()[0] == b"index,eigenvalue" and len(a.splitlines()) == 11


def test_noise_command(tmp_path):
    assert main(["noise", "--out", str(tmp_path), "--seed=3"]) == 0
    s = kv(tmp_path / "noise_summary.txt")
    assert float(s["variance"]) == pytest.approx(0.4 ** 2 / 12, rel=0.15)
    assert (tmp_path / "noise_hist.csv").read_text().startswith("bin_left,bin_right,count\n")


def test_exit_codes(tmp_path, capsys):
    out = str(tmp_path / "o")
    assert main(["fit", "--out", out]) == 2
    assert main(["fit", "--out", out, "--input=x.csv", "--kernel.kind=cosine"]) == 2
    assert main(["fit", "--out", out, f"--input={tmp_path / 'missing.csv'}"]) == 5
    bad = tmp_path / "bad.csv"
    bad.write_text("t,value\n0,1\n1,nan?\n")
    assert main(["fit", "--out", out, f"--input={bad}"]) == 3
    assert "line 3" in capsys.readouterr().err
    dup = tmp_path / "dup.csv"
    dup.write_text("x1,y\n0.5,1\n0.5,2\n0.1,0\n")
    assert main(["fit", "--out", out, f"--input={dup}", "--estimator=krr", "--lambda=0"]) == 4
    main(["simulate", "--out", out, "--n=50"])
    assert main(["fit", "--out", out, f"--input={out}/series.csv", "--subsample.m=500"]) == 2
    bad_cfg = tmp_path / "c.yaml"
    bad_cfg.write_text("lambda: [1,\n")
    assert main(["fit", "--config", str(bad_cfg), "--out", out]) == 2


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "nystrom_ts", "simulate", "--out", str(tmp_path),
                        "--n=3"], capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    assert (tmp_path / "config.yaml").exists()
