import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from rslogit import CvConfig, FitConfig, PenaltySpec, fit
from rslogit.cli import main, read_csv, robust_standardization

from conftest import literal_cv, logistic_data, newton_mle


def write_csv(path, data, response="y", names=None):
    names = names or [f"x{j}" for j in range(data.p)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names[:1] + [response] + names[1:])
        for x, y in zip(data.X, data.y):
            vals = [repr(float(v)) for v in x]
            w.writerow(vals[:1] + [str(int(y))] + vals[1:])
    return path


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def clean_csv(tmp_path):
    return write_csv(tmp_path / "d.csv", logistic_data(100))


def test_read_csv_roundtrip(clean_csv):
    X, y, names = read_csv(clean_csv, "y")
    d = logistic_data(100)
    assert names == ["x0", "x1", "x2"]
    np.testing.assert_array_equal(X, d.X)
    np.testing.assert_array_equal(y, d.y)


def test_fit_matches_newton(capsys, clean_csv):
    code, out, _ = run(capsys, "fit", "--data", clean_csv, "--response", "y",
                       "--loss", "deviance", "--penalty", "none", "--weights", "none",
                       "--tol", "1e-10")
    assert code == 0
    res = json.loads(out)
    d = logistic_data(100)
    oracle = newton_mle(d.X, d.y)
    got = [res["intercept"]] + [res["coefficients"][f"x{j}"] for j in range(3)]
    np.testing.assert_allclose(got, oracle, atol=1e-4)
    for key in ("active_set", "lambda", "objective", "converged", "iterations", "version", "config"):
        assert key in res
    assert res["config"]["loss"] == "deviance"


def test_sign_zero_lambda_equals_none(capsys, clean_csv):
    base = ["fit", "--data", clean_csv, "--response", "y", "--weights", "hard"]
    _, a, _ = run(capsys, *base, "--penalty", "sign", "--lambda", "0")
    _, b, _ = run(capsys, *base, "--penalty", "none")
    a, b = json.loads(a), json.loads(b)
    assert a["coefficients"] == b["coefficients"]
    assert a["intercept"] == b["intercept"]


def test_std_errors(capsys, clean_csv):
    code, out, _ = run(capsys, "fit", "--data", clean_csv, "--response", "y", "--std-errors",
                       "--penalty", "lasso", "--lambda", "0.01")
    res = json.loads(out)
    assert code == 0
    assert set(res["std_errors"]) == {"intercept", *res["active_set"]}
    assert all(v > 0 for v in res["std_errors"].values())


def test_standardize_invariance(capsys, clean_csv, tmp_path):
    d = logistic_data(101)
    X = d.X * np.array([100.0, 0.01, 3.0]) + np.array([5.0, -2.0, 40.0])
    from rslogit import Dataset

    path = write_csv(tmp_path / "s.csv", Dataset(X, d.y))
    common = ["fit", "--data", path, "--response", "y", "--loss", "deviance", "--tol", "1e-14"]
    _, a, _ = run(capsys, *common)
    _, b, _ = run(capsys, *common, "--standardize", "--std-errors")
    a, b = json.loads(a), json.loads(b)
    pa = 1 / (1 + np.exp(-(X @ [a["coefficients"][f"x{j}"] for j in range(3)] + a["intercept"])))
    pb = 1 / (1 + np.exp(-(X @ [b["coefficients"][f"x{j}"] for j in range(3)] + b["intercept"])))
    assert np.abs(pa - pb).max() < 1e-8
    _, c, _ = run(capsys, *common, "--std-errors")
    c = json.loads(c)
    for k, v in c["std_errors"].items():
        assert b["std_errors"][k] == pytest.approx(v, rel=1e-5)


def test_robust_standardization():
    X = np.array([[1.0, 10.0], [2.0, 20.0], [3.0, 30.0], [4.0, 40.0], [100.0, 50.0]])
    center, scale = robust_standardization(X)
    np.testing.assert_allclose(center, [3.0, 30.0])
    np.testing.assert_allclose(scale, [1.4826, 14.826])


def test_bad_response_names_row(capsys, tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,y\n" + "".join(f"{i}.5,{i % 2}\n" for i in range(11)) + "1.0,2\n")
    code, _, err = run(capsys, "fit", "--data", path, "--response", "y")
    assert code == 3
    assert "row 13" in err and "'2'" in err


@pytest.mark.parametrize("text,needle", [
    ("a,y\n1.0,0\n,1\n", "missing value"),
    ("a,y\n1.0,0\nfoo,1\n", "column 'a'"),
    ("a,y\n1.0,0\n2.0\n", "fields"),
    ("a,b\n1.0,0\n", "no response column"),
    ("y\n1\n0\n", "no covariate"),
    ("", "empty"),
])
def test_data_errors(capsys, tmp_path, text, needle):
    path = tmp_path / "bad.csv"
    path.write_text(text)
    code, _, err = run(capsys, "fit", "--data", path, "--response", "y")
    assert code == 3
    assert needle in err


def test_too_few_rows_and_missing_file(capsys, tmp_path):
    path = write_csv(tmp_path / "small.csv", logistic_data(1, n=8))
    assert run(capsys, "fit", "--data", path, "--response", "y")[0] == 3
    assert run(capsys, "fit", "--data", tmp_path / "nope.csv", "--response", "y")[0] == 3
    path = write_csv(tmp_path / "cv.csv", logistic_data(1, n=15))
    assert run(capsys, "cv", "--data", path, "--response", "y", "--k", "10")[0] == 3


@pytest.mark.parametrize("extra", [
    ["--penalty", "cauchy"],
    ["--loss", "huber"],
    ["--penalty", "scad", "--a", "1.5"],
    ["--penalty", "lasso", "--lambda", "-1"],
    ["--max-iter", "0"],
])
def test_argument_errors(capsys, clean_csv, extra):
    try:
        code = main(["fit", "--data", str(clean_csv), "--response", "y", *extra])
    except SystemExit as exc:
        code = exc.code
    assert code == 2
    err = capsys.readouterr().err
    assert err.strip().count("\n") <= 2


def test_nonconverged_exit(capsys, clean_csv):
    base = ["fit", "--data", clean_csv, "--response", "y", "--max-iter", "1", "--tol", "1e-15"]
    code, out, err = run(capsys, *base)
    assert code == 4
    assert json.loads(out)["converged"] is False
    assert run(capsys, *base, "--allow-nonconverged")[0] == 0


def test_cv_singleton(capsys, clean_csv):
    code, out, _ = run(capsys, "cv", "--data", clean_csv, "--response", "y",
                       "--penalty", "lasso", "--lambdas", "0.1")
    assert code == 0
    assert json.loads(out)["chosen_lambda"] == 0.1


def test_cv_deviance_curves(capsys, clean_csv):
    code, out, _ = run(capsys, "cv", "--data", clean_csv, "--response", "y", "--loss", "deviance",
                       "--weights", "none", "--penalty", "lasso", "--criterion", "rcv",
                       "--grid-size", "6")
    res = json.loads(out)
    assert code == 0
    assert len(res["curve"]) == 6
    np.testing.assert_allclose(res["curve"], np.array(res["cv_curve"]) + 1, rtol=0, atol=1e-12)


def test_cv_matches_direct_oracle(capsys, tmp_path):
    d = logistic_data(3, n=40, beta=(1.0, -1.0, 0.0))
    path = write_csv(tmp_path / "toy.csv", d)
    code, out, _ = run(capsys, "cv", "--data", path, "--response", "y", "--penalty", "mcp",
                       "--weights", "hard", "--k", "4", "--seed", "5",
                       "--lambdas", "0.005,0.02,0.08")
    res = json.loads(out)
    cfg = CvConfig((0.005, 0.02, 0.08), FitConfig(penalty=PenaltySpec("mcp"), weights="hard",
                                                   rng_seed=5), k_folds=4, rng_seed=5)
    cv, rcv = literal_cv(d, cfg)
    np.testing.assert_allclose(res["rcv_curve"], rcv, rtol=0, atol=1e-12)
    np.testing.assert_allclose(res["cv_curve"], cv, rtol=0, atol=1e-12)


def test_cv_bad_lambdas(capsys, clean_csv):
    for bad in ("a,b", "-0.1", "inf"):
        code = run(capsys, "cv", "--data", clean_csv, "--response", "y", "--lambdas", bad)[0]
        assert code == 2


def test_predict(capsys, clean_csv, tmp_path):
    model = tmp_path / "m.json"
    assert run(capsys, "fit", "--data", clean_csv, "--response", "y", "--loss", "deviance",
               "--out", model)[0] == 0
    code, out, _ = run(capsys, "predict", "--model", model, "--data", clean_csv, "--response", "y")
    assert code == 0
    rows = list(csv.DictReader(out.splitlines()))
    prob = np.array([float(r["prob"]) for r in rows])
    cls = np.array([int(r["class"]) for r in rows])
    m = json.loads(model.read_text())
    d = logistic_data(100)
    t = d.X @ [m["coefficients"][f"x{j}"] for j in range(3)] + m["intercept"]
    # externally recomputed logistic(predictor) on the first five rows
    for i in range(5):
        assert prob[i] == pytest.approx(1 / (1 + np.exp(-t[i])), rel=1e-14)
    assert np.all((prob > 0) & (prob < 1))
    np.testing.assert_array_equal(cls, (t > 0).astype(int))
    # round trip against the in-process fit
    res = fit(d, FitConfig(loss=__import__("rslogit").LossSpec.deviance()))
    np.testing.assert_array_equal(prob, res.predict_proba(d.X))


def test_predict_zero_model(capsys, clean_csv, tmp_path):
    model = tmp_path / "zero.json"
    model.write_text(json.dumps({"coefficients": {"x0": 0.0, "x1": 0.0, "x2": 0.0},
                                 "intercept": 0.0}))
    out_csv = tmp_path / "p.csv"
    assert run(capsys, "predict", "--model", model, "--data", clean_csv, "--out", out_csv,
               "--response", "y")[0] == 0
    rows = list(csv.DictReader(out_csv.read_text().splitlines()))
    assert {r["prob"] for r in rows} == {"0.5"}
    assert {r["class"] for r in rows} == {"0"}
    model.write_text(json.dumps({"coefficients": {"zz": 1.0}}))
    assert run(capsys, "predict", "--model", model, "--data", clean_csv, "--response", "y")[0] == 3


SIM = ["simulate", "--scheme", "c0", "--n", "150", "--p", "40", "--reps", "10", "--seed", "7",
       "--estimators", "wm-mcp-rcv,m-lasso-lam=0.05", "--grid-size", "8"]


def test_simulate_outputs_deterministic(capsys, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(capsys, *SIM, "--out", a)[0] == 0
    assert run(capsys, *SIM, "--out", b)[0] == 0
    for name in ("summary.csv", "replications.csv", "config.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    lines = (a / "summary.csv").read_text().splitlines()
    assert lines[0] == "estimator,scheme,n,p,epsilon,m,pmse,mse,tpp,tnp,reps_used"
    assert len(lines) == 3
    reps = list(csv.DictReader((a / "replications.csv").read_text().splitlines()))
    assert len(reps) == 20
    cfg = json.loads((a / "config.json").read_text())
    assert cfg["replications"] == 10 and cfg["scenario"]["n"] == 150


def test_simulate_errors(capsys, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert run(capsys, *SIM, "--out", blocker / "sub")[0] == 3
    assert run(capsys, "simulate", "--reps", "5", "--out", tmp_path / "x")[0] == 2
    assert run(capsys, "simulate", "--estimators", "zz-mcp-cv", "--out", tmp_path / "x")[0] == 2
    assert run(capsys, "simulate", "--epsilon", "1.5", "--out", tmp_path / "x")[0] == 2


def test_console_script(clean_csv):
    proc = subprocess.run([sys.executable, "-m", "rslogit.cli", "fit", "--data", str(clean_csv),
                           "--response", "y"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["converged"] is True
    proc = subprocess.run([sys.executable, "-m", "rslogit.cli", "--version"],
                          capture_output=True, text=True)
    assert "0.1.0" in proc.stdout
