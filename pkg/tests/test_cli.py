import csv
import subprocess
import sys

import pytest

from iterfunc.cli import main


def read(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


@pytest.fixture(scope="module")
def samples(tmp_path_factory):
    d = tmp_path_factory.mktemp("sim")
    assert main(["simulate", "--design", "1", "--n", "300", "--seed", "1", "--out-dir", str(d)]) == 0
    return d


def test_simulate_writes_two_samples(samples):
    for name in ("sample1.csv", "sample2.csv"):
        rows = read(samples / name)
        assert rows[0] == ["q", "p"] and len(rows) == 301


def test_simulate_appendix_has_covariates(tmp_path):
    assert main(["simulate", "--design", "appendix", "--n", "60", "--out-dir", str(tmp_path)]) == 0
    assert read(tmp_path / "sample2.csv")[0] == ["q", "p", "x"]


def run_estimate(samples, out, *extra):
    return main(["estimate", "--sample1", str(samples / "sample1.csv"),
                 "--sample2", str(samples / "sample2.csv"), "--design", "1",
                 "--out-dir", str(out), *extra])


def test_estimate_outputs(samples, tmp_path):
    assert run_estimate(samples, tmp_path) == 0
    lam = read(tmp_path / "lambda_grid.csv")
    util = read(tmp_path / "utility_grid.csv")
    assert lam[0] == util[0] == ["point", "estimate", "ci_lo", "ci_hi"]
    assert len(lam) == 200 and lam[1][2] == "" and lam[1][3] == ""
    summary = dict(read(tmp_path / "summary.csv")[1:])
    # quantities are shifted by their minimum, so the boundary ratio is taken at q_lower > 0
    assert float(summary["tau1"]) == pytest.approx(2.0, abs=0.05)
    assert float(summary["q_lower"]) > 0


def test_estimate_byte_identical(samples, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run_estimate(samples, a) == 0 and run_estimate(samples, b) == 0
    for name in ("lambda_grid.csv", "utility_grid.csv", "summary.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_config_file_and_flag_precedence(samples, tmp_path):
    cfg = tmp_path / "c.txt"
    cfg.write_text("grid_points=21\nquadrature_points=64\n")
    assert run_estimate(samples, tmp_path / "o1", "--config", str(cfg)) == 0
    assert len(read(tmp_path / "o1" / "lambda_grid.csv")) == 22
    assert run_estimate(samples, tmp_path / "o2", "--config", str(cfg), "--grid-points", "31") == 0
    assert len(read(tmp_path / "o2" / "lambda_grid.csv")) == 32


def test_invalid_config_exit_status(samples, tmp_path, capsys):
    cfg = tmp_path / "bad.txt"
    cfg.write_text("alpha_lo=0.9\nalpha_hi=0.1\n")
    assert run_estimate(samples, tmp_path, "--config", str(cfg)) == 1
    assert "alpha_lo" in capsys.readouterr().err


def test_missing_sample_reports_error(tmp_path, capsys):
    code = main(["estimate", "--sample1", str(tmp_path / "x.csv"),
                 "--sample2", str(tmp_path / "y.csv"), "--design", "1"])
    assert code == 1 and "not found" in capsys.readouterr().err


def test_unknown_subcommand():
    with pytest.raises(SystemExit) as exc:
        main(["fit"])
    assert exc.value.code == 2


def test_env_out_dir(samples, tmp_path, monkeypatch):
    monkeypatch.setenv("ITERFUNC_OUT_DIR", str(tmp_path / "env"))
    assert main(["estimate", "--sample1", str(samples / "sample1.csv"),
                 "--sample2", str(samples / "sample2.csv"), "--design", "1"]) == 0
    assert (tmp_path / "env" / "lambda_grid.csv").exists()


def test_bootstrap_fills_ci_columns(samples, tmp_path):
    code = main(["bootstrap", "--sample1", str(samples / "sample1.csv"),
                 "--sample2", str(samples / "sample2.csv"), "--design", "1",
                 "--bootstrap-reps", "100", "--grid-points", "21", "--out-dir", str(tmp_path)])
    assert code == 0
    rows = read(tmp_path / "lambda_grid.csv")[1:]
    assert all(float(r[2]) <= float(r[3]) for r in rows)


def test_elasticity_grid(samples, tmp_path):
    code = main(["elasticity", "--sample1", str(samples / "sample1.csv"),
                 "--sample2", str(samples / "sample2.csv"), "--design", "1",
                 "--points", "10", "--out-dir", str(tmp_path)])
    assert code == 0
    rows = read(tmp_path / "elasticity_grid.csv")[1:]
    assert len(rows) == 10 and all(float(r[1]) < 0 for r in rows)


def test_schedule_coefficients(samples, tmp_path):
    code = run_estimate(samples, tmp_path)
    code2 = main(["estimate", "--sample1", str(samples / "sample1.csv"),
                  "--sample2", str(samples / "sample2.csv"),
                  "--schedule1", "0,1,-0.5,0.1666666666666666667", "--schedule2", "0,2,-0.5",
                  "--out-dir", str(tmp_path / "coef")])
    assert code == code2 == 0
    assert read(tmp_path / "lambda_grid.csv") == read(tmp_path / "coef" / "lambda_grid.csv")


def test_covariate_estimate(tmp_path):
    assert main(["simulate", "--design", "appendix", "--n", "900", "--out-dir", str(tmp_path)]) == 0
    code = main(["estimate", "--sample1", str(tmp_path / "sample1.csv"),
                 "--sample2", str(tmp_path / "sample2.csv"), "--out-dir", str(tmp_path / "o")])
    assert code == 0
    for x in range(3):
        assert (tmp_path / "o" / f"eps_cdf_x{x}.csv").exists()


def test_montecarlo_table(tmp_path):
    code = main(["montecarlo", "--design", "1", "--n", "200", "--reps", "10", "--seed", "7",
                 "--out-dir", str(tmp_path)])
    assert code == 0
    rows = read(tmp_path / "montecarlo_design1.csv")
    assert rows[0] == ["design", "n", "reps", "metric", "value"]
    metrics = {r[3] for r in rows[1:]}
    assert {"lambda_err", "utility_err", "tau1_err"} <= metrics


def test_module_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "iterfunc", "simulate", "--design", "2",
                          "--n", "50", "--seed", "1", "--out-dir", str(tmp_path)],
                         capture_output=True, text=True)
    assert out.returncode == 0, out.stderr
    assert (tmp_path / "sample1.csv").exists()
