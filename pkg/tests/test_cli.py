import json

import pytest

from foldedwiener.cli import main
from foldedwiener.designs import read_design


def run(capsys, *argv):
    status = main([str(a) for a in argv])
    out = capsys.readouterr()
    return status, out.out, out.err


@pytest.fixture
def config(tmp_path):
    path = tmp_path / "brownian.json"
    path.write_text(json.dumps({"d": 1, "r": [0], "design": "grid", "n_list": [8, 16, 32, 64, 128, 256]}))
    return path


def test_kernel_eval(capsys):
    status, out, _ = run(capsys, "kernel", "eval", "--r", "0,0", "--t", "0.5,0.5", "--x", "0.25,1")
    assert status == 0 and out == "0.125\n"


def test_domain_error_exit_code(capsys, caplog):
    status, _, _ = run(capsys, "kernel", "eval", "--r", "0", "--t", "1.5", "--x", "0.5")
    assert status == 2 and "[0, 1]" in caplog.text


def test_design_gen_round_trip(capsys, tmp_path):
    path = tmp_path / "hc.txt"
    status, _, _ = run(capsys, "design", "gen", "--r", "0,0", "--design", "hyperbolic_cross", "--levels", "3", "--out", path)
    design = read_design(path)
    assert status == 0 and design.n == 49 and design.level == 3


def test_error_exact(capsys, tmp_path):
    path = tmp_path / "one.txt"
    path.write_text("# d=1 n=1 provenance=grid level=- seed=-\n1.0\n")
    status, out, _ = run(capsys, "error", "exact", "--r", "0", "--design-file", path)
    header, row = out.splitlines()
    assert status == 0 and header == "n,e_avg,e_wor_bound,quad_residual"
    assert float(row.split(",")[1]) == pytest.approx(6 ** -0.5, abs=1e-12)


def test_error_mc(capsys):
    status, out, _ = run(capsys, "error", "mc", "--r", "0", "--design", "grid", "--n-list", "4", "--mc-samples", "50", "--mc-resolution", "64")
    n, est, se, samples, res = out.splitlines()[1].split(",")
    assert status == 0 and (n, samples, res) == ("4", "50", "64") and float(se) > 0


def test_spectrum_and_tract(capsys):
    status, out, _ = run(capsys, "spectrum", "compute", "--r", "0", "--eig-m", "256")
    assert status == 0 and out.splitlines()[0] == "index,eigenvalue,cumulative,tail"
    assert len(out.splitlines()) == 1 + 32
    status, out, _ = run(capsys, "tract", "check", "--r", "0", "--eig-m", "1024", "--n-range", "10,100")
    verdict = json.loads(out)
    assert status == 0 and verdict["tractable"] and verdict["p_star"] == pytest.approx(2.0, abs=0.1)


def test_tract_window_too_short(capsys):
    status, _, _ = run(capsys, "tract", "check", "--r", "0", "--eig-m", "256", "--n-range", "4,20")
    assert status == 3


def test_curve_run_then_fit(capsys, config, tmp_path):
    csv_path = tmp_path / "curve.csv"
    status, _, _ = run(capsys, "curve", "run", "--config", config, "--out", csv_path)
    assert status == 0
    assert csv_path.read_text().splitlines()[0] == "n,e_avg,e_all,e_wor_bound,provenance,level"
    status, out, _ = run(capsys, "rate", "fit", "--curve", csv_path, "--no-log-term")
    fit = json.loads(out)
    assert status == 0 and set(fit) == {"slope", "log_power", "intercept", "residual"}
    assert fit["slope"] == pytest.approx(0.5, abs=1e-9)


def test_flags_override_config(capsys, config):
    status, out, _ = run(capsys, "curve", "run", "--config", config, "--n-list", "4,9")
    assert status == 0 and [line.split(",")[0] for line in out.splitlines()[1:]] == ["4", "9"]


def test_curve_run_is_byte_identical(capsys, config, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        run(capsys, "curve", "run", "--config", config, "--design", "random", "--seed", "5", "--out", path)
    assert a.read_bytes() == b.read_bytes()


def test_bad_config(capsys, caplog, tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"d": 1, "r": [0], "flavour": 1}')
    status, _, _ = run(capsys, "curve", "run", "--config", path)
    assert status == 2 and "flavour" in caplog.text


def test_rate_fit_short_curve(capsys, tmp_path):
    path = tmp_path / "short.csv"
    path.write_text("n,e_avg,e_all,e_wor_bound,provenance,level\n4,0.2,0.1,0.3,grid,0\n")
    status, _, _ = run(capsys, "rate", "fit", "--curve", path)
    assert status == 3


def test_compare(capsys, tmp_path):
    path = tmp_path / "cmp.json"
    path.write_text(json.dumps({"d": 1, "r": [0], "levels": [3, 4, 5, 6, 7, 8], "designs": ["grid", "hyperbolic_cross"]}))
    status, out, _ = run(capsys, "compare", "--config", path)
    report = json.loads(out)
    assert status == 0 and set(report["families"]) == {"grid", "hyperbolic_cross"}
    assert report["ratios"]["grid/hyperbolic_cross"]["ratio_grows"] is False


def test_missing_subcommand(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["curve"])
    assert exc.value.code == 2
