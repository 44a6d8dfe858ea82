import csv
import io
import json
import math
import subprocess
import sys

import pytest

from shannon_bounds import cli
from shannon_bounds import dist_core as dc
from shannon_bounds import sourcefile as sf


@pytest.fixture
def files(tmp_path):
    out = {}
    for name, src in [("gaussian", dc.Gaussian(0, 1)), ("uniform", dc.Uniform(0, 1)),
                      ("laplace", dc.Laplace(0, 1)),
                      ("bigauss", dc.BivariateGaussian((1, 1), 0.5))]:
        path = tmp_path / f"{name}.json"
        sf.dump_source(src, path, with_functionals=False)
        out[name] = str(path)
    bad = tmp_path / "bad.json"
    bad.write_text('{"family": "gaussian", "mean": 0}')
    out["bad"] = str(bad)
    return out


def run(capsys, *argv):
    code = cli.main(list(argv))
    cap = capsys.readouterr()
    return code, cap.out, cap.err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


# --- documented examples ------------------------------------------------------------


def test_classic_gaussian_row(files, capsys):
    code, out, _ = run(capsys, "bounds", "classic", "--source", files["gaussian"], "--delta", "0.25")
    assert code == 0
    (row,) = rows(out)
    assert float(row["lower_nats"]) == pytest.approx(0.693147180560, abs=1e-12)
    assert float(row["upper_nats"]) == pytest.approx(0.693147180560, abs=1e-12)
    assert row["lower_valid"] == "true" and float(row["gap_nats"]) == 0.0


def test_gray_wyner_row(files, capsys):
    code, out, _ = run(capsys, "bounds", "gray-wyner", "--source", files["bigauss"],
                       "--delta", "0.75", "--rp", "0")
    assert code == 0
    (row,) = rows(out)
    assert row["regime"] == "high"
    assert float(row["rp"]) == 0.0
    assert float(row["lower_nats"]) == pytest.approx(0.5 * math.log(1.5), abs=1e-12)


def test_uniform_sweep_with_oracle(files, capsys):
    code, out, _ = run(capsys, "bounds", "classic", "--source", files["uniform"],
                       "--sweep", "0.001:0.08:4", "--oracle")
    assert code == 0
    table = rows(out)
    assert [float(r["delta"]) for r in table] == pytest.approx([0.001, 0.027333333, 0.053666667, 0.08])
    for r in table:
        assert float(r["lower_nats"]) - 5e-3 <= float(r["oracle_nats"]) <= float(r["upper_nats"]) + 5e-3


# --- columns and formats -------------------------------------------------------------


def test_header_columns(files, capsys):
    _, out, _ = run(capsys, "bounds", "ceo", "--source", files["gaussian"], "--noise-var", "1",
                    "--agents", "1,2", "--delta", "0.5,0.7")
    lines = out.splitlines()
    assert lines[0] == ("delta,m,lower_nats,upper_nats,lower_valid,upper_valid,gap_nats,regime")
    assert [r["m"] for r in rows(out)] == ["1", "2", "1", "2"]


def test_bits_flag(files, capsys):
    _, out, _ = run(capsys, "bounds", "classic", "--source", files["gaussian"], "--delta", "0.25", "--bits")
    (row,) = rows(out)
    assert float(row["lower_bits"]) == pytest.approx(1.0, abs=1e-12)


def test_invalid_side_printed_as_nan(files, capsys):
    _, out, _ = run(capsys, "bounds", "awgn-remote", "--source", files["gaussian"],
                    "--noise-var", "1", "--delta", "0.4")
    (row,) = rows(out)
    assert row["lower_nats"] == "nan" and row["lower_valid"] == "false"


def test_vector_delta_pair(files, capsys):
    _, out, _ = run(capsys, "bounds", "vector", "--source", files["bigauss"], "--delta", "0.1,0.1")
    (row,) = rows(out)
    assert row["delta"] == "0.1;0.1"
    assert float(row["lower_nats"]) == pytest.approx(0.5 * math.log(75), abs=1e-9)


def test_mmse_takes_no_grid(files, capsys):
    code, out, _ = run(capsys, "bounds", "mmse", "--source", files["gaussian"], "--noise-var", "1")
    assert code == 0
    assert float(rows(out)[0]["lower_nats"]) == pytest.approx(0.5)


def test_oracle_subcommand(files, capsys):
    code, out, _ = run(capsys, "oracle", "remote", "--source", files["gaussian"],
                       "--noise-var", "1", "--delta", "0.75")
    assert code == 0
    assert out.splitlines()[0] == "delta,oracle_nats"
    assert float(rows(out)[0]["oracle_nats"]) == pytest.approx(0.5 * math.log(2), abs=1e-2)


def test_out_file(files, capsys, tmp_path):
    path = tmp_path / "curve.csv"
    code, out, _ = run(capsys, "bounds", "classic", "--source", files["gaussian"],
                       "--delta", "0.25", "--out", str(path))
    assert code == 0 and out == ""
    assert path.read_text().startswith("delta,lower_nats")


def test_concurrent_sweep_is_deterministic(files, capsys):
    argv = ["bounds", "classic", "--source", files["uniform"], "--sweep", "0.002:0.06:4",
            "--oracle", "--grid-n", "256"]
    _, serial, _ = run(capsys, *argv)
    _, parallel, _ = run(capsys, *argv, "--jobs", "3")
    assert serial == parallel


# --- describe ----------------------------------------------------------------------


def test_describe_round_trip(files, capsys, tmp_path):
    code, out, _ = run(capsys, "describe", files["laplace"])
    assert code == 0
    path = tmp_path / "again.json"
    path.write_text(out)
    spec = json.loads(out)
    again = sf.functionals(sf.load_source(path))
    for key, val in spec["functionals"].items():
        assert again[key] == pytest.approx(val, abs=1e-12)


# --- exit codes --------------------------------------------------------------------


@pytest.mark.parametrize("argv", [
    ["bounds", "classic", "--delta", "0.25"],
    ["bounds", "classic", "--source", "{bad}", "--delta", "0.25"],
    ["bounds", "classic", "--source", "{gaussian}", "--delta", "0.5,0.25"],
    ["bounds", "classic", "--source", "{gaussian}", "--delta", "-1"],
    ["bounds", "classic", "--source", "{gaussian}", "--sweep", "0.1:0.01:3"],
    ["bounds", "classic", "--source", "{gaussian}"],
    ["bounds", "classic", "--source", "{bigauss}", "--delta", "0.25"],
    ["bounds", "teleport", "--source", "{gaussian}", "--delta", "0.25"],
    ["bounds", "gray-wyner", "--source", "{bigauss}", "--delta", "0.25", "--oracle"],
    ["bounds", "ceo", "--source", "{gaussian}", "--delta", "0.25", "--noise-var", "1"],
    ["bounds", "remote", "--source", "{gaussian}", "--delta", "0.25"],
])
def test_input_errors_exit_2(files, capsys, argv):
    code, out, err = run(capsys, *[a.format(**files) for a in argv])
    assert code == 2
    assert out == "" and err.startswith("error:")


def test_infeasible_exit_3(files, capsys):
    code, _, err = run(capsys, "bounds", "remote", "--source", files["gaussian"],
                       "--noise-var", "1", "--delta", "0.25")
    assert code == 3
    assert "remote" in err


def test_numerical_failure_exit_4(files, capsys, monkeypatch):
    from shannon_bounds.errors import NumericalFailure

    def boom(*a, **k):
        raise NumericalFailure("entropy quadrature did not converge")

    monkeypatch.setattr(cli.bp, "classic_rd_bounds", boom)
    code, _, err = run(capsys, "bounds", "classic", "--source", files["gaussian"], "--delta", "0.25")
    assert code == 4
    assert "entropy quadrature" in err


def test_argparse_usage_error_exits_2():
    with pytest.raises(SystemExit) as exc:
        cli.main(["validate", "nonsense"])
    assert exc.value.code == 2


def test_validate_exit_codes(capsys, monkeypatch):
    from shannon_bounds import validation
    code, out, _ = run(capsys, "validate", "constructions")
    assert code == 0 and "PASS" in out
    bad = validation.CheckResult("tightness", "forced failure", False, 1.0, 1e-9, 1)
    monkeypatch.setattr(cli.validation, "run_suite", lambda name, jobs: [bad])
    code, out, _ = run(capsys, "validate", "tightness")
    assert code == 1 and "FAIL" in out


def test_module_entry_point(files):
    res = subprocess.run([sys.executable, "-m", "shannon_bounds.cli", "bounds", "classic",
                          "--source", files["gaussian"], "--delta", "0.25"],
                         capture_output=True, text=True, check=True)
    assert res.stdout.splitlines()[1].startswith("0.25,0.69314718056")
