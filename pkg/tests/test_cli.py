import json
import subprocess
import sys

import jsonschema
import pytest

from pmeanlab import cli


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def run_json(capsys, *argv):
    code, out, _ = run(capsys, *argv)
    return code, json.loads(out)


@pytest.fixture(scope="module")
def schema():
    return json.loads(cli.SCHEMA_PATH.read_text())


def test_pmean_examples(capsys, schema):
    code, doc = run_json(capsys, "pmean", "--field", "const:7", "--p", "4")
    assert code == 0 and doc["result"]["mean"] == pytest.approx(7.0)
    jsonschema.validate(doc, schema)
    code, doc = run_json(capsys, "pmean", "--field", "linear", "--p", "inf", "--x", "0,0")
    assert code == 0 and abs(doc["result"]["mean"]) < 1e-12
    code, doc = run_json(capsys, "pmean", "--field", "normsq", "--p", "2", "--N", "2", "--eps", "1")
    assert code == 0 and doc["result"]["mean"] == pytest.approx(0.5, abs=1e-8)
    assert doc["config"]["N"] == 2 and doc["config"]["eps"] == 1.0


def test_verify_examples(capsys, schema):
    code, doc = run_json(capsys, "verify", "--kind", "elliptic", "--field", "quadratic",
                         "--p", "4", "--N", "2", "--x", "0,0")
    assert code == 0 and doc["result"]["theoretical"] == pytest.approx(1 / 3)
    jsonschema.validate(doc, schema)
    code, doc = run_json(capsys, "verify", "--kind", "parabolic", "--field", "caloric", "--p", "2")
    assert code == 0 and doc["result"]["theoretical"] == 0.0
    code, _ = run_json(capsys, "verify", "--kind", "elliptic", "--field", "quadratic",
                       "--p", "4", "--x", "0,0", "--coefficient-scale", "2")
    assert code == 1


def test_verify_zero_gradient_is_numerical_failure(capsys):
    code, _, err = run(capsys, "verify", "--field", "normsq", "--p", "2", "--x", "0,0")
    assert code == 3 and "numerical failure" in err


def test_solve_examples(capsys, schema):
    code, doc = run_json(capsys, "solve", "--problem", "constant")
    assert code == 0 and doc["result"]["iterations_used"] == 1
    jsonschema.validate(doc, schema)
    code, doc = run_json(capsys, "solve", "--problem", "square", "--p", "2", "--max-iterations", "1")
    assert code == 4 and doc["result"]["converged"] is False
    code, doc = run_json(capsys, "solve", "--problem", "square", "--p", "2")
    assert code == 0 and doc["result"]["error_sup"] <= 2e-2


def test_oracle_check_low_order_fails(capsys):
    code, doc = run_json(capsys, "oracle-check", "--dimensions", "2", "--exponents", "1.5",
                         "--pairs", "2", "--order", "4", "--heat-order", "8")
    assert code == 1 and doc["result"]["failures"] > 0


def test_oracle_check_csv_rows(capsys):
    code, out, _ = run(capsys, "oracle-check", "--dimensions", "2", "--exponents", "2,3",
                       "--pairs", "2", "--format", "csv")
    assert code == 0
    body = [l for l in out.splitlines() if not l.startswith("#")]
    dims, exps, pairs = 1, 2, 2
    # four formulas per (N, p, pair), the golden C(alpha, beta) values
    # (four fixed plus one per exponent) and one mass row per N
    expected = dims * exps * pairs * 4 + dims * (4 + exps) + dims
    assert len(body) - 1 == expected


def test_compare_means_schema(capsys, schema):
    code, doc = run_json(capsys, "compare-means", "--pairs", "500", "--fields", "linear")
    jsonschema.validate(doc, schema)
    checks = doc["result"]["checks"]
    assert checks["contrast_average"] and checks["pmean_no_violation"]
    assert code == (0 if all(checks.values()) else 1)


@pytest.mark.parametrize("argv", [
    ["pmean", "--p", "0.5"],
    ["pmean", "--field", "nope"],
    ["solve", "--problem", "square", "--h", "0.1", "--eps", "0.05"],
    ["frobnicate"],
])
def test_config_errors(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2 and "configuration error" in err


def test_config_file_and_override(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\nfield = normsq\np = 2\neps = 0.5\n")
    code, doc = run_json(capsys, "pmean", "--config", str(cfg))
    assert code == 0 and doc["result"]["mean"] == pytest.approx(0.125)
    code, doc = run_json(capsys, "pmean", "--config", str(cfg), "--eps", "1")
    assert doc["result"]["mean"] == pytest.approx(0.5)
    bad = tmp_path / "bad.cfg"
    bad.write_text("colour = blue\n")
    assert run(capsys, "pmean", "--config", str(bad))[0] == 2


def test_out_file_and_csv_header(capsys, tmp_path):
    path = tmp_path / "out.csv"
    code, out, _ = run(capsys, "pmean", "--field", "const:3", "--format", "csv", "--out", str(path))
    assert code == 0 and out == ""
    text = path.read_text().splitlines()
    assert text[0] == "# command=pmean"
    assert "# order=16" in text and "# exit_code=0" in text
    header = [l for l in text if not l.startswith("#")]
    assert header[0] == "mean,residual,iterations,bracket_width,rule_order"
    assert header[1].split(",")[0] == "3.0" and len(header) == 2


def test_byte_identical_runs():
    argv = [sys.executable, "-m", "pmeanlab", "compare-means", "--pairs", "300", "--seed", "5"]
    a = subprocess.run(argv, capture_output=True)
    b = subprocess.run(argv, capture_output=True)
    assert a.stdout == b.stdout and a.stdout
