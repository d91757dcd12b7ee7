import csv
import io
import json
import math

import mpmath as mp
import pytest

from gapprob.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_finite_lue_symbolic(capsys):
    code, out, _ = run(capsys, "finite", "--ensemble", "lue", "--alpha", "0", "--n", "2", "--t", "0.5")
    assert code == 0
    (row,) = rows(out)
    assert mp.mpf(row["log_p"]) == -1


def test_finite_zero_wall(capsys):
    code, out, _ = run(capsys, "finite", "--ensemble", "lue", "--alpha", "0.5", "--n", "1", "--t", "0")
    assert code == 0 and mp.mpf(rows(out)[0]["log_p"]) == 0


def test_finite_gue_equals_split_laguerre(capsys):
    _, out, _ = run(capsys, "finite", "--ensemble", "gue", "--n", "4", "--a", "0.3")
    gue = mp.mpf(rows(out)[0]["log_p"])
    # n = 4 splits into two 2 x 2 problems with alpha = -1/2 and +1/2 at t = a^2
    parts = []
    for alpha in ("-0.5", "0.5"):
        _, out, _ = run(capsys, "finite", "--ensemble", "lue", "--n", "2", "--alpha", alpha, "--t", "0.09")
        parts.append(mp.mpf(rows(out)[0]["log_p"]))
    assert abs(gue - sum(parts)) < 1e-30


def test_finite_grid_keeps_order(capsys):
    code, out, _ = run(capsys, "--workers", "2", "finite", "--ensemble", "jue", "--n", "3", "--alpha", "0.5",
                       "--beta", "1", "--t", "0.3", "0.1", "0.2")
    assert code == 0
    assert [float(r["gap"]) for r in rows(out)] == [0.3, 0.1, 0.2]


def test_asympt(capsys):
    code, out, _ = run(capsys, "asympt", "--kind", "lue", "--alpha", "0", "--s", "40")
    assert code == 0 and mp.mpf(rows(out)[0]["value"]) == -10
    code, out, _ = run(capsys, "--precision-bits", "128", "asympt", "--kind", "gue", "--b", "8")
    row = rows(out)[0]
    with mp.workprec(128):
        b = mp.mpf(8)
        wd = mp.log(2) / 12 + 3 * mp.zeta(-1, derivative=1)
        expected = -b * b / 2 - mp.log(b) / 4 + wd + 1 / (32 * b ** 2) + 5 / (128 * b ** 4) + 131 / (768 * b ** 6)
        assert abs(mp.mpf(row["value"]) - expected) < 1e-30
    code, out, _ = run(capsys, "asympt", "--kind", "jue", "--alpha", "0.5", "--beta", "1", "--s", "100")
    assert code == 0 and math.isfinite(float(rows(out)[0]["value"]))


def test_fredholm(capsys):
    code, out, _ = run(capsys, "fredholm", "--kernel", "sine", "--b", "0.0001")
    assert code == 0
    last = rows(out)[-1]
    assert abs(float(last["log_det"]) - math.log(1 - 2e-4 / math.pi)) < 1e-12
    code, out, _ = run(capsys, "fredholm", "--kernel", "bessel", "--alpha", "0.5", "--s", "0")
    assert code == 0 and mp.mpf(rows(out)[-1]["log_det"]) == 0
    code, out, _ = run(capsys, "fredholm", "--kernel", "sine", "--b", "1.5", "--check-product")
    assert code == 0 and mp.mpf(rows(out)[0]["residual"]) <= 1e-10


def test_residual_commands(capsys):
    code, out, _ = run(capsys, "residual", "--eq", "pv_sigma", "--source", "finite", "--n", "4", "--alpha", "0.5",
                       "--t", "0.3")
    assert code == 0 and mp.mpf(rows(out)[0]["relative"]) <= 1e-6
    code, out, _ = run(capsys, "residual", "--eq", "jmms", "--source", "series", "--tau", "0")
    assert code == 0 and mp.mpf(rows(out)[0]["residual"]) == 0
    code, out, _ = run(capsys, "residual", "--eq", "pvi_sigma", "--source", "finite", "--n", "3", "--alpha", "0.5",
                       "--beta", "1", "--t", "0.2")
    assert code == 0 and mp.mpf(rows(out)[0]["relative"]) <= 1e-6


def test_json_and_output_file(capsys, tmp_path):
    target = tmp_path / "out.json"
    code, out, _ = run(capsys, "--format", "json", "--output", str(target), "asympt", "--kind", "lue",
                       "--alpha", "0.5", "--s", "10", "20")
    assert code == 0 and out == ""
    data = json.loads(target.read_text())
    assert data["command"] == "asympt" and len(data["rows"]) == 2
    assert set(data["columns"]) == set(data["rows"][0])


def test_determinism(capsys):
    argv = ("--precision-bits", "200", "finite", "--ensemble", "lue", "--n", "3", "--alpha", "0.5", "--t", "0.4")
    assert run(capsys, *argv)[1] == run(capsys, *argv)[1]


def test_env_precision(capsys, monkeypatch):
    monkeypatch.setenv("GAPPROB_PRECISION_BITS", "96")
    _, out, _ = run(capsys, "--format", "json", "asympt", "--kind", "lue", "--alpha", "0.5", "--s", "10")
    assert json.loads(out)["precision_bits"] == 96
    _, out, _ = run(capsys, "--precision-bits", "80", "--format", "json", "asympt", "--kind", "lue",
                    "--alpha", "0.5", "--s", "10")
    assert json.loads(out)["precision_bits"] == 80


def test_exit_codes(capsys):
    code, _, err = run(capsys, "finite", "--ensemble", "lue", "--n", "2", "--t", "-1")
    assert code == 2 and "error" in err
    code, _, err = run(capsys, "--precision-bits", "53", "finite", "--ensemble", "lue", "--n", "12",
                       "--alpha", "0.5", "--t", "0.3", "--method", "hankel")
    assert code == 3 and "bits" in err
    code, _, _ = run(capsys, "--precision-bits", "20", "asympt", "--kind", "lue", "--alpha", "0", "--s", "4")
    assert code == 2
    with pytest.raises(SystemExit):
        main(["finite"])


def test_verify_identities(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "identities")
    assert code == 0
    assert all(r["status"] == "PASS" for r in rows(out))
