import csv
import json

import pytest

from vertexcalc.cli import RunConfig, main, parse_complex, parse_momenta, parse_partition, thread_cap


def _run(capsys, *argv):
    code = main(list(argv))
    return code, json.loads(capsys.readouterr().out)


def test_parse_complex_forms():
    assert parse_complex("1+2i").value() == 1 + 2j
    assert parse_complex("-i").value() == -1j
    assert parse_complex("0.5").value() == 0.5
    p = parse_complex("1@2")
    assert p.half_turns == 2 and p.value() == pytest.approx(1)
    with pytest.raises(ValueError):
        parse_complex("one")


def test_parse_momenta_and_partition():
    assert parse_momenta("1/2, 1/2, 1") == (0.5, 0.5, 1)
    with pytest.raises(ValueError):
        parse_momenta("1,1")
    assert parse_partition("1,2") == (2, 1) and parse_partition("") == ()


def test_run_config_validation():
    for bad in ({"tol": 0}, {"level": -1}, {"terms": 0}):
        with pytest.raises(ValueError):
            RunConfig("assoc", **bad)


def test_thread_cap(monkeypatch):
    monkeypatch.setenv("VERTEXCALC_THREADS", "3")
    assert thread_cap() == 3
    monkeypatch.setenv("VERTEXCALC_THREADS", "0")
    assert thread_cap() == 1


def test_missing_point_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["verify-delta", "--z2", "0.9"])
    assert exc.value.code == 2


def test_bad_tolerance_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["assoc", "--tol", "-1"])
    assert exc.value.code == 2


def test_verify_delta_outer_passes(capsys, tmp_path):
    out = tmp_path / "cells.csv"
    code, rep = _run(capsys, "verify-delta", "--id", "outer", "--z1", "1", "--z2", "0.9", "--grid", "2",
                     "--csv", str(out))
    assert code == 0 and rep["passed"]
    rows = list(csv.reader(out.open()))
    assert rows[0][:5] == ["id", "r", "s", "t", "side"] and len(rows) == 1 + 2 * 125


def test_verify_delta_boundary_fails(capsys):
    code, rep = _run(capsys, "verify-delta", "--id", "first", "--z1", "2", "--z2", "1", "--grid", "1")
    assert code == 1 and not rep["passed"]


def test_verify_delta_is_deterministic(capsys, monkeypatch):
    argv = ["verify-delta", "--id", "third", "--z1", "1", "--z2", "0.9", "--grid", "1"]
    monkeypatch.setenv("VERTEXCALC_THREADS", "1")
    _, a = _run(capsys, *argv)
    monkeypatch.setenv("VERTEXCALC_THREADS", "4")
    _, b = _run(capsys, *argv)
    for rep in (a, b):
        for r in rep["reports"]:
            r.pop("elapsed")
    assert a == b


def test_assoc_exit_codes(capsys):
    # with no intermediate levels only the vanishing-momentum case is exact
    code, rep = _run(capsys, "assoc", "--p", "0,0,0", "--level", "0")
    assert code == 0 and rep["passed"]
    code, rep = _run(capsys, "assoc", "--p", "1,1,0", "--max-level", "0")
    assert code == 0
    code, rep = _run(capsys, "assoc", "--p", "1,1,0", "--z1", "2", "--z2", "1")
    assert code == 1


def test_fit_examples(capsys, tmp_path):
    code, rep = _run(capsys, "fit", "--p", "1,1,0")
    assert code == 0 and rep["s"] == [pytest.approx(1, abs=1e-9)] and rep["residual"] < 1e-8
    code, rep = _run(capsys, "fit", "--p", "0,0,0")
    assert code == 0 and rep["r"] == [0] and rep["s"] == [0]
    planted = tmp_path / "planted.json"
    planted.write_text(json.dumps({"terms": [[-1, 3, 0], [0.5, 0, -2]]}))
    code, rep = _run(capsys, "fit", "--planted", str(planted))
    assert code == 0 and rep["exponents"] == [-1, 0.5] and rep["res"] == pytest.approx([3, 0], abs=1e-8)


def test_tau_exit_codes(capsys, tmp_path):
    out = tmp_path / "tau.json"
    assert main(["tau", "--v", "vacuum", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["passed"]
    code, rep = _run(capsys, "tau", "--v", "omega")
    assert code == 0
    code, _ = _run(capsys, "tau", "--z1", "2", "--z2", "1")
    assert code == 1
