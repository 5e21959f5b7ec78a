import csv
import io
import json

import pytest

from fundsol.cli import compile_expression, main, parse_grid

LAP2 = "n = 2\nk = 1\n2,0 : 1\n0,2 : 1\n"
LAP3 = "n = 3\nk = 1\n2,0,0 : 1\n0,2,0 : 1\n0,0,2 : 1\n"


@pytest.fixture(scope="module")
def files(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    (d / "lap2.op").write_text(LAP2)
    (d / "lap3.op").write_text(LAP3)
    (d / "wave.op").write_text("n = 2\nk = 1\n2,0 : 1\n0,2 : -1\n")
    (d / "bq.op").write_text("n = 2\nk = 2\n4,0 : 1\n0,4 : 1\n")
    (d / "broken.op").write_text("n = 2\nk = 1\n2,0 = 1\n")
    assert main(["build", "--operator", str(d / "lap2.op"), "--out", str(d / "lap2.json")]) == 0
    assert main(["build", "--operator", str(d / "lap3.op"), "--out", str(d / "lap3.json")]) == 0
    return d


def run(capsys, argv):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_check(files, capsys):
    code, out, _ = run(capsys, ["check", "--operator", str(files / "lap2.op")])
    rep = json.loads(out)
    assert code == 0 and rep["margin"] == pytest.approx(1.0) and rep["n"] == 2
    code, out, _ = run(capsys, ["check", "--operator", str(files / "bq.op")])
    assert json.loads(out)["margin"] == pytest.approx(0.5, abs=1e-8)


def test_check_nonelliptic_exit_2(files, capsys):
    code, _, err = run(capsys, ["check", "--operator", str(files / "wave.op")])
    assert code == 2
    assert json.loads(err)["error"] == "NonElliptic"


def test_parse_error_names_field(files, capsys):
    code, _, err = run(capsys, ["check", "--operator", str(files / "broken.op")])
    assert code != 0
    assert json.loads(err)["field"] is not None


def test_missing_file(files, capsys):
    code, _, err = run(capsys, ["check", "--operator", str(files / "nope.op")])
    assert code == 1 and "error" in json.loads(err)


def test_eval_golden(files, capsys):
    code, out, _ = run(capsys, ["eval", "--table", str(files / "lap3.json"), "--grid", "1:1:1,0:0:1,0:0:1"])
    rows = json.loads(out)["rows"]
    assert code == 0 and rows[0]["S"] == pytest.approx(-0.0795775, abs=1e-7)


def test_eval_csv(files, capsys):
    code, out, _ = run(capsys, ["eval", "--table", str(files / "lap2.json"), "--grid", "0.5:1:3,0:0:1",
                                "--format", "csv", "--quantity", "S0"])
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["x1", "x2", "S0"] and len(rows) == 4


def test_series_golden(files, capsys):
    code, out, _ = run(capsys, ["series", "--table", str(files / "lap2.json"), "--format", "csv"])
    rows = list(csv.reader(io.StringIO(out)))
    b00 = [r for r in rows if r[:2] == ["b", "0 0"]][0]
    assert float(b00[2]) == pytest.approx(0.1591549, abs=1e-7)


def test_jump_golden(files, capsys):
    code, out, err = run(capsys, ["jump", "--table", str(files / "lap2.json"), "--boundary",
                                  "ellipse:a=2,b=1,n=256", "--density", "1+x1", "--beta", "1,0",
                                  "--format", "csv"])
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and float(rows[0]["predicted"]) == pytest.approx(-3.0)
    assert json.loads(err)["max_rel_error"] < 1e-2


def test_jump_bad_beta(files, capsys):
    code, _, err = run(capsys, ["jump", "--table", str(files / "lap2.json"), "--boundary", "circle:n=64",
                                "--beta", "1,0,0"])
    assert code == 1 and "beta" in json.loads(err)["message"]


def test_oracle(files, capsys):
    code, out, _ = run(capsys, ["oracle", "--operator", str(files / "lap2.op")])
    assert code == 0 and json.loads(out)["passed"]


def test_byte_identical(files, tmp_path):
    for name in ("a.json", "b.json"):
        assert main(["build", "--operator", str(files / "lap2.op"), "--out", str(tmp_path / name)]) == 0
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_expression_sandbox():
    f = compile_expression("1 + sin(x1) * 2", ["x1"])
    assert f({"x1": 0.0}) == 1.0
    with pytest.raises(ValueError):
        compile_expression("__import__('os')", ["x1"])
    with pytest.raises(ValueError):
        compile_expression("y + 1", ["x1"])


def test_grid_parse():
    g = parse_grid("0:1:3,2:2:1", 2)
    assert g.shape == (3, 2)
    with pytest.raises(ValueError):
        parse_grid("0:1:3", 2)
