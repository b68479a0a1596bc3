import csv
import io
import json

import pytest

from warpedpoisson import cli
from warpedpoisson.errors import BudgetExceededError


def invoke(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = cli.run_cli(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


def test_manifold_info():
    code, out, _ = invoke("manifold", "info", "--family", "space_form", "--r-max", "60")
    assert code == 0
    assert "non_parabolic" in out or "non-parabolic" in out


def test_poisson_euclid_prints_unit_value():
    code, out, _ = invoke("poisson", "--source", "expdecay", "1", "--r-max", "60")
    assert code == 0
    assert out.startswith("u(p) = 1")
    value = float(out.split("=")[1].split("+/-")[0])
    assert value == pytest.approx(1.0, rel=1e-7)


def test_poisson_divergent_is_a_result():
    code, out, _ = invoke("poisson", "--source", "power", "1.5", "--r-max", "400")
    assert code == 0
    assert "divergent" in out


def test_poisson_file_source(tmp_path):
    path = tmp_path / "f.csv"
    path.write_text("r,f\n" + "".join(f"{0.01 * k},{2.718281828459045 ** (-0.01 * k)}\n"
                                      for k in range(3001)))
    code, out, _ = invoke("poisson", "--source", "file", str(path), "--r-max", "60")
    assert code == 0
    assert float(out.split("=")[1].split("+/-")[0]) == pytest.approx(1.0, rel=1e-6)


def test_criterion_hyperbolic_converges():
    code, out, _ = invoke("criterion", "--family", "space_form", "--zeta", "power", "1.5")
    assert code == 0
    first, rest = out.split("\n", 1)
    assert first.startswith("verdict Converges")
    report = json.loads(rest)
    assert report["result"]["verdict"] == "Converges"
    assert report["command"] == "criterion"


def test_criterion_barta_on_euclid_exits_1():
    code, _, err = invoke("criterion", "--family", "euclidean", "--mode", "barta")
    assert code == 1
    assert "numerical" in err


def test_numerical_error_exits_2(monkeypatch):
    def boom(conf):
        raise BudgetExceededError("quadrature budget exhausted")
    monkeypatch.setitem(cli.COMMANDS, "manifold", boom)
    code, _, err = invoke("manifold", "info")
    assert code == 2
    assert "budget" in err


def test_verify_failure_exits_3(monkeypatch):
    monkeypatch.setattr(cli, "run", lambda suite, resolution: {
        "schema_version": 1, "passed": False,
        "suites": [{"suite": "flux", "passed": False, "checks": [{"check": "x", "passed": False}]}]})
    code, out, _ = invoke("verify", "--suite", "flux")
    assert code == 3
    assert "flux: FAIL" in out


def test_verify_single_suite_passes():
    code, out, _ = invoke("verify", "--suite", "flux")
    assert code == 0 and out.strip() == "flux: PASS"


def test_unknown_suite_exits_1():
    code, _, err = invoke("verify", "--suite", "nope")
    assert code == 1 and "unknown suite" in err


def test_bad_argument_exits_1():
    code, _, err = invoke("spectrum", "--exterior", "abc")
    assert code == 1
    assert "argv" in err


def test_config_unknown_key_reports_path(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"manifold": {"family": "euclidean", "prams": {}}}))
    code, _, err = invoke("manifold", "info", "--config", str(path))
    assert code == 1
    assert "manifold.prams" in err


def test_config_bad_value_reports_path(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"manifold": {"family": "power_exp", "params": {"gamma": -1}}}))
    code, _, err = invoke("manifold", "info", "--config", str(path))
    assert code == 1
    assert "manifold.params.gamma" in err


def test_config_malformed_json(tmp_path):
    path = tmp_path / "c.json"
    path.write_text("{not json")
    code, _, err = invoke("manifold", "info", "--config", str(path))
    assert code == 1 and "invalid JSON" in err


def test_config_used_and_flags_override(tmp_path):
    path = tmp_path / "c.json"
    out_json = tmp_path / "r.json"
    path.write_text(json.dumps({"manifold": {"family": "euclidean", "r_max": 60},
                                "spectrum": {"domain": "exterior", "R": 1.0}}))
    code, _, _ = invoke("spectrum", "--config", str(path), "--family", "space_form",
                        "--json", str(out_json))
    assert code == 0
    report = json.loads(out_json.read_text())
    assert report["config"]["manifold"]["family"] == "space_form"
    assert report["config"]["spectrum"]["R"] == 1.0
    assert 1.0 <= report["result"]["value"] < 1.01


def test_green_csv_export():
    code, out, _ = invoke("green", "--family", "space_form", "--r-max", "30", "--export", "csv")
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["r", "G"]
    assert all(len(r) == 2 for r in rows[1:])
    float(rows[1][0]), float(rows[1][1])


def test_dirichlet_needs_radius():
    code, _, err = invoke("green", "--kind", "dirichlet")
    assert code == 1 and "green.R" in err


def test_csv_file_written(tmp_path):
    target = tmp_path / "t.csv"
    code, _, _ = invoke("manifold", "info", "--csv", str(target))
    assert code == 0
    text = target.read_text()
    assert text.splitlines()[0] == "R,K,theta"
    assert ";" not in text


def test_json_byte_identical(tmp_path):
    target = tmp_path / "r.json"
    runs = []
    for _ in range(2):
        assert invoke("poisson", "--source", "expdecay", "2", "--family", "space_form",
                      "--r-max", "60", "--json", str(target))[0] == 0
        runs.append(target.read_bytes())
    assert runs[0] == runs[1]
    report = json.loads(runs[0])
    assert list(report) == ["schema_version", "tool_version", "command", "config", "result"]


@pytest.mark.parametrize("command", ["manifold", "spectrum", "green", "poisson", "criterion",
                                     "verify", "sharpness"])
def test_help_documents_defaults(command, capsys):
    with pytest.raises(SystemExit) as exc:
        cli.build_parser().parse_args([command, "--help"])
    assert exc.value.code == 0
    text = capsys.readouterr().out
    assert "default" in text
    if command not in ("verify",):
        assert "--json" in text


def test_help_mentions_units(capsys):
    with pytest.raises(SystemExit):
        cli.build_parser().parse_args(["manifold", "--help"])
    assert "geodesic units" in capsys.readouterr().out


def test_sharpness_command(tmp_path):
    target = tmp_path / "s.csv"
    code, out, _ = invoke("sharpness", "--gamma", "2", "--step", "0.1", "--csv", str(target))
    assert code == 0
    assert "detected threshold 0" in out or "detected threshold -0" in out
    assert target.read_text().splitlines()[0] == "alpha,status,growth_exponent,value_estimate"


def test_sharpness_range_must_straddle():
    code, _, _ = invoke("sharpness", "--gamma", "2", "--alpha-min", "0.5", "--alpha-max", "0.9")
    assert code == 1
