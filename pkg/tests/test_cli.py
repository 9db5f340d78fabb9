import csv
import io
import json
import math
import subprocess
import sys
from pathlib import Path

import jsonschema
import pytest

from kext import cli
from kext.errors import NumericError, TieError
from kext.parents import DomainTag
from kext.special import EULER_GAMMA as G

SCHEMA = json.loads((Path(__file__).resolve().parents[1] / "docs" / "report.schema.json").read_text())


def run(args, capsys):
    code = cli.main(args)
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_laws_examples(capsys):
    for args, expected in [
        (["--family", "gumbel", "--k", "2"], 1.1544313),
        (["--family", "frechet", "--alpha", "1", "--k", "2"], 0.7316470),
        (["--family", "weibull", "--alpha", "1", "--k", "2"], 1.5772157),
    ]:
        code, out, _ = run(["laws", *args], capsys)
        assert code == 0
        (row,) = rows(out)
        assert float(row["h_closed_form"]) == pytest.approx(expected, abs=1e-7)
        assert float(row["abs_diff"]) <= 1e-8


def test_laws_default_grid(capsys):
    code, out, _ = run(["laws", "--k", "1,2"], capsys)
    assert code == 0
    table = rows(out)
    assert len(table) == (4 + 4 + 1) * 2
    assert list(table[0]) == cli.COLUMNS["laws"]


def test_laws_check_failure_exit(capsys):
    code, out, _ = run(["laws", "--family", "frechet", "--alpha", "0.5", "--k", "6",
                        "--tol", "1e-300"], capsys)
    assert code == cli.EXIT_CHECK
    assert rows(out)


@pytest.mark.parametrize("args", [
    ["laws", "--alpha", "0"],
    ["laws", "--alpha", "x"],
    ["laws", "--k", "0"],
    ["laws", "--k", ""],
    ["laws", "--family", "cauchy"],
    ["laws", "--tol", "-1"],
    ["laws", "--format", "xml"],
    ["frobnicate"],
    [],
])
def test_usage_errors(args, capsys):
    code, _, _ = run(args, capsys)
    assert code == 2


def test_converge_pareto(capsys):
    code, out, _ = run(["converge", "--parent", "pareto:alpha=2", "--k", "2",
                        "--schedule", "100,1000,10000"], capsys)
    assert code == 0
    table = rows(out)
    assert len(table) == 3
    gaps = [float(r["gap"]) for r in table]
    assert gaps[0] > gaps[1] > gaps[2]
    assert list(table[0]) == cli.COLUMNS["converge"]


def test_converge_uniform_target(capsys):
    code, out, _ = run(["converge", "--parent", "uniform", "--k", "2"], capsys)
    assert code == 0
    targets = {float(r["target"]) for r in rows(out)}
    assert len(targets) == 1
    assert targets.pop() == pytest.approx(1 + G, abs=1e-15)


def test_converge_unknown_parent_no_file(tmp_path, capsys):
    out = tmp_path / "report.csv"
    code, _, err = run(["converge", "--parent", "bogus", "--k", "2", "--out", str(out)], capsys)
    assert code == 2
    assert not out.exists()
    assert "bogus" in err


def test_converge_classification_failure(monkeypatch, tmp_path, capsys):
    monkeypatch.setattr(cli, "classify_domain", lambda d: DomainTag("unknown"))
    out = tmp_path / "report.csv"
    code, _, err = run(["converge", "--parent", "exp", "--k", "2", "--out", str(out)], capsys)
    assert code == 3
    assert "could not be determined" in err
    assert not out.exists()


def test_classification_numeric_failure(monkeypatch, capsys):
    def boom(d):
        raise NumericError("non-finite ratio", {"probe": 1.0})

    monkeypatch.setattr(cli, "classify_domain", boom)
    code, _, _ = run(["classify", "--parent", "exp"], capsys)
    assert code == 3


def test_classification_disagreement(monkeypatch, capsys):
    monkeypatch.setattr(cli, "classify_domain", lambda d: DomainTag("frechet", 3.0))
    code, _, err = run(["finite", "--parent", "exp", "--n", "100", "--k", "2"], capsys)
    assert code == 3
    assert "declares" in err


def test_converge_non_decreasing_exit(monkeypatch, capsys):
    from kext.finite_n import ConvergenceReport
    monkeypatch.setattr(ConvergenceReport, "gaps_decreasing", lambda self: False)
    code, out, _ = run(["converge", "--parent", "exp", "--k", "2", "--schedule", "10,100"], capsys)
    assert code == cli.EXIT_CHECK
    assert len(rows(out)) == 2


def test_converge_bad_schedule(capsys):
    assert run(["converge", "--parent", "exp", "--schedule", "100,10"], capsys)[0] == 2
    assert run(["converge", "--parent", "exp", "--k", "5", "--schedule", "3,10"], capsys)[0] == 2


def test_i1_examples(capsys):
    code, out, _ = run(["i1", "--k", "2", "--schedule", "10,100,1000"], capsys)
    assert code == 0
    gaps = [float(r["gap"]) for r in rows(out)]
    assert gaps[-1] < gaps[0]
    code, out, _ = run(["i1", "--k", "2", "--schedule", "1000000"], capsys)
    assert float(rows(out)[0]["gap"]) < 1e-4
    code, out, _ = run(["i1", "--k", "3"], capsys)
    limits = {float(r["i1_limit"]) for r in rows(out)}
    assert len(limits) == 1
    limit = limits.pop()
    assert limit == pytest.approx(-math.log(2) - 2 * G, abs=1e-14)
    assert limit == pytest.approx(-1.8475785, abs=1e-7)


@pytest.mark.parametrize("args", [["--k", "2", "--schedule", "2,10"],
                                  ["--k", "10", "--schedule", "10,100"]])
def test_i1_k_too_large(args, capsys):
    assert run(["i1", *args], capsys)[0] == 2


SIM = ["simulate", "--parent", "exp", "--k", "2", "--n", "100000", "--count", "200000", "--seed", "7"]


def test_simulate_example(capsys):
    code, out, _ = run(SIM, capsys)
    assert code == 0
    (row,) = rows(out)
    assert row["inside_ci"] == "true"
    assert float(row["ks_distance"]) < 0.01
    assert float(row["ci_low"]) <= 2 * G <= float(row["ci_high"])


def test_simulate_count_floor(capsys):
    assert run(["simulate", "--parent", "exp", "--k", "2", "--count", "10"], capsys)[0] == 2


def test_simulate_tie_exit(monkeypatch, capsys):
    def ties(*a, **kw):
        raise TieError(12)

    monkeypatch.setattr(cli, "mc_convergence", ties)
    code, _, err = run(["simulate", "--parent", "exp", "--count", "10000"], capsys)
    assert code == 4
    assert "12" in err


def test_seed_from_environment(monkeypatch, capsys):
    base = ["simulate", "--parent", "uniform", "--k", "1", "--n", "1000", "--count", "10000"]
    monkeypatch.setenv("KEXT_SEED", "5")
    _, env_out, _ = run(base, capsys)
    _, flag_out, _ = run([*base, "--seed", "5"], capsys)
    assert env_out == flag_out
    assert rows(env_out)[0]["seed"] == "5"
    monkeypatch.setenv("KEXT_SEED", "abc")
    assert run(base, capsys)[0] == 2
    monkeypatch.delenv("KEXT_SEED")
    _, zero_out, _ = run(base, capsys)
    assert rows(zero_out)[0]["seed"] == "0"


def test_simulate_samples_out(tmp_path, capsys):
    path = tmp_path / "samples.csv"
    code, _, _ = run(["simulate", "--parent", "pareto:alpha=2", "--k", "2", "--n", "1000",
                      "--count", "10000", "--seed", "3", "--samples-out", str(path)], capsys)
    assert code == 0
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# parent=pareto:alpha=2, n=1000, k=2")
    assert "seed=3" in lines[0]
    assert len(lines) == 10002


def test_classify(capsys):
    code, out, _ = run(["classify", "--parent", "betapower:beta=2"], capsys)
    assert code == 0
    (row,) = rows(out)
    assert row["kind"] == "weibull" and row["agrees"] == "true"
    assert float(row["alpha"]) == pytest.approx(2.0, rel=1e-6)


def test_finite(capsys):
    code, out, _ = run(["finite", "--parent", "pareto:alpha=1", "--n", "2", "--k", "2"], capsys)
    assert code == 0
    (row,) = rows(out)
    assert float(row["h_gnk"]) == pytest.approx(1.5 - 2 * math.log(2), abs=1e-9)
    assert float(row["mass"]) == pytest.approx(1.0, abs=1e-9)


def test_config_file_and_precedence(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"family": "weibull", "alpha": [1, 2], "k": 2, "format": "json"}))
    code, out, _ = run(["laws", "--config", str(cfg)], capsys)
    assert code == 0
    doc = json.loads(out)
    assert [r["alpha"] for r in doc["rows"]] == [1, 2]
    # explicit flags win over the file
    code, out, _ = run(["laws", "--config", str(cfg), "--alpha", "5", "--format", "csv"], capsys)
    (row,) = rows(out)
    assert row["family"] == "weibull" and float(row["alpha"]) == 5.0


@pytest.mark.parametrize("content", ['{"bogus": 1}', "[1, 2]", "{not json"])
def test_bad_config(tmp_path, content, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(content)
    assert run(["laws", "--config", str(cfg)], capsys)[0] == 2


def test_missing_config(capsys):
    assert run(["laws", "--config", "/nonexistent/cfg.json"], capsys)[0] == 2


@pytest.mark.parametrize("args", [
    ["laws", "--family", "frechet,gumbel", "--alpha", "2", "--k", "1,3"],
    ["finite", "--parent", "uniform", "--n", "50", "--k", "3"],
    ["converge", "--parent", "logistic", "--k", "2", "--schedule", "100,1000"],
    ["simulate", "--parent", "uniform", "--k", "1", "--n", "1000", "--count", "10000"],
    ["classify", "--parent", "pareto:alpha=1"],
    ["i1", "--k", "4"],
])
def test_json_validates_against_schema(args, capsys):
    code, out, _ = run([*args, "--format", "json"], capsys)
    assert code == 0
    doc = json.loads(out)
    jsonschema.validate(doc, SCHEMA)
    assert doc["columns"] == cli.COLUMNS[args[0]]
    assert doc["ok"] is True


def test_schema_rejects_wrong_columns():
    doc = {"command": "i1", "version": "0", "ok": True, "meta": {}, "columns": ["n"],
           "rows": []}
    with pytest.raises(jsonschema.ValidationError):
        jsonschema.validate(doc, SCHEMA)


def test_floats_round_trip(capsys):
    from kext.laws import KExtremeLaw, LimitLaw, entropy_closed_form
    _, out, _ = run(["laws", "--family", "frechet", "--alpha", "0.5", "--k", "3"], capsys)
    value = float(rows(out)[0]["h_closed_form"])
    assert value == entropy_closed_form(KExtremeLaw(LimitLaw.frechet(0.5), 3))


def test_out_file_matches_stdout(tmp_path, capsys):
    path = tmp_path / "i1.csv"
    _, stdout, _ = run(["i1", "--k", "2"], capsys)
    assert run(["i1", "--k", "2", "--out", str(path)], capsys)[0] == 0
    assert path.read_text() == stdout


def test_workers_do_not_change_output(capsys):
    base = ["converge", "--parent", "exp", "--k", "3", "--schedule", "100,1000,10000"]
    _, one, _ = run(base, capsys)
    _, many, _ = run([*base, "--workers", "3"], capsys)
    assert one == many


def test_console_entry_point_byte_identical(tmp_path):
    outs = []
    for i in range(2):
        path = tmp_path / f"run{i}.json"
        proc = subprocess.run([sys.executable, "-m", "kext", *SIM[:-2], "--seed", "7",
                               "--format", "json", "--out", str(path)],
                              capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]
