import csv
import json

import pytest

from price_lab import cli
from price_lab.errors import NumericalViolationError

MU_CONFIG = {
    "schema": 1,
    "scenario": "mu",
    "space": {"dim": 3, "k": 0},
    "function": {"kind": "polynomial", "terms": [{"basis": "coordinate", "index": 0}]},
    "grid": {"start": 0.5, "stop": 2.0, "count": 5},
}

ATOM = {"kind": "poisson", "atoms": [{"weight": 1.0, "direction": [1, 0, 0]}]}


def run(tmp_path, config, *flags, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(config))
    return cli.main(["--config", str(path), *flags])


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def stderr_json(capsys):
    return json.loads(capsys.readouterr().err.strip().splitlines()[-1])


def test_mu_scenario_csv(tmp_path):
    out = tmp_path / "mu.csv"
    assert run(tmp_path, MU_CONFIG, "--out", str(out)) == 0
    header, rows = read_csv(out)
    assert tuple(header) == cli.PROFILE_COLUMNS
    assert len(rows) == 5
    for row in rows:
        assert float(row[5]) == pytest.approx(0.5, abs=1e-12)
        assert float(row[6]) == pytest.approx(1.0, abs=1e-12)
        assert row[7] == "" and row[8] == ""


def test_outputs_are_byte_identical(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    run(tmp_path, MU_CONFIG, "--out", str(a))
    run(tmp_path, MU_CONFIG, "--out", str(b))
    assert a.read_bytes() == b.read_bytes()


def test_scenario_flag_overrides_config(tmp_path):
    out = tmp_path / "u.csv"
    config = dict(MU_CONFIG, scenario="price-verify")
    assert run(tmp_path, config, "--scenario", "almgren", "--out", str(out)) == 0
    header, rows = read_csv(out)
    assert tuple(header) == cli.PROFILE_COLUMNS


def test_poisson_q(tmp_path):
    out = tmp_path / "q.csv"
    config = {"schema": 1, "scenario": "poisson-q", "space": {"dim": 3, "k": -1},
              "grid": {"start": 0.25, "stop": 3.0, "count": 5}, "output": str(out)}
    assert run(tmp_path, config) == 0
    header, rows = read_csv(out)
    assert tuple(header) == cli.Q_COLUMNS
    assert all(float(r[3]) < 1e-6 for r in rows)
    meta = json.loads(out.with_suffix(".json").read_text())
    assert meta["n"] == 3
    assert len(meta["alpha"]) == 5


def test_price_verify_writes_report_and_profile(tmp_path):
    out = tmp_path / "pv.json"
    config = {"schema": 1, "scenario": "price-verify", "space": {"dim": 3, "k": -1},
              "function": ATOM, "grid": {"start": 1.0, "stop": 4.0, "count": 7}}
    assert run(tmp_path, config, "--out", str(out)) == 0
    report = json.loads(out.read_text())
    for key in ("scenario", "function", "space", "grid", "C1", "C2", "exponent",
                "stability_ok", "tolerances"):
        assert key in report
    assert 0 < report["C1"] <= report["C2"]
    header, rows = read_csv(out.with_suffix(".csv"))
    assert tuple(header) == cli.PROFILE_COLUMNS
    assert float(rows[0][7]) == 1.0 and float(rows[0][8]) == 1.0


def test_energy_window_and_exponent(tmp_path):
    plane = {"kind": "polynomial", "terms": [{"basis": "coordinate", "index": 0}]}
    config = {"schema": 1, "scenario": "energy-window", "space": {"dim": 2, "k": -1},
              "function": plane, "grid": {"start": 1.0, "stop": 6.0, "count": 11},
              "options": {"tail_tol": 0.25}}
    out = tmp_path / "ew.json"
    assert run(tmp_path, config, "--out", str(out)) == 0
    report = json.loads(out.read_text())
    assert report["stability_ok"] is True
    assert report["C1"] > 0

    config = {"schema": 1, "scenario": "exponent", "space": {"dim": 3, "k": -1},
              "function": {"kind": "constant", "value": 1.0},
              "grid": {"start": 4.0, "stop": 8.0, "count": 9}}
    out = tmp_path / "ex.json"
    assert run(tmp_path, config, "--out", str(out)) == 0
    assert json.loads(out.read_text())["exponent"] == pytest.approx(2.0, abs=0.1)


@pytest.mark.parametrize("patch, path", [
    ({"grid": {"start": 2.0, "stop": 1.0, "count": 5}}, "config.grid.stop"),
    ({"grid": {"start": 1.0, "stop": 2.0, "count": 1}}, "config.grid.count"),
    ({"schema": 2}, "config.schema"),
    ({"scenario": "plot"}, "config.scenario"),
    ({"space": {"dim": 3, "k": -1, "k_prime": -0.5}}, "config.space.k_prime"),
    ({"space": {"dim": 3, "k": 0.5}}, "config.space.k"),
    ({"function": {"kind": "poisson"}}, "config.function"),
    ({"quadrature": {"angular_order": 2}}, "config.quadrature.angular_order"),
])
def test_config_errors_exit_2(tmp_path, capsys, patch, path):
    assert run(tmp_path, dict(MU_CONFIG, **patch)) == 2
    err = stderr_json(capsys)
    assert err["exit_code"] == 2
    assert err["path"] == path


def test_envelope_grid_must_reach_r0(tmp_path, capsys):
    config = dict(MU_CONFIG, scenario="price-verify")
    assert run(tmp_path, config) == 2
    assert stderr_json(capsys)["path"] == "config.grid.start"


def test_unreadable_config(tmp_path, capsys):
    (tmp_path / "bad.json").write_text("{not json")
    assert cli.main(["--config", str(tmp_path / "bad.json")]) == 2
    assert stderr_json(capsys)["error"] == "ConfigError"


def test_non_convergence_exit_4(tmp_path, capsys):
    config = {"schema": 1, "scenario": "mu", "space": {"dim": 3, "k": -1}, "function": ATOM,
              "grid": {"start": 6.0, "stop": 7.0, "count": 2},
              "quadrature": {"angular_order": 4, "radial_order": 8, "max_refinements": 1,
                             "target_rel_tol": 1e-12}}
    assert run(tmp_path, config, "--out", str(tmp_path / "x.csv")) == 4
    err = stderr_json(capsys)
    assert err["error"] == "NonConvergenceError"
    assert "best_estimate" in err


def test_numerical_violation_exit_3(tmp_path, capsys, monkeypatch):
    def broken(*args, **kwargs):
        raise NumericalViolationError("computed mu=1.0 >= 1 at R=1.0")

    monkeypatch.setattr(cli, "growth_profile", broken)
    assert run(tmp_path, MU_CONFIG, "--out", str(tmp_path / "x.csv")) == 3
    assert stderr_json(capsys)["exit_code"] == 3


def sweep_config(parameters, scenario="exponent", function=None):
    template = {"scenario": scenario, "space": {"dim": 3, "k": -1},
                "function": function or {"kind": "poisson", "atoms": [{"weight": 1.0}]},
                "grid": {"start": 4.0, "stop": 8.0, "count": 9}}
    return {"schema": 1, "scenario": "sweep", "template": template, "parameters": parameters}


def test_sweep_over_dimension(tmp_path):
    out = tmp_path / "sweep.json"
    assert run(tmp_path, sweep_config({"space.dim": [3, 4]}), "--out", str(out)) == 0
    reports = json.loads(out.read_text())
    assert [r["space"]["dim"] for r in reports] == [3, 4]
    for r in reports:
        assert r["status"] == "ok"
        assert r["exponent"] == pytest.approx(2 * (r["space"]["dim"] - 1), abs=0.01)


def test_sweep_empty_parameters(tmp_path):
    out = tmp_path / "sweep.json"
    assert run(tmp_path, sweep_config({"space.dim": []}), "--out", str(out)) == 0
    assert json.loads(out.read_text()) == []


def test_sweep_isolates_failures(tmp_path):
    out = tmp_path / "sweep.json"
    functions = [{"kind": "constant", "value": 1.0},
                 {"kind": "poisson", "atoms": [{"weight": 1.0}]}]
    config = sweep_config({"function": functions}, scenario="price-verify")
    config["template"]["grid"] = {"start": 1.0, "stop": 3.0, "count": 5}
    assert run(tmp_path, config, "--out", str(out)) == 0
    first, second = json.loads(out.read_text())
    assert first["status"] == "error" and first["error"] == "PreconditionError"
    assert second["status"] == "ok"


def test_sweep_too_large(tmp_path, capsys):
    config = sweep_config({"space.dim": list(range(101)), "space.k": [-1.0] * 101})
    assert run(tmp_path, config) == 2
    assert stderr_json(capsys)["path"] == "config.parameters"


def test_sweep_thread_count_does_not_change_output(tmp_path, monkeypatch):
    config = sweep_config({"space.k": [-1.0, -0.25], "space.dim": [3]})
    one, two = tmp_path / "one.json", tmp_path / "two.json"
    assert run(tmp_path, config, "--threads", "1", "--out", str(one)) == 0
    monkeypatch.setenv("PRICE_LAB_THREADS", "2")
    assert run(tmp_path, config, "--out", str(two)) == 0
    assert one.read_bytes() == two.read_bytes()
