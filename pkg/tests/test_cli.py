import json

import pytest

from qlevy.cli import (
    builtin_config_path,
    builtin_configs,
    check_defs,
    load_config,
    main,
    run_experiment,
)
from qlevy.errors import ParseError, SchemaError


def _write(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(json.dumps(obj), encoding="utf-8")
    return str(p)


def test_shipped_configs_present_and_valid():
    names = builtin_configs()
    assert "azema_q2.json" in names
    assert len(names) >= 8
    for name in names:
        load_config(builtin_config_path(name))


def test_schema_rejects_q_zero(tmp_path):
    path = _write(tmp_path, "bad.json", {
        "name": "bad", "experiment": "axioms",
        "bialgebra": {"builder": "azema", "q": 0},
    })
    with pytest.raises(SchemaError) as exc:
        load_config(path)
    assert "/bialgebra/q" in str(exc.value)


def test_schema_rejects_unknown_experiment(tmp_path):
    path = _write(tmp_path, "bad.json", {
        "name": "bad", "experiment": "frobnicate",
        "bialgebra": {"builder": "azema"},
    })
    with pytest.raises(SchemaError) as exc:
        load_config(path)
    assert "/experiment" in str(exc.value)


def test_schema_rejects_unknown_key(tmp_path):
    path = _write(tmp_path, "bad.json", {
        "name": "bad", "experiment": "axioms",
        "bialgebra": {"builder": "azema"}, "bogus": 1,
    })
    with pytest.raises(SchemaError):
        load_config(path)


def test_parse_error_reports_position(tmp_path):
    p = tmp_path / "broken.json"
    p.write_text('{"name": "x",,}', encoding="utf-8")
    with pytest.raises(ParseError) as exc:
        load_config(str(p))
    assert exc.value.position == 13


def test_check_defs_ok():
    report = check_defs(builtin_config_path("azema_q2.json"))
    assert report["ok"]
    assert report["max_residual"] <= report["tolerance"]


def test_check_defs_catches_corrupt_coproduct(tmp_path):
    path = _write(tmp_path, "corrupt.json", {
        "name": "corrupt", "experiment": "axioms",
        "bialgebra": {"builder": "azema", "q": 2.0,
                      "corrupt_delta": {"generator": "y", "scale": 1.01}},
    })
    report = check_defs(path)
    assert not report["ok"]
    assert report["max_residual"] > report["tolerance"]


def test_run_experiment_writes_outputs(tmp_path):
    csv_path, json_path, summary = run_experiment(
        builtin_config_path("trotter_nilpotent.json"), str(tmp_path))
    lines = open(csv_path, encoding="utf-8").read().splitlines()
    assert lines[0] == "mesh,n,lhs_max,bound,defect"
    assert len(lines) > 1
    parsed = json.load(open(json_path, encoding="utf-8"))
    assert parsed["assertions"] == summary["assertions"]
    assert all(summary["assertions"].values())


def test_trotter_nilpotent_defects_zero(tmp_path):
    csv_path, _, summary = run_experiment(
        builtin_config_path("trotter_nilpotent.json"), str(tmp_path))
    assert summary["assertions"]["exactness"]
    for line in open(csv_path, encoding="utf-8").read().splitlines()[1:]:
        assert float(line.split(",")[-1]) <= 1e-13


def test_sweep_grouplike_strictly_decreasing(tmp_path):
    csv_path, _, summary = run_experiment(
        builtin_config_path("sweep_grouplike_xstar.json"), str(tmp_path))
    assert summary["assertions"]["defect_strictly_decreasing"]
    rows = open(csv_path, encoding="utf-8").read().splitlines()[1:]
    defects = [float(r.split(",")[5]) for r in rows]
    assert len(defects) == 6
    assert all(b < a for a, b in zip(defects, defects[1:]))


def test_degenerate_sweep_flagged(tmp_path):
    _, _, summary = run_experiment(
        builtin_config_path("sweep_azema_x.json"), str(tmp_path))
    assert summary["assertions"]["defect_identically_zero"]
    assert summary["results"]["limit_degenerate"] is True


def test_outputs_deterministic(tmp_path):
    cfg = builtin_config_path("trotter_nilpotent.json")
    a = tmp_path / "a"
    b = tmp_path / "b"
    csv_a, json_a, _ = run_experiment(cfg, str(a))
    csv_b, json_b, _ = run_experiment(cfg, str(b))
    assert open(csv_a, "rb").read() == open(csv_b, "rb").read()
    sa = json.load(open(json_a, encoding="utf-8"))
    sb = json.load(open(json_b, encoding="utf-8"))
    sa.pop("wall_time_s")
    sb.pop("wall_time_s")
    assert sa == sb


def test_main_check_exit_codes(tmp_path, capsys):
    assert main(["check", str(builtin_config_path("azema_q2.json"))]) == 0
    out = capsys.readouterr().out
    assert "OK" in out
    assert main(["check", str(tmp_path / "missing.json")]) == 1


def test_main_resolves_bare_builtin_names(capsys):
    assert main(["check", "azema_q2"]) == 0
    capsys.readouterr()
    assert main(["check", "azema_q2.json"]) == 0


def test_main_run(tmp_path, capsys):
    code = main(["run", "trotter_nilpotent", "--out", str(tmp_path)])
    out = capsys.readouterr().out
    assert code == 0
    assert "wrote" in out
    assert "pass" in out
    assert (tmp_path / "trotter_nilpotent.csv").exists()


def test_main_list_builtins(capsys):
    assert main(["list-builtins"]) == 0
    out = capsys.readouterr().out
    assert "experiments:" in out
    assert "azema_q2.json" in out


def test_complex_serialization_roundtrip():
    from qlevy.cli import _c2j, _carr

    assert _c2j(1.5 - 2j) == [1.5, -2.0]
    arr = _carr([[[1.0, 2.0], [0.0, -1.0]]])
    assert arr.shape == (1, 2)
    assert arr[0, 0] == 1.0 + 2.0j
    assert arr[0, 1] == -1.0j
