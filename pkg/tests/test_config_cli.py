"""Config parsing and the command-line surface."""

import csv
import io
import json
import xml.etree.ElementTree as ET

import pytest

from envcert import config_from_dict, config_to_system, parse_system_config
from envcert.cli import _bundled_names, _load_config, run_command

BUNDLED = [
    "bh_counterexample",
    "bh_pair",
    "exponential_rational",
    "harvest_pair",
    "mixing_ricker_bh",
    "piecewise_pair",
    "quadratic_pair",
    "ricker_pair_transfer",
    "ricker_triple",
]

UNSTABLE_QUADRATIC = """\
models:
  - family: quadratic
    params: {mu: 3.0}
envelopes:
  - kind: mobius
    alpha: 0.75
"""


def test_config_round_trip():
    cfg = config_from_dict({
        "models": [
            {"family": "ricker", "params": {"r": 1.8}},
            {"family": "beverton-holt", "params": {"mu": 3.0, "c": 1.0}},
        ],
        "envelopes": [{"kind": "mobius", "alpha": 0.5}],
        "grid": {"seed_cells": 512},
    })
    assert [m.family for m in cfg.models] == ["ricker", "beverton-holt"]
    assert cfg.envelopes[0].label == "mobius(alpha=0.5)"
    assert cfg.grid.seed_cells == 512
    assert cfg.grid.abs_tol == 1e-9
    system = config_to_system(cfg)
    assert system.period == 2


def test_config_rejects_unknown_keys():
    with pytest.raises(ValueError, match="config: unknown key"):
        config_from_dict({"models": [{"family": "ricker", "params": {"r": 1.0}}],
                          "modles": []})
    with pytest.raises(ValueError, match=r"models\[0\]"):
        config_from_dict({"models": [{"family": "ricker", "parms": {"r": 1.0}}]})
    with pytest.raises(ValueError, match=r"envelopes\[1\]"):
        config_from_dict({
            "models": [{"family": "ricker", "params": {"r": 1.0}}],
            "envelopes": [{"kind": "reciprocal"}, {"kind": "mobius", "beta": 2}],
        })
    with pytest.raises(ValueError, match="grid: unknown key"):
        config_from_dict({"models": [{"family": "ricker", "params": {"r": 1.0}}],
                          "grid": {"cells": 64}})


def test_config_requires_models():
    with pytest.raises(ValueError, match="root must be a mapping"):
        config_from_dict([1, 2])
    with pytest.raises(ValueError, match="nonempty 'models'"):
        config_from_dict({})
    with pytest.raises(ValueError, match="nonempty 'models'"):
        config_from_dict({"models": []})


def test_config_envelope_kinds():
    base = {"models": [{"family": "ricker", "params": {"r": 1.0}}]}
    cfg = config_from_dict({**base, "envelopes": [
        {"kind": "mobius", "alpha": 0.75},
        {"kind": "reciprocal"},
        {"kind": "piecewise-bh", "c": 3.0},
        {"kind": "custom", "expr": "2 - x"},
    ]})
    assert [h.kind for h in cfg.envelopes] == [
        "mobius", "reciprocal", "piecewise-bh", "custom"
    ]
    with pytest.raises(ValueError, match="unknown envelope kind"):
        config_from_dict({**base, "envelopes": [{"kind": "affine"}]})
    with pytest.raises(ValueError, match="needs 'alpha'"):
        config_from_dict({**base, "envelopes": [{"kind": "mobius"}]})


def test_yaml_and_json_files_parse_alike(tmp_path):
    doc = {"models": [{"family": "ricker", "params": {"r": 1.3}}]}
    ypath = tmp_path / "sys.yaml"
    ypath.write_text("models:\n  - family: ricker\n    params: {r: 1.3}\n")
    jpath = tmp_path / "sys.json"
    jpath.write_text(json.dumps(doc))
    a = parse_system_config(ypath)
    b = parse_system_config(jpath)
    assert a.models[0].params == b.models[0].params == {"r": 1.3}


def test_bundled_configs_all_build():
    assert _bundled_names() == BUNDLED
    for name in BUNDLED:
        cfg = _load_config(name)
        system = config_to_system(cfg)
        assert system.period == len(cfg.models)
    # the .yaml suffix is accepted too
    assert _load_config("ricker_triple.yaml").models[0].family == "ricker"


def test_certify_command_stdout(capsys):
    code = run_command(["certify", "ricker_triple"])
    out, err = capsys.readouterr()
    assert code == 0
    doc = json.loads(out)
    assert doc["tool"]["name"] == "envcert"
    assert doc["command"] == "certify"
    assert doc["result"]["status"] == "CertifiedGlobal"
    assert doc["result"]["envelope"] == "mobius(alpha=0.5)"
    assert "status: CertifiedGlobal" in err
    assert "done in" in err


def test_certify_command_negative_exit(tmp_path):
    out = tmp_path / "counter.json"
    code = run_command(["certify", "bh_counterexample", "--out", str(out)])
    assert code == 1
    doc = json.loads(out.read_text())
    assert doc["result"]["status"] == "NotPopulationModel"


def test_axioms_exit_codes(tmp_path, capsys):
    assert run_command(["axioms", "ricker_triple", "--out", str(tmp_path / "a.json")]) == 0
    code = run_command(["axioms", "piecewise_pair"])
    out, _ = capsys.readouterr()
    assert code == 1
    doc = json.loads(out)
    kinds = [v["kind"] for v in doc["result"]["composition"]["violations"]]
    assert "violation" in kinds


def test_schwarzian_command_rejects_non_smooth(capsys):
    code = run_command(["schwarzian", "piecewise_pair"])
    _, err = capsys.readouterr()
    assert code == 3
    assert "error:" in err and "not C^3" in err


def test_conditions_exit_codes(tmp_path):
    assert run_command(["conditions", "ricker_triple",
                        "--out", str(tmp_path / "c.json")]) == 0
    bad = tmp_path / "quad3.yaml"
    bad.write_text(UNSTABLE_QUADRATIC)
    assert run_command(["conditions", str(bad),
                        "--out", str(tmp_path / "q.json")]) == 1


def test_envelope_check_definite_failure(tmp_path):
    bad = tmp_path / "quad3.yaml"
    bad.write_text(UNSTABLE_QUADRATIC)
    out = tmp_path / "env.json"
    assert run_command(["envelope-check", str(bad), "--out", str(out)]) == 1
    doc = json.loads(out.read_text())
    entry = doc["result"]["candidates"][0]
    assert entry["envelope"] == "mobius(alpha=0.75)"
    assert entry["structural"]["passed"] is True
    assert entry["passed"] is False
    assert run_command(["envelope-check", "ricker_triple",
                        "--out", str(tmp_path / "ok.json")]) == 0


def test_mobius_fit_counterexample_is_infeasible(tmp_path):
    out = tmp_path / "fit.json"
    code = run_command(["mobius-fit", "bh_counterexample",
                        "--alpha-cells", "150", "--out", str(out)])
    assert code == 1
    doc = json.loads(out.read_text())
    assert doc["result"]["feasible"] == []
    assert doc["result"]["tested"] >= 150


def test_cycles_command_lists_counterexample_equilibria(tmp_path):
    out = tmp_path / "cyc.json"
    assert run_command(["cycles", "bh_counterexample", "--r-max", "2",
                        "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    cycles = doc["result"]["cycles"]
    assert len(cycles) == 3
    points = [c["points"] for c in cycles]
    assert points[0] == [1.0]
    assert points[1][0] == pytest.approx(1.4365330719819296, abs=1e-8)
    assert points[2][0] == pytest.approx(1.6150111940487619, abs=1e-8)
    for c in cycles:
        assert len(c["complete"]) == 2


def test_orbit_command(capsys):
    code = run_command(["orbit", "ricker_triple", "--x0", "0.1", "--periods", "60"])
    out, _ = capsys.readouterr()
    assert code == 0
    doc = json.loads(out)
    assert doc["result"]["distance_to_one"] < 1e-8

    code = run_command(["orbit", "quadratic_pair", "--x0", "1.4"])
    out, _ = capsys.readouterr()
    assert code == 1
    doc = json.loads(out)
    assert "outside" in doc["result"]["error"]


def test_plot_data_writes_csv_and_svg(tmp_path):
    out = tmp_path / "curves.csv"
    assert run_command(["plot-data", "ricker_pair_transfer", "--samples", "64",
                        "--out", str(out)]) == 0
    rows = list(csv.reader(io.StringIO(out.read_text())))
    assert rows[0][0] == "x"
    assert "composition" in rows[0] and "diagonal" in rows[0]
    assert len(rows) == 65
    svg = (tmp_path / "curves.svg").read_text()
    root = ET.fromstring(svg)
    assert root.tag.endswith("svg")
    assert any(child.tag.endswith("polyline") for child in root.iter())


def test_csv_report_format(capsys):
    code = run_command(["conditions", "ricker_triple", "--format", "csv"])
    out, _ = capsys.readouterr()
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["key", "value"]
    keys = [r[0] for r in rows]
    assert "command" in keys
    assert any(k.startswith("result.rows[0]") for k in keys)


def test_reports_are_byte_identical(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run_command(["certify", "ricker_triple", "--out", str(a)]) == 0
    assert run_command(["certify", "ricker_triple", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_out_dir_env_prefixes_bare_names(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.setenv("ENVCERT_OUT_DIR", str(tmp_path / "reports"))
    assert run_command(["conditions", "ricker_triple", "--out", "r.json"]) == 0
    assert (tmp_path / "reports" / "r.json").exists()
    # an explicit directory component escapes the prefix
    assert run_command(["conditions", "ricker_triple", "--out", "./r2.json"]) == 0
    assert (tmp_path / "r2.json").exists()
    assert not (tmp_path / "reports" / "r2.json").exists()
    assert run_command(["conditions", "ricker_triple", "--out", "sub/r3.json"]) == 0
    assert (tmp_path / "sub" / "r3.json").exists()


def test_usage_and_input_errors_exit_3(capsys):
    assert run_command([]) == 3
    assert run_command(["certify"]) == 3
    assert run_command(["certify", "ricker_triple", "--format", "xml"]) == 3
    capsys.readouterr()
    assert run_command(["certify", "no_such_bundle"]) == 3
    _, err = capsys.readouterr()
    assert "bundled configs:" in err
    assert "ricker_triple" in err
    assert run_command(["--help"]) == 0


def test_grid_overrides_reach_the_report(capsys):
    code = run_command(["axioms", "ricker_triple",
                        "--grid-cells", "512", "--tol", "1e-06"])
    out, _ = capsys.readouterr()
    assert code == 0
    doc = json.loads(out)
    assert doc["tolerances"]["seed_cells"] == 512
    assert doc["tolerances"]["abs_tol"] == 1e-06
