import json
from pathlib import Path

import pytest

from fitzkit.certificates import Verdict
from fitzkit.errors import ScenarioParseError, ValidationError
from fitzkit.harness import (
    emit_report,
    load_scenario,
    reformat_report_json,
    render_report,
    report_to_dict,
    run_suite,
    scenario_from_dict,
)

SCENARIO_DIR = Path(__file__).resolve().parents[1] / "src" / "fitzkit" / "scenarios"


def minimal_raw(**over):
    raw = {
        "dimension": 1,
        "seed": 7,
        "operators": {
            "cone": {"kind": "normal_cone", "box": {"lo": [0.0], "hi": [1.0]}}
        },
        "grids": {"scan": {"lower": [-1.0], "upper": [3.0], "spacing": 0.1}},
        "checks": [{"check": "theorem36", "target": "cone", "params": {"xgrid": "scan"}}],
    }
    raw.update(over)
    return raw


def test_load_minimal_scenario(tmp_path):
    p = tmp_path / "s.json"
    p.write_text(json.dumps(minimal_raw()))
    cfg = load_scenario(p)
    assert cfg.dimension == 1
    assert len(cfg.operators) == 1 and len(cfg.checks) == 1


def test_load_rejects_non_monotone_linear():
    raw = minimal_raw(
        operators={"bad": {"kind": "linear", "matrix": [[-1.0]]}},
        checks=[],
    )
    with pytest.raises(ValidationError, match="not monotone"):
        scenario_from_dict(raw)


def test_load_rejects_unresolved_name():
    raw = minimal_raw()
    raw["checks"] = [{"check": "theorem36", "target": "ghost", "params": {"xgrid": "scan"}}]
    with pytest.raises(ValidationError, match="unresolved operator name"):
        scenario_from_dict(raw)


def test_load_rejects_dimension_mismatch():
    raw = minimal_raw()
    raw["operators"]["cone2"] = {
        "kind": "normal_cone",
        "box": {"lo": [0.0, 0.0], "hi": [1.0, 1.0]},
    }
    with pytest.raises(ValidationError, match="dimension"):
        scenario_from_dict(raw)


def test_parse_error_carries_location(tmp_path):
    p = tmp_path / "broken.json"
    p.write_text('{"dimension": 1,\n  "seed": }')
    with pytest.raises(ScenarioParseError, match="line 2"):
        load_scenario(p)


def test_empty_checks_report(tmp_path):
    raw = minimal_raw(checks=[])
    rep = run_suite(scenario_from_dict(raw))
    assert rep.results == ()
    assert rep.exit_code() == 0


def test_paper_suite_all_pass():
    cfg = load_scenario(SCENARIO_DIR / "paper-suite.json")
    rep = run_suite(cfg)
    assert all(r.certificate.verdict is Verdict.PASS for r in rep.results)
    assert rep.exit_code() == 0


def test_expected_failures_scenario():
    cfg = load_scenario(SCENARIO_DIR / "expected-failures.json")
    rep = run_suite(cfg)
    assert rep.exit_code() == 1
    fitz = rep.results[0].certificate
    assert fitz.verdict is Verdict.FAIL
    assert fitz.witness("gap") == pytest.approx(0.25, abs=1e-12)


def test_report_determinism_modulo_timing():
    cfg = load_scenario(SCENARIO_DIR / "paper-suite.json")
    d1 = report_to_dict(run_suite(cfg))
    d2 = report_to_dict(run_suite(cfg))
    del d1["timing"], d2["timing"]
    assert json.dumps(d1, sort_keys=True) == json.dumps(d2, sort_keys=True)


def test_parallel_matches_sequential():
    cfg = load_scenario(SCENARIO_DIR / "paper-suite.json")
    d1 = report_to_dict(run_suite(cfg, parallel=False))
    d2 = report_to_dict(run_suite(cfg, parallel=True))
    del d1["timing"], d2["timing"]
    assert d1 == d2


def test_emit_csv_rows(tmp_path):
    cfg = load_scenario(SCENARIO_DIR / "expected-failures.json")
    rep = run_suite(cfg)
    out = tmp_path / "r.csv"
    text = emit_report(rep, "csv", out)
    lines = text.strip().splitlines()
    assert lines[0] == "check,target,verdict,key_scalar"
    assert len(lines) == 1 + len(rep.results)
    assert out.read_text() == text
    assert "fail" in lines[1]


def test_report_reformat_roundtrip():
    cfg = load_scenario(SCENARIO_DIR / "expected-failures.json")
    rep = run_suite(cfg)
    stored = json.loads(render_report(rep, "json"))
    csv_again = reformat_report_json(stored, "csv")
    assert csv_again == render_report(rep, "csv")


def test_json_report_echoes_tolerances_and_seed():
    cfg = load_scenario(SCENARIO_DIR / "paper-suite.json")
    d = report_to_dict(run_suite(cfg))
    assert d["seed"] == cfg.seed
    assert d["tolerances"]["eq_tol"] == cfg.tolerances.eq_tol
    assert d["tool"]["name"] == "fitzkit"
    assert d["scenario_digest"].startswith("sha256:")
    assert len(d["annotations"]) == 2


def test_operator_zoo_all_pass():
    cfg = load_scenario(SCENARIO_DIR / "operator-zoo.json")
    rep = run_suite(cfg)
    assert rep.exit_code() == 0
