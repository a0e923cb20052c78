import io
import json
import os

import pytest

from fraclap.cli import emit_report, main, run
from fraclap.schauder import Probe, VerificationReport


def go(cfg):
    buf = io.StringIO()
    code = run(cfg, out=buf)
    return code, buf.getvalue()


def test_constants_flags(capsys):
    assert main(["constants", "--n", "2", "--s", "0.5"]) == 0
    text = capsys.readouterr().out
    body = json.loads(text[:text.rindex("}") + 1])
    assert all(body[k] > 0 for k in ("riesz_a", "poisson_c", "flap_C", "bubble_k"))
    assert text.strip().endswith("pass")


def test_eval_constant_field_csv():
    code, out = go({"command": "eval", "fields": {"u": {"expr": "1", "decay_M": 1}},
                    "probes": [[0, 0], [0.3, 0], [1, 2]], "output": {"format": "csv"}})
    lines = out.splitlines()
    assert code == 0 and lines[0] == "x1,x2,value,est_error" and len(lines) == 5
    assert all(abs(float(row.split(",")[2])) <= 1e-10 for row in lines[1:4])
    assert "\r" not in out


def test_schema_violations_are_pointered(capsys):
    assert run({"command": "eval", "bogus": 1}) == 1
    assert "config error at /" in capsys.readouterr().err
    assert run({"command": "eval", "fields": {"u": {"expr": "1", "decay_M": "x"}}}) == 1
    assert "/fields/u/decay_M" in capsys.readouterr().err
    assert run({"command": "solve", "budget": {"radial_nodes": 8, "nodes": 3}}) == 1


def test_engine_errors_name_the_operation(capsys):
    assert run({"command": "eval", "fields": {"u": {"expr": "x1"}}}) == 1
    assert "frac_laplacian" in capsys.readouterr().err
    assert run({"command": "eval", "fields": {"u": {"expr": "1 +"}}}) == 1


def test_config_file_and_command_mismatch(tmp_path, capsys):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"command": "eval"}))
    assert main(["riesz", "--config", str(p)]) == 1
    assert main(["nonsense"]) == 1


def test_empty_probe_list_gives_header_only_csv(tmp_path):
    path = tmp_path / "r.csv"
    code, _ = go({"command": "verify-riesz", "s": 0.25, "probes": [],
                  "output": {"format": "csv", "path": str(path)}})
    assert code == 0
    assert path.read_bytes() == b"probe_id,scale,lhs,rhs,ratio,note\n"


def test_single_zero_ratio_probe(tmp_path):
    r = VerificationReport("t", [Probe(0, 0.5, 0.0, 1.0, 0.0, "")], passed=True)
    text = emit_report(r, "csv", str(tmp_path / "one.csv"))
    assert text.splitlines()[1] == "0,0.5,0,1,0,"
    assert VerificationReport.from_json(emit_report(r, "json")) == r


def test_unwritable_path():
    code, _ = go({"command": "constants", "output": {"path": "/nonexistent/dir/x.json"}})
    assert code == 1


def test_artifacts_are_byte_identical(tmp_path):
    cfg = {"command": "verify-riesz", "s": 0.75, "seed": 7, "output": {"format": "json"}}
    paths = []
    for i in range(2):
        p = tmp_path / f"r{i}.json"
        cfg["output"]["path"] = str(p)
        assert run(dict(cfg)) == 0
        paths.append(p.read_bytes())
    assert paths[0] == paths[1]
    back = VerificationReport.from_json(paths[0].decode())
    assert back.to_json() + "\n" == paths[0].decode()
    assert not [f for f in os.listdir(tmp_path) if f.startswith(".fraclap-")]


def test_verification_failure_exit_code():
    cfg = {"command": "verify-schauder", "s": 0.25, "ratio_cap": 1e-9,
           "fields": {"f": {"expr": "cos(x1)"}}, "modulus": {"kind": "power", "C": 1, "alpha": 1}}
    code, out = go(cfg)
    assert code == 2 and out.strip().endswith("fail")


def test_thread_setting(monkeypatch, capsys):
    cfg = {"command": "eval", "fields": {"u": {"expr": "cos(x1)", "decay_M": 1}}, "probes": [[0, 0], [1, 0]]}
    monkeypatch.setenv("FRACLAP_THREADS", "1")
    one = go(cfg)
    monkeypatch.setenv("FRACLAP_THREADS", "3")
    assert go(cfg) == one
    monkeypatch.setenv("FRACLAP_THREADS", "many")
    assert run(cfg) == 1


def test_budget_override_changes_work():
    base = {"command": "eval", "fields": {"u": {"expr": "cos(x1)", "decay_M": 1}}, "probes": [[0, 0]],
            "s": 0.25}
    _, a = go(base)
    _, b = go(dict(base, budget={"radial_nodes": 16}))
    va = float(json.loads(a[:a.rindex("}") + 1])["results"][0]["value"])
    vb = float(json.loads(b[:b.rindex("}") + 1])["results"][0]["value"])
    assert va != vb and abs(va - 1) < 1e-3 and abs(vb - 1) < 1e-3


def test_solve_writes_grid(tmp_path):
    path = tmp_path / "u.csv"
    code, out = go({"command": "solve", "s": 0.5, "fields": {"f": {"expr": "1"}}, "probes": [[0, 0], [0.5, 0]],
                    "residual_probes": [[0, 0]], "output": {"format": "csv", "path": str(path)}})
    assert code == 0 and "max_residual=" in out
    rows = path.read_text().splitlines()
    assert rows[0] == "x1,x2,value" and len(rows) == 3


def test_lemma32_default_family():
    code, out = go({"command": "verify-lemma32", "s": 0.25})
    body = json.loads(out[:out.rindex("}") + 1])
    assert code == 0 and body["fitted_exponent"] == pytest.approx(0.5, abs=0.1)
