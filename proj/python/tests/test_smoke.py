import json
import math

import pytest

import ddelyap


def test_listing():
    text = ddelyap.list_registry()
    assert "wright_linear" in text
    reg = json.loads(ddelyap.list_registry(json=True))
    assert [s["name"] for s in reg["scenarios"]] == sorted(s["name"] for s in reg["scenarios"])
    assert set(reg["audits"]) == set(ddelyap.audit_names)


def test_wright_simulation():
    res = ddelyap.simulate("wright_linear")
    assert res["exit_code"] == 0
    assert {r["V"] for r in res["records"]} == {1}
    err = max(abs(x - math.cos(math.pi * t / 2)) for t, x in zip(res["t"], res["x"][0]))
    assert err < 1e-6
    assert all(a["pass"] for a in res["audits"])


def test_run_writes_outputs(tmp_path):
    res = ddelyap.run("cyclic_n1_linear", str(tmp_path))
    assert res["exit_code"] == 0, res["message"]
    out = tmp_path / "cyclic_n1_linear"
    for name in ("trajectory.csv", "lyapunov.csv", "audits.json", "plot.csv"):
        assert (out / name).exists()


def test_validation_error_names_h2():
    ini = ddelyap.scenario_ini("wright_linear").replace("delta = -1", "delta = 1")
    with pytest.raises(ddelyap.ConfigError, match="H2"):
        ddelyap.validate(ini)


def test_segment_v_sine():
    n = 400
    s = [-1 + k / n for k in range(n + 1)]
    vals = [math.sin(3 * math.pi * x) for x in s]
    slopes = [3 * math.pi * math.cos(3 * math.pi * x) for x in s]
    res = ddelyap.segment_v(s, vals, slopes, [], -1.0, 1)
    assert res["sc"] == 2
    assert res["V"] == 2
    assert ddelyap.segment_v(s, vals, slopes, [], -1.0, -1)["V"] == 3
