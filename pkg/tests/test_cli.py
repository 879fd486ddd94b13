import json

import pytest

from g2sphere.cli import dumps, main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_torsion_nearly_parallel(capsys):
    code, out, _ = run(capsys, "torsion", "--ansatz", "--r", "1.2599210498948732", "--h", "1,0,0,0")
    assert code == 0
    d = json.loads(out)
    assert d["tau0"] == pytest.approx(-3.1748021039363983, rel=1e-14)
    assert set(d) >= {"params", "tau0", "tau1", "tau2", "tau27", "T", "normT2"}


def test_params_round_trip(capsys, tmp_path):
    _, first, _ = run(capsys, "torsion", "--general", "--r1", "1.3", "--r2", "0.7",
                      "--r3", "1.1", "--h", "0.5,0.5,0.5,0.5", "--convention", "intro")
    path = tmp_path / "p.json"
    path.write_text(first)
    _, second, _ = run(capsys, "torsion", "--params", f"@{path}")
    assert first == second
    _, third, _ = run(capsys, "torsion", "--params", json.dumps(json.loads(first)["params"]))
    assert third == first


def test_seventeen_digits():
    assert dumps({"x": 0.1, "y": [-0.0, 2]}) == '{"x": 0.10000000000000001, "y": [0, 2]}'


def test_flow_csv(capsys, tmp_path):
    out = tmp_path / "traj.csv"
    code, _, _ = run(capsys, "flow", "--ansatz", "--r", "2", "--h", "0.6,0,0.8,0",
                     "--t-max", "0.1", "--dt", "1e-3", "--sample-every", "50", "--out", str(out))
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("t,m0") and len(lines) == 4


def test_flow_backward_json(capsys):
    code, out, _ = run(capsys, "flow", "--ansatz", "--r", "0.5", "--h", "0.6,0,0.8,0",
                       "--t-max", "0.01", "--backward", "--format", "json")
    assert code == 0
    assert json.loads(out)["t"][-1] == pytest.approx(-0.01)


def test_classify_and_hessian(capsys):
    code, out, _ = run(capsys, "classify", "--ansatz", "--r", "2", "--h", "0,0,1,0")
    assert code == 0 and json.loads(out)["label"] == "Ansatz-poles"
    code, out, _ = run(capsys, "hessian", "--ansatz", "--r", "2", "--h", "0,0,1,0")
    d = json.loads(out)
    assert code == 0 and (d["index"], d["nullity"]) == (3, 0)
    code, out, _ = run(capsys, "hessian", "--numeric", "--ansatz", "--r", "2", "--h", "0,0,1,0")
    assert code == 0 and json.loads(out)["index"] == 3


def test_scan(capsys):
    code, out, _ = run(capsys, "scan", "--r-steps", "3", "--h2-steps", "2")
    lines = out.splitlines()
    assert code == 0 and lines[0] == "r,h2,energy,div_norm,class"
    assert len(lines) == 7
    assert lines[1].endswith("Ansatz-equator") and lines[2].endswith("Ansatz-poles")


@pytest.mark.parametrize("argv,code,tag", [
    (["torsion", "--ansatz"], 2, "ERROR ARGS"),
    (["torsion", "--ansatz", "--r", "1", "--h", "1,0"], 2, "ERROR ARGS"),
    (["nope"], 2, "ERROR ARGS"),
    (["torsion", "--params", "{bad"], 2, "ERROR ARGS"),
    (["torsion", "--ansatz", "--r", "-1"], 3, "ERROR DOMAIN"),
    (["torsion", "--general", "--r1", "1", "--r2", "-1", "--r3", "1"], 3, "ERROR DOMAIN"),
    (["hessian", "--ansatz", "--r", "2", "--h", "0.6,0,0.8,0"], 3, "ERROR NOT_CRITICAL"),
    (["classify", "--g2params", "--a", "1", "--D", "1,0,0,0,1,0,0,0,1"], 3, "ERROR DOMAIN"),
    (["flow", "--general", "--r1", "2", "--r2", "0.5", "--r3", "1", "--h", "0.5,0.5,0.5,0.5",
      "--dt", "1e-2"], 3, "ERROR STEP_REJECTED"),
])
def test_error_exit_codes(capsys, argv, code, tag):
    got, out, err = run(capsys, *argv)
    assert got == code
    assert err.startswith(tag) and len(err.strip().splitlines()) == 1


def test_tolerance_env(capsys, monkeypatch):
    monkeypatch.setenv("G2_TOL", "abc")
    assert run(capsys, "classify", "--ansatz", "--r", "1")[0] == 2
    monkeypatch.setenv("G2_TOL", "1e3")
    code, out, _ = run(capsys, "classify", "--ansatz", "--r", "2", "--h", "0.6,0,0.8,0")
    assert code == 0


def test_verify_subset(capsys):
    code, out, _ = run(capsys, "verify", "--only", "8")
    assert code == 0 and out.startswith("PASS 8")


def test_pole_example_chained(capsys):
    args = ["--general", "--r1", "2", "--r2", "-0.5", "--r3", "-1", "--h", "0,0,0,1"]
    _, out, _ = run(capsys, "classify", *args)
    assert json.loads(out)["label"] == "NS_3"
    _, out, _ = run(capsys, "hessian", *args)
    d = json.loads(out)
    assert (d["index"], d["nullity"], d["label"]) == (0, 0, "stable-min")


def test_output_is_deterministic(capsys):
    args = ["torsion", "--general", "--r1", "1.3", "--r2", "0.7", "--r3", "1.1", "--h", "0.5,0.5,0.5,0.5"]
    assert run(capsys, *args)[1] == run(capsys, *args)[1]
