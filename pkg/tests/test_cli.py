import json

import pytest

from pottsmix import cli


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def body(text):
    return [ln for ln in text.splitlines() if not ln.startswith("#")]


def test_exact_k2(capsys):
    code, out, _ = run(capsys, "exact", "--graph", "complete", "--n", "2", "--lambda", "2", "--q", "2")
    assert code == 0
    assert "Z=6" in body(out)
    assert "detailed_balance=True" in body(out)
    assert out.startswith("# seed=")


def test_thresholds_verdict(capsys):
    code, out, _ = run(capsys, "thresholds", "--delta", "4", "--lambda", "2", "--q", "65")
    assert code == 0
    row = body(out)[1].split(",")
    assert row[3] == "rapid-guaranteed"


def test_simulate_reproducible(capsys, tmp_path):
    args = ["simulate", "--graph", "path", "--n", "4", "--lambda", "2", "--q", "3", "--steps", "10"]
    _, a, _ = run(capsys, *args, "--seed", "5")
    _, b, _ = run(capsys, *args, "--seed", "5")
    _, c, _ = run(capsys, *args, "--seed", "6")
    assert a == b and body(a) != body(c)
    assert a == cli.run_simulate_text({"kind": "path", "n": 4}, "2", 3, 10, 5)


def test_simulate_tv_curve(capsys):
    code, out, _ = run(capsys, "simulate", "--graph", "path", "--n", "3", "--lambda", "6/5", "--q", "2",
                       "--tv", "5")
    assert code == 0 and body(out)[0] == "t,tv"
    assert body(out)[1].startswith("0,") and "/" in body(out)[1]
    _, out, _ = run(capsys, "simulate", "--graph", "torus", "--L", "3", "--lambda", "6/5", "--q", "2",
                    "--tv", "5")
    assert "/" not in body(out)[1]


def test_block_simulation(capsys):
    code, out, _ = run(capsys, "simulate", "--graph", "cycle", "--n", "6", "--lambda", "2", "--q", "3",
                       "--blocks", "kblock", "--k", "2", "--steps", "5")
    assert code == 0
    assert json.loads(out.splitlines()[2].split("=", 1)[1])["dynamics"] == "block"


def test_config_precedence(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"graph": {"kind": "complete", "n": 2}, "lam": "3", "q": 2, "seed": 99}))
    code, out, _ = run(capsys, "exact", "--config", str(cfg), "--lambda", "2")
    assert code == 0
    assert "Z=6" in body(out)
    assert "# seed=99" in out


def test_spec_round_trip():
    spec = cli.ExperimentSpec("exact", lam="3/2", q=4, params={"r": 1})
    again = cli.ExperimentSpec.parse(spec.render())
    assert again == spec and again.digest() == spec.digest()


def test_result_json(capsys, tmp_path):
    res = tmp_path / "res.json"
    out_file = tmp_path / "out.txt"
    code, out, _ = run(capsys, "exact", "--graph", "path", "--n", "2", "-o", str(out_file),
                       "--result-json", str(res))
    assert code == 0 and out == ""
    data = json.loads(res.read_text())
    assert data["spec"]["subcommand"] == "exact" and "started" in data
    assert "Z=6" in out_file.read_text()


def test_exit_codes(capsys):
    assert run(capsys, "exact", "--lambda", "1/2")[0] == 2
    assert run(capsys, "exact", "--graph", "torus", "--L", "3", "--q", "40")[0] == 3
    assert run(capsys, "extremal-check", "--n", "3")[0] == 2


def test_other_subcommands(capsys):
    code, out, _ = run(capsys, "extremal-check", "--n", "4", "--m", "3", "--delta", "3")
    assert code == 0 and "Z_max=72" in body(out)
    code, out, _ = run(capsys, "conductance", "--graph", "complete", "--n", "2")
    assert code == 0 and json.loads("\n".join(body(out)))["phi_global"] == "4/9"
    code, out, _ = run(capsys, "blocks", "--graph", "cycle", "--n", "8", "--blocks", "kblock", "--k", "3")
    assert json.loads("\n".join(body(out)))["params"]["mu_plus"] == "4/3"
    code, out, _ = run(capsys, "phase", "--delta", "3", "--q", "1000")
    assert code == 0 and len(body(out)) == 2
    code, out, _ = run(capsys, "coupling", "--graph", "path", "--n", "3", "--lambda", "13/10", "--q", "5")
    assert "contracts=True" in body(out)
    code, out, _ = run(capsys, "gen-graph", "--graph", "cycle", "--n", "3")
    assert body(out) == ["3 3", "0 1", "0 2", "1 2"]


def test_verify_subset(capsys):
    code, out, _ = run(capsys, "verify", "--only", "7,13")
    assert code == 0
    assert sum(ln.startswith("[PASS]") for ln in out.splitlines()) == 2


def test_module_entry_point():
    import subprocess
    import sys
    proc = subprocess.run([sys.executable, "-m", "pottsmix", "exact", "--graph", "complete", "--n", "2"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "Z=6" in proc.stdout


def test_grid_closed_form_flag(capsys):
    _, out, _ = run(capsys, "blocks", "--graph", "torus", "--L", "6", "--blocks", "grid", "--r", "2")
    data = json.loads("\n".join(body(out)))
    assert data["partial_plus_value"] == str(8**4) and data["closed_form_matches"] is False
    _, out, _ = run(capsys, "blocks", "--graph", "torus", "--L", "6", "--blocks", "grid", "--r", "4")
    assert json.loads("\n".join(body(out)))["closed_form_matches"] is True
