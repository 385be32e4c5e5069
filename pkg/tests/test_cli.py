import json
import subprocess
import sys

import numpy as np
import pytest

from qwv import config
from qwv.assertion import parse_assertion
from qwv.cli import main, read_triple_spec
from qwv.parser import parse

HADAMARD = "var q: bool;\nq := H[q];\n"
COIN = "var q: bool;\nq := |0>;\nq := H[q];\nwhile meas[q] = 1 { q := H[q]; }\n"
GROVER = """var x: int<4>;
x := |0>;
x := Hn[x];
x := PhOracle([0, 0, 0, 1])[x];
x := adj(Hn)[x];
x := PhOracle([1, 0, 0, 0])[x];
x := Hn[x];
"""


@pytest.fixture(autouse=True)
def restore_config():
    saved = config.get_default()
    yield
    config.set_default(saved)


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def run_json(capsys, argv):
    code = main(argv + ["--json"])
    return code, json.loads(capsys.readouterr().out)


def test_run_skip_keeps_state(tmp_path, capsys):
    prog = write(tmp_path, "s.qw", "var q: bool;\nskip;\n")
    code, out = run_json(capsys, ["run", prog, "--input", "ket(q,1)"])
    assert code == 0
    m = np.array(out["matrix"])[..., 0]
    assert np.allclose(m, np.diag([0, 1]))


def test_run_hadamard_gives_plus(tmp_path, capsys):
    code, out = run_json(capsys, ["run", write(tmp_path, "h.qw", HADAMARD)])
    assert code == 0 and out["labels"] == ["q"]
    t, _ = parse(HADAMARD)
    assert np.allclose(parse_assertion(out["state"], t).matrix, np.full((2, 2), 0.5))
    assert out["quality"]["trace_preserving"]


def test_run_coin_loop(tmp_path, capsys):
    code, out = run_json(capsys, ["run", write(tmp_path, "c.qw", COIN)])
    assert code == 0
    assert np.allclose(np.array(out["matrix"])[..., 0], np.diag([1, 0]), atol=1e-9)
    code = main(["run", write(tmp_path, "c.qw", COIN)])
    assert code == 0 and "trace_preserving=True" in capsys.readouterr().out


def test_check_valid_and_invalid(tmp_path, capsys):
    prog = write(tmp_path, "g.qw", GROVER)
    good = write(tmp_path, "good.json", json.dumps({"pre": "1", "post": "proj(x, 3)", "mode": "total"}))
    code, out = run_json(capsys, ["check", prog, good])
    assert code == 0 and out["status"] == "Valid"
    t, _ = parse(GROVER)
    assert parse_assertion(out["weakest"], t).out == (0,)
    bad = write(tmp_path, "bad.txt", "pre: 1\npost: proj(x, 2)\nmode: partial\n")
    code, out = run_json(capsys, ["check", prog, bad])
    assert code == 1 and out["status"] == "Invalid" and out["slack"] < 0 and out["diagnostics"]


def test_triple_spec_formats():
    assert read_triple_spec('{"pre": "1", "post": "I(q)"}')["mode"] == "total"
    spec = read_triple_spec("pre: 1\npost: I(q)\nmode: partial\nsaturated: true\n")
    assert spec["mode"] == "partial" and spec["saturated"] is True


def test_loop_budget_exit_code(tmp_path):
    prog = write(tmp_path, "slow.qw", "var q: bool;\nq := |1>;\nwhile meas[q] = 1 { q := op_rot[q]; }\n")
    # a small rotation leaks about 1% of the weight out of the loop per round
    c, s = np.cos(0.1), np.sin(0.1)
    side = {"gates": {"op_rot": [[[c, 0], [-s, 0]], [[s, 0], [c, 0]]]}}
    side_path = write(tmp_path, "slow.json", json.dumps(side))
    spec = write(tmp_path, "t.json", json.dumps({"pre": "0*I(q)", "post": "I(q)"}))
    assert main(["check", prog, spec, "--sidecar", side_path, "--while-kmax", "8"]) == 4
    assert main(["check", prog, spec, "--sidecar", side_path]) == 0


def test_parse_and_semantic_error_codes(tmp_path, capsys):
    bad = write(tmp_path, "bad.qw", "var q: bool;\nq := H[q]\n")
    assert main(["run", bad]) == 2
    assert "line" in capsys.readouterr().err
    spec = write(tmp_path, "t.json", json.dumps({"pre": "proj(", "post": "1"}))
    assert main(["check", write(tmp_path, "h.qw", HADAMARD), spec]) == 2
    assert main(["run", str(tmp_path / "missing.qw")]) == 3
    assert main(["run", write(tmp_path, "h.qw", HADAMARD), "--max-dim", "1"]) == 3


def test_outline_commands(tmp_path, capsys):
    out_dir = tmp_path / "hsp"
    assert main(["examples", "hsp", "--emit", str(out_dir)]) == 0
    capsys.readouterr()
    prog, outline = str(out_dir / "hsp.qw"), str(out_dir / "hsp.outline.json")
    code, out = run_json(capsys, ["outline", prog, outline])
    assert code == 0 and out["ok"] and len(out["steps"]) == 17
    steps = json.loads(open(outline).read())
    k = max(i for i, s in enumerate(steps) if s["rule"] == "rewrite")
    steps[k]["conclusion"]["post"] = "proj([x0, x1], (0, 0))"
    tampered = write(tmp_path, "tampered.json", json.dumps(steps))
    code, out = run_json(capsys, ["outline", prog, tampered])
    assert code == 1 and not out["steps"][k]["ok"]
    empty = write(tmp_path, "empty.json", "[]")
    assert main(["outline", prog, empty]) == 0
    assert "0/0 steps pass" in capsys.readouterr().out
    # the emitted triples check out through the command line too
    for triple in sorted(out_dir.glob("hsp.triple*.json")):
        assert main(["check", prog, str(triple)]) == 0


def test_examples_suite(capsys):
    assert main(["examples", "grover", "--param", "n_items=8", "--param", "marked=2"]) == 0
    assert main(["examples", "hsp", "--G", "3,2", "--H", "(0,1)"]) == 0
    out = capsys.readouterr().out
    assert "1/1 pass" in out
    assert main(["examples", "nope"]) == 2


def test_rules_selftest_subset(capsys, tmp_path):
    code, out = run_json(capsys, ["rules-selftest", "--trials", "5", "--rules", "Ax.Sk", "R.SC",
                                  "--out", str(tmp_path)])
    assert code == 0


def test_module_entry_point(tmp_path):
    prog = write(tmp_path, "h.qw", HADAMARD)
    res = subprocess.run([sys.executable, "-m", "qwv", "run", prog], capture_output=True, text=True)
    assert res.returncode == 0 and "0.500000" in res.stdout
