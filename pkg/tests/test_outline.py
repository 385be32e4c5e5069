import copy
import json

import pytest

from qwv import hoare
from qwv.casestudies import hsp
from qwv.errors import StepFailed
from qwv.outline import ProofOutline, check_outline, resolve_program_ref
from qwv.parser import parse
from qwv.qwhile import Cond, Unitary, While, statements


@pytest.fixture(scope="module")
def study():
    return hsp()


def test_hsp_outline_passes(study):
    rep = check_outline(study.data["outline"], study.program, study.table)
    assert rep.ok and len(rep.results) == 17
    assert rep.final.mode == "total" and rep.final.saturated
    assert all(line.startswith(f"[{k}]") for k, line in enumerate(rep.lines()))


def test_tampered_rewrite_is_caught(study):
    steps = copy.deepcopy(study.data["outline"])
    k = max(i for i, s in enumerate(steps) if s["rule"] == "rewrite")
    steps[k]["conclusion"]["post"] = "proj([x0, x1], (0, 0))"
    with pytest.raises(StepFailed) as info:
        check_outline(steps, study.program, study.table)
    assert info.value.index == k
    rep = check_outline(steps, study.program, study.table, strict=False)
    assert not rep.ok and not rep.results[k].ok
    # later steps that lean on the broken one fail too
    assert all(not r.ok for r in rep.results[k + 1:])


def test_wrong_stated_probability_is_caught(study):
    steps = copy.deepcopy(study.data["outline"])
    steps[-1]["conclusion"]["pre"] = "(0.25)"
    with pytest.raises(StepFailed):
        check_outline(steps, study.program, study.table)


def test_empty_outline_passes(study):
    rep = check_outline([], study.program, study.table)
    assert rep.ok and rep.final is None


def test_json_round_trip(study, tmp_path):
    o = ProofOutline.from_json(study.data["outline"], study.program, study.table)
    path = tmp_path / "o.json"
    o.dump(path)
    again = ProofOutline.from_json(path, study.program, study.table)
    assert again.to_json() == o.to_json()
    assert check_outline(again).ok
    assert json.loads(path.read_text())[0]["rule"] == "Ax.InFP'"


def test_handwritten_outline():
    t, p = parse("var q: bool; q := |0>; q := H[q]; q := H[q];")
    steps = [
        {"rule": "semantic", "conclusion": {"pre": "1", "program": "0:2",
                                            "post": "op(q, [[0.5, 0.5], [0.5, 0.5]])", "mode": "total"}},
        {"rule": "Ax.UTF", "witnesses": {"A": "op(q, [[0.5, 0.5], [0.5, 0.5]])"},
         "conclusion": {"program": "2"}},
        {"rule": "R.SC", "premises": [0, 1], "conclusion": {"program": "all"}},
        {"rule": "rewrite", "premises": [2], "conclusion": {"post": "proj(q, 0)"}},
    ]
    rep = check_outline(steps, p, t)
    assert rep.ok and hoare.close(rep.final.post, rep.results[3].judgment.post)
    steps[0]["conclusion"]["post"] = "proj(q, 1)"
    with pytest.raises(StepFailed) as info:
        check_outline(steps, p, t)
    assert info.value.index == 0


def test_bad_premise_references():
    t, p = parse("var q: bool; q := H[q];")
    with pytest.raises(StepFailed):
        check_outline([{"rule": "R.SC", "premises": [0, 1]}], p, t)
    with pytest.raises(StepFailed):
        check_outline([{"rule": "R.Nope"}], p, t)
    with pytest.raises(StepFailed):
        ProofOutline.from_json([{"premises": []}])


def test_program_references():
    t, p = parse("""var q: bool; var r: bool;
        q := H[q];
        if meas[q] { 0 -> { r := X[r]; } 1 -> { skip; } }
        while meas[r] = 1 { r := H[r]; q := X[q]; }""")
    assert isinstance(resolve_program_ref(p, "0"), Unitary)
    assert isinstance(resolve_program_ref(p, 1), Cond)
    assert len(statements(resolve_program_ref(p, "0:2"))) == 2
    assert isinstance(resolve_program_ref(p, "1/b0"), Unitary)
    assert isinstance(resolve_program_ref(p, "2/body/1"), Unitary)
    assert isinstance(resolve_program_ref(p, "all"), type(p))
    with pytest.raises(ValueError):
        resolve_program_ref(p, "0/body")
