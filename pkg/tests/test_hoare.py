import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import make_table, rand_effect, rand_program, rand_unitary
from oracle import FullSpace
from qwv import dirac, hoare, semantics
from qwv.assertion import parse_assertion as A
from qwv.errors import NotHermitian, NotNormalized, NotSquare, SideConditionViolated, UnknownRule
from qwv.hoare import Judgment, apply_rule, check_state_triple, check_valid, wlp, wp
from qwv.parser import parse
from qwv.qwhile import Skip, apply, init, seq, statements

seeds = st.integers(0, 2**32 - 1)


@pytest.fixture
def hq():
    return parse("var q: bool; var r: bool; q := H[q];")


def test_wp_examples(hq):
    t, p = hq
    assert hoare.close(wp(p, A("proj(q,0)", t)), A("op(q, [[0.5, 0.5], [0.5, 0.5]])", t))
    t2, div = parse("var q: bool; while meas[q] = 1 { skip; }")
    assert hoare.close(wp(div, A("I(q)", t2)), A("proj(q,0)", t2))
    assert hoare.close(wlp(div, A("proj(q,0)", t2)), A("I(q)", t2))
    assert hoare.close(wlp(div, A("0*I(q)", t2)), A("proj(q,1)", t2))


def test_wp_labels_include_post_and_extra(hq):
    t, p = hq
    w = wp(p, A("proj(r,1)", t))
    assert w.out == (0, 1)
    assert hoare.close(w, A("I(q) (x) proj(r,1)", t))


def test_check_valid_examples(hq):
    t, p = hq
    plus = A("op(q, [[0.5, 0.5], [0.5, 0.5]])", t)
    v = check_valid(Judgment(plus, p, A("proj(q,0)", t), saturated=True))
    assert v.valid and v.residual < 1e-12
    bad = check_valid(Judgment(A("I(q)", t), p, A("proj(q,0)", t)))
    assert not bad.valid and bad.slack == pytest.approx(-1.0)
    half = check_valid(Judgment(A("0.5*I(q)", t), p, A("proj(q,0)", t)))
    assert not half.valid and half.slack == pytest.approx(-0.5)
    zero = check_valid(Judgment(A("0*I(q)", t), p, A("proj(q,0)", t)))
    assert zero.valid and zero.slack == pytest.approx(0.0, abs=1e-12)
    assert not check_valid(Judgment(A("0*I(q)", t), p, A("proj(q,0)", t), saturated=True)).valid


def test_total_versus_partial_on_divergence():
    t, p = parse("var q: bool; while meas[q] = 1 { skip; }")
    j = lambda mode: Judgment(A("I(q)", t), p, A("proj(q,0)", t), mode)
    assert check_valid(j("partial")).valid
    assert not check_valid(j("total")).valid


def test_judgment_checks(hq):
    t, p = hq
    with pytest.raises(NotSquare):
        Judgment(A("ket(q,0)", t), p, A("I(q)", t))
    with pytest.raises(ValueError):
        Judgment(A("I(q)", t), p, A("I(q)", t), mode="sometimes")
    with pytest.raises(NotHermitian):
        check_valid(Judgment(A("op(q, [[0, 1], [0, 0]])", t), p, A("I(q)", t)))


def test_denotation_reuse_on_larger_domain(hq, rng):
    t, p = hq
    j = Judgment(A("op(q, [[0.5, 0.5], [0.5, 0.5]])", t), p, A("proj(q,0)", t))
    so = semantics.denote(p, t, (0, 1))
    a, b = check_valid(j), check_valid(j, denotation=so)
    assert a.valid == b.valid and a.slack == pytest.approx(b.slack)
    assert b.labels == (0, 1)


@settings(max_examples=40, deadline=None)
@given(seed=seeds, mode=st.sampled_from(["total", "partial"]))
def test_wp_matches_oracle_and_loewner(seed, mode):
    rng = np.random.default_rng(seed)
    t, vs = make_table([2, 3])
    labs = (0, 1)
    c = rand_program(vs, rng, depth=3, loops=True)
    b = dirac.operator(t, labs, rand_effect(6, rng))
    fs = FullSpace(t)
    want = fs.wp(c, b.matrix)
    if mode == "partial":
        want = want + np.eye(6) - fs.wp(c, np.eye(6))
    got = (wp if mode == "total" else wlp)(c, b, labels=labs)
    assert np.linalg.norm(got.matrix - want) < 1e-8
    pre = dirac.operator(t, labs, rand_effect(6, rng))
    v = check_valid(Judgment(pre, c, b, mode))
    assert v.valid == (np.linalg.eigvalsh((want - pre.matrix + (want - pre.matrix).conj().T) / 2).min() >= -1e-9)


def test_wlp_of_identity_is_identity(rng):
    t, vs = make_table([2, 2])
    for _ in range(10):
        c = rand_program(vs, rng, depth=3, loops=True)
        w = wlp(c, A("I(v0)", t), labels=(0, 1))
        assert np.allclose(w.matrix, np.eye(4), atol=1e-9)


def test_validity_independent_of_spectators(rng):
    t, vs = make_table([2, 2, 2])
    for _ in range(10):
        c = rand_program(vs[:2], rng, depth=3, loops=True)
        pre = dirac.operator(t, (0,), rand_effect(2, rng))
        post = dirac.operator(t, (1,), rand_effect(2, rng))
        j = Judgment(pre, c, post)
        wide = semantics.denote(c, t, (0, 1, 2))
        assert check_valid(j).valid == check_valid(j, denotation=wide).valid


def test_state_triples(hq):
    t, p = hq
    plus = A("vec(q, [sqrt(0.5), sqrt(0.5)])", t)
    assert check_state_triple(plus, p, A("ket(q,0)", t), saturated=True).valid
    with pytest.raises(SideConditionViolated):
        check_state_triple(A("vec(q, [2, 0])", t), p, A("ket(q,0)", t))
    with pytest.warns(NotNormalized):
        check_state_triple(A("vec(q, [0.5, 0.5])", t), p, A("ket(q,0)", t), saturated=True)


def test_axioms_give_valid_conclusions(hq):
    t, p = hq
    post = A("proj(q,1) (x) proj(r,0)", t)
    for rule in ["Ax.UT", "Ax.UTF"]:
        j = apply_rule(rule, [], {"A": post, "program": p})
        assert j.saturated and check_valid(j).valid
    sk = apply_rule("Ax.Sk", [], {"A": post})
    assert isinstance(sk.program, Skip) and check_valid(sk).valid
    ini = init(t.variables()[0], 1)
    jin = apply_rule("Ax.In", [], {"A": post, "program": ini})
    assert check_valid(jin).valid


def test_sequence_rule_and_its_side_condition(hq):
    t, p = hq
    b = A("proj(q,0)", t)
    j2 = apply_rule("Ax.UT", [], {"A": b, "program": p})
    j1 = apply_rule("Ax.UT", [], {"A": j2.pre, "program": p})
    both = apply_rule("R.SC", [j1, j2])
    assert len(statements(both.program)) == 2 and check_valid(both).valid
    with pytest.raises(SideConditionViolated):
        apply_rule("R.SC", [j2, j2])


def test_frame_and_inner(hq):
    t, p = hq
    j = apply_rule("Ax.UTF", [], {"A": A("proj(q,0)", t), "program": p, "mode": "partial", "saturated": False})
    framed = apply_rule("Frame.P", [j], {"R": A("0.3*proj(r,1)", t)})
    assert framed.pre.out == (0, 1) and check_valid(framed).valid
    with pytest.raises(SideConditionViolated):
        apply_rule("Frame.P", [j], {"R": A("0.3*proj(q,1)", t)})
    t3, prog = parse("var q: bool; q := |0>; q := H[q];")
    v = A("vec(q, [sqrt(0.5), sqrt(0.5)])", t3)
    base = Judgment(dirac.scalar(t3, 1), prog, dirac.density(v), "total", True)
    assert check_valid(base).valid
    inner = apply_rule("R.Inner", [base], {"v": v, "u": A("ket(q,0)", t3)})
    assert np.isclose(inner.pre.scalar(), 0.5) and check_valid(inner).valid


def test_unknown_rule_and_missing_witness():
    with pytest.raises(UnknownRule):
        apply_rule("R.Magic", [])
    with pytest.raises(SideConditionViolated, match="missing witness"):
        apply_rule("Ax.Sk", [], {})
    with pytest.raises(SideConditionViolated):
        apply_rule("Ax.Sk", [], {"A": None, "mode": "eventually"})


def test_rule_table_is_complete():
    assert len(hoare.RULE_IDS) == 32
    assert {"Ax.Sk", "R.SC", "R.IF", "R.LP.P", "Frame.T", "R.Inner", "Ax.InFP'"} <= set(hoare.RULE_IDS)
