import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import make_table, rand_program, rand_unitary
from qwv import dirac
from qwv.errors import (DisjointnessError, NotAWhile, QWhileSyntaxError, QWhileTypeError, UnknownGate,
                        UnknownVariable)
from qwv.parser import parse, parse_type, parse_with_sidecar, pretty, tokenize
from qwv.qwhile import (Abort, Cond, Init, Seq, Skip, Unitary, While, apply, approximate_while,
                        basis_measurement, cond, desugar_for, footprint, has_while, init, same_program,
                        seq, slice_program, statements)

SAMPLE = """
var q : bool;
var r : bool^2;  // a pair
var z : int<3> * bool;
q := |0>;
q := H[q];
[q, r[0]] := CNOT[q, r[0]];
if meas[q] { 0 -> { skip; } 1 -> { q := X[q]; } }
while meas[q] = 1 { q := H[q]; }
for i < 2 { r[i] := H[r[i]]; }
z := |(2,1)>;
"""


def test_sample_program_structure():
    t, p = parse(SAMPLE)
    kinds = [type(s).__name__ for s in statements(p)]
    assert kinds == ["Init", "Unitary", "Unitary", "Cond", "While", "Unitary", "Unitary", "Init"]
    assert footprint(p) == (0, 1, 2, 3, 4)
    assert has_while(p)
    init_z = statements(p)[-1]
    assert init_z.value == (2, 1) and np.isclose(init_z.state.matrix[5, 5], 1)


def test_types():
    assert parse_type("bool^3").dim == 8
    assert parse_type("int<3> * (bool * int<2>)").dim == 12
    with pytest.raises(QWhileSyntaxError):
        parse_type("int<3> bool")


def test_tokenizer_skips_comments():
    kinds = [t.text for t in tokenize("q := H[q]; // done") if t.kind != "eof"]
    assert kinds == ["q", ":=", "H", "[", "q", "]", ";"]


@pytest.mark.parametrize("src,err", [
    ("var q: bool; q := H[q]", QWhileSyntaxError),
    ("var q: bool; [q,q] := CNOT[q,q];", DisjointnessError),
    ("var q: bool;\n q := Foo[q];", UnknownGate),
    ("var q : bool; w := H[w];", UnknownVariable),
    ("var q: bool; q := |5>;", QWhileTypeError),
    ("var q: bool; var q: bool;", QWhileTypeError),
    ("var q: bool; q := CNOT[q];", QWhileTypeError),
    ("var q: int<3>; while meas[q] = 1 { skip; }", QWhileTypeError),
])
def test_errors(src, err):
    with pytest.raises(err):
        parse(src)


def test_syntax_error_position():
    with pytest.raises(QWhileSyntaxError, match=r"line 2, col 6"):
        parse("var q: bool;\nq := ;")


def test_state_and_density_inits():
    t, p = parse("var q: bool; q := state([0.6, 0.8]);")
    assert np.allclose(p.state.matrix, [[0.36, 0.48], [0.48, 0.64]])
    with pytest.raises(QWhileTypeError):
        parse("var q: bool; q := state([1, 1]);")
    t, p = parse("var q: bool; q := density(I(q) / 2);")
    assert np.allclose(p.state.matrix, np.eye(2) / 2)
    with pytest.raises(QWhileTypeError):
        parse("var q: bool; q := density(I(q));")


def test_custom_gate_and_measurement_through_sidecar(rng):
    u = rand_unitary(2, rng)
    side = {"gates": {"U": [[[z.real, z.imag] for z in row] for row in u]},
            "measurements": {"M": {"outcomes": [0, 1],
                                   "operators": [[[[1, 0], [0, 0]], [[0, 0], [0, 0]]],
                                                 [[[0, 0], [0, 0]], [[0, 0], [1, 0]]]]}}}
    t, p = parse_with_sidecar("var q: bool; q := U[q]; if M[q] { 0 -> { skip; } 1 -> { abort; } }", side)
    first, second = statements(p)
    assert np.allclose(first.op.matrix, u)
    assert second.measurement.name == "M"


def test_desugar_for_and_slicing():
    t, vs = make_table([2, 2, 2])
    h = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    p = desugar_for(range(3), lambda i: apply(vs[i], h))
    assert len(statements(p)) == 3
    assert same_program(slice_program(p, 1, 3), seq(apply(vs[1], h), apply(vs[2], h)))
    assert isinstance(desugar_for([], lambda i: None), Skip)
    # associativity does not matter for structural equality
    a, b, c = (apply(v, h) for v in vs)
    assert same_program(Seq(Seq(a, b), c), Seq(a, Seq(b, c)))
    assert not same_program(Seq(a, b), Seq(b, a))


def test_approximate_while():
    t, (q,) = make_table([2])
    h = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    loop = While(basis_measurement(q), 1, apply(q, h))
    assert isinstance(approximate_while(loop, 0), Abort)
    a2 = approximate_while(loop, 2)
    assert isinstance(a2, Cond) and isinstance(a2.branch(0), Skip)
    assert isinstance(a2.branch(1).second, Cond)
    with pytest.raises(NotAWhile):
        approximate_while(Skip(), 1)


def test_constructor_checks():
    t, (q, r) = make_table([2, 3])
    with pytest.raises(QWhileTypeError):
        apply(q, np.ones((2, 2)))
    with pytest.raises(QWhileTypeError):
        cond(basis_measurement(q), {0: Skip()})
    with pytest.raises(QWhileTypeError):
        cond(basis_measurement(q), {0: Skip(), 1: Skip(), 2: Skip()})
    assert isinstance(cond(basis_measurement(r), {}, default=Skip()), Cond)
    with pytest.raises(QWhileTypeError):
        While(basis_measurement(q), 7, Skip())
    with pytest.raises((QWhileTypeError, Exception)):
        init(q, 2)
    with pytest.raises(DisjointnessError):
        dirac.composite(q, q)


def test_footprint_ignores_skip_and_abort():
    t, (q, r) = make_table([2, 2])
    assert footprint(seq(Skip(), Abort())) == ()
    assert footprint(seq(init(q), Skip())) == q.labels
    m = basis_measurement(r)
    assert footprint(cond(m, {0: Skip(), 1: Abort()})) == r.labels


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_pretty_parse_round_trip(seed):
    rng = np.random.default_rng(seed)
    t, vs = make_table([2, 3, 2])
    p = rand_program(vs, rng, depth=3, loops=True)
    text, side = pretty(p, t)
    t2, p2 = parse_with_sidecar(text, side)
    assert same_program(p, p2, 1e-9)
    text2, _ = pretty(p2, t2)
    assert text2 == text
