import numpy as np
import pytest

from qwv import dirac
from qwv.assertion import evaluate, format_number, format_operator, parse_assertion
from qwv.errors import QWhileSyntaxError, UnknownVariable
from qwv.parser import parse


@pytest.fixture
def t():
    return parse("var q: bool; var r: int<3>;")[0]


def test_builtins(t):
    assert np.allclose(parse_assertion("ket(q,1)", t).matrix.ravel(), [0, 1])
    assert np.allclose(parse_assertion("proj(r,2)", t).matrix, np.diag([0, 0, 1]))
    assert np.allclose(parse_assertion("vec(q,[1,im])", t).matrix.ravel(), [1, 1j])
    both = parse_assertion("I(q) (x) proj(r,2)", t)
    assert both.out == (0, 1) and np.allclose(both.matrix, np.kron(np.eye(2), np.diag([0, 0, 1])))
    assert np.allclose(parse_assertion("ket(q,0)*adj(ket(q,0))", t).matrix, np.diag([1, 0]))
    s = parse_assertion("sum(k in 0..3, proj(r,k))", t)
    assert np.allclose(s.matrix, np.eye(3))
    assert np.isclose(parse_assertion("tr(I(r))", t).scalar(), 3)


def test_scalar_expressions():
    assert evaluate("2^3 + 1") == 9
    assert np.isclose(evaluate("exp(i*pi)"), -1)
    assert np.isclose(evaluate("sqrt(2)*cos(pi/4)"), 1)


def test_errors(t):
    with pytest.raises(QWhileSyntaxError):
        parse_assertion("proj(q,", t)
    with pytest.raises(UnknownVariable):
        parse_assertion("proj(w,0)", t)


def test_format_round_trip(t, rng):
    m = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    a = dirac.operator(t, (0, 1), m)
    back = parse_assertion(format_operator(a), t)
    assert back.out == a.out and np.allclose(back.matrix, m, atol=1e-12)
    k = parse_assertion("vec(q,[0.6, 0.8*im])", t)
    assert np.allclose(parse_assertion(format_operator(k), t).matrix, k.matrix)
    assert format_number(1.5) == "(1.5)"
    assert np.isclose(evaluate(format_number(0.5 - 2j)), 0.5 - 2j)
