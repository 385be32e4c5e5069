import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import properties
from conftest import make_table, rand_matrix, rand_unitary
from oracle import FullSpace
from qwv import dirac
from qwv.dirac import VarTable
from qwv.errors import LabelClash, LabelMismatch, NotSquare, NotSuperset, ShapeMismatch, UnknownLabel
from qwv.qtypes import Bool, ZN

seeds = st.integers(0, 2**32 - 1)


@pytest.fixture
def xy():
    t = VarTable()
    return t, t.declare("x", Bool()), t.declare("y", Bool())


def test_ket_and_bra(xy):
    t, x, y = xy
    k = dirac.ket(t, x, [1, 0])
    assert k.is_ket and k.out == x.labels and k.inp == ()
    assert dirac.approx_eq(dirac.bra(t, x, [1, 0]), k.adjoint())
    bell = dirac.ket(t, [x, y], np.array([1, 0, 0, 1]) / np.sqrt(2))
    by_hand = (dirac.tensor(dirac.basis_ket(x, 0), dirac.basis_ket(y, 0))
               + dirac.tensor(dirac.basis_ket(x, 1), dirac.basis_ket(y, 1))) / np.sqrt(2)
    assert dirac.approx_eq(bell, by_hand)
    with pytest.raises(ShapeMismatch):
        dirac.ket(t, x, [1, 0, 0])


def test_unknown_label(xy):
    t, x, _ = xy
    with pytest.raises(UnknownLabel):
        dirac.ket(t, (7,), [1, 0])


def test_tensor_examples(xy):
    t, x, y = xy
    a, b = dirac.basis_ket(x, 0), dirac.basis_ket(y, 1)
    assert dirac.approx_eq(dirac.tensor(a, b), dirac.tensor(b, a))
    assert dirac.approx_eq(dirac.tensor(a, dirac.scalar(t, 1)), a)
    assert np.allclose(dirac.tensor(a, b).matrix.ravel(), [0, 1, 0, 0])
    with pytest.raises(LabelClash):
        dirac.tensor(a, a)


def test_canonical_order_puts_first_label_most_significant(xy):
    t, x, y = xy
    # |1⟩_y |0⟩_x written with y first still lands on index 1 (x most significant)
    v = dirac.tensor(dirac.basis_ket(y, 1), dirac.basis_ket(x, 0))
    assert np.argmax(np.abs(v.matrix.ravel())) == 1


def test_compose_examples(rng):
    t = VarTable()
    s1, s2 = t.declare("a", ZN(3)), t.declare("b", Bool())
    u = rand_unitary(3, rng)
    phi, psi = dirac.ket(t, s1, rng.normal(size=3)), dirac.ket(t, s2, rng.normal(size=2))
    lhs = dirac.compose(dirac.operator(t, s1, u), dirac.tensor(phi, psi))
    rhs = dirac.tensor(dirac.compose(dirac.operator(t, s1, u), phi), psi)
    assert dirac.approx_eq(lhs, rhs)
    uu, vv = rng.normal(size=3), rng.normal(size=3)
    inner = dirac.compose(dirac.bra(t, s1, uu), dirac.ket(t, s1, vv))
    assert inner.is_scalar and np.isclose(inner.scalar(), np.vdot(uu, vv))


def test_compose_label_clash(xy):
    t, x, y = xy
    f = dirac.operator(t, [x, y], np.ones((4, 2)), in_labels=x)  # out {x,y}, in {x}
    g = dirac.basis_ket(y, 0)  # out {y}: y would pass through f and appear twice
    with pytest.raises(LabelClash):
        dirac.compose(f, g)


def test_linear_structure(xy):
    t, x, _ = xy
    k = dirac.ket(t, x, [1, 1])
    assert np.allclose(dirac.add(k, dirac.scale(-1, k)).matrix, 0)
    assert dirac.basis_ket(x, 0).norm() == 1
    assert np.isclose((k / np.sqrt(2)).norm(), 1)
    with pytest.raises(LabelMismatch):
        dirac.add(k, dirac.density(k))


def test_cylindrical_extension(xy, rng):
    t, x, y = xy
    a = dirac.operator(t, x, rand_matrix(2, rng))
    assert dirac.approx_eq(dirac.cyl_extend(a, x.labels), a)
    p = dirac.cyl_extend(dirac.projector(x, 0), [x, y])
    assert np.isclose(p.trace(), 2)
    back = dirac.partial_trace(dirac.cyl_extend(a, [x, y]), x.labels)
    assert dirac.approx_eq(back, 2 * a)
    with pytest.raises(NotSquare):
        dirac.cyl_extend(dirac.basis_ket(x, 0), [x, y])
    with pytest.raises(NotSuperset):
        dirac.cyl_extend(a, y.labels)


def test_big_tensor(rng):
    t, vs = make_table([2, 2, 2])
    assert dirac.approx_eq(dirac.big_tensor([], t), dirac.scalar(t, 1))
    kets = [dirac.ket(t, v, rng.normal(size=2)) for v in vs]
    assert dirac.approx_eq(dirac.big_tensor(kets), dirac.big_tensor(kets[::-1]))
    zero = dirac.big_tensor([dirac.basis_ket(v, 0) for v in vs])
    assert np.allclose(zero.matrix.ravel(), np.eye(8)[0])
    with pytest.raises(LabelClash):
        dirac.big_tensor([kets[0], kets[0]])


def test_approx_eq(xy):
    t, x, _ = xy
    k = dirac.ket(t, x, [1, 0])
    assert dirac.approx_eq(k, k)
    assert not dirac.approx_eq(k, dirac.ket(t, x, [1, 1e-6]), 1e-9)


def test_operator_moves_across_entangled_pair_as_transpose():
    assert properties.transpose_across_entangled_pair(50, seed=1) <= 1e-10


def test_tensor_commutes_and_associates():
    assert properties.tensor_commutativity(50, seed=1) <= 1e-10


def test_compose_associative():
    assert properties.compose_associativity(50, seed=1) <= 1e-10


def test_cylinder_homomorphism():
    assert properties.cylinder_homomorphism(50, seed=1) <= 1e-10


@settings(max_examples=40, deadline=None)
@given(seed=seeds)
def test_adjoint_of_composition(seed):
    rng = np.random.default_rng(seed)
    t, vs = make_table([2, 3, 2])
    labels = [v.labels[0] for v in vs]
    pick = lambda: tuple(l for l in labels if rng.random() < 0.5)
    a_out, a_in, b_in = pick(), pick(), pick()
    f = dirac.operator(t, a_out, rand_matrix(t.size(a_out), rng, t.size(a_in)), a_in)
    g = dirac.operator(t, a_in, rand_matrix(t.size(a_in), rng, t.size(b_in)), b_in)
    lhs = dirac.adjoint(dirac.compose(f, g))
    rhs = dirac.compose(dirac.adjoint(g), dirac.adjoint(f))
    assert np.allclose(lhs.matrix, rhs.matrix)


@settings(max_examples=40, deadline=None)
@given(seed=seeds)
def test_square_compose_matches_full_space_oracle(seed):
    rng = np.random.default_rng(seed)
    t, vs = make_table([2, 3, 2])
    fs = FullSpace(t)
    labels = [v.labels[0] for v in vs]
    ops = []
    for _ in range(2):
        s = tuple(l for l in labels if rng.random() < 0.6) or (labels[0],)
        ops.append(dirac.operator(t, s, rand_matrix(t.size(s), rng)))
    f, g = ops
    fg = dirac.compose(f, g)
    assert np.allclose(fs.embed(fg.matrix, fg.out), fs.embed(f.matrix, f.out) @ fs.embed(g.matrix, g.out))


def test_partial_trace_against_oracle(rng):
    t, vs = make_table([2, 3, 2])
    fs = FullSpace(t)
    rho = rand_matrix(12, rng)
    full = dirac.operator(t, [v.labels[0] for v in vs], rho)
    for keep in [(0,), (1,), (0, 2), (1, 2), ()]:
        assert np.allclose(dirac.partial_trace(full, keep).matrix, fs.reduce(rho, keep))
