"""Randomized property suites shared by the module tests and the acceptance suite.

Each function runs ``n`` random cases and returns the largest deviation seen.
"""

from __future__ import annotations

import numpy as np

from conftest import rand_matrix, rand_unitary
from qwv import dirac
from qwv.dirac import VarTable
from qwv.errors import LabelClash
from qwv.group import AbelianGroup, cosets, orthogonal_subgroup
from qwv.qtypes import ZN


def _table(dims):
    t = VarTable()
    return t, [t.declare(f"q{i}", ZN(d)) for i, d in enumerate(dims)]


def _random_labels(rng, labels, allow_empty=True):
    mask = rng.random(len(labels)) < 0.5
    chosen = tuple(l for l, m in zip(labels, mask) if m)
    if not chosen and not allow_empty:
        chosen = (labels[rng.integers(len(labels))],)
    return chosen


def _random_operator(rng, table, out, inp):
    return dirac.operator(table, out, rand_matrix(table.size(out), rng, table.size(inp)), inp)


def _distance(a, b) -> float:
    assert a.out == b.out and a.inp == b.inp, (a.out, a.inp, b.out, b.inp)
    return float(np.linalg.norm(a.matrix - b.matrix))


def transpose_across_entangled_pair(n: int, seed: int = 0) -> float:
    """``A[S]|Φ⟩ = Aᵀ[T]|Φ⟩`` for random bases of ``S`` and ``T`` and random ``A``."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        d = int(rng.integers(2, 5))
        table = VarTable()
        # put T first sometimes so that the canonical order does not favour S
        names = ["s", "t"] if rng.random() < 0.5 else ["t", "s"]
        vs = {name: table.declare(name, ZN(d)) for name in names}
        s, t = vs["s"], vs["t"]
        v, u = rand_unitary(d, rng), rand_unitary(d, rng)
        phi = dirac.big_tensor([dirac.ket(table, s, v[:, 0]), dirac.ket(table, t, u[:, 0])])
        for i in range(1, d):
            phi = phi + dirac.tensor(dirac.ket(table, s, v[:, i]), dirac.ket(table, t, u[:, i]))
        a = rand_matrix(d, rng)
        a_s = dirac.operator(table, s, v @ a @ v.conj().T)
        at_t = dirac.operator(table, t, u @ a.T @ u.conj().T)
        worst = max(worst, _distance(dirac.compose(a_s, phi), dirac.compose(at_t, phi)))
    return worst


def tensor_commutativity(n: int, seed: int = 0) -> float:
    """``a ⊗ b = b ⊗ a`` and ``(a ⊗ b) ⊗ c = a ⊗ (b ⊗ c)`` on disjoint labels."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        table, vs = _table(rng.integers(2, 4, size=5))
        labels = [v.labels[0] for v in vs]
        parts = rng.integers(0, 3, size=len(labels))
        ops = []
        for k in range(3):
            own = [l for l, p in zip(labels, parts) if p == k]
            ops.append(_random_operator(rng, table, _random_labels(rng, own), _random_labels(rng, own)))
        a, b, c = ops
        worst = max(worst, _distance(dirac.tensor(a, b), dirac.tensor(b, a)),
                    _distance(dirac.tensor(dirac.tensor(a, b), c), dirac.tensor(a, dirac.tensor(b, c))))
    return worst


def compose_associativity(n: int, seed: int = 0) -> float:
    """``(f g) h = f (g h)`` on random label sets where both groupings are defined."""
    rng = np.random.default_rng(seed)
    worst, done = 0.0, 0
    while done < n:
        table, vs = _table(rng.integers(2, 4, size=4))
        labels = [v.labels[0] for v in vs]
        f, g, h = (_random_operator(rng, table, _random_labels(rng, labels), _random_labels(rng, labels))
                   for _ in range(3))
        try:
            left = dirac.compose(dirac.compose(f, g), h)
            right = dirac.compose(f, dirac.compose(g, h))
        except LabelClash:
            continue
        scale = max(1.0, float(np.linalg.norm(left.matrix)))
        worst = max(worst, _distance(left, right) / scale)
        done += 1
    return worst


def cylinder_homomorphism(n: int, seed: int = 0) -> float:
    """``cl_T(A) cl_T(B) = cl_T(A B)`` for ``A, B`` square on ``S ⊆ T``."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        table, vs = _table(rng.integers(2, 4, size=4))
        labels = [v.labels[0] for v in vs]
        t = _random_labels(rng, labels, allow_empty=False)
        s = _random_labels(rng, list(t))
        a, b = _random_operator(rng, table, s, s), _random_operator(rng, table, s, s)
        lhs = dirac.compose(dirac.cyl_extend(a, t), dirac.cyl_extend(b, t))
        rhs = dirac.cyl_extend(dirac.compose(a, b), t)
        worst = max(worst, _distance(lhs, rhs) / max(1.0, float(np.linalg.norm(rhs.matrix))))
    return worst


def _groups_up_to(order: int):
    """Every product of cyclic groups (moduli ≥ 2, non-decreasing) with at most ``order`` elements."""
    out = []

    def extend(prefix, prod, low):
        if prefix:
            out.append(tuple(prefix))
        for p in range(low, order + 1):
            if prod * p > order:
                break
            extend(prefix + [p], prod * p, p)

    extend([], 1, 2)
    return out


def group_identities(max_order: int = 24, seed: int = 0) -> tuple[float, int]:
    """Re-summation over cosets and the three character identities, exhaustively over subgroups.

    Returns the largest deviation and the number of (group, subgroup) pairs checked.
    """
    rng = np.random.default_rng(seed)
    worst, pairs = 0.0, 0
    for moduli in _groups_up_to(max_order):
        g = AbelianGroup(moduli)
        elems = list(g.elements())
        chi = np.array([[g.character(a, b) for b in elems] for a in elems])
        worst = max(worst, float(np.max(np.abs(chi - chi.T))))
        plus = np.array([[g.add(x, y) for y in elems] for x in elems])
        worst = max(worst, float(np.max(np.abs(chi[:, plus] - chi[:, :, None] * chi[:, None, :]))))
        for h in g.all_subgroups():
            pairs += 1
            f = rng.normal(size=len(elems)) + 1j * rng.normal(size=len(elems))
            resummed = sum(f[g.add(x, c.repr)] for c in cosets(h) for x in h.elements)
            worst = max(worst, abs(f.sum() - resummed))
            hperp = orthogonal_subgroup(h)
            for a in elems:
                total = sum(chi[a, x] for x in h.elements)
                trivial = all(abs(chi[a, x] - 1) < 1e-12 for x in h.elements)
                expected = len(h) if trivial else 0
                worst = max(worst, abs(total - expected))
                assert trivial == (a in hperp)
    return worst, pairs
