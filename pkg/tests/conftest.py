from __future__ import annotations

import os
import sys

import numpy as np
import pytest
from scipy.stats import unitary_group

sys.path.insert(0, os.path.dirname(__file__))

from qwv import dirac
from qwv.dirac import VarTable
from qwv.qtypes import Bool, ZN
from qwv.qwhile import Abort, Skip, While, apply, basis_measurement, cond, init, init_state, seq


def rand_unitary(d: int, rng) -> np.ndarray:
    return unitary_group.rvs(d, random_state=rng) if d > 1 else np.array([[np.exp(2j * np.pi * rng.random())]])


def rand_matrix(d: int, rng, cols: int | None = None) -> np.ndarray:
    return rng.normal(size=(d, cols or d)) + 1j * rng.normal(size=(d, cols or d))


def rand_hermitian(d: int, rng) -> np.ndarray:
    a = rand_matrix(d, rng)
    return (a + a.conj().T) / 2


def rand_psd(d: int, rng, rank: int | None = None) -> np.ndarray:
    a = rand_matrix(d, rng, rank or d)
    return a @ a.conj().T


def rand_density(d: int, rng) -> np.ndarray:
    p = rand_psd(d, rng)
    return p / np.trace(p).real


def rand_effect(d: int, rng) -> np.ndarray:
    u = rand_unitary(d, rng)
    return u @ np.diag(rng.random(d)) @ u.conj().T


def rand_ket(d: int, rng) -> np.ndarray:
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return v / np.linalg.norm(v)


def make_table(dims) -> tuple[VarTable, list]:
    table = VarTable()
    vs = [table.declare(f"v{i}", Bool() if d == 2 else ZN(d)) for i, d in enumerate(dims)]
    return table, vs


def rand_program(vs, rng, depth: int = 3, loops: bool = False):
    """Random loop-free (or coin-loop) program over ``vs``."""
    kinds = ["unitary", "init", "seq", "cond", "skip"] + (["while"] if loops else [])
    if depth <= 0:
        kinds = ["unitary", "init", "skip"]
    kind = kinds[rng.integers(len(kinds))]
    if kind == "skip":
        return Skip()
    k = rng.integers(1, min(2, len(vs)) + 1)
    chosen = [vs[i] for i in sorted(rng.choice(len(vs), size=k, replace=False))]
    target = chosen[0] if k == 1 else dirac.composite(*chosen)
    if kind == "unitary":
        return apply(target, rand_unitary(target.dim, rng))
    if kind == "init":
        x = chosen[0]
        if rng.random() < 0.5:
            return init(x, int(rng.integers(x.dim)))
        return init_state(x, rand_ket(x.dim, rng))
    if kind == "seq":
        return seq(rand_program(vs, rng, depth - 1, loops), rand_program(vs, rng, depth - 1, loops))
    x = chosen[0]
    m = basis_measurement(x)
    if kind == "cond":
        return cond(m, {o: rand_program(vs, rng, depth - 1, loops) for o in m.outcomes})
    bools = [v for v in vs if v.dim == 2]
    if not bools:
        return Skip()
    b = bools[rng.integers(len(bools))]
    body = apply(b, rand_unitary(2, rng))
    # ending the body with a generic unitary on the guard makes the loop exit with probability 1
    return While(basis_measurement(b), 1, seq(rand_program(vs, rng, depth - 2, False), body) if depth > 2 else body)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance criteria report one line each; printed after the test run
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
