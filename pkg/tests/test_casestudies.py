import itertools
import math

import numpy as np
import pytest

from qwv import dirac, hoare, semantics
from qwv.casestudies import (EXAMPLES, build, grover, hhl, hlf, hsp, para_hadamard, qft_circuit, qpe,
                             rev_circuit, run_suite)
from qwv.errors import BadHidingFunction, BadParam


def statevector_grover(n_items, marked, rounds):
    psi = np.full(n_items, 1 / math.sqrt(n_items))
    oracle = np.array([-1 if i in marked else 1 for i in range(n_items)])
    diffusion = 2 * np.outer(psi, psi) - np.eye(n_items)
    v = psi.copy()
    for _ in range(rounds):
        v = diffusion @ (oracle * v)
    return float(sum(abs(v[i]) ** 2 for i in marked))


def brute_force_hlf(a):
    n = len(a)
    out = np.zeros(2 ** n, dtype=complex)
    for y in itertools.product([0, 1], repeat=n):
        total = 0
        for x in itertools.product([0, 1], repeat=n):
            quad = sum(a[i][j] * x[i] * x[j] for i in range(n) for j in range(i + 1, n))
            lin = sum(a[i][i] * x[i] for i in range(n))
            total += 1j ** lin * (-1) ** (quad + np.dot(x, y))
        out[int("".join(map(str, y)), 2)] = total / 2 ** n
    return out


@pytest.mark.parametrize("name", list(EXAMPLES))
def test_default_examples_verify(name):
    rep = build(name).verify()
    assert rep.ok, [c.detail for c in rep.failures()]


@pytest.mark.parametrize("n_items,marked,rounds", [(4, [3], 1), (8, [1, 5], 1), (8, [2], 2), (5, [0, 4], 1),
                                                   (6, [1], 0)])
def test_grover_probability_matches_statevector(n_items, marked, rounds):
    study = grover(n_items, marked, rounds)
    assert study.data["pre"] == pytest.approx(statevector_grover(n_items, marked, rounds), abs=1e-12)
    assert study.verify().ok


def test_grover_special_cases():
    assert grover(8, [3, 6], 0).data["pre"] == pytest.approx(2 / 8)
    assert grover(8, 2, 1).data["pre"] == pytest.approx(1.0)
    with pytest.raises(BadParam):
        grover(4, [4])


def test_hsp_distribution_is_uniform_on_dual():
    study = hsp((3, 2), ((0, 1),))
    probs = study.data["probabilities"]
    hperp = set(study.data["H_perp"].elements)
    for g, p in probs.items():
        assert p == pytest.approx(1 / len(hperp) if g in hperp else 0, abs=1e-12)
    assert study.verify().ok


def test_hsp_rejects_bad_hiding_functions():
    with pytest.raises(BadHidingFunction):
        hsp((2, 2), ((1, 1),), f=[0, 1, 1, 1])
    with pytest.raises(BadHidingFunction):
        hsp((2, 2), ((1, 1),), f=[0, 1, 2, 1])


@pytest.mark.parametrize("theta", [0.0, 0.25, 0.5, 0.75, 1 / 3])
def test_qpe_distribution_matches_fft(theta):
    n = 4
    study = qpe(n, theta)
    amps = np.fft.fft(np.exp(2j * np.pi * theta * np.arange(n))) / n
    assert np.allclose(study.data["probabilities"], np.abs(amps) ** 2, atol=1e-10)
    assert study.verify().ok


def test_qpe_rejects_non_eigenvector():
    with pytest.raises(BadParam):
        qpe(4, 0.25, u=np.diag([1, 1j]), eigvec=[1, 1])


@pytest.mark.parametrize("n", [1, 2, 3])
def test_qft_and_rev(n):
    assert qft_circuit(n).verify().ok
    assert rev_circuit(n).verify().ok


def test_hlf_amplitudes_against_brute_force():
    for a in ([[1, 1], [1, 0]], [[0, 1, 1], [1, 1, 0], [1, 0, 0]], [[0, 0], [0, 0]]):
        study = hlf(a)
        assert np.allclose(study.data["amplitudes"], brute_force_hlf(a), atol=1e-12)
        assert study.verify().ok
    assert np.allclose(hlf([[0, 0], [0, 0]]).data["amplitudes"], [1, 0, 0, 0])
    with pytest.raises(BadParam):
        hlf([[0, 1], [0, 0]])


def test_parallel_hadamard_twice_is_identity():
    study = para_hadamard(3)
    so = study.denotation()
    twice = semantics.compose(so, so)
    assert semantics.approx_equal(twice, semantics.identity_map(study.table, so.labels))


def test_hhl_eigenvector_input():
    t0 = 2 * math.pi
    a = np.diag([1.0, 2.0]) * 2 * math.pi / t0
    for b in ([1, 0], [0, 1]):
        study = hhl(a, b)
        assert np.allclose(np.abs(study.data["x"]), np.abs(b))
        assert study.verify().ok


def test_hhl_solution_matches_linear_solve():
    a = np.diag([1.0, 3.0])
    b = np.array([0.6, 0.8])
    study = hhl(a, b, n=4, c=0.5)
    x = np.linalg.solve(a, b)
    x /= np.linalg.norm(x)
    assert abs(np.vdot(x, study.data["x"])) == pytest.approx(1, abs=1e-12)
    assert study.verify().ok


@pytest.mark.parametrize("kwargs", [dict(b=[1, 1]), dict(a=np.diag([1.0, 5.0])), dict(c=1.5),
                                    dict(a=np.diag([0.5, 1.0]))])
def test_hhl_parameter_checks(kwargs):
    with pytest.raises(BadParam):
        hhl(**kwargs)


def test_run_suite_reports_each_example():
    reports = run_suite(["grover", "rev"], {"grover": {"n_items": 8, "marked": 2}})
    assert [r.name for r in reports] == ["grover", "rev"] and all(r.ok for r in reports)
    with pytest.raises(KeyError):
        build("shor")
