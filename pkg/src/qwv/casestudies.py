"""Built-in case studies: programs, their correctness triples and numeric cross-checks.

Each builder returns a :class:`CaseStudy`; :meth:`CaseStudy.verify` checks every
triple against the denotational semantics (one super-operator per program) and
runs case-specific checks against closed-form formulas.
"""

from __future__ import annotations

import cmath
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from . import dirac, hoare, linalg, semantics
from .assertion import format_number
from .config import Config, get_default
from .dirac import LabelledOperator, Variable, VarTable
from .errors import BadHidingFunction, BadParam
from .group import AbelianGroup, Subgroup, cosets, orthogonal_subgroup
from .outline import check_outline
from .qtypes import (Bool, TupleOf, ZN, complete_unitary, controlled, expm_hermitian, multiplexer, oracle, phase,
                     phase_oracle, qft, swap, uniform_unitary)
from .qwhile import Program, Unitary, While, apply, basis_measurement, contains, init, seq, statements


@dataclass
class Triple:
    label: str
    judgment: hoare.Judgment
    expect_valid: bool = True


@dataclass
class Check:
    label: str
    ok: bool
    detail: str = ""


@dataclass
class CaseReport:
    name: str
    params: dict
    checks: list[Check]
    seconds: float = 0.0

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.ok]


@dataclass
class CaseStudy:
    name: str
    params: dict
    table: VarTable
    program: Program
    triples: list[Triple]
    data: dict = field(default_factory=dict)
    extra: Callable[["CaseStudy", Config], list[Check]] | None = field(default=None, repr=False)

    def denotation(self, config: Config | None = None) -> semantics.SuperOperator:
        labels: set[int] = set()
        for t in self.triples:
            labels |= set(t.judgment.labels)
        return semantics.denote(self.program, self.table, tuple(sorted(labels)), config)

    def verify(self, config: Config | None = None) -> CaseReport:
        config = config or get_default()
        start = time.perf_counter()
        so = self.denotation(config)
        q = semantics.quality(so, config.psd_tol)
        checks = [Check("quality: completely positive", q.is_cp, f"Choi min eigenvalue {q.choi_min_eig:.3g}"),
                  Check("quality: trace non-increasing", q.is_trace_nonincreasing, f"defect {q.trace_defect:.3g}")]
        if not contains(self.program, While):
            checks.append(Check("quality: trace preserving", q.is_trace_preserving, f"defect {q.trace_defect:.3g}"))
        for t in self.triples:
            v = hoare.check_valid(t.judgment, config, denotation=so)
            want = "valid" if t.expect_valid else "invalid"
            checks.append(Check(f"{t.label} [{t.judgment.flag()}]", v.valid == t.expect_valid,
                                f"expected {want}; slack {v.slack:.3g}, residual {v.residual:.3g}"))
        if self.extra is not None:
            checks.extend(self.extra(self, config))
        return CaseReport(self.name, self.params, checks, time.perf_counter() - start)


# -- helpers -------------------------------------------------------------------

def _ket(var: Variable, vector) -> LabelledOperator:
    return dirac.ket(var.table, var.labels, vector)


def _composite(vars_: Sequence[Variable]) -> Variable:
    return vars_[0] if len(vars_) == 1 else dirac.composite(*vars_)


def _state_triples(label: str, u: LabelledOperator, program: Program, v: LabelledOperator,
                   modes=("total",), saturated: bool = True) -> list[Triple]:
    return [Triple(label if len(modes) == 1 else f"{label} ({m})", hoare.state_judgment(u, program, v, m, saturated))
            for m in modes]


def circuit_unitary(program: Program, labels: Sequence[int], table: VarTable) -> np.ndarray:
    """Product of the gates of a loop-free, measurement-free program on ``labels``."""
    labels = tuple(sorted(labels))
    u = np.eye(table.size(labels), dtype=np.complex128)
    for s in statements(program):
        if not isinstance(s, Unitary):
            raise BadParam("circuit_unitary needs a program made of gates only")
        u = dirac.cyl_extend(s.op, labels).matrix @ u
    return u


def _state_vector(rho: LabelledOperator) -> np.ndarray:
    vals, vecs = np.linalg.eigh(rho.matrix)
    v = vecs[:, -1] * math.sqrt(max(vals[-1], 0.0))
    k = int(np.argmax(np.abs(v)))
    return v * (abs(v[k]) / v[k]) if abs(v[k]) > 0 else v


def _ket_text(ref: str, terms) -> str:
    """Assertion text of ``Σ c |value⟩`` on ``ref``; ``terms`` holds (coefficient, value) pairs."""
    parts = [f"{format_number(c)} * ket({ref}, {val})" for c, val in terms if abs(c) > 1e-15]
    return " + ".join(parts) if parts else f"0 * ket({ref}, 0)"


def _density_text(k: str) -> str:
    return f"({k}) * adj({k})"


# -- HSP -----------------------------------------------------------------------

def _hiding_function(grp: AbelianGroup, h: Subgroup, f) -> list[int]:
    cs = cosets(h)
    if f is None:
        out = [0] * grp.order
        for k, c in enumerate(cs):
            for g in c.elements:
                out[g] = k
        return out
    f = [int(v) for v in f]
    if len(f) != grp.order or min(f) < 0:
        raise BadHidingFunction(f"f needs one non-negative value per group element ({grp.order})")
    for c in cs:
        if len({f[g] for g in c.elements}) != 1:
            raise BadHidingFunction("f is not constant on a coset of H")
    if len({f[c.repr] for c in cs}) != len(cs):
        raise BadHidingFunction("f takes the same value on two different cosets")
    return f


def hsp(moduli: Sequence[int] = (2, 2), generators: Sequence = ((1, 1),), f=None, t0: int = 0) -> CaseStudy:
    """Sampling from ``H⊥`` for the subgroup ``H`` of ``G = Z_{p0} × ... `` generated by ``generators``."""
    grp = AbelianGroup(moduli)
    h = grp.generate([grp.index(g) for g in generators])
    hperp = orthogonal_subgroup(h)
    fvals = _hiding_function(grp, h, f)
    ny = max(max(fvals) + 1, t0 + 1)
    k = len(grp.moduli)
    table = VarTable()
    xs = [table.declare(f"x{i}", ZN(p)) for i, p in enumerate(grp.moduli)]
    y = table.declare("y", ZN(ny))
    xbar = _composite(xs)
    program = seq(
        *(init(x, 0) for x in xs),
        init(y, t0),
        *(apply(x, qft(x.dim), "QFT") for x in xs),
        apply(dirac.composite(xbar, y), oracle(lambda g: fvals[g], grp.order, ny), f"Oracle({fvals})"),
        *(apply(x, qft(x.dim), "QFT") for x in xs),
    )
    prob = {g: (1 / len(hperp) if g in hperp else 0.0) for g in grp.elements()}
    triples = []
    for g in grp.elements():
        post = dirac.density(dirac.basis_ket(xbar, _value(xbar, g)))
        j = hoare.Judgment(dirac.scalar(table, prob[g]), program, post, "total", True)
        triples.append(Triple(f"Pr(x = {grp.coords(g)}) = {prob[g]:.6g}", j))
    data = {"group": grp, "H": h, "H_perp": hperp, "f": fvals, "probabilities": prob, "xbar": xbar, "y": y,
            "t0": t0}
    study = CaseStudy("hsp", {"G": list(grp.moduli), "H": [grp.coords(g) for g in h.elements]}, table, program,
                      triples, data, _hsp_checks)
    study.data["outline"] = hsp_outline(study)
    return study


def _value(var: Variable, g: int):
    """Basis value of ``var`` with flat index ``g``."""
    return var.qtype.decode(g)


def _hsp_checks(study: CaseStudy, config: Config) -> list[Check]:
    d = study.data
    grp, xbar, y = d["group"], d["xbar"], d["y"]
    labels = tuple(sorted(set(xbar.labels) | set(y.labels)))
    rho0 = dirac.cyl_extend(dirac.density(dirac.basis_ket(y, 0)), labels)
    rho0 = dirac.tensor(dirac.density(dirac.basis_ket(xbar, _value(xbar, 0))), dirac.density(dirac.basis_ket(y, 0)))
    out = semantics.evolve(study.program, rho0, config)
    marg = dirac.to_matrix(dirac.partial_trace(out, xbar.labels), xbar.labels)
    probs = np.real(np.diag(marg))
    dev = max(abs(probs[g] - d["probabilities"][g]) for g in grp.elements())
    checks = [Check("output distribution sums to 1", abs(probs.sum() - 1) <= 1e-9, f"sum {probs.sum():.12f}"),
              Check("output distribution is uniform on H⊥", dev <= 1e-9, f"max deviation {dev:.3g}")]
    try:
        rep = check_outline(d["outline"], study.program, study.table, config)
        inner = [r.judgment for r in rep.results if r.rule == "R.Inner"]
        agree = all(hoare.close(j.pre, t.judgment.pre) and hoare.close(j.post, t.judgment.post)
                    for j, t in zip(inner, study.triples))
        checks.append(Check("proof outline (forward reasoning, then R.Inner)", rep.ok and agree and
                            len(inner) == len(study.triples), f"{len(rep.results)} steps"))
    except Exception as exc:  # reported, not raised: the suite keeps going
        checks.append(Check("proof outline (forward reasoning, then R.Inner)", False, str(exc)))
    return checks


def hsp_outline(study: CaseStudy) -> list[dict]:
    """Step-by-step forward proof of the HSP output state, closed by one R.Inner step per ``g``."""
    d = study.data
    grp, h, hperp, fvals, t0 = d["group"], d["H"], d["H_perp"], d["f"], d["t0"]
    ny = d["y"].dim
    k = len(grp.moduli)
    xs = [f"x{i}" for i in range(k)]
    xref = xs[0] if k == 1 else "[" + ", ".join(xs) + "]"
    both = f"[{', '.join(xs)}, y]"

    def val(g: int) -> str:
        c = grp.coords(g)
        return str(c[0]) if k == 1 else "(" + ", ".join(map(str, c)) + ")"

    def pair(g: int, t: int) -> str:
        c = grp.coords(g) + (t,)
        return "(" + ", ".join(map(str, c)) + ")"

    zero = _ket_text(xref, [(1, val(grp.zero))])
    start = f"({zero}) (x) ket(y, {t0})"
    n = grp.order
    uniform = _ket_text(both, [(1 / math.sqrt(n), pair(g, t0)) for g in grp.elements()])
    coset_form = _ket_text(both, [(1 / math.sqrt(n), pair(grp.add(x, c.repr), (t0 + fvals[c.repr]) % ny))
                                  for c in cosets(h) for x in h.elements])
    # (1/|H⊥|) Σ_{g∈H⊥} |g⟩ Σ_J χ_g(repr J) |t0 + f(repr J)⟩
    final = _ket_text(both, [(grp.character(g, c.repr) / len(hperp), pair(g, (t0 + fvals[c.repr]) % ny))
                             for g in hperp.elements for c in cosets(h)])
    fl = {"mode": "total", "saturated": True}
    steps = [
        {"rule": "Ax.InFP'", "premises": [], "witnesses": {"v": "1"}, "conclusion": {"program": f"0:{k}", **fl}},
        {"rule": "rewrite", "premises": [0], "conclusion": {"post": _density_text(zero)}},
        {"rule": "Ax.InF'", "premises": [], "witnesses": {"v": zero}, "conclusion": {"program": f"{k}", **fl}},
        {"rule": "R.SC", "premises": [1, 2], "conclusion": {"program": f"0:{k + 1}", **fl}},
        {"rule": "Ax.UTFP'", "premises": [], "witnesses": {"v": start},
         "conclusion": {"program": f"{k + 1}:{2 * k + 1}", **fl}},
        {"rule": "R.SC", "premises": [3, 4], "conclusion": {"program": f"0:{2 * k + 1}", **fl}},
        {"rule": "rewrite", "premises": [5], "conclusion": {"post": _density_text(uniform)}},
        {"rule": "Ax.UTF'", "premises": [], "witnesses": {"v": uniform},
         "conclusion": {"program": f"{2 * k + 1}", **fl}},
        {"rule": "R.SC", "premises": [6, 7], "conclusion": {"program": f"0:{2 * k + 2}", **fl}},
        {"rule": "rewrite", "premises": [8], "conclusion": {"post": _density_text(coset_form)}},
        {"rule": "Ax.UTFP'", "premises": [], "witnesses": {"v": coset_form},
         "conclusion": {"program": f"{2 * k + 2}:{3 * k + 2}", **fl}},
        {"rule": "R.SC", "premises": [9, 10], "conclusion": {"program": "all", **fl}},
        {"rule": "rewrite", "premises": [11], "conclusion": {"post": _density_text(final)}},
    ]
    for g in grp.elements():
        p = 1 / len(hperp) if g in hperp else 0.0
        steps.append({"rule": "R.Inner", "premises": [12],
                      "witnesses": {"v": final, "u": f"ket({xref}, {val(g)})"},
                      "conclusion": {"pre": format_number(p), "program": "all",
                                     "post": f"proj({xref}, {val(g)})", **fl}})
    return steps


# -- Grover --------------------------------------------------------------------

def grover(n_items: int = 4, marked: Sequence[int] | int = 1, rounds: int = 1, t0: int = 0) -> CaseStudy:
    """Grover search over ``int<n_items>``; ``marked`` is a list of solutions or their count."""
    if isinstance(marked, int):
        marked = list(range(n_items - marked, n_items))
    marked = sorted({int(i) for i in marked})
    if not marked or marked[-1] >= n_items or marked[0] < 0:
        raise BadParam("marked items must be a non-empty subset of the search space")
    table = VarTable()
    x = table.declare("x", ZN(n_items))
    truth = [1 if i in marked else 0 for i in range(n_items)]
    hn = uniform_unitary(n_items, t0)
    body = [apply(x, phase_oracle(truth), f"PhOracle({truth})"),
            apply(x, hn.conj().T, f"adj(Hn({t0}))"),
            apply(x, phase_oracle([1 if i == t0 else 0 for i in range(n_items)]),
                  f"PhOracle({[1 if i == t0 else 0 for i in range(n_items)]})"),
            apply(x, hn, f"Hn({t0})")]
    program = seq(init(x, t0), apply(x, hn, f"Hn({t0})"), *(body * rounds))
    t = math.asin(math.sqrt(len(marked) / n_items))
    pre_value = math.sin((2 * rounds + 1) * t) ** 2
    post = None
    for i in marked:
        p = dirac.projector(x, i)
        post = p if post is None else dirac.add(post, p)
    triples = [Triple(f"success probability sin²((2r+1)t) = {pre_value:.12g} ({m})",
                      hoare.Judgment(dirac.scalar(table, pre_value), program, post, m, False))
               for m in ("total", "partial")]
    # a slightly larger precondition must fail: the bound is tight
    triples.append(Triple("tightness: sin²((2r+1)t) + 1e-6 is not a valid precondition",
                          hoare.Judgment(dirac.scalar(table, pre_value + 1e-6), program, post, "total", False),
                          expect_valid=False))
    data = {"pre": pre_value, "t": t, "marked": marked, "x": x}
    return CaseStudy("grover", {"N": n_items, "marked": marked, "r": rounds}, table, program, triples, data,
                     _grover_checks)


def _grover_checks(study: CaseStudy, config: Config) -> list[Check]:
    x = study.data["x"]
    out = semantics.evolve(study.program, dirac.projector(x, 0), config)
    p = sum(out.matrix[i, i].real for i in study.data["marked"])
    dev = abs(p - study.data["pre"])
    return [Check("simulated success probability equals sin²((2r+1)t)", dev <= 1e-9, f"deviation {dev:.3g}")]


# -- QPE -----------------------------------------------------------------------

def _qpe_unitary(theta: float, other: float, angle: float) -> tuple[np.ndarray, np.ndarray]:
    v = np.array([[math.cos(angle), -math.sin(angle)], [math.sin(angle), math.cos(angle)]], dtype=np.complex128)
    u = v @ np.diag([cmath.exp(2j * math.pi * theta), cmath.exp(2j * math.pi * other)]) @ v.conj().T
    return u, v[:, 0]


def qpe(n: int = 4, theta: float = 0.25, u=None, eigvec=None, other_phase: float = 0.37,
        basis_angle: float = math.pi / 5) -> CaseStudy:
    """Phase estimation with an ``n``-valued control register.

    Without ``u`` the unitary is a rotated ``diag(e^{2πiθ}, e^{2πi·other_phase})``
    whose eigenvector for ``θ`` is the rotated ``|0⟩``.
    """
    if u is None:
        u, eigvec = _qpe_unitary(theta, other_phase, basis_angle)
    u = linalg.as_matrix(u)
    phi = np.asarray(eigvec, dtype=np.complex128).reshape(-1)
    phi = phi / np.linalg.norm(phi)
    if np.linalg.norm(u @ phi - cmath.exp(2j * math.pi * theta) * phi) > 1e-9:
        raise BadParam("eigvec is not an eigenvector of u with eigenvalue e^{2πiθ}")
    table = VarTable()
    x = table.declare("x", ZN(n))
    y = table.declare("y", ZN(u.shape[0]) if u.shape[0] != 2 else Bool())
    powers = [np.linalg.matrix_power(u, j) for j in range(n)]
    program = seq(init(x, 0), apply(x, uniform_unitary(n), "Hn"),
                  apply(dirac.composite(x, y), multiplexer(powers)), apply(x, qft(n).conj().T, "IQFT"))
    phi_k = _ket(y, phi)
    rho = dirac.tensor(dirac.projector(x, 0), dirac.density(phi_k))
    out = semantics.evolve(program, rho)
    probs = np.real(np.diag(dirac.to_matrix(dirac.partial_trace(out, x.labels), x.labels)))
    triples = []
    for a in range(n):
        post = dirac.tensor(dirac.projector(x, a), dirac.density(phi_k))
        pre = dirac.scale(float(probs[a]), dirac.density(phi_k))
        triples.append(Triple(f"Pr(a = {a}) = {probs[a]:.6g}", hoare.Judgment(pre, program, post, "total", True)))
    data = {"probabilities": probs, "theta": theta, "n": n}
    return CaseStudy("qpe", {"n": n, "theta": theta}, table, program, triples, data, _qpe_checks)


def qpe_amplitude(a: int, n: int, theta: float) -> complex:
    """``c(a) = (1/n) Σ_j e^{2πi(θ − a/n) j}``, the amplitude of outcome ``a``."""
    return sum(cmath.exp(2j * math.pi * (theta - a / n) * j) for j in range(n)) / n


def _qpe_checks(study: CaseStudy, config: Config) -> list[Check]:
    probs, theta, n = study.data["probabilities"], study.data["theta"], study.data["n"]
    closed = np.array([abs(qpe_amplitude(a, n, theta)) ** 2 for a in range(n)])
    dev = float(np.max(np.abs(closed - probs)))
    best = round(n * theta) % n
    checks = [Check("simulation matches |c(a)|²", dev <= 1e-9, f"max deviation {dev:.3g}")]
    if abs(n * theta - round(n * theta)) < 1e-12:
        checks.append(Check(f"exact phase: Pr({best}) = 1", abs(probs[best] - 1) <= 1e-9, f"{probs[best]:.12f}"))
    else:
        bound = 4 / math.pi ** 2
        checks.append(Check(f"Pr(round(nθ) = {best}) ≥ 4/π²", probs[best] >= bound - 1e-9,
                            f"{probs[best]:.6f} vs {bound:.6f}"))
    return checks


# -- QFT and reverse circuits ----------------------------------------------------

def _rev_program(xs: Sequence[Variable]) -> list[Program]:
    n = len(xs)
    return [apply(dirac.composite(xs[i], xs[n - 1 - i]), swap(xs[i].dim), "SWAP") for i in range(n // 2)]


def _qft_iter(xs: Sequence[Variable]) -> list[Program]:
    out: list[Program] = []
    for k, x in enumerate(xs):
        out.append(apply(x, np.array([[1, 1], [1, -1]]) / math.sqrt(2), "H"))
        for i, s in enumerate(xs[k + 1:]):
            theta = math.pi / 2 ** (i + 1)
            out.append(apply(dirac.composite(x, s), controlled(phase(theta)), f"CU(Ph({theta!r}))"))
    return out


def bit_reversal(n: int) -> np.ndarray:
    d = 2 ** n
    p = np.zeros((d, d))
    for t in range(d):
        p[int(format(t, f"0{n}b")[::-1], 2) if n else 0, t] = 1
    return p


def qft_circuit(n: int = 3) -> CaseStudy:
    """QFT on ``n`` qubits from Hadamards and controlled phases, followed by the reversal circuit."""
    if n < 1:
        raise BadParam("qft_circuit needs n >= 1")
    table = VarTable()
    s = table.declare("s", TupleOf(Bool(), n))
    xs = list(s)
    it = _qft_iter(xs)
    program = seq(*it, *_rev_program(xs))
    d = 2 ** n
    f = qft(d)
    triples = []
    for b in range(d):
        u = _ket(s, np.eye(d)[b])
        v = _ket(s, f[:, b])
        triples.append(Triple(f"|{b:0{n}b}⟩ ↦ QFTbv", hoare.state_judgment(u, program, v, "total", True)))
    data = {"s": s, "iter": seq(*it), "n": n}
    return CaseStudy("qft", {"n": n}, table, program, triples, data, _qft_checks)


def _qft_checks(study: CaseStudy, config: Config) -> list[Check]:
    s, n = study.data["s"], study.data["n"]
    d = 2 ** n
    u = circuit_unitary(study.program, s.labels, study.table)
    # canonical label order is component order here, so matrices compare directly
    dist = float(np.linalg.norm(u - qft(d)))
    it = circuit_unitary(study.data["iter"], s.labels, study.table)
    dist_it = float(np.linalg.norm(it - bit_reversal(n) @ qft(d)))
    return [Check("circuit equals qft(2ⁿ)", dist <= 1e-9, f"distance {dist:.3g}"),
            Check("without the reversal: bit-reversal · qft(2ⁿ)", dist_it <= 1e-9, f"distance {dist_it:.3g}")]


def rev_circuit(n: int = 3, dim: int = 2) -> CaseStudy:
    """Swap ``x_i`` with ``x_{n-1-i}``; triples for every basis tuple in both directions."""
    table = VarTable()
    x = table.declare("x", TupleOf(Bool() if dim == 2 else ZN(dim), n))
    xs = list(x)
    program = seq(*_rev_program(xs))
    rev = _composite(xs[::-1])
    triples = []
    for t in range(dim ** n):
        val = x.qtype.decode(t)
        # a single reversed component is the bare variable, which takes a scalar value
        a, b = dirac.basis_ket(x, val), dirac.basis_ket(rev, val if n > 1 else val[0])
        triples.append(Triple(f"|{val}⟩_x ↦ |{val}⟩_rev(x)", hoare.state_judgment(a, program, b, "total", True)))
        triples.append(Triple(f"|{val}⟩_rev(x) ↦ |{val}⟩_x", hoare.state_judgment(b, program, a, "total", True)))
    return CaseStudy("rev", {"n": n, "dim": dim}, table, program, triples)


# -- parallel Hadamard -----------------------------------------------------------

def para_hadamard(n: int = 3) -> CaseStudy:
    table = VarTable()
    x = table.declare("x", TupleOf(Bool(), n))
    h = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
    program = seq(*(apply(xi, h, "H") for xi in x))
    modes = ("total", "partial")
    zero = dirac.big_tensor([dirac.basis_ket(xi, 0) for xi in x])
    plus = dirac.big_tensor([_ket(xi, [1 / math.sqrt(2)] * 2) for xi in x])
    triples = _state_triples("⊗|0⟩ ↦ ⊗|+⟩", zero, program, plus, modes)
    triples += _state_triples("⊗|+⟩ ↦ ⊗|0⟩", plus, program, zero, modes)
    d = 2 ** n
    for b in range(d):
        amps = [(-1) ** bin(b & t).count("1") / math.sqrt(d) for t in range(d)]
        triples += _state_triples(f"|{b:0{n}b}⟩ ↦ Σ(−1)^(b·t)|t⟩", _ket(x, np.eye(d)[b]), program, _ket(x, amps), modes)
    return CaseStudy("parahadamard", {"n": n}, table, program, triples)


# -- hidden linear function ------------------------------------------------------

HLF_DEFAULTS = {
    2: [[1, 1], [1, 0]],
    4: [[1, 1, 1, 0], [1, 0, 0, 1], [1, 0, 1, 1], [0, 1, 1, 0]],
}


def hlf_amplitudes(a) -> np.ndarray:
    """``(1/2ⁿ) Σ_k i^{q(k) + 2 k·z}`` for every ``z``, by direct summation."""
    a = np.asarray(a, dtype=int)
    n = a.shape[0]
    bits = lambda v: [(v >> (n - 1 - i)) & 1 for i in range(n)]
    out = np.zeros(2 ** n, dtype=np.complex128)
    for z in range(2 ** n):
        zb = bits(z)
        for k in range(2 ** n):
            kb = bits(k)
            q = sum(a[i, j] * kb[i] * kb[j] for i in range(n) for j in range(n)) % 4
            out[z] += 1j ** ((q + 2 * sum(x * y for x, y in zip(kb, zb))) % 4)
    return out / 2 ** n


def hlf(a=None, n: int = 2) -> CaseStudy:
    a = np.asarray(HLF_DEFAULTS[n] if a is None else a, dtype=int)
    n = a.shape[0]
    if a.shape != (n, n) or (a != a.T).any() or not np.isin(a, (0, 1)).all():
        raise BadParam("A must be a symmetric 0/1 matrix")
    table = VarTable()
    x = table.declare("x", TupleOf(Bool(), n))
    xs = list(x)
    h = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
    sd = [i for i in range(n) if a[i, i]]
    ss = [(i, j) for i in range(n) for j in range(i + 1, n) if a[i, j]]
    program = seq(*(init(xi, 0) for xi in xs), *(apply(xi, h, "H") for xi in xs),
                  *(apply(xs[i], np.diag([1, 1j]), "S") for i in sd),
                  *(apply(dirac.composite(xs[i], xs[j]), np.diag([1, 1, 1, -1]), "CZ") for i, j in ss),
                  *(apply(xi, h, "H") for xi in xs))
    amps = hlf_amplitudes(a)
    v = _ket(x, amps)
    one = dirac.scalar(table, 1)
    triples = [Triple(f"{{1}} HLF {{|v⟩⟨v|}} ({m})", hoare.Judgment(one, program, dirac.density(v), m, True))
               for m in ("total", "partial")]
    data = {"x": x, "amplitudes": amps}
    return CaseStudy("hlf", {"A": a.tolist()}, table, program, triples, data, _hlf_checks)


def _hlf_checks(study: CaseStudy, config: Config) -> list[Check]:
    x = study.data["x"]
    gates = seq(*(s for s in statements(study.program) if isinstance(s, Unitary)))
    u = circuit_unitary(gates, x.labels, study.table)
    out = u[:, 0]
    dev = float(np.max(np.abs(out - study.data["amplitudes"])))
    return [Check("amplitudes match the direct sum over k", dev <= 1e-9, f"max deviation {dev:.3g}")]


# -- HHL -------------------------------------------------------------------------

def _default_hhl_matrix(t0: float, deltas=(1, 2), angle: float = math.pi / 5) -> np.ndarray:
    lam = np.array(deltas, dtype=float) * 2 * math.pi / t0
    v = np.array([[math.cos(angle), -math.sin(angle)], [math.sin(angle), math.cos(angle)]])
    return v @ np.diag(lam) @ v.T


def hhl(a=None, b=None, n: int = 4, t0: float = 2 * math.pi, c: float = 0.5) -> CaseStudy:
    """Repeat-until-success HHL on ``q : int<m>`` with control ``p : int<n>`` and flag ``r : bool``."""
    a = _default_hhl_matrix(t0) if a is None else linalg.as_matrix(a)
    m = a.shape[0]
    b = np.ones(m) / math.sqrt(m) if b is None else np.asarray(b, dtype=np.complex128).reshape(-1)
    if abs(np.linalg.norm(b) - 1) > 1e-9:
        raise BadParam("b must be a unit vector")
    eig = linalg.hermitian_eig(a)
    deltas = eig.eigenvalues * t0 / (2 * math.pi)
    rounded = np.round(deltas)
    if np.max(np.abs(deltas - rounded)) > 1e-9 or rounded.min() < 1 or rounded.max() > n - 1:
        raise BadParam("every λ_j t0 / 2π must be an integer in 1..n-1")
    if not 0 < c <= rounded.min():
        raise BadParam("C must satisfy 0 < C ≤ min δ_j")
    if c > 1:
        raise BadParam("C must be at most 1")
    table = VarTable()
    p = table.declare("p", ZN(n))
    q = table.declare("q", ZN(m))
    r = table.declare("r", Bool())
    ub = complete_unitary({0: b}, m)
    hn = uniform_unitary(n)
    uf = multiplexer([expm_hermitian(a, k * t0 / n) for k in range(n)])
    cols = {0: np.eye(2 * n)[0]}
    for i in range(1, n):
        col = np.zeros(2 * n, dtype=np.complex128)
        col[2 * i] = math.sqrt(1 - (c / i) ** 2)
        col[2 * i + 1] = c / i
        cols[2 * i] = col
    uc = complete_unitary(cols, 2 * n)
    pq, pr = dirac.composite(p, q), dirac.composite(p, r)
    body = seq(init(q, 0), apply(q, ub), apply(p, hn, "Hn"), apply(pq, uf), apply(p, qft(n).conj().T, "IQFT"),
               apply(pr, uc), apply(p, qft(n), "QFT"), apply(pq, uf.conj().T), apply(p, hn.conj().T, "adj(Hn)"))
    loop = While(basis_measurement(r), 0, body)
    program = seq(init(p, 0), init(q, 0), init(r, 0), loop)
    beta = eig.eigenvectors.conj().T @ b
    xvec = eig.eigenvectors @ (beta / eig.eigenvalues)
    xvec = xvec / np.linalg.norm(xvec)
    xk = _ket(q, xvec)
    one = dirac.scalar(table, 1)
    triples = [Triple("{1} HHL {|x⟩⟨x|} (partial)", hoare.Judgment(one, program, dirac.density(xk), "partial")),
               Triple("{1} HHL {|x⟩⟨x|} (total)", hoare.Judgment(one, program, dirac.density(xk), "total"))]
    data = {"x": xvec, "loop": loop, "p": p, "q": q, "r": r,
            "success": c ** 2 * float(np.sum(np.abs(beta) ** 2 / rounded ** 2))}
    return CaseStudy("hhl", {"m": m, "n": n, "t0": t0, "C": c}, table, program, triples, data, _hhl_checks)


def _hhl_checks(study: CaseStudy, config: Config) -> list[Check]:
    d = study.data
    loop = d["loop"]
    so = semantics.denote(loop, study.table, None, config)
    res = semantics.loop_residual(loop, so, config)
    p, q, r = d["p"], d["q"], d["r"]
    rho = dirac.big_tensor([dirac.projector(v, 0) for v in (p, q, r)])
    out = semantics.evolve(study.program, rho, config)
    qm = dirac.partial_trace(out, q.labels).matrix
    mass = float(np.trace(qm).real)
    target = np.outer(d["x"], d["x"].conj())
    dist = float(np.linalg.norm(qm / mass - target))
    return [Check("loop fixed-point residual ≤ 1e-8", res <= 1e-8, f"residual {res:.3g}"),
            Check("simulated output on q is |x⟩⟨x|", dist <= 1e-7, f"distance {dist:.3g}, mass {mass:.12f}")]


# -- registry and suite --------------------------------------------------------

EXAMPLES: dict[str, Callable[..., CaseStudy]] = {
    "hsp": hsp,
    "grover": grover,
    "qpe": qpe,
    "qft": qft_circuit,
    "rev": rev_circuit,
    "hlf": hlf,
    "hhl": hhl,
    "parahadamard": para_hadamard,
}


def build(name: str, **params) -> CaseStudy:
    if name not in EXAMPLES:
        raise KeyError(f"unknown example {name!r}; choose from {', '.join(EXAMPLES)}")
    return EXAMPLES[name](**params)


def _run_one(args) -> CaseReport:
    name, params, config = args
    try:
        return build(name, **params).verify(config)
    except Exception as exc:  # one broken example should not hide the others
        return CaseReport(name, params, [Check("build and verify", False, f"{type(exc).__name__}: {exc}")])


def run_suite(names: Sequence[str] | None = None, params: dict[str, dict] | None = None, jobs: int = 1,
              config: Config | None = None) -> list[CaseReport]:
    names = list(names or EXAMPLES)
    params = params or {}
    config = config or get_default()
    tasks = [(n, params.get(n, {}), config) for n in names]
    if jobs <= 1:
        return [_run_one(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_one, tasks))
