"""Quantum Hoare judgments: semantic validity, inference rules and proof outlines.

A judgment ``{A} C {B}`` is decided over ``F = pset(C) ∪ labels(A) ∪ labels(B)``,
where assertions are cylindrically extended. Total correctness requires
``A ⊑ wp(C, B)``; partial correctness uses ``wlp(C, B) = wp(C, B) + I − wp(C, I)``;
saturated judgments replace ``⊑`` by equality.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from . import dirac, linalg, semantics
from .config import Config, get_default
from .dirac import LabelledOperator, VarTable
from .errors import (LabelMismatch, NotHermitian, NotNormalized, NotSquare, ShapeMismatch, SideConditionViolated, StepFailed,
                     UnknownRule)
from .qwhile import (Abort, Cond, Init, Measurement, Program, Seq, Skip, Unitary, While, contains, footprint,
                     has_while, same_program, seq, statements)

SATURATION_TOL = 1e-8
MODES = ("total", "partial")


@dataclass(frozen=True, eq=False)
class Judgment:
    pre: LabelledOperator
    program: Program
    post: LabelledOperator
    mode: str = "total"
    saturated: bool = False

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be 'total' or 'partial', not {self.mode!r}")
        for name, a in (("pre", self.pre), ("post", self.post)):
            if not a.is_square:
                raise NotSquare(f"{name}-condition must be a square operator")
        if self.pre.table is not self.post.table:
            raise ValueError("pre- and post-condition belong to different variable tables")

    @property
    def table(self) -> VarTable:
        return self.pre.table

    @property
    def labels(self) -> tuple[int, ...]:
        return tuple(sorted(set(footprint(self.program)) | set(self.pre.out) | set(self.post.out)))

    def flag(self) -> str:
        return ("⊨t" if self.mode == "total" else "⊨p") + ("ˢ" if self.saturated else "")


@dataclass(frozen=True)
class Validity:
    """Outcome of a semantic check.

    ``slack`` is the least eigenvalue of ``wp − A`` (``wlp`` for partial
    correctness); ``residual`` is the Frobenius norm of that difference.
    """
    valid: bool
    slack: float
    residual: float
    mode: str
    saturated: bool
    labels: tuple
    weakest: LabelledOperator = field(repr=False, default=None)

    def __bool__(self) -> bool:
        return self.valid


# -- weakest preconditions -----------------------------------------------------

def _domain(program: Program, *ops: LabelledOperator, labels=()) -> tuple[int, ...]:
    out = set(footprint(program)) | set(dirac.labels_of(labels))
    for a in ops:
        out |= set(a.out)
    return tuple(sorted(out))


def _weakest(program: Program, post: LabelledOperator, labels, config: Config | None, liberal: bool,
             denotation: semantics.SuperOperator | None = None):
    table = post.table
    dom = _domain(program, post, labels=labels)
    if denotation is None:
        so = semantics.dual(semantics.denote(program, table, dom, config))
    else:
        # validity is unchanged on a larger domain, so a wider denotation can be reused
        if not set(dom) <= set(denotation.labels):
            raise LabelMismatch(f"denotation on {list(denotation.labels)} does not cover {list(dom)}")
        dom = denotation.labels
        so = semantics.dual(denotation)
    b = dirac.cyl_extend(post, dom).matrix
    w = semantics.apply_matrix(so, b)
    if liberal:
        ident = np.eye(w.shape[0])
        w = w + ident - semantics.apply_matrix(so, ident)
    return LabelledOperator(table, dom, dom, w)


def wp(program: Program, post: LabelledOperator, labels=(), config: Config | None = None) -> LabelledOperator:
    """Weakest precondition ``⟦C⟧*(B)`` on ``pset(C) ∪ labels(B) ∪ labels``."""
    return _weakest(program, post, labels, config, False)


def wlp(program: Program, post: LabelledOperator, labels=(), config: Config | None = None) -> LabelledOperator:
    """Weakest liberal precondition ``wp(C, B) + I − wp(C, I)``."""
    return _weakest(program, post, labels, config, True)


def check_valid(j: Judgment, config: Config | None = None, saturation_tol: float = SATURATION_TOL,
                denotation: semantics.SuperOperator | None = None) -> Validity:
    """Decide ``j`` semantically.

    ``denotation`` may supply ``denote(j.program)`` on any label set covering
    the judgment, to share one super-operator between many checks.
    """
    config = config or get_default()
    w = _weakest(j.program, j.post, j.labels, config, j.mode == "partial", denotation)
    dom = w.out
    a = dirac.cyl_extend(j.pre, dom).matrix
    diff = w.matrix - a
    residual = float(np.linalg.norm(diff))
    if j.saturated:
        valid = residual <= saturation_tol * max(1.0, linalg.frobenius(w.matrix))
        hermitian = linalg.is_hermitian(diff, config.psd_tol)
        slack = linalg.min_eigenvalue((diff + diff.conj().T) / 2) if hermitian else float("nan")
    else:
        if not (linalg.is_hermitian(a, config.psd_tol) and linalg.is_hermitian(w.matrix, config.psd_tol)):
            raise NotHermitian("Löwner comparison needs Hermitian assertions; use a saturated judgment instead")
        valid, slack = linalg.loewner_gap(a, w.matrix, config.psd_tol)
    return Validity(bool(valid), float(slack), residual, j.mode, j.saturated, dom, w)


def is_valid(pre, program, post, mode: str = "total", saturated: bool = False, config: Config | None = None) -> bool:
    return check_valid(Judgment(pre, program, post, mode, saturated), config).valid


def state_judgment(u: LabelledOperator, program: Program, v: LabelledOperator, mode: str = "total",
                   saturated: bool = False) -> Judgment:
    """``{|u⟩⟨u|} C {|v⟩⟨v|}``; a scalar ket ``c`` stands for the assertion ``|c|²``."""
    return Judgment(_ket_assertion(u), program, _ket_assertion(v), mode, saturated)


def _ket_assertion(k: LabelledOperator) -> LabelledOperator:
    if not k.is_ket:
        raise ShapeMismatch("state assertion needs a ket")
    return dirac.density(k)


def check_state_triple(u: LabelledOperator, program: Program, v: LabelledOperator, mode: str = "total",
                       saturated: bool = False, config: Config | None = None) -> Validity:
    config = config or get_default()
    for name, k in (("pre", u), ("post", v)):
        n = k.norm()
        if n > 1 + config.eq_tol:
            raise SideConditionViolated("state triple", f"‖{name}‖ = {n:.6g} exceeds 1")
        if saturated and abs(n - 1) > config.eq_tol:
            warnings.warn(f"{name}-state has norm {n:.6g}; saturated state triples expect unit vectors",
                          NotNormalized, stacklevel=2)
    return check_valid(state_judgment(u, program, v, mode, saturated), config)


# -- helpers for rules ---------------------------------------------------------

def _union(*ops: LabelledOperator) -> tuple[int, ...]:
    out: set[int] = set()
    for a in ops:
        out |= set(a.out)
    return tuple(sorted(out))


def _ext(a: LabelledOperator, labels) -> LabelledOperator:
    return dirac.cyl_extend(a, labels)


def close(a: LabelledOperator, b: LabelledOperator, tol: float | None = None) -> bool:
    """Equality up to cylindrical extension to a common label set."""
    tol = get_default().eq_tol if tol is None else tol
    u = _union(a, b)
    x, y = _ext(a, u).matrix, _ext(b, u).matrix
    return float(np.linalg.norm(x - y)) <= tol * max(1.0, linalg.frobenius(x), linalg.frobenius(y))


def leq(a: LabelledOperator, b: LabelledOperator, tol: float | None = None) -> bool:
    u = _union(a, b)
    return linalg.loewner_leq(_ext(a, u).matrix, _ext(b, u).matrix, tol)


def _plus(a: LabelledOperator, b: LabelledOperator) -> LabelledOperator:
    u = _union(a, b)
    return dirac.add(_ext(a, u), _ext(b, u))


def _require(cond: bool, rule: str, what: str) -> None:
    if not cond:
        raise SideConditionViolated(rule, what)


def _effect_bounds(a: LabelledOperator, rule: str, name: str, lower: bool = True, upper: bool = True) -> None:
    m = a.matrix
    _require(linalg.is_hermitian(m), rule, f"{name} is Hermitian")
    if lower:
        _require(linalg.is_psd(m), rule, f"0 ⊑ {name}")
    if upper:
        _require(linalg.is_psd(np.eye(m.shape[0]) - m), rule, f"{name} ⊑ I")


def _same_mode(rule: str, premises: Sequence[Judgment], mode: str | None = None) -> str:
    modes = {p.mode for p in premises}
    _require(len(modes) == 1, rule, "premises share one correctness mode")
    m = modes.pop()
    if mode is not None:
        _require(m == mode, rule, f"premises use {mode} correctness")
    return m


def _count(rule: str, premises: Sequence, n: int | None = None, at_least: int = 0) -> None:
    if n is not None and len(premises) != n:
        raise SideConditionViolated(rule, f"expects {n} premise(s), got {len(premises)}")
    if len(premises) < at_least:
        raise SideConditionViolated(rule, f"expects at least {at_least} premise(s)")


def _need(rule: str, w: Mapping, *names: str):
    missing = [n for n in names if n not in w or w[n] is None]
    if missing:
        raise SideConditionViolated(rule, f"missing witness {', '.join(missing)}")
    return [w[n] for n in names]


def _labels(x) -> tuple[int, ...]:
    if isinstance(x, LabelledOperator):
        return x.out
    return tuple(sorted(set(dirac.labels_of(x))))


def _flags(w: Mapping, mode: str = "total", saturated: bool = True) -> tuple[str, bool]:
    return w.get("mode", mode), bool(w.get("saturated", saturated))


def _program(rule: str, w: Mapping, kind) -> Program:
    (p,) = _need(rule, w, "program")
    _require(isinstance(p, kind), rule, f"program is a {kind.__name__ if isinstance(kind, type) else kind}")
    return p


def _pure_ket(init: Init) -> LabelledOperator | None:
    """The ket of a rank-one initial state, or None."""
    if init.ket is not None:
        return init.ket
    if init.value is not None:
        return dirac.basis_ket(init.target, init.value)
    m = init.state.matrix
    vals, vecs = np.linalg.eigh((m + m.conj().T) / 2)
    if vals[-1] < 1 - 1e-9 or np.sum(np.abs(vals[:-1])) > 1e-9:
        return None
    return LabelledOperator(init.state.table, init.state.out, (), vecs[:, -1:])


def _parallel(rule: str, p: Program, kind) -> list:
    """Top-level statements of a for-loop body, checked to act on pairwise disjoint variables."""
    items = [s for s in statements(p) if not isinstance(s, Skip)]
    _require(all(isinstance(s, kind) for s in items), rule, f"every iteration is a {kind.__name__}")
    seen: set[int] = set()
    for s in items:
        ls = set(s.target.labels)
        _require(not (seen & ls), rule, "∀i≠j, pset(x_i) ∩ pset(x_j) = ∅")
        seen |= ls
    return items


def _joint_unitary(items: Sequence[Unitary], table: VarTable) -> LabelledOperator:
    return dirac.big_tensor([u.op for u in items], table)


def _conj(u: LabelledOperator, a: LabelledOperator) -> LabelledOperator:
    """``U A U†`` with automatic lifting."""
    return dirac.compose(dirac.compose(u, a), u.adjoint())


# -- rules ---------------------------------------------------------------------

def _ax_sk(premises, w):
    _count("Ax.Sk", premises, 0)
    (a,) = _need("Ax.Sk", w, "A")
    mode, sat = _flags(w)
    return Judgment(a, Skip(), a, mode, sat)


def _ax_in(premises, w):
    _count("Ax.In", premises, 0)
    p = _program("Ax.In", w, Init)
    (a,) = _need("Ax.In", w, "A")
    mode, sat = _flags(w)
    dom = tuple(sorted(set(a.out) | set(p.target.labels)))
    # ⟨t|A|t⟩_x in general form: tr_x(σ_x A)
    pre = dirac.partial_trace(dirac.compose(_ext(p.state, dom), _ext(a, dom)),
                              [l for l in dom if l not in p.target.labels])
    return Judgment(pre, p, a, mode, sat)


def _ax_inf(premises, w):
    _count("Ax.InF", premises, 0)
    p = _program("Ax.InF", w, Init)
    (a,) = _need("Ax.InF", w, "A")
    _require(not set(a.out) & set(p.target.labels), "Ax.InF", "S ∩ pset(x) = ∅")
    _require(_pure_ket(p) is not None, "Ax.InF", "the initial state is pure")
    mode, sat = _flags(w)
    return Judgment(a, p, dirac.tensor(a, p.state), mode, sat)


def _ax_ut(premises, w):
    _count("Ax.UT", premises, 0)
    p = _program("Ax.UT", w, Unitary)
    (a,) = _need("Ax.UT", w, "A")
    mode, sat = _flags(w)
    return Judgment(_conj(p.op.adjoint(), a), p, a, mode, sat)


def _ax_utf(premises, w):
    _count("Ax.UTF", premises, 0)
    p = _program("Ax.UTF", w, Unitary)
    (a,) = _need("Ax.UTF", w, "A")
    mode, sat = _flags(w)
    return Judgment(a, p, _conj(p.op, a), mode, sat)


def _r_sc(premises, w):
    _count("R.SC", premises, 2)
    j1, j2 = premises
    mode = _same_mode("R.SC", premises)
    _require(close(j1.post, j2.pre), "R.SC", "post-condition of the first premise equals pre-condition of the second")
    return Judgment(j1.pre, Seq(j1.program, j2.program), j2.post, mode, j1.saturated and j2.saturated)


def _measurement(rule: str, w: Mapping, kind) -> tuple[Measurement, Program | None]:
    p = w.get("program")
    if p is not None:
        _require(isinstance(p, kind), rule, f"program is a {kind.__name__}")
        return p.measurement, p
    (m,) = _need(rule, w, "measurement")
    return m, None


def _r_if(premises, w):
    m, prog = _measurement("R.IF", w, Cond)
    _count("R.IF", premises, len(m.outcomes))
    mode = _same_mode("R.IF", premises)
    post = premises[0].post
    for j in premises[1:]:
        _require(close(j.post, post), "R.IF", "all branches share the post-condition")
    if prog is not None:
        for (o, branch), j in zip(prog.branches, premises):
            _require(same_program(branch, j.program), "R.IF", f"premise for outcome {o!r} proves that branch")
    else:
        prog = Cond(m, tuple(zip(m.outcomes, (j.program for j in premises))))
    pre = None
    for mo, j in zip(m.operators, premises):
        term = dirac.compose(dirac.compose(mo.adjoint(), j.pre), mo)
        pre = term if pre is None else _plus(pre, term)
    return Judgment(pre, prog, post, mode, all(j.saturated for j in premises))


def _r_lp_p(premises, w):
    _count("R.LP.P", premises, 1)
    (j,) = premises
    _require(j.mode == "partial", "R.LP.P", "the premise is a partial-correctness judgment")
    m, prog = _measurement("R.LP.P", w, While)
    (b_post,) = _need("R.LP.P", w, "B")
    if prog is None:
        (cont,) = _need("R.LP.P", w, "cont")
        prog = While(m, cont, j.program)
    else:
        _require(same_program(prog.body, j.program), "R.LP.P", "the premise proves the loop body")
    a = j.pre
    _effect_bounds(a, "R.LP.P", "A", lower=False)
    _effect_bounds(b_post, "R.LP.P", "B", lower=False)
    mb, mnb = m.operator(prog.cont), m.operator(prog.stop)
    r = _plus(dirac.compose(dirac.compose(mb.adjoint(), a), mb),
              dirac.compose(dirac.compose(mnb.adjoint(), b_post), mnb))
    _require(close(j.post, r), "R.LP.P", "premise post-condition is R = M_b†AM_b + M_¬b†BM_¬b")
    return Judgment(r, prog, b_post, "partial", False)


def _r_or(premises, w):
    _count("R.Or", premises, 1)
    (j,) = premises
    a, b = _need("R.Or", w, "A", "B")
    _require(leq(a, j.pre), "R.Or", "A ⊑ A'")
    _require(leq(j.post, b), "R.Or", "B' ⊑ B")
    return Judgment(a, j.program, b, j.mode, False)


def _r_scale_t(premises, w):
    _count("R.Scale.T", premises, 1)
    (j,) = premises
    _same_mode("R.Scale.T", premises, "total")
    (lam,) = _need("R.Scale.T", w, "lambda")
    lam = complex(lam)
    _require(abs(lam.imag) <= 1e-12 and lam.real >= 0, "R.Scale.T", "λ ≥ 0")
    return Judgment(dirac.scale(lam.real, j.pre), j.program, dirac.scale(lam.real, j.post), "total", j.saturated)


def _same_program_all(rule: str, premises) -> None:
    for j in premises[1:]:
        _require(same_program(j.program, premises[0].program), rule, "premises are about the same program")


def _r_add_t(premises, w):
    _count("R.Add.T", premises, 2)
    _same_mode("R.Add.T", premises, "total")
    _same_program_all("R.Add.T", premises)
    j1, j2 = premises
    return Judgment(_plus(j1.pre, j2.pre), j1.program, _plus(j1.post, j2.post), "total",
                    j1.saturated and j2.saturated)


def _r_cc_p(premises, w):
    _count("R.CC.P", premises, at_least=1)
    _same_mode("R.CC.P", premises, "partial")
    _same_program_all("R.CC.P", premises)
    (lams,) = _need("R.CC.P", w, "lambdas")
    lams = [complex(x) for x in lams]
    _require(len(lams) == len(premises), "R.CC.P", "one λ per premise")
    _require(all(abs(x.imag) <= 1e-12 and x.real >= 0 for x in lams), "R.CC.P", "∀i, 0 ≤ λ_i")
    _require(sum(x.real for x in lams) <= 1 + 1e-12, "R.CC.P", "Σλ_i ≤ 1")
    pre = post = None
    for x, j in zip(lams, premises):
        a, b = dirac.scale(x.real, j.pre), dirac.scale(x.real, j.post)
        pre = a if pre is None else _plus(pre, a)
        post = b if post is None else _plus(post, b)
    return Judgment(pre, premises[0].program, post, "partial", False)


def _r_st(premises, w):
    _count("R.ST", premises, 1)
    (j,) = premises
    _require(j.saturated, "R.ST", "the premise is saturated")
    return replace(j, saturated=False)


def _r_no_lp(premises, w):
    _count("R.No.LP", premises, 1)
    (j,) = premises
    _require(not has_while(j.program), "R.No.LP", "C has no while")
    # abort would make the two modes differ even without loops
    _require(not contains(j.program, Abort), "R.No.LP", "C has no abort")
    other = "partial" if j.mode == "total" else "total"
    return replace(j, mode=w.get("mode", other))


def _ax_inv(premises, w):
    _count("Ax.Inv", premises, 0)
    a, p = _need("Ax.Inv", w, "A", "program")
    _effect_bounds(a, "Ax.Inv", "A_S", lower=False)
    _require(not set(a.out) & set(footprint(p)), "Ax.Inv", "S ∩ pset(C) = ∅")
    return Judgment(a, p, a, "partial", False)


def _r_so(premises, w):
    _count("R.SO", premises, 1)
    (j,) = premises
    (ch,) = _need("R.SO", w, "channel")
    if not isinstance(ch, semantics.SuperOperator):
        raise SideConditionViolated("R.SO", "the channel witness is a super-operator")
    _require(not set(ch.labels) & set(footprint(j.program)), "R.SO", "S ∩ pset(C) = ∅")
    q = semantics.quality(ch)
    _require(q.is_cp and q.is_trace_preserving, "R.SO", "𝓔_S is a quantum channel (CP and trace-preserving)")
    star = semantics.dual(ch)

    def lift(a: LabelledOperator) -> LabelledOperator:
        dom = tuple(sorted(set(a.out) | set(ch.labels)))
        return semantics.apply(semantics.extend(star, dom), _ext(a, dom))
    return Judgment(lift(j.pre), j.program, lift(j.post), j.mode, j.saturated)


def _r_el(premises, w):
    _count("R.El", premises, 1)
    (j,) = premises
    (s,) = _need("R.El", w, "S")
    s = _labels(s)
    _require(not set(s) & set(j.pre.out), "R.El", "S_A ∩ S = ∅")
    return replace(j, pre=_ext(j.pre, set(j.pre.out) | set(s)))


def _r_er(premises, w):
    _count("R.Er", premises, 1)
    (j,) = premises
    (s,) = _need("R.Er", w, "S")
    s = _labels(s)
    _require(not set(s) & set(j.post.out), "R.Er", "S ∩ S_B = ∅")
    return replace(j, post=_ext(j.post, set(j.post.out) | set(s)))


def _strip(a: LabelledOperator, keep: tuple[int, ...], rule: str, name: str) -> LabelledOperator:
    _require(set(keep) <= set(a.out), rule, f"S_{name} lies within the labels of the {name}-condition")
    rest = [l for l in a.out if l not in keep]
    d = a.table.size(rest)
    core = dirac.scale(1 / d, dirac.partial_trace(a, keep))
    _require(close(_ext(core, a.out), a), rule, f"the {name}-condition has the form A ⊗ I on the stripped labels")
    return core


def _r_ti(premises, w):
    _count("R.TI", premises, 1)
    (j,) = premises
    keep_pre = _labels(w.get("S_pre", j.pre.out))
    keep_post = _labels(w.get("S_post", j.post.out))
    return replace(j, pre=_strip(j.pre, keep_pre, "R.TI", "pre"), post=_strip(j.post, keep_post, "R.TI", "post"))


def _frame(rule: str, premises, w, mode: str):
    _count(rule, premises, 1)
    (j,) = premises
    _same_mode(rule, premises, mode)
    (r,) = _need(rule, w, "R")
    _effect_bounds(r, rule, "R_S", upper=(mode == "partial"))
    busy = set(footprint(j.program)) | set(j.pre.out) | set(j.post.out)
    _require(not busy & set(r.out), rule, "(pset(C) ∪ S_A ∪ S_B) ∩ S = ∅")
    sat = j.saturated if mode == "total" else False
    return Judgment(dirac.tensor(j.pre, r), j.program, dirac.tensor(j.post, r), mode, sat)


def _parallel_compose(rule: str, premises, mode: str):
    _count(rule, premises, at_least=1)
    _same_mode(rule, premises, mode)
    for k, j in enumerate(premises):
        _effect_bounds(j.pre, rule, f"A_{k}", upper=(mode == "partial"))
        _effect_bounds(j.post, rule, f"B_{k}", upper=(mode == "partial"))
    seen: set[int] = set()
    for j in premises:
        ls = set(footprint(j.program)) | set(j.pre.out) | set(j.post.out)
        _require(not seen & ls, rule, "∀i≠j, (pset(C_i) ∪ S_Ai ∪ S_Bi) ∩ (pset(C_j) ∪ S_Aj ∪ S_Bj) = ∅")
        seen |= ls
    table = premises[0].table
    pre = dirac.big_tensor([j.pre for j in premises], table)
    post = dirac.big_tensor([j.post for j in premises], table)
    sat = all(j.saturated for j in premises) if mode == "total" else False
    return Judgment(pre, seq(*(j.program for j in premises)), post, mode, sat)


def _ax_utp(premises, w, forward: bool):
    rule = "Ax.UTFP" if forward else "Ax.UTP"
    _count(rule, premises, 0)
    p, a = _need(rule, w, "program", "A")
    items = _parallel(rule, p, Unitary)
    mode, sat = _flags(w)
    if not items:
        return Judgment(a, p, a, mode, sat)
    u = _joint_unitary(items, a.table)
    if forward:
        return Judgment(a, p, _conj(u, a), mode, sat)
    return Judgment(_conj(u.adjoint(), a), p, a, mode, sat)


def _ax_inp(premises, w):
    _count("Ax.InP", premises, 0)
    p, as_ = _need("Ax.InP", w, "program", "As")
    items = _parallel("Ax.InP", p, Init)
    _require(len(as_) == len(items), "Ax.InP", "one A_i per initialisation")
    mode, sat = _flags(w)
    table = as_[0].table if as_ else w.get("table")
    if table is None:
        raise SideConditionViolated("Ax.InP", "an empty loop needs the table witness")
    c = 1.0 + 0j
    for s, a in zip(items, as_):
        _require(a.out == s.target.label_set and a.is_square, "Ax.InP", f"A_i acts on {s.target.name}")
        c *= dirac.compose(s.state, a).trace()
    return Judgment(dirac.scalar(table, c), p, dirac.big_tensor(as_, table), mode, sat)


def _ax_infp(premises, w):
    _count("Ax.InFP", premises, 0)
    p = _program("Ax.InFP", w, Program)
    items = _parallel("Ax.InFP", p, Init)
    for s in items:
        _require(_pure_ket(s) is not None, "Ax.InFP", "each initial state is pure")
    mode, sat = _flags(w)
    table = items[0].target.table if items else w.get("table")
    if table is None:
        raise SideConditionViolated("Ax.InFP", "an empty loop needs the table witness")
    return Judgment(dirac.scalar(table, 1), p, dirac.big_tensor([s.state for s in items], table), mode, sat)


def _r_inner(premises, w):
    _count("R.Inner", premises, 1)
    (j,) = premises
    _require(j.mode == "total" and j.saturated, "R.Inner", "the premise is saturated total correctness")
    v, u = _need("R.Inner", w, "v", "u")
    _require(v.is_ket and u.is_ket, "R.Inner", "u and v are kets")
    _require(close(j.pre, dirac.scalar(j.table, 1)), "R.Inner", "the premise pre-condition is 1")
    _require(close(j.post, dirac.density(v)), "R.Inner", "the premise post-condition is |v⟩⟨v|")
    _require(v.norm() <= 1 + 1e-9, "R.Inner", "‖|v⟩‖ ≤ 1")
    _require(set(u.out) <= set(v.out), "R.Inner", "S_u ⊆ S_v")
    overlap = dirac.compose(u.adjoint(), v)
    return Judgment(dirac.scalar(j.table, overlap.norm() ** 2), j.program, dirac.density(u), "total", True)


# primed (state-form) rules: assertions are |v⟩⟨v| for the given kets

def _v(rule: str, w: Mapping) -> LabelledOperator:
    (v,) = _need(rule, w, "v")
    _require(v.is_ket, rule, "v is a ket")
    return v


def _ax_utf_state(premises, w):
    _count("Ax.UTF'", premises, 0)
    p = _program("Ax.UTF'", w, Unitary)
    v = _v("Ax.UTF'", w)
    _require(set(p.target.labels) <= set(v.out), "Ax.UTF'", "pset(x) ⊆ S")
    mode, sat = _flags(w)
    return state_judgment(v, p, dirac.compose(p.op, v), mode, sat)


def _ax_inf_state(premises, w):
    _count("Ax.InF'", premises, 0)
    p = _program("Ax.InF'", w, Init)
    v = _v("Ax.InF'", w)
    _require(not set(v.out) & set(p.target.labels), "Ax.InF'", "S ∩ pset(x) = ∅")
    k = _pure_ket(p)
    _require(k is not None, "Ax.InF'", "the initial state is pure")
    mode, sat = _flags(w)
    return state_judgment(v, p, dirac.tensor(v, k), mode, sat)


def _ax_utfp_state(premises, w):
    _count("Ax.UTFP'", premises, 0)
    p = _program("Ax.UTFP'", w, Program)
    v = _v("Ax.UTFP'", w)
    items = _parallel("Ax.UTFP'", p, Unitary)
    mode, sat = _flags(w)
    out = v
    for s in items:
        _require(set(s.target.labels) <= set(v.out), "Ax.UTFP'", "pset(x_i) ⊆ S")
        out = dirac.compose(s.op, out)
    return state_judgment(v, p, out, mode, sat)


def _ax_infp_state(premises, w):
    _count("Ax.InFP'", premises, 0)
    p = _program("Ax.InFP'", w, Program)
    v = _v("Ax.InFP'", w)
    items = _parallel("Ax.InFP'", p, Init)
    mode, sat = _flags(w)
    out = v
    for s in items:
        _require(not set(out.out) & set(s.target.labels), "Ax.InFP'", "S ∩ pset(x_i) = ∅")
        k = _pure_ket(s)
        _require(k is not None, "Ax.InFP'", "each initial state is pure")
        out = dirac.tensor(out, k)
    return state_judgment(v, p, out, mode, sat)


RULES: dict[str, Callable] = {
    "Ax.Sk": _ax_sk,
    "Ax.In": _ax_in,
    "Ax.InF": _ax_inf,
    "Ax.UT": _ax_ut,
    "Ax.UTF": _ax_utf,
    "R.SC": _r_sc,
    "R.IF": _r_if,
    "R.LP.P": _r_lp_p,
    "R.Or": _r_or,
    "R.Scale.T": _r_scale_t,
    "R.Add.T": _r_add_t,
    "R.CC.P": _r_cc_p,
    "R.ST": _r_st,
    "R.No.LP": _r_no_lp,
    "Ax.Inv": _ax_inv,
    "R.SO": _r_so,
    "R.El": _r_el,
    "R.Er": _r_er,
    "R.TI": _r_ti,
    "Frame.T": lambda p, w: _frame("Frame.T", p, w, "total"),
    "Frame.P": lambda p, w: _frame("Frame.P", p, w, "partial"),
    "R.PC.T": lambda p, w: _parallel_compose("R.PC.T", p, "total"),
    "R.PC.P": lambda p, w: _parallel_compose("R.PC.P", p, "partial"),
    "Ax.UTP": lambda p, w: _ax_utp(p, w, False),
    "Ax.UTFP": lambda p, w: _ax_utp(p, w, True),
    "Ax.InP": _ax_inp,
    "Ax.InFP": _ax_infp,
    "R.Inner": _r_inner,
    "Ax.UTF'": _ax_utf_state,
    "Ax.InF'": _ax_inf_state,
    "Ax.UTFP'": _ax_utfp_state,
    "Ax.InFP'": _ax_infp_state,
}

RULE_IDS = tuple(RULES)


def apply_rule(rule: str, premises: Sequence[Judgment] = (), witnesses: Mapping[str, Any] | None = None) -> Judgment:
    """Conclusion of ``rule`` from ``premises``, after checking its side conditions numerically.

    Axioms read their program from the ``program`` witness (a statement or, for
    the parallel rules, a sequence of statements).
    """
    if rule not in RULES:
        raise UnknownRule(rule)
    w = dict(witnesses or {})
    if "mode" in w and w["mode"] not in MODES:
        raise SideConditionViolated(rule, f"mode must be total or partial, not {w['mode']!r}")
    return RULES[rule](list(premises), w)


# proof outlines and the soundness harness build on the rules above
from .outline import OutlineReport, ProofOutline, check_outline  # noqa: E402
from .fuzz import FuzzStats, fuzz_all, replay, soundness_fuzz  # noqa: E402
