"""Randomised semantic soundness tests for the inference rules.

Every trial samples a small instance (variables of dimension 2 or 3, loop-free
programs of depth at most 3, coin loops for the loop rule) whose premises hold
by construction, applies the rule and checks the conclusion semantically.
A failing conclusion is written to a JSON file that :func:`replay` re-checks
without any of the generating code.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import dirac, hoare, semantics
from .assertion import format_operator, parse_assertion
from .config import Config, get_default
from .dirac import LabelledOperator, Variable, VarTable
from .errors import CounterexampleFound
from .qtypes import Bool, ZN
from .qwhile import (Cond, Init, Measurement, Program, Skip, Unitary, While, apply, basis_measurement, footprint,
                     init, init_state, seq)

Rng = np.random.Generator


# -- random objects ------------------------------------------------------------

def random_unitary(d: int, rng: Rng) -> np.ndarray:
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def random_vector(d: int, rng: Rng) -> np.ndarray:
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return v / np.linalg.norm(v)


def random_spectrum(d: int, rng: Rng, lo: float, hi: float) -> np.ndarray:
    u = random_unitary(d, rng)
    vals = rng.uniform(lo, hi, d)
    # push some eigenvalues onto the bounds, where side conditions are tight
    for k in range(d):
        if rng.random() < 0.25:
            vals[k] = lo if rng.random() < 0.5 else hi
    return (u * vals) @ u.conj().T


def random_density(d: int, rng: Rng) -> np.ndarray:
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    m = g @ g.conj().T
    return m / np.trace(m).real


@dataclass
class World:
    """The variable table shared by one trial."""
    table: VarTable
    vars: list[Variable]
    rng: Rng

    @classmethod
    def create(cls, rng: Rng) -> "World":
        table = VarTable()
        types = [Bool(), Bool(), ZN(3)] if rng.random() < 0.5 else [Bool(), ZN(3), Bool()]
        vars_ = [table.declare(n, t) for n, t in zip(("x", "y", "z"), types)]
        return cls(table, vars_, rng)

    def subset(self, pool=None, min_size: int = 1, max_size: int | None = None) -> list[Variable]:
        pool = list(self.vars if pool is None else pool)
        max_size = len(pool) if max_size is None else min(max_size, len(pool))
        if max_size < min_size:
            return []
        k = int(self.rng.integers(min_size, max_size + 1))
        idx = sorted(self.rng.choice(len(pool), size=k, replace=False)) if k else []
        return [pool[i] for i in idx]

    def target(self, pool=None, max_size: int = 2) -> Variable:
        vs = self.subset(pool, 1, max_size)
        return vs[0] if len(vs) == 1 else dirac.composite(*vs)

    def labels(self, vs) -> tuple[int, ...]:
        return tuple(sorted(l for v in vs for l in v.labels))

    def op(self, vs, lo: float = -1.0, hi: float = 1.0) -> LabelledOperator:
        ls = self.labels(vs)
        d = self.table.size(ls)
        return LabelledOperator(self.table, ls, ls, random_spectrum(d, self.rng, lo, hi))

    def effect(self, vs) -> LabelledOperator:
        return self.op(vs, 0.0, 1.0)

    def positive(self, vs) -> LabelledOperator:
        return self.op(vs, 0.0, float(self.rng.uniform(0.5, 3.0)))

    def ket(self, vs, norm: float = 1.0) -> LabelledOperator:
        ls = self.labels(vs)
        return dirac.ket(self.table, ls, norm * random_vector(self.table.size(ls), self.rng))

    def ket_on(self, labels, extra) -> LabelledOperator:
        ls = tuple(sorted(set(labels) | set(self.labels(extra))))
        return dirac.ket(self.table, ls, random_vector(self.table.size(ls), self.rng))

    # programs

    def unitary(self, pool=None) -> Unitary:
        t = self.target(pool)
        return apply(t, random_unitary(t.dim, self.rng))

    def init(self, pool=None, pure: bool = True) -> Init:
        (v,) = self.subset(pool, 1, 1)
        r = self.rng.random()
        if r < 0.5:
            return init(v, v.qtype.values()[int(self.rng.integers(v.dim))])
        if pure or r < 0.75:
            return init_state(v, random_vector(v.dim, self.rng))
        return Init(v, dirac.operator(self.table, v.labels, random_density(v.dim, self.rng)))

    def measurement(self, pool=None) -> Measurement:
        (v,) = self.subset(pool, 1, 1)
        if self.rng.random() < 0.6:
            return basis_measurement(v)
        # two-outcome measurement M0 = U0 C W, M1 = U1 S W with C² + S² = I
        d = v.dim
        theta = self.rng.uniform(0, math.pi / 2, d)
        w = random_unitary(d, self.rng)
        m0 = random_unitary(d, self.rng) @ np.diag(np.cos(theta)) @ w
        m1 = random_unitary(d, self.rng) @ np.diag(np.sin(theta)) @ w
        ops = tuple(dirac.operator(self.table, v.labels, m) for m in (m0, m1))
        return Measurement(v, (0, 1), ops, "M")

    def program(self, depth: int = 3, pool=None, pure: bool = False) -> Program:
        kinds = ["unitary", "init", "skip"] + (["seq", "seq", "cond"] if depth > 0 else [])
        kind = kinds[int(self.rng.integers(len(kinds)))]
        if kind == "unitary":
            return self.unitary(pool)
        if kind == "init":
            return self.init(pool, pure)
        if kind == "skip":
            return Skip()
        if kind == "seq":
            return seq(self.program(depth - 1, pool, pure), self.program(depth - 1, pool, pure))
        m = self.measurement(pool)
        return Cond(m, tuple((o, self.program(depth - 1, pool, pure)) for o in m.outcomes))

    def disjoint_programs(self, n: int, kind: Callable) -> tuple[list, list[list[Variable]]]:
        order = [self.vars[i] for i in self.rng.permutation(len(self.vars))]
        groups = [[v] for v in order[:n]]
        return [kind(g) for g in groups], groups

    def coin_flags(self) -> dict:
        return {"mode": str(self.rng.choice(hoare.MODES)), "saturated": bool(self.rng.random() < 0.5)}


# -- premises ------------------------------------------------------------------

def weakest(c: Program, b: LabelledOperator, mode: str, labels=()) -> LabelledOperator:
    return (hoare.wlp if mode == "partial" else hoare.wp)(c, b, labels)


def premise(world: World, c: Program, b: LabelledOperator, mode: str, saturated: bool,
            positive: bool = False, labels=()) -> hoare.Judgment:
    """A valid judgment ``{A} c {b}``; plain ones get a random strictly weaker ``A``."""
    w = weakest(c, b, mode, labels)
    if saturated:
        return hoare.Judgment(w, c, b, mode, True)
    if positive:
        # w ⪰ 0 here, so shrinking keeps A between 0 and w
        a = dirac.scale(1 - float(world.rng.uniform(0, 0.5)), w)
    else:
        slack = LabelledOperator(world.table, w.out, w.out, random_spectrum(w.matrix.shape[0], world.rng, 0, 0.3))
        a = dirac.add(w, dirac.scale(-1, slack))
    return hoare.Judgment(a, c, b, mode, False)


# -- generators: each returns (premises, witnesses) ----------------------------

def _ax_sk(w: World):
    return [], {"A": w.op(w.subset()), **w.coin_flags()}


def _ax_in(w: World):
    return [], {"program": w.init(pure=False), "A": w.op(w.subset()), **w.coin_flags()}


def _ax_inf(w: World):
    p = w.init()
    rest = [v for v in w.vars if v != p.target]
    return [], {"program": p, "A": w.op(w.subset(rest, 0)), **w.coin_flags()}


def _ax_ut(w: World):
    return [], {"program": w.unitary(), "A": w.op(w.subset()), **w.coin_flags()}


def _r_sc(w: World):
    mode, sat = w.coin_flags().values()
    c1, c2 = w.program(2), w.program(2)
    j2 = premise(w, c2, w.effect(w.subset()), mode, sat)
    j1 = premise(w, c1, j2.pre, mode, sat)
    return [j1, j2], {}


def _r_if(w: World):
    mode, sat = w.coin_flags().values()
    m = w.measurement()
    b = w.effect(w.subset())
    return [premise(w, w.program(2), b, mode, sat) for _ in m.outcomes], {"measurement": m}


def _r_lp_p(w: World):
    (x,) = w.subset([v for v in w.vars if v.dim == 2], 1, 1)
    m = basis_measurement(x)
    cont = m.outcomes[int(w.rng.integers(2))]
    others = [v for v in w.vars if v is not x]
    # the body must act on x for the loop to exit
    body = seq(w.unitary([x] + w.subset(others, 0, 1)), w.program(1))
    loop = While(m, cont, body)
    b = w.effect(w.subset())
    dom = tuple(sorted(set(footprint(loop)) | set(b.out)))
    so = semantics.dual(semantics.denote(loop, w.table, dom, strategy="closed"))
    bm = dirac.cyl_extend(b, dom).matrix
    eye = np.eye(bm.shape[0])
    wl = LabelledOperator(w.table, dom, dom, semantics.apply_matrix(so, bm) + eye - semantics.apply_matrix(so, eye))
    a = hoare.wlp(body, wl, dom)
    a = dirac.scale(1 - float(w.rng.uniform(0, 0.5)), a)
    mb, mnb = m.operator(cont), m.operator(loop.stop)
    r = hoare._plus(dirac.compose(dirac.compose(mb.adjoint(), a), mb),
                    dirac.compose(dirac.compose(mnb.adjoint(), b), mnb))
    return [hoare.Judgment(a, body, r, "partial", False)], {"program": loop, "B": b}


def _r_or(w: World):
    mode, sat = w.coin_flags().values()
    j = premise(w, w.program(), w.op(w.subset()), mode, sat)
    a = dirac.add(j.pre, dirac.scale(-1, w.op([v for v in w.vars if set(v.labels) <= set(j.pre.out)] or [], 0, 0.5)))
    extra = w.subset(min_size=0)
    dom = tuple(sorted(set(j.post.out) | set(w.labels(extra))))
    b = dirac.add(dirac.cyl_extend(j.post, dom), w.op([v for v in w.vars if set(v.labels) <= set(dom)], 0, 0.5))
    return [j], {"A": a, "B": b}


def _r_scale_t(w: World):
    j = premise(w, w.program(), w.op(w.subset()), "total", bool(w.rng.random() < 0.5))
    lam = 0.0 if w.rng.random() < 0.1 else float(w.rng.uniform(0, 3))
    return [j], {"lambda": lam}


def _r_add_t(w: World):
    c = w.program()
    return [premise(w, c, w.op(w.subset()), "total", bool(w.rng.random() < 0.5)) for _ in range(2)], {}


def _r_cc_p(w: World):
    c = w.program()
    k = int(w.rng.integers(1, 4))
    lams = w.rng.dirichlet(np.ones(k)) * (1.0 if w.rng.random() < 0.3 else w.rng.uniform(0, 1))
    js = [premise(w, c, w.effect(w.subset()), "partial", bool(w.rng.random() < 0.5)) for _ in range(k)]
    return js, {"lambdas": [float(x) for x in lams]}


def _r_st(w: World):
    mode = w.coin_flags()["mode"]
    return [premise(w, w.program(), w.op(w.subset()), mode, True)], {}


def _r_no_lp(w: World):
    mode, sat = w.coin_flags().values()
    b = w.effect(w.subset()) if mode == "partial" else w.op(w.subset())
    return [premise(w, w.program(), b, mode, sat)], {}


def _split(w: World) -> tuple[list[Variable], list[Variable]]:
    inner = w.subset(max_size=len(w.vars) - 1)
    return inner, [v for v in w.vars if v not in inner]


def _ax_inv(w: World):
    inner, outer = _split(w)
    return [], {"program": w.program(pool=inner), "A": w.op(w.subset(outer), -1.0, 1.0)}


def _r_so(w: World):
    inner, outer = _split(w)
    mode, sat = w.coin_flags().values()
    j = premise(w, w.program(pool=inner), w.op(w.subset()), mode, sat)
    s = w.subset(outer)
    ls = w.labels(s)
    d = w.table.size(ls)
    iso = random_unitary(2 * d, w.rng)[:, :d]
    kraus = [iso[:d], iso[d:]]
    return [j], {"channel": semantics.kraus_map(w.table, ls, kraus)}


def _r_el(w: World):
    inner, outer = _split(w)
    mode, sat = w.coin_flags().values()
    j = premise(w, w.program(pool=inner), w.op(w.subset(inner)), mode, sat)
    return [j], {"S": w.labels(w.subset(outer))}


def _r_er(w: World):
    mode, sat = w.coin_flags().values()
    bvars = w.subset(max_size=len(w.vars) - 1)
    j = premise(w, w.program(), w.op(bvars), mode, sat)
    return [j], {"S": w.labels(w.subset([v for v in w.vars if v not in bvars]))}


def _r_ti(w: World):
    inner, outer = _split(w)
    mode, sat = w.coin_flags().values()
    c = w.program(pool=inner)
    bvars = w.subset(inner)
    s2 = w.subset(outer)
    b = dirac.cyl_extend(w.op(bvars), w.labels(bvars + s2))
    j = premise(w, c, b, mode, sat)
    # a plain premise weakened by a random operator no longer has the I_S2 factor
    if not sat:
        core = dirac.scale(1 / w.table.size(w.labels(s2)),
                           dirac.partial_trace(j.pre, [l for l in j.pre.out if l not in w.labels(s2)]))
        j = hoare.Judgment(dirac.cyl_extend(core, j.pre.out), c, b, mode, False)
    keep_pre = tuple(l for l in j.pre.out if l not in w.labels(s2))
    return [j], {"S_pre": keep_pre, "S_post": w.labels(bvars)}


def _frame(w: World, mode: str):
    inner, outer = _split(w)
    sat = bool(w.rng.random() < 0.5)
    b = w.effect(w.subset(inner)) if mode == "partial" else w.op(w.subset(inner))
    j = premise(w, w.program(pool=inner), b, mode, sat)
    r = w.effect(w.subset(outer)) if mode == "partial" else w.positive(w.subset(outer))
    return [j], {"R": r}


def _parallel_compose(w: World, mode: str):
    n = int(w.rng.integers(1, len(w.vars) + 1))
    progs, groups = w.disjoint_programs(n, lambda g: w.program(2, pool=g))
    js = []
    for c, g in zip(progs, groups):
        b = w.effect(g) if mode == "partial" else w.positive(g)
        js.append(premise(w, c, b, mode, bool(w.rng.random() < 0.5), positive=True))
    return js, {}


def _ax_utp(w: World):
    n = int(w.rng.integers(1, len(w.vars) + 1))
    progs, _ = w.disjoint_programs(n, lambda g: w.unitary(g))
    return [], {"program": seq(*progs), "A": w.op(w.subset()), **w.coin_flags()}


def _ax_inp(w: World):
    n = int(w.rng.integers(1, len(w.vars) + 1))
    progs, groups = w.disjoint_programs(n, lambda g: w.init(g, pure=False))
    return [], {"program": seq(*progs), "As": [w.op(g) for g in groups], **w.coin_flags()}


def _ax_infp(w: World):
    n = int(w.rng.integers(1, len(w.vars) + 1))
    progs, _ = w.disjoint_programs(n, lambda g: w.init(g))
    return [], {"program": seq(*progs), **w.coin_flags()}


def _r_inner(w: World):
    sv = w.subset()
    inits = [w.init([v]) for v in sv]
    target = sv[0] if len(sv) == 1 else dirac.composite(*sv)
    c = seq(*inits, apply(target, random_unitary(target.dim, w.rng)))
    out = semantics.evolve(c, dirac.identity(w.table, w.labels(sv)) / w.table.size(w.labels(sv)))
    vals, vecs = np.linalg.eigh(out.matrix)
    v = LabelledOperator(w.table, out.out, (), vecs[:, -1:])
    j = hoare.Judgment(dirac.scalar(w.table, 1), c, dirac.density(v), "total", True)
    u = w.ket(w.subset(sv), float(w.rng.uniform(0, 1.5)))
    return [j], {"v": v, "u": u}


def _ax_utf_state(w: World):
    p = w.unitary()
    extra = w.subset([v for v in w.vars if not set(v.labels) & set(p.target.labels)], 0)
    return [], {"program": p, "v": w.ket_on(p.target.labels, extra), **w.coin_flags()}


def _ax_inf_state(w: World):
    p = w.init()
    rest = [v for v in w.vars if v != p.target]
    return [], {"program": p, "v": w.ket(w.subset(rest, 0)), **w.coin_flags()}


def _ax_utfp_state(w: World):
    n = int(w.rng.integers(1, len(w.vars) + 1))
    progs, groups = w.disjoint_programs(n, lambda g: w.unitary(g))
    used = [v for g in groups for v in g]
    extra = w.subset([v for v in w.vars if v not in used], 0)
    return [], {"program": seq(*progs), "v": w.ket(used + extra), **w.coin_flags()}


def _ax_infp_state(w: World):
    n = int(w.rng.integers(1, len(w.vars) + 1))
    progs, groups = w.disjoint_programs(n, lambda g: w.init(g))
    used = [v for g in groups for v in g]
    return [], {"program": seq(*progs), "v": w.ket(w.subset([v for v in w.vars if v not in used], 0)),
                **w.coin_flags()}


GENERATORS: dict[str, Callable[[World], tuple]] = {
    "Ax.Sk": _ax_sk,
    "Ax.In": _ax_in,
    "Ax.InF": _ax_inf,
    "Ax.UT": _ax_ut,
    "Ax.UTF": _ax_ut,
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
    "Frame.T": lambda w: _frame(w, "total"),
    "Frame.P": lambda w: _frame(w, "partial"),
    "R.PC.T": lambda w: _parallel_compose(w, "total"),
    "R.PC.P": lambda w: _parallel_compose(w, "partial"),
    "Ax.UTP": _ax_utp,
    "Ax.UTFP": _ax_utp,
    "Ax.InP": _ax_inp,
    "Ax.InFP": _ax_infp,
    "R.Inner": _r_inner,
    "Ax.UTF'": _ax_utf_state,
    "Ax.InF'": _ax_inf_state,
    "Ax.UTFP'": _ax_utfp_state,
    "Ax.InFP'": _ax_infp_state,
}


# -- driver --------------------------------------------------------------------

@dataclass
class FuzzStats:
    rule: str
    trials: int
    passed: int = 0
    min_slack: float = math.inf
    max_residual: float = 0.0
    counterexamples: list[str] = field(default_factory=list)
    seconds: float = 0.0

    @property
    def ok(self) -> bool:
        return self.passed == self.trials and not self.counterexamples


def trial_rng(rule: str, seed: int, trial: int) -> Rng:
    """Independent stream per (seed, rule, trial)."""
    return np.random.default_rng([int(seed), zlib.crc32(rule.encode()), int(trial)])


def instance(rule: str, seed: int, trial: int) -> tuple[list[hoare.Judgment], dict]:
    world = World.create(trial_rng(rule, seed, trial))
    return GENERATORS[rule](world)


def _judgment_record(j: hoare.Judgment) -> dict:
    from .parser import pretty
    text, sidecar = pretty(j.program, j.table)
    return {"pre": format_operator(j.pre), "program": text, "sidecar": sidecar, "post": format_operator(j.post),
            "mode": j.mode, "saturated": j.saturated}


def save_counterexample(rule: str, seed: int, trial: int, premises, conclusion: hoare.Judgment,
                        validity: hoare.Validity, out_dir=None) -> str:
    out_dir = Path(out_dir or os.environ.get("QWV_FUZZ_DIR") or tempfile.gettempdir())
    out_dir.mkdir(parents=True, exist_ok=True)
    record = {"rule": rule, "seed": seed, "trial": trial, "slack": validity.slack, "residual": validity.residual,
              "premises": [_judgment_record(p) for p in premises], "conclusion": _judgment_record(conclusion)}
    path = out_dir / f"counterexample-{rule.replace(chr(39), 'p')}-{seed}-{trial}.json"
    path.write_text(json.dumps(record, indent=2, ensure_ascii=False))
    return str(path)


def load_judgment(record: dict) -> hoare.Judgment:
    from .parser import parse_with_sidecar
    table, program = parse_with_sidecar(record["program"], record.get("sidecar"))
    return hoare.Judgment(parse_assertion(record["pre"], table), program, parse_assertion(record["post"], table),
                          record["mode"], bool(record["saturated"]))


def replay(path, config: Config | None = None) -> hoare.Validity:
    """Re-check the conclusion stored in a counterexample file."""
    record = json.loads(Path(path).read_text())
    return hoare.check_valid(load_judgment(record["conclusion"]), config)


def soundness_fuzz(rule: str, trials: int = 100, seed: int = 0, out_dir=None, raise_on_failure: bool = True,
                   config: Config | None = None) -> FuzzStats:
    if rule not in hoare.RULES:
        raise hoare.UnknownRule(rule)
    if trials < 1:
        raise ValueError("trials must be >= 1")
    config = config or get_default()
    stats = FuzzStats(rule, trials)
    start = time.perf_counter()
    for t in range(trials):
        premises, witnesses = instance(rule, seed, t)
        for p in premises:
            if not hoare.check_valid(p, config).valid:
                raise RuntimeError(f"{rule} trial {t}: generated premise is not valid")
        conclusion = hoare.apply_rule(rule, premises, witnesses)
        v = hoare.check_valid(conclusion, config)
        if v.valid:
            stats.passed += 1
            if not math.isnan(v.slack):
                stats.min_slack = min(stats.min_slack, v.slack)
            stats.max_residual = max(stats.max_residual, v.residual) if conclusion.saturated else stats.max_residual
            continue
        path = save_counterexample(rule, seed, t, premises, conclusion, v, out_dir)
        stats.counterexamples.append(path)
        if raise_on_failure:
            raise CounterexampleFound(rule, path, f"trial {t}, slack {v.slack:.3g}, residual {v.residual:.3g}")
    stats.seconds = time.perf_counter() - start
    return stats


def _fuzz_task(args) -> FuzzStats:
    rule, trials, seed, out_dir = args
    return soundness_fuzz(rule, trials, seed, out_dir, raise_on_failure=False)


def fuzz_all(rules=None, trials: int = 100, seed: int = 0, jobs: int = 1, out_dir=None) -> list[FuzzStats]:
    rules = list(rules or hoare.RULE_IDS)
    tasks = [(r, trials, seed, out_dir) for r in rules]
    if jobs <= 1:
        return [_fuzz_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_fuzz_task, tasks))
