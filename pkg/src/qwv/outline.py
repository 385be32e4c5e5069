"""Checkable proof outlines.

An outline is a list of steps. Each step names a rule, refers to earlier steps as
premises, supplies witnesses as assertion strings and states its conclusion::

    {"rule": "R.SC", "premises": [0, 1], "witnesses": {},
     "conclusion": {"pre": "1", "program": "0:2", "post": "proj(x, 1)",
                    "mode": "total", "saturated": true}}

Besides the inference rules, two pseudo-rules are accepted: ``semantic`` (a leaf
discharged by :func:`~qwv.hoare.check_valid`) and ``rewrite`` (replace pre- and/or
post-condition by an equal operator).

Program references select from the program's top-level statements: ``"all"``,
``"k"`` or ``"a:b"``. A path continues with ``/body`` (loop body) or ``/b<i>``
(the i-th branch of a conditional), followed by another index or slice.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from . import dirac, hoare, semantics
from .assertion import evaluate, format_operator, parse_assertion
from .config import Config, get_default
from .dirac import LabelledOperator, VarTable
from .errors import QWVError, SideConditionViolated, StepFailed
from .qwhile import Cond, Program, While, same_program, seq, statements

PSEUDO_RULES = ("semantic", "rewrite")

# rules whose program is read from the step's conclusion
_PROGRAM_FROM_CONCLUSION = {"Ax.Sk", "Ax.In", "Ax.InF", "Ax.UT", "Ax.UTF", "R.IF", "R.LP.P", "Ax.Inv", "Ax.UTP",
                            "Ax.UTFP", "Ax.InP", "Ax.InFP", "Ax.UTF'", "Ax.InF'", "Ax.UTFP'", "Ax.InFP'"}

_OPERATOR_WITNESSES = {"A", "B", "R", "u", "v"}
_LABEL_WITNESSES = {"S", "S_pre", "S_post"}


@dataclass
class OutlineStep:
    rule: str
    premises: list[int] = field(default_factory=list)
    witnesses: dict[str, Any] = field(default_factory=dict)
    conclusion: dict[str, Any] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"rule": self.rule, "premises": list(self.premises), "witnesses": dict(self.witnesses),
                "conclusion": dict(self.conclusion)}


@dataclass
class ProofOutline:
    steps: list[OutlineStep]
    program: Program | None = None
    table: VarTable | None = None

    @classmethod
    def from_json(cls, data, program: Program | None = None, table: VarTable | None = None) -> "ProofOutline":
        if isinstance(data, (str, Path)):
            data = json.loads(Path(data).read_text())
        items = data["steps"] if isinstance(data, Mapping) else data
        steps = []
        for k, s in enumerate(items):
            if not isinstance(s, Mapping) or "rule" not in s:
                raise StepFailed(k, "a step is an object with a 'rule' field")
            steps.append(OutlineStep(s["rule"], list(s.get("premises", [])), dict(s.get("witnesses", {})),
                                     dict(s.get("conclusion", {}))))
        return cls(steps, program, table)

    def to_json(self) -> list[dict]:
        return [s.to_json() for s in self.steps]

    def dump(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2, ensure_ascii=False))


@dataclass
class StepResult:
    index: int
    rule: str
    ok: bool
    judgment: hoare.Judgment | None = None
    reason: str = ""

    def describe(self) -> str:
        if not self.ok:
            return f"[{self.index}] {self.rule}: FAILED ({self.reason})"
        j = self.judgment
        return f"[{self.index}] {self.rule}: ok  {j.flag()} on labels {list(j.labels)}"


@dataclass
class OutlineReport:
    results: list[StepResult]

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.results)

    @property
    def final(self) -> hoare.Judgment | None:
        return self.results[-1].judgment if self.results else None

    def lines(self) -> list[str]:
        return [r.describe() for r in self.results]


def resolve_program_ref(program: Program, ref) -> Program:
    """Sub-program named by ``ref`` (see module docstring)."""
    if isinstance(ref, int):
        ref = str(ref)
    parts = str(ref).strip().split("/")
    current = program
    for k, part in enumerate(parts):
        part = part.strip()
        if k > 0 and part == "body":
            if not isinstance(current, While):
                raise ValueError(f"{ref!r}: 'body' applies to a while loop")
            current = current.body
            continue
        if k > 0 and part.startswith("b") and part[1:].isdigit():
            if not isinstance(current, Cond):
                raise ValueError(f"{ref!r}: '{part}' applies to a conditional")
            current = current.branches[int(part[1:])][1]
            continue
        items = statements(current)
        if part == "all":
            continue
        if ":" in part:
            a, b = part.split(":")
            current = seq(*items[int(a) if a else 0:int(b) if b else len(items)])
        else:
            current = items[int(part)]
    return current


def _operator(text, table: VarTable) -> LabelledOperator:
    if isinstance(text, LabelledOperator):
        return text
    return parse_assertion(str(text), table)


def _labels(text, table: VarTable) -> tuple[int, ...]:
    if isinstance(text, (list, tuple)):
        out: set[int] = set()
        for t in text:
            out |= set(_labels(t, table))
        return tuple(sorted(out))
    v = evaluate(f"I({text})", table)
    return v.out


def _channel(kraus, table: VarTable) -> semantics.SuperOperator:
    ops = [_operator(k, table) for k in kraus]
    labels = tuple(sorted({l for k in ops for l in k.out}))
    mats = [dirac.cyl_extend(k, labels).matrix for k in ops]
    return semantics.kraus_map(table, labels, mats)


def parse_witnesses(raw: Mapping[str, Any], table: VarTable) -> dict[str, Any]:
    out: dict[str, Any] = {}
    for name, value in raw.items():
        if name in _OPERATOR_WITNESSES:
            out[name] = _operator(value, table)
        elif name in _LABEL_WITNESSES:
            out[name] = _labels(value, table)
        elif name == "As":
            out[name] = [_operator(v, table) for v in value]
        elif name == "lambda":
            out[name] = complex(evaluate(str(value)))
        elif name == "lambdas":
            out[name] = [complex(evaluate(str(v))) for v in value]
        elif name == "channel":
            out[name] = _channel(value, table)
        elif name == "cont":
            out[name] = evaluate(str(value), table)
        elif name == "saturated":
            out[name] = bool(value)
        else:
            out[name] = value
    return out


def _stated_program(step: OutlineStep, program: Program | None) -> Program | None:
    ref = step.conclusion.get("program")
    if ref is None:
        return None
    if program is None:
        raise ValueError("the outline refers to a program but none was given")
    return resolve_program_ref(program, ref)


def _derive(step: OutlineStep, premises: list[hoare.Judgment], program: Program | None, table: VarTable,
            config: Config) -> hoare.Judgment:
    c = step.conclusion
    stated = _stated_program(step, program)
    if step.rule == "semantic":
        if premises:
            raise ValueError("a semantic step has no premises")
        if stated is None or "pre" not in c or "post" not in c:
            raise ValueError("a semantic step states pre, program and post")
        j = hoare.Judgment(_operator(c["pre"], table), stated, _operator(c["post"], table),
                           c.get("mode", "total"), bool(c.get("saturated", False)))
        v = hoare.check_valid(j, config)
        if not v.valid:
            raise ValueError(f"judgment is not valid (slack {v.slack:.3g}, residual {v.residual:.3g})")
        return j
    if step.rule == "rewrite":
        if len(premises) != 1:
            raise ValueError("a rewrite step has exactly one premise")
        (p,) = premises
        pre = _operator(c["pre"], table) if "pre" in c else p.pre
        post = _operator(c["post"], table) if "post" in c else p.post
        if not hoare.close(pre, p.pre, config.eq_tol):
            raise ValueError("rewritten pre-condition differs from the premise")
        if not hoare.close(post, p.post, config.eq_tol):
            raise ValueError("rewritten post-condition differs from the premise")
        return hoare.Judgment(pre, p.program, post, p.mode, p.saturated)
    w = parse_witnesses(step.witnesses, table)
    if step.rule in _PROGRAM_FROM_CONCLUSION:
        if stated is None:
            raise ValueError(f"{step.rule} reads its program from the conclusion")
        w.setdefault("program", stated)
    if step.rule in ("Ax.InP", "Ax.InFP"):
        w.setdefault("table", table)
    for flag in ("mode", "saturated"):
        if flag in c and flag not in w and not premises:
            w[flag] = c[flag]
    return hoare.apply_rule(step.rule, premises, w)


def _compare(step: OutlineStep, j: hoare.Judgment, program: Program | None, table: VarTable, config: Config) -> None:
    c = step.conclusion
    for name in ("pre", "post"):
        if name in c and step.rule not in PSEUDO_RULES:
            if not hoare.close(_operator(c[name], table), getattr(j, name), config.eq_tol):
                raise ValueError(f"stated {name}-condition differs from the derived one")
    stated = _stated_program(step, program)
    if stated is not None and not same_program(stated, j.program, 1e-9):
        raise ValueError("stated program differs from the derived one")
    if "mode" in c and c["mode"] != j.mode:
        raise ValueError(f"stated mode {c['mode']} differs from derived {j.mode}")
    if c.get("saturated") and not j.saturated:
        raise ValueError("stated saturated but the derivation is plain")


def check_outline(outline: ProofOutline | list, program: Program | None = None, table: VarTable | None = None,
                  config: Config | None = None, strict: bool = True) -> OutlineReport:
    """Re-derive every step; raise :class:`StepFailed` at the first failure when ``strict``."""
    if not isinstance(outline, ProofOutline):
        outline = ProofOutline.from_json(outline)
    program = program if program is not None else outline.program
    table = table if table is not None else outline.table
    config = config or get_default()
    results: list[StepResult] = []
    for k, step in enumerate(outline.steps):
        try:
            if step.rule not in PSEUDO_RULES and step.rule not in hoare.RULES:
                raise ValueError(f"unknown rule {step.rule!r}")
            for i in step.premises:
                if not isinstance(i, int) or not 0 <= i < k:
                    raise ValueError(f"premise {i!r} does not refer to an earlier step")
                if not results[i].ok:
                    raise ValueError(f"premise {i} failed")
            if table is None:
                raise ValueError("no variable table")
            premises = [results[i].judgment for i in step.premises]
            j = _derive(step, premises, program, table, config)
            _compare(step, j, program, table, config)
            results.append(StepResult(k, step.rule, True, j))
        except (QWVError, ValueError, KeyError, TypeError, IndexError) as exc:
            reason = exc.condition if isinstance(exc, SideConditionViolated) else str(exc)
            results.append(StepResult(k, step.rule, False, None, reason))
            if strict:
                err = StepFailed(k, reason)
                err.report = OutlineReport(results)
                raise err from exc
    return OutlineReport(results)


def conclusion_of(j: hoare.Judgment, program_ref: str | None = None) -> dict:
    """JSON conclusion block for a judgment (used when writing outlines)."""
    out = {"pre": format_operator(j.pre), "post": format_operator(j.post), "mode": j.mode,
           "saturated": j.saturated}
    if program_ref is not None:
        out["program"] = program_ref
    return out
