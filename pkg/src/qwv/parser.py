"""Concrete syntax for qwhile programs.

::

    program := decl* stmt*
    decl    := "var" name ":" type ";"
    type    := factor ("*" factor | "^" n)*      factor := "bool" | "int<" n ">" | "(" type ")"
    stmt    := "skip;" | "abort;"
             | lhs ":=" "|" expr ">" ";"           basis state
             | lhs ":=" "state" "(" expr ")" ";"    pure state from amplitudes
             | lhs ":=" "density" "(" expr ")" ";"  mixed state from a matrix
             | lhs ":=" gate "[" lhs "]" ";"
             | "if" meas "[" lhs "]" "{" (expr "->" block)+ ("else" "->" block)? "}"
             | "while" meas "[" lhs "]" "=" expr block
             | "for" name ("<" expr | "in" expr) block
    gate    := name ("(" garg ("," garg)* ")")?      garg := gate | expr
    lhs     := ref | "[" lhs ("," lhs)* "]"           ref := name ("[" expr "]")*
    block   := "{" stmt* "}"

``meas`` is the computational-basis measurement; any other name refers to a
measurement supplied by the caller. Expressions use the assertion language of
:mod:`qwv.assertion`, and may mention the indices of enclosing ``for`` loops.
Loops are unrolled while parsing. Comments run from ``//`` to end of line.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from . import assertion, dirac
from .dirac import LabelledOperator, Variable, VarTable
from .errors import (DisjointnessError, QWhileSyntaxError, QWhileTypeError, QWVError, ShapeMismatch,
                     UnknownGate, UnknownVariable)
from .qtypes import Bool, GateRegistry, PairOf, QType, TupleOf, ZN
from .qwhile import (Abort, Cond, Init, Measurement, Program, Seq, Skip, Unitary, While,
                     basis_measurement, seq, statements)

_TOKEN = re.compile(r"""
    (?P<ws>\s+|//[^\n]*)
  | (?P<num>(?:\d+\.(?!\.)\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>:=|->|\.\.|\(x\)|[;{}\[\](),|<>=*^+\-/:])
""", re.VERBOSE)

KEYWORDS = {"var", "skip", "abort", "if", "else", "while", "for", "in", "state", "density"}


@dataclass(frozen=True)
class Tok:
    kind: str
    text: str
    pos: int
    end: int
    line: int
    col: int


def tokenize(source: str) -> list[Tok]:
    out: list[Tok] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(source):
        m = _TOKEN.match(source, pos)
        if not m:
            raise QWhileSyntaxError(f"unexpected character {source[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind != "ws":
            out.append(Tok(kind, m.group(), pos, m.end(), line, pos - line_start + 1))
        nl = m.group().count("\n")
        if nl:
            line += nl
            line_start = m.start() + m.group().rfind("\n") + 1
        pos = m.end()
    out.append(Tok("eof", "", len(source), len(source), line, len(source) - line_start + 1))
    return out


# -- concrete syntax tree ----------------------------------------------------

@dataclass(frozen=True)
class Expr:
    text: str
    line: int
    col: int


@dataclass(frozen=True)
class RefLhs:
    expr: Expr


@dataclass(frozen=True)
class ListLhs:
    items: tuple
    line: int
    col: int


@dataclass(frozen=True)
class GateCall:
    name: str
    args: tuple  # GateCall | Expr
    line: int
    col: int


@dataclass(frozen=True)
class SSimple:
    kind: str  # "skip" | "abort"


@dataclass(frozen=True)
class SInit:
    lhs: Any
    kind: str  # "basis" | "state" | "density"
    expr: Expr


@dataclass(frozen=True)
class SUnitary:
    lhs: Any
    gate: GateCall
    operand: Any


@dataclass(frozen=True)
class SIf:
    meas: str
    target: Any
    branches: tuple  # ((Expr | None, block), ...)
    line: int
    col: int


@dataclass(frozen=True)
class SWhile:
    meas: str
    target: Any
    value: Expr
    body: tuple
    line: int
    col: int


@dataclass(frozen=True)
class SFor:
    var: str
    kind: str  # "<" | "in"
    expr: Expr
    body: tuple


@dataclass(frozen=True)
class SDecl:
    name: str
    qtype: QType
    line: int
    col: int


class _Reader:
    def __init__(self, source: str):
        self.src = source
        self.toks = tokenize(source)
        self.i = 0

    @property
    def tok(self) -> Tok:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Tok:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def advance(self) -> Tok:
        t = self.tok
        if t.kind != "eof":
            self.i += 1
        return t

    def error(self, msg: str, t: Tok | None = None) -> QWhileSyntaxError:
        t = t or self.tok
        return QWhileSyntaxError(msg, t.line, t.col)

    def at(self, text: str) -> bool:
        return self.tok.text == text and self.tok.kind != "eof"

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.advance()
            return True
        return False

    def expect(self, text: str) -> Tok:
        if not self.at(text):
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")
        return self.advance()

    def name(self) -> Tok:
        if self.tok.kind != "name":
            raise self.error(f"expected a name, found {self.tok.text or 'end of input'!r}")
        return self.advance()

    def integer(self) -> int:
        t = self.tok
        if t.kind != "num" or not t.text.isdigit():
            raise self.error("expected an integer")
        self.advance()
        return int(t.text)

    def expr_until(self, stops: set[str]) -> Expr:
        """Raw text of a balanced token run ending before a stop token at depth 0."""
        start = self.tok
        depth = 0
        while True:
            t = self.tok
            if t.kind == "eof":
                raise self.error("unexpected end of input in expression")
            if depth == 0 and t.text in stops:
                break
            if t.text in "([{" and t.kind == "op":
                depth += 1
            elif t.text in ")]}" and t.kind == "op":
                if depth == 0:
                    break
                depth -= 1
            self.advance()
        if self.tok is start:
            raise self.error("expected an expression")
        end = self.toks[self.i - 1].end
        return Expr(self.src[start.pos:end], start.line, start.col)

    # -- declarations and types
    def program(self):
        decls, stmts = [], []
        while self.at("var"):
            decls.append(self.decl())
        while self.tok.kind != "eof":
            stmts.append(self.stmt())
        return decls, tuple(stmts)

    def decl(self) -> SDecl:
        t = self.expect("var")
        name = self.name()
        if name.text in KEYWORDS:
            raise self.error(f"{name.text!r} is reserved", name)
        self.expect(":")
        qt = self.type_()
        self.expect(";")
        return SDecl(name.text, qt, t.line, t.col)

    def type_(self) -> QType:
        left = self.type_factor()
        while True:
            if self.accept("*"):
                left = PairOf(left, self.type_factor())
            elif self.accept("^"):
                left = TupleOf(left, self.integer())
            else:
                return left

    def type_factor(self) -> QType:
        if self.accept("("):
            t = self.type_()
            self.expect(")")
            return t
        t = self.name()
        if t.text == "bool":
            return Bool()
        if t.text == "int":
            self.expect("<")
            n = self.integer()
            self.expect(">")
            return ZN(n)
        raise self.error(f"unknown type {t.text!r}", t)

    # -- statements
    def block(self) -> tuple:
        self.expect("{")
        out = []
        while not self.at("}"):
            if self.tok.kind == "eof":
                raise self.error("unclosed block")
            out.append(self.stmt())
        self.expect("}")
        return tuple(out)

    def stmt(self):
        t = self.tok
        if t.text in ("skip", "abort") and t.kind == "name":
            self.advance()
            self.expect(";")
            return SSimple(t.text)
        if t.text == "if" and t.kind == "name":
            return self.if_()
        if t.text == "while" and t.kind == "name":
            return self.while_()
        if t.text == "for" and t.kind == "name":
            return self.for_()
        if t.text == "var":
            raise self.error("declarations must precede statements")
        lhs = self.lhs()
        self.expect(":=")
        if self.accept("|"):
            e = self.expr_until({">"})
            self.expect(">")
            self.expect(";")
            return SInit(lhs, "basis", e)
        if self.tok.text in ("state", "density") and self.peek().text == "(":
            kind = self.advance().text
            self.expect("(")
            e = self.expr_until({")"})
            self.expect(")")
            self.expect(";")
            return SInit(lhs, kind, e)
        gate = self.gate()
        operand = self.lhs_items_after_bracket(self.expect("["))
        self.expect(";")
        return SUnitary(lhs, gate, operand)

    def lhs(self):
        if self.at("["):
            return self.lhs_items_after_bracket(self.advance())
        name = self.name()
        if name.text in KEYWORDS:
            raise self.error(f"unexpected keyword {name.text!r}", name)
        while self.at("["):
            self.advance()
            self.expr_until({"]"})
            self.expect("]")
        end = self.toks[self.i - 1].end
        return RefLhs(Expr(self.src[name.pos:end], name.line, name.col))

    def lhs_items_after_bracket(self, t: Tok):
        """Items of ``[a, b, ...]`` once the opening bracket ``t`` is consumed."""
        items = [self.lhs()]
        while self.accept(","):
            items.append(self.lhs())
        self.expect("]")
        return items[0] if len(items) == 1 else ListLhs(tuple(items), t.line, t.col)

    def gate(self) -> GateCall:
        t = self.name()
        args = []
        if self.accept("("):
            while True:
                args.append(self.gate_arg())
                if not self.accept(","):
                    break
            self.expect(")")
        return GateCall(t.text, tuple(args), t.line, t.col)

    def gate_arg(self):
        # a bare name or name(...) directly followed by ',' or ')' may be a nested gate;
        # the elaborator decides, since only it knows the registry
        save = self.i
        if self.tok.kind == "name":
            try:
                g = self.gate()
                if self.at(",") or self.at(")"):
                    e = Expr(self.src[self.toks[save].pos:self.toks[self.i - 1].end],
                             self.toks[save].line, self.toks[save].col)
                    return (g, e)
            except QWhileSyntaxError:
                pass
            self.i = save
        return self.expr_until({",", ")"})

    def measured(self):
        name = self.name()
        target = self.lhs_items_after_bracket(self.expect("["))
        return name.text, target

    def if_(self) -> SIf:
        t = self.expect("if")
        meas, target = self.measured()
        self.expect("{")
        branches = []
        while not self.at("}"):
            if self.accept("else"):
                self.expect("->")
                branches.append((None, self.block()))
                if not self.at("}"):
                    raise self.error("else must be the last branch")
                break
            v = self.expr_until({"->"})
            self.expect("->")
            branches.append((v, self.block()))
        self.expect("}")
        if not branches:
            raise self.error("if needs at least one branch", t)
        return SIf(meas, target, tuple(branches), t.line, t.col)

    def while_(self) -> SWhile:
        t = self.expect("while")
        meas, target = self.measured()
        self.expect("=")
        v = self.expr_until({"{"})
        return SWhile(meas, target, v, self.block(), t.line, t.col)

    def for_(self) -> SFor:
        self.expect("for")
        var = self.name().text
        if self.accept("<"):
            kind = "<"
        elif self.accept("in"):
            kind = "in"
        else:
            raise self.error("expected '<' or 'in' after the loop index")
        e = self.expr_until({"{"})
        return SFor(var, kind, e, self.block())


# -- elaboration -------------------------------------------------------------

def _located(exc: Exception, e) -> QWVError:
    line, col = e.line, e.col
    if isinstance(exc, QWhileSyntaxError):
        return QWhileSyntaxError(str(exc).rsplit(" (line", 1)[0], line, col)
    if isinstance(exc, (UnknownGate, UnknownVariable, DisjointnessError, QWhileTypeError)):
        exc.args = (f"{exc.args[0] if exc.args else ''} (line {line}, col {col})",)
        return exc
    return QWhileTypeError(f"{exc} (line {line}, col {col})")


_CONVERT = (QWVError, ValueError, TypeError, IndexError, KeyError)


class _Elaborator:
    def __init__(self, table: VarTable, registry: GateRegistry, measurements: Mapping[str, Any]):
        self.table = table
        self.registry = registry
        self.measurements = dict(measurements)

    def eval(self, e: Expr, env):
        try:
            return assertion.evaluate(e.text, self.table, env)
        except _CONVERT as exc:
            raise _located(exc, e) from None

    def var(self, lhs, env) -> tuple[Variable, list[Variable]]:
        """The referenced variable plus its top-level parts (operands of a gate)."""
        if isinstance(lhs, RefLhs):
            try:
                v = assertion.Evaluator(self.table, env, lhs.expr.text).resolve(
                    assertion.parse_ref(lhs.expr.text))
            except _CONVERT as exc:
                raise _located(exc, lhs.expr) from None
            return v, [v]
        parts = [self.var(x, env)[0] for x in lhs.items]
        try:
            return dirac.composite(*parts), parts
        except DisjointnessError as exc:
            raise _located(exc, lhs) from None

    def block(self, stmts, env) -> Program:
        out = []
        for s in stmts:
            out.extend(statements(self.stmt(s, env)) if isinstance(s, SFor) else [self.stmt(s, env)])
        return seq(*out)

    def stmt(self, s, env) -> Program:
        if isinstance(s, SSimple):
            return Skip() if s.kind == "skip" else Abort()
        if isinstance(s, SInit):
            return self.init(s, env)
        if isinstance(s, SUnitary):
            return self.unitary(s, env)
        if isinstance(s, SIf):
            return self.if_(s, env)
        if isinstance(s, SWhile):
            return self.while_(s, env)
        if isinstance(s, SFor):
            return self.for_(s, env)
        raise TypeError(s)

    def init(self, s: SInit, env) -> Init:
        target, _ = self.var(s.lhs, env)
        val = self.eval(s.expr, env)
        try:
            if s.kind == "basis":
                value = assertion._as_value(val)
                return Init(target, dirac.projector(target, value), value=value)
            if s.kind == "state":
                vec = _vector(val, target)
                k = dirac.ket(self.table, target.labels, vec)
                return Init(target, dirac.density(k), ket=k)
            m = val if isinstance(val, LabelledOperator) else None
            if m is None:
                m = dirac.operator(self.table, target.labels, np.array(val, dtype=np.complex128))
            return Init(target, m)
        except _CONVERT as exc:
            raise _located(exc, s.expr) from None

    def gate_matrix(self, g: GateCall, dims: tuple[int, ...], env) -> np.ndarray:
        if g.name not in self.registry:
            raise _located(UnknownGate(f"unknown gate {g.name!r}"), g)
        inner = dims[1:] if g.name in ("CU", "Multiplexer") else dims
        args = []
        for a in g.args:
            if isinstance(a, tuple):
                call, text = a
                if call.name in self.registry and call.name not in env:
                    args.append(self.gate_matrix(call, inner, env))
                    continue
                a = text
            v = self.eval(a, env)
            args.append(v.matrix if isinstance(v, LabelledOperator) else v)
        try:
            return self.registry.resolve(g.name, args, dims)
        except UnknownGate as exc:
            raise _located(exc, g) from None
        except _CONVERT as exc:
            raise _located(exc, g) from None

    def unitary(self, s: SUnitary, env) -> Unitary:
        target, parts = self.var(s.lhs, env)
        operand, _ = self.var(s.operand, env)
        where = s.lhs.expr if isinstance(s.lhs, RefLhs) else s.lhs
        if operand.labels != target.labels:
            raise _located(QWhileTypeError("gate operand must be the assigned variable"), where)
        m = self.gate_matrix(s.gate, tuple(p.dim for p in parts), env)
        try:
            return Unitary(target, dirac.operator(self.table, target.labels, m), _gate_text(s.gate))
        except _CONVERT as exc:
            raise _located(exc, s.gate) from None

    def measurement(self, name: str, target: Variable, where) -> Measurement:
        try:
            if name == "meas":
                return basis_measurement(target)
            if name not in self.measurements:
                raise UnknownGate(f"unknown measurement {name!r}")
            spec = self.measurements[name]
            ops = tuple(dirac.operator(self.table, target.labels, _complex_matrix(m)) for m in spec["operators"])
            outcomes = tuple(assertion._as_value(o) for o in spec.get("outcomes", range(len(ops))))
            return Measurement(target, outcomes, ops, name)
        except _CONVERT as exc:
            raise _located(exc, where) from None

    def if_(self, s: SIf, env) -> Cond:
        target, _ = self.var(s.target, env)
        m = self.measurement(s.meas, target, s)
        given: dict = {}
        default = None
        for v, body in s.branches:
            prog = self.block(body, env)
            if v is None:
                default = prog
                continue
            key = self.outcome(v, env)
            if key in given:
                raise _located(QWhileTypeError(f"duplicate branch for outcome {key!r}"), v)
            if key not in m.outcomes:
                raise _located(QWhileTypeError(f"{key!r} is not an outcome of {s.meas}[{target.name}]"), v)
            given[key] = prog
        missing = [o for o in m.outcomes if o not in given]
        if missing and default is None:
            raise _located(QWhileTypeError(f"no branch for outcomes {missing}; add 'else -> {{...}}'"), s)
        return Cond(m, tuple((o, given.get(o, default)) for o in m.outcomes))

    def outcome(self, v: Expr, env):
        try:
            return assertion._as_value(self.eval(v, env))
        except _CONVERT as exc:
            raise _located(exc, v) from None

    def while_(self, s: SWhile, env) -> While:
        target, _ = self.var(s.target, env)
        m = self.measurement(s.meas, target, s)
        try:
            return While(m, self.outcome(s.value, env), self.block(s.body, env))
        except QWhileTypeError as exc:
            raise _located(exc, s) from None

    def for_(self, s: SFor, env) -> Program:
        val = self.eval(s.expr, env)
        try:
            idx = range(assertion.as_int(val)) if s.kind == "<" else [assertion._as_value(x) for x in val]
        except _CONVERT as exc:
            raise _located(QWhileTypeError(f"bad loop range: {exc}"), s.expr) from None
        return seq(*(self.block(s.body, {**env, s.var: j}) for j in idx))


def _vector(val, target: Variable) -> np.ndarray:
    if isinstance(val, LabelledOperator):
        if not val.is_ket or val.out != target.label_set:
            raise ShapeMismatch(f"state must be a ket on {target.name}")
        return dirac.to_matrix(val, target.labels, ())[:, 0]
    return np.array([complex(x) for x in val])


def _complex_matrix(m) -> np.ndarray:
    """Sidecar matrix: rows of ``[re, im]`` pairs, or a flat row-major list of pairs."""
    a = np.asarray(m, dtype=float)
    if a.ndim == 3 and a.shape[-1] == 2:
        return a[..., 0] + 1j * a[..., 1]
    if a.ndim == 2 and a.shape[-1] == 2:
        d = math.isqrt(a.shape[0])
        if d * d != a.shape[0]:
            raise ShapeMismatch("flat gate data must have a square number of entries")
        return (a[:, 0] + 1j * a[:, 1]).reshape(d, d)
    raise ShapeMismatch("gate data must be complex pairs")


def _pairs(m: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(m)]


def _gate_text(g: GateCall) -> str:
    parts = []
    for a in g.args:
        parts.append(a[1].text if isinstance(a, tuple) else a.text)
    return g.name + (f"({', '.join(parts)})" if parts else "")


def load_sidecar(data: str | Path | Mapping | None) -> tuple[dict, dict]:
    """Read ``{"gates": {...}, "measurements": {...}}`` from a path, JSON text or mapping."""
    if data is None:
        return {}, {}
    if isinstance(data, Path) or (isinstance(data, str) and not data.lstrip().startswith("{")):
        data = json.loads(Path(data).read_text())
    elif isinstance(data, str):
        data = json.loads(data)
    gates = {k: _complex_matrix(v) for k, v in data.get("gates", {}).items()}
    return gates, dict(data.get("measurements", {}))


def parse(source: str, gates: GateRegistry | Mapping | None = None, measurements: Mapping | None = None,
          table: VarTable | None = None) -> tuple[VarTable, Program]:
    """Parse program text into ``(table, program)``.

    ``gates`` is a registry or a mapping of extra gate names to unitary
    matrices; ``measurements`` maps names to ``{"outcomes", "operators"}``.
    """
    reader = _Reader(source)
    decls, stmts = reader.program()
    table = table if table is not None else VarTable()
    for d in decls:
        if d.name in table:
            raise QWhileTypeError(f"variable {d.name!r} declared twice (line {d.line}, col {d.col})")
        table.declare(d.name, d.qtype)
    if isinstance(gates, GateRegistry):
        registry = gates
    else:
        registry = GateRegistry()
        for name, m in (gates or {}).items():
            m = m if isinstance(m, np.ndarray) else _complex_matrix(m)
            registry.register_matrix(name, m)
    return table, _Elaborator(table, registry, measurements or {}).block(stmts, {})


def parse_type(text: str) -> QType:
    r = _Reader(text)
    t = r.type_()
    if r.tok.kind != "eof":
        raise r.error("trailing text after type")
    return t


# -- pretty printing ---------------------------------------------------------

def _fmt_value(v) -> str:
    if isinstance(v, tuple):
        return "(" + ",".join(_fmt_value(x) for x in v) + ")"
    return str(int(v))


def _inner(ref: str) -> str:
    return ref[1:-1] if ref.startswith("[") else ref


def _fmt_ket(vec) -> str:
    return "[" + ", ".join(assertion.format_number(z) for z in vec) + "]"


class _Printer:
    def __init__(self, table: VarTable, registry: GateRegistry):
        self.table = table
        self.registry = registry
        self.gates: dict[str, np.ndarray] = {}
        self.measurements: dict[str, dict] = {}
        self.lines: list[str] = []

    def fresh(self, prefix: str, taken) -> str:
        k = 0
        while f"{prefix}{k}" in taken or f"{prefix}{k}" in self.registry:
            k += 1
        return f"{prefix}{k}"

    def ref(self, v: Variable) -> tuple[str, list[Variable]]:
        """Text naming ``v`` and its gate operands, checked to resolve back to the same labels."""
        text = v.name
        try:
            back = assertion.Evaluator(self.table, {}).resolve(assertion.parse_ref(text))
            if back.labels == v.labels:
                parts = [back] if not text.startswith("[") else [
                    assertion.Evaluator(self.table, {}).resolve(p) for p in assertion.parse_ref(text).parts]
                return text, parts
        except (QWVError, ValueError, KeyError, IndexError):
            pass
        parts = [self.table.variable(self.table.name(l)) if self.table.name(l) in self.table else None
                 for l in v.labels]
        names = [self.table.name(l) for l in v.labels]
        text = names[0] if len(names) == 1 else "[" + ",".join(names) + "]"
        return text, [p for p in parts if p is not None]

    def gate_name(self, u: Unitary, dims) -> str:
        m = dirac.to_matrix(u.op, u.target.labels)
        if u.gate:
            try:
                r = _Reader(u.gate)
                call = r.gate()
                if r.tok.kind == "eof":
                    got = _Elaborator(self.table, self.registry, {}).gate_matrix(call, tuple(dims), {})
                    if got.shape == m.shape and np.allclose(got, m, atol=1e-12, rtol=0):
                        return u.gate
            except (QWVError, ValueError, TypeError, KeyError, IndexError):
                pass
        for name, g in self.gates.items():
            if g.shape == m.shape and np.array_equal(g, m):
                return name
        name = self.fresh("G", self.gates)
        self.gates[name] = m
        return name

    def meas_name(self, m: Measurement) -> str:
        if m.name == "meas":
            return "meas"
        ops = [_pairs(dirac.to_matrix(o, m.target.labels)) for o in m.operators]
        spec = {"outcomes": [list(o) if isinstance(o, tuple) else o for o in m.outcomes], "operators": ops}
        for name, s in self.measurements.items():
            if s == spec:
                return name
        name = m.name if m.name not in self.measurements else self.fresh("M", self.measurements)
        self.measurements[name] = spec
        return name

    def emit(self, p: Program, depth: int) -> None:
        pad = "  " * depth
        if isinstance(p, Seq):
            self.emit(p.first, depth)
            self.emit(p.second, depth)
        elif isinstance(p, Skip):
            self.lines.append(pad + "skip;")
        elif isinstance(p, Abort):
            self.lines.append(pad + "abort;")
        elif isinstance(p, Init):
            lhs, _ = self.ref(p.target)
            if p.value is not None:
                self.lines.append(f"{pad}{lhs} := |{_fmt_value(p.value)}>;")
            elif p.ket is not None:
                self.lines.append(f"{pad}{lhs} := state({_fmt_ket(dirac.to_matrix(p.ket, p.target.labels, ())[:, 0])});")
            else:
                m = dirac.to_matrix(p.state, p.target.labels)
                rows = "[" + ", ".join(_fmt_ket(r) for r in m) + "]"
                self.lines.append(f"{pad}{lhs} := density({rows});")
        elif isinstance(p, Unitary):
            lhs, parts = self.ref(p.target)
            dims = [x.dim for x in parts] if parts else [p.target.dim]
            self.lines.append(f"{pad}{lhs} := {self.gate_name(p, dims)}[{_inner(lhs)}];")
        elif isinstance(p, Cond):
            lhs, _ = self.ref(p.measurement.target)
            self.lines.append(f"{pad}if {self.meas_name(p.measurement)}[{_inner(lhs)}] {{")
            for o, b in p.branches:
                self.lines.append(f"{pad}  {_fmt_value(o)} -> {{")
                self.emit(b, depth + 2)
                self.lines.append(f"{pad}  }}")
            self.lines.append(pad + "}")
        elif isinstance(p, While):
            lhs, _ = self.ref(p.measurement.target)
            self.lines.append(f"{pad}while {self.meas_name(p.measurement)}[{_inner(lhs)}] = {_fmt_value(p.cont)} {{")
            self.emit(p.body, depth + 1)
            self.lines.append(pad + "}")
        else:
            raise TypeError(p)


def pretty(program: Program, table: VarTable, declarations: bool = True,
           registry: GateRegistry | None = None) -> tuple[str, dict]:
    """Program text plus the sidecar (gates and measurements) needed to parse it back."""
    pr = _Printer(table, registry or GateRegistry())
    if declarations:
        for v in table.variables():
            pr.lines.append(f"var {v.name} : {v.qtype.descr()};")
    pr.emit(program, 0)
    sidecar = {}
    if pr.gates:
        sidecar["gates"] = {k: _pairs(v) for k, v in pr.gates.items()}
    if pr.measurements:
        sidecar["measurements"] = pr.measurements
    return "\n".join(pr.lines) + "\n", sidecar


def parse_with_sidecar(source: str, sidecar: str | Path | Mapping | None = None,
                       table: VarTable | None = None) -> tuple[VarTable, Program]:
    gates, meas = load_sidecar(sidecar)
    return parse(source, gates=gates, measurements=meas, table=table)
