"""Textual assertions in labelled Dirac notation.

Grammar (loosest binding first)::

    expr   := term (('+' | '-') term)*
    term   := tens (('*' | '/') tens)*        '*' composes operators or scales
    tens   := unary ('(x)' unary)*            tensor product
    unary  := '-' unary | power
    power  := atom ('^' unary)?
    atom   := number | name | name '(' args ')' | '(' expr ')' | '(' expr ',' ... ')'
            | '[' expr, ... ']' | atom '[' expr ']'

Built-ins: ``ket(v, k)``, ``bra(v, k)``, ``proj(v, k)``, ``I(v)``, ``vec(v, [..])``,
``op(v, [[..]])``, ``adj(e)``, ``tr(e)``, ``sqrt``, ``exp``, ``sin``, ``cos``,
``abs``, ``conj``, ``asin``, and ``sum(j in a..b, e)`` over ``a <= j < b``.
Constants ``pi``, ``e`` and the imaginary unit ``i`` (also ``im``, which a bound
loop variable named ``i`` cannot shadow). A variable reference ``v`` is ``x``,
``x[k]`` or ``[x, y, ...]``. The three-character token ``(x)`` is the tensor
operator unless it directly follows a name (then it is a call).
"""

from __future__ import annotations

import cmath
import math
import numbers
import re
from dataclasses import dataclass
from typing import Any, Mapping

import numpy as np

from . import dirac
from .dirac import LabelledOperator, VarTable, Variable
from .errors import QWhileSyntaxError, QWVError, ShapeMismatch, UnknownVariable

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.(?!\.)\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<tensor>\(x\))
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<range>\.\.)
  | (?P<op>[-+*/^()\[\],])
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    pos: int


def tokenize(text: str) -> list[Token]:
    out: list[Token] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise _syntax(text, pos, f"unexpected character {text[pos]!r}")
        kind = m.lastgroup
        if kind == "tensor" and out and out[-1].kind == "name":
            # f(x) is a call, not a tensor
            out.append(Token("op", "(", pos))
            out.append(Token("name", "x", pos + 1))
            out.append(Token("op", ")", pos + 2))
        elif kind != "ws":
            out.append(Token(kind, m.group(), pos))
        pos = m.end()
    out.append(Token("end", "", len(text)))
    return out


def _syntax(text: str, pos: int, msg: str) -> QWhileSyntaxError:
    line = text.count("\n", 0, pos) + 1
    col = pos - (text.rfind("\n", 0, pos) + 1) + 1
    return QWhileSyntaxError(msg, line, col)


# -- syntax tree -------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: complex | int | float


@dataclass(frozen=True)
class Name:
    name: str
    pos: int


@dataclass(frozen=True)
class Call:
    fn: str
    args: tuple
    pos: int


@dataclass(frozen=True)
class BinOp:
    op: str
    left: Any
    right: Any
    pos: int


@dataclass(frozen=True)
class Neg:
    arg: Any


@dataclass(frozen=True)
class TupleLit:
    items: tuple


@dataclass(frozen=True)
class ListLit:
    items: tuple


@dataclass(frozen=True)
class Index:
    base: Any
    index: Any
    pos: int


@dataclass(frozen=True)
class Sum:
    var: str
    lo: Any
    hi: Any
    body: Any


@dataclass(frozen=True)
class Ref:
    """Variable reference: a name with optional component indices, or a list of refs."""
    name: str | None
    indices: tuple
    parts: tuple
    pos: int


REF_FUNCS = {"ket", "bra", "proj", "I", "vec", "op"}


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = tokenize(text)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def advance(self) -> Token:
        t = self.toks[self.i]
        self.i += 1
        return t

    def accept(self, text: str) -> bool:
        if self.tok.text == text and self.tok.kind in ("op", "range", "tensor", "name"):
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> Token:
        if self.tok.text != text:
            raise _syntax(self.text, self.tok.pos, f"expected {text!r}, found {self.tok.text or 'end of input'!r}")
        return self.advance()

    def parse(self):
        node = self.expr()
        if self.tok.kind != "end":
            raise _syntax(self.text, self.tok.pos, f"unexpected {self.tok.text!r}")
        return node

    def expr(self):
        node = self.term()
        while self.tok.text in ("+", "-") and self.tok.kind == "op":
            t = self.advance()
            node = BinOp(t.text, node, self.term(), t.pos)
        return node

    def term(self):
        node = self.tens()
        while self.tok.text in ("*", "/") and self.tok.kind == "op":
            t = self.advance()
            node = BinOp(t.text, node, self.tens(), t.pos)
        return node

    def tens(self):
        node = self.unary()
        while self.tok.kind == "tensor":
            t = self.advance()
            node = BinOp("(x)", node, self.unary(), t.pos)
        return node

    def unary(self):
        if self.tok.kind == "op" and self.tok.text == "-":
            self.advance()
            return Neg(self.unary())
        if self.tok.kind == "op" and self.tok.text == "+":
            self.advance()
            return self.unary()
        return self.power()

    def power(self):
        base = self.postfix()
        if self.tok.kind == "op" and self.tok.text == "^":
            t = self.advance()
            return BinOp("^", base, self.unary(), t.pos)
        return base

    def postfix(self):
        node = self.atom()
        while self.tok.kind == "op" and self.tok.text == "[":
            t = self.advance()
            idx = self.expr()
            self.expect("]")
            node = Index(node, idx, t.pos)
        return node

    def atom(self):
        t = self.tok
        if t.kind == "num":
            self.advance()
            v = float(t.text)
            return Num(int(t.text) if t.text.isdigit() else v)
        if t.kind == "name":
            self.advance()
            if self.tok.kind == "op" and self.tok.text == "(":
                return self.call(t)
            return Name(t.text, t.pos)
        if t.kind == "op" and t.text == "(":
            self.advance()
            first = self.expr()
            if self.accept(","):
                items = [first]
                if not (self.tok.kind == "op" and self.tok.text == ")"):
                    items.append(self.expr())
                    while self.accept(","):
                        items.append(self.expr())
                self.expect(")")
                return TupleLit(tuple(items))
            self.expect(")")
            return first
        if t.kind == "op" and t.text == "[":
            self.advance()
            items = []
            if not (self.tok.kind == "op" and self.tok.text == "]"):
                items.append(self.expr())
                while self.accept(","):
                    items.append(self.expr())
            self.expect("]")
            return ListLit(tuple(items))
        raise _syntax(self.text, t.pos, f"unexpected {t.text or 'end of input'!r}")

    def call(self, name_tok: Token):
        fn = name_tok.text
        self.expect("(")
        if fn == "sum":
            var = self.advance()
            if var.kind != "name":
                raise _syntax(self.text, var.pos, "sum needs a bound variable name")
            self.expect("in")
            lo = self.expr()
            if self.tok.kind != "range":
                raise _syntax(self.text, self.tok.pos, "expected '..' in sum range")
            self.advance()
            hi = self.expr()
            self.expect(",")
            body = self.expr()
            self.expect(")")
            return Sum(var.text, lo, hi, body)
        args = []
        if fn in REF_FUNCS:
            args.append(self.ref())
            while self.accept(","):
                args.append(self.ref() if fn == "op" and len(args) == 1 and self._looks_like_ref() else self.expr())
        elif not (self.tok.kind == "op" and self.tok.text == ")"):
            args.append(self.expr())
            while self.accept(","):
                args.append(self.expr())
        self.expect(")")
        return Call(fn, tuple(args), name_tok.pos)

    def _looks_like_ref(self) -> bool:
        # op(v, w, [[..]]): the second argument is a ref when it is a bare name or [name, ...]
        t = self.tok
        if t.kind == "name":
            return True
        if t.kind == "op" and t.text == "[":
            nxt = self.toks[self.i + 1]
            return nxt.kind == "name"
        return False

    def ref(self) -> Ref:
        t = self.tok
        if t.kind == "op" and t.text == "[":
            self.advance()
            parts = [self.ref()]
            while self.accept(","):
                parts.append(self.ref())
            self.expect("]")
            return Ref(None, (), tuple(parts), t.pos)
        if t.kind != "name":
            raise _syntax(self.text, t.pos, "expected a variable reference")
        self.advance()
        idx = []
        while self.tok.kind == "op" and self.tok.text == "[":
            self.advance()
            idx.append(self.expr())
            self.expect("]")
        return Ref(t.text, tuple(idx), (), t.pos)


def parse_expression(text: str):
    return _Parser(text).parse()


def parse_ref(text: str) -> Ref:
    p = _Parser(text)
    r = p.ref()
    if p.tok.kind != "end":
        raise _syntax(text, p.tok.pos, f"unexpected {p.tok.text!r} after reference")
    return r


# -- evaluation --------------------------------------------------------------

_CONSTANTS = {"pi": math.pi, "e": math.e, "i": 1j, "im": 1j}
_UNARY = {
    "sqrt": cmath.sqrt, "exp": cmath.exp, "sin": cmath.sin, "cos": cmath.cos,
    "asin": cmath.asin, "abs": abs, "conj": lambda z: complex(z).conjugate(),
}


class Evaluator:
    def __init__(self, table: VarTable | None, env: Mapping[str, Any] | None = None, text: str = ""):
        self.table = table
        self.env = dict(env or {})
        self.text = text

    def error(self, pos: int, msg: str) -> QWVError:
        return _syntax(self.text, pos, msg) if self.text else QWhileSyntaxError(msg)

    def eval(self, node):
        meth = getattr(self, "_" + type(node).__name__)
        return meth(node)

    def _Num(self, n: Num):
        return n.value

    def _Name(self, n: Name):
        if n.name in self.env:
            return self.env[n.name]
        if n.name in _CONSTANTS:
            return _CONSTANTS[n.name]
        raise UnknownVariable(f"unknown name {n.name!r}")

    def _Neg(self, n: Neg):
        v = self.eval(n.arg)
        if isinstance(v, LabelledOperator):
            return dirac.scale(-1, v)
        return -v

    def _TupleLit(self, n: TupleLit):
        return tuple(self.eval(x) for x in n.items)

    def _ListLit(self, n: ListLit):
        return [self.eval(x) for x in n.items]

    def _Index(self, n: Index):
        base = self.eval(n.base)
        if not isinstance(base, (tuple, list)):
            raise self.error(n.pos, "only tuples and lists can be indexed")
        return base[as_int(self.eval(n.index))]

    def _Sum(self, n: Sum):
        lo, hi = as_int(self.eval(n.lo)), as_int(self.eval(n.hi))
        total = 0
        saved = self.env.get(n.var, _MISSING)
        try:
            for j in range(lo, hi):
                self.env[n.var] = j
                total = _binop("+", total, self.eval(n.body)) if j > lo else self.eval(n.body)
        finally:
            if saved is _MISSING:
                self.env.pop(n.var, None)
            else:
                self.env[n.var] = saved
        return total

    def _BinOp(self, n: BinOp):
        a, b = self.eval(n.left), self.eval(n.right)
        try:
            return _binop(n.op, a, b, self.table)
        except (TypeError, ZeroDivisionError) as exc:
            raise self.error(n.pos, str(exc)) from exc

    def _Ref(self, r: Ref) -> Variable:
        return self.resolve(r)

    def resolve(self, r: Ref) -> Variable:
        if self.table is None:
            raise UnknownVariable("no variable table available")
        if r.name is None:
            return dirac.composite(*(self.resolve(p) for p in r.parts))
        var = self.table.variable(r.name)
        for ix in r.indices:
            k = as_int(self.eval(ix))
            try:
                var = var[k]
            except IndexError as exc:
                raise UnknownVariable(f"{var.name}[{k}]: {exc}") from None
        return var

    def _Call(self, c: Call):
        fn = c.fn
        if fn in REF_FUNCS:
            return self._ref_call(c)
        args = [self.eval(a) for a in c.args]
        if fn in _UNARY:
            if len(args) != 1 or isinstance(args[0], LabelledOperator):
                raise self.error(c.pos, f"{fn} takes one scalar")
            return _simplify(_UNARY[fn](args[0]))
        if fn == "adj":
            (a,) = args
            if isinstance(a, LabelledOperator):
                return a.adjoint()
            return complex(a).conjugate()
        if fn == "tr":
            (a,) = args
            return a.trace() if isinstance(a, LabelledOperator) else a
        raise self.error(c.pos, f"unknown function {fn!r}")

    def _ref_call(self, c: Call):
        var = self.resolve(c.args[0])
        rest = c.args[1:]
        fn = c.fn
        if fn == "I":
            if rest:
                raise self.error(c.pos, "I takes one reference")
            return dirac.identity(self.table, var.labels)
        if fn in ("ket", "bra", "proj"):
            if len(rest) != 1:
                raise self.error(c.pos, f"{fn} takes a reference and a value")
            value = _as_value(self.eval(rest[0]))
            k = dirac.basis_ket(var, value)
            return {"ket": k, "bra": k.adjoint(), "proj": dirac.density(k)}[fn]
        if fn == "vec":
            if len(rest) != 1:
                raise self.error(c.pos, "vec takes a reference and a list")
            amps = np.array([complex(v) for v in self.eval(rest[0])])
            return dirac.ket(self.table, var.labels, amps)
        # op
        if len(rest) == 1:
            m = np.array(self.eval(rest[0]), dtype=np.complex128)
            return dirac.operator(self.table, var.labels, m)
        if len(rest) == 2:
            inv = self.resolve(rest[0])
            m = np.array(self.eval(rest[1]), dtype=np.complex128)
            return dirac.LabelledOperator.from_matrix(self.table, var.labels, inv.labels, m)
        raise self.error(c.pos, "op takes a reference and a matrix")


_MISSING = object()


def _simplify(z):
    if isinstance(z, complex) and z.imag == 0:
        return z.real
    return z


def _binop(op: str, a, b, table: VarTable | None = None):
    a_op, b_op = isinstance(a, LabelledOperator), isinstance(b, LabelledOperator)
    if op == "(x)":
        if not a_op and not b_op:
            return a * b
        tbl = a.table if a_op else b.table
        a = a if a_op else dirac.scalar(tbl, a)
        b = b if b_op else dirac.scalar(tbl, b)
        return dirac.tensor(a, b)
    if op == "^":
        if a_op or b_op:
            raise TypeError("'^' needs scalar operands")
        return _simplify(a ** b) if not (isinstance(a, int) and isinstance(b, int) and b >= 0) else a ** b
    if op == "*":
        if a_op and b_op:
            return dirac.compose(a, b)
        if a_op:
            return dirac.scale(b, a)
        if b_op:
            return dirac.scale(a, b)
        return a * b
    if op == "/":
        if b_op:
            if not b.is_scalar:
                raise TypeError("cannot divide by a non-scalar operator")
            b = b.scalar()
        if a_op:
            return dirac.scale(1 / b, a)
        if isinstance(a, int) and isinstance(b, int) and b != 0 and a % b == 0:
            return a // b
        return a / b
    if op in ("+", "-"):
        if a_op or b_op:
            tbl = a.table if a_op else b.table
            a = a if a_op else dirac.scalar(tbl, a)
            b = b if b_op else dirac.scalar(tbl, b)
            return dirac.add(a, b) if op == "+" else dirac.add(a, dirac.scale(-1, b))
        return a + b if op == "+" else a - b
    raise TypeError(f"unknown operator {op}")


def as_int(v) -> int:
    if isinstance(v, bool):
        return int(v)
    if isinstance(v, numbers.Integral):
        return int(v)
    if isinstance(v, numbers.Number):
        z = complex(v)
        r = round(z.real)
        if abs(z.imag) < 1e-9 and abs(z.real - r) < 1e-9:
            return int(r)
    raise TypeError(f"expected an integer, got {v!r}")


def _as_value(v):
    if isinstance(v, (tuple, list)):
        return tuple(_as_value(x) for x in v)
    return as_int(v)


def evaluate(text: str, table: VarTable | None = None, env: Mapping[str, Any] | None = None):
    """Evaluate an expression to a number, tuple, list or labelled operator."""
    return Evaluator(table, env, text).eval(parse_expression(text))


def parse_assertion(text: str, table: VarTable, env: Mapping[str, Any] | None = None) -> LabelledOperator:
    """Evaluate ``text`` to a labelled operator; plain numbers become scalars."""
    v = evaluate(text, table, env)
    if isinstance(v, LabelledOperator):
        return v
    if isinstance(v, numbers.Number):
        return dirac.scalar(table, v)
    raise ShapeMismatch(f"assertion evaluates to {type(v).__name__}, not an operator")


# -- formatting --------------------------------------------------------------

def format_number(z: complex) -> str:
    z = complex(z)
    re_, im_ = repr(float(z.real)), repr(float(abs(z.imag)))
    if z.imag == 0:
        return f"({re_})"
    sign = "-" if z.imag < 0 else "+"
    return f"({re_}{sign}{im_}*im)"


def format_ref(table: VarTable, labels) -> str:
    names = [table.name(l) for l in labels]
    return names[0] if len(names) == 1 else "[" + ", ".join(names) + "]"


def format_operator(a: LabelledOperator) -> str:
    """Exact textual form of ``a`` that :func:`parse_assertion` reads back."""
    if a.is_scalar:
        return format_number(a.scalar())
    rows = lambda m: "[" + ", ".join("[" + ", ".join(format_number(z) for z in row) + "]" for row in m) + "]"
    if a.is_ket:
        return f"vec({format_ref(a.table, a.out)}, [" + ", ".join(format_number(z) for z in a.matrix[:, 0]) + "])"
    if not a.out:
        return f"adj(vec({format_ref(a.table, a.inp)}, [" + ", ".join(
            format_number(z) for z in a.matrix[0, :].conj()) + "]))"
    if a.is_square:
        return f"op({format_ref(a.table, a.out)}, {rows(a.matrix)})"
    return f"op({format_ref(a.table, a.out)}, {format_ref(a.table, a.inp)}, {rows(a.matrix)})"
