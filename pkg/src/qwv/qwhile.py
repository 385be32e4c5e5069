"""The qwhile language: abstract syntax, typing checks and program utilities.

Programs are immutable trees. Operators inside them are labelled operators
over a shared :class:`~qwv.dirac.VarTable`. The textual front end lives in
:mod:`qwv.parser`; :func:`parse` and :func:`pretty` are re-exported here.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import dirac, linalg
from .dirac import LabelledOperator, Variable, VarTable
from .errors import DisjointnessError, NotAWhile, QWhileTypeError


@dataclass(frozen=True, eq=False)
class Measurement:
    """Measurement ``{M_m}`` on the labels of ``target``.

    ``name`` is ``"meas"`` for the computational basis measurement, otherwise
    the name of a user-declared measurement (used by the pretty-printer).
    """
    target: Variable
    outcomes: tuple
    operators: tuple[LabelledOperator, ...]
    name: str = "meas"

    def __post_init__(self):
        if len(self.outcomes) != len(self.operators) or not self.outcomes:
            raise QWhileTypeError("measurement needs one operator per outcome")
        if len(set(self.outcomes)) != len(self.outcomes):
            raise QWhileTypeError("measurement outcomes must be distinct")
        s = self.target.label_set
        for m in self.operators:
            if m.out != s or m.inp != s:
                raise QWhileTypeError(f"measurement operator is not square on the labels of {self.target.name}")
        total = sum((m.adjoint() @ m).matrix for m in self.operators)
        if not linalg.approx_equal(total, np.eye(total.shape[0]), 1e-9):
            raise QWhileTypeError(f"measurement on {self.target.name} is not complete (Σ M†M ≠ I)")

    @property
    def labels(self) -> tuple[int, ...]:
        return self.target.label_set

    def operator(self, outcome) -> LabelledOperator:
        return self.operators[self.outcomes.index(outcome)]


def basis_measurement(target: Variable) -> Measurement:
    """Projective measurement ``{|t⟩⟨t|}`` over every value ``t`` of the variable's type."""
    values = tuple(target.qtype.values())
    return Measurement(target, values, tuple(dirac.projector(target, v) for v in values), "meas")


class Program:
    """Base class of the abstract syntax tree."""

    def footprint(self) -> tuple[int, ...]:
        return footprint(self)


@dataclass(frozen=True, eq=False)
class Skip(Program):
    pass


@dataclass(frozen=True, eq=False)
class Abort(Program):
    pass


@dataclass(frozen=True, eq=False)
class Seq(Program):
    first: Program
    second: Program


@dataclass(frozen=True, eq=False)
class Init(Program):
    """Set ``target`` to the density operator ``state``.

    ``value`` records a basis literal and ``ket`` a pure state, for printing.
    """
    target: Variable
    state: LabelledOperator
    value: object = None
    ket: LabelledOperator | None = field(default=None, repr=False)

    def __post_init__(self):
        s = self.target.label_set
        if self.state.out != s or self.state.inp != s:
            raise QWhileTypeError(f"initial state is not an operator on {self.target.name}")
        if not linalg.is_density(self.state.matrix, 1e-9):
            raise QWhileTypeError(f"initial state for {self.target.name} is not a density operator")


@dataclass(frozen=True, eq=False)
class Unitary(Program):
    target: Variable
    op: LabelledOperator
    gate: str | None = None

    def __post_init__(self):
        s = self.target.label_set
        if self.op.out != s or self.op.inp != s:
            raise QWhileTypeError(f"gate does not act on exactly {self.target.name}")
        if not linalg.is_unitary(self.op.matrix, 1e-9):
            raise QWhileTypeError(f"gate applied to {self.target.name} is not unitary")


@dataclass(frozen=True, eq=False)
class Cond(Program):
    measurement: Measurement
    branches: tuple  # ((outcome, Program), ...) in measurement outcome order

    def __post_init__(self):
        got = [o for o, _ in self.branches]
        if got != list(self.measurement.outcomes):
            raise QWhileTypeError("if-branches must cover every measurement outcome exactly once")

    def branch(self, outcome) -> Program:
        for o, p in self.branches:
            if o == outcome:
                return p
        raise KeyError(outcome)


@dataclass(frozen=True, eq=False)
class While(Program):
    """Loop while the two-outcome ``measurement`` yields ``cont``."""
    measurement: Measurement
    cont: object
    body: Program

    def __post_init__(self):
        if len(self.measurement.outcomes) != 2:
            raise QWhileTypeError("while guard must be a two-outcome measurement")
        if self.cont not in self.measurement.outcomes:
            raise QWhileTypeError(f"loop value {self.cont!r} is not a measurement outcome")

    @property
    def stop(self):
        a, b = self.measurement.outcomes
        return b if self.cont == a else a


# -- constructors ------------------------------------------------------------

def seq(*progs: Program) -> Program:
    """Right-nested sequence; the empty sequence is ``skip``."""
    progs = [p for p in progs]
    if not progs:
        return Skip()
    out = progs[-1]
    for p in reversed(progs[:-1]):
        out = Seq(p, out)
    return out


def desugar_for(indices: Iterable, body: Callable[[object], Program]) -> Program:
    """``for i in J do body(i)`` as ``body(j0); body(j1); ...``."""
    return seq(*(body(j) for j in indices))


def init(target: Variable, value=0) -> Init:
    k = dirac.basis_ket(target, value)
    return Init(target, dirac.density(k), value=value)


def init_state(target: Variable, vector) -> Init:
    k = dirac.ket(target.table, target.labels, vector)
    return Init(target, dirac.density(k), ket=k)


def apply(target: Variable, matrix, gate: str | None = None) -> Unitary:
    """``target := U[target]`` for a matrix written in the target's component order."""
    return Unitary(target, dirac.operator(target.table, target.labels, matrix), gate)


def cond(measurement: Measurement, branches: dict | Sequence, default: Program | None = None) -> Cond:
    table = dict(branches) if not isinstance(branches, dict) else branches
    out = []
    for o in measurement.outcomes:
        if o in table:
            out.append((o, table[o]))
        elif default is not None:
            out.append((o, default))
        else:
            raise QWhileTypeError(f"no branch for outcome {o!r}")
    extra = set(table) - set(measurement.outcomes)
    if extra:
        raise QWhileTypeError(f"branches for impossible outcomes {sorted(extra)}")
    return Cond(measurement, tuple(out))


def while_meas(target: Variable, cont, body: Program) -> While:
    return While(basis_measurement(target), cont, body)


def check_disjoint(*vars_: Variable) -> None:
    seen: set[int] = set()
    for v in vars_:
        if seen & set(v.labels) or len(set(v.labels)) != len(v.labels):
            raise DisjointnessError(f"variable {v.name} overlaps another operand")
        seen |= set(v.labels)


# -- queries -----------------------------------------------------------------

def footprint(p: Program) -> tuple[int, ...]:
    """Union of labels touched by initialisations, gates and measurements."""
    out: set[int] = set()

    def walk(q):
        if isinstance(q, Seq):
            walk(q.first)
            walk(q.second)
        elif isinstance(q, (Init, Unitary)):
            out.update(q.target.labels)
        elif isinstance(q, Cond):
            out.update(q.measurement.labels)
            for _, b in q.branches:
                walk(b)
        elif isinstance(q, While):
            out.update(q.measurement.labels)
            walk(q.body)
    walk(p)
    return tuple(sorted(out))


def contains(p: Program, kinds) -> bool:
    if isinstance(p, kinds):
        return True
    if isinstance(p, Seq):
        return contains(p.first, kinds) or contains(p.second, kinds)
    if isinstance(p, Cond):
        return any(contains(b, kinds) for _, b in p.branches)
    if isinstance(p, While):
        return contains(p.body, kinds)
    return False


def has_while(p: Program) -> bool:
    return contains(p, While)


def statements(p: Program) -> list[Program]:
    """Top-level statements of a sequence, flattened left to right."""
    if isinstance(p, Seq):
        return statements(p.first) + statements(p.second)
    return [p]


def slice_program(p: Program, start: int, stop: int) -> Program:
    return seq(*statements(p)[start:stop])


def approximate_while(loop: Program, k: int) -> Program:
    """k-th syntactic approximation: ``abort`` at depth 0, one more unrolling per step."""
    if not isinstance(loop, While):
        raise NotAWhile("approximate_while needs a while loop")
    if k < 0:
        raise ValueError("k must be non-negative")
    approx: Program = Abort()
    for _ in range(k):
        approx = Cond(loop.measurement, tuple(
            (o, Seq(loop.body, approx) if o == loop.cont else Skip()) for o in loop.measurement.outcomes))
    return approx


def same_program(a: Program, b: Program, tol: float = 1e-12) -> bool:
    """Structural equality with numeric tolerance on embedded operators.

    Sequencing is compared up to associativity.
    """
    if isinstance(a, Seq) or isinstance(b, Seq):
        xs, ys = statements(a), statements(b)
        return len(xs) == len(ys) and all(same_program(x, y, tol) for x, y in zip(xs, ys))
    if type(a) is not type(b):
        return False
    if isinstance(a, (Skip, Abort)):
        return True
    if isinstance(a, Init):
        return a.target.labels == b.target.labels and _close(a.state, b.state, tol)
    if isinstance(a, Unitary):
        return a.target.labels == b.target.labels and _close(a.op, b.op, tol)
    if isinstance(a, Cond):
        return (_same_measurement(a.measurement, b.measurement, tol)
                and all(same_program(x, y, tol) for (_, x), (_, y) in zip(a.branches, b.branches)))
    if isinstance(a, While):
        return (_same_measurement(a.measurement, b.measurement, tol) and a.cont == b.cont
                and same_program(a.body, b.body, tol))
    return False


def _same_measurement(m: Measurement, n: Measurement, tol: float) -> bool:
    return (m.target.labels == n.target.labels and m.outcomes == n.outcomes
            and all(_close(x, y, tol) for x, y in zip(m.operators, n.operators)))


def _close(a: LabelledOperator, b: LabelledOperator, tol: float) -> bool:
    # label ids rather than table identity, so re-parsed programs compare equal
    if a.out != b.out or a.inp != b.inp:
        return False
    return float(np.linalg.norm(a.matrix - b.matrix)) <= tol * max(1.0, a.norm())


def parse(source: str, gates=None, measurements=None, table: VarTable | None = None):
    from .parser import parse as _parse
    return _parse(source, gates=gates, measurements=measurements, table=table)


def pretty(program: Program, table: VarTable, declarations: bool = True):
    from .parser import pretty as _pretty
    return _pretty(program, table, declarations=declarations)
