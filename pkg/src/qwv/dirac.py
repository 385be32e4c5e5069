"""Labelled Dirac notation.

Every operator carries the set of subsystem labels it maps from and the set it
maps to. Internally an operator is stored in one normal form: label sets sorted
by label id, matrix rows/columns indexed mixed-radix with the first label most
significant. Constructors that take another ordering permute immediately, so
equality of operators is plain matrix equality.
"""

from __future__ import annotations

import math
import numbers
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import config, linalg
from .errors import LabelClash, LabelMismatch, NotSquare, NotSuperset, ShapeMismatch, UnknownLabel, UnknownVariable
from .qtypes import ProductOf, QType

LabelSet = tuple  # strictly ascending label ids


@dataclass(frozen=True)
class Label:
    id: int
    name: str
    dim: int
    descr: str = ""


@dataclass(frozen=True, eq=False)
class Variable:
    """A typed quantum variable: one label per atomic component, in component order."""
    name: str
    qtype: QType
    labels: tuple[int, ...]
    table: "VarTable" = field(repr=False)

    @property
    def dim(self) -> int:
        return self.qtype.dim

    @property
    def label_set(self) -> LabelSet:
        return tuple(sorted(self.labels))

    def __getitem__(self, i: int) -> "Variable":
        comps = self.qtype.components()
        if not comps:
            raise IndexError(f"{self.name} has no components")
        if not -len(comps) <= i < len(comps):
            raise IndexError(f"component {i} out of range for {self.name}")
        i %= len(comps)
        start = sum(len(c.atoms()) for c in comps[:i])
        width = len(comps[i].atoms())
        return Variable(f"{self.name}[{i}]", comps[i], self.labels[start:start + width], self.table)

    def __len__(self) -> int:
        return len(self.qtype.components())

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    def __eq__(self, other):
        return isinstance(other, Variable) and self.labels == other.labels and self.qtype == other.qtype

    def __hash__(self):
        return hash((self.labels, self.qtype))


class VarTable:
    """Global label registry plus declared variables.

    Declaring is the only mutation; operators refer to the table for label
    dimensions and names.
    """

    def __init__(self):
        self._labels: list[Label] = []
        self._vars: dict[str, Variable] = {}

    def add_label(self, name: str, dim: int, descr: str = "") -> int:
        if dim < 1:
            raise ShapeMismatch(f"label {name!r} needs dimension >= 1")
        lid = len(self._labels)
        self._labels.append(Label(lid, name, int(dim), descr))
        return lid

    def declare(self, name: str, qtype: QType) -> Variable:
        if name in self._vars:
            raise ValueError(f"variable {name!r} already declared")
        labels = []
        for path, atom in _atom_paths(qtype):
            labels.append(self.add_label(name + path, atom.dim, atom.descr()))
        var = Variable(name, qtype, tuple(labels), self)
        self._vars[name] = var
        return var

    def variable(self, name: str) -> Variable:
        try:
            return self._vars[name]
        except KeyError:
            raise UnknownVariable(name) from None

    def variables(self) -> list[Variable]:
        return list(self._vars.values())

    def __contains__(self, name: str) -> bool:
        return name in self._vars

    def label(self, lid: int) -> Label:
        if not isinstance(lid, (int, np.integer)) or not 0 <= lid < len(self._labels):
            raise UnknownLabel(lid)
        return self._labels[lid]

    def labels(self) -> list[Label]:
        return list(self._labels)

    def dim(self, lid: int) -> int:
        return self.label(lid).dim

    def dims(self, labels: Iterable[int]) -> list[int]:
        return [self.dim(l) for l in labels]

    def size(self, labels: Iterable[int]) -> int:
        return math.prod(self.dims(labels))

    def name(self, lid: int) -> str:
        return self.label(lid).name

    def all_labels(self) -> LabelSet:
        return tuple(range(len(self._labels)))


def _atom_paths(qtype: QType, prefix: str = ""):
    comps = qtype.components()
    if not comps:
        yield prefix, qtype
        return
    for i, c in enumerate(comps):
        yield from _atom_paths(c, f"{prefix}[{i}]")


def composite(*vars_: Variable) -> Variable:
    """The pair/tuple variable ``[x, y, ...]``; components must be disjoint."""
    if len(vars_) == 1:
        return vars_[0]
    seen: set[int] = set()
    for v in vars_:
        if seen & set(v.labels):
            from .errors import DisjointnessError
            raise DisjointnessError(f"variables in [{', '.join(x.name for x in vars_)}] overlap")
        seen |= set(v.labels)
    table = vars_[0].table
    labels = tuple(l for v in vars_ for l in v.labels)
    name = "[" + ",".join(v.name for v in vars_) + "]"
    return Variable(name, ProductOf(tuple(v.qtype for v in vars_)), labels, table)


def labels_of(x) -> tuple[int, ...]:
    """Label sequence (not sorted) named by a variable, label id or a sequence of those."""
    if isinstance(x, Variable):
        return x.labels
    if isinstance(x, (int, np.integer)):
        return (int(x),)
    out: list[int] = []
    for item in x:
        out.extend(labels_of(item))
    return tuple(out)


# -- operators ---------------------------------------------------------------

class LabelledOperator:
    """Matrix from ``ℋ_in`` to ``ℋ_out`` in canonical label order."""

    __slots__ = ("table", "out", "inp", "matrix")

    def __init__(self, table: VarTable, out: Sequence[int], inp: Sequence[int], matrix):
        out, inp = tuple(int(l) for l in out), tuple(int(l) for l in inp)
        for ls in (out, inp):
            if any(a >= b for a, b in zip(ls, ls[1:])):
                raise ValueError("label sets must be strictly ascending; use from_matrix to permute")
            for l in ls:
                table.label(l)
        m = linalg.as_matrix(matrix)
        if m.shape != (table.size(out), table.size(inp)):
            raise ShapeMismatch(f"matrix {m.shape} does not fit labels out={out} in={inp}")
        m = m.copy()
        m.flags.writeable = False
        object.__setattr__(self, "table", table)
        object.__setattr__(self, "out", out)
        object.__setattr__(self, "inp", inp)
        object.__setattr__(self, "matrix", m)

    def __setattr__(self, name, value):
        raise AttributeError("LabelledOperator is immutable")

    @classmethod
    def from_matrix(cls, table: VarTable, out: Sequence[int], inp: Sequence[int], matrix) -> "LabelledOperator":
        """Build from a matrix whose indices follow the given (possibly unsorted) label order."""
        out, inp = labels_of(out), labels_of(inp)
        for ls in (out, inp):
            if len(set(ls)) != len(ls):
                raise LabelClash(f"repeated label in {ls}")
        m = linalg.as_matrix(matrix)
        if m.shape != (table.size(out), table.size(inp)):
            raise ShapeMismatch(f"matrix {m.shape} does not fit labels out={out} in={inp}")
        t = m.reshape(table.dims(out) + table.dims(inp))
        perm = [int(i) for i in np.argsort(out)] + [len(out) + int(i) for i in np.argsort(inp)]
        so, si = tuple(sorted(out)), tuple(sorted(inp))
        return cls(table, so, si, t.transpose(perm).reshape(table.size(so), table.size(si)))

    # shape helpers
    @property
    def labels(self) -> LabelSet:
        """All labels touched (union of input and output)."""
        return tuple(sorted(set(self.out) | set(self.inp)))

    @property
    def is_square(self) -> bool:
        return self.out == self.inp

    @property
    def is_scalar(self) -> bool:
        return not self.out and not self.inp

    @property
    def is_ket(self) -> bool:
        return not self.inp

    def tensor_view(self) -> np.ndarray:
        return self.matrix.reshape(self.table.dims(self.out) + self.table.dims(self.inp))

    def scalar(self) -> complex:
        if not self.is_scalar:
            raise ShapeMismatch("operator is not a scalar")
        return complex(self.matrix[0, 0])

    def vector(self) -> np.ndarray:
        if not self.is_ket:
            raise ShapeMismatch("operator is not a ket")
        return self.matrix[:, 0].copy()

    def norm(self) -> float:
        return linalg.frobenius(self.matrix)

    def trace(self) -> complex:
        if not self.is_square:
            raise NotSquare("trace needs a square operator")
        return complex(np.trace(self.matrix))

    def adjoint(self) -> "LabelledOperator":
        return LabelledOperator(self.table, self.inp, self.out, self.matrix.conj().T)

    @property
    def dag(self) -> "LabelledOperator":
        return self.adjoint()

    # arithmetic
    def __add__(self, other):
        return add(self, _coerce(self, other))

    def __radd__(self, other):
        return add(_coerce(self, other), self)

    def __sub__(self, other):
        return add(self, scale(-1, _coerce(self, other)))

    def __rsub__(self, other):
        return add(_coerce(self, other), scale(-1, self))

    def __neg__(self):
        return scale(-1, self)

    def __mul__(self, c):
        if isinstance(c, LabelledOperator):
            return compose(self, c)
        if isinstance(c, numbers.Number):
            return scale(c, self)
        return NotImplemented

    def __rmul__(self, c):
        if isinstance(c, numbers.Number):
            return scale(c, self)
        return NotImplemented

    def __truediv__(self, c):
        if isinstance(c, numbers.Number):
            return scale(1 / c, self)
        if isinstance(c, LabelledOperator) and c.is_scalar:
            return scale(1 / c.scalar(), self)
        return NotImplemented

    def __matmul__(self, other):
        return compose(self, other)

    def __repr__(self):
        names = lambda ls: "{" + ",".join(self.table.name(l) for l in ls) + "}"
        return f"LabelledOperator(out={names(self.out)}, in={names(self.inp)}, shape={self.matrix.shape})"


def _coerce(like: LabelledOperator, x) -> LabelledOperator:
    if isinstance(x, LabelledOperator):
        return x
    if isinstance(x, numbers.Number):
        return scalar(like.table, x)
    raise TypeError(f"cannot combine LabelledOperator with {type(x).__name__}")


def _same_table(a: LabelledOperator, b: LabelledOperator) -> VarTable:
    if a.table is not b.table:
        raise LabelMismatch("operators belong to different variable tables")
    return a.table


# -- constructors ------------------------------------------------------------

def scalar(table: VarTable, c: complex) -> LabelledOperator:
    return LabelledOperator(table, (), (), [[complex(c)]])


def ket(table: VarTable, labels, vector) -> LabelledOperator:
    """``|v⟩`` on ``labels``; the vector is indexed in the given label order."""
    labels = labels_of(labels)
    v = np.asarray(vector, dtype=np.complex128).reshape(-1, 1)
    if v.shape[0] != table.size(labels):
        raise ShapeMismatch(f"vector of length {v.shape[0]} does not fit labels of size {table.size(labels)}")
    return LabelledOperator.from_matrix(table, labels, (), v)


def bra(table: VarTable, labels, vector) -> LabelledOperator:
    return ket(table, labels, vector).adjoint()


def operator(table: VarTable, labels, matrix, in_labels=None) -> LabelledOperator:
    """Square operator on ``labels`` (or ``labels ← in_labels``) in the given label order."""
    labels = labels_of(labels)
    inp = labels if in_labels is None else labels_of(in_labels)
    return LabelledOperator.from_matrix(table, labels, inp, matrix)


def basis_ket(var: Variable, value) -> LabelledOperator:
    idx = var.qtype.encode(value)
    return ket(var.table, var.labels, linalg.basis_vector(var.dim, idx))


def projector(var: Variable, value) -> LabelledOperator:
    k = basis_ket(var, value)
    return compose(k, k.adjoint())


def identity(table: VarTable, labels) -> LabelledOperator:
    labels = tuple(sorted(set(labels_of(labels))))
    return LabelledOperator(table, labels, labels, linalg.identity(table.size(labels)))


def zero(table: VarTable, out=(), inp=()) -> LabelledOperator:
    out, inp = tuple(sorted(labels_of(out))), tuple(sorted(labels_of(inp)))
    return LabelledOperator(table, out, inp, np.zeros((table.size(out), table.size(inp))))


def density(k: LabelledOperator) -> LabelledOperator:
    """``|v⟩⟨v|`` for a ket."""
    if not k.is_ket:
        raise ShapeMismatch("density needs a ket")
    return compose(k, k.adjoint())


# -- algebra -----------------------------------------------------------------

def add(a: LabelledOperator, b: LabelledOperator) -> LabelledOperator:
    table = _same_table(a, b)
    if a.out != b.out or a.inp != b.inp:
        raise LabelMismatch(f"cannot add operators on out={a.out}/in={a.inp} and out={b.out}/in={b.inp}")
    return LabelledOperator(table, a.out, a.inp, a.matrix + b.matrix)


def scale(c, a: LabelledOperator) -> LabelledOperator:
    if isinstance(c, LabelledOperator):
        c = c.scalar()
    return LabelledOperator(a.table, a.out, a.inp, complex(c) * a.matrix)


def adjoint(a: LabelledOperator) -> LabelledOperator:
    return a.adjoint()


def norm(a: LabelledOperator) -> float:
    return a.norm()


def _assemble(table: VarTable, t: np.ndarray, axes_out: list[int], axes_in: list[int]) -> LabelledOperator:
    """Reorder tensor ``t`` whose axes are labelled by ``axes_out + axes_in``."""
    perm = [int(i) for i in np.argsort(axes_out)] + [len(axes_out) + int(i) for i in np.argsort(axes_in)]
    so, si = tuple(sorted(axes_out)), tuple(sorted(axes_in))
    return LabelledOperator(table, so, si, t.transpose(perm).reshape(table.size(so), table.size(si)))


def compose(f: LabelledOperator, g: LabelledOperator) -> LabelledOperator:
    """``f ∘ g`` with automatic lifting.

    With ``A = f.in`` and ``D = g.out`` the result is
    ``(f ⊗ I_{D∖A}) ∘ (g ⊗ I_{A∖D})``, contracting over ``A ∩ D``.
    """
    table = _same_table(f, g)
    a_set, d_set = set(f.inp), set(g.out)
    pass_f = d_set - a_set   # produced by g, untouched by f
    pass_g = a_set - d_set   # consumed by f, untouched by g
    if set(f.out) & pass_f:
        raise LabelClash(f"output labels {sorted(set(f.out) & pass_f)} would appear twice")
    if set(g.inp) & pass_g:
        raise LabelClash(f"input labels {sorted(set(g.inp) & pass_g)} would appear twice")
    shared = sorted(a_set & d_set)
    nfo = len(f.out)
    f_axes = [nfo + f.inp.index(l) for l in shared]
    g_axes = [g.out.index(l) for l in shared]
    t = np.tensordot(f.tensor_view(), g.tensor_view(), axes=(f_axes, g_axes))
    # remaining axes: f.out, f.in ∖ shared, g.out ∖ shared, g.in
    f_in_rest = [l for l in f.inp if l not in a_set & d_set]
    g_out_rest = [l for l in g.out if l not in a_set & d_set]
    order = ([("o", l) for l in f.out] + [("i", l) for l in f_in_rest]
             + [("o", l) for l in g_out_rest] + [("i", l) for l in g.inp])
    outs = [k for k, (kind, _) in enumerate(order) if kind == "o"]
    ins = [k for k, (kind, _) in enumerate(order) if kind == "i"]
    t = t.transpose(outs + ins)
    return _assemble(table, t, [order[k][1] for k in outs], [order[k][1] for k in ins])


def tensor(a: LabelledOperator, b: LabelledOperator) -> LabelledOperator:
    table = _same_table(a, b)
    if set(a.inp) & set(b.inp) or set(a.out) & set(b.out):
        raise LabelClash("tensor needs disjoint input sets and disjoint output sets")
    t = np.tensordot(a.tensor_view(), b.tensor_view(), axes=0)
    na, nb = len(a.out) + len(a.inp), len(b.out)
    perm = (list(range(len(a.out))) + list(range(na, na + nb))
            + list(range(len(a.out), na)) + list(range(na + nb, t.ndim)))
    return _assemble(table, t.transpose(perm), list(a.out) + list(b.out), list(a.inp) + list(b.inp))


def big_tensor(items: Iterable[LabelledOperator], table: VarTable | None = None) -> LabelledOperator:
    items = list(items)
    if not items:
        if table is None:
            raise ValueError("empty big_tensor needs a table")
        return scalar(table, 1)
    out = items[0]
    for x in items[1:]:
        out = tensor(out, x)
    return out


def cyl_extend(a: LabelledOperator, labels) -> LabelledOperator:
    """``A_S ⊗ I_{T∖S}`` on ``T ⊇ S``."""
    if not a.is_square:
        raise NotSquare("cylindrical extension needs a square operator")
    target = set(labels_of(labels))
    if not set(a.out) <= target:
        raise NotSuperset(f"labels {sorted(target)} do not contain {a.out}")
    rest = target - set(a.out)
    if not rest:
        return a
    return tensor(a, identity(a.table, sorted(rest)))


def partial_trace(a: LabelledOperator, keep) -> LabelledOperator:
    """Trace out every label of a square operator not in ``keep``."""
    if not a.is_square:
        raise NotSquare("partial trace needs a square operator")
    keep = set(labels_of(keep))
    if not keep <= set(a.out):
        raise NotSuperset(f"cannot keep labels {sorted(keep - set(a.out))} not on the operator")
    idx = [i for i, l in enumerate(a.out) if l in keep]
    m = linalg.partial_trace(a.matrix, a.table.dims(a.out), idx)
    kept = tuple(l for l in a.out if l in keep)
    return LabelledOperator(a.table, kept, kept, m)


def approx_eq(a: LabelledOperator, b: LabelledOperator, tol: float | None = None) -> bool:
    tol = config.DEFAULT.eq_tol if tol is None else tol
    if a.table is not b.table or a.out != b.out or a.inp != b.inp:
        return False
    return float(np.linalg.norm(a.matrix - b.matrix)) <= tol * max(1.0, a.norm())


def on_labels(a: LabelledOperator, labels) -> np.ndarray:
    """Matrix of a square ``a`` cylindrically extended to ``labels`` (canonical order)."""
    return cyl_extend(a, labels).matrix


def to_matrix(a: LabelledOperator, out_order, in_order=None) -> np.ndarray:
    """Matrix of ``a`` with indices in the given label orders (inverse of :meth:`from_matrix`)."""
    out_order = labels_of(out_order)
    in_order = out_order if in_order is None and a.is_square else labels_of(in_order or ())
    if sorted(out_order) != list(a.out) or sorted(in_order) != list(a.inp):
        raise LabelMismatch(f"orders {out_order}/{in_order} do not match out={a.out}/in={a.inp}")
    perm = [a.out.index(l) for l in out_order] + [len(a.out) + a.inp.index(l) for l in in_order]
    t = a.tensor_view().transpose(perm)
    return t.reshape(a.table.size(out_order), a.table.size(in_order))
