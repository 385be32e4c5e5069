"""Finite value types for quantum variables and the built-in gate library."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from . import linalg
from .errors import BadParam, NotHermitian, NotOrthonormal, NotUnitary, UnknownGate

GRAM_SCHMIDT_DROP = 1e-10


# -- types -------------------------------------------------------------------

class QType:
    """A finite type whose values index the computational basis.

    Composite values are tuples; the encoding is mixed-radix with the leftmost
    component most significant.
    """

    def components(self) -> tuple["QType", ...]:
        return ()

    @property
    def dim(self) -> int:
        return math.prod(c.dim for c in self.components())

    def atoms(self) -> list["QType"]:
        comps = self.components()
        if not comps:
            return [self]
        out = []
        for c in comps:
            out.extend(c.atoms())
        return out

    def encode(self, value) -> int:
        comps = self.components()
        if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
            value = int(value)
            if not 0 <= value < self.dim:
                raise BadParam(f"value {value} out of range for {self.descr()}")
            return value
        if isinstance(value, bool):
            return self.encode(int(value))
        if not comps or not isinstance(value, (tuple, list)) or len(value) != len(comps):
            raise BadParam(f"value {value!r} does not fit type {self.descr()}")
        idx = 0
        for c, v in zip(comps, value):
            idx = idx * c.dim + c.encode(v)
        return idx

    def decode(self, index: int):
        if not 0 <= index < self.dim:
            raise BadParam(f"index {index} out of range for {self.descr()}")
        comps = self.components()
        if not comps:
            return int(index)
        parts = []
        for c in reversed(comps):
            index, r = divmod(index, c.dim)
            parts.append(c.decode(r))
        return tuple(reversed(parts))

    def values(self) -> list:
        return [self.decode(i) for i in range(self.dim)]

    def descr(self) -> str:
        raise NotImplementedError


@dataclass(frozen=True)
class Bool(QType):
    @property
    def dim(self) -> int:
        return 2

    def descr(self) -> str:
        return "bool"


@dataclass(frozen=True)
class ZN(QType):
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise BadParam("ZN needs n >= 1")

    @property
    def dim(self) -> int:
        return self.n

    def descr(self) -> str:
        return f"int<{self.n}>"


@dataclass(frozen=True)
class PairOf(QType):
    first: QType
    second: QType

    def components(self):
        return (self.first, self.second)

    def descr(self) -> str:
        return f"{_wrap(self.first)}*{_wrap(self.second)}"


@dataclass(frozen=True)
class TupleOf(QType):
    elem: QType
    arity: int

    def __post_init__(self):
        if self.arity < 1:
            raise BadParam("tuple arity must be >= 1")

    def components(self):
        return (self.elem,) * self.arity

    def descr(self) -> str:
        return f"{_wrap(self.elem)}^{self.arity}"


@dataclass(frozen=True)
class ProductOf(QType):
    """Ad-hoc product used for composite references such as ``[x, y, z]``."""
    parts: tuple

    def components(self):
        return tuple(self.parts)

    def descr(self) -> str:
        return "(" + ", ".join(p.descr() for p in self.parts) + ")"


def _wrap(t: QType) -> str:
    return f"({t.descr()})" if t.components() else t.descr()


# -- matrices ----------------------------------------------------------------

def qft(n: int) -> np.ndarray:
    """``F[g, h] = e^{2πi gh/n}/√n``; the inverse transform is the adjoint."""
    if n < 1:
        raise BadParam("qft needs n >= 1")
    g = np.arange(n)
    return np.exp(2j * np.pi * np.outer(g, g) / n) / math.sqrt(n)


def group_qft(moduli: Sequence[int]) -> np.ndarray:
    """QFT over a product of cyclic groups in the product basis."""
    moduli = [int(p) for p in moduli]
    if any(p < 1 for p in moduli):
        raise BadParam(f"bad moduli {moduli}")
    out = np.ones((1, 1), dtype=np.complex128)
    for p in moduli:
        out = np.kron(out, qft(p))
    return out


def _cyclic_add(a: int, b: int, moduli: Sequence[int]) -> int:
    out, place = 0, 1
    for p in reversed(moduli):
        a, da = divmod(a, p)
        b, db = divmod(b, p)
        out += ((da + db) % p) * place
        place *= p
    return out


def oracle(f: Callable[[int], int], domain_size: int, codomain: int | Sequence[int]) -> np.ndarray:
    """``|g, t⟩ ↦ |g, t + f(g)⟩`` with addition in a product of cyclic groups."""
    moduli = [int(codomain)] if isinstance(codomain, (int, np.integer)) else [int(p) for p in codomain]
    ny = math.prod(moduli)
    if domain_size < 1 or ny < 1:
        raise BadParam("oracle needs non-empty domain and codomain")
    u = np.zeros((domain_size * ny, domain_size * ny), dtype=np.complex128)
    for g in range(domain_size):
        fg = f(g)
        if isinstance(fg, tuple):
            fg = _encode_tuple(fg, moduli)
        fg = int(fg)
        if not 0 <= fg < ny:
            raise BadParam(f"oracle value f({g}) = {fg} outside codomain")
        for t in range(ny):
            u[g * ny + _cyclic_add(t, fg, moduli), g * ny + t] = 1.0
    return u


def _encode_tuple(value, moduli) -> int:
    idx = 0
    for v, p in zip(value, moduli):
        idx = idx * p + int(v) % p
    return idx


def phase_oracle(f: Callable[[int], object] | Sequence, size: int | None = None) -> np.ndarray:
    """Diagonal ``(-1)^{f(t)}``; ``f`` may be a callable or a truth table."""
    if callable(f):
        if size is None:
            raise BadParam("phase_oracle with a callable needs a size")
        table = [f(t) for t in range(size)]
    else:
        table = list(f)
        if size is not None and len(table) != size:
            raise BadParam(f"truth table has {len(table)} entries, expected {size}")
    return np.diag([-1.0 if bool(v) else 1.0 for v in table]).astype(np.complex128)


def multiplexer(family: Sequence[np.ndarray] | Callable[[int], np.ndarray], count: int | None = None,
                tol: float | None = None) -> np.ndarray:
    """Block-diagonal ``Σ_k |k⟩⟨k| ⊗ U_k``."""
    if callable(family):
        if count is None:
            raise BadParam("multiplexer with a callable needs a count")
        family = [family(k) for k in range(count)]
    blocks = [linalg.as_matrix(u) for u in family]
    if not blocks:
        raise BadParam("multiplexer needs at least one block")
    d = blocks[0].shape[0]
    out = np.zeros((len(blocks) * d, len(blocks) * d), dtype=np.complex128)
    for k, u in enumerate(blocks):
        if u.shape != (d, d):
            raise BadParam("multiplexer blocks must share one square shape")
        if not linalg.is_unitary(u, tol):
            raise NotUnitary(f"multiplexer block {k} is not unitary")
        out[k * d:(k + 1) * d, k * d:(k + 1) * d] = u
    return out


def complete_unitary(columns: Mapping[int, Sequence[complex]], dim: int, tol: float | None = None) -> np.ndarray:
    """Unitary whose columns agree with ``columns``; the rest by Gram–Schmidt.

    Untouched standard basis vectors are orthogonalised in index order and a
    residual below 1e-10 is skipped as dependent.
    """
    tol = 1e-9 if tol is None else tol
    given = {}
    for k, v in columns.items():
        if not 0 <= k < dim:
            raise BadParam(f"column index {k} out of range for dimension {dim}")
        vec = np.asarray(v, dtype=np.complex128).reshape(-1)
        if vec.shape != (dim,):
            raise BadParam(f"column {k} has length {vec.size}, expected {dim}")
        given[int(k)] = vec
    if given:
        g = np.stack([given[k] for k in sorted(given)], axis=1)
        if np.linalg.norm(g.conj().T @ g - np.eye(g.shape[1])) > tol * max(1.0, math.sqrt(g.shape[1])):
            raise NotOrthonormal("given columns are not orthonormal")
    basis = [given[k] for k in sorted(given)]
    extra = []
    for j in range(dim):
        if len(basis) + len(extra) == dim:
            break
        r = np.zeros(dim, dtype=np.complex128)
        r[j] = 1.0
        # two passes keep the completion orthogonal to working precision
        for _ in range(2):
            for b in basis + extra:
                r = r - b * np.vdot(b, r)
        nrm = np.linalg.norm(r)
        if nrm < GRAM_SCHMIDT_DROP:
            continue
        extra.append(r / nrm)
    u = np.zeros((dim, dim), dtype=np.complex128)
    free = [k for k in range(dim) if k not in given]
    for k, v in given.items():
        u[:, k] = v
    for k, v in zip(free, extra):
        u[:, k] = v
    return u


def uniform_unitary(dim: int, start: int = 0) -> np.ndarray:
    """Unitary sending ``|start⟩`` to the uniform superposition."""
    return complete_unitary({start: np.full(dim, 1 / math.sqrt(dim))}, dim)


def expm_hermitian(a, t: float = 1.0) -> np.ndarray:
    """``e^{iAt}`` for Hermitian ``A``."""
    a = linalg.as_matrix(a)
    if not linalg.is_hermitian(a):
        raise NotHermitian("exponent must be Hermitian")
    eig = linalg.hermitian_eig(a)
    v = eig.eigenvectors
    return (v * np.exp(1j * eig.eigenvalues * t)) @ v.conj().T


# -- gates -------------------------------------------------------------------

@dataclass(frozen=True)
class GateSpec:
    name: str
    matrix: np.ndarray = field(repr=False)
    params: tuple = ()
    arity: int = 1

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def adjoint(self) -> "GateSpec":
        return GateSpec(f"adj({self.name})", self.matrix.conj().T.copy(), self.params, self.arity)


_S2 = 1 / math.sqrt(2)
_FIXED = {
    "I": (np.eye(2), 1),
    "H": (np.array([[_S2, _S2], [_S2, -_S2]]), 1),
    "X": (np.array([[0, 1], [1, 0]]), 1),
    "Y": (np.array([[0, -1j], [1j, 0]]), 1),
    "Z": (np.array([[1, 0], [0, -1]]), 1),
    "S": (np.diag([1, 1j]), 1),
    "T": (np.diag([1, np.exp(1j * np.pi / 4)]), 1),
    "CNOT": (np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]]), 2),
    "CZ": (np.diag([1, 1, 1, -1]), 2),
    "SWAP": (np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]]), 2),
}


def controlled(u) -> np.ndarray:
    """``|0⟩⟨0| ⊗ I + |1⟩⟨1| ⊗ U``."""
    u = linalg.as_matrix(u)
    d = u.shape[0]
    out = np.zeros((2 * d, 2 * d), dtype=np.complex128)
    out[:d, :d] = np.eye(d)
    out[d:, d:] = u
    return out


def phase(theta: float) -> np.ndarray:
    return np.diag([1.0, np.exp(1j * theta)]).astype(np.complex128)


def swap(d: int) -> np.ndarray:
    u = np.zeros((d * d, d * d), dtype=np.complex128)
    for a in range(d):
        for b in range(d):
            u[b * d + a, a * d + b] = 1.0
    return u


def builtin(name: str, *params) -> GateSpec:
    """One of H, X, Y, Z, S, T, I, CNOT, CZ, SWAP, Ph(θ), CU(U)."""
    if name in _FIXED:
        if params:
            raise BadParam(f"{name} takes no parameters")
        m, arity = _FIXED[name]
        return GateSpec(name, np.asarray(m, dtype=np.complex128), (), arity)
    if name == "Ph":
        if len(params) != 1:
            raise BadParam("Ph takes one angle")
        try:
            theta = float(np.real_if_close(complex(params[0])))
        except (TypeError, ValueError) as exc:
            raise BadParam(f"bad angle {params[0]!r}") from exc
        return GateSpec("Ph", phase(theta), (theta,), 1)
    if name == "CU":
        if len(params) != 1:
            raise BadParam("CU takes one unitary")
        inner = params[0]
        m = inner.matrix if isinstance(inner, GateSpec) else linalg.as_matrix(inner)
        if m.shape[0] != m.shape[1] or not linalg.is_unitary(m):
            raise BadParam("CU needs a unitary argument")
        arity = 1 + (inner.arity if isinstance(inner, GateSpec) else 1)
        return GateSpec("CU", controlled(m), (inner,), arity)
    raise UnknownGate(name)


BUILTIN_NAMES = tuple(sorted(_FIXED)) + ("Ph", "CU")


class GateRegistry:
    """Resolves gate names for the program parser.

    A factory receives the already-evaluated arguments and the dimensions of
    the operand variables, and returns a square matrix of matching size.
    """

    def __init__(self, matrices: Mapping[str, np.ndarray] | None = None):
        self._factories: dict[str, Callable] = {}
        for name in _FIXED:
            self._factories[name] = _fixed_factory(name)
        self._factories["Ph"] = lambda args, dims: builtin("Ph", *args).matrix
        self._factories["CU"] = _cu_factory
        self._factories["QFT"] = lambda args, dims: _no_args("QFT", args) or qft(math.prod(dims))
        self._factories["IQFT"] = lambda args, dims: _no_args("IQFT", args) or qft(math.prod(dims)).conj().T
        self._factories["Hn"] = lambda args, dims: _hn(args, dims)
        self._factories["PhOracle"] = lambda args, dims: phase_oracle(_one_list("PhOracle", args), math.prod(dims))
        self._factories["Oracle"] = _oracle_factory
        self._factories["Multiplexer"] = _multiplexer_factory
        for name, m in (matrices or {}).items():
            self.register_matrix(name, m)

    def register(self, name: str, factory: Callable) -> None:
        self._factories[name] = factory

    def register_matrix(self, name: str, m) -> None:
        m = linalg.as_matrix(m)
        if m.shape[0] != m.shape[1] or not linalg.is_unitary(m):
            raise NotUnitary(f"gate {name!r} is not unitary")

        def factory(args, dims, m=m, name=name):
            _no_args(name, args)
            return m
        self._factories[name] = factory

    def __contains__(self, name: str) -> bool:
        return name in self._factories or name == "adj"

    def resolve(self, name: str, args: Sequence, dims: Sequence[int]) -> np.ndarray:
        if name == "adj":
            if len(args) != 1 or not isinstance(args[0], np.ndarray):
                raise BadParam("adj takes one gate")
            m = args[0]
        else:
            if name not in self._factories:
                raise UnknownGate(name)
            m = np.asarray(self._factories[name](list(args), tuple(dims)), dtype=np.complex128)
        want = math.prod(dims)
        if m.shape != (want, want):
            raise BadParam(f"gate {name} has shape {m.shape}, operands need {want}x{want}")
        return m.conj().T.copy() if name == "adj" else m


def _no_args(name, args):
    if args:
        raise BadParam(f"{name} takes no parameters")
    return None


def _fixed_factory(name):
    return lambda args, dims: builtin(name, *args).matrix


def _cu_factory(args, dims):
    if len(args) != 1 or not isinstance(args[0], np.ndarray):
        raise BadParam("CU takes one gate argument")
    return controlled(args[0])


def _hn(args, dims):
    d = math.prod(dims)
    if not args:
        return uniform_unitary(d)
    if len(args) == 1:
        return uniform_unitary(d, int(np.real(args[0])))
    raise BadParam("Hn takes at most one start index")


def _one_list(name, args):
    if len(args) != 1 or not isinstance(args[0], list):
        raise BadParam(f"{name} takes one list argument")
    return [int(np.real(v)) for v in args[0]]


def _oracle_factory(args, dims):
    table = _one_list("Oracle", args)
    if len(dims) != 2:
        raise BadParam("Oracle acts on [input, output]")
    if len(table) != dims[0]:
        raise BadParam(f"Oracle table has {len(table)} entries, input has {dims[0]} values")
    return oracle(lambda g: table[g], dims[0], dims[1])


def _multiplexer_factory(args, dims):
    if not args or not all(isinstance(a, np.ndarray) for a in args):
        raise BadParam("Multiplexer takes gate arguments, one per control value")
    if len(dims) != 2 or dims[0] != len(args):
        raise BadParam("Multiplexer acts on [control, target] with one gate per control value")
    return multiplexer(args)
