"""Denotational semantics of qwhile as super-operators over a program's footprint.

A super-operator on labels ``L`` (dimension ``d``) is stored as the ``d²×d²``
matrix acting on column-major vectorised operators, so that
``vec(X ρ Y) = (Yᵀ ⊗ X) vec(ρ)``.

Programs are executed by a batched engine working on the tensor form
``X[rows..., cols..., k]`` of ``K`` operators at once. Running the ``d²``
matrix units through a program yields its super-operator. Running a single
state through it evolves just that state.
"""

from __future__ import annotations

import math
import string
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from . import dirac, linalg
from .config import Config, get_default
from .dirac import LabelledOperator, VarTable
from .errors import DimensionTooLarge, LabelMismatch, NoConvergence, NotSuperset, ShapeMismatch
from .qwhile import Abort, Cond, Init, Measurement, Program, Seq, Skip, Unitary, While, footprint

_LETTERS = string.ascii_letters


@dataclass
class LoopStats:
    """Diagnostics of the last while loop evaluated by an engine."""
    iterations: int = 0
    change: float = 0.0
    strategy: str = "iterate"


class SuperOperator:
    """Linear map on operators over the labels ``labels`` (strictly ascending)."""

    __slots__ = ("table", "labels", "matrix", "info")

    def __init__(self, table: VarTable, labels: Iterable[int], matrix, info: dict | None = None):
        labels = tuple(sorted(set(int(l) for l in labels)))
        d = table.size(labels)
        m = np.asarray(matrix, dtype=np.complex128)
        if m.shape != (d * d, d * d):
            raise ShapeMismatch(f"super-operator matrix {m.shape} does not fit dimension {d}")
        if not np.all(np.isfinite(m)):
            raise ShapeMismatch("super-operator has non-finite entries")
        self.table = table
        self.labels = labels
        self.matrix = m
        self.info = dict(info or {})

    @property
    def dim(self) -> int:
        return self.table.size(self.labels)

    def tensor(self) -> np.ndarray:
        """``T[c_out..., r_out..., c_in..., r_in...]`` with one axis per label."""
        return _so_tensor(self)

    def __call__(self, rho: LabelledOperator) -> LabelledOperator:
        return apply(self, rho)

    def __matmul__(self, other: "SuperOperator") -> "SuperOperator":
        return compose(self, other)

    def __add__(self, other: "SuperOperator") -> "SuperOperator":
        return add(self, other)

    def __repr__(self):
        names = ", ".join(self.table.name(l) for l in self.labels)
        return f"SuperOperator([{names}], d={self.dim})"


def _so_tensor(so: SuperOperator) -> np.ndarray:
    dims = so.table.dims(so.labels)
    d = so.dim
    # vec index is r + c*d (column-major), so a C-order reshape yields [c, r]
    return so.matrix.reshape(d, d, d, d).reshape(tuple(dims) * 4)


def identity_map(table: VarTable, labels=()) -> SuperOperator:
    labels = tuple(sorted(set(dirac.labels_of(labels))))
    d = table.size(labels)
    return SuperOperator(table, labels, np.eye(d * d))


def zero_map(table: VarTable, labels=()) -> SuperOperator:
    labels = tuple(sorted(set(dirac.labels_of(labels))))
    d = table.size(labels)
    return SuperOperator(table, labels, np.zeros((d * d, d * d)))


def kraus_map(table: VarTable, labels, kraus: Iterable[np.ndarray]) -> SuperOperator:
    """``ρ ↦ Σ K ρ K†`` for matrices given in canonical order of ``labels``."""
    labels = tuple(sorted(set(dirac.labels_of(labels))))
    d = table.size(labels)
    m = np.zeros((d * d, d * d), dtype=np.complex128)
    for k in kraus:
        k = linalg.as_matrix(k)
        m += np.kron(k.conj(), k)
    return SuperOperator(table, labels, m)


def unitary_map(table: VarTable, labels, u) -> SuperOperator:
    return kraus_map(table, labels, [u])


# -- engine ------------------------------------------------------------------

class _Engine:
    """Runs programs on batches ``X[rows..., cols..., k]`` over fixed labels."""

    def __init__(self, table: VarTable, labels: tuple[int, ...], config: Config, strategy: str = "iterate"):
        self.table = table
        self.labels = labels
        self.dims = tuple(table.dims(labels))
        self.n = len(labels)
        self.pos = {l: i for i, l in enumerate(labels)}
        self.d = math.prod(self.dims)
        self.config = config
        self.strategy = strategy
        self.stats = LoopStats()

    # batches
    def unit_batch(self) -> np.ndarray:
        d = self.d
        # column k of the identity is vec(E_rc) with k = r + c*d
        b = np.eye(d * d, dtype=np.complex128).reshape(d, d, d * d, order="F")
        return b.reshape(self.dims + self.dims + (d * d,))

    def to_matrix(self, x: np.ndarray) -> np.ndarray:
        k = x.shape[-1]
        return x.reshape(self.d, self.d, k).reshape(self.d * self.d, k, order="F")

    def from_matrix(self, m: np.ndarray) -> np.ndarray:
        k = m.shape[-1]
        return m.reshape(self.d, self.d, k, order="F").reshape(self.dims + self.dims + (k,))

    # primitive actions
    def _axes(self, labels) -> list[int]:
        return [self.pos[l] for l in labels]

    def _mult(self, x: np.ndarray, a: LabelledOperator, offset: int, conj: bool) -> np.ndarray:
        """Contract the square operator ``a`` (or its conjugate) into row (offset 0) or column axes."""
        s = a.out
        t = a.tensor_view()
        if conj:
            t = t.conj()
        ns = len(s)
        axes = [offset + self.pos[l] for l in s]
        y = np.tensordot(t, x, axes=(list(range(ns, 2 * ns)), axes))
        return np.moveaxis(y, list(range(ns)), axes)

    def sandwich(self, x: np.ndarray, a: LabelledOperator) -> np.ndarray:
        """``A X A†`` for every operator in the batch."""
        return self._mult(self._mult(x, a, 0, False), a, self.n, True)

    def reset(self, x: np.ndarray, state: LabelledOperator) -> np.ndarray:
        """``tr_S(X) ⊗ σ_S``."""
        s = set(state.out)
        n = self.n
        rows = list(_LETTERS[:n])
        cols = [rows[i] if self.labels[i] in s else _LETTERS[n + i] for i in range(n)]
        batch = _LETTERS[2 * n]
        new_r = {l: _LETTERS[2 * n + 1 + j] for j, l in enumerate(state.out)}
        new_c = {l: _LETTERS[2 * n + 1 + len(s) + j] for j, l in enumerate(state.out)}
        sig = "".join(new_r[l] for l in state.out) + "".join(new_c[l] for l in state.out)
        out_r = "".join(new_r.get(l, rows[i]) for i, l in enumerate(self.labels))
        out_c = "".join(new_c.get(l, cols[i]) for i, l in enumerate(self.labels))
        spec = f"{''.join(rows)}{''.join(cols)}{batch},{sig}->{out_r}{out_c}{batch}"
        return np.einsum(spec, x, state.tensor_view())

    # programs
    def run(self, p: Program, x: np.ndarray) -> np.ndarray:
        if isinstance(p, Skip):
            return x
        if isinstance(p, Abort):
            return np.zeros_like(x)
        if isinstance(p, Seq):
            # the first statement acts first
            return self.run(p.second, self.run(p.first, x))
        if isinstance(p, Unitary):
            return self.sandwich(x, p.op)
        if isinstance(p, Init):
            return self.reset(x, p.state)
        if isinstance(p, Cond):
            out = np.zeros_like(x)
            for (o, branch), m in zip(p.branches, p.measurement.operators):
                out += self.run(branch, self.sandwich(x, m))
            return out
        if isinstance(p, While):
            return self.loop(p, x)
        raise TypeError(f"not a program: {p!r}")

    def loop(self, w: While, x: np.ndarray) -> np.ndarray:
        m_cont = w.measurement.operator(w.cont)
        m_stop = w.measurement.operator(w.stop)
        if self.strategy == "closed":
            closed = self._closed_form(w, x)
            if closed is not None:
                return closed
        tol = self.config.while_tol
        kmax = self.config.while_kmax
        patience = max(1, self.d * self.d)
        if x.shape[-1] >= self.d:
            return self._loop_doubling(w, x, tol, kmax, patience)
        step = lambda cur: self.run(w.body, self.sandwich(cur, m_cont))
        leave = lambda cur: self.sandwich(cur, m_stop)
        cur = x
        acc = np.zeros_like(cur)
        quiet = 0
        previous = float("inf")
        for k in range(1, kmax + 1):
            exit_part = leave(cur)
            acc += exit_part
            change = float(np.linalg.norm(exit_part))
            cur = step(cur)
            remaining = float(np.linalg.norm(cur))
            # geometric estimate of everything still to exit, from the last two exits
            ratio = change / previous if previous > 0 else 0.0
            tail = change * ratio / (1 - ratio) if ratio < 1 else float("inf")
            previous = change
            if change <= tol and tail <= tol:
                quiet += 1
                # mass left in the loop has vanished, or nothing has exited for long
                # enough that (by Cayley-Hamilton) nothing ever will
                if remaining <= tol or quiet >= patience:
                    self.stats = LoopStats(k, change, "iterate")
                    return acc if acc.shape == x.shape else self.from_matrix(acc)
            else:
                quiet = 0
        raise NoConvergence(f"while loop did not converge within {kmax} iterations", change, kmax)

    def _loop_doubling(self, w: While, x: np.ndarray, tol: float, kmax: int, patience: int) -> np.ndarray:
        """Sum ``Σ_k E₀ Gᵏ`` by doubling: ``A_{2m} = A_m + Gᵐ A_m``.

        Stops once a block of at least ``patience`` consecutive rounds adds at most
        ``tol``; every round maps states to positive operators, so a small block
        bounds each of its terms, which is the same test as the per-round one.
        """
        g, e0 = self._step_matrices(w)
        a = np.eye(g.shape[0], dtype=g.dtype)
        power = g
        prev = e0
        m = 1
        while True:
            a = a + power @ a
            m *= 2
            cur = e0 @ a
            change = float(np.linalg.norm(cur - prev))
            if m >= patience and change <= tol:
                self.stats = LoopStats(m, change, "doubling")
                return self.from_matrix(cur @ self.to_matrix(x))
            if m >= kmax:
                raise NoConvergence(f"while loop did not converge within {kmax} iterations", change, kmax)
            power = power @ power
            prev = cur

    def _step_matrices(self, w: While) -> tuple[np.ndarray, np.ndarray]:
        """Super-operator matrices of one loop round ``G = body ∘ M_b`` and of exiting ``E₀ = M_¬b``."""
        units = self.unit_batch()
        g = self.to_matrix(self.run(w.body, self.sandwich(units, w.measurement.operator(w.cont))))
        e0 = self.to_matrix(self.sandwich(units, w.measurement.operator(w.stop)))
        return g, e0

    def _closed_form(self, w: While, x: np.ndarray) -> np.ndarray | None:
        """``E₀ (I − G)⁻¹`` applied to the batch, when the spectral radius of ``G`` is below one."""
        d2 = self.d * self.d
        g, e0 = self._step_matrices(w)
        rho = float(np.max(np.abs(np.linalg.eigvals(g)))) if d2 else 0.0
        if rho >= 1 - 1e-8:
            return None
        xm = self.to_matrix(x)
        y = e0 @ np.linalg.solve(np.eye(d2) - g, xm)
        self.stats = LoopStats(0, 0.0, "closed")
        return self.from_matrix(y)


def _labels_for(program: Program, labels, table: VarTable | None) -> tuple[int, ...]:
    fp = set(footprint(program))
    if labels is not None:
        extra = set(dirac.labels_of(labels))
        fp |= extra
    return tuple(sorted(fp))


def _check_dim(table: VarTable, labels, config: Config) -> None:
    d = table.size(labels)
    if d > config.max_dim:
        raise DimensionTooLarge(f"dimension {d} over labels {list(labels)} exceeds the limit {config.max_dim}")


def _table_of(program: Program) -> VarTable | None:
    stack = [program]
    while stack:
        p = stack.pop()
        if isinstance(p, (Init, Unitary)):
            return p.target.table
        if isinstance(p, (Cond, While)):
            return p.measurement.target.table
        if isinstance(p, Seq):
            stack += [p.first, p.second]
    return None


def denote(program: Program, table: VarTable | None = None, labels=None, config: Config | None = None,
           strategy: str = "iterate") -> SuperOperator:
    """Super-operator of ``program`` on its footprint, or on ``footprint ∪ labels``.

    ``strategy`` is ``"iterate"`` (partial sums of the loop series) or
    ``"closed"`` (Neumann closed form where the loop step has spectral radius
    below one, falling back to iteration otherwise).
    """
    if strategy not in ("iterate", "closed"):
        raise ValueError(f"unknown strategy {strategy!r}")
    config = config or get_default()
    table = table or _table_of(program)
    if table is None:
        raise ValueError("a variable table is needed for programs that mention no variables")
    labs = _labels_for(program, labels, table)
    _check_dim(table, labs, config)
    eng = _Engine(table, labs, config, strategy)
    out = eng.to_matrix(eng.run(program, eng.unit_batch()))
    return SuperOperator(table, labs, out, {"loop_iterations": eng.stats.iterations,
                                             "loop_strategy": eng.stats.strategy})


def evolve(program: Program, rho: LabelledOperator, config: Config | None = None) -> LabelledOperator:
    """``⟦program⟧(ρ)`` computed on the state directly (no super-operator matrix).

    ``ρ`` must be square on a superset of the footprint.
    """
    config = config or get_default()
    if not rho.is_square:
        raise ShapeMismatch("state must be a square operator")
    fp = set(footprint(program))
    if not fp <= set(rho.out):
        raise LabelMismatch(f"state on {rho.out} does not cover the program footprint {sorted(fp)}")
    _check_dim(rho.table, rho.out, config)
    eng = _Engine(rho.table, rho.out, config)
    x = rho.tensor_view()[..., None]
    y = eng.run(program, x)[..., 0]
    return LabelledOperator(rho.table, rho.out, rho.out, y.reshape(eng.d, eng.d))


# -- operations on super-operators ---------------------------------------------

def apply(so: SuperOperator, rho: LabelledOperator) -> LabelledOperator:
    """``𝓔(ρ)`` where ρ is square on a superset of the map's labels."""
    if not rho.is_square:
        raise ShapeMismatch("apply needs a square operator")
    if not set(so.labels) <= set(rho.out):
        raise LabelMismatch(f"operator on {rho.out} does not cover the map's labels {so.labels}")
    r = rho.out
    n = len(r)
    pos = {l: i for i, l in enumerate(r)}
    rows = list(_LETTERS[:n])
    cols = list(_LETTERS[n:2 * n])
    k = len(so.labels)
    new_r = [_LETTERS[2 * n + j] for j in range(k)]
    new_c = [_LETTERS[2 * n + k + j] for j in range(k)]
    t_spec = "".join(new_c) + "".join(new_r) + "".join(cols[pos[l]] for l in so.labels) + \
        "".join(rows[pos[l]] for l in so.labels)
    out_r, out_c = rows[:], cols[:]
    for j, l in enumerate(so.labels):
        out_r[pos[l]] = new_r[j]
        out_c[pos[l]] = new_c[j]
    spec = f"{t_spec},{''.join(rows)}{''.join(cols)}->{''.join(out_r)}{''.join(out_c)}"
    y = np.einsum(spec, _so_tensor(so), rho.tensor_view())
    d = rho.table.size(r)
    return LabelledOperator(rho.table, r, r, y.reshape(d, d))


def dual(so: SuperOperator) -> SuperOperator:
    """Heisenberg-picture map 𝓔* with ``tr[A 𝓔(ρ)] = tr[𝓔*(A) ρ]``."""
    return SuperOperator(so.table, so.labels, so.matrix.conj().T)


def extend(so: SuperOperator, labels) -> SuperOperator:
    """``𝓔 ⊗ 𝓘`` on a superset of the map's labels."""
    target = tuple(sorted(set(dirac.labels_of(labels))))
    if not set(so.labels) <= set(target):
        raise NotSuperset(f"{target} does not contain {so.labels}")
    if target == so.labels:
        return so
    table = so.table
    n = len(target)
    pos = {l: i for i, l in enumerate(target)}
    co, ro, ci, ri = (_LETTERS[j * n:(j + 1) * n] for j in range(4))
    sub = lambda letters: "".join(letters[pos[l]] for l in so.labels)
    ops = [_so_tensor(so)]
    specs = [sub(co) + sub(ro) + sub(ci) + sub(ri)]
    for l in target:
        if l in so.labels:
            continue
        # identity on the extra label: output index equals input index, rows and columns alike
        e = np.eye(table.dim(l))
        p = pos[l]
        ops += [e, e]
        specs += [co[p] + ci[p], ro[p] + ri[p]]
    t = np.einsum(",".join(specs) + "->" + co + ro + ci + ri, *ops)
    d = table.size(target)
    return SuperOperator(table, target, t.reshape(d * d, d * d), so.info)


def _common(f: SuperOperator, g: SuperOperator) -> tuple[SuperOperator, SuperOperator]:
    if f.table is not g.table:
        raise LabelMismatch("super-operators belong to different variable tables")
    if f.labels == g.labels:
        return f, g
    union = tuple(sorted(set(f.labels) | set(g.labels)))
    return extend(f, union), extend(g, union)


def compose(f: SuperOperator, g: SuperOperator) -> SuperOperator:
    """``f ∘ g`` (apply ``g`` first), extending both to the union of labels."""
    f, g = _common(f, g)
    return SuperOperator(f.table, f.labels, f.matrix @ g.matrix)


def add(f: SuperOperator, g: SuperOperator) -> SuperOperator:
    f, g = _common(f, g)
    return SuperOperator(f.table, f.labels, f.matrix + g.matrix)


def scale(c: complex, f: SuperOperator) -> SuperOperator:
    return SuperOperator(f.table, f.labels, complex(c) * f.matrix)


def approx_equal(f: SuperOperator, g: SuperOperator, tol: float = 1e-9) -> bool:
    f, g = _common(f, g)
    return linalg.approx_equal(f.matrix, g.matrix, tol)


def choi(so: SuperOperator) -> np.ndarray:
    """Choi matrix ``J[(r_out, r_in), (c_out, c_in)] = 𝓔(|r_in⟩⟨c_in|)[r_out, c_out]``."""
    d = so.dim
    t = so.matrix.reshape(d, d, d, d)  # [c_out, r_out, c_in, r_in]
    return t.transpose(1, 3, 0, 2).reshape(d * d, d * d)


def apply_matrix(so: SuperOperator, a: np.ndarray) -> np.ndarray:
    """Apply to a plain matrix in canonical order of the map's labels."""
    d = so.dim
    v = linalg.vectorize(a)
    return linalg.devectorize(so.matrix @ v, d, d)


@dataclass(frozen=True)
class QualityReport:
    is_cp: bool
    is_trace_nonincreasing: bool
    is_trace_preserving: bool
    choi_min_eig: float
    trace_defect: float = field(default=0.0)


def quality(so: SuperOperator, tol: float | None = None) -> QualityReport:
    """Complete positivity via the Choi matrix, trace behaviour via ``𝓔*(I)``."""
    tol = get_default().psd_tol if tol is None else tol
    j = choi(so)
    j = (j + j.conj().T) / 2
    lam = linalg.min_eigenvalue(j) if j.size else 0.0
    scale_ = max(1.0, linalg.frobenius(j))
    d = so.dim
    ident = np.eye(d)
    dual_i = apply_matrix(dual(so), ident)
    defect = ident - (dual_i + dual_i.conj().T) / 2
    tni = linalg.min_eigenvalue(defect) >= -tol * max(1.0, linalg.frobenius(dual_i)) if d else True
    tp = linalg.approx_equal(dual_i, ident, tol)
    return QualityReport(bool(lam >= -tol * scale_), bool(tni), bool(tp), float(lam),
                         float(linalg.frobenius(ident - dual_i)))


def measurement_map(m: Measurement, outcome) -> SuperOperator:
    """``ρ ↦ M_m ρ M_m†`` on the measurement's labels."""
    op = m.operator(outcome)
    return kraus_map(op.table, op.out, [op.matrix])


def loop_residual(w: While, so: SuperOperator, config: Config | None = None) -> float:
    """Frobenius norm of ``W − (E₀ + W∘G)`` on the labels of ``so``."""
    table = so.table
    body = denote(w.body, table, so.labels, config)
    g = compose(body, extend(measurement_map(w.measurement, w.cont), so.labels))
    e0 = extend(measurement_map(w.measurement, w.stop), so.labels)
    return float(np.linalg.norm(so.matrix - (e0.matrix + compose(so, g).matrix)))
