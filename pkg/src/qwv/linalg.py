"""Dense complex linear algebra.

Matrices are plain ``numpy`` complex128 arrays. Every function here is pure:
inputs are never modified and fresh arrays are returned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import config
from .errors import BadIndex, NoConvergence, NotHermitian, ShapeMismatch

ComplexMatrix = np.ndarray

JACOBI_REL_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100
# Above this size the pure-numpy Jacobi sweeps get slow (seconds at 256), so
# LAPACK's Hermitian solver takes over.
JACOBI_MAX_DIM = 64


def as_matrix(a, *, name: str = "matrix") -> ComplexMatrix:
    """Coerce ``a`` to a finite 2-D complex128 array (vectors become columns)."""
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    elif m.ndim == 1:
        m = m.reshape(-1, 1)
    elif m.ndim != 2:
        raise ShapeMismatch(f"{name} must be at most 2-dimensional, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} has non-finite entries")
    return m


def _square(a, name="matrix") -> ComplexMatrix:
    m = as_matrix(a, name=name)
    if m.shape[0] != m.shape[1]:
        raise ShapeMismatch(f"{name} must be square, got {m.shape}")
    return m


def identity(n: int) -> ComplexMatrix:
    return np.eye(n, dtype=np.complex128)


def basis_vector(n: int, k: int) -> ComplexMatrix:
    if not 0 <= k < n:
        raise BadIndex(f"basis index {k} out of range for dimension {n}")
    v = np.zeros((n, 1), dtype=np.complex128)
    v[k, 0] = 1.0
    return v


# -- arithmetic --------------------------------------------------------------

def add(a, b) -> ComplexMatrix:
    a, b = as_matrix(a), as_matrix(b)
    if a.shape != b.shape:
        raise ShapeMismatch(f"cannot add {a.shape} and {b.shape}")
    return a + b


def scale(c: complex, a) -> ComplexMatrix:
    return complex(c) * as_matrix(a)


def matmul(a, b) -> ComplexMatrix:
    a, b = as_matrix(a), as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise ShapeMismatch(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def adjoint(a) -> ComplexMatrix:
    return as_matrix(a).conj().T.copy()


def trace(a) -> complex:
    return complex(np.trace(_square(a)))


def frobenius(a) -> float:
    return float(np.linalg.norm(as_matrix(a)))


def kron(a, b) -> ComplexMatrix:
    """Kronecker product; ``(A⊗B)[i*rB+k, j*cB+l] = A[i,j]*B[k,l]``."""
    return np.kron(as_matrix(a), as_matrix(b))


def partial_trace(a, dims: Sequence[int], keep: Iterable[int]) -> ComplexMatrix:
    """Trace out every tensor factor of ``a`` not listed in ``keep``.

    ``dims`` gives the factor dimensions, first factor most significant. The
    kept factors appear in ascending factor order in the result.
    """
    a = _square(a)
    dims = [int(d) for d in dims]
    if any(d < 1 for d in dims):
        raise ShapeMismatch(f"factor dimensions must be positive: {dims}")
    if math.prod(dims) != a.shape[0]:
        raise ShapeMismatch(f"dims {dims} do not multiply to {a.shape[0]}")
    keep = sorted(set(int(k) for k in keep))
    for k in keep:
        if not 0 <= k < len(dims):
            raise BadIndex(f"factor index {k} out of range for {len(dims)} factors")
    n = len(dims)
    t = a.reshape(dims + dims)
    row = list(range(n))
    col = [n + i for i in range(n)]
    for i in range(n):
        if i not in keep:
            col[i] = row[i]
    out = [row[i] for i in keep] + [col[i] for i in keep]
    d = math.prod(dims[i] for i in keep)
    return np.einsum(t, row + col, out).reshape(d, d)


# -- column-major vectorisation ---------------------------------------------

def vectorize(a) -> ComplexMatrix:
    """Stack the columns of ``a`` into one column (``vec(XρY) = (Yᵀ⊗X)vec(ρ)``)."""
    a = as_matrix(a)
    return a.reshape(-1, 1, order="F").copy()


def devectorize(v, rows: int, cols: int) -> ComplexMatrix:
    v = np.asarray(v, dtype=np.complex128)
    if v.size != rows * cols:
        raise ShapeMismatch(f"vector of length {v.size} cannot form a {rows}x{cols} matrix")
    return v.reshape(rows, cols, order="F").copy()


# -- Hermitian eigenproblem --------------------------------------------------

@dataclass(frozen=True)
class EigenDecomposition:
    eigenvalues: np.ndarray    # ascending, real
    eigenvectors: ComplexMatrix  # orthonormal columns

    def reconstruct(self) -> ComplexMatrix:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def _hermitian_defect(a: ComplexMatrix) -> float:
    return float(np.linalg.norm(a - a.conj().T))


def is_hermitian(a, tol: float | None = None) -> bool:
    a = _square(a)
    tol = config.DEFAULT.eq_tol if tol is None else tol
    return _hermitian_defect(a) <= tol * max(1.0, frobenius(a))


def _round_robin(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Pairings covering every (p, q) once per sweep, n/2 disjoint pairs per round."""
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        ps, qs = [], []
        for i in range(m // 2):
            p, q = players[i], players[m - 1 - i]
            if p < n and q < n:
                ps.append(min(p, q))
                qs.append(max(p, q))
        rounds.append((np.array(ps, dtype=np.intp), np.array(qs, dtype=np.intp)))
        players = [players[0]] + [players[-1]] + players[1:-1]
    return rounds


def hermitian_eig(a, tol: float | None = None, *, max_sweeps: int = JACOBI_MAX_SWEEPS,
                  method: str = "auto") -> EigenDecomposition:
    """Eigendecomposition of a Hermitian matrix.

    ``method="jacobi"`` runs cyclic Jacobi rotations in round-robin order until
    the off-diagonal Frobenius mass drops below ``1e-12·‖A‖_F``. ``"lapack"``
    defers to ``numpy.linalg.eigh``; ``"auto"`` picks Jacobi up to
    ``JACOBI_MAX_DIM``.
    """
    a = _square(a)
    tol = config.DEFAULT.eq_tol if tol is None else tol
    scale_ = frobenius(a)
    if _hermitian_defect(a) > tol * max(1.0, scale_):
        raise NotHermitian("matrix is not Hermitian within tolerance")
    n = a.shape[0]
    work = (a + a.conj().T) / 2
    if method not in ("auto", "jacobi", "lapack"):
        raise ValueError(f"unknown eigen method {method!r}")
    if method == "lapack" or (method == "auto" and n > JACOBI_MAX_DIM):
        evals, evecs = np.linalg.eigh(work)
        return EigenDecomposition(evals, evecs)
    return _jacobi(work, scale_, max_sweeps)


def _jacobi(work: ComplexMatrix, scale_: float, max_sweeps: int) -> EigenDecomposition:
    n = work.shape[0]
    vecs = identity(n)
    if n == 1 or scale_ == 0.0:
        return EigenDecomposition(np.real(np.diag(work)).copy(), vecs)

    target = JACOBI_REL_TOL * scale_
    rounds = _round_robin(n)
    diag_idx = np.arange(n)
    for _ in range(max_sweeps):
        off = work.copy()
        off[diag_idx, diag_idx] = 0
        if np.linalg.norm(off) <= target:
            break
        for p, q in rounds:
            apq = work[p, q]
            mag = np.abs(apq)
            active = mag > 1e-300
            if not np.any(active):
                continue
            p, q, apq, mag = p[active], q[active], apq[active], mag[active]
            app = work[p, p].real
            aqq = work[q, q].real
            theta = 0.5 * np.arctan2(2 * mag, aqq - app)
            theta = np.where(theta > np.pi / 4, theta - np.pi / 2, theta)
            theta = np.where(theta < -np.pi / 4, theta + np.pi / 2, theta)
            c, s = np.cos(theta), np.sin(theta)
            phase = np.conj(apq) / mag  # e^{-iφ}
            g11, g12 = c, s
            g21, g22 = -s * phase, c * phase
            # A <- A G on the columns, then A <- G† A on the rows
            cp, cq = work[:, p], work[:, q]
            work[:, p] = cp * g11 + cq * g21
            work[:, q] = cp * g12 + cq * g22
            rp, rq = work[p, :], work[q, :]
            work[p, :] = np.conj(g11)[:, None] * rp + np.conj(g21)[:, None] * rq
            work[q, :] = np.conj(g12)[:, None] * rp + np.conj(g22)[:, None] * rq
            vp, vq = vecs[:, p], vecs[:, q]
            vecs[:, p] = vp * g11 + vq * g21
            vecs[:, q] = vp * g12 + vq * g22
    else:
        off = work.copy()
        off[diag_idx, diag_idx] = 0
        residual = float(np.linalg.norm(off))
        if residual > target:
            raise NoConvergence("Jacobi sweeps exhausted", residual=residual, iterations=max_sweeps)
    evals = np.real(np.diag(work))
    order = np.argsort(evals, kind="stable")
    return EigenDecomposition(evals[order].copy(), vecs[:, order].copy())


def eigvalsh(a, tol: float | None = None) -> np.ndarray:
    return hermitian_eig(a, tol).eigenvalues


def min_eigenvalue(a, tol: float | None = None) -> float:
    return float(eigvalsh(a, tol)[0])


# -- predicates --------------------------------------------------------------

def _psd_tol(tol):
    return config.DEFAULT.psd_tol if tol is None else tol


def is_psd(a, tol: float | None = None) -> bool:
    a = _square(a)
    tol = _psd_tol(tol)
    if not is_hermitian(a, tol):
        return False
    return min_eigenvalue(a, tol) >= -tol * max(1.0, frobenius(a))


def is_unitary(a, tol: float | None = None) -> bool:
    a = _square(a)
    tol = config.DEFAULT.eq_tol if tol is None else tol
    eye = identity(a.shape[0])
    bound = tol * max(1.0, math.sqrt(a.shape[0]))
    return (float(np.linalg.norm(a.conj().T @ a - eye)) <= bound
            and float(np.linalg.norm(a @ a.conj().T - eye)) <= bound)


def is_projection(a, tol: float | None = None) -> bool:
    a = _square(a)
    tol = config.DEFAULT.eq_tol if tol is None else tol
    if not is_hermitian(a, tol):
        return False
    return float(np.linalg.norm(a @ a - a)) <= tol * max(1.0, frobenius(a))


def is_partial_density(a, tol: float | None = None) -> bool:
    tol = _psd_tol(tol)
    return is_psd(a, tol) and trace(a).real <= 1 + tol


def is_density(a, tol: float | None = None) -> bool:
    tol = _psd_tol(tol)
    return is_psd(a, tol) and abs(trace(a) - 1) <= tol


def is_effect(a, tol: float | None = None) -> bool:
    a = _square(a)
    return is_psd(a, tol) and is_psd(identity(a.shape[0]) - a, tol)


def loewner_gap(a, b, tol: float | None = None) -> tuple[bool, float]:
    """``(A ⊑ B, λ_min(B - A))`` from a single eigen-decomposition."""
    a, b = _square(a), _square(b)
    if a.shape != b.shape:
        raise ShapeMismatch(f"cannot compare {a.shape} with {b.shape}")
    tol = _psd_tol(tol)
    for name, m in (("left", a), ("right", b)):
        if not is_hermitian(m, tol):
            raise NotHermitian(f"{name} operand is not Hermitian")
    d = b - a
    if not is_hermitian(d, tol):
        return False, float("nan")
    gap = min_eigenvalue(d, tol)
    return gap >= -tol * max(1.0, frobenius(d)), gap


def loewner_leq(a, b, tol: float | None = None) -> bool:
    """``A ⊑ B`` iff ``B - A`` is positive semidefinite."""
    return loewner_gap(a, b, tol)[0]


def approx_equal(a, b, tol: float | None = None) -> bool:
    a, b = as_matrix(a), as_matrix(b)
    if a.shape != b.shape:
        return False
    tol = config.DEFAULT.eq_tol if tol is None else tol
    return float(np.linalg.norm(a - b)) <= tol * max(1.0, frobenius(a))
