"""Brute-force reference semantics on the full Hilbert space of a variable table.

Written against plain index arithmetic (no labelled operators, no vectorization)
so that it shares no code path with the library's semantics engine.
"""

from __future__ import annotations

import itertools

import numpy as np

from qwv.qwhile import Abort, Cond, Init, Seq, Skip, Unitary, While


class FullSpace:
    def __init__(self, table):
        self.ids = [l.id for l in table.labels()]
        self.dims = [l.dim for l in table.labels()]
        self.D = int(np.prod(self.dims)) if self.dims else 1
        self.digits = list(itertools.product(*[range(d) for d in self.dims]))

    def _pos(self, labels):
        return [self.ids.index(l) for l in labels]

    def _sub_index(self, digits, pos):
        k = 0
        for p in pos:
            k = k * self.dims[p] + digits[p]
        return k

    def embed(self, matrix, labels) -> np.ndarray:
        """``matrix`` (on sorted ``labels``, first label most significant) tensored with identity."""
        pos = self._pos(sorted(labels))
        rest = [p for p in range(len(self.dims)) if p not in pos]
        out = np.zeros((self.D, self.D), dtype=complex)
        for i, di in enumerate(self.digits):
            for j, dj in enumerate(self.digits):
                if all(di[p] == dj[p] for p in rest):
                    out[i, j] = matrix[self._sub_index(di, pos), self._sub_index(dj, pos)]
        return out

    def reduce(self, rho, keep) -> np.ndarray:
        """Partial trace keeping sorted ``keep``."""
        pos = self._pos(sorted(keep))
        rest = [p for p in range(len(self.dims)) if p not in pos]
        d = int(np.prod([self.dims[p] for p in pos])) if pos else 1
        out = np.zeros((d, d), dtype=complex)
        for i, di in enumerate(self.digits):
            for j, dj in enumerate(self.digits):
                if all(di[p] == dj[p] for p in rest):
                    out[self._sub_index(di, pos), self._sub_index(dj, pos)] += rho[i, j]
        return out

    def reset(self, rho, labels, state) -> np.ndarray:
        """``tr_S(ρ) ⊗ state_S``."""
        pos = self._pos(sorted(labels))
        rest = [p for p in range(len(self.dims)) if p not in pos]
        traced = {}
        for i, di in enumerate(self.digits):
            for j, dj in enumerate(self.digits):
                if all(di[p] == dj[p] for p in pos):
                    key = (tuple(di[p] for p in rest), tuple(dj[p] for p in rest))
                    traced[key] = traced.get(key, 0) + rho[i, j]
        out = np.zeros_like(rho)
        for i, di in enumerate(self.digits):
            for j, dj in enumerate(self.digits):
                key = (tuple(di[p] for p in rest), tuple(dj[p] for p in rest))
                out[i, j] = traced.get(key, 0) * state[self._sub_index(di, pos), self._sub_index(dj, pos)]
        return out

    def run(self, program, rho, max_rounds: int = 20000) -> np.ndarray:
        if isinstance(program, Skip):
            return rho
        if isinstance(program, Abort):
            return np.zeros_like(rho)
        if isinstance(program, Seq):
            return self.run(program.second, self.run(program.first, rho, max_rounds), max_rounds)
        if isinstance(program, Init):
            return self.reset(rho, program.state.out, program.state.matrix)
        if isinstance(program, Unitary):
            u = self.embed(program.op.matrix, program.op.out)
            return u @ rho @ u.conj().T
        if isinstance(program, Cond):
            m = program.measurement
            total = np.zeros_like(rho)
            for outcome, branch in program.branches:
                k = self.embed(m.operator(outcome).matrix, m.labels)
                total += self.run(branch, k @ rho @ k.conj().T, max_rounds)
            return total
        if isinstance(program, While):
            m = program.measurement
            k_in = self.embed(m.operator(program.cont).matrix, m.labels)
            k_out = self.embed(m.operator(program.stop).matrix, m.labels)
            total = np.zeros_like(rho)
            cur = rho
            for _ in range(max_rounds):
                total += k_out @ cur @ k_out.conj().T
                cur = self.run(program.body, k_in @ cur @ k_in.conj().T, max_rounds)
                if np.linalg.norm(cur) < 1e-14:
                    break
            return total
        raise TypeError(program)

    def wp(self, program, post_full) -> np.ndarray:
        """Heisenberg dual by duality: ``wp[j, i] = tr(B · ⟦C⟧(|i⟩⟨j|))``."""
        w = np.zeros((self.D, self.D), dtype=complex)
        for i in range(self.D):
            for j in range(self.D):
                e = np.zeros((self.D, self.D), dtype=complex)
                e[i, j] = 1
                w[j, i] = np.trace(post_full @ self.run(program, e))
        return w
