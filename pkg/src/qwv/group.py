"""Finite abelian groups as products of cyclic groups.

Elements are handled as flat indices with a mixed-radix codec (first factor
most significant); tuples are accepted wherever an element is expected.
"""

from __future__ import annotations

import cmath
import math
import operator
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence


@dataclass(frozen=True)
class AbelianGroup:
    moduli: tuple[int, ...]

    def __init__(self, moduli: Sequence[int]):
        moduli = tuple(int(p) for p in moduli)
        if any(p < 1 for p in moduli):
            raise ValueError(f"moduli must be >= 1: {moduli}")
        object.__setattr__(self, "moduli", moduli)

    @property
    def order(self) -> int:
        return math.prod(self.moduli)

    def __len__(self) -> int:
        return self.order

    def elements(self) -> range:
        return range(self.order)

    def index(self, g) -> int:
        if not isinstance(g, (tuple, list)):
            g = operator.index(g)
            if not 0 <= g < self.order:
                raise ValueError(f"element index {g} out of range")
            return g
        g = tuple(g)
        if len(g) != len(self.moduli):
            raise ValueError(f"element {g} has wrong arity for {self.moduli}")
        idx = 0
        for v, p in zip(g, self.moduli):
            idx = idx * p + int(v) % p
        return idx

    def coords(self, g) -> tuple[int, ...]:
        g = self.index(g)
        out = []
        for p in reversed(self.moduli):
            g, r = divmod(g, p)
            out.append(r)
        return tuple(reversed(out))

    @property
    def zero(self) -> int:
        return 0

    def add(self, g, h) -> int:
        return self.index(tuple(a + b for a, b in zip(self.coords(g), self.coords(h))))

    def neg(self, g) -> int:
        return self.index(tuple(-a for a in self.coords(g)))

    def character(self, g, h) -> complex:
        """``χ_g(h) = Π_m e^{2πi g_m h_m / p_m}``."""
        phase = sum(a * b / p for a, b, p in zip(self.coords(g), self.coords(h), self.moduli))
        return cmath.exp(2j * math.pi * phase)

    def standard_generators(self) -> list[int]:
        gens = []
        for m in range(len(self.moduli)):
            e = [0] * len(self.moduli)
            e[m] = 1
            gens.append(self.index(tuple(e)))
        return gens

    def generate(self, gens: Iterable = ()) -> "Subgroup":
        """Smallest subgroup containing ``gens`` (closure to a fixpoint)."""
        gens = [self.index(g) for g in gens]
        members = {0}
        frontier = [0]
        while frontier:
            nxt = []
            for a in frontier:
                for g in gens:
                    b = self.add(a, g)
                    if b not in members:
                        members.add(b)
                        nxt.append(b)
            frontier = nxt
        # in a finite group, closure under + already gives closure under negation
        return Subgroup(self, tuple(sorted(members)))

    def whole(self) -> "Subgroup":
        return Subgroup(self, tuple(self.elements()))

    def trivial(self) -> "Subgroup":
        return Subgroup(self, (0,))

    def all_subgroups(self) -> list["Subgroup"]:
        """Every subgroup, found by growing generated subgroups one element at a time."""
        seen = {(0,): self.trivial()}
        frontier = [self.trivial()]
        while frontier:
            nxt = []
            for h in frontier:
                members = set(h.elements)
                for g in self.elements():
                    if g in members:
                        continue
                    k = self.generate(list(h.elements) + [g])
                    if k.elements not in seen:
                        seen[k.elements] = k
                        nxt.append(k)
            frontier = nxt
        return sorted(seen.values(), key=lambda s: (len(s), s.elements))

    def orthogonal(self, h: "Subgroup") -> "Subgroup":
        return orthogonal_subgroup(h)

    def cosets(self, h: "Subgroup") -> list["Coset"]:
        return cosets(h)


@dataclass(frozen=True)
class Subgroup:
    group: AbelianGroup
    elements: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.elements)

    def __contains__(self, g) -> bool:
        return self.group.index(g) in self._members

    @cached_property
    def _members(self) -> frozenset:
        return frozenset(self.elements)

    def is_valid(self) -> bool:
        g = self.group
        if 0 not in self._members:
            return False
        return all(g.add(a, b) in self._members and g.neg(a) in self._members
                   for a in self.elements for b in self.elements)


@dataclass(frozen=True)
class Coset:
    elements: tuple[int, ...]

    @property
    def repr(self) -> int:
        """Deterministic representative: the smallest flat index."""
        return self.elements[0]

    def __len__(self) -> int:
        return len(self.elements)

    def __contains__(self, g) -> bool:
        return g in self.elements


def orthogonal_subgroup(h: Subgroup) -> Subgroup:
    """``H⊥ = {g | χ_g(h) = 1 for all h ∈ H}``, decided with exact integer arithmetic."""
    grp = h.group
    coords_h = [grp.coords(x) for x in h.elements]
    # χ_g(h) = 1 iff Σ_m g_m h_m / p_m is an integer; clear denominators by lcm(p)
    lcm = math.lcm(*grp.moduli) if grp.moduli else 1
    out = []
    for g in grp.elements():
        cg = grp.coords(g)
        if all(sum(a * b * (lcm // p) for a, b, p in zip(cg, ch, grp.moduli)) % lcm == 0 for ch in coords_h):
            out.append(g)
    return Subgroup(grp, tuple(out))


def cosets(h: Subgroup) -> list[Coset]:
    """Partition of the group into cosets of ``h``, ordered by representative."""
    grp = h.group
    seen: set[int] = set()
    out = []
    for g in grp.elements():
        if g in seen:
            continue
        members = tuple(sorted(grp.add(g, x) for x in h.elements))
        seen.update(members)
        out.append(Coset(members))
    return out


def coset_index(h: Subgroup) -> list[int]:
    """For every group element, the index of its coset in :func:`cosets` order."""
    idx = [0] * h.group.order
    for k, c in enumerate(cosets(h)):
        for g in c.elements:
            idx[g] = k
    return idx


def parse_element(text: str, group: AbelianGroup) -> int:
    """Parse ``"(1,0)"`` or ``"3"`` into a flat index."""
    text = text.strip()
    if text.startswith("("):
        parts = [p for p in text.strip("()").split(",") if p.strip()]
        return group.index(tuple(int(p) for p in parts))
    return group.index(int(text))
