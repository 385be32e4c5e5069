import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import properties
from qwv.group import AbelianGroup, coset_index, cosets, orthogonal_subgroup, parse_element


def test_codec_and_arithmetic():
    g = AbelianGroup([3, 2])
    assert g.order == 6 and g.index((2, 1)) == 5 and g.coords(5) == (2, 1)
    assert g.add((2, 1), (2, 1)) == g.index((1, 0))
    assert g.neg((1, 1)) == g.index((2, 1))
    assert np.isclose(g.character((1, 0), (1, 0)), np.exp(2j * np.pi / 3))
    assert parse_element("(1,1)", g) == 3 and parse_element("4", g) == 4
    with pytest.raises(ValueError):
        g.index((1, 2, 3))
    with pytest.raises(ValueError):
        g.index(6)


def test_generate_examples():
    z22 = AbelianGroup([2, 2])
    h = z22.generate([(1, 1)])
    assert h.elements == (0, 3) and h.is_valid()
    assert z22.generate([]).elements == (0,)
    assert len(z22.generate(z22.standard_generators())) == 4
    assert len(AbelianGroup([6]).generate([2])) == 3


def test_z2z2_subgroups_and_duals():
    z22 = AbelianGroup([2, 2])
    subs = z22.all_subgroups()
    assert [len(s) for s in subs] == [1, 2, 2, 2, 4]
    h = z22.generate([(1, 1)])
    assert orthogonal_subgroup(h).elements == (0, 3)
    assert orthogonal_subgroup(z22.generate([(1, 0)])).elements == (0, 1)
    assert orthogonal_subgroup(z22.trivial()) == z22.whole()
    assert orthogonal_subgroup(z22.whole()) == z22.trivial()


def test_cosets_partition():
    g = AbelianGroup([3, 2])
    h = g.generate([(0, 1)])
    cs = cosets(h)
    assert [c.repr for c in cs] == [0, 2, 4]
    assert sorted(x for c in cs for x in c.elements) == list(range(6))
    assert coset_index(h) == [0, 0, 1, 1, 2, 2]
    assert orthogonal_subgroup(h).elements == (0, 2, 4)


def test_subgroup_counts_for_cyclic():
    # a cyclic group has exactly one subgroup per divisor of its order
    for n in [1, 6, 12]:
        assert len(AbelianGroup([n]).all_subgroups()) == sum(1 for d in range(1, n + 1) if n % d == 0)


@settings(max_examples=40, deadline=None)
@given(moduli=st.lists(st.integers(2, 4), min_size=1, max_size=3), data=st.data())
def test_orthogonal_invariants(moduli, data):
    g = AbelianGroup(moduli)
    gens = data.draw(st.lists(st.integers(0, g.order - 1), max_size=3))
    h = g.generate(gens)
    hp = orthogonal_subgroup(h)
    assert h.is_valid() and hp.is_valid()
    assert len(h) * len(hp) == g.order
    assert orthogonal_subgroup(hp) == h
    assert all(abs(g.character(a, x) - 1) < 1e-12 for a in hp.elements for x in h.elements)


def test_character_and_coset_identities():
    worst, pairs = properties.group_identities(max_order=12, seed=3)
    assert worst <= 1e-10 and pairs > 20
