import warnings

import pytest
from hypothesis import given, strategies as st

from siegellab.errors import ResourceGuardError, ValidationError
from siegellab.rootsys import (
    DynkinDiagram,
    ParabolicSubset,
    build_root_datum,
    classified_cartan_determinant,
    is_l1_integrable,
    is_linf_integrable,
    l2_necessary_full_test,
    l2_necessary_neighbor_test,
    parabolic,
    reflection_levi_inclusion_check,
)

SMALL_TYPES = [("A", 1), ("A", 2), ("A", 3), ("A", 4), ("B", 2), ("B", 3), ("C", 3), ("D", 4), ("G", 2), ("F", 4)]


@pytest.mark.parametrize("t,r,count", [("A", 1, 2), ("A", 2, 6), ("G", 2, 12), ("B", 3, 18), ("E", 6, 72)])
def test_root_counts(t, r, count):
    assert len(build_root_datum(t, r).roots) == count


@pytest.mark.parametrize("t,r", SMALL_TYPES + [("E", 6), ("E", 8)])
def test_diagram_invariants(t, r):
    d = DynkinDiagram.of(t, r)
    assert d.is_connected()
    assert d.cartan_determinant() == classified_cartan_determinant(t, r)


@pytest.mark.parametrize("t,r", SMALL_TYPES)
def test_root_set_closure(t, r):
    datum = build_root_datum(t, r)
    roots = set(datum.roots)
    assert {tuple(-x for x in b) for b in roots} == roots
    assert sum(datum.positive(b) for b in roots) == len(roots) // 2
    for s in datum.simple_actions:
        assert sorted(s) == list(range(len(roots)))
        assert all(s[s[i]] == i for i in range(len(roots)))


@pytest.mark.parametrize("t,r", [("A", 3), ("B", 3), ("G", 2)])
def test_weyl_words_are_reduced(t, r):
    datum = build_root_datum(t, r)
    elements = datum.weyl_elements()
    assert len(elements) == datum.weyl_order
    for w in elements:
        assert datum.inversion_count(w) == w.length
        assert datum.element_from_word(w.word).action == w.action


def test_invalid_pairs_rejected():
    for t, r in [("E", 5), ("G", 3), ("B", 1), ("X", 2), ("A", 0)]:
        with pytest.raises(ValidationError):
            build_root_datum(t, r)


def test_d3_warns():
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        assert len(build_root_datum("D", 3).roots) == 12
    assert caught


def test_l1():
    datum = build_root_datum("A", 3)
    assert is_l1_integrable(parabolic("A", 3, 2))
    assert not is_l1_integrable(ParabolicSubset(datum, frozenset({3})))
    assert is_l1_integrable(parabolic("A", 1, 1))


def test_linf():
    assert is_linf_integrable(parabolic("A", 1, 1))
    assert not is_linf_integrable(parabolic("A", 2, 1))
    assert not is_linf_integrable(parabolic("C", 3, 1))


def test_neighbor_test():
    assert not l2_necessary_neighbor_test(parabolic("A", 3, 2))
    assert l2_necessary_neighbor_test(parabolic("A", 3, 1))
    assert not l2_necessary_neighbor_test(parabolic("D", 4, 2))


def test_full_test_examples():
    assert l2_necessary_full_test(parabolic("A", 1, 1)).holds
    verdict = l2_necessary_full_test(parabolic("A", 3, 2))
    assert not verdict.holds
    assert verdict.witness is not None and verdict.character_rank > 0
    assert verdict.witness.word == (2,)


def test_weyl_cap_guard():
    with pytest.raises(ResourceGuardError, match="enumeration refused"):
        l2_necessary_full_test(parabolic("E", 8, 1))
    with pytest.raises(ResourceGuardError):
        l2_necessary_full_test(parabolic("A", 4, 1), weyl_cap=100)


@pytest.mark.parametrize("t,r,a", [("A", 2, 1), ("A", 3, 2), ("A", 1, 1), ("D", 4, 2), ("B", 3, 1)])
def test_reflection_levi_inclusion(t, r, a):
    assert reflection_levi_inclusion_check(parabolic(t, r, a))


@given(st.sampled_from(SMALL_TYPES[:-1]), st.integers(1, 4))
def test_full_test_implies_neighbor_test(tr, a):
    t, r = tr
    choice = parabolic(t, r, (a - 1) % r + 1)
    if l2_necessary_full_test(choice).holds:
        assert l2_necessary_neighbor_test(choice)
    if is_linf_integrable(choice):
        assert is_l1_integrable(choice)
