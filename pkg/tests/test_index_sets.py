import itertools
import math

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from christoffel_ls.index_sets import IndexSet, build_index_set, graded_lex_key, is_lower, parse_index_set


def brute(kind, d, p, a=None):
    a = a or [1.0] * d
    out = []
    for nu in itertools.product(range(int(p) + 1), repeat=d):
        if kind == "tp":
            ok = all(v <= p / ak for v, ak in zip(nu, a))
        elif kind == "td":
            ok = sum(ak * v for v, ak in zip(nu, a)) <= p + 1e-12
        elif kind == "hc":
            ok = math.prod((v + 1) ** ak for v, ak in zip(nu, a)) <= p + 1 + 1e-12
        else:
            ok = sum((v + 1) ** ak for v, ak in zip(nu, a)) <= p + 1 + 1e-12
        if ok:
            out.append(nu)
    return set(out)


@pytest.mark.parametrize("kind", ["tp", "td", "hc", "hcsum"])
@pytest.mark.parametrize("d,p", [(1, 6), (2, 5), (3, 4)])
def test_matches_brute_force(kind, d, p):
    assert set(build_index_set(kind, d, p)) == brute(kind, d, p)


@pytest.mark.parametrize("d,p", [(1, 9), (2, 7), (3, 5), (5, 3)])
def test_td_size_is_binomial(d, p):
    assert len(build_index_set("td", d, p)) == math.comb(d + p, d)


def test_tp_size():
    assert len(build_index_set("tp", 3, 2)) == 27


def test_anisotropic_td():
    S = build_index_set("td", 2, 4, a=[1, 2])
    assert set(S) == brute("td", 2, 4, [1, 2])
    assert (0, 3) not in S and (4, 0) in S


def test_ordering_is_graded_lex():
    S = build_index_set("td", 2, 2)
    assert S.indices == ((0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2))
    keys = [graded_lex_key(nu) for nu in S]
    assert keys == sorted(keys)


def test_position_and_contains():
    S = build_index_set("hc", 2, 6)
    for i, nu in enumerate(S):
        assert S.position(nu) == i
    assert (9, 9) not in S


def test_parse_index_set():
    S = parse_index_set("td:3:a=1,2", 2)
    assert S == build_index_set("td", 2, 3, a=[1, 2])
    with pytest.raises(ValueError):
        parse_index_set("td", 2)
    with pytest.raises(ValueError):
        parse_index_set("zz:3", 2)


def test_cap_and_empty():
    with pytest.raises(OverflowError):
        build_index_set("tp", 6, 9, cap=1000)
    with pytest.raises(ValueError):
        build_index_set("hcsum", 3, 0)


def test_is_lower_detects_holes():
    assert not is_lower(IndexSet.from_indices([(0, 0), (2, 0)]))
    assert is_lower(IndexSet.from_indices([(0, 0), (1, 0), (0, 1), (1, 1)]))


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(["tp", "td", "hc", "hcsum"]), st.integers(1, 4), st.integers(0, 6))
def test_generated_sets_are_lower(kind, d, p):
    # the additive cross sum_k (nu_k + 1) <= p + 1 is empty below p = d - 1
    assume(kind != "hcsum" or p >= d - 1)
    S = build_index_set(kind, d, p)
    assert is_lower(S)
    assert len(set(S)) == len(S)
    assert S.indices[0] == (0,) * d


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(["td", "hc"]), st.integers(1, 3), st.integers(0, 5))
def test_nested_in_p(kind, d, p):
    assert build_index_set(kind, d, p).is_subset(build_index_set(kind, d, p + 1))
