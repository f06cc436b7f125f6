import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from corpus import random_loop_diagram
from reencode import reencode
from sunforest.diagram import (
    Kind,
    MalformedDiagram,
    build_diagram,
    canonicalize,
    cycle_vertices,
    cyclomatic_number,
    is_forest,
    minimal_cycle,
)
from sunforest.notation import build_term, parse_expression
from sunforest.reducer import measure


def diagram(text):
    (key,) = list(parse_expression(text))
    return key.diagram


def test_build_rejects_bad_pieces():
    with pytest.raises(MalformedDiagram):
        build_diagram([("d", (0, 1, 2))], [(0, 1)])  # leg 2 dangles
    with pytest.raises(MalformedDiagram):
        build_diagram([("d", (0, 1, 2)), ("d", (2, 3, 4))])
    with pytest.raises(MalformedDiagram):
        build_diagram([("d", (0, 1, 2))], [], {"i": 0, "j": 1, "k": 5})


def test_f_transposition_flips_sign():
    a, sa = canonicalize(diagram("f(i,j,k)"))
    b, sb = canonicalize(build_term([("f", ["j", "i", "k"])])[0])
    assert a == b and sa == -sb
    c, sc = canonicalize(build_term([("f", ["j", "k", "i"])])[0])
    assert c == a and sc == sa


def test_d_is_symmetric():
    a, sa = canonicalize(build_term([("d", ["i", "j", "k"])])[0])
    b, sb = canonicalize(build_term([("d", ["k", "i", "j"])])[0])
    assert a == b and sa == sb == 1


def test_odd_automorphism_vanishes():
    # f contracted symmetrically against d is zero
    d, _ = build_term([("f", ["k", "l", "i"]), ("d", ["k", "l", "j"])])
    assert canonicalize(d)[1] == 0
    assert parse_expression("f(k,l,i) d(k,l,j)").is_zero()


def test_cycle_helpers():
    tri = diagram("d(i,a,b) d(a,c,j) d(b,c,k)")
    assert cyclomatic_number(tri) == 1
    assert len(minimal_cycle(tri)) == 3
    assert len(cycle_vertices(tri)) == 3
    tree = diagram("d(i,j,a) f(a,k,l)")
    assert is_forest(tree) and minimal_cycle(tree) is None


def test_measure_examples():
    assert measure(diagram("d(i,j,a) d(a,k,b) d(b,l,m)")) == (0, 0, 3)
    assert measure(diagram("d(i,a,b) d(a,c,j) d(b,c,k)")) == (3, 0, 3)
    assert measure(diagram("f(i,a,b) d(b,c,j) f(c,e,k) d(e,a,l)")) == (4, 2, 4)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**9))
def test_canonical_form_is_invariant(seed):
    rng = random.Random(seed)
    d, _ = random_loop_diagram(rng)
    key, sign = canonicalize(d)
    for _ in range(5):
        other, s = reencode(d, rng)
        k2, s2 = canonicalize(other)
        assert k2 == key
        assert s2 == sign * s
    again, s3 = canonicalize(key.diagram)
    assert again == key and s3 in (1, 0)
