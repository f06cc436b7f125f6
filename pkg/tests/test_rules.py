import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from corpus import random_loop_diagram
from sunforest.diagram import Kind
from sunforest.notation import build_term, parse_expression
from sunforest.oracle import verify_equal
from sunforest.rules import (
    NoChange,
    NotADDEdge,
    NotAnFDEdge,
    NotAnFFEdge,
    apply_ff_contraction,
    apply_ff_expansion,
    apply_jacobi_move,
    atomic_simplify,
)


def diagram(text):
    (key,) = list(parse_expression(text))
    return key.diagram


def edges_of(d, kinds):
    return [(a, b) for a, b in d.edges
            if d.owner[a][0] != d.owner[b][0]
            and {d.vertices[d.owner[a][0]].kind, d.vertices[d.owner[b][0]].kind} == kinds]


def test_ff_contraction_matches_identity():
    d = diagram("f(a,b,k) f(k,c,e)")
    out = apply_ff_contraction(d, d.edges[0])
    rhs = parse_expression("(2/N)*delta(a,c) delta(b,e) - (2/N)*delta(a,e) delta(b,c)"
                           " + d(a,c,m) d(m,b,e) - d(a,e,m) d(m,b,c)")
    assert out == rhs


def test_jacobi_both_pivots():
    d = diagram("f(a,b,k) d(k,c,e)")
    (a, b), = d.edges
    f = next(i for i, v in enumerate(d.vertices) if v.kind is Kind.F)
    outer = [l for l in d.vertices[f].legs if l not in (a, b)]
    for pivot in outer:
        out = apply_jacobi_move(d, (a, b), pivot)
        assert verify_equal(d, out, ns=(2, 3, 4))
        assert all(k.diagram.f_count() == 1 for k in out)
    with pytest.raises(ValueError):
        apply_jacobi_move(d, (a, b), pivot=a if d.owner[a][0] != f else b)


def test_wrong_edge_kinds():
    ff = diagram("f(a,b,k) f(k,c,e)")
    dd = diagram("d(a,b,k) d(k,c,e)")
    with pytest.raises(NotAnFFEdge):
        apply_ff_contraction(dd, dd.edges[0])
    with pytest.raises(NotAnFDEdge):
        apply_jacobi_move(ff, ff.edges[0])
    with pytest.raises(NotADDEdge):
        apply_ff_expansion(ff, ff.edges[0], (ff.edges[0][0], ff.edges[0][1]))


def test_ff_expansion_every_pairing():
    d = diagram("d(a,b,k) d(k,c,e)")
    (a, b), = d.edges
    u, v = d.owner[a][0], d.owner[b][0]
    for x in [l for l in d.vertices[u].legs if l != a]:
        for y in [l for l in d.vertices[v].legs if l != b]:
            out = apply_ff_expansion(d, (a, b), (x, y))
            assert verify_equal(d, out, ns=(3, 4))


def test_atomic_simplify():
    assert atomic_simplify(diagram("d(i,j,k)")) is NoChange
    assert atomic_simplify(diagram("d(i,a,a)")).is_zero()
    assert atomic_simplify(diagram("f(i,k,l) f(j,k,l)")) == parse_expression("N*delta(i,j)")
    flipped, _ = build_term([("f", ["i", "k", "l"]), ("f", ["j", "l", "k"])])
    assert atomic_simplify(flipped) == parse_expression("-N*delta(i,j)")
    chain = diagram("d(i,a,b) d(a,b,c) d(c,x,y) d(x,y,j)")
    assert atomic_simplify(chain) == parse_expression("(N - 4/N)^2*delta(i,j)")


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 10**9))
def test_every_rule_is_sound_on_random_sites(seed):
    rng = random.Random(seed)
    d, _ = random_loop_diagram(rng, max_vertices=6)
    checks = []
    for e in edges_of(d, {Kind.F}):
        checks.append(apply_ff_contraction(d, e))
    for e in edges_of(d, {Kind.F, Kind.D}):
        checks.append(apply_jacobi_move(d, e))
    for a, b in edges_of(d, {Kind.D}):
        u, v = d.owner[a][0], d.owner[b][0]
        x = rng.choice([l for l in d.vertices[u].legs if l != a])
        y = rng.choice([l for l in d.vertices[v].legs if l != b])
        checks.append(apply_ff_expansion(d, (a, b), (x, y)))
    simple = atomic_simplify(d)
    if simple is not NoChange:
        checks.append(simple)
    for out in checks:
        assert verify_equal(d, out, ns=(3,), samples=50, tol=1e-9)
