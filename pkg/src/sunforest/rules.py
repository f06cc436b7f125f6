"""Local rewrite moves on two-vertex clusters and small cycles.

Each move cuts out one or two vertices and glues in replacement pieces,
hooking them to the cut legs.  Writing the f vertex with the cut edge last,
``f(p,q,k)``, and the neighbour with the cut edge first, ``x(k,r,s)``:

    f(p,q,k) f(k,r,s) = 2/N (dl(p,r) dl(q,s) - dl(p,s) dl(q,r))
                        + d(p,r,k) d(k,q,s) - d(p,s,k) d(k,q,r)
    f(p,q,k) d(k,r,s) = -f(p,r,k) d(k,q,s) - f(p,s,k) d(k,q,r)

and the first identity read backwards turns a d-d edge into an f-f edge.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

from .coefficient import ADJOINT_DIM, Coefficient, N, ONE
from .diagram import Diagram, Kind, minimal_cycle, splice
from .expression import Expression

RawTerms = List[Tuple[Coefficient, Diagram]]


class NotAnFFEdge(ValueError):
    pass


class NotAnFDEdge(ValueError):
    pass


class NotADDEdge(ValueError):
    pass


class RuleId(str, enum.Enum):
    FF_CONTRACT = "FF_CONTRACT"
    JACOBI_MOVE = "JACOBI_MOVE"
    FF_EXPAND = "FF_EXPAND"
    ATOMIC_SIMPLIFY = "ATOMIC_SIMPLIFY"


@dataclass(frozen=True, eq=False)
class RuleApplication:
    rule_id: RuleId
    site: tuple
    input: Diagram
    output: Expression

    @property
    def input_expression(self) -> Expression:
        return Expression.from_diagram(self.input)


# Two-vertex bubble values, fixed once from the numeric fit (see tests).
DD_BUBBLE = N - 4 / N  # d(i,k,l) d(j,k,l) = (N^2-4)/N delta(i,j)
FF_BUBBLE = N          # f(i,k,l) f(j,k,l) = N delta(i,j)
DF_BUBBLE = Coefficient.const(0)


class _NoChange:
    def __repr__(self):
        return "NoChange"

    def __bool__(self):
        return False


NoChange = _NoChange()


# ---------------------------------------------------------------------------
# helpers

def _rotate(legs: Sequence[int], last: int) -> Tuple[int, int, int]:
    """Cyclic rotation of ``legs`` ending in ``last``."""
    legs = list(legs)
    i = legs.index(last)
    return tuple(legs[i + 1:] + legs[:i + 1])


def _start(legs: Sequence[int], first: int) -> Tuple[int, int, int]:
    legs = list(legs)
    i = legs.index(first)
    return tuple(legs[i:] + legs[:i])


def _edge_site(d: Diagram, edge) -> Tuple[int, int, int, int]:
    a, b = edge
    if d.partner.get(a) != b:
        raise ValueError(f"legs {a},{b} are not an internal edge")
    u, v = d.owner[a][0], d.owner[b][0]
    if u == v:
        raise ValueError("edge is a self-loop")
    return u, v, a, b


def _pieces(d: Diagram, remove, drop, pieces) -> RawTerms:
    """Splice each ``(coeff, [(kind, (leg, leg, leg)), ...], [(leg, leg), ...])``.

    Legs in a piece refer to legs of the removed vertices; the literal
    ``"k"`` marks the fresh internal edge between the two new vertices.
    """
    out = []
    for coeff, verts, deltas in pieces:
        new_vertices = []
        wires = []
        for j, (kind, legs) in enumerate(verts):
            toks = [("new", j, s) if leg == "k" else ("port", leg) for s, leg in enumerate(legs)]
            new_vertices.append((kind, toks))
        ks = [("new", j, s) for j, (_, legs) in enumerate(verts) for s, leg in enumerate(legs) if leg == "k"]
        if ks:
            wires.append(tuple(ks))
        for a, b in deltas:
            wires.append((("port", a), ("port", b)))
        diagram, loops = splice(d, remove, new_vertices, wires, drop)
        out.append((coeff * ADJOINT_DIM ** loops, diagram))
    return out


def to_expression(terms: RawTerms) -> Expression:
    return Expression.from_terms(terms)


# ---------------------------------------------------------------------------
# f-f contraction and its inverse

def ff_contraction_terms(d: Diagram, edge) -> RawTerms:
    u, v, a, b = _edge_site(d, edge)
    if d.vertices[u].kind is not Kind.F or d.vertices[v].kind is not Kind.F:
        raise NotAnFFEdge(edge)
    p, q, _ = _rotate(list(d.vertices[u].legs), a)
    r, s = _rotate(list(d.vertices[v].legs), b)[:2]
    two_n = 2 / N
    return _pieces(d, (u, v), [edge], [
        (two_n, [], [(p, r), (q, s)]),
        (-two_n, [], [(p, s), (q, r)]),
        (ONE, [(Kind.D, (p, r, "k")), (Kind.D, ("k", q, s))], []),
        (-ONE, [(Kind.D, (p, s, "k")), (Kind.D, ("k", q, r))], []),
    ])


def apply_ff_contraction(d: Diagram, edge) -> Expression:
    """Replace an f-f edge by d-d edges and delta pairs."""
    return to_expression(ff_contraction_terms(d, edge))


def ff_expansion_terms(d: Diagram, edge, ff_pair) -> RawTerms:
    """Rewrite a d-d edge; ``ff_pair`` = (leg on one d, leg on the other) joined by the new f."""
    u, v, a, b = _edge_site(d, edge)
    if d.vertices[u].kind is not Kind.D or d.vertices[v].kind is not Kind.D:
        raise NotADDEdge(edge)
    x, y = ff_pair
    if d.owner.get(x, (None,))[0] == v:
        x, y = y, x
    ux = [l for l in d.vertices[u].legs if l != a]
    vy = [l for l in d.vertices[v].legs if l != b]
    if x not in ux or y not in vy:
        raise ValueError("ff_pair must hold one outer leg of each vertex")
    x2 = next(l for l in ux if l != x)
    y2 = next(l for l in vy if l != y)
    two_n = 2 / N
    return _pieces(d, (u, v), [edge], [
        (ONE, [(Kind.F, (x, y, "k")), (Kind.F, ("k", x2, y2))], []),
        (ONE, [(Kind.D, (x, y2, "k")), (Kind.D, ("k", x2, y))], []),
        (-two_n, [], [(x, x2), (y, y2)]),
        (two_n, [], [(x, y2), (x2, y)]),
    ])


def apply_ff_expansion(d: Diagram, edge, ff_pair) -> Expression:
    return to_expression(ff_expansion_terms(d, edge, ff_pair))


# ---------------------------------------------------------------------------
# moving an f across a d

def jacobi_terms(d: Diagram, edge, pivot: Optional[int] = None) -> RawTerms:
    u, v, a, b = _edge_site(d, edge)
    ku, kv = d.vertices[u].kind, d.vertices[v].kind
    if {ku, kv} != {Kind.F, Kind.D}:
        raise NotAnFDEdge(edge)
    if ku is Kind.D:
        u, v, a, b = v, u, b, a
    p, q, _ = _rotate(list(d.vertices[u].legs), a)
    r, s = [l for l in d.vertices[v].legs if l != b]
    if pivot is None:
        pivot = p
    if pivot == p:
        return _pieces(d, (u, v), [(a, b)], [
            (-ONE, [(Kind.F, (p, r, "k")), (Kind.D, ("k", q, s))], []),
            (-ONE, [(Kind.F, (p, s, "k")), (Kind.D, ("k", q, r))], []),
        ])
    if pivot == q:
        return _pieces(d, (u, v), [(a, b)], [
            (ONE, [(Kind.F, (q, r, "k")), (Kind.D, ("k", p, s))], []),
            (ONE, [(Kind.F, (q, s, "k")), (Kind.D, ("k", p, r))], []),
        ])
    raise ValueError("pivot must be an outer leg of the f vertex")


def apply_jacobi_move(d: Diagram, edge, pivot: Optional[int] = None) -> Expression:
    """Move the f across the d.

    ``pivot`` is the f leg that stays on the f.  The default is the leg
    right after the edge in the f's cyclic order.
    """
    return to_expression(jacobi_terms(d, edge, pivot))


# ---------------------------------------------------------------------------
# tadpoles and bubbles

def atomic_terms(d: Diagram) -> Optional[RawTerms]:
    """One tadpole or bubble removal, or None if there is none."""
    cyc = minimal_cycle(d)
    if cyc is None or len(cyc) > 2:
        return None
    if len(cyc) == 1:
        return []
    u, v = cyc
    ku, kv = d.vertices[u].kind, d.vertices[v].kind
    between = [(a, b) for a, b in d.edges if {d.owner[a][0], d.owner[b][0]} == {u, v}]
    e1, e2 = between[0], between[1]
    if ku is not kv:
        return []
    legs_u = list(d.vertices[u].legs)
    legs_v = list(d.vertices[v].legs)
    ua1, ua2 = (e1[0] if e1[0] in legs_u else e1[1]), (e2[0] if e2[0] in legs_u else e2[1])
    vb1, vb2 = d.partner[ua1], d.partner[ua2]
    p = next(l for l in legs_u if l not in (ua1, ua2))
    r = next(l for l in legs_v if l not in (vb1, vb2))
    if ku is Kind.D:
        c = DD_BUBBLE
    else:
        # f(p, x1, x2) f(r, y1, y2) with x_i glued to y_i gives +N
        su = 1 if _start(legs_u, p)[1:] == (ua1, ua2) else -1
        sv = 1 if _start(legs_v, r)[1:] == (vb1, vb2) else -1
        c = FF_BUBBLE * (su * sv)
    if len(between) == 3:  # theta graph: p and r are glued too
        return [(c * ADJOINT_DIM, _empty_like(d, (u, v)))]
    return _pieces(d, (u, v), [e1, e2], [(c, [], [(p, r)])])


def _empty_like(d: Diagram, remove) -> Diagram:
    diagram, _ = splice(d, remove, [], [], [e for e in d.edges
                                           if d.owner[e[0]][0] in remove and d.owner[e[1]][0] in remove])
    return diagram


def atomic_simplify(d: Diagram):
    """Remove tadpoles and bubbles until none remain; NoChange if there were none."""
    first = atomic_terms(d)
    if first is None:
        return NoChange
    pending = list(first)
    done: RawTerms = []
    for _ in range(max(1, len(d.vertices))):
        if not pending:
            break
        nxt = []
        for c, t in pending:
            step = atomic_terms(t)
            if step is None:
                done.append((c, t))
            else:
                nxt.extend((c * c2, t2) for c2, t2 in step)
        pending = nxt
    done.extend(pending)
    return to_expression(done)
