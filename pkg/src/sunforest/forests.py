"""Forest normal form and enumeration of forests on a fixed set of legs.

A forest is in normal form when no two f vertices share an edge and every
two-vertex component ``f d`` avoids putting its largest name on the f.
Those two rules are enough to remove every linear relation among forests
with at most four legs; bigger trees are left as they are.
"""

from __future__ import annotations

import itertools
from typing import Dict, Iterable, Iterator, List, Sequence, Tuple

from .diagram import Assembly, CanonicalDiagram, Diagram, Kind, canonicalize, is_forest


def components(d: Diagram) -> List[List[int]]:
    parent = list(range(len(d.vertices)))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in d.edges:
        parent[find(d.owner[a][0])] = find(d.owner[b][0])
    groups: Dict[int, List[int]] = {}
    for i in range(len(d.vertices)):
        groups.setdefault(find(i), []).append(i)
    return [sorted(g) for g in groups.values()]


def ff_edges(d: Diagram) -> List[Tuple[int, int]]:
    out = []
    for a, b in d.edges:
        u, v = d.owner[a][0], d.owner[b][0]
        if u != v and d.vertices[u].kind is Kind.F and d.vertices[v].kind is Kind.F:
            out.append((a, b))
    return out


def unsorted_fd_pairs(d: Diagram) -> List[Tuple[int, int]]:
    """Edges of two-vertex f-d components whose f holds the component's largest name."""
    out = []
    for comp in components(d):
        if len(comp) != 2:
            continue
        u, v = comp
        kinds = {d.vertices[u].kind, d.vertices[v].kind}
        if kinds != {Kind.F, Kind.D}:
            continue
        f = u if d.vertices[u].kind is Kind.F else v
        names = {d.leg_name[l]: d.owner[l][0] for i in comp for l in d.vertices[i].legs if l in d.leg_name}
        if len(names) != 4:
            continue
        if names[max(names)] == f:
            edge = next((a, b) for a, b in d.edges if d.owner[a][0] in comp)
            out.append(edge)
    return out


def is_normal_forest(d: Diagram) -> bool:
    return is_forest(d) and not ff_edges(d) and not unsorted_fd_pairs(d)


# ---------------------------------------------------------------------------
# enumeration

def _trees(leaves: Sequence[str]) -> Iterator[List[Tuple[object, object]]]:
    """Unrooted trivalent trees with the given labelled leaves, as edge lists.

    Internal nodes are ints.  Built by inserting leaf after leaf into an
    edge, which visits each tree once.
    """
    if len(leaves) < 3:
        return
    start = [(0, ("leaf", leaves[0])), (0, ("leaf", leaves[1])), (0, ("leaf", leaves[2]))]

    def grow(edges, k, next_node):
        if k == len(leaves):
            yield edges
            return
        for i, (x, y) in enumerate(edges):
            w = next_node
            new = edges[:i] + edges[i + 1:] + [(x, w), (w, y), (w, ("leaf", leaves[k]))]
            yield from grow(new, k + 1, next_node + 1)

    yield from grow(start, 3, 1)


def _set_partitions(items: Sequence[str]) -> Iterator[List[List[str]]]:
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _set_partitions(rest):
        yield [[first]] + part
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]


def _build(blocks: List[Tuple[str, object]]) -> Diagram:
    """blocks: ('delta', (a, b)) or ('tree', (edges, kinds))."""
    asm = Assembly()
    for bi, (tag, data) in enumerate(blocks):
        if tag == "delta":
            a, b = data
            asm.name(("n", a), a)
            asm.name(("n", b), b)
            asm.wire(("n", a), ("n", b))
            continue
        edges, kinds = data
        incident: Dict[int, List] = {}
        for j, (x, y) in enumerate(edges):
            for end, other in ((x, y), (y, x)):
                if isinstance(end, int):
                    incident.setdefault(end, []).append((j, other))
        for node in sorted(incident):
            asm.vertex(kinds[node], [("s", bi, j, node) for j, _ in incident[node]])
        for j, (x, y) in enumerate(edges):
            ends = []
            for end in (x, y):
                if isinstance(end, int):
                    ends.append(("s", bi, j, end))
                else:
                    asm.name(("n", end[1]), end[1])
                    ends.append(("n", end[1]))
            asm.wire(*ends)
    diagram, _ = asm.build()
    return diagram


def enumerate_forests(names: Iterable[str], max_vertices: int, normal: bool = True) -> List[CanonicalDiagram]:
    """All forests on exactly these external names with at most ``max_vertices`` vertices.

    Returned as sorted canonical representatives; vanishing forests and,
    with ``normal``, forests outside the normal form are skipped.
    """
    names = sorted(names)
    seen = set()
    out = []
    for part in _set_partitions(names):
        if any(len(b) == 1 for b in part):
            continue
        if sum(len(b) - 2 for b in part if len(b) >= 3) > max_vertices:
            continue
        choices = []
        for b in part:
            if len(b) == 2:
                choices.append([("delta", tuple(b))])
                continue
            opts = []
            for edges in _trees(b):
                nodes = sorted({x for e in edges for x in e if isinstance(x, int)})
                for ks in itertools.product((Kind.D, Kind.F), repeat=len(nodes)):
                    opts.append(("tree", (edges, dict(zip(nodes, ks)))))
            choices.append(opts)
        for combo in itertools.product(*choices):
            d = _build(list(combo))
            if normal and not is_normal_forest(d):
                continue
            key, sign = canonicalize(d)
            if sign == 0 or key in seen:
                continue
            seen.add(key)
            out.append(key)
    return sorted(out)
