"""Birdtrack diagrams of d/f vertices, canonical forms and cycle structure.

A diagram is a trivalent multigraph.  Every vertex carries three legs; a leg
is either glued to another leg (an internal edge, i.e. a summed index) or is
an external index with a name.  Bare Kronecker deltas between two external
names are kept as ``deltas``.  The f vertex stores its legs in cyclic order;
reversing that order flips the sign of the tensor.
"""

from __future__ import annotations

import enum
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, Hashable, Iterable, List, Mapping, Optional, Sequence, Tuple


class MalformedDiagram(ValueError):
    pass


class Kind(str, enum.Enum):
    D = "d"
    F = "f"

    def __repr__(self) -> str:
        return self.value


@dataclass(frozen=True)
class Vertex:
    kind: Kind
    legs: Tuple[int, int, int]

    def __post_init__(self):
        if len(self.legs) != 3:
            raise MalformedDiagram(f"vertex needs exactly 3 legs, got {self.legs}")
        object.__setattr__(self, "kind", Kind(self.kind))
        object.__setattr__(self, "legs", tuple(self.legs))


def _pair(a, b):
    return (a, b) if a <= b else (b, a)


@dataclass(frozen=True, eq=False)
class Diagram:
    """Validated, immutable birdtrack.  Build with :func:`build_diagram`."""

    vertices: Tuple[Vertex, ...]
    edges: Tuple[Tuple[int, int], ...]
    externals: Tuple[Tuple[str, int], ...]
    deltas: Tuple[Tuple[str, str], ...] = ()

    # -- lookups ------------------------------------------------------------
    @cached_property
    def owner(self) -> Dict[int, Tuple[int, int]]:
        """leg -> (vertex index, slot)."""
        return {leg: (i, s) for i, v in enumerate(self.vertices) for s, leg in enumerate(v.legs)}

    @cached_property
    def partner(self) -> Dict[int, int]:
        out = {}
        for a, b in self.edges:
            out[a] = b
            out[b] = a
        return out

    @cached_property
    def leg_name(self) -> Dict[int, str]:
        return {leg: name for name, leg in self.externals}

    @cached_property
    def external_names(self) -> frozenset:
        names = {name for name, _ in self.externals}
        for a, b in self.deltas:
            names.update((a, b))
        return frozenset(names)

    def target(self, leg: int):
        """Where a leg goes: ``('leg', other)`` or ``('name', name)``."""
        if leg in self.partner:
            return ("leg", self.partner[leg])
        return ("name", self.leg_name[leg])

    def neighbors(self, i: int) -> List[Optional[int]]:
        """Neighbor vertex per slot of vertex i (None for external legs)."""
        out = []
        for leg in self.vertices[i].legs:
            other = self.partner.get(leg)
            out.append(None if other is None else self.owner[other][0])
        return out

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    def f_count(self, subset: Optional[Iterable[int]] = None) -> int:
        idx = range(len(self.vertices)) if subset is None else subset
        return sum(1 for i in idx if self.vertices[i].kind is Kind.F)

    def __repr__(self) -> str:
        parts = []
        names = {}
        for a, b in self.edges:
            names[a] = names[b] = f"k{a}"
        names.update({leg: n for n, leg in self.externals})
        for v in self.vertices:
            parts.append(f"{v.kind.value}({','.join(names[l] for l in v.legs)})")
        parts.extend(f"delta({a},{b})" for a, b in self.deltas)
        return "Diagram<" + " ".join(parts) + ">"


def build_diagram(vertices: Sequence, internal_edges: Iterable = (), external_legs: Mapping[str, int] | Iterable = (),
                  delta_edges: Iterable = ()) -> Diagram:
    """Validate raw pieces and return a :class:`Diagram`.

    ``vertices`` holds :class:`Vertex` objects or ``(kind, legs)`` pairs.
    """
    verts = tuple(v if isinstance(v, Vertex) else Vertex(Kind(v[0]), tuple(v[1])) for v in vertices)
    slots = Counter(leg for v in verts for leg in v.legs)
    dup = [leg for leg, c in slots.items() if c > 1]
    if dup:
        raise MalformedDiagram(f"legs used by more than one vertex slot: {sorted(dup)}")
    pairs = list(external_legs.items()) if isinstance(external_legs, Mapping) else list(external_legs)
    ext = dict(pairs)
    if len(ext) != len(pairs):
        raise MalformedDiagram("duplicate external name")
    used = Counter()
    edges = []
    for a, b in internal_edges:
        edges.append(_pair(a, b))
        used[a] += 1
        used[b] += 1
    for name, leg in ext.items():
        used[leg] += 1
    deltas = tuple(sorted(_pair(a, b) for a, b in delta_edges))
    for leg, c in used.items():
        if leg not in slots:
            raise MalformedDiagram(f"leg {leg} is not a vertex slot")
        if c > 1:
            raise MalformedDiagram(f"leg {leg} used more than once")
    dangling = [leg for leg in slots if used[leg] == 0]
    if dangling:
        raise MalformedDiagram(f"dangling legs {sorted(dangling)}")
    names = Counter(ext.keys())
    for a, b in deltas:
        names[a] += 1
        names[b] += 1
    bad = [n for n, c in names.items() if c > 1]
    if bad:
        raise MalformedDiagram(f"duplicate external names {sorted(bad)}")
    return Diagram(verts, tuple(sorted(edges)), tuple(sorted(ext.items())), deltas)


# ---------------------------------------------------------------------------
# assembly from wires

@dataclass
class Assembly:
    """Scratch space for building diagrams out of terminals and wires.

    Vertex slots and external names are terminals that must end up with
    exactly one connection; any other token is a pass-through point (an index
    occurrence, a cut port, a delta end) and must be touched by exactly two
    wires.  Closed chains of pass-through tokens are delta loops.
    """

    vertices: List[Tuple[Kind, Tuple[Hashable, Hashable, Hashable]]] = field(default_factory=list)
    wires: List[Tuple[Hashable, Hashable]] = field(default_factory=list)
    names: Dict[Hashable, str] = field(default_factory=dict)

    def vertex(self, kind, tokens) -> None:
        self.vertices.append((Kind(kind), tuple(tokens)))

    def wire(self, a, b) -> None:
        self.wires.append((a, b))

    def name(self, token, name: str) -> None:
        self.names[token] = name

    def build(self) -> Tuple[Diagram, int]:
        """Return the diagram and the number of closed delta loops."""
        adj = defaultdict(list)
        for k, (a, b) in enumerate(self.wires):
            adj[a].append((k, b))
            adj[b].append((k, a))
        slot_leg = {}
        for i, (_, toks) in enumerate(self.vertices):
            for s, t in enumerate(toks):
                if t in slot_leg:
                    raise MalformedDiagram(f"token {t!r} used by two vertex slots")
                slot_leg[t] = 3 * i + s
        terminals = set(slot_leg) | set(self.names)
        for t in terminals:
            if len(adj[t]) != 1:
                raise MalformedDiagram(f"terminal {t!r} has {len(adj[t])} connections")
        for t, lst in adj.items():
            if t not in terminals and len(lst) != 2:
                raise MalformedDiagram(f"pass-through {t!r} has {len(lst)} connections")
        seen_wires = set()
        edges, externals, deltas = [], [], []
        for start in sorted(terminals, key=repr):
            k, nxt = adj[start][0]
            if k in seen_wires:
                continue
            prev = start
            cur, wk = nxt, k
            seen_wires.add(wk)
            while cur not in terminals:
                (k1, a1), (k2, a2) = adj[cur]
                if k1 == wk and (k2 != wk):
                    wk, nxt = k2, a2
                elif k2 == wk and k1 != wk:
                    wk, nxt = k1, a1
                else:
                    # both wires identical: a token wired to itself
                    raise MalformedDiagram(f"degenerate wiring at {cur!r}")
                seen_wires.add(wk)
                prev, cur = cur, nxt
            a, b = start, cur
            if a in slot_leg and b in slot_leg:
                edges.append((slot_leg[a], slot_leg[b]))
            elif a in slot_leg:
                externals.append((self.names[b], slot_leg[a]))
            elif b in slot_leg:
                externals.append((self.names[a], slot_leg[b]))
            else:
                deltas.append((self.names[a], self.names[b]))
        loops = 0
        for k, (a, b) in enumerate(self.wires):
            if k in seen_wires:
                continue
            # walk a closed chain
            loops += 1
            seen_wires.add(k)
            prev_k, cur = k, b
            while True:
                (k1, a1), (k2, a2) = adj[cur]
                nk, nxt = (k2, a2) if k1 == prev_k else (k1, a1)
                if nk in seen_wires:
                    break
                seen_wires.add(nk)
                prev_k, cur = nk, nxt
        verts = [Vertex(kind, (3 * i, 3 * i + 1, 3 * i + 2)) for i, (kind, _) in enumerate(self.vertices)]
        return build_diagram(verts, edges, externals, deltas), loops


def splice(diagram: Diagram, remove: Iterable[int], new_vertices: Sequence = (), wires: Sequence = (),
           drop_edges: Iterable[Tuple[int, int]] = ()) -> Tuple[Diagram, int]:
    """Replace the vertices ``remove`` by new pieces.

    Legs of removed vertices act as ports: a new vertex token or wire may
    name an old leg id (``('port', leg)``) to hook onto whatever that leg was
    attached to.  ``drop_edges`` lists internal edges between removed legs
    that the replacement consumes.
    """
    remove = set(remove)
    asm = Assembly()
    for i, v in enumerate(diagram.vertices):
        if i not in remove:
            asm.vertex(v.kind, [("old", leg) for leg in v.legs])
    for kind, toks in new_vertices:
        asm.vertex(kind, toks)
    drop = {_pair(*e) for e in drop_edges}
    removed_legs = {leg for i in remove for leg in diagram.vertices[i].legs}

    def tok(leg):
        return ("port", leg) if leg in removed_legs else ("old", leg)

    for a, b in diagram.edges:
        if (a, b) in drop:
            continue
        asm.wire(tok(a), tok(b))
    for name, leg in diagram.externals:
        asm.name(("ext", name), name)
        asm.wire(tok(leg), ("ext", name))
    for a, b in diagram.deltas:
        asm.name(("ext", a), a)
        asm.name(("ext", b), b)
        asm.wire(("ext", a), ("ext", b))
    for a, b in wires:
        asm.wire(a, b)
    return asm.build()


# ---------------------------------------------------------------------------
# canonical form

@dataclass(frozen=True, eq=False)
class CanonicalDiagram:
    """Canonical representative of an isomorphism class, keyed by encoding."""

    encoding: tuple
    diagram: Diagram

    def __eq__(self, other):
        return isinstance(other, CanonicalDiagram) and self.encoding == other.encoding

    def __hash__(self):
        return hash(self.encoding)

    def __lt__(self, other):
        return _sort_key(self.encoding) < _sort_key(other.encoding)

    def __repr__(self):
        return f"Canonical{self.diagram!r}"


def _sort_key(encoding):
    verts, deltas = encoding
    return (len(verts), verts, deltas)


def _refine(colors: List[int], adjacency: List[List[int]]) -> List[int]:
    """Colour refinement to the coarsest equitable partition (ranked colours)."""
    n_classes = len(set(colors))
    while True:
        sig = [(colors[i], tuple(sorted(colors[j] for j in adjacency[i]))) for i in range(len(colors))]
        ranks = {s: r for r, s in enumerate(sorted(set(sig)))}
        new = [ranks[s] for s in sig]
        if len(ranks) == n_classes:
            return new
        colors, n_classes = new, len(ranks)


def _encode(diagram: Diagram, order: Sequence[int]):
    pos = {v: p for p, v in enumerate(order)}
    entries = []
    for v in order:
        desc = []
        for leg in diagram.vertices[v].legs:
            other = diagram.partner.get(leg)
            if other is None:
                desc.append((1, diagram.leg_name[leg]))
            else:
                desc.append((0, pos[diagram.owner[other][0]]))
        entries.append((diagram.vertices[v].kind.value, tuple(sorted(desc))))
    return tuple(entries), diagram.deltas


def _leg_order(diagram: Diagram, order: Sequence[int]) -> Dict[int, List[int]]:
    """Canonical slot order of each vertex's legs for a vertex ordering."""
    pos = {v: p for p, v in enumerate(order)}
    slot_of = {}
    result = {}
    for v in order:
        keyed = []
        for leg in diagram.vertices[v].legs:
            other = diagram.partner.get(leg)
            if other is None:
                keyed.append(((1, diagram.leg_name[leg]), 0, leg))
                continue
            nb = diagram.owner[other][0]
            rank = slot_of[other] if nb in result else leg
            keyed.append(((0, pos[nb]), rank, leg))
        keyed.sort()
        legs = [leg for _, _, leg in keyed]
        result[v] = legs
        for s, leg in enumerate(legs):
            slot_of[leg] = s
    return result


def _cyclic_sign(stored: Sequence[int], ordered: Sequence[int]) -> int:
    rot = [tuple(stored[i:] + stored[:i]) for i in range(3)]
    return 1 if tuple(ordered) in rot else -1


def _odd_local_symmetry(diagram: Diagram) -> bool:
    """True if a self-loop on an f, or parallel edges between f and d exist."""
    multi = Counter()
    for a, b in diagram.edges:
        u, v = diagram.owner[a][0], diagram.owner[b][0]
        if u == v:
            if diagram.vertices[u].kind is Kind.F:
                return True
            continue
        multi[_pair(u, v)] += 1
    for (u, v), c in multi.items():
        if c >= 2 and diagram.vertices[u].kind is not diagram.vertices[v].kind:
            return True
    return False


def canonicalize(diagram: Diagram) -> Tuple[CanonicalDiagram, int]:
    """Return the canonical representative and the sign relating the two.

    ``diagram == sign * representative``.  The sign is 0 when the diagram has
    an automorphism that reverses an odd number of f vertices, which forces
    the tensor to vanish.
    """
    nv = len(diagram.vertices)
    adjacency = [[nb for nb in diagram.neighbors(i) if nb is not None and nb != i] for i in range(nv)]
    init = []
    for i, v in enumerate(diagram.vertices):
        names = tuple(sorted(diagram.leg_name[l] for l in v.legs if l in diagram.leg_name))
        selfs = sum(1 for nb in diagram.neighbors(i) if nb == i)
        init.append((v.kind.value, names, selfs))
    ranks = {s: r for r, s in enumerate(sorted(set(init)))}
    colors = _refine([ranks[s] for s in init], adjacency)

    best = None
    best_orders: List[List[int]] = []

    def search(cols: List[int]):
        nonlocal best, best_orders
        cells = defaultdict(list)
        for i, c in enumerate(cols):
            cells[c].append(i)
        target = None
        for c in sorted(cells):
            if len(cells[c]) > 1:
                target = cells[c]
                break
        if target is None:
            order = sorted(range(nv), key=lambda i: cols[i])
            enc = _encode(diagram, order)
            if best is None or enc < best:
                best, best_orders = enc, [order]
            elif enc == best:
                best_orders.append(order)
            return
        for v in target:
            split = [2 * c + (0 if i == v else 1) if c == cols[v] else 2 * c for i, c in enumerate(cols)]
            search(_refine(split, adjacency))

    search(colors)
    if best is None:  # no vertices
        best, best_orders = _encode(diagram, []), [[]]

    def sign_for(order):
        legs = _leg_order(diagram, order)
        s = 1
        for v in order:
            vert = diagram.vertices[v]
            if vert.kind is Kind.F:
                s *= _cyclic_sign(list(vert.legs), legs[v])
        return s, legs

    sign, legs = sign_for(best_orders[0])
    if _odd_local_symmetry(diagram) or any(sign_for(o)[0] != sign for o in best_orders[1:]):
        sign = 0

    order = best_orders[0]
    new_leg = {}
    verts = []
    for p, v in enumerate(order):
        for s, leg in enumerate(legs[v]):
            new_leg[leg] = 3 * p + s
        verts.append(Vertex(diagram.vertices[v].kind, (3 * p, 3 * p + 1, 3 * p + 2)))
    edges = tuple(sorted(_pair(new_leg[a], new_leg[b]) for a, b in diagram.edges))
    exts = tuple(sorted((name, new_leg[leg]) for name, leg in diagram.externals))
    rep = Diagram(tuple(verts), edges, exts, diagram.deltas)
    return CanonicalDiagram(best, rep), sign


# ---------------------------------------------------------------------------
# cycles

@dataclass(frozen=True)
class CycleReport:
    cycles: Tuple[Tuple[int, ...], ...]
    f_counts: Tuple[int, ...]
    lengths: Tuple[int, ...]
    has_cycle: bool


def cyclomatic_number(diagram: Diagram) -> int:
    parent = list(range(len(diagram.vertices)))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    extra = 0
    for a, b in diagram.edges:
        u, v = find(diagram.owner[a][0]), find(diagram.owner[b][0])
        if u == v:
            extra += 1
        else:
            parent[u] = v
    return extra


def find_cycles(diagram: Diagram, max_length: int = 12) -> CycleReport:
    """All simple cycles up to ``max_length`` vertices.

    Each cycle is listed once, starting at its smallest vertex.  Parallel
    edges count as 2-cycles and self-edges as 1-cycles; ``has_cycle`` is exact
    regardless of the length bound.
    """
    cycles = []
    edge_mult = Counter()
    adj = defaultdict(list)
    for a, b in diagram.edges:
        u, v = diagram.owner[a][0], diagram.owner[b][0]
        if u == v:
            cycles.append((u,))
            continue
        edge_mult[_pair(u, v)] += 1
    for (u, v), c in edge_mult.items():
        adj[u].append(v)
        adj[v].append(u)
        if c >= 2 and max_length >= 2:
            cycles.extend([(u, v)] * (c * (c - 1) // 2))
    for u in adj:
        adj[u].sort()

    def dfs(start, path, visited):
        last = path[-1]
        for nb in adj[last]:
            if nb == start and len(path) >= 3 and path[1] < path[-1]:
                cycles.append(tuple(path))
            elif nb > start and nb not in visited and len(path) < max_length:
                visited.add(nb)
                path.append(nb)
                dfs(start, path, visited)
                path.pop()
                visited.discard(nb)

    for s in sorted(adj):
        dfs(s, [s], {s})
    fc = tuple(diagram.f_count(c) for c in cycles)
    return CycleReport(tuple(cycles), fc, tuple(len(c) for c in cycles), cyclomatic_number(diagram) > 0)


@dataclass(frozen=True)
class Forest:
    def __repr__(self):
        return "Forest"


@dataclass(frozen=True)
class TreeLoop:
    min_loop_length: int
    loop_f_count: int

    @property
    def name(self) -> str:
        return {0: "d loop", 1: "1f loop", 2: "2f loop"}.get(self.loop_f_count, f"{self.loop_f_count}f loop")


def minimal_cycle(diagram: Diagram) -> Optional[Tuple[int, ...]]:
    """A shortest cycle as an ordered vertex tuple, or None for forests.

    Deterministic for a given diagram; ties between shortest cycles go to
    the one found from the lowest-numbered start vertex.
    """
    if cyclomatic_number(diagram) == 0:
        return None
    for a, b in sorted(diagram.edges):
        u, v = diagram.owner[a][0], diagram.owner[b][0]
        if u == v:
            return (u,)
    mult = Counter(_pair(diagram.owner[a][0], diagram.owner[b][0]) for a, b in diagram.edges)
    doubles = sorted(k for k, c in mult.items() if c >= 2)
    if doubles:
        return doubles[0]
    adj = defaultdict(set)
    for u, v in mult:
        adj[u].add(v)
        adj[v].add(u)
    best = None
    for s in sorted(adj):
        # BFS shortest cycle through s
        dist = {s: 0}
        par = {s: None}
        queue = [s]
        found = None
        for x in queue:
            for y in sorted(adj[x]):
                if y not in dist:
                    dist[y] = dist[x] + 1
                    par[y] = x
                    queue.append(y)
                elif par[x] != y and (found is None or dist[x] + dist[y] + 1 < found[0]):
                    found = (dist[x] + dist[y] + 1, x, y)
        if found is None:
            continue
        length, x, y = found

        def chain(z):
            out = []
            while z is not None:
                out.append(z)
                z = par[z]
            return out

        cx, cy = chain(x), chain(y)
        if set(cx) & set(cy) != {s}:
            continue
        cyc = tuple(list(reversed(cx)) + cy[:-1])
        key = (len(cyc), tuple(sorted(cyc)))
        if best is None or key < best[0]:
            best = (key, cyc)
    return None if best is None else best[1]


def classify(diagram: Diagram):
    cyc = minimal_cycle(diagram)
    if cyc is None:
        return Forest()
    return TreeLoop(len(cyc), diagram.f_count(cyc))


def is_forest(diagram: Diagram) -> bool:
    return cyclomatic_number(diagram) == 0


def cycle_vertices(diagram: Diagram) -> set:
    """Vertices lying on at least one cycle."""
    on = set()
    owner = diagram.owner
    mult = Counter()
    for a, b in diagram.edges:
        u, v = owner[a][0], owner[b][0]
        if u == v:
            on.add(u)
        else:
            mult[_pair(u, v)] += 1
    adj = defaultdict(set)
    for (u, v), c in mult.items():
        adj[u].add(v)
        adj[v].add(u)
        if c >= 2:
            on.update((u, v))
    for (u, v), c in mult.items():
        if c >= 2:
            continue
        # is edge u-v a bridge?  search for another path
        seen = {u}
        stack = [u]
        reached = False
        while stack and not reached:
            x = stack.pop()
            for y in adj[x]:
                if (x, y) in ((u, v), (v, u)):
                    continue
                if y == v:
                    reached = True
                    break
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        if reached:
            on.update((u, v))
    return on


def ngon_order(diagram: Diagram, cycle: Sequence[int]) -> List[Tuple[int, int, int, int]]:
    """Walk a chordless cycle: per vertex ``(vertex, in_leg, out_leg, spoke_leg)``.

    ``in_leg`` is glued to the previous cycle vertex, ``out_leg`` to the next.
    """
    n = len(cycle)
    out = []
    for k, v in enumerate(cycle):
        prev, nxt = cycle[k - 1], cycle[(k + 1) % n]
        legs = list(diagram.vertices[v].legs)
        in_leg = next(l for l in legs if l in diagram.partner and diagram.owner[diagram.partner[l]][0] == prev)
        rest = [l for l in legs if l != in_leg]
        out_leg = next(l for l in rest if l in diagram.partner and diagram.owner[diagram.partner[l]][0] == nxt)
        spoke = next(l for l in rest if l != out_leg)
        out.append((v, in_leg, out_leg, spoke))
    return out
