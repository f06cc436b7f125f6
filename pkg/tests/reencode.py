"""Random isomorphic re-encodings of a diagram, with the sign they introduce."""

from __future__ import annotations

import random
from typing import Tuple

from sunforest.diagram import Diagram, Kind, build_diagram


def reencode(d: Diagram, rng: random.Random) -> Tuple[Diagram, int]:
    """Shuffle vertex order, leg ids and each vertex's leg order.

    Returns the new diagram and the sign s with ``d == s * new``: every odd
    permutation of an f vertex's legs flips it.
    """
    legs = [l for v in d.vertices for l in v.legs]
    fresh = rng.sample(range(10 * len(legs) + 10), len(legs))
    relabel = dict(zip(legs, fresh))
    sign = 1
    verts = []
    for v in d.vertices:
        perm = list(range(3))
        rng.shuffle(perm)
        new_legs = [relabel[v.legs[p]] for p in perm]
        inversions = sum(1 for a in range(3) for b in range(a + 1, 3) if perm[a] > perm[b])
        if v.kind is Kind.F and inversions % 2:
            sign = -sign
        verts.append((v.kind, new_legs))
    rng.shuffle(verts)
    edges = [(relabel[a], relabel[b]) for a, b in d.edges]
    externals = [(name, relabel[leg]) for name, leg in d.externals]
    return build_diagram(verts, edges, externals, d.deltas), sign
