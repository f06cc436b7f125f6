"""Random loop diagrams for the property checks."""

from __future__ import annotations

import random
from typing import List, Tuple

from sunforest.diagram import Diagram, canonicalize, cycle_vertices
from sunforest.notation import build_term


def random_loop_diagram(rng: random.Random, min_vertices: int = 3, max_vertices: int = 8,
                        max_f: int = 4, max_externals: int = 6) -> Tuple[Diagram, List[tuple]]:
    """A diagram with at least one cycle, drawn by random stub pairing.

    Diagrams that vanish for trivial reasons (one external leg, or an odd
    symmetry) are redrawn so that every sample exercises the rules.
    """
    while True:
        v = rng.randint(min_vertices, max_vertices)
        ext_choices = [e for e in range(0, min(max_externals, v) + 1) if (3 * v - e) % 2 == 0 and e != 1]
        ext = rng.choice(ext_choices)
        stubs = [(i, s) for i in range(v) for s in range(3)]
        rng.shuffle(stubs)
        outer, inner = stubs[:ext], stubs[ext:]
        if any(a[0] == b[0] for a, b in zip(inner[::2], inner[1::2])):
            continue  # no tadpoles; they vanish trivially
        names = {}
        for j, st in enumerate(outer):
            names[st] = f"i{j + 1}"
        for j, (a, b) in enumerate(zip(inner[::2], inner[1::2])):
            names[a] = names[b] = f"k{j + 1}"
        n_f = rng.randint(0, min(max_f, v))
        f_set = set(rng.sample(range(v), n_f))
        factors = [("f" if i in f_set else "d", [names[(i, s)] for s in range(3)]) for i in range(v)]
        d, loops = build_term(factors)
        if loops or not cycle_vertices(d) or canonicalize(d)[1] == 0:
            continue
        return d, factors


def corpus(size: int = 100, seed: int = 2024, **kw) -> List[Tuple[Diagram, List[tuple]]]:
    rng = random.Random(seed)
    return [random_loop_diagram(rng, **kw) for _ in range(size)]
