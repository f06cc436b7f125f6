"""Reduce any diagram to a combination of forests.

Strategy per canonical diagram, memoised:

* forests are final, or with ``normal_form`` rewritten into normal form
  (f-f edges contracted, two-vertex ``f d`` trees sorted);
* tadpoles and bubbles are removed directly;
* a pure n-gon (every cycle vertex carries a named leg and nothing else is
  attached) is reduced by a walk of local moves.  With two or more f the
  first f is pushed along the ring until it meets the next one and the pair
  is contracted.  With one or zero f a fixed sequence of moves returns the
  ring to itself up to a sign, so the ring equals half the side terms
  produced on the way;
* any other diagram has a shortest cycle cut out with placeholder legs,
  that ring is reduced on its own, and the forest result is glued back.
  The glued terms have fewer vertices than the original.
"""

from __future__ import annotations

import enum
import sys
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

from .coefficient import ADJOINT_DIM, Coefficient, ONE
from .diagram import (CanonicalDiagram, Diagram, Kind, build_diagram, canonicalize, cycle_vertices, find_cycles,
                      minimal_cycle, ngon_order, splice)
from .expression import Expression
from .forests import ff_edges, unsorted_fd_pairs
from .rules import (RawTerms, RuleApplication, RuleId, atomic_terms, ff_contraction_terms, ff_expansion_terms,
                    jacobi_terms, to_expression)

DEFAULT_BUDGET = 1_000_000


class PreconditionViolated(ValueError):
    pass


class StepBudgetExceeded(RuntimeError):
    pass


class Phase(str, enum.Enum):
    ATOMIC = "Atomic"
    LEMMA1 = "Lemma1"
    LEMMA3 = "Lemma3"
    LEMMA4 = "Lemma4"
    LIFT = "Lift"
    NORMALIZE = "Normalize"


@dataclass(frozen=True, eq=False)
class PhaseRecord:
    phase: Phase
    target: CanonicalDiagram
    replacement: Expression
    applications: Tuple[RuleApplication, ...] = ()


@dataclass
class ReductionTrace:
    phases: List[PhaseRecord] = field(default_factory=list)

    @property
    def applications(self) -> List[RuleApplication]:
        return [a for p in self.phases for a in p.applications]

    def __len__(self) -> int:
        return len(self.phases)

    def replay(self, start: Union[Expression, Diagram]) -> Expression:
        """Substitute recorded replacements until none applies."""
        e = start if isinstance(start, Expression) else Expression.from_diagram(start)
        table = {p.target: p.replacement for p in self.phases}
        for _ in range(len(table) + 2):
            hits = [k for k in e if k in table]
            if not hits:
                return e
            out = Expression({k: c for k, c in e.items() if k not in table})
            for k in hits:
                out = out + table[k].scale(e[k])
            e = out
        raise RuntimeError("replay did not reach a fixed point")


# ---------------------------------------------------------------------------
# measures

Measure = Tuple[int, int, int]


def measure(d: Diagram) -> Measure:
    """(vertices on cycles, f vertices on cycles, all vertices)."""
    on = cycle_vertices(d)
    return len(on), d.f_count(on), len(d.vertices)


def progress_key(d: Diagram) -> Tuple[int, int, int, int, int]:
    """:func:`measure` refined by total f count and unsorted f-d pairs, for forest steps."""
    return measure(d) + (d.f_count(), len(unsorted_fd_pairs(d)))


def progress_violations(trace: ReductionTrace, key=progress_key) -> List[PhaseRecord]:
    """Phases where some replacement term fails to be strictly smaller under ``key``.

    Every term strictly below the target implies the multiset of measures
    drops.  Plain :func:`measure` suffices unless forests were normalized.
    """
    bad = []
    for p in trace.phases:
        top = key(p.target.diagram)
        if any(key(k.diagram) >= top for k in p.replacement):
            bad.append(p)
    return bad


# ---------------------------------------------------------------------------
# ring helpers (vertices identified by the name on their spoke)

def _is_pure_ring(d: Diagram, cycle: Sequence[int]) -> bool:
    if len(cycle) < 3 or len(d.vertices) != len(cycle):
        return False
    return all(spoke in d.leg_name for _, _, _, spoke in ngon_order(d, cycle))


def _vertex_of(d: Diagram, name: str) -> int:
    return d.owner[dict(d.externals)[name]][0]


def _edge_between(d: Diagram, u: int, v: int) -> Tuple[int, int]:
    for leg in d.vertices[u].legs:
        other = d.partner.get(leg)
        if other is not None and d.owner[other][0] == v:
            return leg, other
    raise PreconditionViolated(f"vertices {u} and {v} are not adjacent")


def _loop_leg(d: Diagram, u: int, edge_leg: int) -> int:
    """The leg of ``u`` that is neither the given edge leg nor a named leg."""
    return next(l for l in d.vertices[u].legs if l != edge_leg and l not in d.leg_name)


def _chordless_order(d: Diagram, cycle: Sequence[int]) -> List[Tuple[int, int, int, int]]:
    try:
        order = ngon_order(d, cycle)
    except StopIteration:
        raise PreconditionViolated("vertices do not form a cycle in the given order") from None
    inside = set(cycle)
    for v, i, o, spoke in order:
        other = d.partner.get(spoke)
        if other is not None and d.owner[other][0] in inside:
            raise PreconditionViolated("cycle has a chord")
    return order


# ---------------------------------------------------------------------------

class Reducer:
    """One reduction session: memo table, trace and step counter.

    With ``normal_form`` the forests themselves are also rewritten into the
    normal form of :mod:`sunforest.forests`, which makes the output unique on
    small trees; otherwise forests are left as produced.
    """

    def __init__(self, budget: int = DEFAULT_BUDGET, normal_form: bool = False):
        self.budget = budget
        self.normal_form = normal_form
        self.steps = 0
        self.memo: Dict[CanonicalDiagram, Expression] = {}
        self.trace = ReductionTrace()
        self._active: set = set()

    # -- bookkeeping -----------------------------------------------------------
    def _apply(self, apps: List[RuleApplication], rule: RuleId, site, d: Diagram, raw: RawTerms) -> RawTerms:
        self.steps += 1
        if self.steps > self.budget:
            raise StepBudgetExceeded(f"more than {self.budget} rule applications")
        apps.append(RuleApplication(rule, tuple(site), d, to_expression(raw)))
        return raw

    # -- entry points --------------------------------------------------------
    def reduce(self, e: Union[Expression, Diagram]) -> Expression:
        if isinstance(e, Diagram):
            e = Expression.from_diagram(e)
        out = Expression()
        for key, c in e.items():
            out = out + self.reduce_key(key).scale(c)
        return out

    def reduce_key(self, key: CanonicalDiagram) -> Expression:
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        if key in self._active:
            raise RuntimeError("reduction revisited a diagram it is still reducing")
        self._active.add(key)
        try:
            step = self.step(key.diagram)
            if step is None:
                result = Expression({key: ONE})
            else:
                phase, replacement, apps = step
                if key in replacement:
                    raise RuntimeError(f"{phase.value} step reproduced its own input")
                self.trace.phases.append(PhaseRecord(phase, key, replacement, tuple(apps)))
                result = Expression()
                for k, c in replacement.items():
                    result = result + self.reduce_key(k).scale(c)
        finally:
            self._active.discard(key)
        self.memo[key] = result
        return result

    # -- one strategy step -----------------------------------------------------
    def step(self, d: Diagram):
        cyc = minimal_cycle(d)
        if cyc is None:
            return self.normalize_step(d) if self.normal_form else None
        apps: List[RuleApplication] = []
        if len(cyc) <= 2:
            raw = self._apply(apps, RuleId.ATOMIC_SIMPLIFY, cyc, d, atomic_terms(d))
            return Phase.ATOMIC, to_expression(raw), apps
        if _is_pure_ring(d, cyc):
            return self.ring_walk(d, cyc)
        return Phase.LIFT, self.lift(d, cyc), []

    def normalize_step(self, d: Diagram):
        apps: List[RuleApplication] = []
        ff = ff_edges(d)
        if ff:
            raw = self._apply(apps, RuleId.FF_CONTRACT, ff[0], d, ff_contraction_terms(d, ff[0]))
            return Phase.NORMALIZE, to_expression(raw), apps
        pairs = unsorted_fd_pairs(d)
        if pairs:
            a, b = pairs[0]
            fv = d.owner[a][0] if d.vertices[d.owner[a][0]].kind is Kind.F else d.owner[b][0]
            edge_leg = a if d.owner[a][0] == fv else b
            legs = list(d.vertices[fv].legs)
            i = legs.index(edge_leg)
            p, q = legs[(i + 1) % 3], legs[(i + 2) % 3]
            comp_names = [d.leg_name[l] for v in {d.owner[a][0], d.owner[b][0]}
                          for l in d.vertices[v].legs if l in d.leg_name]
            pivot = q if d.leg_name.get(p) == max(comp_names) else p
            raw = self._apply(apps, RuleId.JACOBI_MOVE, (a, b, pivot), d, jacobi_terms(d, (a, b), pivot))
            return Phase.NORMALIZE, to_expression(raw), apps
        return None

    # -- pure rings ----------------------------------------------------------------
    def ring_walk(self, d: Diagram, cycle: Sequence[int]):
        order = ngon_order(d, cycle)
        names = [d.leg_name[spoke] for _, _, _, spoke in order]
        kinds = [d.vertices[v].kind for v, _, _, _ in order]
        fpos = [i for i, k in enumerate(kinds) if k is Kind.F]
        n = len(names)
        walker = _RingWalk(self, d, names)
        if len(fpos) >= 2:
            gaps = [((fpos[(k + 1) % len(fpos)] - fpos[k]) % n, fpos[k]) for k in range(len(fpos))]
            gap, i = min(gaps)
            for s in range(gap - 1):
                walker.move("jacobi_ext", i + s, i + s + 1)
            walker.move("contract", i + gap - 1, i + gap)
            return Phase.LEMMA1, walker.all_terms(), walker.apps
        if len(fpos) == 1:
            i = fpos[0]
            for _ in range(3):
                walker.move("jacobi_loop", i, i + 1)
                walker.move("expand_swap", i + 1, i + 2)
            return Phase.LEMMA3, walker.solve(d), walker.apps
        for op, a, b in (("expand_main", 0, 1), ("jacobi_loop", 1, 2), ("contract", 0, 1),
                         ("expand_swap", 0, 1), ("expand_swap", 1, 2), ("expand_swap", 0, 1)):
            walker.move(op, a, b)
        return Phase.LEMMA4, walker.solve(d), walker.apps

    # -- general diagrams -------------------------------------------------------------
    def lift(self, d: Diagram, cycle: Sequence[int]) -> Expression:
        """Cut out the ring, reduce it alone, glue the result back."""
        order = _chordless_order(d, cycle)
        n = len(order)
        ring_edges = [(order[k][2], order[(k + 1) % n][1]) for k in range(n)]
        best = None
        for start in range(n):
            for step in (1, -1):
                names = {}
                for k in range(n):
                    names[order[(start + step * k) % n][3]] = f"_{k + 1:02d}"
                core = build_diagram([d.vertices[v] for v, _, _, _ in order], ring_edges,
                                     [(nm, leg) for leg, nm in names.items()])
                key, sign = canonicalize(core)
                if best is None or key < best[0]:
                    best = (key, sign, {nm: leg for leg, nm in names.items()})
        key, sign, spoke_of = best
        if sign == 0:
            return Expression()
        core_result = self.reduce_key(key).scale(sign)
        pairs = []
        for tkey, c in core_result.items():
            t = tkey.diagram
            new_vertices = [(v.kind, [("t", l) for l in v.legs]) for v in t.vertices]
            wires = [(("t", a), ("t", b)) for a, b in t.edges]
            wires += [(("t", leg), ("port", spoke_of[nm])) for nm, leg in t.externals]
            wires += [(("port", spoke_of[a]), ("port", spoke_of[b])) for a, b in t.deltas]
            glued, loops = splice(d, [v for v, _, _, _ in order], new_vertices, wires, ring_edges)
            pairs.append((c * ADJOINT_DIM ** loops, glued))
        return Expression.from_terms(pairs)


class _RingWalk:
    """A main ring term followed through local moves, plus the side terms shed."""

    def __init__(self, reducer: Reducer, d: Diagram, names: List[str]):
        self.reducer = reducer
        self.names = list(names)
        self.n = len(names)
        self.coeff: Coefficient = ONE
        self.diagram = d
        self.side: RawTerms = []
        self.apps: List[RuleApplication] = []

    def move(self, op: str, i: int, j: int) -> None:
        d = self.diagram
        i, j = i % self.n, j % self.n
        u, v = _vertex_of(d, self.names[i]), _vertex_of(d, self.names[j])
        a, b = _edge_between(d, u, v)
        spoke_u = dict(d.externals)[self.names[i]]
        spoke_v = dict(d.externals)[self.names[j]]
        if op == "jacobi_ext":
            rule, site, raw = RuleId.JACOBI_MOVE, (a, b, spoke_u), jacobi_terms(d, (a, b), spoke_u)
        elif op == "jacobi_loop":
            pivot = _loop_leg(d, u, a)
            rule, site, raw = RuleId.JACOBI_MOVE, (a, b, pivot), jacobi_terms(d, (a, b), pivot)
        elif op == "expand_main":
            pair = (_loop_leg(d, u, a), spoke_v)
            rule, site, raw = RuleId.FF_EXPAND, (a, b) + pair, ff_expansion_terms(d, (a, b), pair)
        elif op == "expand_swap":
            pair = (_loop_leg(d, u, a), _loop_leg(d, v, b))
            rule, site, raw = RuleId.FF_EXPAND, (a, b) + pair, ff_expansion_terms(d, (a, b), pair)
        elif op == "contract":
            rule, site, raw = RuleId.FF_CONTRACT, (a, b), ff_contraction_terms(d, (a, b))
        else:
            raise ValueError(op)
        self.reducer._apply(self.apps, rule, site, d, raw)
        main = [k for k, (_, t) in enumerate(raw) if (lambda c: c is not None and len(c) == self.n)(minimal_cycle(t))]
        if len(main) != 1:
            raise RuntimeError(f"{op} did not leave exactly one full ring")
        m = main[0]
        for k, (c, t) in enumerate(raw):
            if k != m:
                self.side.append((self.coeff * c, t))
        self.coeff = self.coeff * raw[m][0]
        self.diagram = raw[m][1]
        self.names[i], self.names[j] = self.names[j], self.names[i]

    def all_terms(self) -> Expression:
        return to_expression(self.side + [(self.coeff, self.diagram)])

    def solve(self, start: Diagram) -> Expression:
        """The walk ended on ``c * start``; return side / (1 - c)."""
        key0, s0 = canonicalize(start)
        key1, s1 = canonicalize(self.diagram)
        if key0 != key1:
            raise RuntimeError("ring walk did not return to its starting ring")
        c = self.coeff * (s1 * s0)
        denom = ONE - c
        if denom.is_zero():
            raise RuntimeError("ring walk returned with coefficient 1")
        return to_expression(self.side).scale(ONE / denom)


# ---------------------------------------------------------------------------
# public operations

def _as_expression(e) -> Expression:
    return e if isinstance(e, Expression) else Expression.from_diagram(e)


def reduce_to_forests(e: Union[Expression, Diagram], budget: int = DEFAULT_BUDGET,
                      normal_form: bool = False) -> Tuple[Expression, ReductionTrace]:
    """Rewrite ``e`` as a combination of forests, with the audit trace.

    ``normal_form`` also normalizes the resulting forests (see :class:`Reducer`).
    """
    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, 20_000))
    try:
        r = Reducer(budget, normal_form)
        out = r.reduce(_as_expression(e))
        return out, r.trace
    finally:
        sys.setrecursionlimit(limit)


def _cycle_check(d: Diagram, cycle: Optional[Sequence[int]]) -> List[int]:
    if cycle is None:
        cycle = minimal_cycle(d)
        if cycle is None:
            raise PreconditionViolated("diagram has no cycle")
    cycle = list(cycle)
    if len(cycle) < 3:
        raise PreconditionViolated("cycle must have at least 3 vertices")
    _chordless_order(d, cycle)
    return cycle


def _reduce_ring(d: Diagram, cycle, budget: int) -> Expression:
    r = Reducer(budget)
    if _is_pure_ring(d, cycle):
        _, replacement, _ = r.ring_walk(d, cycle)
        return r.reduce(replacement)
    return r.reduce(r.lift(d, cycle))


def reduce_1f_loop(d: Diagram, cycle: Optional[Sequence[int]] = None, budget: int = DEFAULT_BUDGET) -> Expression:
    """Reduce a diagram through a cycle holding exactly one f."""
    cycle = _cycle_check(d, cycle)
    if d.f_count(cycle) != 1:
        raise PreconditionViolated(f"cycle holds {d.f_count(cycle)} f vertices, expected 1")
    return _reduce_ring(d, cycle, budget)


def reduce_d_loop(d: Diagram, cycle: Optional[Sequence[int]] = None, budget: int = DEFAULT_BUDGET) -> Expression:
    """Reduce a diagram through a cycle made of d vertices only."""
    cycle = _cycle_check(d, cycle)
    if d.f_count(cycle) != 0:
        raise PreconditionViolated("cycle holds f vertices")
    return _reduce_ring(d, cycle, budget)


def _f_pair_site(d: Diagram):
    """Shortest cycle holding two or more f, with the closest f pair along it."""
    best = None
    for cyc, fc in zip(find_cycles(d, max_length=len(d.vertices)).cycles,
                       find_cycles(d, max_length=len(d.vertices)).f_counts):
        if fc < 2 or len(cyc) < 2:
            continue
        n = len(cyc)
        fpos = [k for k, v in enumerate(cyc) if d.vertices[v].kind is Kind.F]
        for k in range(len(fpos)):
            gap = (fpos[(k + 1) % len(fpos)] - fpos[k]) % n or n
            cand = (n, gap, cyc, fpos[k])
            if best is None or cand[:2] < best[:2]:
                best = cand
    return best


def eliminate_f_pairs(e: Union[Expression, Diagram], budget: int = DEFAULT_BUDGET) -> Expression:
    """Rewrite until no cycle of any term holds two f vertices."""
    e = _as_expression(e)
    work: RawTerms = [(c, k.diagram) for k, c in e.items()]
    done: RawTerms = []
    steps = 0
    while work:
        c, d = work.pop()
        site = _f_pair_site(d)
        if site is None:
            done.append((c, d))
            continue
        steps += 1
        if steps > budget:
            raise StepBudgetExceeded(f"more than {budget} rule applications")
        n, gap, cyc, k = site
        u, v = cyc[k], cyc[(k + 1) % n]
        a, b = _edge_between(d, u, v)
        if gap == 1:
            raw = ff_contraction_terms(d, (a, b))
        else:
            pivot = next(l for l in d.vertices[u].legs if l != a and
                         (d.partner.get(l) is None or d.owner[d.partner[l]][0] != cyc[k - 1]))
            raw = jacobi_terms(d, (a, b), pivot)
        work.extend((c * c2, t) for c2, t in raw)
    return to_expression(done)
